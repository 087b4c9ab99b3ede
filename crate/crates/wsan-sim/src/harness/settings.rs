//! The plain-text key-value configuration format and its merge with
//! command-line flags.
//!
//! Every CLI flag has a same-named key (`algorithm`, `alpha`, `ddas`,
//! `seeds`, `base-seed`, `grid`, `actors`, `quota`, `out`, `jobs`,
//! `trace`, `ceiling`); flags override file values. Lines are
//! `key = value`, blank lines and `#` comments are ignored.

use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use super::{seed_schedule, Algorithm, ExperimentSpec, ParamKind, DEFAULT_BASE_SEED, DEFAULT_SEED_COUNT};
use crate::world::WorldConfig;

/// One layer of options, from either a config file or the command line.
/// `None` means "not given here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub algorithm: Option<Algorithm>,
    pub alpha: Option<Vec<f64>>,
    pub ddas: Option<Vec<f64>>,
    pub seeds: Option<usize>,
    pub base_seed: Option<u64>,
    pub grid: Option<(u16, u16)>,
    pub actors: Option<u16>,
    pub quota: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub trace: Option<bool>,
    pub ceiling: Option<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SettingsError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    MissingSeparator { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResolveError {
    #[error("no algorithm given; pass --algorithm or set it in the config file")]
    MissingAlgorithm,
    #[error("{algorithm} does not take --alpha")]
    AlphaNotApplicable { algorithm: Algorithm },
    #[error("{algorithm} does not take --ddas")]
    GateNotApplicable { algorithm: Algorithm },
    #[error("{algorithm} requires exactly one {flag} value for a single run, got {got}")]
    OneParamRequired {
        algorithm: Algorithm,
        flag: &'static str,
        got: usize,
    },
}

impl Settings {
    /// Parses the key-value file format.
    pub fn parse(text: &str) -> Result<Self, SettingsError> {
        let mut s = Settings::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(SettingsError::MissingSeparator {
                    line,
                    text: content.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |reason: String| SettingsError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
                reason,
            };
            match key {
                "algorithm" => {
                    s.algorithm = Some(value.parse().map_err(|e| bad(format!("{e}")))?);
                }
                "alpha" => s.alpha = Some(parse_list(value).map_err(bad)?),
                "ddas" => s.ddas = Some(parse_list(value).map_err(bad)?),
                "seeds" => s.seeds = Some(parse_scalar(value).map_err(bad)?),
                "base-seed" => s.base_seed = Some(parse_scalar(value).map_err(bad)?),
                "grid" => s.grid = Some(parse_grid(value).map_err(bad)?),
                "actors" => s.actors = Some(parse_scalar(value).map_err(bad)?),
                "quota" => s.quota = Some(parse_scalar(value).map_err(bad)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "jobs" => s.jobs = Some(parse_scalar(value).map_err(bad)?),
                "trace" => s.trace = Some(parse_bool(value).map_err(bad)?),
                "ceiling" => s.ceiling = Some(parse_scalar(value).map_err(bad)?),
                _ => {
                    return Err(SettingsError::UnknownKey {
                        line,
                        key: key.to_string(),
                    });
                }
            }
        }
        Ok(s)
    }

    /// Field-wise overlay: values in `self` win over `fallback`.
    pub fn or(self, fallback: Settings) -> Settings {
        Settings {
            algorithm: self.algorithm.or(fallback.algorithm),
            alpha: self.alpha.or(fallback.alpha),
            ddas: self.ddas.or(fallback.ddas),
            seeds: self.seeds.or(fallback.seeds),
            base_seed: self.base_seed.or(fallback.base_seed),
            grid: self.grid.or(fallback.grid),
            actors: self.actors.or(fallback.actors),
            quota: self.quota.or(fallback.quota),
            out: self.out.or(fallback.out),
            jobs: self.jobs.or(fallback.jobs),
            trace: self.trace.or(fallback.trace),
            ceiling: self.ceiling.or(fallback.ceiling),
        }
    }

    /// The world these options describe: the canonical defaults with any
    /// overridden dimensions, actor count, quota, ceiling, and seed base.
    pub fn world(&self) -> WorldConfig {
        let mut cfg = WorldConfig::default();
        if let Some((w, h)) = self.grid {
            cfg.width = w;
            cfg.height = h;
        }
        if let Some(actors) = self.actors {
            cfg.actor_count = actors;
        }
        if let Some(quota) = self.quota {
            cfg.elimination_quota = quota;
        }
        if let Some(ceiling) = self.ceiling {
            cfg.step_ceiling = ceiling;
        }
        cfg
    }

    fn algorithm(&self) -> Result<Algorithm, ResolveError> {
        self.algorithm.ok_or(ResolveError::MissingAlgorithm)
    }

    /// The parameter list for the chosen algorithm: the matching flag's
    /// values if given, the default sweep grid otherwise. Rejects the flag
    /// that does not belong to the algorithm.
    fn params(&self, algorithm: Algorithm) -> Result<Vec<f64>, ResolveError> {
        match algorithm.param_kind() {
            ParamKind::None => {
                if self.alpha.is_some() {
                    return Err(ResolveError::AlphaNotApplicable { algorithm });
                }
                if self.ddas.is_some() {
                    return Err(ResolveError::GateNotApplicable { algorithm });
                }
                Ok(Vec::new())
            }
            ParamKind::Alpha => {
                if self.ddas.is_some() {
                    return Err(ResolveError::GateNotApplicable { algorithm });
                }
                Ok(self
                    .alpha
                    .clone()
                    .unwrap_or_else(|| algorithm.default_params()))
            }
            ParamKind::Gate => {
                if self.alpha.is_some() {
                    return Err(ResolveError::AlphaNotApplicable { algorithm });
                }
                Ok(self
                    .ddas
                    .clone()
                    .unwrap_or_else(|| algorithm.default_params()))
            }
        }
    }

    /// Builds the sweep these options describe.
    pub fn sweep_spec(&self) -> Result<ExperimentSpec, ResolveError> {
        let algorithm = self.algorithm()?;
        let base = self.base_seed.unwrap_or(DEFAULT_BASE_SEED);
        let count = self.seeds.unwrap_or(DEFAULT_SEED_COUNT);
        Ok(ExperimentSpec {
            algorithm,
            params: self.params(algorithm)?,
            seeds: seed_schedule(base, count),
            world: self.world(),
        })
    }

    /// Resolves a single run: one algorithm, at most one parameter, one
    /// seed (the base seed).
    pub fn single_run(&self) -> Result<SingleRun, ResolveError> {
        let algorithm = self.algorithm()?;
        let params = self.params(algorithm)?;
        let param = match algorithm.param_kind() {
            ParamKind::None => None,
            kind => {
                if params.len() != 1 {
                    let flag = if kind == ParamKind::Alpha { "--alpha" } else { "--ddas" };
                    return Err(ResolveError::OneParamRequired {
                        algorithm,
                        flag,
                        got: params.len(),
                    });
                }
                Some(params[0])
            }
        };
        Ok(SingleRun {
            algorithm,
            param,
            seed: self.base_seed.unwrap_or(DEFAULT_BASE_SEED),
            world: self.world(),
            trace: self.trace.unwrap_or(false),
        })
    }
}

/// A resolved `run` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRun {
    pub algorithm: Algorithm,
    pub param: Option<f64>,
    pub seed: u64,
    pub world: WorldConfig,
    pub trace: bool,
}

fn parse_scalar<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| e.to_string())
}

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

fn parse_grid(value: &str) -> Result<(u16, u16), String> {
    let (w, h) = value
        .split_once(['x', 'X'])
        .ok_or_else(|| "expected WIDTHxHEIGHT".to_string())?;
    let w = w.trim().parse().map_err(|e| format!("width: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("height: {e}"))?;
    Ok((w, h))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err("expected true or false".to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let text = "\
# sweep settings
algorithm = STS-1
alpha = 0, 0.5, 0.9
seeds = 5
base-seed = 100
grid = 50x50
actors = 4
quota = 300
out = results
jobs = 2
trace = false
ceiling = 20000
";
        let s = Settings::parse(text).unwrap();
        assert_eq!(s.algorithm, Some(Algorithm::Sts1));
        assert_eq!(s.alpha, Some(vec![0.0, 0.5, 0.9]));
        assert_eq!(s.seeds, Some(5));
        assert_eq!(s.base_seed, Some(100));
        assert_eq!(s.grid, Some((50, 50)));
        assert_eq!(s.actors, Some(4));
        assert_eq!(s.quota, Some(300));
        assert_eq!(s.out, Some(PathBuf::from("results")));
        assert_eq!(s.jobs, Some(2));
        assert_eq!(s.trace, Some(false));
        assert_eq!(s.ceiling, Some(20000));
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let s = Settings::parse("\n# only a comment\n  \nquota = 7 # trailing\n").unwrap();
        assert_eq!(s.quota, Some(7));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(
            Settings::parse("algorithm STS-1"),
            Err(SettingsError::MissingSeparator {
                line: 1,
                text: "algorithm STS-1".to_string()
            })
        );
        assert!(matches!(
            Settings::parse("\nwat = 5"),
            Err(SettingsError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(
            Settings::parse("grid = 50by50"),
            Err(SettingsError::BadValue { line: 1, .. })
        ));
        assert!(matches!(
            Settings::parse("algorithm = TS-9"),
            Err(SettingsError::BadValue { .. })
        ));
    }

    #[test]
    fn flags_override_file_values() {
        let file = Settings {
            algorithm: Some(Algorithm::Ts1),
            quota: Some(100),
            jobs: Some(4),
            ..Settings::default()
        };
        let flags = Settings {
            quota: Some(300),
            ..Settings::default()
        };
        let merged = flags.or(file);
        assert_eq!(merged.algorithm, Some(Algorithm::Ts1));
        assert_eq!(merged.quota, Some(300));
        assert_eq!(merged.jobs, Some(4));
    }

    #[test]
    fn world_applies_overrides_over_canonical_defaults() {
        let s = Settings {
            grid: Some((50, 60)),
            actors: Some(4),
            quota: Some(300),
            ..Settings::default()
        };
        let cfg = s.world();
        assert_eq!((cfg.width, cfg.height), (50, 60));
        assert_eq!(cfg.actor_count, 4);
        assert_eq!(cfg.elimination_quota, 300);
        assert_eq!(cfg.actor_range, 37);
        assert_eq!(cfg.spawn_rate, 3);
    }

    #[test]
    fn sweep_spec_uses_default_grids_and_seed_schedule() {
        let s = Settings {
            algorithm: Some(Algorithm::Das2),
            ..Settings::default()
        };
        let spec = s.sweep_spec().unwrap();
        assert_eq!(spec.params.len(), 9);
        assert_eq!(spec.seeds.len(), DEFAULT_SEED_COUNT);
        assert_eq!(spec.seeds[0], DEFAULT_BASE_SEED);
    }

    #[test]
    fn sweep_spec_rejects_foreign_params() {
        let s = Settings {
            algorithm: Some(Algorithm::Ts1),
            alpha: Some(vec![0.5]),
            ..Settings::default()
        };
        assert_eq!(
            s.sweep_spec(),
            Err(ResolveError::AlphaNotApplicable {
                algorithm: Algorithm::Ts1
            })
        );
        let s = Settings {
            algorithm: Some(Algorithm::Sts2),
            ddas: Some(vec![5.0]),
            ..Settings::default()
        };
        assert!(s.sweep_spec().is_err());
    }

    #[test]
    fn single_run_needs_exactly_one_param() {
        let s = Settings {
            algorithm: Some(Algorithm::Sts1),
            alpha: Some(vec![0.3, 0.4]),
            ..Settings::default()
        };
        assert_eq!(
            s.single_run(),
            Err(ResolveError::OneParamRequired {
                algorithm: Algorithm::Sts1,
                flag: "--alpha",
                got: 2
            })
        );
        let s = Settings {
            algorithm: Some(Algorithm::Sts1),
            alpha: Some(vec![0.3]),
            base_seed: Some(9),
            ..Settings::default()
        };
        let run = s.single_run().unwrap();
        assert_eq!(run.param, Some(0.3));
        assert_eq!(run.seed, 9);
        let s = Settings {
            algorithm: Some(Algorithm::Ts2),
            ..Settings::default()
        };
        assert_eq!(s.single_run().unwrap().param, None);
    }

    #[test]
    fn missing_algorithm_is_an_error() {
        assert_eq!(
            Settings::default().sweep_spec(),
            Err(ResolveError::MissingAlgorithm)
        );
    }
}
