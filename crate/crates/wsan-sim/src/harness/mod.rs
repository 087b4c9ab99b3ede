//! Experiment orchestration: the six compared algorithms, parameter
//! sweeps, multi-seed statistics, and the output files behind the charts.
//!
//! A sweep is a grid of (parameter, seed) cells. Cells are independent
//! simulation runs, so with the `parallel` feature they execute on a rayon
//! pool; aggregation afterwards is a deterministic reduction in parameter
//! order, making sweep output identical with and without parallelism.

pub mod output;
pub mod settings;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, EngineError, RunMetrics};
use crate::protocol::{Selection, SuppressionMethod, SuppressionPolicy};
use crate::world::WorldConfig;

/// First seed of the default 20-seed schedule.
pub const DEFAULT_BASE_SEED: u64 = 1;
/// Runs per (algorithm, parameter) setting unless overridden.
pub const DEFAULT_SEED_COUNT: usize = 20;

/// The six compared algorithms: a suppression method (temporal,
/// spatiotemporal, decision-aware) paired with an actor selection rule
/// (`-1` reports to the nearest actor, `-2` to the least loaded one).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Ts1,
    Sts1,
    Das1,
    Ts2,
    Sts2,
    Das2,
}

/// What the algorithm's sweep parameter means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// No parameter (temporal suppression).
    None,
    /// The spatiotemporal radius factor alpha.
    Alpha,
    /// The decision-aware distance gate, in whole segments.
    Gate,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Ts1,
        Algorithm::Sts1,
        Algorithm::Das1,
        Algorithm::Ts2,
        Algorithm::Sts2,
        Algorithm::Das2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ts1 => "TS-1",
            Algorithm::Sts1 => "STS-1",
            Algorithm::Das1 => "DAS-1",
            Algorithm::Ts2 => "TS-2",
            Algorithm::Sts2 => "STS-2",
            Algorithm::Das2 => "DAS-2",
        }
    }

    pub fn selection(self) -> Selection {
        match self {
            Algorithm::Ts1 | Algorithm::Sts1 | Algorithm::Das1 => Selection::Nearest,
            Algorithm::Ts2 | Algorithm::Sts2 | Algorithm::Das2 => Selection::MinLoad,
        }
    }

    pub fn param_kind(self) -> ParamKind {
        match self {
            Algorithm::Ts1 | Algorithm::Ts2 => ParamKind::None,
            Algorithm::Sts1 | Algorithm::Sts2 => ParamKind::Alpha,
            Algorithm::Das1 | Algorithm::Das2 => ParamKind::Gate,
        }
    }

    /// The default parameter grid: alpha from 0 to 1.4 in steps of 0.1,
    /// the gate from 0 to 40 segments in steps of 5, nothing for TS.
    pub fn default_params(self) -> Vec<f64> {
        match self.param_kind() {
            ParamKind::None => Vec::new(),
            ParamKind::Alpha => (0..=14).map(|i| f64::from(i) / 10.0).collect(),
            ParamKind::Gate => (0..=8).map(|i| f64::from(i * 5)).collect(),
        }
    }

    /// Builds the suppression policy for one sweep cell.
    pub fn policy(self, param: Option<f64>) -> Result<SuppressionPolicy, SweepError> {
        let method = match (self.param_kind(), param) {
            (ParamKind::None, None) => SuppressionMethod::Temporal,
            (ParamKind::None, Some(value)) => {
                return Err(SweepError::UnexpectedParam { algorithm: self, value });
            }
            (ParamKind::Alpha, Some(alpha)) if alpha.is_finite() && alpha >= 0.0 => {
                SuppressionMethod::Spatiotemporal { alpha }
            }
            (ParamKind::Alpha, Some(value)) => {
                return Err(SweepError::InvalidParam {
                    algorithm: self,
                    value,
                    reason: "alpha must be finite and non-negative",
                });
            }
            (ParamKind::Gate, Some(gate))
                if gate.fract() == 0.0 && (0.0..=f64::from(u16::MAX)).contains(&gate) =>
            {
                SuppressionMethod::DecisionAware {
                    distance_gate: gate as u16,
                }
            }
            (ParamKind::Gate, Some(value)) => {
                return Err(SweepError::InvalidParam {
                    algorithm: self,
                    value,
                    reason: "distance gate must be a non-negative whole number of segments",
                });
            }
            (_, None) => return Err(SweepError::MissingParam { algorithm: self }),
        };
        Ok(SuppressionPolicy {
            method,
            selection: self.selection(),
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown algorithm {0:?}; expected one of TS-1, STS-1, DAS-1, TS-2, STS-2, DAS-2")]
pub struct UnknownAlgorithm(pub String);

/// One sweep: an algorithm, its parameter grid, the seed list, and the
/// world the cells run in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    /// Sweep values; must be empty exactly for the TS algorithms.
    pub params: Vec<f64>,
    pub seeds: Vec<u64>,
    pub world: WorldConfig,
}

impl ExperimentSpec {
    /// A spec with the algorithm's default parameter grid and the default
    /// 20-seed schedule.
    pub fn new(algorithm: Algorithm, world: WorldConfig) -> Self {
        Self {
            algorithm,
            params: algorithm.default_params(),
            seeds: seed_schedule(DEFAULT_BASE_SEED, DEFAULT_SEED_COUNT),
            world,
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        if self.seeds.is_empty() {
            return Err(SweepError::NoSeeds);
        }
        match self.algorithm.param_kind() {
            ParamKind::None => {
                if let Some(&value) = self.params.first() {
                    return Err(SweepError::UnexpectedParam {
                        algorithm: self.algorithm,
                        value,
                    });
                }
            }
            ParamKind::Alpha | ParamKind::Gate => {
                if self.params.is_empty() {
                    return Err(SweepError::MissingParam {
                        algorithm: self.algorithm,
                    });
                }
            }
        }
        Ok(())
    }

    /// Parameter cells in ascending order; a single `None` cell for TS.
    fn param_cells(&self) -> Vec<Option<f64>> {
        if self.algorithm.param_kind() == ParamKind::None {
            return vec![None];
        }
        let mut params = self.params.clone();
        params.sort_by(|a, b| a.partial_cmp(b).expect("params validated finite"));
        params.dedup();
        params.into_iter().map(Some).collect()
    }
}

/// Arithmetic seed schedule: `base, base+1, ..`.
pub fn seed_schedule(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|k| base.wrapping_add(k)).collect()
}

/// Metrics of one (parameter, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub param: Option<f64>,
    pub seed: u64,
    pub metrics: RunMetrics,
}

/// Minimum, mean, and maximum of one metric across seeds.
///
/// Samples are reduced in sorted order, so the statistics do not depend on
/// the order of the seed list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl MetricStats {
    pub fn from_samples(samples: &[f64]) -> Self {
        assert!(!samples.is_empty(), "stats need at least one sample");
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("metric samples are finite"));
        Self {
            min: sorted[0],
            mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
            max: *sorted.last().unwrap(),
        }
    }
}

/// Aggregated statistics for one (algorithm, parameter) setting.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub param: Option<f64>,
    /// Mean time to capture per run, in steps.
    pub time_to_capture: MetricStats,
    /// Total hop count per run.
    pub hops: MetricStats,
    /// Total transfers per run.
    pub transfers: MetricStats,
    pub seed_count: usize,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("{algorithm} takes no parameter, got {value}")]
    UnexpectedParam { algorithm: Algorithm, value: f64 },
    #[error("{algorithm} requires at least one parameter value")]
    MissingParam { algorithm: Algorithm },
    #[error("invalid parameter {value} for {algorithm}: {reason}")]
    InvalidParam {
        algorithm: Algorithm,
        value: f64,
        reason: &'static str,
    },
    #[error("seed list is empty")]
    NoSeeds,
    #[error("{algorithm}{} seed {seed}: {source}", param_suffix(.param))]
    Run {
        algorithm: Algorithm,
        param: Option<f64>,
        seed: u64,
        #[source]
        source: EngineError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no rows to write")]
    NoRows,
}

fn param_suffix(param: &Option<f64>) -> String {
    match param {
        Some(p) => format!(" param {p}"),
        None => String::new(),
    }
}

/// Runs one sweep cell.
pub fn run_cell(
    algorithm: Algorithm,
    param: Option<f64>,
    seed: u64,
    world: &WorldConfig,
) -> Result<CellResult, SweepError> {
    let policy = algorithm.policy(param)?;
    let metrics = engine::run(world, policy, seed).map_err(|source| SweepError::Run {
        algorithm,
        param,
        seed,
        source,
    })?;
    Ok(CellResult {
        param,
        seed,
        metrics,
    })
}

/// Runs every (parameter, seed) cell of the sweep and returns the raw
/// per-cell results, parameter-major in ascending parameter order, seeds in
/// list order within each parameter.
pub fn run_cells(spec: &ExperimentSpec) -> Result<Vec<CellResult>, SweepError> {
    spec.validate()?;
    let cells: Vec<(Option<f64>, u64)> = spec
        .param_cells()
        .into_iter()
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p, s)))
        .collect();
    map_cells(spec, &cells)
}

#[cfg(feature = "parallel")]
fn map_cells(
    spec: &ExperimentSpec,
    cells: &[(Option<f64>, u64)],
) -> Result<Vec<CellResult>, SweepError> {
    cells
        .par_iter()
        .map(|&(param, seed)| run_cell(spec.algorithm, param, seed, &spec.world))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn map_cells(
    spec: &ExperimentSpec,
    cells: &[(Option<f64>, u64)],
) -> Result<Vec<CellResult>, SweepError> {
    cells
        .iter()
        .map(|&(param, seed)| run_cell(spec.algorithm, param, seed, &spec.world))
        .collect()
}

/// Like [`run_cells`] but always single-threaded, independent of the
/// `parallel` feature. Exists so the benches can compare both executions
/// and tests can pin their equivalence.
pub fn run_cells_sequential(spec: &ExperimentSpec) -> Result<Vec<CellResult>, SweepError> {
    spec.validate()?;
    spec.param_cells()
        .into_iter()
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p, s)))
        .map(|(param, seed)| run_cell(spec.algorithm, param, seed, &spec.world))
        .collect()
}

/// Reduces per-cell results to one row per parameter value.
pub fn aggregate(spec: &ExperimentSpec, cells: &[CellResult]) -> Vec<AggregateRow> {
    let per_param = spec.seeds.len();
    cells
        .chunks(per_param)
        .map(|chunk| {
            let ttc: Vec<f64> = chunk.iter().map(|c| c.metrics.mean_capture_time()).collect();
            let hops: Vec<f64> = chunk.iter().map(|c| c.metrics.hops as f64).collect();
            let transfers: Vec<f64> = chunk.iter().map(|c| c.metrics.transfers as f64).collect();
            AggregateRow {
                algorithm: spec.algorithm,
                param: chunk[0].param,
                time_to_capture: MetricStats::from_samples(&ttc),
                hops: MetricStats::from_samples(&hops),
                transfers: MetricStats::from_samples(&transfers),
                seed_count: chunk.len(),
            }
        })
        .collect()
}

/// Runs the full sweep and aggregates: one row per parameter value,
/// ascending. Uses the rayon pool when the `parallel` feature is on.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<Vec<AggregateRow>, SweepError> {
    let cells = run_cells(spec)?;
    Ok(aggregate(spec, &cells))
}
