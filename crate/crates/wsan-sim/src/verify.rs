//! The acceptance suite: independent oracles and end-to-end checks run by
//! both `wsan-sim verify` and the `acceptance` integration tests.
//!
//! Oracles here deliberately re-derive expected behaviour through separate
//! code paths (exhaustive enumeration, sorted argmin, double simulation)
//! rather than calling into the implementation they check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{RunMetrics, Simulation};
use crate::harness::{
    self, output, run_sweep, seed_schedule, AggregateRow, Algorithm, ExperimentSpec,
};
use crate::navigation::{actor_tick, step_move, ActorState, TargetMap};
use crate::protocol::{das_suppress, ActorStatusView, Report, ReportKind};
use crate::world::{default_positions, euclid, ActorId, Grid, SegmentCoord, WorldConfig};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    fn pass(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: true,
            detail,
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        Self {
            name,
            passed: false,
            detail,
        }
    }

    /// One printable pass/fail line.
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        format!("{status} {}: {}", self.name, self.detail)
    }
}

/// Runs every criterion in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        degenerate_equivalence(),
        determinism(),
        geometry_oracle(),
        navigation_oracle(),
        das_consistency_oracle(),
        conservation_sanity(),
        qualitative_ordering(),
    ]
}

fn desk_world(quota: u64) -> WorldConfig {
    WorldConfig {
        width: 50,
        height: 50,
        actor_count: 4,
        elimination_quota: quota,
        ..WorldConfig::default()
    }
}

/// STS-1 with alpha 0 and DAS-1 with the gate beyond the actor range must
/// reproduce TS-1 bit for bit, seed by seed.
pub fn degenerate_equivalence() -> CriterionResult {
    const NAME: &str = "degenerate-parameter-equivalence";
    let world = desk_world(300);
    let seeds = [1u64, 2, 3, 4, 5];
    for &seed in &seeds {
        let ts = match cell_metrics(Algorithm::Ts1, None, seed, &world) {
            Ok(m) => m,
            Err(e) => return CriterionResult::fail(NAME, e),
        };
        for (algorithm, param) in [(Algorithm::Sts1, 0.0), (Algorithm::Das1, 38.0)] {
            match cell_metrics(algorithm, Some(param), seed, &world) {
                Ok(m) if m == ts => {}
                Ok(_) => {
                    return CriterionResult::fail(
                        NAME,
                        format!("{algorithm} param {param} seed {seed} diverged from TS-1"),
                    );
                }
                Err(e) => return CriterionResult::fail(NAME, e),
            }
        }
    }
    CriterionResult::pass(
        NAME,
        format!(
            "STS-1(alpha=0) and DAS-1(d=38) match TS-1 bit-for-bit on {} seeds (50x50, quota 300)",
            seeds.len()
        ),
    )
}

fn cell_metrics(
    algorithm: Algorithm,
    param: Option<f64>,
    seed: u64,
    world: &WorldConfig,
) -> Result<RunMetrics, String> {
    harness::run_cell(algorithm, param, seed, world)
        .map(|c| c.metrics)
        .map_err(|e| e.to_string())
}

/// Re-running any (algorithm, parameter, seed) cell must reproduce its CSV
/// byte for byte.
pub fn determinism() -> CriterionResult {
    const NAME: &str = "determinism";
    let world = desk_world(150);
    let cases: [(Algorithm, Vec<f64>); 6] = [
        (Algorithm::Ts1, vec![]),
        (Algorithm::Sts1, vec![0.9]),
        (Algorithm::Das1, vec![15.0]),
        (Algorithm::Ts2, vec![]),
        (Algorithm::Sts2, vec![0.7]),
        (Algorithm::Das2, vec![0.0]),
    ];
    for (algorithm, params) in cases {
        let spec = ExperimentSpec {
            algorithm,
            params,
            seeds: vec![7],
            world: world.clone(),
        };
        match (sweep_csv_bytes(&spec), sweep_csv_bytes(&spec)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => {
                return CriterionResult::fail(
                    NAME,
                    format!("{algorithm}: two identical runs produced different CSV bytes"),
                );
            }
            (Err(e), _) | (_, Err(e)) => return CriterionResult::fail(NAME, e),
        }
    }
    CriterionResult::pass(
        NAME,
        "all six algorithms re-ran to byte-identical CSV at the desk scale".to_string(),
    )
}

fn sweep_csv_bytes(spec: &ExperimentSpec) -> Result<Vec<u8>, String> {
    let rows = run_sweep(spec).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    output::write_csv(&mut bytes, &rows).map_err(|e| e.to_string())?;
    Ok(bytes)
}

/// Brute-force geometry facts: the 4293-segment range capacity and full
/// default-layout coverage of the canonical grid.
pub fn geometry_oracle() -> CriterionResult {
    const NAME: &str = "geometry-oracle";
    let range = 37i64;
    let mut in_range = 0u64;
    for dx in -range..=range {
        for dy in -range..=range {
            if dx * dx + dy * dy <= range * range {
                in_range += 1;
            }
        }
    }
    if in_range != 4293 {
        return CriterionResult::fail(
            NAME,
            format!("offsets within radius 37: got {in_range}, expected 4293"),
        );
    }

    let cfg = WorldConfig::default();
    let layout = match default_positions(&cfg) {
        Ok(l) => l,
        Err(e) => return CriterionResult::fail(NAME, e.to_string()),
    };
    let mut worst: f64 = 0.0;
    for x in 0..cfg.width {
        for y in 0..cfg.height {
            let c = SegmentCoord::new(x, y);
            let nearest = layout
                .iter()
                .map(|&p| euclid(p, c))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    if worst > f64::from(cfg.actor_range) {
        return CriterionResult::fail(
            NAME,
            format!("coverage hole: worst min-distance {worst:.4} > {}", cfg.actor_range),
        );
    }
    CriterionResult::pass(
        NAME,
        format!(
            "range holds 4293 segments; worst min-distance over 40000 segments is {worst:.4} <= 37"
        ),
    )
}

/// `step_move` must agree with an exhaustive sorted argmin, tie-breaks
/// included, and strictly approach any distinct destination.
pub fn navigation_oracle() -> CriterionResult {
    const NAME: &str = "navigation-oracle";
    let grid = Grid::new(200, 200);
    let mut rng = ChaCha8Rng::seed_from_u64(1729);
    for case in 0..1000 {
        let pos = random_coord(&mut rng);
        let dest = random_coord(&mut rng);
        let got = step_move(grid, pos, dest, 2);
        let want = argmin_move(pos, dest, 2);
        if got != want {
            return CriterionResult::fail(
                NAME,
                format!("case {case}: step_move({pos}, {dest}) = {got}, oracle says {want}"),
            );
        }
        if pos != dest {
            if euclid(got, dest) >= euclid(pos, dest) {
                return CriterionResult::fail(
                    NAME,
                    format!("case {case}: no strict progress from {pos} toward {dest}"),
                );
            }
        } else if got != pos {
            return CriterionResult::fail(NAME, format!("case {case}: moved away from {pos}"));
        }
    }
    CriterionResult::pass(
        NAME,
        "step_move matches the exhaustive argmin and strictly progresses on 1000 random instances"
            .to_string(),
    )
}

fn random_coord(rng: &mut ChaCha8Rng) -> SegmentCoord {
    SegmentCoord::new(rng.gen_range(0..200), rng.gen_range(0..200))
}

/// Independent route: gather all feasible moves, then sort by
/// (distance, dx, dy) and take the head.
fn argmin_move(pos: SegmentCoord, dest: SegmentCoord, v_max: i32) -> SegmentCoord {
    let mut candidates: Vec<(f64, i32, i32, SegmentCoord)> = Vec::new();
    for dx in -v_max..=v_max {
        for dy in -v_max..=v_max {
            if dx * dx + dy * dy > v_max * v_max {
                continue;
            }
            let nx = i32::from(pos.x) + dx;
            let ny = i32::from(pos.y) + dy;
            if (0..200).contains(&nx) && (0..200).contains(&ny) {
                let c = SegmentCoord::new(nx as u16, ny as u16);
                candidates.push((euclid(c, dest), dx, dy, c));
            }
        }
    }
    candidates.sort_by(|a, b| {
        (a.0, a.1, a.2)
            .partial_cmp(&(b.0, b.1, b.2))
            .expect("distances are finite")
    });
    candidates[0].3
}

/// Whenever decision-aware suppression claims a report is redundant,
/// actually ticking the actor with and without that report must land it on
/// the same segment.
pub fn das_consistency_oracle() -> CriterionResult {
    const NAME: &str = "das-consistency-oracle";
    let grid = Grid::new(200, 200);
    let mut rng = ChaCha8Rng::seed_from_u64(0xDA5);
    let mut suppressed_checked = 0u32;
    let mut sampled = 0u32;
    while suppressed_checked < 1000 {
        sampled += 1;
        if sampled > 200_000 {
            return CriterionResult::fail(
                NAME,
                format!("only {suppressed_checked} suppressed scenarios in {sampled} samples"),
            );
        }
        let actor_pos = random_coord(&mut rng);
        let home = random_coord(&mut rng);
        let sensor = random_coord(&mut rng);
        let mut tm = TargetMap::new(grid);
        for _ in 0..rng.gen_range(0..6) {
            let t = random_coord(&mut rng);
            // The broadcast map never holds the actor's own segment (the
            // capture phase clears it) nor this sensor's unreported one.
            if t != actor_pos && t != sensor {
                tm.set(t);
            }
        }
        let gate: u16 = rng.gen_range(0..=40);
        let view = ActorStatusView {
            actor_id: ActorId(0),
            pos: actor_pos,
            dest: actor_pos,
            default: home,
            tm: &tm,
        };
        if !das_suppress(&view, sensor, gate, 2) {
            continue;
        }
        let mut without = ActorState::at_default(ActorId(0), home, grid);
        without.pos = actor_pos;
        without.tm = tm.clone();
        let mut with = without.clone();
        let report = Report {
            kind: ReportKind::TargetAt,
            segment: sensor,
            from_sensor: sensor,
            to_actor: ActorId(0),
            step: 0,
        };
        if let Err(e) = actor_tick(&mut without, &[], 2) {
            return CriterionResult::fail(NAME, e.to_string());
        }
        if let Err(e) = actor_tick(&mut with, &[report], 2) {
            return CriterionResult::fail(NAME, e.to_string());
        }
        if without.pos != with.pos {
            return CriterionResult::fail(
                NAME,
                format!(
                    "suppressed report changed the move: actor {actor_pos}, sensor {sensor}, \
                     gate {gate}: {} vs {}",
                    without.pos, with.pos
                ),
            );
        }
        suppressed_checked += 1;
    }
    CriterionResult::pass(
        NAME,
        format!(
            "{suppressed_checked} suppressed scenarios (of {sampled} sampled) left the actor's \
             move unchanged"
        ),
    )
}

/// Conservation and metric sanity while stepping and at termination, for
/// every algorithm at its chart setting.
pub fn conservation_sanity() -> CriterionResult {
    const NAME: &str = "conservation-sanity";
    let world = desk_world(300);
    let mut runs = 0;
    for (algorithm, param) in chart_settings() {
        let policy = match algorithm.policy(param) {
            Ok(p) => p,
            Err(e) => return CriterionResult::fail(NAME, e.to_string()),
        };
        let cfg = WorldConfig {
            rng_seed: 11,
            ..world.clone()
        };
        let mut sim = match Simulation::new(cfg, policy) {
            Ok(s) => s,
            Err(e) => return CriterionResult::fail(NAME, e.to_string()),
        };
        while sim.eliminated() < 300 {
            if sim.step_index() >= 100_000 {
                return CriterionResult::fail(NAME, format!("{algorithm}: run stalled"));
            }
            if let Err(e) = sim.step_once() {
                return CriterionResult::fail(NAME, e.to_string());
            }
            if sim.spawned() != sim.eliminated() + sim.outstanding_total() {
                return CriterionResult::fail(
                    NAME,
                    format!(
                        "{algorithm} step {}: spawned {} != eliminated {} + outstanding {}",
                        sim.step_index(),
                        sim.spawned(),
                        sim.eliminated(),
                        sim.outstanding_total()
                    ),
                );
            }
        }
        let m = sim.metrics();
        if m.hops < m.transfers {
            return CriterionResult::fail(
                NAME,
                format!("{algorithm}: hops {} < transfers {}", m.hops, m.transfers),
            );
        }
        if m.capture_times.iter().any(|&t| t < 1) {
            return CriterionResult::fail(NAME, format!("{algorithm}: capture time below 1"));
        }
        runs += 1;
    }
    CriterionResult::pass(
        NAME,
        format!(
            "spawned = captured + outstanding at every step, hops >= transfers, and all capture \
             times >= 1 across {runs} desk-scale runs"
        ),
    )
}

/// The six (algorithm, parameter) settings behind the detailed charts.
fn chart_settings() -> [(Algorithm, Option<f64>); 6] {
    [
        (Algorithm::Ts1, None),
        (Algorithm::Sts1, Some(0.9)),
        (Algorithm::Das1, Some(15.0)),
        (Algorithm::Ts2, None),
        (Algorithm::Sts2, Some(0.7)),
        (Algorithm::Das2, Some(0.0)),
    ]
}

/// Qualitative reproduction at the canonical scale (200x200, 16 actors,
/// quota 2700, 20 seeds per setting):
///
/// (a) DAS-1 with gate 15 captures faster than TS-1 on average;
/// (b) STS-1 with alpha 0.9 spends fewer hops than TS-1;
/// (c) each nearest-actor algorithm beats its load-balancing counterpart
///     on both mean hops and mean time to capture.
pub fn qualitative_ordering() -> CriterionResult {
    const NAME: &str = "qualitative-ordering";
    let world = WorldConfig::default();
    let seeds = seed_schedule(1, 20);
    let mut rows: Vec<AggregateRow> = Vec::new();
    for (algorithm, param) in chart_settings() {
        let spec = ExperimentSpec {
            algorithm,
            params: param.into_iter().collect(),
            seeds: seeds.clone(),
            world: world.clone(),
        };
        match run_sweep(&spec) {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => return CriterionResult::fail(NAME, e.to_string()),
        }
    }
    let row = |a: Algorithm| rows.iter().find(|r| r.algorithm == a).unwrap();
    let (ts1, sts1, das1) = (row(Algorithm::Ts1), row(Algorithm::Sts1), row(Algorithm::Das1));
    let (ts2, sts2, das2) = (row(Algorithm::Ts2), row(Algorithm::Sts2), row(Algorithm::Das2));

    let mut failures = Vec::new();
    if das1.time_to_capture.mean >= ts1.time_to_capture.mean {
        failures.push(format!(
            "(a) mean ttc DAS-1(15) {:.3} !< TS-1 {:.3}",
            das1.time_to_capture.mean, ts1.time_to_capture.mean
        ));
    }
    if sts1.hops.mean >= ts1.hops.mean {
        failures.push(format!(
            "(b) mean hops STS-1(0.9) {:.0} !< TS-1 {:.0}",
            sts1.hops.mean, ts1.hops.mean
        ));
    }
    for (one, two) in [(ts1, ts2), (sts1, sts2), (das1, das2)] {
        if one.hops.mean >= two.hops.mean {
            failures.push(format!(
                "(c) mean hops {} {:.0} !< {} {:.0}",
                one.algorithm, one.hops.mean, two.algorithm, two.hops.mean
            ));
        }
        if one.time_to_capture.mean >= two.time_to_capture.mean {
            failures.push(format!(
                "(c) mean ttc {} {:.3} !< {} {:.3}",
                one.algorithm, one.time_to_capture.mean, two.algorithm, two.time_to_capture.mean
            ));
        }
    }
    let summary = rows
        .iter()
        .map(|r| {
            format!(
                "{}{}: ttc {:.2} hops {:.0}",
                r.algorithm,
                r.param.map(|p| format!("({p})")).unwrap_or_default(),
                r.time_to_capture.mean,
                r.hops.mean
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    if failures.is_empty() {
        CriterionResult::pass(NAME, summary)
    } else {
        CriterionResult::fail(NAME, format!("{}; means: {summary}", failures.join("; ")))
    }
}
