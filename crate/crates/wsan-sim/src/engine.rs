//! The per-step scheduler tying world, navigation, and protocol together:
//! capture handling, report delivery, metric accounting, and termination.
//!
//! Each step runs a fixed phase sequence:
//!
//! 1. capture — every actor eliminates the targets on its segment and
//!    clears its own map entry there;
//! 2. broadcast — actor status becomes visible to sensors in range;
//! 3. sensor — sensors are evaluated in ascending `(x, y)` order and their
//!    reports collected in that order;
//! 4. move — actors apply their report batches, re-choose destinations,
//!    and move;
//! 5. spawn — new targets appear at random segments;
//! 6. the step counter advances.
//!
//! Spawning is the only phase that consumes randomness, so a run is a pure
//! function of (config, policy, seed).

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::navigation::{actor_tick, ActorState, NavigationError};
use crate::protocol::{
    sensor_tick, ActorList, ActorStatusView, PolicyError, Report, ReportKind, SensorReportState,
    SuppressionPolicy,
};
use crate::world::{
    chebyshev, euclid, spawn_targets, ActorId, ConfigError, Grid, LayoutError, SegmentCoord,
    Target, WorldConfig,
};

/// Cost in hops of one sensor-to-actor transfer: the shortest relay path
/// through the Moore-linked sensor lattice, with a one-hop minimum for a
/// sensor on or next to the actor's segment.
pub fn hop_cost(sensor: SegmentCoord, actor_pos: SegmentCoord) -> u64 {
    u64::from(chebyshev(sensor, actor_pos)).max(1)
}

/// Communication and capture metrics of one simulation run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunMetrics {
    /// Packets sent from sensor nodes to actors.
    pub transfers: u64,
    /// Accumulated relay hops over all transfers.
    pub hops: u64,
    /// One entry per eliminated target: steps from spawn to capture, in
    /// capture order.
    pub capture_times: Vec<u64>,
    /// Step index at which the run terminated.
    pub steps_elapsed: u64,
}

impl RunMetrics {
    pub fn eliminated(&self) -> u64 {
        self.capture_times.len() as u64
    }

    /// Mean time to capture over all eliminated targets; 0 when none were.
    pub fn mean_capture_time(&self) -> f64 {
        if self.capture_times.is_empty() {
            return 0.0;
        }
        let sum: u64 = self.capture_times.iter().sum();
        sum as f64 / self.capture_times.len() as f64
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Navigation(#[from] NavigationError),
    #[error(
        "no termination after {ceiling} steps: {eliminated}/{quota} targets \
         eliminated, {outstanding} outstanding"
    )]
    NonTermination {
        ceiling: u64,
        eliminated: u64,
        quota: u64,
        outstanding: u64,
    },
    #[error("trace output failed: {0}")]
    Trace(#[from] std::io::Error),
}

/// One simulation run in progress.
pub struct Simulation {
    cfg: WorldConfig,
    grid: Grid,
    policy: SuppressionPolicy,
    rng: ChaCha8Rng,
    step: u64,
    actors: Vec<ActorState>,
    sensors: Vec<SensorReportState>,
    /// Outstanding target ids per cell, in spawn order. Targets may stack.
    outstanding: Vec<Vec<u64>>,
    outstanding_total: u64,
    /// Cells that may need sensor evaluation: any cell holding an
    /// outstanding target or whose sensor is mid-protocol. All other
    /// sensors are idle by construction, so the sensor phase skips them.
    active_cells: Vec<usize>,
    targets: Vec<Target>,
    metrics: RunMetrics,
    eliminated: u64,
    trace: Option<Box<dyn Write>>,
}

impl Simulation {
    pub fn new(cfg: WorldConfig, policy: SuppressionPolicy) -> Result<Self, EngineError> {
        cfg.validate()?;
        policy.validate()?;
        let layout = cfg.layout()?;
        let grid = cfg.grid();
        let actors = layout
            .iter()
            .enumerate()
            .map(|(i, &home)| ActorState::at_default(ActorId(i as u16), home, grid))
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        Ok(Self {
            grid,
            policy,
            rng,
            step: 0,
            actors,
            sensors: vec![SensorReportState::Unreported; grid.cell_count()],
            outstanding: vec![Vec::new(); grid.cell_count()],
            outstanding_total: 0,
            active_cells: Vec::new(),
            targets: Vec::new(),
            metrics: RunMetrics::default(),
            eliminated: 0,
            cfg,
        })
    }

    /// Streams one line per capture and per report to `sink`.
    pub fn set_trace(&mut self, sink: Box<dyn Write>) {
        self.trace = Some(sink);
    }

    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    pub fn policy(&self) -> SuppressionPolicy {
        self.policy
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn eliminated(&self) -> u64 {
        self.eliminated
    }

    pub fn spawned(&self) -> u64 {
        self.targets.len() as u64
    }

    pub fn outstanding_total(&self) -> u64 {
        self.outstanding_total
    }

    pub fn outstanding_at(&self, c: SegmentCoord) -> usize {
        self.outstanding[self.grid.index(c)].len()
    }

    pub fn metrics(&self) -> &RunMetrics {
        &self.metrics
    }

    pub fn actors(&self) -> &[ActorState] {
        &self.actors
    }

    pub fn sensor_state(&self, c: SegmentCoord) -> SensorReportState {
        self.sensors[self.grid.index(c)]
    }

    /// Runs the simulation to completion: steps until the elimination quota
    /// is reached at the end of a capture phase, so the final step executes
    /// no communication for captures that already satisfied the quota.
    pub fn run(&mut self) -> Result<RunMetrics, EngineError> {
        while self.eliminated < self.cfg.elimination_quota {
            if self.step >= self.cfg.step_ceiling {
                return Err(EngineError::NonTermination {
                    ceiling: self.cfg.step_ceiling,
                    eliminated: self.eliminated,
                    quota: self.cfg.elimination_quota,
                    outstanding: self.outstanding_total,
                });
            }
            self.capture_phase()?;
            if self.eliminated >= self.cfg.elimination_quota {
                break;
            }
            self.communicate_and_move()?;
            self.spawn_phase();
            self.step += 1;
        }
        self.metrics.steps_elapsed = self.step;
        Ok(self.metrics.clone())
    }

    /// Executes one full step (all phases), regardless of the quota.
    pub fn step_once(&mut self) -> Result<(), EngineError> {
        self.capture_phase()?;
        self.communicate_and_move()?;
        self.spawn_phase();
        self.step += 1;
        self.metrics.steps_elapsed = self.step;
        Ok(())
    }

    /// Phase 1: each actor, in ascending id order, eliminates every
    /// outstanding target on its segment and clears its own map entry
    /// there.
    fn capture_phase(&mut self) -> Result<(), EngineError> {
        for i in 0..self.actors.len() {
            let pos = self.actors[i].pos;
            let cell = self.grid.index(pos);
            let captured = std::mem::take(&mut self.outstanding[cell]);
            for id in &captured {
                let target = &mut self.targets[*id as usize];
                target.capture_step = Some(self.step);
                let ttc = self.step - target.spawn_step;
                self.metrics.capture_times.push(ttc);
                self.eliminated += 1;
                self.outstanding_total -= 1;
                if let Some(t) = self.trace.as_mut() {
                    writeln!(
                        t,
                        "step={} event=capture actor={} target={} segment={} ttc={}",
                        self.step, self.actors[i].id, id, pos, ttc
                    )?;
                }
            }
            self.actors[i].tm.clear(pos);
        }
        Ok(())
    }

    /// Phases 2-4: broadcast, sensor evaluation, report delivery, movement.
    fn communicate_and_move(&mut self) -> Result<(), EngineError> {
        // Active cells are kept sorted, which is ascending (x, y) by the
        // grid's index layout.
        let cells = std::mem::take(&mut self.active_cells);
        let mut reports: Vec<Report> = Vec::new();
        let mut still_active: Vec<usize> = Vec::with_capacity(cells.len());
        for cell in cells {
            let sensor = self.grid.coord(cell);
            let present = !self.outstanding[cell].is_empty();
            let state = self.sensors[cell];
            if state == SensorReportState::Unreported && !present {
                continue; // resolved: drop from the active set
            }
            let (next, report) = {
                let al = in_range_actors(&self.actors, sensor, self.cfg.actor_range);
                sensor_tick(
                    state,
                    present,
                    &al,
                    sensor,
                    self.policy,
                    self.cfg.v_max,
                    self.step,
                )
            };
            self.sensors[cell] = next;
            if let Some(r) = report {
                let recipient_pos = self.actors[usize::from(r.to_actor.0)].pos;
                let hops = hop_cost(r.from_sensor, recipient_pos);
                self.metrics.transfers += 1;
                self.metrics.hops += hops;
                if let Some(t) = self.trace.as_mut() {
                    let kind = match r.kind {
                        ReportKind::TargetAt => "target",
                        ReportKind::EliminatedAt => "eliminated",
                    };
                    writeln!(
                        t,
                        "step={} event=report kind={} from={} to={} hops={}",
                        self.step, kind, r.from_sensor, r.to_actor, hops
                    )?;
                }
                reports.push(r);
            }
            if next != SensorReportState::Unreported || present {
                still_active.push(cell);
            }
        }
        self.active_cells = still_active;

        // Deliver in collection order; per-actor batches stay ordered.
        let mut batches: Vec<Vec<Report>> = vec![Vec::new(); self.actors.len()];
        for r in reports {
            batches[usize::from(r.to_actor.0)].push(r);
        }
        for (actor, batch) in self.actors.iter_mut().zip(&batches) {
            actor_tick(actor, batch, self.cfg.v_max)?;
        }
        Ok(())
    }

    /// Phase 5: spawn this step's targets and flag their cells for sensor
    /// evaluation.
    fn spawn_phase(&mut self) {
        let first_id = self.targets.len() as u64;
        let spawned = spawn_targets(
            &mut self.rng,
            self.grid,
            self.cfg.spawn_rate,
            self.step,
            first_id,
        );
        for target in spawned {
            let cell = self.grid.index(target.pos);
            if self.outstanding[cell].is_empty() && !self.cell_is_active(cell) {
                insert_sorted(&mut self.active_cells, cell);
            }
            self.outstanding[cell].push(target.id);
            self.outstanding_total += 1;
            self.targets.push(target);
        }
    }

    fn cell_is_active(&self, cell: usize) -> bool {
        self.active_cells.binary_search(&cell).is_ok()
    }
}

fn insert_sorted(cells: &mut Vec<usize>, cell: usize) {
    if let Err(at) = cells.binary_search(&cell) {
        cells.insert(at, cell);
    }
}

/// Actors whose communication range covers the sensor, ascending by id.
fn in_range_actors<'a>(
    actors: &'a [ActorState],
    sensor: SegmentCoord,
    actor_range: u16,
) -> ActorList<'a> {
    actors
        .iter()
        .filter(|a| euclid(a.pos, sensor) <= f64::from(actor_range))
        .map(|a| ActorStatusView {
            actor_id: a.id,
            pos: a.pos,
            dest: a.dest,
            default: a.default,
            tm: &a.tm,
        })
        .collect()
}

/// Runs one complete simulation with the given seed and returns its
/// metrics.
pub fn run(
    cfg: &WorldConfig,
    policy: SuppressionPolicy,
    seed: u64,
) -> Result<RunMetrics, EngineError> {
    let cfg = WorldConfig {
        rng_seed: seed,
        ..cfg.clone()
    };
    Simulation::new(cfg, policy)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{Selection, SuppressionMethod};

    fn c(x: u16, y: u16) -> SegmentCoord {
        SegmentCoord::new(x, y)
    }

    fn ts_nearest() -> SuppressionPolicy {
        SuppressionPolicy {
            method: SuppressionMethod::Temporal,
            selection: Selection::Nearest,
        }
    }

    fn desk_cfg() -> WorldConfig {
        WorldConfig {
            width: 50,
            height: 50,
            actor_count: 4,
            elimination_quota: 300,
            ..WorldConfig::default()
        }
    }

    impl Simulation {
        /// Drops a target directly onto a segment, bypassing the spawn
        /// stream; test-only scaffolding for controlled scenarios.
        fn inject_target(&mut self, pos: SegmentCoord) {
            let id = self.targets.len() as u64;
            let cell = self.grid.index(pos);
            if self.outstanding[cell].is_empty() && !self.cell_is_active(cell) {
                insert_sorted(&mut self.active_cells, cell);
            }
            self.outstanding[cell].push(id);
            self.outstanding_total += 1;
            self.targets.push(Target {
                id,
                pos,
                spawn_step: self.step,
                capture_step: None,
            });
        }
    }

    #[test]
    fn hop_cost_examples() {
        assert_eq!(hop_cost(c(5, 7), c(9, 4)), 4);
        assert_eq!(hop_cost(c(12, 12), c(12, 12)), 1);
        assert_eq!(hop_cost(c(0, 0), c(37, 0)), 37);
    }

    #[test]
    fn idle_step_only_advances_time_and_spawns() {
        let cfg = WorldConfig {
            width: 50,
            height: 50,
            actor_count: 1,
            spawn_rate: 3,
            ..WorldConfig::default()
        };
        let mut sim = Simulation::new(cfg, ts_nearest()).unwrap();
        assert_eq!(sim.actors()[0].pos, c(25, 25));
        sim.step_once().unwrap();
        assert_eq!(sim.step_index(), 1);
        assert_eq!(sim.spawned(), 3);
        // The actor had no information during this step, so it stayed home.
        assert_eq!(sim.actors()[0].pos, c(25, 25));
    }

    #[test]
    fn report_reaches_actor_map_before_it_moves() {
        let cfg = WorldConfig {
            width: 50,
            height: 50,
            actor_count: 1,
            spawn_rate: 0,
            ..WorldConfig::default()
        };
        let mut sim = Simulation::new(cfg, ts_nearest()).unwrap();
        sim.inject_target(c(10, 10));
        sim.step_once().unwrap();
        assert_eq!(sim.metrics().transfers, 1);
        assert_eq!(sim.metrics().hops, 15); // chebyshev((10,10),(25,25))
        assert!(sim.actors()[0].tm.contains(c(10, 10)));
        assert_eq!(sim.actors()[0].dest, c(10, 10));
        // One step of movement toward the target.
        assert_eq!(sim.actors()[0].pos, c(24, 24));
        assert_eq!(
            sim.sensor_state(c(10, 10)),
            SensorReportState::Reported(ActorId(0))
        );
    }

    #[test]
    fn actor_walks_in_and_captures() {
        let cfg = WorldConfig {
            width: 50,
            height: 50,
            actor_count: 1,
            spawn_rate: 0,
            elimination_quota: 1,
            ..WorldConfig::default()
        };
        let mut sim = Simulation::new(cfg, ts_nearest()).unwrap();
        sim.inject_target(c(25, 31)); // 6 segments from home: 3 steps at speed 2
        let metrics = sim.run().unwrap();
        assert_eq!(metrics.eliminated(), 1);
        // Moves during steps 0..2, capture at the start of step 3.
        assert_eq!(metrics.capture_times, vec![3]);
        assert_eq!(metrics.steps_elapsed, 3);
        assert_eq!(metrics.transfers, 1);
        assert_eq!(metrics.hops, 6);
        assert_eq!(sim.outstanding_total(), 0);
        // The capture cleared the actor's own map entry, and the run broke
        // off at the capture boundary before this step's sensor phase.
        assert!(sim.actors()[0].tm.is_empty());
        assert_eq!(
            sim.sensor_state(c(25, 31)),
            SensorReportState::Reported(ActorId(0))
        );
    }

    #[test]
    fn silent_elimination_resolution_after_self_capture() {
        let cfg = WorldConfig {
            width: 50,
            height: 50,
            actor_count: 1,
            spawn_rate: 0,
            ..WorldConfig::default()
        };
        let mut sim = Simulation::new(cfg, ts_nearest()).unwrap();
        sim.inject_target(c(25, 31));
        for _ in 0..5 {
            sim.step_once().unwrap();
        }
        // Captured at step 3; during that step's sensor phase the reporting
        // sensor saw the target gone and the owner's map already clear, so
        // it resolved without an elimination report.
        assert_eq!(sim.eliminated(), 1);
        assert_eq!(sim.metrics().transfers, 1);
        assert_eq!(
            sim.sensor_state(c(25, 31)),
            SensorReportState::Unreported
        );
        // With an empty map again the actor is homeward bound.
        assert_eq!(sim.actors()[0].dest, c(25, 25));
        assert_eq!(sim.actors()[0].pos, c(25, 27));
    }

    #[test]
    fn runs_are_deterministic_for_a_shared_seed() {
        let cfg = WorldConfig {
            elimination_quota: 60,
            ..desk_cfg()
        };
        let a = run(&cfg, ts_nearest(), 99).unwrap();
        let b = run(&cfg, ts_nearest(), 99).unwrap();
        assert_eq!(a, b);
        let c = run(&cfg, ts_nearest(), 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_quota_returns_immediately() {
        let cfg = WorldConfig {
            elimination_quota: 0,
            ..desk_cfg()
        };
        let metrics = run(&cfg, ts_nearest(), 1).unwrap();
        assert_eq!(metrics, RunMetrics::default());
    }

    #[test]
    fn non_termination_guard_fires() {
        let cfg = WorldConfig {
            spawn_rate: 0, // no targets can ever appear
            elimination_quota: 1,
            step_ceiling: 50,
            ..desk_cfg()
        };
        let err = Simulation::new(cfg, ts_nearest()).unwrap().run().unwrap_err();
        match err {
            EngineError::NonTermination {
                ceiling,
                eliminated,
                quota,
                outstanding,
            } => {
                assert_eq!(ceiling, 50);
                assert_eq!(eliminated, 0);
                assert_eq!(quota, 1);
                assert_eq!(outstanding, 0);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn conservation_holds_at_every_step_boundary() {
        let mut sim = Simulation::new(desk_cfg(), ts_nearest()).unwrap();
        for _ in 0..80 {
            sim.step_once().unwrap();
            assert_eq!(sim.spawned(), sim.eliminated() + sim.outstanding_total());
            assert!(sim.metrics().hops >= sim.metrics().transfers);
        }
        assert!(sim.metrics().capture_times.iter().all(|&t| t >= 1));
        assert!(sim.eliminated() > 0, "80 desk-scale steps must capture something");
    }

    #[test]
    fn metrics_are_monotone_across_steps() {
        let mut sim = Simulation::new(desk_cfg(), ts_nearest()).unwrap();
        let mut last = (0u64, 0u64, 0u64);
        for _ in 0..60 {
            sim.step_once().unwrap();
            let now = (
                sim.metrics().transfers,
                sim.metrics().hops,
                sim.eliminated(),
            );
            assert!(now.0 >= last.0 && now.1 >= last.1 && now.2 >= last.2);
            last = now;
        }
    }

    #[test]
    fn trace_emits_capture_and_report_lines() {
        let cfg = WorldConfig {
            width: 50,
            height: 50,
            actor_count: 1,
            spawn_rate: 0,
            elimination_quota: 1,
            ..WorldConfig::default()
        };
        let buf: Vec<u8> = Vec::new();
        let mut sim = Simulation::new(cfg, ts_nearest()).unwrap();
        sim.inject_target(c(25, 27));
        // Swap the sink through a shared buffer we can inspect afterwards.
        use std::sync::{Arc, Mutex};
        #[derive(Clone)]
        struct Shared(Arc<Mutex<Vec<u8>>>);
        impl Write for Shared {
            fn write(&mut self, data: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().write(data)
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let shared = Shared(Arc::new(Mutex::new(buf)));
        sim.set_trace(Box::new(shared.clone()));
        sim.run().unwrap();
        let text = String::from_utf8(shared.0.lock().unwrap().clone()).unwrap();
        assert!(text.contains("event=report kind=target from=(25,27) to=0 hops=2"));
        assert!(text.contains("event=capture actor=0"));
        assert!(text.lines().all(|l| l.starts_with("step=")));
    }
}
