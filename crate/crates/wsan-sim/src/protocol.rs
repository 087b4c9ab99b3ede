//! Sensor-side reporting: the per-sensor state machine, actor selection,
//! and the temporal / spatiotemporal / decision-aware suppression rules.
//!
//! A sensor reports each presence episode of its segment at most once, to a
//! single selected actor. Suppression decides whether that first report is
//! worth sending at all this step; a suppressed sensor simply retries on the
//! next step with fresh broadcast data.

use thiserror::Error;

use crate::navigation::{choose_destination, step_move, TargetMap};
use crate::world::{euclid, ActorId, SegmentCoord};

/// How a sensor picks the one actor it reports to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// The actor at the smallest Euclidean distance from the sensor.
    Nearest,
    /// The actor with the fewest targets registered in its map, to balance
    /// workload across actors.
    MinLoad,
}

/// Which reports beyond the basic once-per-episode rule get dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuppressionMethod {
    /// Report every new detection (temporal suppression only).
    Temporal,
    /// Drop the report when the selected actor already knows a target
    /// within `alpha` times the sensor-actor distance of the detection.
    Spatiotemporal { alpha: f64 },
    /// Drop the report when it provably would not change the selected
    /// actor's next move, applied only beyond `distance_gate` segments.
    DecisionAware { distance_gate: u16 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuppressionPolicy {
    pub method: SuppressionMethod,
    pub selection: Selection,
}

impl SuppressionPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if let SuppressionMethod::Spatiotemporal { alpha } = self.method {
            if !alpha.is_finite() || alpha < 0.0 {
                return Err(PolicyError::InvalidAlpha(alpha));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("alpha must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
}

/// Per-sensor protocol phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SensorReportState {
    /// No live report: a newly detected target still has to be announced.
    #[default]
    Unreported,
    /// The current presence episode was reported to this actor.
    Reported(ActorId),
    /// The target disappeared; its elimination still has to be confirmed to
    /// the actor that was told about it.
    PendingElim(ActorId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    TargetAt,
    EliminatedAt,
}

/// One sensor-to-actor packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Report {
    pub kind: ReportKind,
    /// Segment the report is about; equals `from_sensor` since sensors only
    /// observe their own segment.
    pub segment: SegmentCoord,
    pub from_sensor: SegmentCoord,
    pub to_actor: ActorId,
    pub step: u64,
}

/// One actor's broadcast as seen by a sensor during the current step.
#[derive(Debug, Clone, Copy)]
pub struct ActorStatusView<'a> {
    pub actor_id: ActorId,
    pub pos: SegmentCoord,
    /// Destination from the actor's previous move; carried for diagnostics.
    /// Suppression recomputes the destination from `tm` instead.
    pub dest: SegmentCoord,
    /// The actor's home segment, known to sensors as a deployment constant.
    pub default: SegmentCoord,
    pub tm: &'a TargetMap,
}

/// Actors heard by a sensor this step, ascending by actor id.
pub type ActorList<'a> = Vec<ActorStatusView<'a>>;

fn select_view<'a, 'b>(
    al: &'b ActorList<'a>,
    sensor: SegmentCoord,
    selection: Selection,
) -> Option<&'b ActorStatusView<'a>> {
    // Strictly-better updates over an id-ascending list: ties keep the
    // smaller actor id.
    match selection {
        Selection::Nearest => {
            let mut best: Option<(f64, &ActorStatusView)> = None;
            for v in al {
                let d = euclid(v.pos, sensor);
                match best {
                    Some((bd, _)) if bd <= d => {}
                    _ => best = Some((d, v)),
                }
            }
            best.map(|(_, v)| v)
        }
        Selection::MinLoad => {
            let mut best: Option<(usize, &ActorStatusView)> = None;
            for v in al {
                let n = v.tm.count();
                match best {
                    Some((bn, _)) if bn <= n => {}
                    _ => best = Some((n, v)),
                }
            }
            best.map(|(_, v)| v)
        }
    }
}

/// The actor a sensor would report to under `selection`, if any is in range.
pub fn select_actor(
    al: &ActorList<'_>,
    sensor: SegmentCoord,
    selection: Selection,
) -> Option<ActorId> {
    select_view(al, sensor, selection).map(|v| v.actor_id)
}

/// Spatiotemporal suppression radius: `alpha` times the sensor-actor
/// distance.
pub fn sts_threshold(actor_pos: SegmentCoord, sensor: SegmentCoord, alpha: f64) -> f64 {
    alpha * euclid(actor_pos, sensor)
}

/// True when the actor's map already holds a target within the
/// spatiotemporal radius of the sensor, so a fresh report adds too little
/// precision to be worth sending.
pub fn sts_suppress(view: &ActorStatusView<'_>, sensor: SegmentCoord, alpha: f64) -> bool {
    let threshold = sts_threshold(view.pos, sensor, alpha);
    view.tm.iter().any(|t| euclid(t, sensor) <= threshold)
}

/// True when transmitting the detection provably would not change the
/// actor's next move.
///
/// Inside `distance_gate` segments the report is always sent. Beyond it,
/// the sensor simulates the actor's decision twice with the exact
/// navigation rules — once on the broadcast map, once with the new
/// detection added — and suppresses when both runs pick the same segment.
pub fn das_suppress(
    view: &ActorStatusView<'_>,
    sensor: SegmentCoord,
    distance_gate: u16,
    v_max: u16,
) -> bool {
    if euclid(view.pos, sensor) <= f64::from(distance_gate) {
        return false;
    }
    let grid = view.tm.grid();
    let dest_without = choose_destination(view.tm, view.pos, view.default);
    let move_without = step_move(grid, view.pos, dest_without, v_max);
    let mut tm_with = view.tm.clone();
    tm_with.set(sensor);
    let dest_with = choose_destination(&tm_with, view.pos, view.default);
    let move_with = step_move(grid, view.pos, dest_with, v_max);
    move_without == move_with
}

/// One sensor evaluation for the current step.
///
/// Returns the sensor's next phase and at most one report addressed to an
/// actor from `al`. The actor list must have been rebuilt for this step.
pub fn sensor_tick(
    state: SensorReportState,
    target_present: bool,
    al: &ActorList<'_>,
    sensor: SegmentCoord,
    policy: SuppressionPolicy,
    v_max: u16,
    step: u64,
) -> (SensorReportState, Option<Report>) {
    match state {
        SensorReportState::Unreported => {
            if !target_present {
                return (SensorReportState::Unreported, None);
            }
            let Some(view) = select_view(al, sensor, policy.selection) else {
                return (SensorReportState::Unreported, None);
            };
            let suppressed = match policy.method {
                SuppressionMethod::Temporal => false,
                SuppressionMethod::Spatiotemporal { alpha } => sts_suppress(view, sensor, alpha),
                SuppressionMethod::DecisionAware { distance_gate } => {
                    das_suppress(view, sensor, distance_gate, v_max)
                }
            };
            if suppressed {
                (SensorReportState::Unreported, None)
            } else {
                let report = Report {
                    kind: ReportKind::TargetAt,
                    segment: sensor,
                    from_sensor: sensor,
                    to_actor: view.actor_id,
                    step,
                };
                (SensorReportState::Reported(view.actor_id), Some(report))
            }
        }
        SensorReportState::Reported(owner) => {
            if target_present {
                // Repeats of a known detection are always suppressed.
                (SensorReportState::Reported(owner), None)
            } else {
                // The episode ended; resolve the owed elimination in the
                // same step if the owner can be reached.
                resolve_pending_elim(owner, al, sensor, step)
            }
        }
        SensorReportState::PendingElim(owner) => resolve_pending_elim(owner, al, sensor, step),
    }
}

fn resolve_pending_elim(
    owner: ActorId,
    al: &ActorList<'_>,
    sensor: SegmentCoord,
    step: u64,
) -> (SensorReportState, Option<Report>) {
    match al.iter().find(|v| v.actor_id == owner) {
        // Owner out of range: keep waiting.
        None => (SensorReportState::PendingElim(owner), None),
        Some(view) => {
            if view.tm.contains(sensor) {
                let report = Report {
                    kind: ReportKind::EliminatedAt,
                    segment: sensor,
                    from_sensor: sensor,
                    to_actor: owner,
                    step,
                };
                (SensorReportState::Unreported, Some(report))
            } else {
                // The owner captured it itself or already learned of the
                // elimination; nothing to send.
                (SensorReportState::Unreported, None)
            }
        }
    }
}
