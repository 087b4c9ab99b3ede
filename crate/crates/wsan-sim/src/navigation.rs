//! Actor-side navigation: destination selection from the target map and
//! the speed-bounded one-step move.
//!
//! All functions here are pure; the engine owns phase ordering and report
//! batching. Tie-breaking is lexicographic everywhere (smaller x/dx first,
//! then y/dy) so that sensors running decision-aware suppression can
//! replicate an actor's movement decision exactly.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::protocol::{Report, ReportKind};
use crate::world::{euclid, ActorId, Grid, SegmentCoord};

/// Per-actor binary occupancy map of reported target positions.
///
/// Stored sparsely as the ordered set of segments currently marked 1; the
/// 1-entry count is the set size, so the cached-count invariant holds by
/// construction. Iteration order is ascending `(x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetMap {
    grid: Grid,
    cells: BTreeSet<SegmentCoord>,
}

impl TargetMap {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            cells: BTreeSet::new(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Number of segments currently marked 1.
    pub fn count(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, c: SegmentCoord) -> bool {
        self.cells.contains(&c)
    }

    /// Marks a segment as holding a target.
    pub fn set(&mut self, c: SegmentCoord) {
        debug_assert!(self.grid.contains(c));
        self.cells.insert(c);
    }

    /// Marks a segment as empty.
    pub fn clear(&mut self, c: SegmentCoord) {
        self.cells.remove(&c);
    }

    /// 1-entries in ascending `(x, y)` order.
    pub fn iter(&self) -> impl Iterator<Item = SegmentCoord> + '_ {
        self.cells.iter().copied()
    }
}

/// Full navigation state of one actor.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorState {
    pub id: ActorId,
    /// Current segment.
    pub pos: SegmentCoord,
    /// Destination chosen at the most recent move; broadcast to sensors.
    pub dest: SegmentCoord,
    /// Home segment the actor returns to when its target map is empty.
    pub default: SegmentCoord,
    pub tm: TargetMap,
}

impl ActorState {
    /// A freshly deployed actor parked at its home segment.
    pub fn at_default(id: ActorId, default: SegmentCoord, grid: Grid) -> Self {
        debug_assert!(grid.contains(default));
        Self {
            id,
            pos: default,
            dest: default,
            default,
            tm: TargetMap::new(grid),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NavigationError {
    #[error("report references segment {segment} outside the {width}x{height} grid")]
    MalformedReport {
        segment: SegmentCoord,
        width: u16,
        height: u16,
    },
}

/// The 1-entry of `tm` nearest to `from`, or `None` when the map is empty.
/// Distance ties break to the smaller x, then the smaller y.
pub fn nearest_target(tm: &TargetMap, from: SegmentCoord) -> Option<SegmentCoord> {
    let mut best: Option<(f64, SegmentCoord)> = None;
    for c in tm.iter() {
        let d = euclid(c, from);
        match best {
            Some((bd, _)) if bd <= d => {}
            _ => best = Some((d, c)),
        }
    }
    best.map(|(_, c)| c)
}

/// Nearest reported target if any, otherwise the actor's home segment.
pub fn choose_destination(tm: &TargetMap, pos: SegmentCoord, default: SegmentCoord) -> SegmentCoord {
    nearest_target(tm, pos).unwrap_or(default)
}

/// One movement step: the in-grid segment minimizing the remaining distance
/// to `dest` over all integer offsets with `dx^2 + dy^2 <= v_max^2` (13
/// candidates at the canonical speed 2). Ties break to the smaller dx, then
/// the smaller dy.
pub fn step_move(grid: Grid, pos: SegmentCoord, dest: SegmentCoord, v_max: u16) -> SegmentCoord {
    debug_assert!(grid.contains(pos) && grid.contains(dest));
    let v = i32::from(v_max);
    let mut best: Option<(f64, SegmentCoord)> = None;
    for dx in -v..=v {
        for dy in -v..=v {
            if dx * dx + dy * dy > v * v {
                continue;
            }
            let nx = i32::from(pos.x) + dx;
            let ny = i32::from(pos.y) + dy;
            if nx < 0 || ny < 0 || nx >= i32::from(grid.width()) || ny >= i32::from(grid.height()) {
                continue;
            }
            let cand = SegmentCoord::new(nx as u16, ny as u16);
            let d = euclid(cand, dest);
            match best {
                Some((bd, _)) if bd <= d => {}
                _ => best = Some((d, cand)),
            }
        }
    }
    // The zero offset is always a candidate, so `best` is never empty.
    best.expect("candidate set contains the current segment").1
}

/// One full actor tick: apply this step's report batch to the target map
/// (arrival order, last writer wins), re-choose the destination, and move.
///
/// Reports are validated against the grid up front; on error the actor is
/// left unchanged.
pub fn actor_tick(
    actor: &mut ActorState,
    reports: &[Report],
    v_max: u16,
) -> Result<(), NavigationError> {
    let grid = actor.tm.grid();
    if let Some(r) = reports.iter().find(|r| !grid.contains(r.segment)) {
        return Err(NavigationError::MalformedReport {
            segment: r.segment,
            width: grid.width(),
            height: grid.height(),
        });
    }
    for r in reports {
        match r.kind {
            ReportKind::TargetAt => actor.tm.set(r.segment),
            ReportKind::EliminatedAt => actor.tm.clear(r.segment),
        }
    }
    actor.dest = choose_destination(&actor.tm, actor.pos, actor.default);
    actor.pos = step_move(grid, actor.pos, actor.dest, v_max);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid {
        Grid::new(200, 200)
    }

    fn c(x: u16, y: u16) -> SegmentCoord {
        SegmentCoord::new(x, y)
    }

    fn tm_of(entries: &[(u16, u16)]) -> TargetMap {
        let mut tm = TargetMap::new(grid());
        for &(x, y) in entries {
            tm.set(c(x, y));
        }
        tm
    }

    fn report(kind: ReportKind, seg: SegmentCoord) -> Report {
        Report {
            kind,
            segment: seg,
            from_sensor: seg,
            to_actor: ActorId(0),
            step: 0,
        }
    }

    #[test]
    fn nearest_target_empty_map() {
        assert_eq!(nearest_target(&tm_of(&[]), c(5, 5)), None);
    }

    #[test]
    fn nearest_target_picks_closer_entry() {
        let tm = tm_of(&[(3, 3), (10, 10)]);
        assert_eq!(nearest_target(&tm, c(0, 0)), Some(c(3, 3)));
    }

    #[test]
    fn nearest_target_tie_breaks_on_smaller_x_then_y() {
        // (2,0) and (0,2) are both at distance 2 from the origin.
        let tm = tm_of(&[(2, 0), (0, 2)]);
        assert_eq!(nearest_target(&tm, c(0, 0)), Some(c(0, 2)));
        let tm = tm_of(&[(4, 0), (4, 8)]);
        assert_eq!(nearest_target(&tm, c(4, 4)), Some(c(4, 0)));
    }

    #[test]
    fn destination_falls_back_to_default() {
        assert_eq!(choose_destination(&tm_of(&[]), c(7, 9), c(25, 25)), c(25, 25));
        assert_eq!(
            choose_destination(&tm_of(&[(100, 100)]), c(0, 0), c(25, 25)),
            c(100, 100)
        );
    }

    #[test]
    fn step_move_examples() {
        assert_eq!(step_move(grid(), c(10, 10), c(30, 30), 2), c(11, 11));
        assert_eq!(step_move(grid(), c(42, 17), c(42, 17), 2), c(42, 17));
        assert_eq!(step_move(grid(), c(0, 0), c(0, 5), 2), c(0, 2));
    }

    #[test]
    fn step_move_clips_to_grid() {
        let small = Grid::new(3, 3);
        assert_eq!(step_move(small, c(0, 0), c(2, 2), 2), c(1, 1));
        assert_eq!(step_move(small, c(2, 2), c(0, 0), 2), c(1, 1));
    }

    #[test]
    fn actor_tick_is_a_fixed_point_at_default() {
        let mut actor = ActorState::at_default(ActorId(0), c(25, 25), grid());
        actor_tick(&mut actor, &[], 2).unwrap();
        assert_eq!(actor.pos, c(25, 25));
        assert_eq!(actor.dest, c(25, 25));
    }

    #[test]
    fn actor_tick_applies_report_then_moves() {
        let mut actor = ActorState::at_default(ActorId(0), c(25, 25), grid());
        actor.pos = c(48, 48);
        actor_tick(&mut actor, &[report(ReportKind::TargetAt, c(50, 50))], 2).unwrap();
        assert_eq!(actor.dest, c(50, 50));
        assert_eq!(actor.pos, c(49, 49));
    }

    #[test]
    fn actor_tick_applies_reports_in_arrival_order() {
        let mut actor = ActorState::at_default(ActorId(0), c(25, 25), grid());
        let batch = [
            report(ReportKind::TargetAt, c(60, 60)),
            report(ReportKind::EliminatedAt, c(60, 60)),
        ];
        actor_tick(&mut actor, &batch, 2).unwrap();
        assert!(!actor.tm.contains(c(60, 60)));
        assert_eq!(actor.dest, c(25, 25));
    }

    #[test]
    fn actor_tick_rejects_out_of_grid_report() {
        let mut actor = ActorState::at_default(ActorId(0), c(25, 25), grid());
        let before = actor.clone();
        let bad = report(ReportKind::TargetAt, c(250, 5));
        assert_eq!(
            actor_tick(&mut actor, &[bad], 2),
            Err(NavigationError::MalformedReport {
                segment: c(250, 5),
                width: 200,
                height: 200,
            })
        );
        assert_eq!(actor, before);
    }

    #[test]
    fn target_map_count_tracks_entries() {
        let mut tm = TargetMap::new(grid());
        assert_eq!(tm.count(), 0);
        tm.set(c(1, 2));
        tm.set(c(1, 2));
        tm.set(c(3, 4));
        assert_eq!(tm.count(), 2);
        tm.clear(c(1, 2));
        tm.clear(c(9, 9));
        assert_eq!(tm.count(), 1);
    }

    fn coord_strategy() -> impl Strategy<Value = SegmentCoord> {
        (0u16..200, 0u16..200).prop_map(|(x, y)| SegmentCoord::new(x, y))
    }

    /// Independent argmin over the candidate set, as a cross-check: collect
    /// all feasible moves and sort by (distance, dx, dy).
    fn brute_force_move(pos: SegmentCoord, dest: SegmentCoord, v_max: i32) -> SegmentCoord {
        let mut cands: Vec<(f64, i32, i32, SegmentCoord)> = Vec::new();
        for dx in -v_max..=v_max {
            for dy in -v_max..=v_max {
                if dx * dx + dy * dy > v_max * v_max {
                    continue;
                }
                let nx = i32::from(pos.x) + dx;
                let ny = i32::from(pos.y) + dy;
                if (0..200).contains(&nx) && (0..200).contains(&ny) {
                    let cand = SegmentCoord::new(nx as u16, ny as u16);
                    cands.push((euclid(cand, dest), dx, dy, cand));
                }
            }
        }
        cands
            .iter()
            .min_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap())
            .unwrap()
            .3
    }

    proptest! {
        #[test]
        fn step_move_matches_brute_force(pos in coord_strategy(), dest in coord_strategy()) {
            prop_assert_eq!(step_move(grid(), pos, dest, 2), brute_force_move(pos, dest, 2));
        }

        #[test]
        fn step_move_is_bounded_and_strictly_progresses(
            pos in coord_strategy(), dest in coord_strategy()
        ) {
            let next = step_move(grid(), pos, dest, 2);
            prop_assert!(euclid(next, pos) <= 2.0 + 1e-9);
            if pos != dest {
                prop_assert!(euclid(next, dest) < euclid(pos, dest));
            } else {
                prop_assert_eq!(next, pos);
            }
        }

        #[test]
        fn actor_tick_is_deterministic(
            pos in coord_strategy(),
            targets in proptest::collection::vec((0u16..200, 0u16..200), 0..8)
        ) {
            let mut a = ActorState::at_default(ActorId(0), c(25, 25), grid());
            a.pos = pos;
            let batch: Vec<Report> = targets
                .iter()
                .map(|&(x, y)| report(ReportKind::TargetAt, c(x, y)))
                .collect();
            let mut b = a.clone();
            actor_tick(&mut a, &batch, 2).unwrap();
            actor_tick(&mut b, &batch, 2).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
