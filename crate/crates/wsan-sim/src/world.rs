//! Grid geometry, distance functions, the static deployment, and random
//! target spawning.
//!
//! The monitored area is a rectangular grid of square segments. One sensor
//! node sits in every segment and detects binary target presence in that
//! segment only; a handful of mobile actors patrol the grid and eliminate
//! targets by standing on them. Everything positional in the simulator is
//! expressed as a [`SegmentCoord`].

use std::fmt;

use rand::RngCore;
use thiserror::Error;

/// Discrete grid cell identifier. The universal position type for sensors,
/// actors, and targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentCoord {
    pub x: u16,
    pub y: u16,
}

impl SegmentCoord {
    pub const fn new(x: u16, y: u16) -> Self {
        Self { x, y }
    }
}

impl fmt::Display for SegmentCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Identifier of a mobile actor; equals the actor's index in the deployment
/// layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActorId(pub u16);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Grid dimensions plus cell indexing helpers.
///
/// Cells are indexed as `x * height + y`, so ascending cell index is
/// ascending `(x, y)` lexicographic order. The engine relies on that for
/// its deterministic sensor evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    width: u16,
    height: u16,
}

impl Grid {
    pub fn new(width: u16, height: u16) -> Self {
        debug_assert!(width >= 1 && height >= 1);
        Self { width, height }
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn contains(&self, c: SegmentCoord) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn cell_count(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    pub fn index(&self, c: SegmentCoord) -> usize {
        debug_assert!(self.contains(c));
        usize::from(c.x) * usize::from(self.height) + usize::from(c.y)
    }

    pub fn coord(&self, index: usize) -> SegmentCoord {
        debug_assert!(index < self.cell_count());
        let h = usize::from(self.height);
        SegmentCoord::new((index / h) as u16, (index % h) as u16)
    }
}

/// Euclidean distance between two segments, in segments.
pub fn euclid(a: SegmentCoord, b: SegmentCoord) -> f64 {
    let dx = f64::from(a.x) - f64::from(b.x);
    let dy = f64::from(a.y) - f64::from(b.y);
    (dx * dx + dy * dy).sqrt()
}

/// Chebyshev distance: the length of the shortest Moore-neighbour path
/// between two segments.
pub fn chebyshev(a: SegmentCoord, b: SegmentCoord) -> u32 {
    let dx = (i32::from(a.x) - i32::from(b.x)).unsigned_abs();
    let dy = (i32::from(a.y) - i32::from(b.y)).unsigned_abs();
    dx.max(dy)
}

/// Default abort threshold for runs that stop making progress.
pub const DEFAULT_STEP_CEILING: u64 = 1_000_000;

/// Static parameters of one simulation run.
///
/// The default value is the canonical deployment: a 200x200 grid, 16 actors
/// with communication radius 37, actor speed 2, three target spawns per
/// step, and a 2700-elimination termination quota.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    /// Grid width in segments.
    pub width: u16,
    /// Grid height in segments.
    pub height: u16,
    /// Number of mobile actors.
    pub actor_count: u16,
    /// Euclidean radius of an actor's communication range, in segments.
    pub actor_range: u16,
    /// Maximum actor displacement per time step (Euclidean, in segments).
    pub v_max: u16,
    /// Targets spawned per time step.
    pub spawn_rate: u32,
    /// Run ends once this many targets have been eliminated.
    pub elimination_quota: u64,
    /// Seed for the run's random stream.
    pub rng_seed: u64,
    /// A run aborts with a non-termination error once it reaches this step.
    pub step_ceiling: u64,
    /// Explicit actor home positions. When `None`, the square-lattice
    /// default layout is used.
    pub actor_layout: Option<Vec<SegmentCoord>>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            width: 200,
            height: 200,
            actor_count: 16,
            actor_range: 37,
            v_max: 2,
            spawn_rate: 3,
            elimination_quota: 2700,
            rng_seed: 0,
            step_ceiling: DEFAULT_STEP_CEILING,
            actor_layout: None,
        }
    }
}

impl WorldConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.width, self.height)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.width < 1 || self.height < 1 {
            return Err(ConfigError::EmptyGrid {
                width: self.width,
                height: self.height,
            });
        }
        if self.actor_count < 1 {
            return Err(ConfigError::NoActors);
        }
        if self.actor_range < 1 {
            return Err(ConfigError::ZeroActorRange);
        }
        if self.v_max < 1 {
            return Err(ConfigError::ZeroSpeed);
        }
        Ok(())
    }

    /// Actor home positions: the configured layout if present, else the
    /// default square lattice. Custom layouts are checked against the grid.
    pub fn layout(&self) -> Result<Vec<SegmentCoord>, LayoutError> {
        match &self.actor_layout {
            Some(layout) => {
                if layout.len() != usize::from(self.actor_count) {
                    return Err(LayoutError::LayoutSizeMismatch {
                        expected: self.actor_count,
                        got: layout.len(),
                    });
                }
                let grid = self.grid();
                if let Some(&c) = layout.iter().find(|&&c| !grid.contains(c)) {
                    return Err(LayoutError::LayoutOutOfGrid {
                        segment: c,
                        width: self.width,
                        height: self.height,
                    });
                }
                Ok(layout.clone())
            }
            None => default_positions(self),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("grid must be at least 1x1, got {width}x{height}")]
    EmptyGrid { width: u16, height: u16 },
    #[error("at least one actor is required")]
    NoActors,
    #[error("actor communication range must be at least 1 segment")]
    ZeroActorRange,
    #[error("actor speed must be at least 1 segment per step")]
    ZeroSpeed,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    /// No k*k lattice fits this actor count and grid; a custom layout must
    /// be supplied in the config.
    #[error(
        "no square lattice layout fits {actor_count} actors on a \
         {width}x{height} grid; supply actor_layout in the config"
    )]
    NonSquareActorCount {
        actor_count: u16,
        width: u16,
        height: u16,
    },
    #[error("actor_layout has {got} positions but actor_count is {expected}")]
    LayoutSizeMismatch { expected: u16, got: usize },
    #[error("actor_layout position {segment} is outside the {width}x{height} grid")]
    LayoutOutOfGrid {
        segment: SegmentCoord,
        width: u16,
        height: u16,
    },
}

/// Default actor home positions: a k x k lattice centred in equal grid
/// tiles, requiring `actor_count == k*k` with both dimensions divisible
/// by k. Actor id `j*k + i` homes at `(W/(2k) + i*W/k, H/(2k) + j*H/k)`.
///
/// For the canonical 16-on-200x200 deployment this yields the positions
/// `(25 + 50i, 25 + 50j)`, whose ranges jointly cover the whole grid with
/// a worst-case distance of sqrt(1250) ~ 35.36 <= 37.
pub fn default_positions(cfg: &WorldConfig) -> Result<Vec<SegmentCoord>, LayoutError> {
    let err = || LayoutError::NonSquareActorCount {
        actor_count: cfg.actor_count,
        width: cfg.width,
        height: cfg.height,
    };
    let k = (f64::from(cfg.actor_count).sqrt()).round() as u16;
    if k == 0 || k * k != cfg.actor_count {
        return Err(err());
    }
    if cfg.width % k != 0 || cfg.height % k != 0 {
        return Err(err());
    }
    let (sx, sy) = (cfg.width / k, cfg.height / k);
    let mut positions = Vec::with_capacity(usize::from(cfg.actor_count));
    for j in 0..k {
        for i in 0..k {
            positions.push(SegmentCoord::new(sx / 2 + i * sx, sy / 2 + j * sy));
        }
    }
    Ok(positions)
}

/// A stationary target. `capture_step` is set by the engine when an actor
/// reaches the target's segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Target {
    pub id: u64,
    pub pos: SegmentCoord,
    pub spawn_step: u64,
    pub capture_step: Option<u64>,
}

/// Draws `count` target positions uniformly over the grid and assigns ids
/// `first_id..first_id + count` in draw order.
///
/// Stream contract: consumes exactly `2 * count` 64-bit draws from `rng`,
/// x before y for each target, each mapped onto its axis by modulo. The
/// modulo bias on a 64-bit draw is below 2^-48 for any representable grid
/// and is accepted for the sake of a fixed, portable stream layout.
/// Collisions with existing targets or actors are permitted.
pub fn spawn_targets<R: RngCore>(
    rng: &mut R,
    grid: Grid,
    count: u32,
    step: u64,
    first_id: u64,
) -> Vec<Target> {
    (0..count)
        .map(|k| {
            let x = (rng.next_u64() % u64::from(grid.width())) as u16;
            let y = (rng.next_u64() % u64::from(grid.height())) as u16;
            Target {
                id: first_id + u64::from(k),
                pos: SegmentCoord::new(x, y),
                spawn_step: step,
                capture_step: None,
            }
        })
        .collect()
}
