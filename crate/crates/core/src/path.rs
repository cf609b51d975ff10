//! Time grids, path containers and path validation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `| ‖θ‖ − 1 |` for modulator values.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Strictly increasing sample instants starting at 0.
///
/// Cloning is cheap: the instants live behind an `Arc` so thousands of paths
/// can share one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Arc<[f64]>,
}

impl TimeGrid {
    /// Uniform grid `{0, dt, 2dt, …}` whose last point is the largest multiple
    /// of `dt` not exceeding `t_max`.
    pub fn uniform(dt: f64, t_max: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation(format!("dt must be positive, got {dt}")));
        }
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::validation(format!("t_max must be positive, got {t_max}")));
        }
        if dt > t_max {
            return Err(Error::validation(format!("dt = {dt} exceeds t_max = {t_max}")));
        }
        // Absorb representation error in t_max/dt (1.0/0.1 = 9.999…).
        let steps = (t_max / dt * (1.0 + 1e-12)).floor() as usize;
        let times: Vec<f64> = (0..=steps).map(|i| i as f64 * dt).collect();
        Ok(Self {
            times: times.into(),
        })
    }

    /// Grid from explicit instants. Used for the image grids of time changes.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::validation("time grid is empty"));
        }
        if times[0] != 0.0 {
            return Err(Error::validation(format!("time grid starts at {} not 0", times[0])));
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::validation(format!(
                    "time grid not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            times: times.into(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Step of a uniform grid (the first cell width); `None` for one-point grids.
    pub fn step(&self) -> Option<f64> {
        (self.times.len() > 1).then(|| self.times[1] - self.times[0])
    }

    /// Index of the last grid instant `≤ t`, tolerating a relative slack of 1e-12
    /// so that `t = k·dt` computed by the caller lands on index `k`.
    pub fn index_at_or_before(&self, t: f64) -> Result<usize> {
        let hi = self.last();
        let slack = 1e-12 * hi.max(1.0);
        if !(t.is_finite() && t >= -slack && t <= hi + slack) {
            return Err(Error::OutOfRange {
                what: "t",
                value: t,
                lo: 0.0,
                hi,
            });
        }
        let idx = self.times.partition_point(|&s| s <= t + slack);
        Ok(idx.saturating_sub(1))
    }

    /// The first `len` instants as a new grid.
    pub fn prefix(&self, len: usize) -> Self {
        Self {
            times: self.times[..len].into(),
        }
    }
}

/// Build the uniform grid for `(dt, t_max)`.
pub fn make_time_grid(dt: f64, t_max: f64) -> Result<TimeGrid> {
    TimeGrid::uniform(dt, t_max)
}

/// A real-valued path sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl ScalarPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::validation(format!(
                "{} values on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A point of the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitVector([f64; 2]);

impl UnitVector {
    /// Normalizes `v`; fails on a zero or non-finite input.
    pub fn new(v: [f64; 2]) -> Result<Self> {
        let n = v[0].hypot(v[1]);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Numerical(format!("cannot normalize {v:?}")));
        }
        Ok(Self([v[0] / n, v[1] / n]))
    }

    pub fn from_angle(phi: f64) -> Self {
        Self([phi.cos(), phi.sin()])
    }

    /// Wraps components without normalizing; for values already on the sphere
    /// or deliberately invalid test fixtures.
    pub fn from_raw(v: [f64; 2]) -> Self {
        Self(v)
    }

    pub fn components(&self) -> [f64; 2] {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }

    pub fn norm_deviation(&self) -> f64 {
        (self.0[0].hypot(self.0[1]) - 1.0).abs()
    }
}

/// A sampled trajectory of the pair (ordinate ξ, modulator Θ).
#[derive(Debug, Clone, PartialEq)]
pub struct MapPath {
    pub grid: TimeGrid,
    pub xi: Vec<f64>,
    pub theta: Vec<UnitVector>,
    /// First grid index at which the path is dead; `xi`/`theta` stop there.
    pub kill_index: Option<usize>,
}

impl MapPath {
    pub fn new(
        grid: TimeGrid,
        xi: Vec<f64>,
        theta: Vec<UnitVector>,
        kill_index: Option<usize>,
    ) -> Result<Self> {
        let alive = kill_index.unwrap_or(grid.len());
        if alive > grid.len() || xi.len() != alive || theta.len() != alive {
            return Err(Error::validation(format!(
                "map path lengths disagree: grid {}, xi {}, theta {}, kill_index {:?}",
                grid.len(),
                xi.len(),
                theta.len(),
                kill_index
            )));
        }
        Ok(Self {
            grid,
            xi,
            theta,
            kill_index,
        })
    }

    /// Number of alive samples.
    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Time of the last alive sample.
    pub fn horizon(&self) -> f64 {
        self.grid.times()[self.len() - 1]
    }

    /// The ordinate as a scalar path on the alive part of the grid.
    pub fn ordinate(&self) -> ScalarPath {
        ScalarPath {
            grid: self.grid.prefix(self.len()),
            values: self.xi.clone(),
        }
    }

    /// The path (−ξ, Θ).
    pub fn negated(&self) -> MapPath {
        MapPath {
            grid: self.grid.clone(),
            xi: self.xi.iter().map(|v| -v).collect(),
            theta: self.theta.clone(),
            kill_index: self.kill_index,
        }
    }
}

/// A sampled trajectory of a planar self-similar process.
#[derive(Debug, Clone, PartialEq)]
pub struct SsmpPath {
    pub grid: TimeGrid,
    pub x: Vec<[f64; 2]>,
    pub kill_index: Option<usize>,
}

impl SsmpPath {
    pub fn new(grid: TimeGrid, x: Vec<[f64; 2]>, kill_index: Option<usize>) -> Result<Self> {
        let alive = kill_index.unwrap_or(grid.len());
        if alive > grid.len() || x.len() != alive {
            return Err(Error::validation(format!(
                "ssmp path lengths disagree: grid {}, x {}, kill_index {:?}",
                grid.len(),
                x.len(),
                kill_index
            )));
        }
        if let Some(i) = x.iter().position(|p| !(p[0].hypot(p[1]) > 0.0)) {
            return Err(Error::Numerical(format!("zero or non-finite norm at index {i}")));
        }
        Ok(Self { grid, x, kill_index })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Outcome of [`validate_map_path`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDiagnostics {
    pub max_norm_deviation: f64,
    /// Index of the worst modulator entry, if any exceeds the tolerance.
    pub bad_theta_index: Option<usize>,
    pub non_finite_index: Option<usize>,
    pub non_monotone_index: Option<usize>,
    pub length_mismatch: bool,
}

impl PathDiagnostics {
    pub fn pass(&self) -> bool {
        self.bad_theta_index.is_none()
            && self.non_finite_index.is_none()
            && self.non_monotone_index.is_none()
            && !self.length_mismatch
    }
}

/// Check every [`MapPath`] invariant and report the first offending index of each kind.
pub fn validate_map_path(path: &MapPath) -> PathDiagnostics {
    let times = path.grid.times();
    let alive = path.kill_index.unwrap_or(times.len());
    let length_mismatch =
        alive > times.len() || path.xi.len() != alive || path.theta.len() != alive;

    let mut max_dev = 0.0_f64;
    let mut worst = None;
    for (i, th) in path.theta.iter().enumerate() {
        let dev = th.norm_deviation();
        if !dev.is_finite() || dev > max_dev {
            max_dev = if dev.is_finite() { dev } else { f64::INFINITY };
            worst = Some(i);
        }
    }
    let bad_theta_index = worst.filter(|_| max_dev > UNIT_NORM_TOL);

    let non_finite_index = path
        .xi
        .iter()
        .zip(path.theta.iter())
        .position(|(x, th)| !x.is_finite() || !th.x().is_finite() || !th.y().is_finite())
        .or_else(|| times.iter().position(|t| !t.is_finite()));

    let non_monotone_index = if times.first() != Some(&0.0) {
        Some(0)
    } else {
        times.windows(2).position(|w| w[1] <= w[0]).map(|i| i + 1)
    };

    PathDiagnostics {
        max_norm_deviation: max_dev,
        bad_theta_index,
        non_finite_index,
        non_monotone_index,
        length_mismatch,
    }
}
