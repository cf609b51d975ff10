//! Euler–Maruyama and exact simulators for the planar models.
//!
//! The MAP integrators drive Θ and ξ with the same Gaussian increment ΔW: Θ
//! moves by `b(Θ)h + σ(Θ)ΔW` and is renormalized, ξ moves by `Θ·ΔW + c(Θ)h`.
//! A step whose proposal lands within `wall_delta` of a wall is rejected and
//! replaced by two half steps whose increments are drawn from the Brownian
//! bridge over the rejected increment, so the driving path is unchanged.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{dunkl_drift_from_a, ModelSpec};
use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::oracle;
use crate::path::{MapPath, SsmpPath, TimeGrid, UnitVector};
use crate::rng::{seed_stream, PathRng};

/// Maximum number of successive step halvings before giving up.
pub const MAX_HALVINGS: u32 = 20;

/// A simulated path and the number of rejected (halved) steps.
#[derive(Debug, Clone)]
pub struct SimOutcome<P> {
    pub path: P,
    pub wall_rejections: u64,
}

trait Modulator {
    /// Modulator drift and ordinate drift at an in-arc point.
    fn coeffs(&self, th: [f64; 2]) -> ([f64; 2], f64);
    fn inside(&self, th: [f64; 2], delta: f64) -> bool;
}

struct BesselModulator;

impl Modulator for BesselModulator {
    #[inline]
    fn coeffs(&self, [x, y]: [f64; 2]) -> ([f64; 2], f64) {
        ([1.0 / x - 2.5 * x, 1.0 / y - 2.5 * y], 2.0)
    }

    #[inline]
    fn inside(&self, [x, y]: [f64; 2], delta: f64) -> bool {
        x > delta && y > delta
    }
}

struct DunklModulator {
    roots: &'static [[f64; 2]],
    k: f64,
}

impl Modulator for DunklModulator {
    #[inline]
    fn coeffs(&self, th: [f64; 2]) -> ([f64; 2], f64) {
        let mut a = [0.0; 2];
        for r in self.roots {
            let p = r[0] * th[0] + r[1] * th[1];
            a[0] += self.k * r[0] / p;
            a[1] += self.k * r[1] / p;
        }
        (dunkl_drift_from_a(th, a), th[0] * a[0] + th[1] * a[1])
    }

    #[inline]
    fn inside(&self, th: [f64; 2], delta: f64) -> bool {
        self.roots.iter().all(|r| r[0] * th[0] + r[1] * th[1] > delta)
    }
}

struct MapState {
    xi: f64,
    th: [f64; 2],
}

struct MapIntegrator<'a, M> {
    modulator: &'a M,
    delta: f64,
    rejections: u64,
}

impl<M: Modulator> MapIntegrator<'_, M> {
    fn try_step(&self, s: &MapState, dw: [f64; 2], h: f64) -> Option<MapState> {
        let [x, y] = s.th;
        let (b, c) = self.modulator.coeffs(s.th);
        // σ dW with σ = [[y², −xy], [−xy, x²]].
        let cross = x * dw[1] - y * dw[0];
        let nx = x + b[0] * h - y * cross;
        let ny = y + b[1] * h + x * cross;
        let n = nx.hypot(ny);
        let th = [nx / n, ny / n];
        if !(n.is_finite() && self.modulator.inside(th, self.delta)) {
            return None;
        }
        Some(MapState {
            xi: s.xi + x * dw[0] + y * dw[1] + c * h,
            th,
        })
    }

    fn advance(
        &mut self,
        s: &mut MapState,
        dw: [f64; 2],
        h: f64,
        depth: u32,
        rng: &mut PathRng,
    ) -> bool {
        if let Some(next) = self.try_step(s, dw, h) {
            *s = next;
            return true;
        }
        if depth >= MAX_HALVINGS {
            return false;
        }
        self.rejections += 1;
        let (first, second) = bridge_split(dw, h, rng);
        self.advance(s, first, 0.5 * h, depth + 1, rng)
            && self.advance(s, second, 0.5 * h, depth + 1, rng)
    }
}

/// Split a Brownian increment over `h` into its two halves conditionally on the sum.
#[inline]
fn bridge_split(dw: [f64; 2], h: f64, rng: &mut PathRng) -> ([f64; 2], [f64; 2]) {
    let s = (0.25 * h).sqrt();
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    let first = [0.5 * dw[0] + s * z0, 0.5 * dw[1] + s * z1];
    (first, [dw[0] - first[0], dw[1] - first[1]])
}

fn run_map<M: Modulator>(
    modulator: &M,
    config: &SimulationConfig,
    grid: &TimeGrid,
    theta0: UnitVector,
    path_index: u64,
) -> Result<SimOutcome<MapPath>> {
    let mut rng = seed_stream(config.master_seed, path_index);
    let times = grid.times();
    let mut xi = Vec::with_capacity(times.len());
    let mut theta = Vec::with_capacity(times.len());
    let mut state = MapState {
        xi: 0.0,
        th: theta0.components(),
    };
    xi.push(state.xi);
    theta.push(theta0);
    let mut integ = MapIntegrator {
        modulator,
        delta: config.wall_delta,
        rejections: 0,
    };
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let sh = h.sqrt();
        let dw = [
            sh * rng.sample::<f64, _>(StandardNormal),
            sh * rng.sample::<f64, _>(StandardNormal),
        ];
        if !integ.advance(&mut state, dw, h, 0, &mut rng) {
            return Err(Error::WallRetryExhausted {
                path_index,
                time: w[0],
            });
        }
        xi.push(state.xi);
        theta.push(UnitVector::from_raw(state.th));
    }
    Ok(SimOutcome {
        path: MapPath::new(grid.clone(), xi, theta, None)?,
        wall_rejections: integ.rejections,
    })
}

fn check_start(model: &ModelSpec, theta0: UnitVector, wall_delta: f64) -> Result<()> {
    if theta0.norm_deviation() > crate::path::UNIT_NORM_TOL {
        return Err(Error::validation(format!(
            "theta0 {:?} is not a unit vector",
            theta0.components()
        )));
    }
    model.check_in_arc(theta0, wall_delta).map_err(|e| {
        Error::validation(format!(
            "theta0 {:?} is not inside the arc of {}: {e}",
            theta0.components(),
            model.label()
        ))
    })
}

/// One path of the free Bessel MAP (ξ has drift 2, Θ solves the modulator SDE).
pub fn simulate_bessel_map(
    config: &SimulationConfig,
    theta0: UnitVector,
    path_index: u64,
) -> Result<SimOutcome<MapPath>> {
    config.validate()?;
    if config.model != ModelSpec::FreeBessel2D {
        return Err(Error::validation("simulate_bessel_map needs the free Bessel model"));
    }
    check_start(&config.model, theta0, config.wall_delta)?;
    let grid = config.grid()?;
    run_map(&BesselModulator, config, &grid, theta0, path_index)
}

/// One path of the radial Dunkl MAP.
pub fn simulate_dunkl_map(
    config: &SimulationConfig,
    theta0: UnitVector,
    path_index: u64,
) -> Result<SimOutcome<MapPath>> {
    config.validate()?;
    let ModelSpec::RadialDunkl { root_system, k } = config.model else {
        return Err(Error::validation("simulate_dunkl_map needs a radial Dunkl model"));
    };
    check_start(&config.model, theta0, config.wall_delta)?;
    let grid = config.grid()?;
    let m = DunklModulator {
        roots: root_system.positive_roots(),
        k,
    };
    run_map(&m, config, &grid, theta0, path_index)
}

/// One MAP path of whatever model the configuration names.
pub fn simulate_map(
    config: &SimulationConfig,
    theta0: UnitVector,
    path_index: u64,
) -> Result<SimOutcome<MapPath>> {
    match &config.model {
        ModelSpec::FreeBessel2D => simulate_bessel_map(config, theta0, path_index),
        ModelSpec::RadialDunkl { .. } => simulate_dunkl_map(config, theta0, path_index),
        ModelSpec::DiscreteOracle(spec) => Ok(SimOutcome {
            path: oracle::simulate_discrete_path(spec, config.master_seed, path_index)?,
            wall_rejections: 0,
        }),
    }
}

/// One path of the free two-dimensional Bessel process: each coordinate is
/// the norm of a three-dimensional Brownian motion started at `(x0_i, 0, 0)`,
/// sampled exactly at the grid instants.
pub fn simulate_free_bessel_ssmp(
    config: &SimulationConfig,
    x0: [f64; 2],
    path_index: u64,
) -> Result<SimOutcome<SsmpPath>> {
    config.validate()?;
    if !(x0[0] > 0.0 && x0[1] > 0.0 && x0.iter().all(|v| v.is_finite())) {
        return Err(Error::validation(format!("x0 {x0:?} must be componentwise positive")));
    }
    let grid = config.grid()?;
    let mut rng = seed_stream(config.master_seed, path_index);
    let mut b = [[x0[0], 0.0, 0.0], [x0[1], 0.0, 0.0]];
    let mut x = Vec::with_capacity(grid.len());
    x.push(x0);
    for w in grid.times().windows(2) {
        let sh = (w[1] - w[0]).sqrt();
        for bm in b.iter_mut() {
            for c in bm.iter_mut() {
                *c += sh * rng.sample::<f64, _>(StandardNormal);
            }
        }
        x.push(b.map(|v| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()));
    }
    Ok(SimOutcome {
        path: SsmpPath::new(grid, x, None)?,
        wall_rejections: 0,
    })
}

struct DunklSsmp {
    roots: &'static [[f64; 2]],
    k: f64,
    delta: f64,
    rejections: u64,
}

impl DunklSsmp {
    fn try_step(&self, x: [f64; 2], dw: [f64; 2], h: f64) -> Option<[f64; 2]> {
        let mut drift = [0.0; 2];
        for r in self.roots {
            let p = r[0] * x[0] + r[1] * x[1];
            drift[0] += self.k * r[0] / p;
            drift[1] += self.k * r[1] / p;
        }
        let nx = [x[0] + dw[0] + drift[0] * h, x[1] + dw[1] + drift[1] * h];
        let n = nx[0].hypot(nx[1]);
        let inside = n.is_finite()
            && n > 0.0
            && self
                .roots
                .iter()
                .all(|r| r[0] * nx[0] + r[1] * nx[1] > self.delta * n);
        inside.then_some(nx)
    }

    fn advance(&mut self, x: &mut [f64; 2], dw: [f64; 2], h: f64, depth: u32, rng: &mut PathRng) -> bool {
        if let Some(next) = self.try_step(*x, dw, h) {
            *x = next;
            return true;
        }
        if depth >= MAX_HALVINGS {
            return false;
        }
        self.rejections += 1;
        let (first, second) = bridge_split(dw, h, rng);
        self.advance(x, first, 0.5 * h, depth + 1, rng)
            && self.advance(x, second, 0.5 * h, depth + 1, rng)
    }
}

/// One path of the radial Dunkl process `dX = dW + Σ k α / ⟨α, X⟩ dt`.
pub fn simulate_dunkl_ssmp(
    config: &SimulationConfig,
    x0: [f64; 2],
    path_index: u64,
) -> Result<SimOutcome<SsmpPath>> {
    config.validate()?;
    let ModelSpec::RadialDunkl { root_system, k } = config.model else {
        return Err(Error::validation("simulate_dunkl_ssmp needs a radial Dunkl model"));
    };
    let dir = UnitVector::new(x0)
        .map_err(|_| Error::validation(format!("x0 {x0:?} must be nonzero")))?;
    check_start(&config.model, dir, config.wall_delta)?;
    let grid = config.grid()?;
    let mut rng = seed_stream(config.master_seed, path_index);
    let mut sim = DunklSsmp {
        roots: root_system.positive_roots(),
        k,
        delta: config.wall_delta,
        rejections: 0,
    };
    let mut state = x0;
    let mut xs = Vec::with_capacity(grid.len());
    xs.push(state);
    for w in grid.times().windows(2) {
        let h = w[1] - w[0];
        let sh = h.sqrt();
        let dw = [
            sh * rng.sample::<f64, _>(StandardNormal),
            sh * rng.sample::<f64, _>(StandardNormal),
        ];
        if !sim.advance(&mut state, dw, h, 0, &mut rng) {
            return Err(Error::WallRetryExhausted {
                path_index,
                time: w[0],
            });
        }
        xs.push(state);
    }
    Ok(SimOutcome {
        path: SsmpPath::new(grid, xs, None)?,
        wall_rejections: sim.rejections,
    })
}

/// One self-similar path of whatever continuous model the configuration names.
pub fn simulate_ssmp(
    config: &SimulationConfig,
    x0: [f64; 2],
    path_index: u64,
) -> Result<SimOutcome<SsmpPath>> {
    match config.model {
        ModelSpec::FreeBessel2D => simulate_free_bessel_ssmp(config, x0, path_index),
        ModelSpec::RadialDunkl { .. } => simulate_dunkl_ssmp(config, x0, path_index),
        ModelSpec::DiscreteOracle(_) => Err(Error::validation(
            "the discrete oracle has no self-similar counterpart",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::RootSystem;
    use crate::path::validate_map_path;

    fn cfg(model: ModelSpec, dt: f64, t_max: f64) -> SimulationConfig {
        SimulationConfig::new(model, dt, t_max, 1, 11)
    }

    #[test]
    fn bessel_map_is_deterministic_and_valid() {
        let c = cfg(ModelSpec::FreeBessel2D, 1e-3, 2.0);
        let th = ModelSpec::FreeBessel2D.default_theta0();
        let a = simulate_bessel_map(&c, th, 5).unwrap();
        let b = simulate_bessel_map(&c, th, 5).unwrap();
        assert_eq!(a.path, b.path);
        assert!(validate_map_path(&a.path).pass());
        let other = simulate_bessel_map(&c, th, 6).unwrap();
        assert_ne!(a.path.xi, other.path.xi);
    }

    #[test]
    fn bessel_map_rejects_wall_start() {
        let c = cfg(ModelSpec::FreeBessel2D, 1e-3, 1.0);
        let e = simulate_bessel_map(&c, UnitVector::from_raw([1.0, 0.0]), 0).unwrap_err();
        assert!(matches!(e, Error::Validation(_)));
    }

    #[test]
    fn dunkl_map_rejects_wall_start() {
        let m = ModelSpec::RadialDunkl { root_system: RootSystem::A1, k: 1.0 };
        let c = cfg(m, 1e-3, 1.0);
        let s = 0.5_f64.sqrt();
        assert!(simulate_dunkl_map(&c, UnitVector::from_raw([s, s]), 0).is_err());
    }

    #[test]
    fn dunkl_map_stays_in_chamber() {
        for rs in [RootSystem::A1, RootSystem::B2, RootSystem::C2, RootSystem::D2] {
            let m = ModelSpec::RadialDunkl { root_system: rs, k: 0.5 };
            let c = cfg(m.clone(), 1e-3, 3.0);
            let out = simulate_dunkl_map(&c, m.default_theta0(), 1).unwrap();
            assert!(validate_map_path(&out.path).pass());
            for th in &out.path.theta {
                m.check_in_arc(*th, 0.0).unwrap();
            }
        }
    }

    #[test]
    fn free_bessel_ssmp_starts_at_x0() {
        let c = cfg(ModelSpec::FreeBessel2D, 1e-2, 1.0);
        let out = simulate_free_bessel_ssmp(&c, [1.0, 2.0], 0).unwrap();
        assert_eq!(out.path.x[0], [1.0, 2.0]);
        assert_eq!(out.path.x.len(), 101);
    }

    #[test]
    fn bridge_split_preserves_sum() {
        let mut rng = seed_stream(1, 1);
        let (a, b) = bridge_split([0.3, -0.2], 0.01, &mut rng);
        assert!((a[0] + b[0] - 0.3).abs() < 1e-15);
        assert!((a[1] + b[1] + 0.2).abs() < 1e-15);
    }
}
