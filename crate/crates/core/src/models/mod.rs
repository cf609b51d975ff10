//! Concrete planar models: the modulator of a free two-dimensional Bessel
//! process and the radial Dunkl processes of types A1, B2, C2 and D2.
//!
//! Both modulators live on an open arc of the unit circle and share the
//! diffusion matrix `σ(x, y) = [[y², −xy], [−xy, x²]]`, the projection onto the
//! tangent line. Only the drifts differ.

mod lyapunov;
mod simulate;

pub use lyapunov::{
    analytic_sup, apply_generator, generator_check, lyapunov_function, lyapunov_lv_analytic,
    lyapunov_lv_rederived, GeneratorCheck, GeneratorReport,
};
pub use simulate::{
    simulate_bessel_map, simulate_dunkl_map, simulate_dunkl_ssmp, simulate_free_bessel_ssmp,
    simulate_map, simulate_ssmp, SimOutcome, MAX_HALVINGS,
};

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::OracleSpec;
use crate::path::UnitVector;

/// Default distance from a wall below which a state is rejected.
pub const DEFAULT_WALL_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootSystem {
    A1,
    B2,
    C2,
    D2,
}

impl RootSystem {
    pub fn positive_roots(self) -> &'static [[f64; 2]] {
        match self {
            RootSystem::A1 => &[[1.0, -1.0]],
            RootSystem::B2 => &[[1.0, -1.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
            RootSystem::C2 => &[[1.0, -1.0], [1.0, 1.0], [2.0, 0.0], [0.0, 2.0]],
            RootSystem::D2 => &[[1.0, -1.0], [1.0, 1.0]],
        }
    }

    /// `γ = k · |R₊|`; the radial part is a Bessel process of dimension `2 + 2γ`.
    pub fn gamma(self, k: f64) -> f64 {
        k * self.positive_roots().len() as f64
    }

    /// Open arc `{⟨α, θ⟩ > 0 for all α ∈ R₊}` as an angle interval.
    pub fn arc(self) -> (f64, f64) {
        match self {
            RootSystem::A1 => (-3.0 * FRAC_PI_4, FRAC_PI_4),
            RootSystem::B2 | RootSystem::C2 => (0.0, FRAC_PI_4),
            RootSystem::D2 => (-FRAC_PI_4, FRAC_PI_4),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RootSystem::A1 => "A1",
            RootSystem::B2 => "B2",
            RootSystem::C2 => "C2",
            RootSystem::D2 => "D2",
        }
    }
}

/// Which process to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    FreeBessel2D,
    RadialDunkl { root_system: RootSystem, k: f64 },
    DiscreteOracle(OracleSpec),
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::FreeBessel2D => Ok(()),
            ModelSpec::RadialDunkl { k, .. } => {
                if k.is_finite() && *k >= 0.5 {
                    Ok(())
                } else {
                    Err(Error::validation(format!("radial Dunkl needs k >= 1/2, got {k}")))
                }
            }
            ModelSpec::DiscreteOracle(spec) => spec.validate(),
        }
    }

    /// Angle interval of the modulator's open arc.
    pub fn arc(&self) -> (f64, f64) {
        match self {
            ModelSpec::FreeBessel2D => (0.0, FRAC_PI_2),
            ModelSpec::RadialDunkl { root_system, .. } => root_system.arc(),
            // The two modulator states sit at angles 0 and π/2.
            ModelSpec::DiscreteOracle(_) => (-FRAC_PI_4, 3.0 * FRAC_PI_4),
        }
    }

    /// Midpoint of the arc, the default starting direction.
    pub fn default_theta0(&self) -> UnitVector {
        let (lo, hi) = self.arc();
        UnitVector::from_angle(0.5 * (lo + hi))
    }

    /// Short label used in file metadata and CLI output.
    pub fn label(&self) -> String {
        match self {
            ModelSpec::FreeBessel2D => "free-bessel".into(),
            ModelSpec::RadialDunkl { root_system, k } => {
                format!("dunkl-{}(k={k})", root_system.name().to_lowercase())
            }
            ModelSpec::DiscreteOracle(_) => "oracle".into(),
        }
    }

    /// Check that `theta` lies at least `wall_delta` inside the arc.
    pub fn check_in_arc(&self, theta: UnitVector, wall_delta: f64) -> Result<()> {
        let [x, y] = theta.components();
        match self {
            ModelSpec::FreeBessel2D => {
                if !(x > wall_delta) {
                    return Err(Error::Wall { what: "x".into(), value: x });
                }
                if !(y > wall_delta) {
                    return Err(Error::Wall { what: "y".into(), value: y });
                }
                Ok(())
            }
            ModelSpec::RadialDunkl { root_system, .. } => {
                for a in root_system.positive_roots() {
                    let p = a[0] * x + a[1] * y;
                    if !(p > wall_delta) {
                        return Err(Error::Wall {
                            what: format!("<{:?}, theta>", a),
                            value: p,
                        });
                    }
                }
                Ok(())
            }
            ModelSpec::DiscreteOracle(_) => Ok(()),
        }
    }
}

/// Drift vector and diffusion matrix of a modulator at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientPair {
    pub drift: [f64; 2],
    pub diffusion: [[f64; 2]; 2],
}

/// `σ(x, y) = [[y², −xy], [−xy, x²]]`.
pub fn modulator_diffusion(theta: UnitVector) -> [[f64; 2]; 2] {
    let [x, y] = theta.components();
    [[y * y, -x * y], [-x * y, x * x]]
}

/// Modulator coefficients of the free Bessel model,
/// `b = (1/x − 5x/2, 1/y − 5y/2)`.
pub fn bessel_modulator_coeffs(theta: UnitVector, wall_delta: f64) -> Result<CoefficientPair> {
    ModelSpec::FreeBessel2D.check_in_arc(theta, wall_delta)?;
    let [x, y] = theta.components();
    Ok(CoefficientPair {
        drift: [1.0 / x - 2.5 * x, 1.0 / y - 2.5 * y],
        diffusion: modulator_diffusion(theta),
    })
}

/// `A_i = Σ_{α∈R₊} k α_i / ⟨α, θ⟩`.
pub fn dunkl_a(theta: UnitVector, rs: RootSystem, k: f64, wall_delta: f64) -> Result<[f64; 2]> {
    let [x, y] = theta.components();
    let mut a = [0.0; 2];
    for r in rs.positive_roots() {
        let p = r[0] * x + r[1] * y;
        if !(p.abs() > wall_delta) {
            return Err(Error::Wall {
                what: format!("<{:?}, theta>", r),
                value: p,
            });
        }
        a[0] += k * r[0] / p;
        a[1] += k * r[1] / p;
    }
    Ok(a)
}

/// Modulator drift `A_i − θ_i (θ·A) − θ_i / 2` of the radial Dunkl model.
pub fn dunkl_modulator_drift(
    theta: UnitVector,
    rs: RootSystem,
    k: f64,
    wall_delta: f64,
) -> Result<[f64; 2]> {
    let a = dunkl_a(theta, rs, k, wall_delta)?;
    Ok(dunkl_drift_from_a(theta.components(), a))
}

#[inline]
pub(crate) fn dunkl_drift_from_a(th: [f64; 2], a: [f64; 2]) -> [f64; 2] {
    let ta = th[0] * a[0] + th[1] * a[1];
    [a[0] - th[0] * ta - 0.5 * th[0], a[1] - th[1] * ta - 0.5 * th[1]]
}

/// Ordinate drift `Σ_i θ_i A_i + n − 2`. Only the planar case `n = 2` exists here.
pub fn dunkl_ordinate_drift(
    theta: UnitVector,
    rs: RootSystem,
    k: f64,
    n: usize,
    wall_delta: f64,
) -> Result<f64> {
    if n != 2 {
        return Err(Error::validation(format!("only n = 2 is supported, got {n}")));
    }
    let a = dunkl_a(theta, rs, k, wall_delta)?;
    let [x, y] = theta.components();
    Ok(x * a[0] + y * a[1] + n as f64 - 2.0)
}

/// Modulator coefficients for any continuous model.
pub fn modulator_coeffs(
    model: &ModelSpec,
    theta: UnitVector,
    wall_delta: f64,
) -> Result<CoefficientPair> {
    match model {
        ModelSpec::FreeBessel2D => bessel_modulator_coeffs(theta, wall_delta),
        ModelSpec::RadialDunkl { root_system, k } => {
            model.check_in_arc(theta, wall_delta)?;
            Ok(CoefficientPair {
                drift: dunkl_modulator_drift(theta, *root_system, *k, wall_delta)?,
                diffusion: modulator_diffusion(theta),
            })
        }
        ModelSpec::DiscreteOracle(_) => Err(Error::validation(
            "the discrete oracle has no diffusion coefficients",
        )),
    }
}
