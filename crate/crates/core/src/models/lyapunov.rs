//! Lyapunov functions and the modulator generator
//! `ℒ = Σ b_i ∂_i + ½ Σ a_ij ∂_i ∂_j` with `a = σσᵀ = σ`.
//!
//! Three routes to `ℒV` are kept side by side:
//! * [`lyapunov_lv_analytic`]: the published closed forms, evaluated as printed;
//! * [`apply_generator`]: central finite differences of `V` combined with the
//!   model coefficients;
//! * [`lyapunov_lv_rederived`]: closed forms obtained by applying `ℒ` to `V`
//!   symbolically and simplifying with `x² + y² = 1`.
//!
//! The printed forms do not agree with the generator (see [`generator_check`]),
//! while the finite-difference and rederived routes agree to rounding.

use serde::{Deserialize, Serialize};

use super::{modulator_coeffs, ModelSpec, RootSystem};
use crate::error::{Error, Result};
use crate::path::UnitVector;

/// The Lyapunov function attached to each model:
/// `x³ + y³` for Bessel, A1, B2, C2 and `(x³ + y³)²` for D2.
pub fn lyapunov_function(model: &ModelSpec) -> Result<fn([f64; 2]) -> f64> {
    match model {
        ModelSpec::RadialDunkl {
            root_system: RootSystem::D2,
            ..
        } => Ok(|[x, y]| (x * x * x + y * y * y).powi(2)),
        ModelSpec::FreeBessel2D | ModelSpec::RadialDunkl { .. } => {
            Ok(|[x, y]| x * x * x + y * y * y)
        }
        ModelSpec::DiscreteOracle(_) => Err(Error::validation(
            "the discrete oracle has no Lyapunov function",
        )),
    }
}

/// The published closed form of `ℒV`, evaluated verbatim.
pub fn lyapunov_lv_analytic(model: &ModelSpec, theta: UnitVector, wall_delta: f64) -> Result<f64> {
    model.check_in_arc(theta, wall_delta)?;
    let [x, y] = theta.components();
    let s = x + y;
    let p = x * y;
    let v = match *model {
        ModelSpec::FreeBessel2D => 0.5 * s * (-21.0 + 54.0 * p),
        ModelSpec::RadialDunkl { root_system, k } => match root_system {
            RootSystem::A1 => 1.5 * s * ((4.0 * k + 2.0) * p - 1.0) + s * (12.0 * p - 3.0),
            RootSystem::B2 => {
                6.0 * k / s * (8.0 * p * p - 1.0) - 1.5 * s * (x - y).powi(2)
                    + s * (12.0 * p - 3.0)
            }
            RootSystem::C2 => {
                12.0 * k / s * (6.0 * p * p - 1.0) - 1.5 * (x - y).powi(2) * s
                    + s * (12.0 * p - 3.0)
            }
            RootSystem::D2 => {
                48.0 * k * p * p * (1.0 - p)
                    + 3.0 * (4.0 * p * p - 1.0) * (1.0 - p)
                    + 6.0 * s * s * (1.0 - p) * (4.0 * p - 1.0)
                    + s * (12.0 * p - 3.0)
            }
        },
        ModelSpec::DiscreteOracle(_) => {
            return Err(Error::validation("the discrete oracle has no generator"))
        }
    };
    Ok(v)
}

/// `ℒV` obtained by applying the generator to `V` symbolically (valid on the circle).
pub fn lyapunov_lv_rederived(
    model: &ModelSpec,
    theta: UnitVector,
    wall_delta: f64,
) -> Result<f64> {
    model.check_in_arc(theta, wall_delta)?;
    let [x, y] = theta.components();
    let s = x + y;
    let p = x * y;
    let v = match *model {
        ModelSpec::FreeBessel2D => -1.5 * s * (5.0 * x * x - 7.0 * p + 5.0 * y * y - 2.0),
        ModelSpec::RadialDunkl { root_system, k } => match root_system {
            RootSystem::A1 => 1.5 * s * (2.0 * k * p - x * x + 3.0 * p - y * y),
            // The (1,0)/(0,1) and (2,0)/(0,2) roots contribute the same A, so B2 = C2.
            RootSystem::B2 | RootSystem::C2 => {
                let (x2, y2) = (x * x, y * y);
                3.0 * (-2.0 * k * x2 * x2 + 12.0 * k * x2 * y2 - 2.0 * k * y2 * y2 - x2 * x2
                    + x2 * p
                    + 4.0 * x2 * y2
                    + p * y2
                    - y2 * y2)
                    / (2.0 * s)
            }
            RootSystem::D2 => {
                let (x2, y2) = (x * x, y * y);
                24.0 * k * x2 * y2 * (x2 - p + y2) - 3.0 * x2 * x2 * x2
                    + 6.0 * x2 * x2 * p
                    + 15.0 * x2 * x2 * y2
                    - 24.0 * p * p * p
                    + 15.0 * x2 * y2 * y2
                    + 6.0 * p * y2 * y2
                    - 3.0 * y2 * y2 * y2
            }
        },
        ModelSpec::DiscreteOracle(_) => {
            return Err(Error::validation("the discrete oracle has no generator"))
        }
    };
    Ok(v)
}

/// `ℒV(θ)` by central finite differences of step `h`.
///
/// Asserts numerically that `σσᵀ = σ` at `θ` before using `a = σ`.
pub fn apply_generator(
    model: &ModelSpec,
    v: impl Fn([f64; 2]) -> f64,
    theta: UnitVector,
    h: f64,
    wall_delta: f64,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::validation(format!("finite-difference step must be positive, got {h}")));
    }
    let c = modulator_coeffs(model, theta, wall_delta)?;
    let s = c.diffusion;
    let mut idem = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            let ss = s[i][0] * s[j][0] + s[i][1] * s[j][1];
            idem = idem.max((ss - s[i][j]).abs());
        }
    }
    if idem > 1e-12 {
        return Err(Error::Numerical(format!("sigma is not idempotent: |σσᵀ − σ| = {idem:e}")));
    }

    let [x, y] = theta.components();
    let f = |dx: f64, dy: f64| v([x + dx, y + dy]);
    let f0 = f(0.0, 0.0);
    let dx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
    let dy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
    let dxx = (f(h, 0.0) - 2.0 * f0 + f(-h, 0.0)) / (h * h);
    let dyy = (f(0.0, h) - 2.0 * f0 + f(0.0, -h)) / (h * h);
    let dxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);

    Ok(c.drift[0] * dx
        + c.drift[1] * dy
        + 0.5 * (s[0][0] * dxx + 2.0 * s[0][1] * dxy + s[1][1] * dyy))
}

/// One point of a generator comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorCheck {
    pub angle: f64,
    pub analytic: f64,
    pub finite_difference: f64,
    pub rederived: f64,
    /// `|fd − analytic| / (1 + |analytic|)`.
    pub rel_error_analytic: f64,
    /// `|fd − rederived| / (1 + |rederived|)`.
    pub rel_error_rederived: f64,
}

/// Comparison of the published `ℒV` with the finite-difference generator over
/// quasi-random arc points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub model: String,
    pub tolerance: f64,
    pub points: Vec<GeneratorCheck>,
    pub max_rel_error_analytic: f64,
    pub max_rel_error_rederived: f64,
    /// Largest `ℒV` (published form) on the check points and where it occurs.
    pub sup_analytic: f64,
    pub sup_angle: f64,
    /// True when the published form agrees with the finite-difference value.
    pub analytic_agrees: bool,
}

/// Van der Corput sequence in base 2.
fn van_der_corput(mut i: u64) -> f64 {
    let mut f = 0.5;
    let mut r = 0.0;
    while i > 0 {
        if i & 1 == 1 {
            r += f;
        }
        i >>= 1;
        f *= 0.5;
    }
    r
}

/// Compare the three `ℒV` routes at `n_points` low-discrepancy points of the
/// arc, keeping `margin` (in angle) away from its ends.
pub fn generator_check(
    model: &ModelSpec,
    n_points: usize,
    h: f64,
    margin: f64,
    tolerance: f64,
) -> Result<GeneratorReport> {
    let v = lyapunov_function(model)?;
    let (lo, hi) = model.arc();
    let (lo, hi) = (lo + margin, hi - margin);
    if !(hi > lo) {
        return Err(Error::validation("margin leaves no arc to sample"));
    }
    let mut points = Vec::with_capacity(n_points);
    for i in 1..=n_points as u64 {
        let angle = lo + van_der_corput(i) * (hi - lo);
        let th = UnitVector::from_angle(angle);
        let analytic = lyapunov_lv_analytic(model, th, 0.0)?;
        let rederived = lyapunov_lv_rederived(model, th, 0.0)?;
        let fd = apply_generator(model, v, th, h, 0.0)?;
        points.push(GeneratorCheck {
            angle,
            analytic,
            finite_difference: fd,
            rederived,
            rel_error_analytic: (fd - analytic).abs() / (1.0 + analytic.abs()),
            rel_error_rederived: (fd - rederived).abs() / (1.0 + rederived.abs()),
        });
    }
    let max_a = points.iter().map(|p| p.rel_error_analytic).fold(0.0, f64::max);
    let max_r = points.iter().map(|p| p.rel_error_rederived).fold(0.0, f64::max);
    let (sup_analytic, sup_angle) = points
        .iter()
        .map(|p| (p.analytic, p.angle))
        .fold((f64::NEG_INFINITY, f64::NAN), |a, b| if b.0 > a.0 { b } else { a });
    Ok(GeneratorReport {
        model: model.label(),
        tolerance,
        points,
        max_rel_error_analytic: max_a,
        max_rel_error_rederived: max_r,
        sup_analytic,
        sup_angle,
        analytic_agrees: max_a <= tolerance,
    })
}

/// Supremum of the published `ℒV` over the open arc, by a dense scan refined
/// with golden-section search around the best scan point.
pub fn analytic_sup(model: &ModelSpec, margin: f64) -> Result<(f64, f64)> {
    let (lo, hi) = model.arc();
    let (lo, hi) = (lo + margin, hi - margin);
    if !(hi > lo) {
        return Err(Error::validation("margin leaves no arc to sample"));
    }
    let f = |a: f64| lyapunov_lv_analytic(model, UnitVector::from_angle(a), 0.0);
    let n = 10_000;
    let step = (hi - lo) / n as f64;
    let mut best = (f64::NEG_INFINITY, lo);
    for i in 0..=n {
        let a = lo + i as f64 * step;
        let v = f(a)?;
        if v > best.0 {
            best = (v, a);
        }
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    while b - a > 1e-12 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c)? >= f(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let m = 0.5 * (a + b);
    let v = f(m)?;
    Ok(if v >= best.0 { (v, m) } else { best })
}
