//! The Lamperti–Kiu correspondence between MAPs and planar self-similar
//! processes, `X_t = Θ_{τ_t} e^{ξ_{τ_t}}`, on sampled paths.
//!
//! Both clocks are integrated cell by cell in closed form. Forward, ξ is taken
//! piecewise linear in MAP time, so `∫ e^{αξ}` is exact on each cell. Backward,
//! `‖X‖^α` is taken piecewise linear in the self-similar clock, which is exactly
//! what the forward rule produces, so `∫ ‖X‖^{−α}` is exact on each cell too and
//! a roundtrip through the image grid returns the original path to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{MapPath, ScalarPath, SsmpPath, TimeGrid, UnitVector};

/// Norms below this are treated as the process having hit the origin.
pub const MIN_NORM: f64 = 1e-12;

/// `expm1(x)/x`, continuous at 0.
fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 + 0.5 * x
    } else {
        x.exp_m1() / x
    }
}

/// `ln(1+x)/x`, continuous at 0.
fn ln1p_ratio(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0 - 0.5 * x
    } else {
        x.ln_1p() / x
    }
}

/// How the integrand behaves inside a cell of the target axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellRule {
    /// `log` of the integrand is linear in the target variable; holds its node values.
    LogLinear(Vec<f64>),
    /// The reciprocal of the integrand is linear in the *source* variable;
    /// holds the reciprocal at the nodes.
    ReciprocalLinear(Vec<f64>),
}

/// Graph of a time change: `target = τ(source)` at paired nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeChangeTable {
    pub source_times: Vec<f64>,
    pub target_times: Vec<f64>,
    pub rule: CellRule,
}

/// A located query: cell index, offset into the cell on the target axis, and
/// the fraction of the cell's *interpolation* variable (target for log-linear
/// cells, source for reciprocal-linear cells) that has elapsed.
#[derive(Debug, Clone, Copy)]
struct Located {
    cell: usize,
    target: f64,
    frac: f64,
}

impl TimeChangeTable {
    /// Total mass of the integral, i.e. the largest admissible query.
    pub fn mass(&self) -> f64 {
        *self.source_times.last().unwrap_or(&0.0)
    }

    fn locate(&self, s: f64, what: &'static str) -> Result<Located> {
        let mass = self.mass();
        if !(s >= 0.0 && s <= mass * (1.0 + 1e-12)) {
            return Err(Error::OutOfRange {
                what,
                value: s,
                lo: 0.0,
                hi: mass,
            });
        }
        let n = self.source_times.len();
        let s = s.min(mass);
        // Last node with source ≤ s, kept inside the final cell.
        let i = (self.source_times.partition_point(|&v| v <= s).max(1) - 1).min(n - 2);
        let (s0, s1) = (self.source_times[i], self.source_times[i + 1]);
        let (t0, t1) = (self.target_times[i], self.target_times[i + 1]);
        let h = t1 - t0;
        let d = s - s0;
        let (u, frac) = match &self.rule {
            CellRule::LogLinear(l) => {
                let (la, dl) = (l[i], l[i + 1] - l[i]);
                let x = d * (-la).exp();
                let u = (x * ln1p_ratio(x * dl / h)).min(h);
                (u, u / h)
            }
            CellRule::ReciprocalLinear(c) => {
                let (ca, dc) = (c[i], c[i + 1] - c[i]);
                let u = (d * ca * expm1_ratio(d * dc / h)).min(h);
                let ds = s1 - s0;
                (u, if ds > 0.0 { d / ds } else { 0.0 })
            }
        };
        Ok(Located {
            cell: i,
            target: t0 + u,
            frac,
        })
    }

    /// `τ(source)` by exact inversion inside the cell.
    pub fn eval(&self, source: f64) -> Result<f64> {
        Ok(self.locate(source, "time")?.target)
    }

    /// Checks that both coordinates are nondecreasing.
    pub fn is_monotone(&self) -> bool {
        self.source_times.windows(2).all(|w| w[1] >= w[0])
            && self.target_times.windows(2).all(|w| w[1] >= w[0])
    }
}

fn lerp_theta(a: UnitVector, b: UnitVector, w: f64) -> UnitVector {
    let (a, b) = (a.components(), b.components());
    let v = [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])];
    // Antipodal neighbours have no defined midpoint; fall back to the nearer end.
    UnitVector::new(v).unwrap_or_else(|_| UnitVector::from_raw(if w < 0.5 { a } else { b }))
}

/// Cumulative `∫_0^s e^{αξ_u} du` on the path's grid.
pub fn exp_integral(map_path: &MapPath, alpha: f64) -> Result<ScalarPath> {
    check_alpha(alpha)?;
    let xi = &map_path.xi;
    let max = xi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(alpha * max).is_finite() || alpha * max > 700.0 {
        return Err(Error::Numerical(format!(
            "e^(alpha xi) overflows: max xi = {max}, alpha = {alpha}"
        )));
    }
    let times = map_path.grid.times();
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(xi.len());
    values.push(0.0);
    for i in 1..xi.len() {
        let h = times[i] - times[i - 1];
        let (la, lb) = (alpha * xi[i - 1], alpha * xi[i]);
        acc += h * la.exp() * expm1_ratio(lb - la);
        values.push(acc);
    }
    ScalarPath::new(map_path.grid.prefix(xi.len()), values)
}

/// Table of `τ_t`: source is the self-similar clock, target is MAP time.
pub fn tau_table(map_path: &MapPath, alpha: f64) -> Result<TimeChangeTable> {
    if map_path.len() < 2 {
        return Err(Error::validation("time change needs at least two samples"));
    }
    let integral = exp_integral(map_path, alpha)?;
    Ok(TimeChangeTable {
        source_times: integral.values,
        target_times: integral.grid.times().to_vec(),
        rule: CellRule::LogLinear(map_path.xi.iter().map(|v| alpha * v).collect()),
    })
}

/// `τ_t = inf{s : ∫_0^s e^{αξ_u} du > t}`.
pub fn time_change_tau(map_path: &MapPath, alpha: f64, t: f64) -> Result<f64> {
    tau_table(map_path, alpha)?.eval(t)
}

/// The grid of self-similar times `∫_0^{s_i} e^{αξ}` at the MAP grid points.
pub fn image_grid(table: &TimeChangeTable) -> Result<TimeGrid> {
    TimeGrid::from_times(table.source_times.clone())
}

/// `len` equally spaced points on `[0, total]`.
pub fn uniform_output_grid(total: f64, len: usize) -> Result<TimeGrid> {
    if len < 2 || !(total > 0.0 && total.is_finite()) {
        return Err(Error::validation(format!(
            "output grid needs len >= 2 and a positive span, got {len} points over {total}"
        )));
    }
    let step = total / (len - 1) as f64;
    let mut times: Vec<f64> = (0..len).map(|i| i as f64 * step).collect();
    times[len - 1] = total;
    TimeGrid::from_times(times)
}

/// `X_t = Θ_{τ_t} e^{ξ_{τ_t}}` at every output time. Output times past the
/// integral's mass are dead; `kill_index` marks the first of them.
pub fn map_to_ssmp(map_path: &MapPath, alpha: f64, output_grid: &TimeGrid) -> Result<SsmpPath> {
    let table = tau_table(map_path, alpha)?;
    let mass = table.mass();
    let mut x = Vec::with_capacity(output_grid.len());
    let mut kill_index = None;
    for (j, &t) in output_grid.times().iter().enumerate() {
        if t > mass * (1.0 + 1e-12) {
            kill_index = Some(j);
            break;
        }
        let loc = table.locate(t, "time")?;
        let i = loc.cell;
        let xi = map_path.xi[i] + loc.frac * (map_path.xi[i + 1] - map_path.xi[i]);
        let th = lerp_theta(map_path.theta[i], map_path.theta[i + 1], loc.frac);
        let r = xi.exp();
        x.push([th.x() * r, th.y() * r]);
    }
    SsmpPath::new(output_grid.clone(), x, kill_index)
}

/// Cumulative `∫_0^t ‖X_u‖^{−α} du` on the path's grid.
pub fn norm_integral(ssmp_path: &SsmpPath, alpha: f64) -> Result<ScalarPath> {
    check_alpha(alpha)?;
    let c = norm_powers(ssmp_path, alpha)?;
    let times = ssmp_path.grid.times();
    let mut acc = 0.0;
    let mut values = Vec::with_capacity(c.len());
    values.push(0.0);
    for i in 1..c.len() {
        let h = times[i] - times[i - 1];
        acc += h / c[i - 1] * ln1p_ratio((c[i] - c[i - 1]) / c[i - 1]);
        values.push(acc);
    }
    if !acc.is_finite() {
        return Err(Error::Numerical("norm integral is not finite".into()));
    }
    ScalarPath::new(ssmp_path.grid.prefix(c.len()), values)
}

fn norm_powers(ssmp_path: &SsmpPath, alpha: f64) -> Result<Vec<f64>> {
    ssmp_path
        .x
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let r = p[0].hypot(p[1]);
            if r < MIN_NORM || !r.is_finite() {
                Err(Error::Numerical(format!("norm {r:e} at index {i}")))
            } else {
                Ok(r.powf(alpha))
            }
        })
        .collect()
}

/// Table of `A_t`: source is MAP time, target is the self-similar clock.
pub fn a_table(ssmp_path: &SsmpPath, alpha: f64) -> Result<TimeChangeTable> {
    if ssmp_path.len() < 2 {
        return Err(Error::validation("time change needs at least two samples"));
    }
    let integral = norm_integral(ssmp_path, alpha)?;
    Ok(TimeChangeTable {
        source_times: integral.values,
        target_times: integral.grid.times().to_vec(),
        rule: CellRule::ReciprocalLinear(norm_powers(ssmp_path, alpha)?),
    })
}

/// `A_t = inf{s : ∫_0^s ‖X_u‖^{−α} du > t}`.
pub fn time_change_a(ssmp_path: &SsmpPath, alpha: f64, t: f64) -> Result<f64> {
    a_table(ssmp_path, alpha)?.eval(t)
}

/// `ξ_t = log ‖X_{A_t}‖`, `Θ_t = X_{A_t}/‖X_{A_t}‖` at every output time.
pub fn ssmp_to_map(ssmp_path: &SsmpPath, alpha: f64, output_grid: &TimeGrid) -> Result<MapPath> {
    let table = a_table(ssmp_path, alpha)?;
    let CellRule::ReciprocalLinear(c) = &table.rule else {
        unreachable!("a_table builds reciprocal-linear cells")
    };
    let mass = table.mass();
    let n_out = output_grid.len();
    let mut xi = Vec::with_capacity(n_out);
    let mut theta = Vec::with_capacity(n_out);
    let mut kill_index = None;
    for (j, &t) in output_grid.times().iter().enumerate() {
        if t > mass * (1.0 + 1e-12) {
            kill_index = Some(j);
            break;
        }
        let loc = table.locate(t, "time")?;
        let i = loc.cell;
        // ‖X‖^α is linear in the self-similar clock across the cell.
        let h = table.target_times[i + 1] - table.target_times[i];
        let w = if h > 0.0 { (loc.target - table.target_times[i]) / h } else { 0.0 };
        let cw = c[i] + w * (c[i + 1] - c[i]);
        xi.push(cw.ln() / alpha);
        let (a, b) = (ssmp_path.x[i], ssmp_path.x[i + 1]);
        let dir = [a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])];
        theta.push(
            UnitVector::new(dir)
                .map_err(|_| Error::Numerical(format!("direction vanishes near index {i}")))?,
        );
    }
    MapPath::new(output_grid.clone(), xi, theta, kill_index)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(format!("alpha must be positive, got {alpha}")))
    }
}

/// Roundtrip discrepancy of map → ssmp → map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundtripError {
    /// `sup |ξ − ξ'|` over the original grid.
    pub xi_sup: f64,
    /// Largest angle between `Θ` and `Θ'`.
    pub theta_sup: f64,
}

/// Which self-similar grid the intermediate path is sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntermediateGrid {
    /// The images `∫_0^{s_i} e^{αξ}` of the MAP grid points.
    Image,
    /// A uniform grid with as many points as the MAP grid.
    Uniform,
}

/// Transforms `map_path` to a self-similar path and back onto the original grid.
pub fn roundtrip_error(map_path: &MapPath, alpha: f64, via: IntermediateGrid) -> Result<RoundtripError> {
    let table = tau_table(map_path, alpha)?;
    let mid = match via {
        IntermediateGrid::Image => image_grid(&table)?,
        IntermediateGrid::Uniform => uniform_output_grid(table.mass(), map_path.len())?,
    };
    let x = map_to_ssmp(map_path, alpha, &mid)?;
    let back_grid = map_path.grid.prefix(map_path.len());
    // Rounding can leave the last MAP time a hair beyond the backward mass.
    let back_mass = a_table(&x, alpha)?.mass();
    let mut times = back_grid.times().to_vec();
    if let Some(last) = times.last_mut() {
        *last = last.min(back_mass);
    }
    let back = ssmp_to_map(&x, alpha, &TimeGrid::from_times(times)?)?;
    let mut err = RoundtripError {
        xi_sup: 0.0,
        theta_sup: 0.0,
    };
    for i in 0..back.len() {
        err.xi_sup = err.xi_sup.max((back.xi[i] - map_path.xi[i]).abs());
        let (a, b) = (back.theta[i].components(), map_path.theta[i].components());
        let ang = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]).abs();
        err.theta_sup = err.theta_sup.max(ang);
    }
    if back.len() < map_path.len() {
        err.xi_sup = f64::INFINITY;
    }
    Ok(err)
}
