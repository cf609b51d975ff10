//! Path functionals from fluctuation theory: running extrema, the reflected
//! process, ε-excursions from the supremum, ladder samples, occupation
//! histograms and Laplace-transform estimators for the last passage times ḡ
//! and g̱. Descending quantities are the ascending ones of `(−ξ, Θ)`.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{MapPath, ScalarPath, UnitVector};
use crate::rng::{derive_seed, seed_stream};
use crate::stats::mean_sd;

/// Prefix maximum and prefix minimum.
pub fn running_extrema(path: &ScalarPath) -> (ScalarPath, ScalarPath) {
    let mut hi = Vec::with_capacity(path.len());
    let mut lo = Vec::with_capacity(path.len());
    let (mut m, mut n) = (f64::NEG_INFINITY, f64::INFINITY);
    for &v in &path.values {
        m = m.max(v);
        n = n.min(v);
        hi.push(m);
        lo.push(n);
    }
    let wrap = |values| ScalarPath {
        grid: path.grid.clone(),
        values,
    };
    (wrap(hi), wrap(lo))
}

/// `U_t = sup_{s≤t} ξ_s − ξ_t`.
pub fn reflected_process(path: &ScalarPath) -> ScalarPath {
    let mut m = f64::NEG_INFINITY;
    let values = path
        .values
        .iter()
        .map(|&v| {
            m = m.max(v);
            m - v
        })
        .collect();
    ScalarPath {
        grid: path.grid.clone(),
        values,
    }
}

/// Last grid index `≤ end` at which `sign·ξ` is within `eps` of its running maximum.
fn last_index_at_max(values: &[f64], end: usize, sign: f64, eps: f64) -> usize {
    let mut m = f64::NEG_INFINITY;
    let mut last = 0;
    for (i, &v) in values[..=end].iter().enumerate() {
        let v = sign * v;
        m = m.max(v);
        if m - v <= eps {
            last = i;
        }
    }
    last
}

/// `ḡ_t`: the largest grid time `s ≤ t` with `U_s ≤ eps`.
pub fn last_time_at_supremum(path: &ScalarPath, t: f64, eps: f64) -> Result<f64> {
    let k = path.grid.index_at_or_before(t)?;
    Ok(path.grid.times()[last_index_at_max(&path.values, k, 1.0, eps)])
}

/// `g̱_t`: the same for the process reflected at its infimum.
pub fn last_time_at_infimum(path: &ScalarPath, t: f64, eps: f64) -> Result<f64> {
    let k = path.grid.index_at_or_before(t)?;
    Ok(path.grid.times()[last_index_at_max(&path.values, k, -1.0, eps)])
}

/// A maximal run of grid points where the reflected process exceeds ε.
/// `start_time` is the last zero-set point before the run and `end_time` the
/// first one after it; a run reaching the horizon is censored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub start_time: f64,
    pub end_time: Option<f64>,
    pub max_height: f64,
    pub lifetime: Option<f64>,
    pub censored: bool,
}

pub fn excursions(reflected: &ScalarPath, eps: f64) -> Vec<ExcursionRecord> {
    let times = reflected.grid.times();
    let mut out = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    let mut last_zero = 0.0;
    for (i, &u) in reflected.values.iter().enumerate() {
        if u > eps {
            let rec = open.get_or_insert((last_zero, 0.0));
            rec.1 = rec.1.max(u);
        } else {
            if let Some((start, height)) = open.take() {
                out.push(ExcursionRecord {
                    start_time: start,
                    end_time: Some(times[i]),
                    max_height: height,
                    lifetime: Some(times[i] - start),
                    censored: false,
                });
            }
            last_zero = times[i];
        }
    }
    if let Some((start, height)) = open {
        out.push(ExcursionRecord {
            start_time: start,
            end_time: None,
            max_height: height,
            lifetime: None,
            censored: true,
        });
    }
    out
}

/// One point of the ascending ladder process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    /// Real time of the zero-set point (the inverse local time).
    pub inverse_local_time: f64,
    /// Completed ε-excursions before this point.
    pub local_time: u64,
    /// Running supremum at this point.
    pub xi_plus: f64,
    pub theta_plus: UnitVector,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LadderSample {
    pub entries: Vec<LadderEntry>,
}

impl LadderSample {
    pub fn final_clock(&self) -> u64 {
        self.entries.last().map_or(0, |e| e.local_time)
    }
}

/// The ladder process read off the ε-zero set of the reflected path.
pub fn ladder_samples(map_path: &MapPath, eps: f64) -> LadderSample {
    let times = map_path.grid.times();
    let mut entries = Vec::new();
    let mut m = f64::NEG_INFINITY;
    let mut clock = 0;
    let mut away = false;
    for (i, &v) in map_path.xi.iter().enumerate() {
        m = m.max(v);
        if m - v <= eps {
            if away {
                clock += 1;
                away = false;
            }
            entries.push(LadderEntry {
                inverse_local_time: times[i],
                local_time: clock,
                xi_plus: m,
                theta_plus: map_path.theta[i],
            });
        } else {
            away = true;
        }
    }
    LadderSample { entries }
}

/// Last passage times and extrema of one path over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSummary {
    pub g_bar: f64,
    pub g_under: f64,
    pub sup: f64,
    pub inf: f64,
    pub horizon: f64,
}

/// Summary at the grid time at or before `t`.
pub fn summarize_at(map_path: &MapPath, t: f64, eps: f64) -> Result<FluctuationSummary> {
    let k = map_path.grid.index_at_or_before(t)?;
    if k >= map_path.len() {
        return Err(Error::OutOfRange {
            what: "time",
            value: t,
            lo: 0.0,
            hi: map_path.horizon(),
        });
    }
    Ok(summarize_prefix(map_path, k, eps))
}

/// Summary over the whole alive part of the path.
pub fn summarize(map_path: &MapPath, eps: f64) -> FluctuationSummary {
    summarize_prefix(map_path, map_path.len() - 1, eps)
}

fn summarize_prefix(map_path: &MapPath, k: usize, eps: f64) -> FluctuationSummary {
    let times = map_path.grid.times();
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut gb, mut gu) = (0, 0);
    for (i, &v) in map_path.xi[..=k].iter().enumerate() {
        hi = hi.max(v);
        lo = lo.min(v);
        if hi - v <= eps {
            gb = i;
        }
        if v - lo <= eps {
            gu = i;
        }
    }
    FluctuationSummary {
        g_bar: times[gb],
        g_under: times[gu],
        sup: hi,
        inf: lo,
        horizon: times[k],
    }
}

/// `ḡ_T` at each horizon of an increasing ladder, in one pass.
pub fn gbar_at_horizons(map_path: &MapPath, horizons: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mut ends = Vec::with_capacity(horizons.len());
    for &t in horizons {
        let k = map_path.grid.index_at_or_before(t)?;
        if k >= map_path.len() {
            return Err(Error::OutOfRange {
                what: "horizon",
                value: t,
                lo: 0.0,
                hi: map_path.horizon(),
            });
        }
        ends.push(k);
    }
    let times = map_path.grid.times();
    let mut out = vec![0.0; horizons.len()];
    let mut m = f64::NEG_INFINITY;
    let mut last = 0;
    let stop = ends.iter().copied().max().unwrap_or(0);
    for (i, &v) in map_path.xi[..=stop].iter().enumerate() {
        m = m.max(v);
        if m - v <= eps {
            last = i;
        }
        for (j, &e) in ends.iter().enumerate() {
            if e == i {
                out[j] = times[last];
            }
        }
    }
    Ok(out)
}

/// Last passage times read at independent exponential clocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpSamples {
    pub q: f64,
    pub g_bar: Vec<f64>,
    pub g_under: Vec<f64>,
    /// `e_q − ḡ_{e_q}`.
    pub since_sup: Vec<f64>,
    /// Clocks that rang after the path's horizon.
    pub rejections: u64,
}

/// `(ḡ_{e_q}, g̱_{e_q}, e_q − ḡ_{e_q})` for one path and one clock, or `None`
/// when the clock rings after the horizon.
pub fn g_at_clock(map_path: &MapPath, e_q: f64, eps: f64) -> Option<(f64, f64, f64)> {
    if e_q > map_path.horizon() {
        return None;
    }
    let s = summarize_at(map_path, e_q, eps).ok()?;
    Some((s.g_bar, s.g_under, e_q - s.g_bar))
}

fn check_horizon(horizon: f64, q: f64) -> Result<()> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::validation(format!("q must be positive, got {q}")));
    }
    if horizon < 10.0 / q {
        return Err(Error::validation(format!(
            "horizon {horizon} is shorter than 10/q = {}",
            10.0 / q
        )));
    }
    Ok(())
}

/// The `Exp(q)` clock attached to path `index`, from its own seed stream.
pub fn exponential_clock(master_seed: u64, index: u64, q: f64) -> Result<f64> {
    let clock = Exp::new(q).map_err(|e| Error::validation(e.to_string()))?;
    let mut rng = seed_stream(derive_seed(master_seed, "exp-clock"), index);
    Ok(clock.sample(&mut rng))
}

/// Reads each path at an independent `Exp(q)` time drawn from `rng`.
pub fn sample_g_at_exponential<R: Rng + ?Sized>(
    paths: &[MapPath],
    q: f64,
    eps: f64,
    rng: &mut R,
) -> Result<ExpSamples> {
    let mut out = ExpSamples {
        q,
        g_bar: Vec::with_capacity(paths.len()),
        g_under: Vec::with_capacity(paths.len()),
        since_sup: Vec::with_capacity(paths.len()),
        rejections: 0,
    };
    if let Some(p) = paths.first() {
        check_horizon(p.horizon(), q)?;
    }
    let clock = Exp::new(q).map_err(|e| Error::validation(e.to_string()))?;
    for p in paths {
        check_horizon(p.horizon(), q)?;
        match g_at_clock(p, clock.sample(rng), eps) {
            Some((gb, gu, gap)) => {
                out.g_bar.push(gb);
                out.g_under.push(gu);
                out.since_sup.push(gap);
            }
            None => out.rejections += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub lambda: f64,
    /// Rate of the exponential clock, when the samples were read at one.
    pub q: Option<f64>,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub rejection_count: u64,
}

/// Sample mean of `e^{−λ·g}` with its standard error.
pub fn laplace_estimate(samples: &[f64], lambda: f64) -> Result<LaplaceEstimate> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
    }
    if samples.is_empty() {
        return Err(Error::validation("laplace_estimate needs samples"));
    }
    let v: Vec<f64> = samples.iter().map(|g| (-lambda * g).exp()).collect();
    let (mean, sd) = mean_sd(&v);
    Ok(LaplaceEstimate {
        lambda,
        q: None,
        estimate: mean.clamp(0.0, 1.0),
        stderr: sd / (v.len() as f64).sqrt(),
        n_samples: v.len() as u64,
        rejection_count: 0,
    })
}

impl ExpSamples {
    pub fn laplace_gbar(&self, lambda: f64) -> Result<LaplaceEstimate> {
        self.tag(laplace_estimate(&self.g_bar, lambda)?)
    }

    pub fn laplace_gunder(&self, lambda: f64) -> Result<LaplaceEstimate> {
        self.tag(laplace_estimate(&self.g_under, lambda)?)
    }

    fn tag(&self, mut e: LaplaceEstimate) -> Result<LaplaceEstimate> {
        e.q = Some(self.q);
        e.rejection_count = self.rejections;
        Ok(e)
    }
}

/// Grid of `Ê[e^{−λ ḡ_T}]` over a decreasing λ ladder and increasing horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalMassEstimate {
    pub lambda_grid: Vec<f64>,
    pub horizons: Vec<f64>,
    /// `laplace_matrix[i][j]` is the estimate at `lambda_grid[i]`, `horizons[j]`.
    pub laplace_matrix: Vec<Vec<f64>>,
    pub stderr_matrix: Vec<Vec<f64>>,
    /// Estimates rise as λ falls, at every horizon.
    pub monotone_in_lambda: bool,
    /// Estimates fall as T grows, at every λ.
    pub monotone_in_horizon: bool,
    /// Value at the smallest λ and largest horizon.
    pub proxy_value: f64,
}

/// Builds the λ × T matrix from per-path `ḡ_T` ladders (one row per path, one
/// column per horizon, as produced by [`gbar_at_horizons`]).
pub fn final_excursion_mass_estimate(
    gbar_by_path: &[Vec<f64>],
    lambda_grid: &[f64],
    horizons: &[f64],
) -> Result<FinalMassEstimate> {
    if lambda_grid.is_empty() || horizons.is_empty() {
        return Err(Error::validation("lambda grid and horizons must be nonempty"));
    }
    if lambda_grid.iter().any(|l| !(*l > 0.0)) || lambda_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::validation("lambda grid must be positive and strictly decreasing"));
    }
    if horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("horizons must be strictly increasing"));
    }
    if gbar_by_path.iter().any(|r| r.len() != horizons.len()) {
        return Err(Error::validation("every path needs one g_bar per horizon"));
    }
    let mut matrix = vec![vec![0.0; horizons.len()]; lambda_grid.len()];
    let mut stderr = matrix.clone();
    for (i, &lambda) in lambda_grid.iter().enumerate() {
        for j in 0..horizons.len() {
            let col: Vec<f64> = gbar_by_path.iter().map(|r| r[j]).collect();
            let e = laplace_estimate(&col, lambda)?;
            matrix[i][j] = e.estimate;
            stderr[i][j] = e.stderr;
        }
    }
    let tol = 1e-12;
    let monotone_in_lambda = (0..horizons.len())
        .all(|j| (1..lambda_grid.len()).all(|i| matrix[i][j] + tol >= matrix[i - 1][j]));
    let monotone_in_horizon = matrix
        .iter()
        .all(|row| row.windows(2).all(|w| w[1] <= w[0] + tol));
    let proxy_value = matrix[lambda_grid.len() - 1][horizons.len() - 1];
    Ok(FinalMassEstimate {
        lambda_grid: lambda_grid.to_vec(),
        horizons: horizons.to_vec(),
        laplace_matrix: matrix,
        stderr_matrix: stderr,
        monotone_in_lambda,
        monotone_in_horizon,
        proxy_value,
    })
}

/// Two-dimensional histogram over (angle of Θ⁺, ladder height ξ⁺).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationHistogram {
    pub angle_edges: Vec<f64>,
    pub height_edges: Vec<f64>,
    /// `masses[a][h]`.
    pub masses: Vec<Vec<f64>>,
}

fn clamp_bin(edges: &[f64], x: f64) -> usize {
    let n = edges.len() - 1;
    edges.partition_point(|&e| e <= x).saturating_sub(1).min(n - 1)
}

impl OccupationHistogram {
    pub fn new(angle_edges: Vec<f64>, height_edges: Vec<f64>) -> Result<Self> {
        for e in [&angle_edges, &height_edges] {
            if e.len() < 2 || e.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::validation("bin edges must be strictly increasing"));
            }
        }
        let masses = vec![vec![0.0; height_edges.len() - 1]; angle_edges.len() - 1];
        Ok(Self {
            angle_edges,
            height_edges,
            masses,
        })
    }

    pub fn add(&mut self, angle: f64, height: f64, mass: f64) {
        let a = clamp_bin(&self.angle_edges, angle);
        let h = clamp_bin(&self.height_edges, height);
        self.masses[a][h] += mass;
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().flatten().sum()
    }

    /// Flattened probabilities, row-major in angle.
    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.total();
        self.masses
            .iter()
            .flatten()
            .map(|m| if t > 0.0 { m / t } else { 0.0 })
            .collect()
    }

    /// Adds another histogram with the same bins.
    pub fn merge(&mut self, other: &OccupationHistogram) -> Result<()> {
        if self.angle_edges != other.angle_edges || self.height_edges != other.height_edges {
            return Err(Error::validation("occupation histograms have different bins"));
        }
        for (a, b) in self.masses.iter_mut().zip(&other.masses) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    /// Accumulates the clock increments of one ladder sample.
    pub fn accumulate(&mut self, sample: &LadderSample) {
        let mut prev = 0;
        for e in &sample.entries {
            if e.local_time > prev {
                self.add(
                    e.theta_plus.angle(),
                    e.xi_plus,
                    (e.local_time - prev) as f64,
                );
                prev = e.local_time;
            }
        }
    }
}

/// Empirical occupation measure of the ladder process: each unit of the
/// local-time clock is booked at the ladder point where it was completed.
pub fn occupation_measure(
    samples: &[LadderSample],
    angle_edges: Vec<f64>,
    height_edges: Vec<f64>,
) -> Result<OccupationHistogram> {
    let mut h = OccupationHistogram::new(angle_edges, height_edges)?;
    for s in samples {
        h.accumulate(s);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::make_time_grid;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn scalar(values: &[f64]) -> ScalarPath {
        let grid = make_time_grid(1.0, (values.len() - 1) as f64).unwrap();
        ScalarPath::new(grid, values.to_vec()).unwrap()
    }

    fn map(values: &[f64]) -> MapPath {
        let grid = make_time_grid(1.0, (values.len() - 1) as f64).unwrap();
        let n = values.len();
        MapPath::new(grid, values.to_vec(), vec![UnitVector::from_angle(0.0); n], None).unwrap()
    }

    const EXAMPLE: [f64; 5] = [0.0, 1.0, 0.5, 2.0, 1.0];

    #[test]
    fn extrema_example() {
        let (hi, lo) = running_extrema(&scalar(&EXAMPLE));
        assert_eq!(hi.values, vec![0.0, 1.0, 1.0, 2.0, 2.0]);
        assert_eq!(lo.values, vec![0.0; 5]);
        let up = scalar(&[0.0, 0.5, 1.5, 2.0]);
        assert_eq!(running_extrema(&up).0.values, up.values);
        let flat = scalar(&[0.3; 4]);
        let (hi, lo) = running_extrema(&flat);
        assert_eq!(hi.values, flat.values);
        assert_eq!(lo.values, flat.values);
    }

    #[test]
    fn reflected_example() {
        assert_eq!(
            reflected_process(&scalar(&EXAMPLE)).values,
            vec![0.0, 0.0, 0.5, 0.0, 1.0]
        );
        assert_eq!(reflected_process(&scalar(&[0.0, 1.0, 2.0])).values, vec![0.0; 3]);
    }

    #[test]
    fn last_passage_example() {
        let p = scalar(&EXAMPLE);
        assert_eq!(last_time_at_supremum(&p, 4.0, 1e-9).unwrap(), 3.0);
        assert_eq!(last_time_at_infimum(&p, 4.0, 1e-9).unwrap(), 0.0);
        let flat = scalar(&[1.0; 6]);
        assert_eq!(last_time_at_supremum(&flat, 3.0, 1e-9).unwrap(), 3.0);
        assert!(last_time_at_supremum(&p, 9.0, 1e-9).is_err());
    }

    #[test]
    fn excursion_example() {
        let u = scalar(&[0.0, 0.0, 0.5, 0.0, 1.0]);
        let ex = excursions(&u, 0.1);
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].start_time, 1.0);
        assert_eq!(ex[0].end_time, Some(3.0));
        assert_eq!(ex[0].max_height, 0.5);
        assert_eq!(ex[0].lifetime, Some(2.0));
        assert!(!ex[0].censored);
        assert_eq!(ex[1].start_time, 3.0);
        assert_eq!(ex[1].max_height, 1.0);
        assert!(ex[1].censored && ex[1].end_time.is_none());
        assert!(excursions(&scalar(&[0.0; 5]), 0.1).is_empty());
    }

    #[test]
    fn ladder_examples() {
        let l = ladder_samples(&map(&[0.0, 1.0, 0.5, 2.0]), 1e-9);
        let times: Vec<f64> = l.entries.iter().map(|e| e.inverse_local_time).collect();
        let heights: Vec<f64> = l.entries.iter().map(|e| e.xi_plus).collect();
        assert_eq!(times, vec![0.0, 1.0, 3.0]);
        assert_eq!(heights, vec![0.0, 1.0, 2.0]);
        assert_eq!(l.final_clock(), 1);
        let up = [0.0, 0.2, 0.9, 1.0];
        let l = ladder_samples(&map(&up), 1e-9);
        assert_eq!(l.entries.len(), 4);
        for (e, v) in l.entries.iter().zip(up) {
            assert_eq!(e.xi_plus, v);
        }
    }

    #[test]
    fn summary_and_ladder_of_horizons() {
        let p = map(&EXAMPLE);
        let s = summarize(&p, 1e-9);
        assert_eq!((s.g_bar, s.g_under, s.sup, s.inf, s.horizon), (3.0, 0.0, 2.0, 0.0, 4.0));
        let g = gbar_at_horizons(&p, &[1.0, 2.0, 4.0], 1e-9).unwrap();
        assert_eq!(g, vec![1.0, 1.0, 3.0]);
    }

    #[test]
    fn laplace_basics() {
        let e = laplace_estimate(&[0.3, 2.0, 5.0], 0.0).unwrap();
        assert_eq!(e.estimate, 1.0);
        let e = laplace_estimate(&[1.5; 10], 0.4).unwrap();
        assert_abs_diff_eq!(e.estimate, (-0.6_f64).exp(), epsilon = 1e-15);
        assert!(e.stderr < 1e-15);
        assert!(laplace_estimate(&[1.0], -1.0).is_err());
    }

    #[test]
    fn deterministic_drift_down_gives_one() {
        let grid = make_time_grid(0.01, 10.0).unwrap();
        let xi: Vec<f64> = grid.times().iter().map(|t| -t).collect();
        let n = xi.len();
        let p = MapPath::new(grid, xi, vec![UnitVector::from_angle(0.0); n], None).unwrap();
        let hs = [2.0, 5.0, 10.0];
        let rows = vec![gbar_at_horizons(&p, &hs, 1e-9).unwrap(); 3];
        let f = final_excursion_mass_estimate(&rows, &[1.0, 0.1, 0.01], &hs).unwrap();
        assert!(f.laplace_matrix.iter().flatten().all(|v| *v == 1.0));
        assert_eq!(f.proxy_value, 1.0);
        assert!(f.monotone_in_lambda && f.monotone_in_horizon);
        assert!(final_excursion_mass_estimate(&rows, &[0.1, 1.0], &hs).is_err());
    }

    #[test]
    fn large_q_pins_gbar_near_zero() {
        let grid = make_time_grid(0.01, 5.0).unwrap();
        let xi: Vec<f64> = grid.times().iter().map(|t| (3.0 * t).sin()).collect();
        let n = xi.len();
        let p = MapPath::new(grid, xi, vec![UnitVector::from_angle(0.0); n], None).unwrap();
        let paths = vec![p; 200];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let s = sample_g_at_exponential(&paths, 200.0, 1e-9, &mut rng).unwrap();
        assert_eq!(s.rejections, 0);
        assert!(s.g_bar.iter().all(|g| *g <= 0.05));
        assert!(sample_g_at_exponential(&paths, 1.0, 1e-9, &mut rng).is_err());
    }

    #[test]
    fn occupation_conserves_clock() {
        let l = ladder_samples(&map(&[0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 2.0, 1.0, 2.0]), 1e-9);
        assert_eq!(l.final_clock(), 3);
        let h = occupation_measure(&[l.clone(), l], vec![-1.0, 1.0], vec![-0.5, 0.5, 1.5, 2.5]).unwrap();
        assert_eq!(h.total(), 6.0);
        assert_eq!(h.masses[0], vec![2.0, 2.0, 2.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn walk() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-1.0f64..1.0, 2..80).prop_map(|steps| {
                let mut v = vec![0.0];
                for s in steps {
                    v.push(v.last().unwrap() + s);
                }
                v
            })
        }

        proptest! {
            #[test]
            fn reflection_and_gbar_properties(values in walk(), eps in 0.0f64..0.3) {
                let p = scalar(&values);
                let u = reflected_process(&p);
                prop_assert!(u.values.iter().all(|v| *v >= 0.0));
                let mut prev = 0.0;
                for &t in p.grid.times() {
                    let g = last_time_at_supremum(&p, t, eps).unwrap();
                    prop_assert!(g >= 0.0 && g <= t);
                    prop_assert!(g >= prev);
                    let k = p.grid.index_at_or_before(g).unwrap();
                    prop_assert!(u.values[k] <= eps);
                    prev = g;
                }
            }

            #[test]
            fn excursions_partition_grid(values in walk(), eps in 0.0f64..0.3) {
                let p = scalar(&values);
                let u = reflected_process(&p);
                let ex = excursions(&u, eps);
                let times = p.grid.times();
                let mut cover = vec![0u32; times.len()];
                for (i, v) in u.values.iter().enumerate() {
                    if *v <= eps {
                        cover[i] += 1;
                    }
                }
                for e in &ex {
                    prop_assert!(e.max_height > eps);
                    for (i, &t) in times.iter().enumerate() {
                        let inside = t > e.start_time && e.end_time.map_or(true, |end| t < end);
                        if inside {
                            cover[i] += 1;
                        }
                    }
                }
                prop_assert!(cover.iter().all(|c| *c == 1));
            }

            #[test]
            fn laplace_nonincreasing_in_lambda(samples in proptest::collection::vec(0.0f64..50.0, 1..40),
                                               a in 0.0f64..2.0, b in 0.0f64..2.0) {
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let e_lo = laplace_estimate(&samples, lo).unwrap().estimate;
                let e_hi = laplace_estimate(&samples, hi).unwrap().estimate;
                prop_assert!(e_hi <= e_lo + 1e-15);
            }

            #[test]
            fn ladder_heights_ascend(values in walk(), eps in 0.0f64..0.3) {
                let l = ladder_samples(&map(&values), eps);
                for w in l.entries.windows(2) {
                    prop_assert!(w[1].inverse_local_time >= w[0].inverse_local_time);
                    prop_assert!(w[1].xi_plus >= w[0].xi_plus);
                    prop_assert!(w[1].local_time >= w[0].local_time);
                }
            }
        }
    }
}
