//! Exact reference: a discrete-time MAP with a two-state modulator and ±1
//! ordinate steps, small enough to enumerate.
//!
//! Conventions shared by enumeration and simulation: the modulator starts in
//! state `s` with probability `initial_dist[s]`; step `j` (from time `j−1` to
//! `j`) goes up with probability `up_prob_by_state[M_{j−1}]`, after which the
//! modulator flips with probability `flip_prob`. Killing is geometric:
//! `P(G ≥ m) = (1 − kill_prob)^m`, and functionals are read at `min(G, n)`.
//! States 0 and 1 are embedded on the circle at angles 0 and π/2.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::path::{make_time_grid, MapPath, UnitVector};
use crate::fluctuation::{exponential_clock, ladder_samples, laplace_estimate, summarize};
use crate::rng::seed_stream;
use crate::stats::tv_distance_probs;

/// Largest horizon [`enumerate_discrete_map`] accepts.
pub const MAX_ENUMERATION_HORIZON: usize = 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub flip_prob: f64,
    pub up_prob_by_state: [f64; 2],
    pub horizon: usize,
    pub kill_prob: f64,
    #[serde(default = "uniform_start")]
    pub initial_dist: [f64; 2],
}

fn uniform_start() -> [f64; 2] {
    [0.5, 0.5]
}

impl OracleSpec {
    /// Fair i.i.d. ±1 walk (the modulator is irrelevant) without killing.
    pub fn fair_walk(horizon: usize) -> Self {
        Self {
            flip_prob: 0.5,
            up_prob_by_state: [0.5, 0.5],
            horizon,
            kill_prob: 0.0,
            initial_dist: uniform_start(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} = {p} is not a probability")))
            }
        };
        unit("flip_prob", self.flip_prob)?;
        unit("up_prob_by_state[0]", self.up_prob_by_state[0])?;
        unit("up_prob_by_state[1]", self.up_prob_by_state[1])?;
        unit("initial_dist[0]", self.initial_dist[0])?;
        unit("initial_dist[1]", self.initial_dist[1])?;
        if (self.initial_dist[0] + self.initial_dist[1] - 1.0).abs() > 1e-12 {
            return Err(Error::validation("initial_dist must sum to 1"));
        }
        if !(0.0..1.0).contains(&self.kill_prob) {
            return Err(Error::validation(format!("kill_prob = {} not in [0, 1)", self.kill_prob)));
        }
        if self.horizon == 0 {
            return Err(Error::validation("oracle horizon must be at least 1"));
        }
        Ok(())
    }

    /// Exponential rate whose integer part is the geometric killing time:
    /// `P(⌊e_q⌋ ≥ m) = e^{−qm} = (1 − kill_prob)^m`.
    pub fn equivalent_rate(&self) -> f64 {
        -(1.0 - self.kill_prob).ln()
    }

    pub fn state_direction(state: usize) -> UnitVector {
        if state == 0 {
            UnitVector::from_raw([1.0, 0.0])
        } else {
            UnitVector::from_angle(FRAC_PI_2)
        }
    }
}

/// Exact marginal laws of the path functionals, each indexed by value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTables {
    pub horizon: usize,
    /// `gbar[m] = P(ḡ = m)`: last time at the running supremum (ties count).
    pub gbar: Vec<f64>,
    /// `gunder[m] = P(g̱ = m)`.
    pub gunder: Vec<f64>,
    /// `sup[v] = P(sup = v)`.
    pub sup: Vec<f64>,
    /// `inf[v] = P(inf = −v)`.
    pub inf: Vec<f64>,
    /// `ladder_count[c]` = P(c strict ascending ladder epochs in `1..=T`).
    pub ladder_count: Vec<f64>,
    /// `ladder_epoch[j]` = P(`j` is a strict ascending ladder epoch, `j ≤ T`).
    pub ladder_epoch: Vec<f64>,
    /// `excursion_end[s][h]`: expected number of completed excursions below the
    /// supremum ending at height `h` with the modulator in state `s`.
    pub excursion_end: [Vec<f64>; 2],
    /// Total enumerated probability (1 up to rounding).
    pub total_probability: f64,
    /// Number of step sequences visited.
    pub sequences: u64,
}

impl OracleTables {
    pub fn table(&self, which: Functional) -> &[f64] {
        match which {
            Functional::GBar => &self.gbar,
            Functional::GUnder => &self.gunder,
        }
    }
}

/// Which last-passage time a Laplace transform refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Functional {
    GBar,
    GUnder,
}

struct Node {
    depth: usize,
    xi: i64,
    sup: i64,
    inf: i64,
    gbar: usize,
    gunder: usize,
    ladders: usize,
    below_sup: bool,
    fwd: [f64; 2],
}

struct Enumerator<'a> {
    spec: &'a OracleSpec,
    survive: Vec<f64>,
    out: OracleTables,
}

impl Enumerator<'_> {
    /// Weight of reading the functionals exactly at time `m`.
    fn stop_weight(&self, m: usize) -> f64 {
        let n = self.spec.horizon;
        if m == n {
            self.survive[n]
        } else {
            self.survive[m] * self.spec.kill_prob
        }
    }

    fn visit(&mut self, node: Node) {
        let p = node.fwd[0] + node.fwd[1];
        let m = node.depth;
        let w = p * self.stop_weight(m);
        if w > 0.0 {
            let o = &mut self.out;
            o.gbar[node.gbar] += w;
            o.gunder[node.gunder] += w;
            o.sup[node.sup as usize] += w;
            o.inf[(-node.inf) as usize] += w;
            o.ladder_count[node.ladders] += w;
            o.total_probability += w;
        }
        if m == self.spec.horizon {
            self.out.sequences += 1;
            return;
        }
        let sp = self.spec;
        for up in [true, false] {
            let mut fwd = [0.0; 2];
            for (s, &f) in node.fwd.iter().enumerate() {
                let step = if up {
                    sp.up_prob_by_state[s]
                } else {
                    1.0 - sp.up_prob_by_state[s]
                };
                let mass = f * step;
                fwd[s] += mass * (1.0 - sp.flip_prob);
                fwd[1 - s] += mass * sp.flip_prob;
            }
            if fwd[0] + fwd[1] == 0.0 {
                continue;
            }
            let j = m + 1;
            let xi = node.xi + if up { 1 } else { -1 };
            let reach = self.survive[j];
            let mut child = Node {
                depth: j,
                xi,
                sup: node.sup.max(xi),
                inf: node.inf.min(xi),
                gbar: node.gbar,
                gunder: node.gunder,
                ladders: node.ladders,
                below_sup: xi < node.sup,
                fwd,
            };
            if xi > node.sup {
                child.ladders += 1;
                self.out.ladder_epoch[j] += (fwd[0] + fwd[1]) * reach;
            }
            if xi >= node.sup {
                child.gbar = j;
                if node.below_sup {
                    for (s, &f) in fwd.iter().enumerate() {
                        self.out.excursion_end[s][xi as usize] += f * reach;
                    }
                }
            }
            if xi <= node.inf {
                child.gunder = j;
            }
            self.visit(child);
        }
    }
}

/// Exact laws of ḡ, g̱, sup, inf and ladder statistics by exhaustive
/// enumeration of all step sequences; the modulator is summed out along each
/// sequence with the forward recursion.
pub fn enumerate_discrete_map(spec: &OracleSpec) -> Result<OracleTables> {
    spec.validate()?;
    let n = spec.horizon;
    if n > MAX_ENUMERATION_HORIZON {
        return Err(Error::validation(format!(
            "enumeration horizon {n} exceeds {MAX_ENUMERATION_HORIZON}"
        )));
    }
    let survive: Vec<f64> = (0..=n).map(|m| (1.0 - spec.kill_prob).powi(m as i32)).collect();
    let zeros = || vec![0.0; n + 1];
    let mut e = Enumerator {
        spec,
        survive,
        out: OracleTables {
            horizon: n,
            gbar: zeros(),
            gunder: zeros(),
            sup: zeros(),
            inf: zeros(),
            ladder_count: zeros(),
            ladder_epoch: zeros(),
            excursion_end: [zeros(), zeros()],
            total_probability: 0.0,
            sequences: 0,
        },
    };
    e.visit(Node {
        depth: 0,
        xi: 0,
        sup: 0,
        inf: 0,
        gbar: 0,
        gunder: 0,
        ladders: 0,
        below_sup: false,
        fwd: spec.initial_dist,
    });
    Ok(e.out)
}

/// `E[e^{−λ·g}]` for `g` = ḡ or g̱ under the oracle law.
pub fn exact_laplace(spec: &OracleSpec, lambda: f64, which: Functional) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::validation(format!("lambda must be >= 0, got {lambda}")));
    }
    let t = enumerate_discrete_map(spec)?;
    Ok(laplace_from_table(t.table(which), lambda))
}

/// `Σ_m p_m e^{−λm}` for a table indexed by integer time.
pub fn laplace_from_table(table: &[f64], lambda: f64) -> f64 {
    table
        .iter()
        .enumerate()
        .map(|(m, p)| p * (-lambda * m as f64).exp())
        .sum()
}

/// One sampled oracle path on the integer grid `0..=horizon`, without killing.
pub fn simulate_discrete_path(spec: &OracleSpec, master_seed: u64, path_index: u64) -> Result<MapPath> {
    spec.validate()?;
    let n = spec.horizon;
    let mut rng = seed_stream(master_seed, path_index);
    let mut state = usize::from(rng.random::<f64>() >= spec.initial_dist[0]);
    let mut xi = Vec::with_capacity(n + 1);
    let mut theta = Vec::with_capacity(n + 1);
    let mut x = 0.0;
    xi.push(x);
    theta.push(OracleSpec::state_direction(state));
    for _ in 0..n {
        let up = rng.random::<f64>() < spec.up_prob_by_state[state];
        x += if up { 1.0 } else { -1.0 };
        if rng.random::<f64>() < spec.flip_prob {
            state = 1 - state;
        }
        xi.push(x);
        theta.push(OracleSpec::state_direction(state));
    }
    MapPath::new(make_time_grid(1.0, n as f64)?, xi, theta, None)
}

/// `n_paths` independent oracle paths, in path-index order.
pub fn simulate_discrete_map(
    spec: &OracleSpec,
    n_paths: u64,
    master_seed: u64,
    workers: usize,
) -> Result<Vec<MapPath>> {
    map_indexed(n_paths, workers, |i| simulate_discrete_path(spec, master_seed, i))
}

/// One Laplace-transform comparison of the equivalence suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCheck {
    pub which: Functional,
    pub lambda: f64,
    pub exact: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `|estimate − exact| ≤ 3·stderr`.
    pub within: bool,
}

/// Sampled pipeline versus exact enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub spec: OracleSpec,
    pub samples: u64,
    pub seed: u64,
    pub tv_tolerance: f64,
    pub gbar_tv: f64,
    pub gunder_tv: f64,
    pub ladder_count_tv: f64,
    pub occupation_tv: f64,
    pub laplace: Vec<LaplaceCheck>,
    /// Empirical `P(ḡ = m)`.
    pub empirical_gbar: Vec<f64>,
    pub pass: bool,
}

/// Per-sample functionals read at `min(G, n)`.
struct OracleDraw {
    gbar: usize,
    gunder: usize,
    ladders: usize,
    /// (state, height) at each completed excursion.
    ends: Vec<(usize, usize)>,
}

fn oracle_draw(spec: &OracleSpec, seed: u64, i: u64) -> Result<OracleDraw> {
    let p = simulate_discrete_path(spec, seed, i)?;
    let n = spec.horizon;
    let stop = if spec.kill_prob > 0.0 {
        let e = exponential_clock(seed, i, spec.equivalent_rate())?;
        (e.floor() as usize).min(n)
    } else {
        n
    };
    let prefix = MapPath::new(
        p.grid.prefix(stop + 1),
        p.xi[..=stop].to_vec(),
        p.theta[..=stop].to_vec(),
        None,
    )?;
    let s = summarize(&prefix, ORACLE_EPSILON);
    let ladders = prefix
        .xi
        .iter()
        .scan(0.0_f64, |m, &v| {
            let new = v > *m;
            *m = m.max(v);
            Some(new)
        })
        .filter(|b| *b)
        .count();
    let ends = {
        let l = ladder_samples(&prefix, ORACLE_EPSILON);
        let mut prev = 0;
        let mut out = Vec::new();
        for e in &l.entries {
            if e.local_time > prev {
                prev = e.local_time;
                out.push((usize::from(e.theta_plus.x() < 0.5), e.xi_plus.round() as usize));
            }
        }
        out
    };
    Ok(OracleDraw {
        gbar: s.g_bar.round() as usize,
        gunder: s.g_under.round() as usize,
        ladders,
        ends,
    })
}

/// Zero-set tolerance on the integer lattice.
pub const ORACLE_EPSILON: f64 = 1e-9;

/// Runs the fluctuation pipeline on `samples` oracle paths and compares ḡ, g̱,
/// ladder counts, excursion-end occupation and Laplace transforms with the
/// enumerated law.
pub fn equivalence_suite(
    spec: &OracleSpec,
    samples: u64,
    seed: u64,
    lambdas: &[f64],
    workers: usize,
) -> Result<EquivalenceReport> {
    let exact = enumerate_discrete_map(spec)?;
    if samples < 2 {
        return Err(Error::validation("equivalence suite needs at least two samples"));
    }
    let draws = map_indexed(samples, workers, |i| oracle_draw(spec, seed, i))?;
    let n = spec.horizon;
    let w = 1.0 / samples as f64;
    let mut gbar = vec![0.0; n + 1];
    let mut gunder = vec![0.0; n + 1];
    let mut ladders = vec![0.0; n + 1];
    let mut occ = vec![0.0; 2 * (n + 1)];
    for d in &draws {
        gbar[d.gbar] += w;
        gunder[d.gunder] += w;
        ladders[d.ladders] += w;
        for &(s, h) in &d.ends {
            occ[s * (n + 1) + h] += 1.0;
        }
    }
    let exact_occ: Vec<f64> = exact.excursion_end.concat();
    let occupation_tv = if exact_occ.iter().sum::<f64>() > 0.0 {
        tv_distance_probs(&occ, &exact_occ)?
    } else {
        0.0
    };
    let mut laplace = Vec::new();
    for &lambda in lambdas {
        for which in [Functional::GBar, Functional::GUnder] {
            let values: Vec<f64> = draws
                .iter()
                .map(|d| match which {
                    Functional::GBar => d.gbar as f64,
                    Functional::GUnder => d.gunder as f64,
                })
                .collect();
            let est = laplace_estimate(&values, lambda)?;
            let ex = laplace_from_table(exact.table(which), lambda);
            laplace.push(LaplaceCheck {
                which,
                lambda,
                exact: ex,
                estimate: est.estimate,
                stderr: est.stderr,
                within: (est.estimate - ex).abs() <= 3.0 * est.stderr + 1e-12,
            });
        }
    }
    let tv_tolerance = 0.02;
    let gbar_tv = tv_distance_probs(&gbar, &exact.gbar)?;
    let gunder_tv = tv_distance_probs(&gunder, &exact.gunder)?;
    let ladder_count_tv = tv_distance_probs(&ladders, &exact.ladder_count)?;
    let pass = [gbar_tv, gunder_tv, ladder_count_tv, occupation_tv]
        .iter()
        .all(|t| *t < tv_tolerance)
        && laplace.iter().all(|c| c.within);
    Ok(EquivalenceReport {
        spec: spec.clone(),
        samples,
        seed,
        tv_tolerance,
        gbar_tv,
        gunder_tv,
        ladder_count_tv,
        occupation_tv,
        laplace,
        empirical_gbar: gbar,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Brute force over step *and* modulator sequences, independent of the
    /// forward recursion used by the enumerator. Returns the ḡ table.
    fn brute_gbar(spec: &OracleSpec) -> Vec<f64> {
        let n = spec.horizon;
        let mut table = vec![0.0; n + 1];
        for steps in 0u32..(1 << n) {
            for mods in 0u32..(1 << n) {
                for s0 in 0..2usize {
                    let mut p = spec.initial_dist[s0];
                    let mut s = s0;
                    let (mut xi, mut sup, mut gbar) = (0i64, 0i64, 0usize);
                    let mut gbar_at = vec![0usize; n + 1];
                    for j in 0..n {
                        let up = steps >> j & 1 == 1;
                        let pu = spec.up_prob_by_state[s];
                        p *= if up { pu } else { 1.0 - pu };
                        let flip = mods >> j & 1 == 1;
                        p *= if flip { spec.flip_prob } else { 1.0 - spec.flip_prob };
                        if flip {
                            s = 1 - s;
                        }
                        xi += if up { 1 } else { -1 };
                        if xi >= sup {
                            sup = xi;
                            gbar = j + 1;
                        }
                        gbar_at[j + 1] = gbar;
                    }
                    let q = spec.kill_prob;
                    for m in 0..=n {
                        let w = if m == n {
                            (1.0 - q).powi(n as i32)
                        } else {
                            (1.0 - q).powi(m as i32) * q
                        };
                        table[gbar_at[m]] += p * w;
                    }
                }
            }
        }
        table
    }

    #[test]
    fn fair_walk_two_steps() {
        let t = enumerate_discrete_map(&OracleSpec::fair_walk(2)).unwrap();
        assert_eq!(t.gbar, vec![0.25, 0.25, 0.5]);
        assert_eq!(t.gunder, vec![0.25, 0.25, 0.5]);
        assert_eq!(t.sequences, 4);
    }

    #[test]
    fn single_step() {
        let t = enumerate_discrete_map(&OracleSpec::fair_walk(1)).unwrap();
        assert_eq!(t.gbar[1], 0.5);
    }

    #[test]
    fn always_up() {
        let mut s = OracleSpec::fair_walk(5);
        s.up_prob_by_state = [1.0, 1.0];
        let t = enumerate_discrete_map(&s).unwrap();
        assert_eq!(t.gbar[5], 1.0);
        assert_eq!(t.ladder_count[5], 1.0);
        s.horizon = 3;
        let l = exact_laplace(&s, 0.7, Functional::GBar).unwrap();
        assert_abs_diff_eq!(l, (-2.1_f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn fair_walk_laplace_closed_form() {
        let s = OracleSpec::fair_walk(2);
        for lambda in [0.0_f64, 0.3, 1.0, 2.5] {
            let want = 0.25 + 0.25 * (-lambda).exp() + 0.5 * (-2.0 * lambda).exp();
            assert_abs_diff_eq!(exact_laplace(&s, lambda, Functional::GBar).unwrap(), want, epsilon = 1e-15);
        }
        assert_eq!(exact_laplace(&s, 0.0, Functional::GUnder).unwrap(), 1.0);
    }

    #[test]
    fn forward_recursion_matches_brute_force() {
        let spec = OracleSpec {
            flip_prob: 0.3,
            up_prob_by_state: [0.7, 0.2],
            horizon: 7,
            kill_prob: 0.1,
            initial_dist: [0.4, 0.6],
        };
        let t = enumerate_discrete_map(&spec).unwrap();
        let b = brute_gbar(&spec);
        for (a, e) in t.gbar.iter().zip(&b) {
            assert_abs_diff_eq!(a, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let spec = OracleSpec {
            flip_prob: 0.2,
            up_prob_by_state: [0.8, 0.35],
            horizon: 14,
            kill_prob: 0.05,
            initial_dist: [0.5, 0.5],
        };
        let t = enumerate_discrete_map(&spec).unwrap();
        for table in [&t.gbar, &t.gunder, &t.sup, &t.inf, &t.ladder_count] {
            assert_abs_diff_eq!(table.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(t.total_probability, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn suite_passes_on_modulated_walk_with_killing() {
        let spec = OracleSpec {
            flip_prob: 0.2,
            up_prob_by_state: [0.7, 0.35],
            horizon: 16,
            kill_prob: 0.1,
            initial_dist: [0.5, 0.5],
        };
        let r = equivalence_suite(&spec, 40_000, 5, &[0.1, 0.5, 1.0], 1).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn horizon_cap() {
        assert!(enumerate_discrete_map(&OracleSpec::fair_walk(23)).is_err());
        assert!(enumerate_discrete_map(&OracleSpec::fair_walk(22)).is_ok());
    }

    #[test]
    fn simulated_paths_embed_states() {
        let spec = OracleSpec::fair_walk(6);
        let p = simulate_discrete_path(&spec, 3, 0).unwrap();
        assert_eq!(p.len(), 7);
        for w in p.xi.windows(2) {
            assert_eq!((w[1] - w[0]).abs(), 1.0);
        }
        for th in &p.theta {
            assert!(th.x() == 1.0 || th.y() == 1.0);
        }
    }
}
