//! ECDFs, Kolmogorov–Smirnov statistics, Monte Carlo confidence intervals and
//! total-variation distance.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Asymptotic 5% two-sample KS coefficient.
pub const KS_C_05: f64 = 1.358;

/// Empirical distribution function.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("ECDF of an empty sample"));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::Numerical("NaN in ECDF sample".into()));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Cumulative fractions `i/n` attached to the sorted values.
    pub fn fractions(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(move |(i, &v)| (v, (i + 1) as f64 / n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical_value: f64,
}

impl KsResult {
    pub fn rejects(&self) -> bool {
        self.statistic >= self.critical_value
    }
}

/// Two-sample KS statistic `sup |F_a − F_b|` and the asymptotic 5% critical value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let fa = Ecdf::new(a)?;
    let fb = Ecdf::new(b)?;
    let (xa, xb) = (fa.values(), fb.values());
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0_f64;
    // Step through the merged support; ties advance both sides together.
    while i < xa.len() && j < xb.len() {
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(KsResult {
        statistic: d,
        critical_value: KS_C_05 * ((na + nb) / (na * nb)).sqrt(),
    })
}

/// One-sample KS statistic against a continuous CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let e = Ecdf::new(samples)?;
    let n = e.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in e.values().iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// CDF of Normal(mean, sd).
pub fn normal_cdf(mean: f64, sd: f64) -> impl Fn(f64) -> f64 {
    let n = Normal::new(mean, sd).expect("valid normal parameters");
    move |x| n.cdf(x)
}

/// Two-sided standard normal quantile for a confidence level in (0, 1).
pub fn z_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::validation(format!("confidence level {level} not in (0,1)")));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(0.5 + level / 2.0))
}

/// Mean and normal-approximation confidence half-width.
pub fn mc_mean_ci(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::validation(format!(
            "confidence interval needs n >= 2, got {}",
            samples.len()
        )));
    }
    let z = z_value(level)?;
    let (mean, sd) = mean_sd(samples);
    Ok((mean, z * sd / (samples.len() as f64).sqrt()))
}

/// Sample mean and (n−1)-normalized standard deviation.
pub fn mean_sd(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Histogram with explicit bin edges. Masses need not be normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("histogram edges must be strictly increasing, >= 2"));
        }
        let masses = vec![0.0; edges.len() - 1];
        Ok(Self { edges, masses })
    }

    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::validation("uniform histogram needs bins > 0 and hi > lo"));
        }
        let w = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * w).collect();
        edges[bins] = hi;
        Self::new(edges)
    }

    pub fn bins(&self) -> usize {
        self.masses.len()
    }

    /// Bin of `x`, clamping values outside the edges into the end bins.
    pub fn bin_of(&self, x: f64) -> usize {
        let k = self.edges.partition_point(|&e| e <= x);
        k.saturating_sub(1).min(self.bins() - 1)
    }

    pub fn add(&mut self, x: f64, mass: f64) {
        let k = self.bin_of(x);
        self.masses[k] += mass;
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn normalized(&self) -> Vec<f64> {
        let t = self.total();
        if t > 0.0 {
            self.masses.iter().map(|m| m / t).collect()
        } else {
            self.masses.clone()
        }
    }

    /// Merge groups of `factor` adjacent bins.
    pub fn coarsen(&self, factor: usize) -> Result<Histogram> {
        if factor == 0 || self.bins() % factor != 0 {
            return Err(Error::validation(format!(
                "cannot coarsen {} bins by {factor}",
                self.bins()
            )));
        }
        let edges = self.edges.iter().step_by(factor).copied().collect();
        let masses = self.masses.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(Histogram { edges, masses })
    }
}

/// Total-variation distance between two histograms on identical bins.
pub fn tv_distance(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.edges != b.edges {
        return Err(Error::validation("histograms have different bin edges"));
    }
    tv_distance_probs(&a.normalized(), &b.normalized())
}

/// Total-variation distance between two mass vectors (normalized internally).
pub fn tv_distance_probs(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::validation(format!(
            "probability vectors differ in length: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if !(sp > 0.0 && sq > 0.0) {
        return Err(Error::validation("TV distance of an empty histogram"));
    }
    let d: f64 = p
        .iter()
        .zip(q)
        .map(|(a, b)| (a / sp - b / sq).abs())
        .sum();
    Ok((0.5 * d).min(1.0))
}
