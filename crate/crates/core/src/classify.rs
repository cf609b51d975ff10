//! Long-time verdict for the ordinate: drifts to +∞, drifts to −∞, or
//! oscillates. The sign of the strong-law slope decides; the last-passage
//! ratios and the final-excursion proxies corroborate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluctuation::summarize;
use crate::path::MapPath;
use crate::stats::mc_mean_ci;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    DriftsPlus,
    DriftsMinus,
    Oscillates,
    Inconclusive,
}

impl Verdict {
    /// The verdict for `(−ξ, Θ)`.
    pub fn mirrored(self) -> Self {
        match self {
            Verdict::DriftsPlus => Verdict::DriftsMinus,
            Verdict::DriftsMinus => Verdict::DriftsPlus,
            v => v,
        }
    }
}

/// Decision thresholds. These are a finite-horizon protocol, not a theorem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A ratio at least this large counts as near 1.
    pub near_one: f64,
    /// A ratio or proxy at most this large counts as near 0.
    pub near_zero: f64,
    /// Proxies within this distance of 1 count as near 1.
    pub proxy_tol: f64,
    pub ci_level: f64,
    /// λ at which the final-excursion proxies are read.
    pub lambda_min: f64,
    pub min_paths: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            near_one: 0.9,
            near_zero: 0.1,
            proxy_tol: 0.1,
            ci_level: 0.99,
            lambda_min: 1e-3,
            min_paths: 30,
        }
    }
}

/// What one path contributes to the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEvidence {
    /// `(ξ_T − ξ_b)/(T − b)` after the burn-in `b`.
    pub slope: f64,
    pub g_bar: f64,
    pub g_under: f64,
    pub horizon: f64,
}

impl PathEvidence {
    pub fn from_path(path: &MapPath, burn_in: f64, eps: f64) -> Result<Self> {
        let s = summarize(path, eps);
        let b = path.grid.index_at_or_before(burn_in)?;
        let last = path.len() - 1;
        if b >= last {
            return Err(Error::validation(format!(
                "burn-in {burn_in} leaves nothing of a path with horizon {}",
                s.horizon
            )));
        }
        let t = path.grid.times();
        Ok(Self {
            slope: (path.xi[last] - path.xi[b]) / (t[last] - t[b]),
            g_bar: s.g_bar,
            g_under: s.g_under,
            horizon: s.horizon,
        })
    }

    /// Evidence for `(−ξ, Θ)` on the same path.
    pub fn mirrored(&self) -> Self {
        Self {
            slope: -self.slope,
            g_bar: self.g_under,
            g_under: self.g_bar,
            horizon: self.horizon,
        }
    }
}

/// Mean slope and its confidence interval.
pub fn slln_slope(evidence: &[PathEvidence], level: f64, min_paths: usize) -> Result<(f64, (f64, f64))> {
    if evidence.len() < min_paths.max(2) {
        return Err(Error::validation(format!(
            "slope needs at least {min_paths} paths, got {}",
            evidence.len()
        )));
    }
    let slopes: Vec<f64> = evidence.iter().map(|e| e.slope).collect();
    let (mean, hw) = mc_mean_ci(&slopes, level)?;
    Ok((mean, (mean - hw, mean + hw)))
}

/// [`slln_slope`] straight from paths.
pub fn slln_slope_of_paths(paths: &[MapPath], burn_in: f64, level: f64) -> Result<(f64, (f64, f64))> {
    let ev = paths
        .iter()
        .map(|p| PathEvidence::from_path(p, burn_in, 0.0))
        .collect::<Result<Vec<_>>>()?;
    slln_slope(&ev, level, 30)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    /// Mean of `ḡ_T/T`.
    pub gbar_ratio: f64,
    /// Mean of `g̱_T/T`.
    pub gunder_ratio: f64,
    /// `Ê[e^{−λ ḡ_T}]`, near 1 when ξ drifts to −∞.
    pub proxy_up: f64,
    /// `Ê[e^{−λ g̱_T}]`, near 1 when ξ drifts to +∞.
    pub proxy_down: f64,
    /// Whether the proxies agree with a definite verdict.
    pub consistent: bool,
    pub n_paths: usize,
    pub thresholds: Thresholds,
}

pub fn trichotomy(evidence: &[PathEvidence], th: &Thresholds) -> Result<Classification> {
    let (slope, ci) = slln_slope(evidence, th.ci_level, th.min_paths)?;
    let n = evidence.len() as f64;
    let mean = |f: &dyn Fn(&PathEvidence) -> f64| evidence.iter().map(f).sum::<f64>() / n;
    let ratio = |g: f64, t: f64| if t > 0.0 { (g / t).clamp(0.0, 1.0) } else { 0.0 };
    let gbar_ratio = mean(&|e| ratio(e.g_bar, e.horizon));
    let gunder_ratio = mean(&|e| ratio(e.g_under, e.horizon));
    let proxy_up = mean(&|e| (-th.lambda_min * e.g_bar).exp());
    let proxy_down = mean(&|e| (-th.lambda_min * e.g_under).exp());

    // An oscillating path spends an arcsine-distributed fraction of the
    // horizon before its last extremum, so neither ratio is near 0 (nor 1).
    let verdict = if ci.0 > 0.0 && gbar_ratio >= th.near_one && gunder_ratio <= th.near_zero {
        Verdict::DriftsPlus
    } else if ci.1 < 0.0 && gunder_ratio >= th.near_one && gbar_ratio <= th.near_zero {
        Verdict::DriftsMinus
    } else if ci.0 <= 0.0 && ci.1 >= 0.0 && gbar_ratio > th.near_zero && gunder_ratio > th.near_zero {
        Verdict::Oscillates
    } else {
        Verdict::Inconclusive
    };
    let consistent = match verdict {
        Verdict::DriftsPlus => proxy_down >= 1.0 - th.proxy_tol,
        Verdict::DriftsMinus => proxy_up >= 1.0 - th.proxy_tol,
        Verdict::Oscillates => proxy_up <= th.near_zero && proxy_down <= th.near_zero,
        Verdict::Inconclusive => true,
    };
    Ok(Classification {
        verdict,
        slope,
        slope_ci: ci,
        gbar_ratio,
        gunder_ratio,
        proxy_up,
        proxy_down,
        consistent,
        n_paths: evidence.len(),
        thresholds: *th,
    })
}

/// [`trichotomy`] straight from paths.
pub fn classify_paths(paths: &[MapPath], burn_in: f64, eps: f64, th: &Thresholds) -> Result<Classification> {
    let ev = paths
        .iter()
        .map(|p| PathEvidence::from_path(p, burn_in, eps))
        .collect::<Result<Vec<_>>>()?;
    trichotomy(&ev, th)
}
