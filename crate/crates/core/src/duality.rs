//! Time reversal and its distributional consequence under the stationary law:
//! `g̱_t` and `t − ḡ_t` have the same distribution when Θ starts from π.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SimulationConfig;
use crate::error::{Error, Result};
use crate::fluctuation::summarize;
use crate::models::simulate_map;
use crate::parallel::map_indexed;
use crate::path::{MapPath, TimeGrid, UnitVector};
use crate::rng::{derive_seed, seed_stream};
use crate::stats::{ks_two_sample, tv_distance, Histogram};

/// `s ↦ (ξ_{t−s} − ξ_t, Θ_{t−s})` for `0 ≤ s ≤ t`.
pub fn time_reverse(map_path: &MapPath, t: f64) -> Result<MapPath> {
    let k = map_path.grid.index_at_or_before(t)?;
    if k >= map_path.len() {
        return Err(Error::OutOfRange {
            what: "time",
            value: t,
            lo: 0.0,
            hi: map_path.horizon(),
        });
    }
    let times = map_path.grid.times();
    let tk = times[k];
    let grid = TimeGrid::from_times((0..=k).map(|i| tk - times[k - i]).collect())?;
    let xi = (0..=k).map(|i| map_path.xi[k - i] - map_path.xi[k]).collect();
    let theta = (0..=k).map(|i| map_path.theta[k - i]).collect();
    MapPath::new(grid, xi, theta, None)
}

/// Draws initial angles from a normalized angular occupation histogram,
/// uniformly within the chosen bin.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    hist: Histogram,
    cumulative: Vec<f64>,
}

impl StationarySampler {
    pub fn histogram(&self) -> &Histogram {
        &self.hist
    }

    pub fn sample_angle<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let b = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        let (lo, hi) = (self.hist.edges[b], self.hist.edges[b + 1]);
        lo + rng.random::<f64>() * (hi - lo)
    }
}

pub fn stationary_initializer(hist: &Histogram) -> Result<StationarySampler> {
    if !(hist.total() > 0.0) {
        return Err(Error::validation("stationary initializer needs a nonempty histogram"));
    }
    let mut acc = 0.0;
    let cumulative = hist
        .normalized()
        .into_iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    Ok(StationarySampler {
        hist: hist.clone(),
        cumulative,
    })
}

/// Angular occupation of Θ after `burn_in`, pooled over `n_paths` runs of
/// length `burn_in + run_time` started at the arc midpoint.
pub fn occupation_histogram(
    config: &SimulationConfig,
    run_time: f64,
    n_paths: u64,
    bins: usize,
    workers: usize,
) -> Result<Histogram> {
    let mut cfg = config.clone();
    cfg.t_max = config.burn_in + run_time;
    cfg.master_seed = derive_seed(config.master_seed, "stationary-occupation");
    cfg.validate()?;
    let (lo, hi) = cfg.model.arc();
    let theta0 = cfg.model.default_theta0();
    let parts = map_indexed(n_paths, workers, |i| {
        let p = simulate_map(&cfg, theta0, i)?.path;
        let mut h = Histogram::uniform(lo, hi, bins)?;
        for (t, th) in p.grid.times().iter().zip(&p.theta) {
            if *t >= cfg.burn_in {
                h.add(th.angle(), 1.0);
            }
        }
        Ok(h)
    })?;
    let mut total = Histogram::uniform(lo, hi, bins)?;
    for h in &parts {
        for (a, b) in total.masses.iter_mut().zip(&h.masses) {
            *a += b;
        }
    }
    Ok(total)
}

/// TV distance between a histogram and its reflection about the arc midpoint.
pub fn mirror_tv(hist: &Histogram) -> Result<f64> {
    let mut m = hist.clone();
    m.masses.reverse();
    tv_distance(hist, &m)
}

fn draw_start<R: Rng + ?Sized>(
    sampler: &StationarySampler,
    config: &SimulationConfig,
    rng: &mut R,
) -> Result<UnitVector> {
    for _ in 0..1000 {
        let th = UnitVector::from_angle(sampler.sample_angle(rng));
        if config.model.check_in_arc(th, config.wall_delta).is_ok() {
            return Ok(th);
        }
    }
    Err(Error::Numerical("stationary sampler keeps landing on a wall".into()))
}

/// Evolves `n` draws from π̂ for time `s` and returns the TV distance between
/// the evolved angle histogram and π̂, both coarsened by `coarsen`.
pub fn invariance_tv(
    config: &SimulationConfig,
    sampler: &StationarySampler,
    s: f64,
    n: u64,
    coarsen: usize,
    workers: usize,
) -> Result<f64> {
    let mut cfg = config.clone();
    cfg.t_max = s;
    cfg.burn_in = 0.0;
    cfg.master_seed = derive_seed(config.master_seed, "invariance");
    cfg.validate()?;
    let start_seed = derive_seed(config.master_seed, "invariance-start");
    let angles = map_indexed(n, workers, |i| {
        let mut rng = seed_stream(start_seed, i);
        let th = draw_start(sampler, &cfg, &mut rng)?;
        let p = simulate_map(&cfg, th, i)?.path;
        Ok(p.theta[p.len() - 1].angle())
    })?;
    let base = sampler.histogram();
    let mut evolved = Histogram::new(base.edges.clone())?;
    for a in angles {
        evolved.add(a, 1.0);
    }
    tv_distance(&base.coarsen(coarsen)?, &evolved.coarsen(coarsen)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalReport {
    pub t: f64,
    /// Samples per side.
    pub n: u64,
    pub ks_stat: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Two-sample KS test between `g̱_t` and `t − ḡ_t`, each side from its own
/// `n` stationary-start paths (indices `0..n` and `n..2n`).
pub fn reversal_check(
    config: &SimulationConfig,
    sampler: &StationarySampler,
    t: f64,
    n: u64,
    eps: f64,
    workers: usize,
) -> Result<ReversalReport> {
    if n < 500 {
        return Err(Error::validation(format!("reversal check needs n >= 500, got {n}")));
    }
    let mut cfg = config.clone();
    cfg.t_max = t;
    cfg.burn_in = 0.0;
    cfg.master_seed = derive_seed(config.master_seed, "reversal");
    cfg.validate()?;
    let start_seed = derive_seed(config.master_seed, "reversal-start");
    let values = map_indexed(2 * n, workers, |i| {
        let mut rng = seed_stream(start_seed, i);
        let th = draw_start(sampler, &cfg, &mut rng)?;
        let p = simulate_map(&cfg, th, i)?.path;
        let s = summarize(&p, eps);
        if i < n {
            return Ok(s.g_under);
        }
        // Read t − ḡ off the grid so both sides share the same atoms; the
        // float difference lands a rounding error away from them.
        let last = p.len() - 1;
        let k = p.grid.index_at_or_before(s.g_bar)?;
        Ok(p.grid.times()[last - k] - p.grid.times()[0])
    })?;
    let (a, b) = values.split_at(n as usize);
    let ks = ks_two_sample(a, b)?;
    Ok(ReversalReport {
        t,
        n,
        ks_stat: ks.statistic,
        threshold: ks.critical_value,
        pass: ks.statistic < ks.critical_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use crate::path::make_time_grid;
    use rand::SeedableRng;

    fn path(xi: &[f64]) -> MapPath {
        let grid = make_time_grid(1.0, (xi.len() - 1) as f64).unwrap();
        let theta = (0..xi.len()).map(|i| UnitVector::from_angle(0.1 * i as f64)).collect();
        MapPath::new(grid, xi.to_vec(), theta, None).unwrap()
    }

    #[test]
    fn reverse_example() {
        let r = time_reverse(&path(&[0.0, 1.0, 3.0]), 2.0).unwrap();
        assert_eq!(r.xi, vec![0.0, -2.0, -3.0]);
        assert_eq!(r.grid.times(), &[0.0, 1.0, 2.0]);
        assert_eq!(r.theta[0], UnitVector::from_angle(0.2));
    }

    #[test]
    fn linear_reverses_to_negative_slope() {
        let r = time_reverse(&path(&[0.0, 0.5, 1.0, 1.5]), 3.0).unwrap();
        assert_eq!(r.xi, vec![0.0, -0.5, -1.0, -1.5]);
    }

    #[test]
    fn double_reversal_is_identity() {
        let p = path(&[0.0, 0.3, -0.4, 1.2, 0.7]);
        let rr = time_reverse(&time_reverse(&p, 4.0).unwrap(), 4.0).unwrap();
        for (a, b) in rr.xi.iter().zip(&p.xi) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(rr.theta, p.theta);
        assert_eq!(rr.grid.len(), p.grid.len());
        assert!(time_reverse(&p, 5.0).is_err());
    }

    #[test]
    fn point_mass_sampler() {
        let mut h = Histogram::uniform(0.0, 1.0, 100).unwrap();
        h.add(0.425, 3.0);
        let s = stationary_initializer(&h).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let a = s.sample_angle(&mut rng);
            assert!((0.42..0.43).contains(&a));
        }
        assert!(stationary_initializer(&Histogram::uniform(0.0, 1.0, 4).unwrap()).is_err());
    }

    #[test]
    fn bessel_occupation_is_symmetric() {
        let mut cfg = SimulationConfig::new(ModelSpec::FreeBessel2D, 1e-3, 1.0, 1, 5);
        cfg.burn_in = 5.0;
        let h = occupation_histogram(&cfg, 200.0, 4, 256, 1).unwrap();
        let tv = mirror_tv(&h.coarsen(8).unwrap()).unwrap();
        assert!(tv < 0.05, "mirror tv {tv}");
    }

    #[test]
    fn small_reversal_check_runs() {
        let mut cfg = SimulationConfig::new(ModelSpec::FreeBessel2D, 1e-2, 1.0, 1, 9);
        cfg.burn_in = 2.0;
        let h = occupation_histogram(&cfg, 50.0, 2, 64, 1).unwrap();
        let s = stationary_initializer(&h).unwrap();
        let r = reversal_check(&cfg, &s, 1.0, 500, 1e-12, 1).unwrap();
        assert_eq!(r.pass, r.ks_stat < r.threshold);
        assert!((0.0..=1.0).contains(&r.ks_stat));
        assert!(reversal_check(&cfg, &s, 1.0, 10, 1e-12, 1).is_err());
    }
}
