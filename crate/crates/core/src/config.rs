use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{ModelSpec, DEFAULT_WALL_DELTA};
use crate::path::{make_time_grid, TimeGrid};

/// Everything needed to reproduce a batch of simulated paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub model: ModelSpec,
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: u64,
    pub master_seed: u64,
    /// Self-similarity index used by the Lamperti–Kiu transform.
    pub alpha: f64,
    /// Zero-set tolerance for the reflected process.
    pub epsilon_zero: f64,
    pub burn_in: f64,
    pub wall_delta: f64,
}

impl SimulationConfig {
    /// Configuration with the default α = 2, no burn-in, `wall_delta = 1e−6`
    /// and the model's default zero-set tolerance.
    pub fn new(model: ModelSpec, dt: f64, t_max: f64, n_paths: u64, master_seed: u64) -> Self {
        let epsilon_zero = default_epsilon(&model, dt);
        Self {
            model,
            dt,
            t_max,
            n_paths,
            master_seed,
            alpha: 2.0,
            epsilon_zero,
            burn_in: 0.0,
            wall_delta: DEFAULT_WALL_DELTA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let pos = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::validation(format!("{name} must be positive, got {v}")))
            }
        };
        pos("dt", self.dt)?;
        pos("t_max", self.t_max)?;
        pos("alpha", self.alpha)?;
        pos("epsilon_zero", self.epsilon_zero)?;
        pos("wall_delta", self.wall_delta)?;
        // The oracle lives on the integer grid of its own horizon.
        let lattice = matches!(self.model, ModelSpec::DiscreteOracle(_));
        if !lattice && self.dt >= self.t_max {
            return Err(Error::validation(format!(
                "dt = {} must be smaller than t_max = {}",
                self.dt, self.t_max
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::validation("n_paths must be positive"));
        }
        if !(self.burn_in.is_finite() && self.burn_in >= 0.0 && self.burn_in < self.t_max) {
            return Err(Error::validation(format!(
                "burn_in = {} must lie in [0, t_max)",
                self.burn_in
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        match &self.model {
            ModelSpec::DiscreteOracle(spec) => make_time_grid(1.0, spec.horizon as f64),
            _ => make_time_grid(self.dt, self.t_max),
        }
    }
}

/// `1e−9` on the integer lattice of the discrete oracle, `10·√dt` for diffusions.
pub fn default_epsilon(model: &ModelSpec, dt: f64) -> f64 {
    match model {
        ModelSpec::DiscreteOracle(_) => 1e-9,
        _ => 10.0 * dt.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = SimulationConfig::new(ModelSpec::FreeBessel2D, 1e-3, 1.0, 4, 1);
        c.validate().unwrap();
        assert!((c.epsilon_zero - 10.0 * 1e-3_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_fields() {
        let base = SimulationConfig::new(ModelSpec::FreeBessel2D, 1e-3, 1.0, 4, 1);
        let mut c = base.clone();
        c.dt = 2.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.epsilon_zero = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.wall_delta = -1.0;
        assert!(c.validate().is_err());
        let mut c = base;
        c.n_paths = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_roundtrip() {
        let c = SimulationConfig::new(
            ModelSpec::RadialDunkl {
                root_system: crate::models::RootSystem::B2,
                k: 0.75,
            },
            1e-4,
            2.0,
            8,
            99,
        );
        let s = serde_json::to_string(&c).unwrap();
        let back: SimulationConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(c, back);
    }
}
