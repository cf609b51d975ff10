//! Command-line flags and their resolution into fully explicit run specs.
//!
//! Precedence for simulation settings: flags, then the `--config` JSON file,
//! then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mapflux_core::config::default_epsilon;
use mapflux_core::io::read_json;
use mapflux_core::{Error, ModelSpec, OracleSpec, Result, RootSystem, SimulationConfig, Thresholds};
use serde_json::{Map, Value};

use crate::run::{Direction, GridChoice, PathKind, RunSpec};

#[derive(Debug, Parser)]
#[command(name = "mapflux", version, about = "Simulate and verify Markov additive processes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate MAP or self-similar paths and write them as CSV.
    Simulate(SimulateArgs),
    /// Apply the Lamperti-Kiu transform to a path file.
    Transform(TransformArgs),
    /// Last-passage statistics and Laplace-transform estimates.
    Fluctuation(FluctuationArgs),
    /// Long-time trichotomy verdict.
    Classify(ClassifyArgs),
    /// Test that the last time at the infimum matches the time since the supremum.
    VerifyDuality(DualityArgs),
    /// Compare the published generator formulas with finite differences.
    VerifyLyapunov(LyapunovArgs),
    /// Exact tables of the discrete oracle and the sampled-pipeline comparison.
    Oracle(OracleArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    FreeBessel,
    DunklA1,
    DunklB2,
    DunklC2,
    DunklD2,
    Oracle,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Dunkl multiplicity, at least 1/2.
    #[arg(long)]
    pub k: Option<f64>,
    /// Oracle horizon in steps.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub flip_prob: Option<f64>,
    /// Oracle up-step probabilities in states 0 and 1.
    #[arg(long, value_delimiter = ',')]
    pub up_prob: Option<Vec<f64>>,
    #[arg(long)]
    pub kill_prob: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON file with (some of) the simulation configuration fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Zero-set tolerance of the reflected process.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<f64>,
    #[arg(long)]
    pub wall_delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, default_value = "mapflux-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, value_enum, default_value_t = PathKind::Map)]
    pub kind: PathKind,
    /// Starting angle of the modulator (defaults to the arc midpoint).
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Starting point of a self-similar path.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub direction: Direction,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Output grid: images of the input grid points, or uniform with as many points.
    #[arg(long, value_enum, default_value_t = GridChoice::Image)]
    pub grid: GridChoice,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FluctuationArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Rate of the exponential clock.
    #[arg(long, default_value_t = 1.0)]
    pub q: f64,
    /// Decreasing λ values.
    #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.01,0.001")]
    pub lambda_grid: Vec<f64>,
    /// Increasing horizons, the last at most t_max.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<f64>>,
    /// Work with (−ξ, Θ), giving the descending quantities.
    #[arg(long)]
    pub negate: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long)]
    pub negate: bool,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    #[arg(long)]
    pub lambda_min: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DualityArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value_t = 5.0)]
    pub t: f64,
    /// Samples per side.
    #[arg(long, default_value_t = 2000)]
    pub n: u64,
    /// Length of each post-burn-in occupation run.
    #[arg(long, default_value_t = 200.0)]
    pub occupation_time: f64,
    #[arg(long, default_value_t = 8)]
    pub occupation_paths: u64,
    #[arg(long, default_value_t = 256)]
    pub bins: usize,
    /// Paths used by the invariance diagnostic (0 skips it).
    #[arg(long, default_value_t = 20_000)]
    pub invariance_paths: u64,
}

#[derive(Debug, Args)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-4)]
    pub h: f64,
    /// Angular distance kept from the arc ends.
    #[arg(long, default_value_t = 1e-2)]
    pub margin: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1")]
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

fn root_of(name: ModelName) -> Option<RootSystem> {
    match name {
        ModelName::DunklA1 => Some(RootSystem::A1),
        ModelName::DunklB2 => Some(RootSystem::B2),
        ModelName::DunklC2 => Some(RootSystem::C2),
        ModelName::DunklD2 => Some(RootSystem::D2),
        _ => None,
    }
}

/// Applies the model flags on top of `base`.
pub fn resolve_model(args: &ModelArgs, base: Option<ModelSpec>) -> Result<ModelSpec> {
    let base = base.unwrap_or(ModelSpec::FreeBessel2D);
    let model = match args.model {
        None => base,
        Some(ModelName::FreeBessel) => ModelSpec::FreeBessel2D,
        Some(ModelName::Oracle) => match base {
            m @ ModelSpec::DiscreteOracle(_) => m,
            _ => ModelSpec::DiscreteOracle(OracleSpec::fair_walk(12)),
        },
        Some(name) => {
            let k = match base {
                ModelSpec::RadialDunkl { k, .. } => k,
                _ => 0.5,
            };
            ModelSpec::RadialDunkl {
                root_system: root_of(name).expect("dunkl names map to root systems"),
                k,
            }
        }
    };
    Ok(match model {
        ModelSpec::RadialDunkl { root_system, k } => ModelSpec::RadialDunkl {
            root_system,
            k: args.k.unwrap_or(k),
        },
        ModelSpec::DiscreteOracle(mut spec) => {
            if let Some(h) = args.horizon {
                spec.horizon = h;
            }
            if let Some(p) = args.flip_prob {
                spec.flip_prob = p;
            }
            if let Some(u) = &args.up_prob {
                spec.up_prob_by_state = pair("--up-prob", u)?;
            }
            if let Some(p) = args.kill_prob {
                spec.kill_prob = p;
            }
            ModelSpec::DiscreteOracle(spec)
        }
        m => m,
    })
}

fn merge(into: &mut Map<String, Value>, from: Map<String, Value>) {
    for (k, v) in from {
        into.insert(k, v);
    }
}

/// Flags over config file over defaults.
pub fn resolve_config(args: &SimArgs) -> Result<SimulationConfig> {
    let defaults = SimulationConfig::new(ModelSpec::FreeBessel2D, 1e-3, 10.0, 100, 0);
    let mut obj = match serde_json::to_value(&defaults)? {
        Value::Object(m) => m,
        _ => unreachable!("configs serialize to objects"),
    };
    let mut explicit_eps = false;
    if let Some(file) = &args.config {
        let v: Value = read_json(file)?;
        let Value::Object(m) = v else {
            return Err(Error::Validation(format!(
                "{}: config must be a JSON object",
                file.display()
            )));
        };
        explicit_eps |= m.contains_key("epsilon_zero");
        merge(&mut obj, m);
    }
    let mut cfg: SimulationConfig = serde_json::from_value(Value::Object(obj))
        .map_err(|e| Error::Validation(format!("config: {e}")))?;
    cfg.model = resolve_model(&args.model, Some(cfg.model))?;
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.t_max {
        cfg.t_max = v;
    }
    if let Some(v) = args.paths {
        cfg.n_paths = v;
    }
    if let Some(v) = args.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.burn_in {
        cfg.burn_in = v;
    }
    if let Some(v) = args.wall_delta {
        cfg.wall_delta = v;
    }
    if let ModelSpec::DiscreteOracle(spec) = &cfg.model {
        cfg.dt = 1.0;
        cfg.t_max = spec.horizon as f64;
    }
    match args.epsilon {
        Some(e) => cfg.epsilon_zero = e,
        None if !explicit_eps => cfg.epsilon_zero = default_epsilon(&cfg.model, cfg.dt),
        None => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(if p.is_absolute() {
        p.to_path_buf()
    } else {
        std::env::current_dir()?.join(p)
    })
}

/// Turns parsed flags into a run spec and its output directory.
fn pair(flag: &str, v: &[f64]) -> Result<[f64; 2]> {
    match v {
        [a, b] => Ok([*a, *b]),
        _ => Err(Error::Validation(format!("{flag} takes two comma-separated values"))),
    }
}

pub fn resolve(command: Command) -> Result<(RunSpec, PathBuf)> {
    Ok(match command {
        Command::Simulate(a) => {
            let config = resolve_config(&a.sim)?;
            let x0 = match &a.x0 {
                Some(v) => pair("--x0", v)?,
                None => [1.0, 1.0],
            };
            (
                RunSpec::Simulate {
                    config,
                    kind: a.kind,
                    theta0: a.theta0,
                    x0,
                },
                a.out.out,
            )
        }
        Command::Transform(a) => (
            RunSpec::Transform {
                input: absolute(&a.input)?,
                direction: a.direction,
                alpha: a.alpha,
                grid: a.grid,
            },
            a.out.out,
        ),
        Command::Fluctuation(a) => {
            let config = resolve_config(&a.sim)?;
            let horizons = a.horizons.unwrap_or_else(|| {
                let t = config.grid().map(|g| g.last()).unwrap_or(config.t_max);
                vec![0.25 * t, 0.5 * t, t]
            });
            (
                RunSpec::Fluctuation {
                    config,
                    q: a.q,
                    lambda_grid: a.lambda_grid,
                    horizons,
                    negate: a.negate,
                    theta0: a.theta0,
                },
                a.out.out,
            )
        }
        Command::Classify(a) => {
            let config = resolve_config(&a.sim)?;
            let mut thresholds = Thresholds::default();
            if let Some(l) = a.lambda_min {
                thresholds.lambda_min = l;
            }
            (
                RunSpec::Classify {
                    config,
                    thresholds,
                    negate: a.negate,
                    theta0: a.theta0,
                },
                a.out.out,
            )
        }
        Command::VerifyDuality(a) => {
            let mut sim = a.sim;
            // The stationary law is estimated after a burn-in of 50 unless told otherwise.
            if sim.burn_in.is_none() {
                sim.burn_in = Some(50.0);
            }
            if sim.t_max.is_none() {
                sim.t_max = Some(f64::max(a.t, 51.0));
            }
            if sim.epsilon.is_none() {
                sim.epsilon = Some(1e-12);
            }
            let config = resolve_config(&sim)?;
            (
                RunSpec::VerifyDuality {
                    config,
                    t: a.t,
                    n: a.n,
                    occupation_time: a.occupation_time,
                    occupation_paths: a.occupation_paths,
                    bins: a.bins,
                    invariance_paths: a.invariance_paths,
                },
                a.out.out,
            )
        }
        Command::VerifyLyapunov(a) => (
            RunSpec::VerifyLyapunov {
                model: resolve_model(&a.model, None)?,
                points: a.points,
                h: a.h,
                margin: a.margin,
                tolerance: a.tolerance,
            },
            a.out.out,
        ),
        Command::Oracle(a) => {
            let spec = match resolve_model(&a.model, Some(ModelSpec::DiscreteOracle(OracleSpec::fair_walk(12))))? {
                ModelSpec::DiscreteOracle(s) => s,
                _ => return Err(Error::Validation("the oracle command needs --model oracle".into())),
            };
            (
                RunSpec::Oracle {
                    spec,
                    samples: a.samples,
                    seed: a.seed,
                    lambdas: a.lambdas,
                },
                a.out.out,
            )
        }
        Command::Replay(a) => {
            let m: crate::manifest::RunManifest = read_json(&a.manifest)?;
            (m.run, a.out.out)
        }
    })
}
