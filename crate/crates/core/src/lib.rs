//! Simulation and verification toolkit for Markov additive processes and the
//! self-similar Markov processes they encode.
//!
//! The planar models live in [`models`]; [`lamperti`] maps paths between the
//! two pictures; [`fluctuation`], [`classify`] and [`duality`] extract and test
//! path functionals; [`oracle`] is an exactly enumerable discrete model that
//! every estimator is checked against.

pub mod classify;
pub mod config;
pub mod duality;
pub mod error;
pub mod fluctuation;
pub mod io;
pub mod lamperti;
pub mod models;
pub mod oracle;
pub mod parallel;
pub mod path;
pub mod rng;
pub mod stats;

pub use classify::{Classification, Thresholds, Verdict};
pub use config::SimulationConfig;
pub use error::{Error, Result};
pub use models::{ModelSpec, RootSystem};
pub use oracle::OracleSpec;
pub use path::{make_time_grid, validate_map_path, MapPath, ScalarPath, SsmpPath, TimeGrid, UnitVector};
pub use rng::seed_stream;
