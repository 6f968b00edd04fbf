//! Numerical laboratory for reflected backward doubly stochastic
//! differential equations whose generators depend on weighted segments of
//! the solution's past.
//!
//! The crate simulates the driving noise, runs a least-squares Monte Carlo
//! backward scheme with discrete reflection inside a fixed-point iteration
//! over the delayed generator, checks the feasibility conditions on the
//! problem constants, and evaluates both sides of the a priori and
//! stability estimates on computed solutions. Reference solutions for
//! special cases live in [`oracles`].

pub mod backward_scheme;
pub mod conditions;
pub mod config;
pub mod delay_measure;
pub mod error;
pub mod estimates;
pub mod experiment;
pub mod generator;
pub mod oracles;
pub mod path_engine;
pub mod picard_solver;

pub use backward_scheme::{ObstacleForm, RegressionBasis, SolutionTriple};
pub use config::{Config, TerminalCondition};
pub use delay_measure::DelayMeasure;
pub use error::{Error, Result};
pub use generator::{GeneratorForm, GeneratorSpec, Which};
pub use path_engine::PathEnsemble;
pub use picard_solver::{solve, PicardDiagnostics, Problem};
