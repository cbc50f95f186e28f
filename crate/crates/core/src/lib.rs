//! Minimum-PAR solutions of underdetermined complex linear systems and
//! joint precoding / PAR reduction for massive MU-MIMO-OFDM downlinks.
//!
//! The numerical core is generic over the real scalar ([`Real`]: `f32` or
//! `f64`); the aliases below fix it to `f64`, which is what the experiment
//! harness and CLI use.

pub mod error;
pub mod harness;
pub mod jpp;
pub mod linalg;
pub mod metrics;
pub mod ofdm;
pub mod rng;
pub mod scalar;
pub mod solvers;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type Complex64 = num_complex::Complex64;
pub type ComplexVector = Vec<Complex64>;
pub type ComplexMatrix = linalg::CMatrix<f64>;
pub type LinearSystem = solvers::LinearSystem<f64>;
pub type SolverConfig = solvers::SolverConfig<f64>;
pub type IterTrace = solvers::IterTrace<f64>;
pub type ParReport = metrics::ParReport<f64>;
pub type EmpiricalDistribution = metrics::EmpiricalDistribution<f64>;
pub type TonePlan = ofdm::TonePlan;
pub type ChannelRealization = ofdm::ChannelRealization<f64>;
pub type FreqDomainGrid = ofdm::FreqDomainGrid<f64>;
pub type TimeDomainGrid = ofdm::TimeDomainGrid<f64>;
pub type SymbolGrid = ofdm::SymbolGrid<f64>;
pub type JppConfig = jpp::JppConfig<f64>;
pub type JppResult = jpp::JppResult<f64>;

/// Library version echoed into JSON results.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
