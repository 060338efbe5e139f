//! Two-sample ratio estimands for skewed data: ratios of quantiles, squared
//! interquantile-range ratios and variance ratios, with their influence
//! functions, asymptotic variances, interval estimators and a Monte Carlo
//! coverage engine.

pub mod asymptotics;
pub mod distributions;
pub mod empirical;
pub mod error;
pub mod interface;
pub mod intervals;
pub mod rng;
pub mod simulation;
pub mod special;

pub use distributions::DistributionSpec;
pub use empirical::{BandwidthRule, Sample};
pub use error::{Error, Result};
pub use intervals::{IntervalEstimate, Method, TestResult};
pub use simulation::{MethodSpec, SimCellResult, SimConfig};
