pub mod cdf;
pub mod confset;
pub mod data;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod normal;
pub mod rng;
