pub mod bridge;
pub mod datasets;
pub mod error;
pub mod generator;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod probe;
pub mod rng;
pub mod schema;
pub mod surrogate;

pub use error::{Error, ErrorFamily, Result};
