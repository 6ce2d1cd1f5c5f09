//! Bundled synthetic datasets.

pub mod adult;
