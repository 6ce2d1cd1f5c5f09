//! Every chapter of the guide is compiled into a module here so that
//! `cargo test` runs its code listings as doc-tests.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/data.md")]
pub mod data {}
#[doc = include_str!("src/generator.md")]
pub mod generator {}
#[doc = include_str!("src/models.md")]
pub mod models {}
#[doc = include_str!("src/surrogate.md")]
pub mod surrogate {}
#[doc = include_str!("src/probing.md")]
pub mod probing {}
#[doc = include_str!("src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("src/reports.md")]
pub mod reports {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
#[doc = include_str!("src/bridge.md")]
pub mod bridge {}
#[doc = include_str!("src/acceptance.md")]
pub mod acceptance {}
