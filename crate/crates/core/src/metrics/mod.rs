//! Effectiveness, naturalness and fairness measures.

pub mod fairness;
pub mod naturalness;

pub use fairness::{aod, fairness_report, if_o, if_r, spd, FairnessReport, GroupStats};
pub use naturalness::{
    ann_distance, atn, atn_repeated, contingency_similarity, ks_complement, pearson, pearson_similarity,
    tv_complement, NaturalnessReport, RepeatedNaturalness,
};

use crate::error::{Error, Result};

/// Effective generation speed: instances found per second.
pub fn egs(found: usize, elapsed_secs: f64) -> Result<f64> {
    if !(elapsed_secs > 0.0) {
        return Err(Error::ZeroElapsed);
    }
    Ok(found as f64 / elapsed_secs)
}
