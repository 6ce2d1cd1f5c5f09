use std::collections::HashSet;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::probe::DiscriminatoryPair;
use crate::rng;
use crate::schema::{Dataset, Row};

/// Draws `round(fraction · |original|)` distinct first-members from `pairs`.
/// The draw is seeded; the result keeps the order of `pairs`.
pub fn sample_instances(pairs: &[DiscriminatoryPair], original_len: usize, fraction: f64, seed: u64) -> Result<Vec<Row>> {
    let needed = (fraction * original_len as f64).round() as usize;
    let mut seen = HashSet::new();
    let unique: Vec<&Row> = pairs.iter().map(|p| &p.x).filter(|x| seen.insert(*x)).collect();
    if unique.len() < needed {
        return Err(Error::InsufficientInstances {
            needed,
            available: unique.len(),
        });
    }
    let mut rng = rng::seeded(rng::derive_seed(seed, "retrain-sample"));
    let mut picked = index::sample(&mut rng, unique.len(), needed).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| unique[i].clone()).collect())
}

/// Labels each row by majority vote of its `k` nearest rows of `reference`
/// (Euclidean distance on encoded features). Equal distances are broken by
/// row order; a tied vote goes to the favorable label.
pub fn knn_labels(reference: &Dataset, rows: &[Row], k: usize) -> Result<Vec<u8>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if reference.is_empty() {
        return Err(Error::EmptySample);
    }
    let schema = reference.schema();
    let k = k.min(reference.len());
    let fav = schema.favorable_label();
    let refs: Vec<Vec<f64>> = reference.rows().iter().map(|r| schema.encode(r).entries).collect();
    for r in rows {
        schema.validate_row(r)?;
    }
    Ok(rows
        .par_iter()
        .map(|row| {
            let x = schema.encode(row).entries;
            let mut dist: Vec<(f64, usize)> = refs
                .iter()
                .enumerate()
                .map(|(i, y)| (x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum(), i))
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < dist.len() {
                dist.select_nth_unstable_by(k - 1, cmp);
            }
            let votes_fav = dist[..k]
                .iter()
                .filter(|(_, i)| reference.labels()[*i] == fav)
                .count();
            if 2 * votes_fav >= k {
                fav
            } else {
                1 - fav
            }
        })
        .collect())
}
