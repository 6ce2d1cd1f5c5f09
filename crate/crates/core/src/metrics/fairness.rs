//! Individual and group fairness of a classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Classifier, Prediction};
use crate::probe::check_rows;
use crate::schema::{sample_uniform, Dataset, Row};

/// Fraction of `rows` that have a protected variant with another label.
pub fn discriminatory_ratio<C: Classifier + ?Sized>(model: &C, rows: &[Row]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::EmptySample);
    }
    let hits = check_rows(model, model.schema(), rows)?;
    Ok(hits.iter().filter(|h| h.is_some()).count() as f64 / rows.len() as f64)
}

/// Discriminatory ratio over `n` rows sampled uniformly from the domain.
pub fn if_r<C: Classifier + ?Sized>(model: &C, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    discriminatory_ratio(model, &sample_uniform(model.schema(), n, seed))
}

/// Discriminatory ratio over the rows of `dataset`.
pub fn if_o<C: Classifier + ?Sized>(model: &C, dataset: &Dataset) -> Result<f64> {
    discriminatory_ratio(model, dataset.rows())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub positive_rate: f64,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
}

fn group_stats(preds: &[Prediction], labels: &[u8], favorable: u8) -> Option<GroupStats> {
    if preds.is_empty() {
        return None;
    }
    let n = preds.len();
    let positives = preds.iter().filter(|p| p.label == favorable).count();
    let rate = |truth: u8| {
        let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == truth).collect();
        if idx.is_empty() {
            None
        } else {
            let hit = idx.iter().filter(|&&i| preds[i].label == favorable).count();
            Some(hit as f64 / idx.len() as f64)
        }
    };
    Some(GroupStats {
        count: n,
        positive_rate: positives as f64 / n as f64,
        tpr: rate(favorable),
        fpr: rate(1 - favorable),
    })
}

/// Per-group statistics for the privileged and unprivileged groups of
/// `protected_col`.
pub fn group_breakdown<C: Classifier + ?Sized>(
    model: &C,
    dataset: &Dataset,
    protected_col: usize,
) -> Result<(GroupStats, GroupStats)> {
    let schema = dataset.schema();
    if protected_col >= schema.len() {
        return Err(Error::InvalidConfig(format!("no column {protected_col}")));
    }
    if schema.column(protected_col).privileged.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "column `{}` has no privileged values",
            schema.column(protected_col).name
        )));
    }
    let preds = model.predict_batch(dataset.rows())?;
    let fav = schema.favorable_label();
    let mut split: [(Vec<Prediction>, Vec<u8>); 2] = Default::default();
    for ((row, p), &y) in dataset.rows().iter().zip(&preds).zip(dataset.labels()) {
        let g = usize::from(schema.is_privileged(protected_col, row));
        split[g].0.push(*p);
        split[g].1.push(y);
    }
    let stats = |g: usize, name: &str| {
        group_stats(&split[g].0, &split[g].1, fav).ok_or_else(|| Error::EmptyGroup { group: name.into() })
    };
    Ok((stats(1, "privileged")?, stats(0, "unprivileged")?))
}

/// `|P(ŷ = fav | unprivileged) − P(ŷ = fav | privileged)|`.
pub fn spd<C: Classifier + ?Sized>(model: &C, dataset: &Dataset, protected_col: usize) -> Result<f64> {
    let (p, u) = group_breakdown(model, dataset, protected_col)?;
    Ok((u.positive_rate - p.positive_rate).abs())
}

fn aod_from(p: &GroupStats, u: &GroupStats) -> Result<f64> {
    let need = |v: Option<f64>, group: &str, missing: &str| {
        v.ok_or_else(|| Error::UndefinedRate {
            group: group.into(),
            missing: missing.into(),
        })
    };
    let tpr_gap = (need(u.tpr, "unprivileged", "positive")? - need(p.tpr, "privileged", "positive")?).abs();
    let fpr_gap = (need(u.fpr, "unprivileged", "negative")? - need(p.fpr, "privileged", "negative")?).abs();
    Ok(0.5 * (fpr_gap + tpr_gap))
}

/// `½(|ΔFPR| + |ΔTPR|)` between the two groups.
pub fn aod<C: Classifier + ?Sized>(model: &C, dataset: &Dataset, protected_col: usize) -> Result<f64> {
    let (p, u) = group_breakdown(model, dataset, protected_col)?;
    aod_from(&p, &u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub protected_column: String,
    pub if_r: f64,
    pub if_r_samples: usize,
    pub if_o: f64,
    pub spd: f64,
    pub aod: f64,
    pub privileged: GroupStats,
    pub unprivileged: GroupStats,
    pub accuracy: f64,
}

/// All four fairness measures plus accuracy.
///
/// `if_o` is computed on `train`; group metrics and accuracy on `eval`.
pub fn fairness_report<C: Classifier + ?Sized>(
    model: &C,
    train: &Dataset,
    eval: &Dataset,
    protected_col: usize,
    if_r_samples: usize,
    seed: u64,
) -> Result<FairnessReport> {
    let (p, u) = group_breakdown(model, eval, protected_col)?;
    Ok(FairnessReport {
        protected_column: eval.schema().column(protected_col).name.clone(),
        if_r: if_r(model, if_r_samples, seed)?,
        if_r_samples,
        if_o: if_o(model, train)?,
        spd: (u.positive_rate - p.positive_rate).abs(),
        aod: aod_from(&p, &u)?,
        privileged: p,
        unprivileged: u,
        accuracy: crate::models::accuracy(model, eval)?,
    })
}
