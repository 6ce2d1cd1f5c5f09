//! Distribution similarity between generated and original tables.
//!
//! Column shapes use the KS complement (numeric) or TV complement
//! (categorical); column-pair trends use Pearson similarity (two numeric
//! columns) or contingency similarity (any pair with a categorical
//! member). ATN averages the two means.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::schema::{Dataset, Domain};

/// Bins used to discretize a numeric member of a contingency pair.
pub const CONTINGENCY_BINS: usize = 10;

/// `1 − sup_t |F_real(t) − F_syn(t)|` over the pooled sample points.
pub fn ks_complement(real: &[f64], syn: &[f64]) -> Result<f64> {
    if real.is_empty() || syn.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = real.to_vec();
    let mut b = syn.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        sup = sup.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(1.0 - sup)
}

fn frequencies<K: Ord + Copy>(values: impl Iterator<Item = K>, n: usize) -> BTreeMap<K, f64> {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_insert(0) += 1;
    }
    counts.into_iter().map(|(k, c)| (k, c as f64 / n as f64)).collect()
}

fn half_l1<K: Ord + Copy>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let keys: BTreeSet<K> = p.keys().chain(q.keys()).copied().collect();
    0.5 * keys
        .into_iter()
        .map(|k| (p.get(&k).unwrap_or(&0.0) - q.get(&k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// `1 − ½·Σ_c |f_real(c) − f_syn(c)|` over the union of categories.
pub fn tv_complement(real: &[i64], syn: &[i64]) -> Result<f64> {
    if real.is_empty() || syn.is_empty() {
        return Err(Error::EmptySample);
    }
    let p = frequencies(real.iter().copied(), real.len());
    let q = frequencies(syn.iter().copied(), syn.len());
    Ok((1.0 - half_l1(&p, &q)).clamp(0.0, 1.0))
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::EmptySample);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantColumn);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// `1 − |ρ_real − ρ_syn| / 2`.
pub fn pearson_similarity(real: (&[f64], &[f64]), syn: (&[f64], &[f64])) -> Result<f64> {
    let r = pearson(real.0, real.1)?;
    let s = pearson(syn.0, syn.1)?;
    Ok(1.0 - (r - s).abs() / 2.0)
}

/// `1 − ½·Σ_{a,b} |P_real(a,b) − P_syn(a,b)|` over discretized pairs.
pub fn contingency_similarity(real: (&[i64], &[i64]), syn: (&[i64], &[i64])) -> Result<f64> {
    if real.0.is_empty() || syn.0.is_empty() {
        return Err(Error::EmptySample);
    }
    if real.0.len() != real.1.len() || syn.0.len() != syn.1.len() {
        return Err(Error::DimensionMismatch {
            expected: real.0.len(),
            found: real.1.len(),
        });
    }
    let p = frequencies(real.0.iter().copied().zip(real.1.iter().copied()), real.0.len());
    let q = frequencies(syn.0.iter().copied().zip(syn.1.iter().copied()), syn.0.len());
    Ok((1.0 - half_l1(&p, &q)).clamp(0.0, 1.0))
}

/// Equal-width bin index of each value over `[lo, hi]`; values outside the
/// range land in the edge bins.
pub fn equal_width_bins(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<i64> {
    let width = (hi - lo) / bins as f64;
    values
        .iter()
        .map(|&v| {
            if !(width > 0.0) {
                return 0;
            }
            (((v - lo) / width).floor() as i64).clamp(0, bins as i64 - 1)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnShape {
    pub column: String,
    /// `ks` or `tv`.
    pub metric: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTrend {
    pub columns: [String; 2],
    /// `pearson` or `contingency`.
    pub metric: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalnessReport {
    pub column_shapes: Vec<ColumnShape>,
    pub pair_trends: Vec<PairTrend>,
    /// Numeric pairs left out because a column is constant on one side.
    pub skipped_pairs: Vec<[String; 2]>,
    pub shape_mean: f64,
    pub trend_mean: f64,
    pub atn: f64,
}

fn check_compatible(a: &Dataset, b: &Dataset) -> Result<()> {
    let (sa, sb) = (a.schema(), b.schema());
    if sa.len() != sb.len()
        || sa
            .columns()
            .iter()
            .zip(sb.columns())
            .any(|(x, y)| x.name != y.name || x.domain != y.domain)
    {
        return Err(Error::InvalidSchema("datasets do not share a schema".into()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(())
}

fn codes(ds: &Dataset, col: usize) -> Vec<i64> {
    ds.rows().iter().map(|r| r.get(col)).collect()
}

/// Column-shape and pair-trend similarity of `generated` to `original`.
pub fn atn(generated: &Dataset, original: &Dataset) -> Result<NaturalnessReport> {
    check_compatible(generated, original)?;
    let schema = original.schema();
    let d = schema.len();

    let column_shapes = (0..d)
        .map(|c| {
            let spec = schema.column(c);
            let (metric, score) = if spec.is_numeric() {
                ("ks", ks_complement(&original.column_values(c), &generated.column_values(c))?)
            } else {
                ("tv", tv_complement(&codes(original, c), &codes(generated, c))?)
            };
            Ok(ColumnShape {
                column: spec.name.clone(),
                metric: metric.into(),
                score,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Discretized view for contingency pairs; numeric bins span the real range.
    let discrete = |ds: &Dataset, c: usize| -> Vec<i64> {
        match &schema.column(c).domain {
            Domain::Categorical { .. } => codes(ds, c),
            Domain::Numeric { .. } => {
                let real = original.column_values(c);
                let lo = real.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = real.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                equal_width_bins(&ds.column_values(c), lo, hi, CONTINGENCY_BINS)
            }
        }
    };

    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|a| (a + 1..d).map(move |b| (a, b))).collect();
    let scored: Vec<Result<Option<PairTrend>>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let names = [schema.column(a).name.clone(), schema.column(b).name.clone()];
            if schema.column(a).is_numeric() && schema.column(b).is_numeric() {
                let sim = pearson_similarity(
                    (&original.column_values(a), &original.column_values(b)),
                    (&generated.column_values(a), &generated.column_values(b)),
                );
                match sim {
                    Ok(score) => Ok(Some(PairTrend {
                        columns: names,
                        metric: "pearson".into(),
                        score,
                    })),
                    Err(Error::ConstantColumn) | Err(Error::EmptySample) => Ok(None),
                    Err(e) => Err(e),
                }
            } else {
                let score = contingency_similarity(
                    (&discrete(original, a), &discrete(original, b)),
                    (&discrete(generated, a), &discrete(generated, b)),
                )?;
                Ok(Some(PairTrend {
                    columns: names,
                    metric: "contingency".into(),
                    score,
                }))
            }
        })
        .collect();

    let mut pair_trends = Vec::new();
    let mut skipped_pairs = Vec::new();
    for (res, &(a, b)) in scored.into_iter().zip(&pairs) {
        match res? {
            Some(t) => pair_trends.push(t),
            None => skipped_pairs.push([schema.column(a).name.clone(), schema.column(b).name.clone()]),
        }
    }

    let shape_mean = column_shapes.iter().map(|s| s.score).sum::<f64>() / column_shapes.len() as f64;
    let trend_mean = if pair_trends.is_empty() {
        if !skipped_pairs.is_empty() {
            return Err(Error::ConstantColumn);
        }
        // a single column has no pairs; its shape stands in for the trend
        shape_mean
    } else {
        pair_trends.iter().map(|t| t.score).sum::<f64>() / pair_trends.len() as f64
    };
    Ok(NaturalnessReport {
        column_shapes,
        pair_trends,
        skipped_pairs,
        shape_mean,
        trend_mean,
        atn: (shape_mean + trend_mean) / 2.0,
    })
}

/// ATN averaged over repeated equal-size subsamples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedNaturalness {
    pub repeats: usize,
    pub sample_size: usize,
    pub atn_per_repeat: Vec<f64>,
    /// Component-wise mean over repeats.
    pub mean: NaturalnessReport,
}

/// Draws `min(|generated|, |original|)` rows without replacement from each
/// side, `repeats` times, and averages the reports component-wise.
pub fn atn_repeated(generated: &Dataset, original: &Dataset, repeats: usize, seed: u64) -> Result<RepeatedNaturalness> {
    check_compatible(generated, original)?;
    if repeats == 0 {
        return Err(Error::InvalidConfig("at least one repeat is needed".into()));
    }
    let m = generated.len().min(original.len());
    let mut rng = rng::seeded(rng::derive_seed(seed, "atn-subsample"));
    let mut reports = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let gi = sample(&mut rng, generated.len(), m).into_vec();
        let oi = sample(&mut rng, original.len(), m).into_vec();
        reports.push(atn(&generated.select(&gi), &original.select(&oi))?);
    }
    Ok(RepeatedNaturalness {
        repeats,
        sample_size: m,
        atn_per_repeat: reports.iter().map(|r| r.atn).collect(),
        mean: average_reports(&reports),
    })
}

fn average_reports(reports: &[NaturalnessReport]) -> NaturalnessReport {
    let k = reports.len() as f64;
    let first = &reports[0];
    let column_shapes = first
        .column_shapes
        .iter()
        .enumerate()
        .map(|(i, s)| ColumnShape {
            column: s.column.clone(),
            metric: s.metric.clone(),
            score: reports.iter().map(|r| r.column_shapes[i].score).sum::<f64>() / k,
        })
        .collect();
    // Pairs may be skipped in some repeats; average where present.
    let mut acc: BTreeMap<[String; 2], (String, f64, usize)> = BTreeMap::new();
    let mut order: Vec<[String; 2]> = Vec::new();
    let mut skipped: BTreeSet<[String; 2]> = BTreeSet::new();
    for r in reports {
        for t in &r.pair_trends {
            let e = acc.entry(t.columns.clone()).or_insert_with(|| {
                order.push(t.columns.clone());
                (t.metric.clone(), 0.0, 0)
            });
            e.1 += t.score;
            e.2 += 1;
        }
        skipped.extend(r.skipped_pairs.iter().cloned());
    }
    let pair_trends = order
        .iter()
        .map(|key| {
            let (metric, sum, n) = &acc[key];
            PairTrend {
                columns: key.clone(),
                metric: metric.clone(),
                score: sum / *n as f64,
            }
        })
        .collect();
    let mean = |f: fn(&NaturalnessReport) -> f64| reports.iter().map(f).sum::<f64>() / k;
    NaturalnessReport {
        column_shapes,
        pair_trends,
        skipped_pairs: skipped.into_iter().collect(),
        shape_mean: mean(|r| r.shape_mean),
        trend_mean: mean(|r| r.trend_mean),
        atn: mean(|r| r.atn),
    }
}

/// Mean over generated rows of the Euclidean distance, in encoded space, to
/// the nearest original row.
pub fn ann_distance(original: &Dataset, generated: &Dataset) -> Result<f64> {
    check_compatible(generated, original)?;
    let schema = original.schema();
    let orig: Vec<Vec<f64>> = original.rows().iter().map(|r| schema.encode(r).entries).collect();
    let nearest: Vec<f64> = generated
        .rows()
        .par_iter()
        .map(|r| {
            let x = schema.encode(r).entries;
            orig.iter()
                .map(|o| o.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    Ok(nearest.iter().sum::<f64>() / nearest.len() as f64)
}
