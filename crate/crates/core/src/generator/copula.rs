//! Gaussian-copula tabular synthesizer.
//!
//! Each column keeps its empirical marginal; dependence between columns is
//! carried by a correlation matrix estimated on per-column normal scores.
//! Decoding maps a standard-normal latent `z` through the Cholesky factor,
//! the normal CDF, and each column's inverse marginal, so the latent space
//! is exactly Gaussian and one latent axis corresponds to one column.

use serde::{Deserialize, Serialize};

use super::normal::{std_normal_cdf, std_normal_quantile};
use super::LatentVector;
use crate::error::{Error, Result};
use crate::schema::{Dataset, Domain, Row, Schema};

const FORMAT: &str = "limi-copula/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Marginal {
    /// Sorted distinct values with cumulative counts; together they encode
    /// the full sorted sample (the empirical quantile table).
    Numeric {
        values: Vec<i64>,
        cumulative_counts: Vec<u64>,
    },
    /// Upper ends of the cumulative frequency interval of each category,
    /// in domain order. Category `k` owns `[cumulative[k-1], cumulative[k])`.
    Categorical { cumulative: Vec<f64> },
}

impl Marginal {
    fn sample_size(&self) -> u64 {
        match self {
            Marginal::Numeric { cumulative_counts, .. } => *cumulative_counts.last().unwrap_or(&0),
            Marginal::Categorical { .. } => 0,
        }
    }

    /// Value of the `k`-th order statistic (0-based).
    fn order_statistic(values: &[i64], cumulative: &[u64], k: u64) -> i64 {
        let j = cumulative.partition_point(|&c| c <= k);
        values[j.min(values.len() - 1)]
    }

    /// Inverse marginal CDF at `u`, returned as a column code.
    pub fn invert(&self, u: f64, domain: &Domain) -> i64 {
        match self {
            Marginal::Numeric {
                values,
                cumulative_counts,
            } => {
                let n = self.sample_size() as f64;
                // Order statistic k sits at probability (k + 0.5) / n.
                let pos = (u * n - 0.5).clamp(0.0, n - 1.0);
                let k0 = pos.floor();
                let frac = pos - k0;
                let v0 = Self::order_statistic(values, cumulative_counts, k0 as u64) as f64;
                let v = if frac > 0.0 {
                    let v1 = Self::order_statistic(values, cumulative_counts, k0 as u64 + 1) as f64;
                    v0 + frac * (v1 - v0)
                } else {
                    v0
                };
                let (lo, hi) = domain.code_range();
                (v.round() as i64).clamp(lo, hi)
            }
            Marginal::Categorical { cumulative } => {
                let k = cumulative.partition_point(|&c| c <= u);
                if k < cumulative.len() {
                    return k as i64;
                }
                // u at (or rounding past) the top: last category with mass.
                let mut last = cumulative.len() - 1;
                while last > 0 && cumulative[last] <= cumulative[last - 1] {
                    last -= 1;
                }
                last as i64
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    format: String,
    schema: Schema,
    marginals: Vec<Marginal>,
    /// Lower-triangular Cholesky factor, row-major, one row per column.
    factor: Vec<Vec<f64>>,
    /// Ridge added to the correlation matrix before factorization.
    ridge: f64,
}

impl CopulaModel {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn latent_dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn factor(&self) -> &[Vec<f64>] {
        &self.factor
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Builds a model from explicit parts; mostly useful in tests.
    pub fn from_parts(schema: Schema, marginals: Vec<Marginal>, factor: Vec<Vec<f64>>) -> Result<Self> {
        let d = schema.len();
        if marginals.len() != d || factor.len() != d || factor.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: marginals.len(),
            });
        }
        Ok(CopulaModel {
            format: FORMAT.into(),
            schema,
            marginals,
            factor,
            ridge: 0.0,
        })
    }

    pub fn decode(&self, z: &LatentVector) -> Result<Row> {
        let d = self.latent_dim();
        if z.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: z.len(),
            });
        }
        let z = z.as_slice();
        let values = (0..d)
            .map(|i| {
                let row = &self.factor[i];
                let x: f64 = row[..=i].iter().zip(&z[..=i]).map(|(l, zj)| l * zj).sum();
                let u = std_normal_cdf(x);
                self.marginals[i].invert(u, &self.schema.column(i).domain)
            })
            .collect();
        Ok(Row::new(values))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("copula serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: CopulaModel = serde_json::from_str(s).map_err(|e| Error::json("generator file", e))?;
        if m.format != FORMAT {
            return Err(Error::InvalidConfig(format!(
                "unsupported generator format `{}`",
                m.format
            )));
        }
        Ok(m)
    }
}

/// Fits marginals and the normal-score correlation of `dataset`.
pub fn fit_copula(dataset: &Dataset) -> Result<CopulaModel> {
    let schema = dataset.schema();
    let n = dataset.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let d = schema.len();
    let mut marginals = Vec::with_capacity(d);
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(d);

    for (col, spec) in schema.columns().iter().enumerate() {
        let codes: Vec<i64> = dataset.rows().iter().map(|r| r.get(col)).collect();
        let distinct = {
            let mut s = codes.clone();
            s.sort_unstable();
            s.dedup();
            s.len()
        };
        if distinct < 2 {
            return Err(Error::DegenerateColumn {
                column: spec.name.clone(),
            });
        }
        match &spec.domain {
            Domain::Numeric { .. } => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by_key(|&i| codes[i]);
                let mut values = Vec::new();
                let mut cumulative_counts = Vec::new();
                let mut col_scores = vec![0.0; n];
                let mut start = 0;
                while start < n {
                    let v = codes[order[start]];
                    let mut end = start;
                    while end < n && codes[order[end]] == v {
                        end += 1;
                    }
                    // 1-based ranks start+1..=end share their midrank
                    let midrank = (start + 1 + end) as f64 / 2.0;
                    let s = std_normal_quantile((midrank - 0.5) / n as f64);
                    for &i in &order[start..end] {
                        col_scores[i] = s;
                    }
                    values.push(v);
                    cumulative_counts.push(end as u64);
                    start = end;
                }
                marginals.push(Marginal::Numeric {
                    values,
                    cumulative_counts,
                });
                scores.push(col_scores);
            }
            Domain::Categorical { values } => {
                let k = values.len();
                let mut counts = vec![0u64; k];
                for &c in &codes {
                    counts[c as usize] += 1;
                }
                let mut cumulative = Vec::with_capacity(k);
                let mut acc = 0u64;
                for &c in &counts {
                    acc += c;
                    cumulative.push(acc as f64 / n as f64);
                }
                *cumulative.last_mut().unwrap() = 1.0;
                let midpoint_scores: Vec<f64> = (0..k)
                    .map(|j| {
                        let lo = if j == 0 { 0.0 } else { cumulative[j - 1] };
                        std_normal_quantile((lo + cumulative[j]) / 2.0)
                    })
                    .collect();
                scores.push(codes.iter().map(|&c| midpoint_scores[c as usize]).collect());
                marginals.push(Marginal::Categorical { cumulative });
            }
        }
    }

    let corr = correlation_matrix(&scores);
    let (factor, ridge) = regularized_cholesky(&corr);
    Ok(CopulaModel {
        format: FORMAT.into(),
        schema: schema.clone(),
        marginals,
        factor,
        ridge,
    })
}

fn correlation_matrix(cols: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = cols.len();
    let n = cols[0].len() as f64;
    let centered: Vec<Vec<f64>> = cols
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / n;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        out[i][i] = 1.0;
        for j in 0..i {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            out[i][j] = r;
            out[j][i] = r;
        }
    }
    out
}

/// Cholesky factor of a symmetric matrix, or `None` when it is not
/// numerically positive definite.
pub fn cholesky(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let d = m.len();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let diag = m[i][i] - s;
                if diag <= 1e-12 || !diag.is_finite() {
                    return None;
                }
                l[i][i] = diag.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    Some(l)
}

/// Factorizes `m + δ·I`, starting from δ = 0 and escalating δ tenfold from
/// 1e-6 until the factorization succeeds.
fn regularized_cholesky(m: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    if let Some(l) = cholesky(m) {
        return (l, 0.0);
    }
    let mut ridge = 1e-6;
    loop {
        let mut shifted = m.to_vec();
        for (i, row) in shifted.iter_mut().enumerate() {
            row[i] += ridge;
        }
        if let Some(l) = cholesky(&shifted) {
            return (l, ridge);
        }
        ridge *= 10.0;
    }
}
