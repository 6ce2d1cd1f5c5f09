#![allow(dead_code)]

pub mod oracles;

use limi::generator::{Generator, LatentVector};
use limi::models::{Classifier, Prediction};
use limi::schema::{ColumnSpec, Domain, Row, Schema};
use limi::Result;

/// A classifier given by its favorable-class probability.
pub struct FnModel<F> {
    pub schema: Schema,
    pub p: F,
}

impl<F: Fn(&Row) -> f64 + Sync> Classifier for FnModel<F> {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<Prediction>> {
        let fav = self.schema.favorable_label();
        Ok(rows
            .iter()
            .map(|r| Prediction::from_favorable_probability((self.p)(r), fav))
            .collect())
    }
}

pub fn model<F: Fn(&Row) -> f64 + Sync>(schema: &Schema, p: F) -> FnModel<F> {
    FnModel {
        schema: schema.clone(),
        p,
    }
}

/// Decodes latent coordinate `i` straight into column `i`: the domain
/// midpoint plus an eighth of its width per unit of `z`, rounded and clamped.
pub struct AxisGen {
    pub schema: Schema,
}

impl Generator for AxisGen {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn latent_dim(&self) -> usize {
        self.schema.len()
    }

    fn decode_batch(&self, zs: &[LatentVector]) -> Result<Vec<Row>> {
        Ok(zs
            .iter()
            .map(|z| {
                let codes = self
                    .schema
                    .columns()
                    .iter()
                    .zip(z.as_slice())
                    .map(|(c, &v)| {
                        let (lo, hi) = c.domain.code_range();
                        let mid = (lo + hi) as f64 / 2.0;
                        let width = (hi - lo) as f64;
                        ((mid + width / 8.0 * v).round() as i64).clamp(lo, hi)
                    })
                    .collect();
                Row::new(codes)
            })
            .collect())
    }
}

/// `x` (0..=100), binary `sex` (protected, `M` privileged) and `age`
/// bins 1..=9.
pub fn people() -> Schema {
    Schema::new(
        vec![
            ColumnSpec::numeric("x", 0, 100),
            ColumnSpec::categorical("sex", &["F", "M"]).protected().privileged(&["M"]),
            ColumnSpec::numeric("age", 1, 9),
        ],
        "y",
        1,
    )
    .unwrap()
}

pub fn is_categorical(c: &ColumnSpec) -> bool {
    matches!(c.domain, Domain::Categorical { .. })
}

pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}
