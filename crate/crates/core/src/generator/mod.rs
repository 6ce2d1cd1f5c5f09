//! Latent generative models: a decoder `g: Z → rows` over a standard-normal
//! latent space, with a built-in Gaussian copula and external generators
//! reached through the bridge.

mod copula;
pub mod normal;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bridge::ExternalGenerator;
use crate::error::Result;
use crate::rng::{self, Rng};
use crate::schema::{Row, Schema};

pub use copula::{cholesky, fit_copula, CopulaModel, Marginal};

/// A point in a generator's latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn new(entries: Vec<f64>) -> Self {
        LatentVector(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        LatentVector(vec![0.0; dim])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    /// `self + scale · direction`.
    pub fn add_scaled(&self, direction: &[f64], scale: f64) -> LatentVector {
        LatentVector(self.0.iter().zip(direction).map(|(a, d)| a + scale * d).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for LatentVector {
    fn from(v: Vec<f64>) -> Self {
        LatentVector(v)
    }
}

/// Endless seeded stream of i.i.d. standard-normal latent vectors.
///
/// Two streams with the same seed and dimension yield the same sequence no
/// matter how the draws are batched.
pub struct LatentStream {
    rng: Rng,
    dim: usize,
}

impl LatentStream {
    pub fn new(dim: usize, seed: u64) -> Self {
        LatentStream {
            rng: rng::seeded(seed),
            dim,
        }
    }

    pub fn next_vector(&mut self) -> LatentVector {
        LatentVector((0..self.dim).map(|_| StandardNormal.sample(&mut self.rng)).collect())
    }

    pub fn next_batch(&mut self, n: usize) -> Vec<LatentVector> {
        (0..n).map(|_| self.next_vector()).collect()
    }
}

/// `n` i.i.d. standard-normal latent vectors.
pub fn sample_latents(n: usize, latent_dim: usize, seed: u64) -> Vec<LatentVector> {
    LatentStream::new(latent_dim, seed).next_batch(n)
}

/// A decoder from latent vectors to schema-valid rows.
pub trait Generator: Sync {
    fn schema(&self) -> &Schema;

    fn latent_dim(&self) -> usize;

    fn decode_batch(&self, zs: &[LatentVector]) -> Result<Vec<Row>>;

    fn decode(&self, z: &LatentVector) -> Result<Row> {
        let mut rows = self.decode_batch(std::slice::from_ref(z))?;
        Ok(rows.pop().expect("one row per latent"))
    }
}

/// Built-in or external generator.
pub enum GeneratorHandle {
    Copula(CopulaModel),
    External(ExternalGenerator),
}

impl Generator for CopulaModel {
    fn schema(&self) -> &Schema {
        CopulaModel::schema(self)
    }

    fn latent_dim(&self) -> usize {
        CopulaModel::latent_dim(self)
    }

    fn decode_batch(&self, zs: &[LatentVector]) -> Result<Vec<Row>> {
        use rayon::prelude::*;
        zs.par_iter().map(|z| CopulaModel::decode(self, z)).collect()
    }

    fn decode(&self, z: &LatentVector) -> Result<Row> {
        CopulaModel::decode(self, z)
    }
}

impl Generator for GeneratorHandle {
    fn schema(&self) -> &Schema {
        match self {
            GeneratorHandle::Copula(m) => m.schema(),
            GeneratorHandle::External(e) => e.schema(),
        }
    }

    fn latent_dim(&self) -> usize {
        match self {
            GeneratorHandle::Copula(m) => m.latent_dim(),
            GeneratorHandle::External(e) => e.latent_dim(),
        }
    }

    fn decode_batch(&self, zs: &[LatentVector]) -> Result<Vec<Row>> {
        match self {
            GeneratorHandle::Copula(m) => Generator::decode_batch(m, zs),
            GeneratorHandle::External(e) => e.decode_batch(zs),
        }
    }
}
