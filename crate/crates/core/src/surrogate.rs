//! Linear surrogate of the target model's decision boundary in latent space.
//!
//! Latents are decoded, labeled by the target model, filtered by confidence,
//! balanced per class, and separated by a linear SVM. The resulting
//! hyperplane `wᵀz + b = 0` stands in for the (unknown) boundary.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{sample_latents, Generator, LatentVector};
use crate::models::Classifier;
use crate::rng;

/// Latents decoded through a generator and scored by a model.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLatents {
    pub latents: Vec<LatentVector>,
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
}

impl LabeledLatents {
    pub fn len(&self) -> usize {
        self.latents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latents.is_empty()
    }
}

/// Decodes `latents` and records the model's label and confidence for each.
pub fn label_latents<G, C>(gen: &G, model: &C, latents: Vec<LatentVector>) -> Result<LabeledLatents>
where
    G: Generator + ?Sized,
    C: Classifier + ?Sized,
{
    let mut labels = Vec::with_capacity(latents.len());
    let mut scores = Vec::with_capacity(latents.len());
    for chunk in latents.chunks(8192) {
        let rows = gen.decode_batch(chunk)?;
        for p in model.predict_batch(&rows)? {
            labels.push(p.label);
            scores.push(p.score);
        }
    }
    Ok(LabeledLatents {
        latents,
        labels,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuxConfig {
    pub n_init: usize,
    pub epsilon: f64,
    pub per_class: usize,
    pub seed: u64,
}

impl Default for AuxConfig {
    fn default() -> Self {
        AuxConfig {
            n_init: 100_000,
            epsilon: 0.7,
            per_class: 5_000,
            seed: 0,
        }
    }
}

impl AuxConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon {} must lie in [0.5, 1)",
                self.epsilon
            )));
        }
        if self.per_class == 0 || self.n_init == 0 {
            return Err(Error::InvalidConfig("n_init and per_class must be positive".into()));
        }
        Ok(())
    }
}

/// Class-balanced, confidence-filtered latents labeled by the target model.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxDataset {
    pub latents: Vec<LatentVector>,
    pub labels: Vec<u8>,
    /// Per-class counts that survived the confidence filter, before balancing.
    pub filtered_counts: [usize; 2],
}

/// Samples `cfg.n_init` latents and builds the auxiliary dataset from them.
pub fn build_aux<G, C>(gen: &G, model: &C, cfg: &AuxConfig) -> Result<AuxDataset>
where
    G: Generator + ?Sized,
    C: Classifier + ?Sized,
{
    cfg.validate()?;
    let zs = sample_latents(cfg.n_init, gen.latent_dim(), rng::derive_seed(cfg.seed, "z-init"));
    let labeled = label_latents(gen, model, zs)?;
    aux_from_labeled(&labeled, cfg)
}

/// Filters by confidence, splits by label and balances each class to
/// `per_class` samples.
///
/// Small classes are topped up by seeded draws with replacement; large ones
/// keep their `per_class` most confident members.
pub fn aux_from_labeled(labeled: &LabeledLatents, cfg: &AuxConfig) -> Result<AuxDataset> {
    cfg.validate()?;
    let mut order: Vec<usize> = (0..labeled.len())
        .filter(|&i| labeled.scores[i] >= cfg.epsilon)
        .collect();
    // stable sort keeps sample order among equal scores
    order.sort_by(|&a, &b| labeled.scores[b].total_cmp(&labeled.scores[a]));

    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for i in order {
        by_class[labeled.labels[i] as usize].push(i);
    }
    let counts = [by_class[0].len(), by_class[1].len()];
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::BoundaryUnlearnable {
            class0: counts[0],
            class1: counts[1],
        });
    }

    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, "oversample"));
    let mut latents = Vec::with_capacity(2 * cfg.per_class);
    let mut labels = Vec::with_capacity(2 * cfg.per_class);
    for (class, members) in by_class.iter().enumerate() {
        let mut picked: Vec<usize> = members.iter().copied().take(cfg.per_class).collect();
        while picked.len() < cfg.per_class {
            picked.push(members[rng.random_range(0..members.len())]);
        }
        for i in picked {
            latents.push(labeled.latents[i].clone());
            labels.push(class as u8);
        }
    }
    Ok(AuxDataset {
        latents,
        labels,
        filtered_counts: counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    /// L2 weight λ of the SVM objective.
    pub reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            reg: 1e-4,
            epochs: 20,
            seed: 0,
        }
    }
}

/// Hyperplane `wᵀz + b = 0` in latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundaryDoc", into = "BoundaryDoc")]
pub struct SurrogateBoundary {
    w: Vec<f64>,
    b: f64,
    norm: f64,
    w_unit: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoundaryDoc {
    w: Vec<f64>,
    b: f64,
}

impl TryFrom<BoundaryDoc> for SurrogateBoundary {
    type Error = Error;

    fn try_from(doc: BoundaryDoc) -> Result<Self> {
        SurrogateBoundary::new(doc.w, doc.b)
    }
}

impl From<SurrogateBoundary> for BoundaryDoc {
    fn from(s: SurrogateBoundary) -> Self {
        BoundaryDoc { w: s.w, b: s.b }
    }
}

impl SurrogateBoundary {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() || !b.is_finite() {
            return Err(Error::DegenerateBoundary(format!("‖w‖ = {norm}")));
        }
        let w_unit = w.iter().map(|v| v / norm).collect();
        Ok(SurrogateBoundary { w, b, norm, w_unit })
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    /// `w / ‖w‖`.
    pub fn unit_normal(&self) -> &[f64] {
        &self.w_unit
    }

    /// `b / ‖w‖`.
    pub fn unit_offset(&self) -> f64 {
        self.b / self.norm
    }

    /// Signed Euclidean distance `(wᵀz + b) / ‖w‖`.
    pub fn distance(&self, z: &LatentVector) -> f64 {
        debug_assert_eq!(z.len(), self.w.len());
        (z.dot(&self.w) + self.b) / self.norm
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("boundary serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::json("boundary file", e))
    }
}

/// Same as [`SurrogateBoundary::distance`], with a dimension check.
pub fn distance(boundary: &SurrogateBoundary, z: &LatentVector) -> Result<f64> {
    if z.len() != boundary.dim() {
        return Err(Error::DimensionMismatch {
            expected: boundary.dim(),
            found: z.len(),
        });
    }
    Ok(boundary.distance(z))
}

/// A fitted boundary with its training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub boundary: SurrogateBoundary,
    /// Regularized hinge objective at `w = 0` followed by its value after
    /// each epoch.
    pub objective: Vec<f64>,
}

/// Fits a linear SVM by Pegasos stochastic subgradient descent.
pub fn fit_boundary(aux: &AuxDataset, cfg: &SvmConfig) -> Result<SurrogateBoundary> {
    Ok(fit_boundary_traced(aux, cfg)?.boundary)
}

pub fn fit_boundary_traced(aux: &AuxDataset, cfg: &SvmConfig) -> Result<SvmFit> {
    if !(cfg.reg > 0.0) {
        return Err(Error::InvalidConfig("SVM regularization must be positive".into()));
    }
    if !aux.labels.contains(&0) || !aux.labels.contains(&1) {
        return Err(Error::BoundaryUnlearnable {
            class0: aux.labels.iter().filter(|&&l| l == 0).count(),
            class1: aux.labels.iter().filter(|&&l| l == 1).count(),
        });
    }
    let dim = aux.latents[0].len();
    let ys: Vec<f64> = aux.labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    // The bias is the weight of a constant feature.
    let mut w = vec![0.0; dim + 1];
    let lambda = cfg.reg;
    let radius = 1.0 / lambda.sqrt();
    let mut order: Vec<usize> = (0..ys.len()).collect();
    let mut rng = rng::seeded(rng::derive_seed(cfg.seed, "svm"));
    let mut objective = vec![svm_objective(&w, aux, &ys, lambda)];
    let mut t = 0u64;

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = aux.latents[i].as_slice();
            let margin = ys[i] * (x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[dim]);
            let shrink = 1.0 - eta * lambda;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                let step = eta * ys[i];
                for (v, a) in w.iter_mut().zip(x) {
                    *v += step * a;
                }
                w[dim] += step;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                for v in w.iter_mut() {
                    *v *= s;
                }
            }
        }
        objective.push(svm_objective(&w, aux, &ys, lambda));
    }
    let b = w.pop().expect("bias slot");
    Ok(SvmFit {
        boundary: SurrogateBoundary::new(w, b)?,
        objective,
    })
}

fn svm_objective(w: &[f64], aux: &AuxDataset, ys: &[f64], lambda: f64) -> f64 {
    let dim = w.len() - 1;
    let hinge: f64 = aux
        .latents
        .iter()
        .zip(ys)
        .map(|(z, y)| (1.0 - y * (z.dot(&w[..dim]) + w[dim])).max(0.0))
        .sum();
    0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>() + hinge / ys.len() as f64
}

/// Area under the ROC curve of `scores` against binary `labels`, by the
/// Mann–Whitney rank-sum statistic. Tied scores count one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: scores.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::OneClassSample);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of positives, kept integral so ties stay exact.
    let mut twice_rank_sum: u128 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // ranks start+1..=end share the midrank (start+1+end)/2
        let twice_mid = (start + 1 + end) as u128;
        let pos_in_group = order[start..end].iter().filter(|&&i| labels[i] == 1).count() as u128;
        twice_rank_sum += twice_mid * pos_in_group;
        start = end;
    }
    let np = n_pos as u128;
    // 2·U = 2·R − n_pos(n_pos+1)
    let twice_u = twice_rank_sum - np * (np + 1);
    Ok(twice_u as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// AUC of the signed distances of `latents` to `boundary`.
pub fn boundary_auc(boundary: &SurrogateBoundary, latents: &[LatentVector], labels: &[u8]) -> Result<f64> {
    let scores: Vec<f64> = latents.iter().map(|z| boundary.distance(z)).collect();
    auc(&scores, labels)
}

/// AUC on the auxiliary set and on freshly sampled latents labeled by the
/// model without any confidence filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub train_auc: f64,
    pub heldout_auc: f64,
    pub heldout_size: usize,
    pub filtered_counts: [usize; 2],
    pub per_class: usize,
}

pub fn fitness<G, C>(
    gen: &G,
    model: &C,
    boundary: &SurrogateBoundary,
    aux: &AuxDataset,
    heldout_size: usize,
    seed: u64,
) -> Result<FitnessReport>
where
    G: Generator + ?Sized,
    C: Classifier + ?Sized,
{
    let fresh = sample_latents(heldout_size, gen.latent_dim(), rng::derive_seed(seed, "heldout"));
    let heldout = label_latents(gen, model, fresh)?;
    Ok(FitnessReport {
        train_auc: boundary_auc(boundary, &aux.latents, &aux.labels)?,
        heldout_auc: boundary_auc(boundary, &heldout.latents, &heldout.labels)?,
        heldout_size,
        filtered_counts: aux.filtered_counts,
        per_class: aux.latents.len() / 2,
    })
}
