//! Target classifiers: the black-box [`Classifier`] interface, built-in
//! logistic-regression and MLP models, and handles to external models.

mod network;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bridge::ExternalClassifier;
use crate::error::{Error, Result};
use crate::schema::{Dataset, Row, Schema};

pub use network::{Layer, Network};

const FORMAT: &str = "limi-model/1";

/// Predicted label and the confidence of that label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    /// Confidence of `label`, always in `[0.5, 1]`.
    pub score: f64,
}

impl Prediction {
    /// Prediction from the probability of the favorable class. A tie at
    /// 0.5 goes to the favorable label.
    pub fn from_favorable_probability(p: f64, favorable: u8) -> Self {
        let label = if p >= 0.5 { favorable } else { 1 - favorable };
        Prediction {
            label,
            score: p.max(1.0 - p),
        }
    }
}

/// A black-box binary classifier over schema rows.
pub trait Classifier: Sync {
    fn schema(&self) -> &Schema;

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<Prediction>>;

    fn predict(&self, row: &Row) -> Result<Prediction> {
        let mut out = self.predict_batch(std::slice::from_ref(row))?;
        Ok(out.pop().expect("one prediction per row"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Mlp,
    External,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_sizes: vec![64, 32, 16, 8, 4],
            learning_rate: 0.001,
            epochs: 100,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig("MLP needs at least one non-empty hidden layer".into()));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidConfig("learning rate and batch size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            epochs: 50,
            learning_rate: 0.5,
            batch_size: 128,
            seed: 0,
        }
    }
}

/// Training recipe for a built-in model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Mlp(MlpConfig),
    Logistic(LogRegConfig),
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Mlp(MlpConfig::default())
    }
}

impl ModelConfig {
    pub fn with_seed(&self, seed: u64) -> ModelConfig {
        let mut out = self.clone();
        match &mut out {
            ModelConfig::Mlp(c) => c.seed = seed,
            ModelConfig::Logistic(c) => c.seed = seed,
        }
        out
    }
}

/// A trained built-in model together with the schema it encodes rows by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    format: String,
    kind: ModelKind,
    schema: Schema,
    #[serde(default)]
    training_accuracy: Option<f64>,
    network: Network,
}

impl TrainedModel {
    pub fn new(kind: ModelKind, schema: Schema, network: Network) -> Result<Self> {
        if network.input_dim() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                found: network.input_dim(),
            });
        }
        Ok(TrainedModel {
            format: FORMAT.into(),
            kind,
            schema,
            training_accuracy: None,
            network,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// The same model under a compatible schema, e.g. with another
    /// protected attribute selected.
    pub fn with_schema(mut self, schema: Schema) -> Result<Self> {
        if !schema.is_compatible(&self.schema) {
            return Err(Error::InvalidSchema("model schema differs from the dataset schema".into()));
        }
        self.schema = schema;
        Ok(self)
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn training_accuracy(&self) -> Option<f64> {
        self.training_accuracy
    }

    /// Probability of the favorable label.
    pub fn favorable_probability(&self, row: &Row) -> f64 {
        let mut x = vec![0.0; self.schema.len()];
        self.schema.encode_into(row, &mut x);
        let p1 = self.network.probability(&x);
        if self.schema.favorable_label() == 1 {
            p1
        } else {
            1.0 - p1
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s).map_err(|e| Error::json("model file", e))?;
        if m.format != FORMAT {
            return Err(Error::InvalidConfig(format!("unsupported model format `{}`", m.format)));
        }
        if m.network.input_dim() != m.schema.len() {
            return Err(Error::DimensionMismatch {
                expected: m.schema.len(),
                found: m.network.input_dim(),
            });
        }
        Ok(m)
    }
}

impl Classifier for TrainedModel {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<Prediction>> {
        for r in rows {
            self.schema.validate_row(r)?;
        }
        let fav = self.schema.favorable_label();
        let one = |r: &Row| Prediction::from_favorable_probability(self.favorable_probability(r), fav);
        if rows.len() < 512 {
            Ok(rows.iter().map(one).collect())
        } else {
            Ok(rows.par_iter().with_min_len(256).map(one).collect())
        }
    }
}

/// A built-in or external target model.
pub enum ClassifierHandle {
    Builtin(TrainedModel),
    External(ExternalClassifier),
}

impl ClassifierHandle {
    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierHandle::Builtin(m) => m.kind(),
            ClassifierHandle::External(_) => ModelKind::External,
        }
    }

    pub fn input_arity(&self) -> usize {
        self.schema().len()
    }
}

impl Classifier for ClassifierHandle {
    fn schema(&self) -> &Schema {
        match self {
            ClassifierHandle::Builtin(m) => m.schema(),
            ClassifierHandle::External(e) => e.schema(),
        }
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<Prediction>> {
        match self {
            ClassifierHandle::Builtin(m) => m.predict_batch(rows),
            ClassifierHandle::External(e) => e.predict_batch(rows),
        }
    }
}

fn encoded(dataset: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<u8>)> {
    let labels = dataset.labels();
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClassDataset);
    }
    let xs = dataset
        .rows()
        .iter()
        .map(|r| dataset.schema().encode(r).entries)
        .collect();
    Ok((xs, labels.to_vec()))
}

fn finish(kind: ModelKind, dataset: &Dataset, network: Network) -> Result<TrainedModel> {
    let mut model = TrainedModel::new(kind, dataset.schema().clone(), network)?;
    model.training_accuracy = Some(accuracy(&model, dataset)?);
    Ok(model)
}

/// Trains the ReLU MLP with Adam on binary cross-entropy.
pub fn train_mlp(dataset: &Dataset, cfg: &MlpConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    let (xs, ys) = encoded(dataset)?;
    let mut net = Network::new(dataset.schema().len(), &cfg.hidden_sizes, cfg.seed);
    network::fit(
        &mut net,
        &xs,
        &ys,
        cfg.epochs,
        cfg.batch_size,
        network::Optimizer::Adam { lr: cfg.learning_rate },
        crate::rng::derive_seed(cfg.seed, "shuffle"),
    );
    finish(ModelKind::Mlp, dataset, net)
}

/// Trains logistic regression by mini-batch gradient descent.
pub fn train_logreg(dataset: &Dataset, epochs: usize, lr: f64, seed: u64) -> Result<TrainedModel> {
    train_logreg_with(
        dataset,
        &LogRegConfig {
            epochs,
            learning_rate: lr,
            seed,
            ..LogRegConfig::default()
        },
    )
}

pub fn train_logreg_with(dataset: &Dataset, cfg: &LogRegConfig) -> Result<TrainedModel> {
    if !(cfg.learning_rate > 0.0) || cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("learning rate and batch size must be positive".into()));
    }
    let (xs, ys) = encoded(dataset)?;
    let mut net = Network::from_layers(vec![Layer {
        inputs: dataset.schema().len(),
        outputs: 1,
        weights: vec![0.0; dataset.schema().len()],
        bias: vec![0.0],
    }]);
    network::fit(
        &mut net,
        &xs,
        &ys,
        cfg.epochs,
        cfg.batch_size,
        network::Optimizer::Sgd { lr: cfg.learning_rate },
        crate::rng::derive_seed(cfg.seed, "shuffle"),
    );
    finish(ModelKind::Logistic, dataset, net)
}

pub fn train(dataset: &Dataset, cfg: &ModelConfig) -> Result<TrainedModel> {
    match cfg {
        ModelConfig::Mlp(c) => train_mlp(dataset, c),
        ModelConfig::Logistic(c) => train_logreg_with(dataset, c),
    }
}

/// Trains a fresh model on `base` followed by `augment`.
pub fn retrain(base: &Dataset, augment: &Dataset, cfg: &ModelConfig) -> Result<TrainedModel> {
    let combined = base.concat(augment)?;
    train(&combined, cfg)
}

/// Fraction of rows whose predicted label equals the ground truth.
pub fn accuracy<C: Classifier + ?Sized>(model: &C, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptySample);
    }
    let preds = model.predict_batch(dataset.rows())?;
    let hits = preds
        .iter()
        .zip(dataset.labels())
        .filter(|(p, &y)| p.label == y)
        .count();
    Ok(hits as f64 / dataset.len() as f64)
}
