//! End-to-end runs: each command reads a [`RunConfig`], loads what it needs
//! from the run directory, and writes its artifacts and JSON reports back.
//!
//! | command            | writes                                        |
//! |--------------------|-----------------------------------------------|
//! | `fit_gen`          | `generator.json`, `generator_report.json`     |
//! | `train_model`      | `model.json`, `model_report.json`             |
//! | `approximate`      | `boundary.json`, `fitness.json`               |
//! | `probe`            | `d_idi.csv`, `probe_stats.json`               |
//! | `baseline_random`  | `random_d_idi.csv`, `random_stats.json`       |
//! | `evaluate`         | `<name>.json`                                 |
//! | `retrain`          | `retrained_model.json`, `retrain_report.json` |
//! | `ablate_lambda`    | `lambda_ablation.json`                        |
//!
//! Every command also writes `config.json`, the effective configuration.
//! Reports are deterministic given the configuration, except for fields
//! named `timing`.

mod config;
mod retrain;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::{DataConfig, DataSource, GeneratorSection, MetricsConfig, ModelSection, RetrainConfig, RunConfig};
pub use retrain::{knn_labels, sample_instances};

use crate::bridge::{BridgeClient, ExternalClassifier, ExternalGenerator};
use crate::datasets::adult;
use crate::error::{Error, Result};
use crate::generator::{fit_copula, sample_latents, CopulaModel, Generator, GeneratorHandle};
use crate::metrics::{self, FairnessReport, NaturalnessReport, RepeatedNaturalness};
use crate::models::{self, Classifier, ClassifierHandle, ModelKind, TrainedModel};
use crate::probe::{self, ProbeConfig, ProbeStats, Timing};
use crate::rng;
use crate::schema::{load_csv, Dataset, Schema};
use crate::surrogate::{self, FitnessReport, SurrogateBoundary};

/// Training data and, when available, a separate evaluation split.
#[derive(Debug, Clone)]
pub struct Data {
    pub train: Dataset,
    pub test: Option<Dataset>,
}

impl Data {
    pub fn schema(&self) -> &Schema {
        self.train.schema()
    }

    /// The split used for accuracy and group metrics.
    pub fn eval(&self) -> &Dataset {
        self.test.as_ref().unwrap_or(&self.train)
    }
}

pub fn load_data(cfg: &RunConfig) -> Result<Data> {
    let (train, test) = match &cfg.data.source {
        DataSource::Files { schema, train, test } => {
            let schema = Schema::load(schema)?;
            let tr = load_csv(train, &schema)?;
            let te = test.as_ref().map(|t| load_csv(t, &schema)).transpose()?;
            (tr, te)
        }
        DataSource::AdultClone { seed } => {
            let (tr, te) = adult::train_test(*seed)?;
            (tr, Some(te))
        }
    };
    match &cfg.data.protected {
        None => Ok(Data { train, test }),
        Some(names) => {
            let schema = train.schema().with_protected(names)?;
            Ok(Data {
                train: train.with_schema(schema.clone())?,
                test: test.map(|t| t.with_schema(schema)).transpose()?,
            })
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json("report", e))?;
    write_text(path, &(text + "\n"))
}

/// Creates the output directory and snapshots the configuration into it.
fn prepare(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    write_text(&cfg.out.join("config.json"), &cfg.to_json_string())
}

/// Loads the configured target model under the data schema.
pub fn load_model(cfg: &RunConfig, schema: &Schema) -> Result<ClassifierHandle> {
    if let Some(cmd) = &cfg.model.command {
        let client = BridgeClient::spawn(cmd)?;
        return Ok(ClassifierHandle::External(ExternalClassifier::new(client, schema.clone())?));
    }
    let model = TrainedModel::from_json_str(&read_text(&cfg.model_path())?)?;
    Ok(ClassifierHandle::Builtin(model.with_schema(schema.clone())?))
}

pub fn load_generator(cfg: &RunConfig, schema: &Schema) -> Result<GeneratorHandle> {
    if let Some(cmd) = &cfg.generator.command {
        let client = BridgeClient::spawn(cmd)?;
        return Ok(GeneratorHandle::External(ExternalGenerator::new(client, schema.clone())?));
    }
    let copula = CopulaModel::from_json_str(&read_text(&cfg.generator_path())?)?;
    if !copula.schema().is_compatible(schema) {
        return Err(Error::InvalidSchema("generator schema differs from the dataset schema".into()));
    }
    Ok(GeneratorHandle::Copula(copula))
}

pub fn load_boundary(cfg: &RunConfig) -> Result<SurrogateBoundary> {
    SurrogateBoundary::from_json_str(&read_text(&cfg.boundary_path())?)
}

/// Report written next to a fitted generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorReport {
    pub training_rows: usize,
    pub latent_dim: usize,
    pub ridge: f64,
    pub calibration_samples: usize,
    /// Naturalness of decoded random latents against the training data.
    pub calibration: NaturalnessReport,
}

/// Decodes `n` seeded latents into an unlabeled dataset.
pub fn decode_sample<G: Generator + ?Sized>(gen: &G, n: usize, seed: u64) -> Result<Dataset> {
    let zs = sample_latents(n, gen.latent_dim(), seed);
    let rows = gen.decode_batch(&zs)?;
    Dataset::new(gen.schema().clone(), rows, vec![0; n])
}

pub fn cmd_fit_gen(cfg: &RunConfig) -> Result<GeneratorReport> {
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let copula = fit_copula(&data.train)?;
    let n = cfg.metrics.calibration_samples;
    let sample = decode_sample(&copula, n, rng::derive_seed(cfg.seed, "calibration"))?;
    let report = GeneratorReport {
        training_rows: data.train.len(),
        latent_dim: copula.latent_dim(),
        ridge: copula.ridge(),
        calibration_samples: n,
        calibration: metrics::atn(&sample, &data.train)?,
    };
    write_text(&cfg.out.join("generator.json"), &copula.to_json_string())?;
    write_json(&cfg.out.join("generator_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub kind: ModelKind,
    pub parameters: usize,
    pub training_accuracy: f64,
    pub test_accuracy: Option<f64>,
}

pub fn cmd_train_model(cfg: &RunConfig) -> Result<ModelReport> {
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let model = models::train(&data.train, &cfg.model.train)?;
    let report = ModelReport {
        kind: model.kind(),
        parameters: model.network().param_count(),
        training_accuracy: models::accuracy(&model, &data.train)?,
        test_accuracy: data.test.as_ref().map(|t| models::accuracy(&model, t)).transpose()?,
    };
    write_text(&cfg.out.join("model.json"), &model.to_json_string())?;
    write_json(&cfg.out.join("model_report.json"), &report)?;
    Ok(report)
}

/// Builds the auxiliary set, fits the surrogate boundary and scores it.
pub fn cmd_approximate(cfg: &RunConfig) -> Result<FitnessReport> {
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, data.schema())?;
    let gen = load_generator(cfg, data.schema())?;
    let aux = surrogate::build_aux(&gen, &model, &cfg.aux)?;
    let boundary = surrogate::fit_boundary(&aux, &cfg.svm)?;
    let report = surrogate::fitness(&gen, &model, &boundary, &aux, cfg.metrics.heldout_size, cfg.seed)?;
    write_text(&cfg.boundary_path(), &boundary.to_json_string())?;
    write_json(&cfg.out.join("fitness.json"), &report)?;
    Ok(report)
}

fn probe_with(
    cfg: &RunConfig,
    gen: &GeneratorHandle,
    model: &ClassifierHandle,
    boundary: &SurrogateBoundary,
    probe_cfg: &ProbeConfig,
) -> Result<probe::ProbeOutcome> {
    if probe_cfg.reuse_init_latents {
        let zs = sample_latents(cfg.aux.n_init, gen.latent_dim(), rng::derive_seed(cfg.aux.seed, "z-init"));
        probe::run_on(gen, model, boundary, probe_cfg, zs)
    } else {
        probe::run(gen, model, boundary, probe_cfg)
    }
}

/// Probes around the fitted boundary and writes the discriminatory pairs.
pub fn cmd_probe(cfg: &RunConfig) -> Result<ProbeStats> {
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, data.schema())?;
    let gen = load_generator(cfg, data.schema())?;
    let boundary = load_boundary(cfg)?;
    let outcome = probe_with(cfg, &gen, &model, &boundary, &cfg.probe)?;
    probe::save_pairs(cfg.d_idi_path(), data.schema(), &outcome.pairs)?;
    write_json(&cfg.out.join("probe_stats.json"), &outcome.stats)?;
    Ok(outcome.stats)
}

/// Uniform-random search under the probe's budget and time limit.
pub fn cmd_baseline_random(cfg: &RunConfig) -> Result<ProbeStats> {
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, data.schema())?;
    let outcome = probe::run_random(&model, &cfg.probe)?;
    probe::save_pairs(cfg.random_d_idi_path(), data.schema(), &outcome.pairs)?;
    write_json(&cfg.out.join("random_stats.json"), &outcome.stats)?;
    Ok(outcome.stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// File name of the evaluated pairs.
    pub d_idi: String,
    pub d_idi_size: usize,
    pub naturalness: RepeatedNaturalness,
    /// Mean distance from each evaluated row to its nearest training row.
    pub ann_distance: f64,
    pub fairness: FairnessReport,
}

/// Column used for group metrics.
fn group_column(cfg: &RunConfig, schema: &Schema) -> Result<usize> {
    match &cfg.metrics.group_column {
        Some(name) => schema.column_index(name).ok_or_else(|| Error::MissingColumn { column: name.clone() }),
        None => Ok(schema.protected_indices()[0]),
    }
}

/// First members of the pairs in `d_idi`, as a dataset labeled by the
/// model's predictions.
pub fn load_instances(path: &Path, schema: &Schema) -> Result<Dataset> {
    let pairs = probe::load_pairs(path, schema)?;
    let rows = pairs.iter().map(|p| p.x.clone()).collect();
    let labels = pairs.iter().map(|p| p.prediction.label).collect();
    Dataset::new(schema.clone(), rows, labels)
}

fn fairness_of<C: Classifier + ?Sized>(cfg: &RunConfig, model: &C, data: &Data) -> Result<FairnessReport> {
    metrics::fairness_report(
        model,
        &data.train,
        data.eval(),
        group_column(cfg, data.schema())?,
        cfg.metrics.if_r_samples,
        rng::derive_seed(cfg.seed, "if-r"),
    )
}

/// Naturalness of the instances in `d_idi` against the training data, plus
/// the fairness of the target model. Writes `<name>.json`.
pub fn cmd_evaluate(cfg: &RunConfig, d_idi: &Path, name: &str) -> Result<Evaluation> {
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, data.schema())?;
    let instances = load_instances(d_idi, data.schema())?;
    if instances.is_empty() {
        return Err(Error::EmptySample);
    }
    let report = Evaluation {
        d_idi: d_idi
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        d_idi_size: instances.len(),
        naturalness: metrics::atn_repeated(
            &instances,
            &data.train,
            cfg.metrics.atn_repeats,
            rng::derive_seed(cfg.seed, "atn-subsample"),
        )?,
        ann_distance: metrics::ann_distance(&data.train, &instances)?,
        fairness: fairness_of(cfg, &model, &data)?,
    };
    write_json(&cfg.out.join(format!("{name}.json")), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainReport {
    /// How augmentation rows were labeled; the choice is ours, not a
    /// property of the generated pairs.
    pub label_rule: String,
    pub k: usize,
    pub fraction: f64,
    pub d_idi_unique: usize,
    pub augment_size: usize,
    pub augment_favorable: usize,
    pub before: FairnessReport,
    pub after: FairnessReport,
}

/// Retrains the built-in model on the training set plus a sample of
/// generated instances and reports fairness before and after.
pub fn cmd_retrain(cfg: &RunConfig, d_idi: &Path) -> Result<RetrainReport> {
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, data.schema())?;
    let pairs = probe::load_pairs(d_idi, data.schema())?;
    let rows = sample_instances(&pairs, data.train.len(), cfg.retrain.fraction, cfg.retrain.seed)?;
    let labels = knn_labels(&data.train, &rows, cfg.retrain.k)?;
    let fav = data.schema().favorable_label();
    let augment = Dataset::new(data.schema().clone(), rows, labels)?;
    let retrained = models::retrain(&data.train, &augment, &cfg.model.train)?;
    let unique = pairs.iter().map(|p| &p.x).collect::<std::collections::HashSet<_>>().len();
    let report = RetrainReport {
        label_rule: "knn_majority".into(),
        k: cfg.retrain.k,
        fraction: cfg.retrain.fraction,
        d_idi_unique: unique,
        augment_size: augment.len(),
        augment_favorable: augment.labels().iter().filter(|&&l| l == fav).count(),
        before: fairness_of(cfg, &model, &data)?,
        after: fairness_of(cfg, &retrained, &data)?,
    };
    write_text(&cfg.out.join("retrained_model.json"), &retrained.to_json_string())?;
    write_json(&cfg.out.join("retrain_report.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub lambda: f64,
    pub found: usize,
    pub found_raw: usize,
    pub tested: usize,
    pub tuples: usize,
    pub found_by_source: BTreeMap<String, usize>,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaAblation {
    pub budget: usize,
    pub rows: Vec<AblationRow>,
}

/// Repeats the probe for each λ with the same seeds, hence the same
/// initial latents.
pub fn cmd_ablate_lambda(cfg: &RunConfig, lambdas: &[f64]) -> Result<LambdaAblation> {
    if lambdas.is_empty() {
        return Err(Error::InvalidConfig("the λ grid is empty".into()));
    }
    prepare(cfg)?;
    let data = load_data(cfg)?;
    let model = load_model(cfg, data.schema())?;
    let gen = load_generator(cfg, data.schema())?;
    let boundary = load_boundary(cfg)?;
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let pc = ProbeConfig {
            lambda,
            ..cfg.probe.clone()
        };
        let s = probe_with(cfg, &gen, &model, &boundary, &pc)?.stats;
        rows.push(AblationRow {
            lambda,
            found: s.found,
            found_raw: s.found_raw,
            tested: s.tested,
            tuples: s.tuples,
            found_by_source: s.found_by_source,
            timing: s.timing,
        });
    }
    let report = LambdaAblation {
        budget: cfg.probe.budget,
        rows,
    };
    write_json(&cfg.out.join("lambda_ablation.json"), &report)?;
    Ok(report)
}
