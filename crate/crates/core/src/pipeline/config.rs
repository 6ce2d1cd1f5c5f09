use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelConfig;
use crate::probe::ProbeConfig;
use crate::surrogate::{AuxConfig, SvmConfig};

/// Where the tabular data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case")]
pub enum DataSource {
    /// A schema JSON plus training and optional test CSVs.
    Files {
        schema: PathBuf,
        train: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test: Option<PathBuf>,
    },
    /// The bundled synthetic census table, regenerated from `seed`.
    AdultClone {
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataConfig {
    #[serde(flatten)]
    pub source: DataSource,
    /// Overrides the schema's protected columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protected: Option<Vec<String>>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            source: DataSource::AdultClone { seed: 0 },
            protected: None,
        }
    }
}

/// A target model: a model file, a bridge command, or (when neither is
/// given) `model.json` in the output directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// Recipe used by `train-model` and `retrain`.
    pub train: ModelConfig,
}

/// A generator: a copula file, a bridge command, or `generator.json` in the
/// output directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    /// Uniform rows drawn for `IF_r`.
    pub if_r_samples: usize,
    /// Subsampling repeats for naturalness.
    pub atn_repeats: usize,
    /// Fresh latents for held-out boundary fitness.
    pub heldout_size: usize,
    /// Decoded rows compared against the data after fitting a generator.
    pub calibration_samples: usize,
    /// Column for group metrics; defaults to the first protected column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_column: Option<String>,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            if_r_samples: 100_000,
            atn_repeats: 10,
            heldout_size: 100_000,
            calibration_samples: 10_000,
            group_column: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrainConfig {
    /// Augmentation size as a fraction of the training set.
    pub fraction: f64,
    /// Neighbors in the majority vote that labels generated rows.
    pub k: usize,
    pub seed: u64,
}

impl Default for RetrainConfig {
    fn default() -> Self {
        RetrainConfig {
            fraction: 0.30,
            k: 5,
            seed: 0,
        }
    }
}

impl RetrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!("fraction {} must lie in (0, 1]", self.fraction)));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be positive".into()));
        }
        Ok(())
    }
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
}

fn default_out() -> PathBuf {
    PathBuf::from("runs/latest")
}

/// Everything a run needs. Missing sections take desk-scale defaults.
///
/// The global `seed` overwrites the seeds of every sub-configuration, so a
/// run is reproducible from `(config, seed)` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub generator: GeneratorSection,
    #[serde(default)]
    pub aux: AuxConfig,
    #[serde(default)]
    pub svm: SvmConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub retrain: RetrainConfig,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataConfig::default(),
            model: ModelSection::default(),
            generator: GeneratorSection::default(),
            aux: AuxConfig::default(),
            svm: SvmConfig::default(),
            probe: ProbeConfig::default(),
            metrics: MetricsConfig::default(),
            retrain: RetrainConfig::default(),
            lambdas: default_lambdas(),
            seed: 0,
            out: default_out(),
        }
    }
}

impl RunConfig {
    pub fn from_json_str(s: &str) -> Result<RunConfig> {
        let mut cfg: RunConfig = serde_json::from_str(s).map_err(|e| Error::json("run config", e))?;
        cfg.propagate_seed();
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::from_json_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DataSource::Files { schema, train, test } = &mut self.data.source {
            fix(schema);
            fix(train);
            if let Some(t) = test {
                fix(t);
            }
        }
        if let Some(p) = &mut self.model.path {
            fix(p);
        }
        if let Some(p) = &mut self.generator.path {
            fix(p);
        }
        fix(&mut self.out);
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn with_seed(mut self, seed: u64) -> RunConfig {
        self.seed = seed;
        self.propagate_seed();
        self
    }

    fn propagate_seed(&mut self) {
        let seed = self.seed;
        self.aux.seed = seed;
        self.svm.seed = seed;
        self.probe.seed = seed;
        self.retrain.seed = seed;
        self.model.train = self.model.train.with_seed(seed);
    }

    /// Sizes of the original experiments: 1M initial latents, 50K per
    /// class, a 1M test budget and 1000 training epochs.
    pub fn full_scale(mut self) -> RunConfig {
        self.aux.n_init = 1_000_000;
        self.aux.per_class = 50_000;
        self.probe.budget = 1_000_000;
        self.metrics.heldout_size = 1_000_000;
        match &mut self.model.train {
            ModelConfig::Mlp(c) => c.epochs = 1000,
            ModelConfig::Logistic(c) => c.epochs = 1000,
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.aux.validate()?;
        self.probe.validate()?;
        self.retrain.validate()?;
        if self.model.path.is_some() && self.model.command.is_some() {
            return Err(Error::InvalidConfig("model: give either `path` or `command`".into()));
        }
        if self.generator.path.is_some() && self.generator.command.is_some() {
            return Err(Error::InvalidConfig("generator: give either `path` or `command`".into()));
        }
        Ok(())
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.path.clone().unwrap_or_else(|| self.out.join("model.json"))
    }

    pub fn generator_path(&self) -> PathBuf {
        self.generator.path.clone().unwrap_or_else(|| self.out.join("generator.json"))
    }

    pub fn boundary_path(&self) -> PathBuf {
        self.out.join("boundary.json")
    }

    pub fn d_idi_path(&self) -> PathBuf {
        self.out.join("d_idi.csv")
    }

    pub fn random_d_idi_path(&self) -> PathBuf {
        self.out.join("random_d_idi.csv")
    }
}
