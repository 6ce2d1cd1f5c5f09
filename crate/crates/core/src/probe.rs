//! Latent probing around the surrogate boundary and the discrimination
//! check itself.
//!
//! Each fresh latent `z` is projected onto the surrogate hyperplane and
//! shifted by `±λ` along its unit normal. The three candidates are decoded
//! and tested in the order `z₀, z₊, z₋`; the first discriminatory one ends
//! the tuple.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{Generator, LatentStream, LatentVector};
use crate::metrics::egs;
use crate::models::{Classifier, Prediction};
use crate::rng;
use crate::schema::{csv_err, protected_variants, Row, Schema, UniformRows};
use crate::surrogate::SurrogateBoundary;

/// `z₀ = z − (w_uᵀz + b_u)·w_u`, the foot of the perpendicular from `z`.
pub fn project(boundary: &SurrogateBoundary, z: &LatentVector) -> LatentVector {
    let d = boundary.distance(z);
    if d == 0.0 {
        return z.clone();
    }
    z.add_scaled(boundary.unit_normal(), -d)
}

/// `(z₀ + λ·w_u, z₀ − λ·w_u)`.
pub fn candidates(boundary: &SurrogateBoundary, z0: &LatentVector, lambda: f64) -> (LatentVector, LatentVector) {
    let w = boundary.unit_normal();
    (z0.add_scaled(w, lambda), z0.add_scaled(w, -lambda))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterativeProbeConfig {
    /// +1 or −1.
    pub dir: f64,
    pub step: f64,
    pub max_iters: usize,
}

impl IterativeProbeConfig {
    /// Direction that moves `z` toward the boundary.
    pub fn toward(boundary: &SurrogateBoundary, z: &LatentVector, step: f64, max_iters: usize) -> Self {
        let dir = if boundary.distance(z) >= 0.0 { -1.0 } else { 1.0 };
        IterativeProbeConfig { dir, step, max_iters }
    }
}

/// Walks `z ← z + dir·s_p·w_u` until the side of the boundary changes.
/// Returns the final latent and the number of steps taken. A distance of
/// exactly zero counts as the non-negative side.
pub fn iterative_probe(
    boundary: &SurrogateBoundary,
    z: &LatentVector,
    cfg: &IterativeProbeConfig,
) -> Result<(LatentVector, usize)> {
    if !(cfg.step > 0.0) || cfg.dir.abs() != 1.0 {
        return Err(Error::InvalidConfig("iterative probe needs dir = ±1 and a positive step".into()));
    }
    let start_side = boundary.distance(z) >= 0.0;
    let delta = cfg.dir * cfg.step;
    let mut cur = z.clone();
    for k in 1..=cfg.max_iters {
        cur = cur.add_scaled(boundary.unit_normal(), delta);
        if (boundary.distance(&cur) >= 0.0) != start_side {
            return Ok((cur, k));
        }
    }
    Err(Error::NoConvergence { iters: cfg.max_iters })
}

/// Hyperplane `w_pᵀz + b_p = 0` with unit normal, separating values of a
/// protected attribute in latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectedHyperplane {
    w_p: Vec<f64>,
    b_p: f64,
}

impl ProtectedHyperplane {
    /// Normalizes `(w, b)` so that `‖w_p‖ = 1`.
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::DegenerateBoundary(format!("‖w_p‖ = {norm}")));
        }
        Ok(ProtectedHyperplane {
            w_p: w.iter().map(|v| v / norm).collect(),
            b_p: b / norm,
        })
    }

    pub fn from_boundary(boundary: &SurrogateBoundary) -> Self {
        ProtectedHyperplane {
            w_p: boundary.unit_normal().to_vec(),
            b_p: boundary.unit_offset(),
        }
    }

    pub fn normal(&self) -> &[f64] {
        &self.w_p
    }

    pub fn offset(&self) -> f64 {
        self.b_p
    }

    pub fn signed_distance(&self, z: &LatentVector) -> f64 {
        z.dot(&self.w_p) + self.b_p
    }
}

/// Reflection `z′ = z − 2(w_pᵀz + b_p)·w_p` across the protected hyperplane.
pub fn latent_flip(h: &ProtectedHyperplane, z: &LatentVector) -> LatentVector {
    let d = h.signed_distance(z);
    if d == 0.0 {
        return z.clone();
    }
    z.add_scaled(&h.w_p, -2.0 * d)
}

/// Which probe produced a discriminatory instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "z0")]
    Z0,
    #[serde(rename = "z+")]
    ZPlus,
    #[serde(rename = "z-")]
    ZMinus,
    #[serde(rename = "random")]
    Random,
}

impl Source {
    pub fn tag(self) -> &'static str {
        match self {
            Source::Z0 => "z0",
            Source::ZPlus => "z+",
            Source::ZMinus => "z-",
            Source::Random => "random",
        }
    }

    fn from_tag(tag: &str) -> Option<Source> {
        [Source::Z0, Source::ZPlus, Source::ZMinus, Source::Random]
            .into_iter()
            .find(|s| s.tag() == tag)
    }
}

/// Two rows that differ only in protected columns and receive different
/// predicted labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatoryPair {
    pub x: Row,
    pub x_variant: Row,
    pub prediction: Prediction,
    pub variant_prediction: Prediction,
    pub source: Source,
}

impl DiscriminatoryPair {
    /// Checks the pair invariants against `schema`.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        schema.validate_row(&self.x)?;
        schema.validate_row(&self.x_variant)?;
        let mut protected_differs = false;
        for (i, c) in schema.columns().iter().enumerate() {
            let same = self.x.get(i) == self.x_variant.get(i);
            if !same && !c.protected {
                return Err(Error::InvalidRow(format!("pair differs in unprotected column `{}`", c.name)));
            }
            protected_differs |= !same;
        }
        if !protected_differs {
            return Err(Error::InvalidRow("pair members are identical".into()));
        }
        if self.prediction.label == self.variant_prediction.label {
            return Err(Error::InvalidRow("pair members share a predicted label".into()));
        }
        Ok(())
    }
}

/// First protected variant of `row` whose predicted label differs from
/// `row`'s, with both predictions.
pub fn is_discriminatory<C: Classifier + ?Sized>(
    model: &C,
    schema: &Schema,
    row: &Row,
) -> Result<Option<(Row, Prediction, Prediction)>> {
    Ok(check_rows(model, schema, std::slice::from_ref(row))?.pop().flatten())
}

/// Batched [`is_discriminatory`]: one model request covers the rows of a
/// chunk and all of their variants.
pub fn check_rows<C: Classifier + ?Sized>(
    model: &C,
    schema: &Schema,
    rows: &[Row],
) -> Result<Vec<Option<(Row, Prediction, Prediction)>>> {
    let mut out = Vec::with_capacity(rows.len());
    for chunk in rows.chunks(2048) {
        let mut flat = Vec::new();
        let mut spans = Vec::with_capacity(chunk.len());
        for r in chunk {
            let start = flat.len();
            flat.push(r.clone());
            flat.extend(protected_variants(schema, r));
            spans.push(start..flat.len());
        }
        let preds = model.predict_batch(&flat)?;
        for span in spans {
            let own = preds[span.start];
            let hit = (span.start + 1..span.end)
                .find(|&k| preds[k].label != own.label)
                .map(|k| (flat[k].clone(), own, preds[k]));
            out.push(hit);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub lambda: f64,
    /// Maximum number of decoded-and-tested cases.
    pub budget: usize,
    pub time_limit_secs: Option<f64>,
    pub dedup: bool,
    pub seed: u64,
    /// Probe the auxiliary-set latents instead of fresh ones.
    #[serde(default)]
    pub reuse_init_latents: bool,
    /// Tuples per batch; the time limit is checked between batches.
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
}

fn default_chunk() -> usize {
    2048
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            lambda: 0.3,
            budget: 30_000,
            time_limit_secs: None,
            dedup: true,
            seed: 0,
            reuse_init_latents: false,
            chunk_size: default_chunk(),
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("lambda {} must be ≥ 0", self.lambda)));
        }
        if self.budget == 0 || self.chunk_size == 0 {
            return Err(Error::InvalidConfig("budget and chunk size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_secs: f64,
    /// Unique instances per second; absent when no time elapsed.
    pub egs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStats {
    pub method: String,
    pub budget: usize,
    /// Decoded-and-tested cases.
    pub tested: usize,
    /// Latent tuples (or random rows) started.
    pub tuples: usize,
    /// Unique discriminatory instances when dedup is on, all otherwise.
    pub found: usize,
    /// Discriminatory cases before deduplication.
    pub found_raw: usize,
    pub found_by_source: BTreeMap<String, usize>,
    /// `budget`, `time_limit` or `latents_exhausted`.
    pub stopped_by: String,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub pairs: Vec<DiscriminatoryPair>,
    pub stats: ProbeStats,
}

struct Collector {
    dedup: bool,
    seen: HashSet<Row>,
    pairs: Vec<DiscriminatoryPair>,
    found_raw: usize,
    by_source: BTreeMap<String, usize>,
}

impl Collector {
    fn new(dedup: bool) -> Self {
        Collector {
            dedup,
            seen: HashSet::new(),
            pairs: Vec::new(),
            found_raw: 0,
            by_source: BTreeMap::new(),
        }
    }

    fn record(&mut self, x: &Row, hit: &(Row, Prediction, Prediction), source: Source) {
        self.found_raw += 1;
        if self.dedup && !self.seen.insert(x.clone()) {
            return;
        }
        *self.by_source.entry(source.tag().to_string()).or_insert(0) += 1;
        self.pairs.push(DiscriminatoryPair {
            x: x.clone(),
            x_variant: hit.0.clone(),
            prediction: hit.1,
            variant_prediction: hit.2,
            source,
        });
    }

    fn finish(self, method: &str, budget: usize, tested: usize, tuples: usize, stopped_by: &str, started: Instant) -> ProbeOutcome {
        let elapsed = started.elapsed().as_secs_f64();
        let found = self.pairs.len();
        ProbeOutcome {
            stats: ProbeStats {
                method: method.to_string(),
                budget,
                tested,
                tuples,
                found,
                found_raw: self.found_raw,
                found_by_source: self.by_source,
                stopped_by: stopped_by.to_string(),
                timing: Timing {
                    elapsed_secs: elapsed,
                    egs: egs(found, elapsed).ok(),
                },
            },
            pairs: self.pairs,
        }
    }
}

/// Probes fresh latents drawn from the configured seed.
pub fn run<G, C>(gen: &G, model: &C, boundary: &SurrogateBoundary, cfg: &ProbeConfig) -> Result<ProbeOutcome>
where
    G: Generator + ?Sized,
    C: Classifier + ?Sized,
{
    let mut stream = LatentStream::new(gen.latent_dim(), rng::derive_seed(cfg.seed, "probe"));
    run_on(gen, model, boundary, cfg, std::iter::from_fn(move || Some(stream.next_vector())))
}

/// Probes the given latents in order until budget, time, or latents run out.
pub fn run_on<G, C, I>(
    gen: &G,
    model: &C,
    boundary: &SurrogateBoundary,
    cfg: &ProbeConfig,
    latents: I,
) -> Result<ProbeOutcome>
where
    G: Generator + ?Sized,
    C: Classifier + ?Sized,
    I: IntoIterator<Item = LatentVector>,
{
    cfg.validate()?;
    if boundary.dim() != gen.latent_dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.latent_dim(),
            found: boundary.dim(),
        });
    }
    let schema = model.schema();
    let started = Instant::now();
    let mut latents = latents.into_iter();
    let mut out = Collector::new(cfg.dedup);
    let mut tested = 0usize;
    let mut tuples = 0usize;
    let stopped_by;

    loop {
        if tested >= cfg.budget {
            stopped_by = "budget";
            break;
        }
        if let Some(limit) = cfg.time_limit_secs {
            if started.elapsed().as_secs_f64() >= limit {
                stopped_by = "time_limit";
                break;
            }
        }
        // Every tuple costs at least one test, so this never overshoots z₀.
        let take = cfg.chunk_size.min(cfg.budget - tested);
        let zs: Vec<LatentVector> = latents.by_ref().take(take).collect();
        if zs.is_empty() {
            stopped_by = "latents_exhausted";
            break;
        }

        // Stage-wise batches: all z₀, then z₊ of unresolved tuples, then z₋.
        let z0s: Vec<LatentVector> = zs.iter().map(|z| project(boundary, z)).collect();
        let mut results: Vec<Vec<(Source, Row, Option<(Row, Prediction, Prediction)>)>> = vec![Vec::new(); zs.len()];
        let rows = gen.decode_batch(&z0s)?;
        let hits = check_rows(model, schema, &rows)?;
        for (i, (row, hit)) in rows.into_iter().zip(hits).enumerate() {
            results[i].push((Source::Z0, row, hit));
        }
        for source in [Source::ZPlus, Source::ZMinus] {
            let open: Vec<usize> = (0..zs.len()).filter(|&i| results[i].iter().all(|r| r.2.is_none())).collect();
            if open.is_empty() {
                break;
            }
            let cands: Vec<LatentVector> = open
                .iter()
                .map(|&i| {
                    let (plus, minus) = candidates(boundary, &z0s[i], cfg.lambda);
                    if source == Source::ZPlus {
                        plus
                    } else {
                        minus
                    }
                })
                .collect();
            let rows = gen.decode_batch(&cands)?;
            let hits = check_rows(model, schema, &rows)?;
            for ((&i, row), hit) in open.iter().zip(rows).zip(hits) {
                results[i].push((source, row, hit));
            }
        }

        // Sequential merge in latent order keeps the budget exact.
        'tuples: for tuple in &results {
            if tested >= cfg.budget {
                break;
            }
            tuples += 1;
            for (source, row, hit) in tuple {
                if tested >= cfg.budget {
                    break 'tuples;
                }
                tested += 1;
                if let Some(h) = hit {
                    out.record(row, h, *source);
                    break;
                }
            }
        }
    }
    Ok(out.finish("limi", cfg.budget, tested, tuples, stopped_by, started))
}

/// Uniform-random comparison: rows drawn over the whole input domain under
/// the same budget and time accounting.
pub fn run_random<C: Classifier + ?Sized>(model: &C, cfg: &ProbeConfig) -> Result<ProbeOutcome> {
    cfg.validate()?;
    let schema = model.schema();
    let started = Instant::now();
    let mut stream = UniformRows::new(schema, rng::derive_seed(cfg.seed, "random-baseline"));
    let mut out = Collector::new(cfg.dedup);
    let mut tested = 0usize;
    let stopped_by;
    loop {
        if tested >= cfg.budget {
            stopped_by = "budget";
            break;
        }
        if let Some(limit) = cfg.time_limit_secs {
            if started.elapsed().as_secs_f64() >= limit {
                stopped_by = "time_limit";
                break;
            }
        }
        let take = cfg.chunk_size.min(cfg.budget - tested);
        let rows: Vec<Row> = stream.by_ref().take(take).collect();
        let hits = check_rows(model, schema, &rows)?;
        for (row, hit) in rows.iter().zip(&hits) {
            tested += 1;
            if let Some(h) = hit {
                out.record(row, h, Source::Random);
            }
        }
    }
    Ok(out.finish("random", cfg.budget, tested, tested, stopped_by, started))
}

/// Writes pairs as CSV: the first member under the schema's column names
/// and its predicted label under the label name (so the file loads back as
/// a dataset), then `variant_`-prefixed columns, scores and the source tag.
pub fn write_pairs<W: Write>(schema: &Schema, pairs: &[DiscriminatoryPair], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = schema.columns().iter().map(|c| c.name.clone()).collect();
    header.push(schema.label_name().to_string());
    header.extend(schema.columns().iter().map(|c| format!("variant_{}", c.name)));
    header.push(format!("variant_{}", schema.label_name()));
    header.extend(["score", "variant_score", "source"].map(String::from));
    w.write_record(&header).map_err(csv_err)?;
    for p in pairs {
        let mut rec = schema.format_row(&p.x);
        rec.push(p.prediction.label.to_string());
        rec.extend(schema.format_row(&p.x_variant));
        rec.push(p.variant_prediction.label.to_string());
        rec.push(p.prediction.score.to_string());
        rec.push(p.variant_prediction.score.to_string());
        rec.push(p.source.tag().to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn save_pairs(path: impl AsRef<Path>, schema: &Schema, pairs: &[DiscriminatoryPair]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_pairs(schema, pairs, std::io::BufWriter::new(file))
}

/// Reads a file produced by [`write_pairs`].
pub fn read_pairs<R: Read>(schema: &Schema, reader: R) -> Result<Vec<DiscriminatoryPair>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let d = schema.len();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 1;
        if rec.len() != 2 * d + 5 {
            return Err(Error::InvalidRow(format!("pair line {line} has {} fields", rec.len())));
        }
        let parse_row = |offset: usize| -> Result<Row> {
            schema
                .columns()
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let raw = &rec[offset + j];
                    c.parse(raw).ok_or_else(|| Error::OutOfDomainValue {
                        row: line,
                        column: c.name.clone(),
                        value: raw.to_string(),
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(Row::new)
        };
        let label = |raw: &str| -> Result<u8> {
            match raw {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::BadLabel {
                    row: line,
                    value: other.to_string(),
                }),
            }
        };
        let score = |raw: &str| -> Result<f64> {
            raw.parse::<f64>()
                .map_err(|_| Error::InvalidRow(format!("pair line {line}: bad score `{raw}`")))
        };
        let source = Source::from_tag(&rec[2 * d + 4])
            .ok_or_else(|| Error::InvalidRow(format!("pair line {line}: unknown source")))?;
        out.push(DiscriminatoryPair {
            x: parse_row(0)?,
            prediction: Prediction {
                label: label(&rec[d])?,
                score: score(&rec[2 * d + 2])?,
            },
            x_variant: parse_row(d + 1)?,
            variant_prediction: Prediction {
                label: label(&rec[2 * d + 1])?,
                score: score(&rec[2 * d + 3])?,
            },
            source,
        });
    }
    Ok(out)
}

pub fn load_pairs(path: impl AsRef<Path>, schema: &Schema) -> Result<Vec<DiscriminatoryPair>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_pairs(schema, std::io::BufReader::new(file))
}
