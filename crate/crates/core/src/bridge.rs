//! Child-process bridge for external models and generators.
//!
//! Newline-delimited JSON over the peer's stdin/stdout. Every request
//! carries an increasing integer `id` and an `op`; the peer answers each
//! request with exactly one line echoing the `id`:
//!
//! ```text
//! > {"id":1,"op":"hello","version":"limi-bridge/1"}
//! < {"id":1,"ok":true,"kind":"model","n_features":13,"name":"mlp","version":"limi-bridge/1"}
//! > {"id":2,"op":"predict","rows":[[3,"Private",12,...]]}
//! < {"id":2,"ok":true,"labels":[0],"scores":[0.91]}
//! > {"id":3,"op":"shutdown"}
//! < {"id":3,"ok":true}
//! ```
//!
//! Failures are reported as `{"id":…,"ok":false,"error":"…"}`. Rows carry raw
//! values: integers for numeric columns, strings for categorical ones.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::generator::{Generator, LatentVector};
use crate::models::{Classifier, Prediction};
use crate::schema::{Domain, Row, Schema};

pub const PROTOCOL_VERSION: &str = "limi-bridge/1";

/// Largest number of rows or latents carried by one request.
pub const MAX_BATCH: usize = 4096;

#[derive(Serialize)]
struct Envelope<'a> {
    id: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    op: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ok: Option<bool>,
    #[serde(flatten)]
    body: Map<String, Value>,
}

fn failure(msg: impl Into<String>) -> Error {
    Error::BridgeFailure(msg.into())
}

/// Raw JSON values of a row: integers for numeric columns, labels for
/// categorical ones.
pub fn row_to_json(schema: &Schema, row: &Row) -> Value {
    Value::Array(
        schema
            .columns()
            .iter()
            .zip(row.values())
            .map(|(c, &v)| match &c.domain {
                Domain::Numeric { .. } => Value::from(v),
                Domain::Categorical { values } => Value::from(values[v as usize].clone()),
            })
            .collect(),
    )
}

/// Inverse of [`row_to_json`]; rejects arity and domain violations.
pub fn row_from_json(schema: &Schema, value: &Value) -> Result<Row> {
    let items = value
        .as_array()
        .ok_or_else(|| failure("row is not an array"))?;
    if items.len() != schema.len() {
        return Err(failure(format!(
            "row has {} values, schema has {} columns",
            items.len(),
            schema.len()
        )));
    }
    let mut codes = Vec::with_capacity(items.len());
    for (c, item) in schema.columns().iter().zip(items) {
        let code = match (&c.domain, item) {
            (Domain::Numeric { .. }, Value::Number(n)) => n
                .as_i64()
                .filter(|v| c.domain.contains(*v)),
            (Domain::Categorical { .. }, Value::String(s)) => c.parse(s),
            _ => None,
        };
        codes.push(code.ok_or_else(|| {
            failure(format!("value {item} is invalid for column `{}`", c.name))
        })?);
    }
    Ok(Row::new(codes))
}

/// What a peer announced in its handshake.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerInfo {
    pub name: String,
    pub kind: String,
    pub n_features: Option<usize>,
    pub latent_dim: Option<usize>,
}

/// Request/response channel to one peer.
pub struct BridgeClient {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    next_id: u64,
    info: PeerInfo,
}

impl BridgeClient {
    /// Handshakes over an existing pair of streams.
    pub fn connect(reader: impl BufRead + Send + 'static, writer: impl Write + Send + 'static) -> Result<Self> {
        let mut client = BridgeClient {
            reader: Box::new(reader),
            writer: Box::new(writer),
            child: None,
            next_id: 1,
            info: PeerInfo {
                name: String::new(),
                kind: String::new(),
                n_features: None,
                latent_dim: None,
            },
        };
        let mut body = Map::new();
        body.insert("version".into(), Value::from(PROTOCOL_VERSION));
        let resp = client.call("hello", body)?;
        let version = resp.get("version").and_then(Value::as_str).unwrap_or("");
        if version != PROTOCOL_VERSION {
            return Err(failure(format!("peer speaks `{version}`, expected `{PROTOCOL_VERSION}`")));
        }
        let count = |key: &str| resp.get(key).and_then(Value::as_u64).map(|v| v as usize);
        client.info = PeerInfo {
            name: resp.get("name").and_then(Value::as_str).unwrap_or("").to_string(),
            kind: resp.get("kind").and_then(Value::as_str).unwrap_or("").to_string(),
            n_features: count("n_features"),
            latent_dim: count("latent_dim"),
        };
        Ok(client)
    }

    /// Starts `command` through the shell and handshakes with it.
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| failure(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        match BridgeClient::connect(BufReader::new(stdout), stdin) {
            Ok(mut c) => {
                c.child = Some(child);
                Ok(c)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    pub fn info(&self) -> &PeerInfo {
        &self.info
    }

    /// Sends one request and returns the body of a successful response.
    pub fn call(&mut self, op: &str, body: Map<String, Value>) -> Result<Map<String, Value>> {
        let id = self.next_id;
        self.next_id += 1;
        let line = serde_json::to_string(&Envelope {
            id: Value::from(id),
            op: Some(op),
            ok: None,
            body,
        })
        .expect("request serializes");
        writeln!(self.writer, "{line}")
            .and_then(|_| self.writer.flush())
            .map_err(|e| failure(format!("write to peer failed: {e}")))?;

        let mut reply = String::new();
        let n = self
            .reader
            .read_line(&mut reply)
            .map_err(|e| failure(format!("read from peer failed: {e}")))?;
        if n == 0 {
            return Err(failure("peer closed the channel"));
        }
        let mut obj = match serde_json::from_str::<Value>(&reply) {
            Ok(Value::Object(m)) => m,
            _ => return Err(failure(format!("malformed response `{}`", reply.trim_end()))),
        };
        if obj.get("id").and_then(Value::as_u64) != Some(id) {
            return Err(failure(format!("response id mismatch (sent {id})")));
        }
        match obj.get("ok").and_then(Value::as_bool) {
            Some(true) => {
                obj.remove("id");
                obj.remove("ok");
                Ok(obj)
            }
            Some(false) => Err(failure(
                obj.get("error")
                    .and_then(Value::as_str)
                    .unwrap_or("peer reported an error")
                    .to_string(),
            )),
            None => Err(failure("response lacks `ok`")),
        }
    }

    /// Asks the peer to exit and reaps the child process.
    pub fn shutdown(mut self) -> Result<()> {
        let res = self.call("shutdown", Map::new()).map(|_| ());
        if let Some(mut child) = self.child.take() {
            let _ = child.wait();
        }
        res
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = self.call("shutdown", Map::new());
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// A classifier living on the other side of the bridge.
pub struct ExternalClassifier {
    schema: Schema,
    client: Mutex<BridgeClient>,
}

impl ExternalClassifier {
    pub fn new(client: BridgeClient, schema: Schema) -> Result<Self> {
        let info = client.info();
        if info.kind != "model" {
            return Err(failure(format!("peer is a `{}`, not a model", info.kind)));
        }
        if info.n_features != Some(schema.len()) {
            return Err(failure(format!(
                "peer expects {:?} features, schema has {}",
                info.n_features,
                schema.len()
            )));
        }
        Ok(ExternalClassifier {
            schema,
            client: Mutex::new(client),
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn predict_batch(&self, rows: &[Row]) -> Result<Vec<Prediction>> {
        let mut client = self.client.lock().map_err(|_| failure("channel poisoned"))?;
        let mut out = Vec::with_capacity(rows.len());
        for chunk in rows.chunks(MAX_BATCH) {
            let mut body = Map::new();
            body.insert(
                "rows".into(),
                Value::Array(chunk.iter().map(|r| row_to_json(&self.schema, r)).collect()),
            );
            let resp = client.call("predict", body)?;
            let labels = resp.get("labels").and_then(Value::as_array);
            let scores = resp.get("scores").and_then(Value::as_array);
            let (labels, scores) = match (labels, scores) {
                (Some(l), Some(s)) if l.len() == chunk.len() && s.len() == chunk.len() => (l, s),
                _ => return Err(failure("predict response does not match the batch")),
            };
            for (l, s) in labels.iter().zip(scores) {
                let label = match l.as_u64() {
                    Some(v @ 0..=1) => v as u8,
                    _ => return Err(failure(format!("label {l} is not 0 or 1"))),
                };
                let score = s
                    .as_f64()
                    .filter(|v| (0.5..=1.0).contains(v))
                    .ok_or_else(|| failure(format!("score {s} is outside [0.5, 1]")))?;
                out.push(Prediction { label, score });
            }
        }
        Ok(out)
    }
}

impl Classifier for ExternalClassifier {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<Prediction>> {
        ExternalClassifier::predict_batch(self, rows)
    }
}

/// A generator living on the other side of the bridge.
pub struct ExternalGenerator {
    schema: Schema,
    latent_dim: usize,
    client: Mutex<BridgeClient>,
}

impl ExternalGenerator {
    pub fn new(client: BridgeClient, schema: Schema) -> Result<Self> {
        let info = client.info();
        if info.kind != "generator" {
            return Err(failure(format!("peer is a `{}`, not a generator", info.kind)));
        }
        let latent_dim = info
            .latent_dim
            .filter(|d| *d > 0)
            .ok_or_else(|| failure("generator did not declare a latent dimension"))?;
        Ok(ExternalGenerator {
            schema,
            latent_dim,
            client: Mutex::new(client),
        })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn decode_batch(&self, zs: &[LatentVector]) -> Result<Vec<Row>> {
        if let Some(z) = zs.iter().find(|z| z.len() != self.latent_dim) {
            return Err(Error::DimensionMismatch {
                expected: self.latent_dim,
                found: z.len(),
            });
        }
        let mut client = self.client.lock().map_err(|_| failure("channel poisoned"))?;
        let mut out = Vec::with_capacity(zs.len());
        for chunk in zs.chunks(MAX_BATCH) {
            let mut body = Map::new();
            body.insert("latents".into(), json!(chunk));
            let resp = client.call("decode", body)?;
            let rows = resp
                .get("rows")
                .and_then(Value::as_array)
                .filter(|r| r.len() == chunk.len())
                .ok_or_else(|| failure("decode response does not match the batch"))?;
            for r in rows {
                out.push(row_from_json(&self.schema, r)?);
            }
        }
        Ok(out)
    }
}

impl Generator for ExternalGenerator {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn decode_batch(&self, zs: &[LatentVector]) -> Result<Vec<Row>> {
        ExternalGenerator::decode_batch(self, zs)
    }
}

/// What a reference server exposes.
pub enum ServeTarget<'a> {
    Model(&'a dyn Classifier),
    Generator(&'a dyn Generator),
}

/// Reference peer loop: answers requests on `reader` until `shutdown` or
/// end of input. Malformed requests get error responses; the loop never
/// exits on bad input.
pub fn serve<R: BufRead, W: Write>(target: ServeTarget<'_>, name: &str, mut reader: R, mut writer: W) -> Result<()> {
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| failure(format!("read failed: {e}")))?;
        if n == 0 {
            return Ok(());
        }
        if line.trim().is_empty() {
            continue;
        }
        let (id, outcome, stop) = handle_request(&target, name, line.trim());
        let (ok, body) = match outcome {
            Ok(body) => (true, body),
            Err(msg) => {
                let mut m = Map::new();
                m.insert("error".into(), Value::from(msg));
                (false, m)
            }
        };
        let text = serde_json::to_string(&Envelope {
            id,
            op: None,
            ok: Some(ok),
            body,
        })
        .expect("response serializes");
        writeln!(writer, "{text}")
            .and_then(|_| writer.flush())
            .map_err(|e| failure(format!("write failed: {e}")))?;
        if stop {
            return Ok(());
        }
    }
}

type Handled = (Value, std::result::Result<Map<String, Value>, String>, bool);

fn handle_request(target: &ServeTarget<'_>, name: &str, line: &str) -> Handled {
    let req = match serde_json::from_str::<Value>(line) {
        Ok(Value::Object(m)) => m,
        Ok(_) => return (Value::Null, Err("request is not a JSON object".into()), false),
        Err(e) => return (Value::Null, Err(format!("malformed request: {e}")), false),
    };
    let id = match req.get("id") {
        Some(v @ Value::Number(n)) if n.is_u64() => v.clone(),
        _ => return (Value::Null, Err("request lacks an integer `id`".into()), false),
    };
    let op = req.get("op").and_then(Value::as_str).unwrap_or("");
    let result = match op {
        "hello" => hello(target, name, &req),
        "predict" => predict(target, &req),
        "decode" => decode(target, &req),
        "shutdown" => return (id, Ok(Map::new()), true),
        other => Err(format!("unknown op `{other}`")),
    };
    (id, result, false)
}

fn hello(target: &ServeTarget<'_>, name: &str, req: &Map<String, Value>) -> std::result::Result<Map<String, Value>, String> {
    let version = req.get("version").and_then(Value::as_str).unwrap_or("");
    if version != PROTOCOL_VERSION {
        return Err(format!("unsupported protocol version `{version}`"));
    }
    let mut m = Map::new();
    m.insert("version".into(), Value::from(PROTOCOL_VERSION));
    m.insert("name".into(), Value::from(name));
    match target {
        ServeTarget::Model(c) => {
            m.insert("kind".into(), Value::from("model"));
            m.insert("n_features".into(), Value::from(c.schema().len()));
        }
        ServeTarget::Generator(g) => {
            m.insert("kind".into(), Value::from("generator"));
            m.insert("latent_dim".into(), Value::from(g.latent_dim()));
        }
    }
    Ok(m)
}

fn batch<'a>(req: &'a Map<String, Value>, key: &str) -> std::result::Result<&'a Vec<Value>, String> {
    let items = req
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| format!("missing `{key}` array"))?;
    if items.len() > MAX_BATCH {
        return Err(format!("batch of {} exceeds {MAX_BATCH}", items.len()));
    }
    Ok(items)
}

fn predict(target: &ServeTarget<'_>, req: &Map<String, Value>) -> std::result::Result<Map<String, Value>, String> {
    let ServeTarget::Model(model) = target else {
        return Err("this peer is a generator".into());
    };
    let rows = batch(req, "rows")?
        .iter()
        .map(|v| row_from_json(model.schema(), v))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let preds = model.predict_batch(&rows).map_err(|e| e.to_string())?;
    let mut m = Map::new();
    m.insert("labels".into(), json!(preds.iter().map(|p| p.label).collect::<Vec<_>>()));
    m.insert("scores".into(), json!(preds.iter().map(|p| p.score).collect::<Vec<_>>()));
    Ok(m)
}

fn decode(target: &ServeTarget<'_>, req: &Map<String, Value>) -> std::result::Result<Map<String, Value>, String> {
    let ServeTarget::Generator(gen) = target else {
        return Err("this peer is a model".into());
    };
    let mut zs = Vec::new();
    for item in batch(req, "latents")? {
        let entries = item
            .as_array()
            .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
            .ok_or_else(|| "latent is not an array of numbers".to_string())?;
        if entries.len() != gen.latent_dim() {
            return Err(format!(
                "latent has {} entries, expected {}",
                entries.len(),
                gen.latent_dim()
            ));
        }
        zs.push(LatentVector::new(entries));
    }
    let rows = gen.decode_batch(&zs).map_err(|e| e.to_string())?;
    let mut m = Map::new();
    m.insert(
        "rows".into(),
        Value::Array(rows.iter().map(|r| row_to_json(gen.schema(), r)).collect()),
    );
    Ok(m)
}
