mod common;

use std::io::{BufRead, BufReader, Write};

use common::{model, people, AxisGen};
use limi::bridge::{serve, BridgeClient, ExternalClassifier, ExternalGenerator, ServeTarget, MAX_BATCH};
use limi::generator::{Generator, LatentVector};
use limi::models::Classifier;
use limi::schema::Row;
use limi::{Error, ErrorFamily};
use rand::Rng;

fn rows(n: usize) -> Vec<Row> {
    let mut rng = limi::rng::seeded(3);
    (0..n)
        .map(|_| Row::new(vec![rng.random_range(0..=100), rng.random_range(0..=1), rng.random_range(1..=9)]))
        .collect()
}

#[test]
fn model_round_trip_over_pipes() {
    let schema = people();
    let local = model(&schema, |r: &Row| r.values()[0] as f64 / 100.0);
    let (req_r, req_w) = std::io::pipe().unwrap();
    let (resp_r, resp_w) = std::io::pipe().unwrap();
    std::thread::scope(|s| {
        let server = s.spawn(|| serve(ServeTarget::Model(&local), "ramp", BufReader::new(req_r), resp_w));
        let client = BridgeClient::connect(BufReader::new(resp_r), req_w).unwrap();
        assert_eq!(client.info().kind, "model");
        assert_eq!(client.info().name, "ramp");
        assert_eq!(client.info().n_features, Some(3));
        let remote = ExternalClassifier::new(client, schema.clone()).unwrap();

        // more than one request's worth of rows
        let xs = rows(MAX_BATCH + 17);
        assert_eq!(remote.predict_batch(&xs).unwrap(), local.predict_batch(&xs).unwrap());
        drop(remote);
        server.join().unwrap().unwrap();
    });
}

#[test]
fn generator_round_trip_over_pipes() {
    let schema = people();
    let local = AxisGen { schema: schema.clone() };
    let (req_r, req_w) = std::io::pipe().unwrap();
    let (resp_r, resp_w) = std::io::pipe().unwrap();
    std::thread::scope(|s| {
        let server = s.spawn(|| serve(ServeTarget::Generator(&local), "axis", BufReader::new(req_r), resp_w));
        let client = BridgeClient::connect(BufReader::new(resp_r), req_w).unwrap();
        let remote = ExternalGenerator::new(client, schema.clone()).unwrap();
        assert_eq!(remote.latent_dim(), 3);

        let zs: Vec<LatentVector> = (0..50)
            .map(|i| LatentVector::new(vec![i as f64 / 10.0 - 2.5, (i % 3) as f64 - 1.0, 0.3]))
            .collect();
        assert_eq!(remote.decode_batch(&zs).unwrap(), local.decode_batch(&zs).unwrap());
        let short = [LatentVector::new(vec![0.0])];
        assert!(matches!(
            remote.decode_batch(&short),
            Err(Error::DimensionMismatch { expected: 3, found: 1 })
        ));
        drop(remote);
        server.join().unwrap().unwrap();
    });
}

#[test]
fn server_answers_bad_requests_and_keeps_going() {
    let schema = people();
    let local = model(&schema, |_: &Row| 0.9);
    let input = [
        "not json",
        "[1, 2]",
        r#"{"op": "hello", "version": "limi-bridge/1"}"#,
        r#"{"id": 1, "op": "hello", "version": "limi-bridge/0"}"#,
        r#"{"id": 2, "op": "decode", "latents": [[0.0]]}"#,
        r#"{"id": 3, "op": "predict", "rows": [[5, "X", 2]]}"#,
        r#"{"id": 4, "op": "frobnicate"}"#,
        "",
        r#"{"id": 5, "op": "predict", "rows": [[5, "F", 2]]}"#,
        r#"{"id": 6, "op": "shutdown"}"#,
        r#"{"id": 7, "op": "predict", "rows": [[5, "F", 2]]}"#,
    ]
    .join("\n");
    let mut out = Vec::new();
    serve(ServeTarget::Model(&local), "const", input.as_bytes(), &mut out).unwrap();
    let replies: Vec<serde_json::Value> = out
        .lines()
        .map(|l| serde_json::from_str(&l.unwrap()).unwrap())
        .collect();
    // one reply per non-blank line up to and including shutdown
    assert_eq!(replies.len(), 9);
    for r in &replies[..7] {
        assert_eq!(r["ok"], false, "{r}");
        assert!(r["error"].is_string());
    }
    assert_eq!(replies[0]["id"], serde_json::Value::Null);
    assert_eq!(replies[4]["id"], 2);
    assert_eq!(replies[7]["id"], 5);
    assert_eq!(replies[7]["labels"], serde_json::json!([1]));
    assert_eq!(replies[7]["scores"], serde_json::json!([0.9]));
    assert_eq!(replies[8], serde_json::json!({"id": 6, "ok": true}));
}

const PY_MODEL: &str = r#"
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    op = req["op"]
    if op == "hello":
        resp = {"kind": "model", "n_features": 3, "name": "py-sex", "version": req["version"]}
    elif op == "predict":
        labels = [1 if r[1] == "M" else 0 for r in req["rows"]]
        resp = {"labels": labels, "scores": [0.75] * len(labels)}
    else:
        resp = {}
    resp.update(id=req["id"], ok=True)
    print(json.dumps(resp), flush=True)
    if op == "shutdown":
        break
"#;

fn python_command(dir: &std::path::Path, source: &str) -> String {
    let path = dir.join("peer.py");
    std::fs::write(&path, source).unwrap();
    format!("python3 {}", path.display())
}

#[test]
fn spawned_python_peer_serves_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let client = BridgeClient::spawn(&python_command(dir.path(), PY_MODEL)).unwrap();
    assert_eq!(client.info().name, "py-sex");
    let remote = ExternalClassifier::new(client, people()).unwrap();
    let xs = rows(300);
    let preds = remote.predict_batch(&xs).unwrap();
    for (x, p) in xs.iter().zip(&preds) {
        assert_eq!(p.label as i64, x.values()[1]);
        assert_eq!(p.score, 0.75);
    }
}

#[test]
fn peer_failures_surface_as_bridge_errors() {
    let dir = tempfile::tempdir().unwrap();
    let dead = BridgeClient::spawn("exit 0").err().unwrap();
    assert_eq!(dead.family(), ErrorFamily::Bridge);

    // a model peer cannot stand in for a generator
    let client = BridgeClient::spawn(&python_command(dir.path(), PY_MODEL)).unwrap();
    assert!(matches!(ExternalGenerator::new(client, people()), Err(Error::BridgeFailure(_))));

    // nor one declaring the wrong width
    let client = BridgeClient::spawn(&python_command(dir.path(), PY_MODEL)).unwrap();
    let mut wide = people().columns().to_vec();
    wide.push(limi::schema::ColumnSpec::numeric("extra", 0, 1));
    let wide = limi::schema::Schema::new(wide, "y", 1).unwrap();
    assert!(matches!(ExternalClassifier::new(client, wide), Err(Error::BridgeFailure(_))));

    // out-of-range scores are rejected
    let bad = PY_MODEL.replace("[0.75]", "[0.25]");
    let client = BridgeClient::spawn(&python_command(dir.path(), &bad)).unwrap();
    let remote = ExternalClassifier::new(client, people()).unwrap();
    let err = remote.predict_batch(&rows(2)).unwrap_err();
    assert!(err.to_string().contains("outside"), "{err}");
}

#[test]
fn stream_writer_is_flushed_per_line() {
    // the client must not wait on buffered output: a peer that answers
    // only after reading a full line still completes the handshake
    let (req_r, req_w) = std::io::pipe().unwrap();
    let (resp_r, mut resp_w) = std::io::pipe().unwrap();
    let peer = std::thread::spawn(move || {
        let mut line = String::new();
        BufReader::new(req_r).read_line(&mut line).unwrap();
        assert!(line.ends_with('\n'));
        writeln!(resp_w, r#"{{"id":1,"ok":true,"kind":"generator","latent_dim":2,"name":"g","version":"limi-bridge/1"}}"#).unwrap();
    });
    let client = BridgeClient::connect(BufReader::new(resp_r), std::io::BufWriter::new(req_w)).unwrap();
    assert_eq!(client.info().latent_dim, Some(2));
    peer.join().unwrap();
}
