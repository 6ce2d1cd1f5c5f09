//! Tabular data model: column domains, rows, datasets, CSV ingestion,
//! the numeric encoding used by the built-in models, and enumeration of
//! protected-attribute variants.
//!
//! Rows store one `i64` code per column. For numeric columns the code is
//! the value itself (numeric domains are closed integer intervals); for
//! categorical columns it is the index into the column's ordered value list.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Domain of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Domain {
    /// Closed integer interval `lo..=hi`.
    Numeric { lo: i64, hi: i64 },
    /// Ordered, duplicate-free list of category labels.
    Categorical { values: Vec<String> },
}

impl Domain {
    pub fn size(&self) -> usize {
        match self {
            Domain::Numeric { lo, hi } => (hi - lo + 1) as usize,
            Domain::Categorical { values } => values.len(),
        }
    }

    /// Smallest and largest valid code.
    pub fn code_range(&self) -> (i64, i64) {
        match self {
            Domain::Numeric { lo, hi } => (*lo, *hi),
            Domain::Categorical { values } => (0, values.len() as i64 - 1),
        }
    }

    pub fn contains(&self, code: i64) -> bool {
        let (lo, hi) = self.code_range();
        (lo..=hi).contains(&code)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Domain::Numeric { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSpec {
    pub name: String,
    pub domain: Domain,
    pub protected: bool,
    /// Codes of the privileged group; empty unless group metrics use this column.
    pub privileged: Vec<i64>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, lo: i64, hi: i64) -> Self {
        ColumnSpec {
            name: name.to_string(),
            domain: Domain::Numeric { lo, hi },
            protected: false,
            privileged: Vec::new(),
        }
    }

    pub fn categorical<S: AsRef<str>>(name: &str, values: &[S]) -> Self {
        ColumnSpec {
            name: name.to_string(),
            domain: Domain::Categorical {
                values: values.iter().map(|v| v.as_ref().to_string()).collect(),
            },
            protected: false,
            privileged: Vec::new(),
        }
    }

    pub fn protected(mut self) -> Self {
        self.protected = true;
        self
    }

    /// Marks the given raw values as the privileged group.
    pub fn privileged<S: AsRef<str>>(mut self, values: &[S]) -> Self {
        self.privileged = values
            .iter()
            .map(|v| self.parse(v.as_ref()).unwrap_or(i64::MIN))
            .collect();
        self
    }

    pub fn is_numeric(&self) -> bool {
        self.domain.is_numeric()
    }

    /// Parses a raw textual value into its code.
    pub fn parse(&self, raw: &str) -> Option<i64> {
        let raw = raw.trim();
        match &self.domain {
            Domain::Numeric { lo, hi } => raw.parse::<i64>().ok().filter(|v| (*lo..=*hi).contains(v)),
            Domain::Categorical { values } => values.iter().position(|v| v == raw).map(|i| i as i64),
        }
    }

    /// Textual form of a code.
    pub fn format(&self, code: i64) -> String {
        match &self.domain {
            Domain::Numeric { .. } => code.to_string(),
            Domain::Categorical { values } => values
                .get(code as usize)
                .cloned()
                .unwrap_or_else(|| format!("<invalid {code}>")),
        }
    }

    fn validate(&self) -> Result<()> {
        match &self.domain {
            Domain::Numeric { lo, hi } => {
                if lo > hi {
                    return Err(Error::InvalidSchema(format!(
                        "column `{}` has empty interval [{lo}, {hi}]",
                        self.name
                    )));
                }
            }
            Domain::Categorical { values } => {
                if values.is_empty() {
                    return Err(Error::InvalidSchema(format!(
                        "column `{}` has no categories",
                        self.name
                    )));
                }
                let mut seen = HashSet::new();
                for v in values {
                    if !seen.insert(v) {
                        return Err(Error::InvalidSchema(format!(
                            "column `{}` repeats category `{v}`",
                            self.name
                        )));
                    }
                }
            }
        }
        if let Some(bad) = self.privileged.iter().find(|c| !self.domain.contains(**c)) {
            return Err(Error::InvalidSchema(format!(
                "column `{}` has a privileged value outside its domain (code {bad})",
                self.name
            )));
        }
        Ok(())
    }
}

/// Ordered columns plus label metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDoc", into = "SchemaDoc")]
pub struct Schema {
    columns: Vec<ColumnSpec>,
    label_name: String,
    favorable_label: u8,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>, label_name: &str, favorable_label: u8) -> Result<Self> {
        if favorable_label > 1 {
            return Err(Error::InvalidSchema("favorable label must be 0 or 1".into()));
        }
        if columns.is_empty() {
            return Err(Error::InvalidSchema("schema has no columns".into()));
        }
        let mut names = HashSet::new();
        for c in &columns {
            c.validate()?;
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate column `{}`", c.name)));
            }
        }
        if names.contains(label_name) {
            return Err(Error::InvalidSchema(format!(
                "label `{label_name}` is also listed as a feature column"
            )));
        }
        if !columns.iter().any(|c| c.protected) {
            return Err(Error::InvalidSchema("no protected column".into()));
        }
        Ok(Schema {
            columns,
            label_name: label_name.to_string(),
            favorable_label,
        })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn column(&self, idx: usize) -> &ColumnSpec {
        &self.columns[idx]
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn favorable_label(&self) -> u8 {
        self.favorable_label
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn protected_indices(&self) -> Vec<usize> {
        (0..self.columns.len()).filter(|&i| self.columns[i].protected).collect()
    }

    /// Copy of the schema where exactly the named columns are protected.
    pub fn with_protected<S: AsRef<str>>(&self, names: &[S]) -> Result<Schema> {
        if names.is_empty() {
            return Err(Error::InvalidSchema("no protected column selected".into()));
        }
        let mut columns = self.columns.clone();
        for c in columns.iter_mut() {
            c.protected = false;
        }
        for name in names {
            let idx = self
                .column_index(name.as_ref())
                .ok_or_else(|| Error::InvalidSchema(format!("unknown column `{}`", name.as_ref())))?;
            columns[idx].protected = true;
        }
        Schema::new(columns, &self.label_name, self.favorable_label)
    }

    pub fn validate_row(&self, row: &Row) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        for (c, &v) in self.columns.iter().zip(row.values()) {
            if !c.domain.contains(v) {
                return Err(Error::InvalidRow(format!(
                    "code {v} outside the domain of column `{}`",
                    c.name
                )));
            }
        }
        Ok(())
    }

    /// Textual form of each value in `row`.
    pub fn format_row(&self, row: &Row) -> Vec<String> {
        self.columns
            .iter()
            .zip(row.values())
            .map(|(c, &v)| c.format(v))
            .collect()
    }

    /// Min-max/ordinal encoding of a row into `[0, 1]` per column.
    pub fn encode(&self, row: &Row) -> FeatureVector {
        let mut entries = vec![0.0; self.columns.len()];
        self.encode_into(row, &mut entries);
        FeatureVector { entries }
    }

    /// Allocation-free variant of [`Schema::encode`].
    pub fn encode_into(&self, row: &Row, out: &mut [f64]) {
        for ((c, &v), slot) in self.columns.iter().zip(row.values()).zip(out.iter_mut()) {
            let (lo, hi) = c.domain.code_range();
            *slot = if hi == lo {
                0.0
            } else {
                (v - lo) as f64 / (hi - lo) as f64
            };
        }
    }

    /// Column to feature-index mapping of the encoding. The ordinal encoding
    /// uses one feature per column.
    pub fn encoding_map(&self) -> Vec<std::ops::Range<usize>> {
        (0..self.columns.len()).map(|i| i..i + 1).collect()
    }

    /// Same columns, domains and label, possibly different protected or
    /// privileged markings.
    pub fn is_compatible(&self, other: &Schema) -> bool {
        self.len() == other.len()
            && self.label_name == other.label_name
            && self.favorable_label == other.favorable_label
            && self
                .columns
                .iter()
                .zip(&other.columns)
                .all(|(a, b)| a.name == b.name && a.domain == b.domain)
    }

    /// True when the privileged-group membership of `row` is determined by
    /// `col` and the row's value is privileged.
    pub fn is_privileged(&self, col: usize, row: &Row) -> bool {
        self.columns[col].privileged.contains(&row.values()[col])
    }
}

/// Serialized form of [`Schema`]; privileged values are raw text or numbers.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaDoc {
    label: String,
    favorable_label: u8,
    columns: Vec<ColumnDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ColumnDoc {
    name: String,
    #[serde(flatten)]
    domain: Domain,
    #[serde(default)]
    protected: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    privileged_values: Vec<serde_json::Value>,
}

impl TryFrom<SchemaDoc> for Schema {
    type Error = Error;

    fn try_from(doc: SchemaDoc) -> Result<Self> {
        let mut columns = Vec::with_capacity(doc.columns.len());
        for cd in doc.columns {
            let mut col = ColumnSpec {
                name: cd.name,
                domain: cd.domain,
                protected: cd.protected,
                privileged: Vec::new(),
            };
            for pv in &cd.privileged_values {
                let raw = match pv {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let code = col.parse(&raw).ok_or_else(|| {
                    Error::InvalidSchema(format!(
                        "privileged value `{raw}` is outside the domain of `{}`",
                        col.name
                    ))
                })?;
                col.privileged.push(code);
            }
            columns.push(col);
        }
        Schema::new(columns, &doc.label, doc.favorable_label)
    }
}

impl From<Schema> for SchemaDoc {
    fn from(s: Schema) -> Self {
        SchemaDoc {
            label: s.label_name,
            favorable_label: s.favorable_label,
            columns: s
                .columns
                .into_iter()
                .map(|c| {
                    let privileged_values = c
                        .privileged
                        .iter()
                        .map(|&code| match &c.domain {
                            Domain::Numeric { .. } => serde_json::Value::from(code),
                            Domain::Categorical { .. } => serde_json::Value::from(c.format(code)),
                        })
                        .collect();
                    ColumnDoc {
                        name: c.name,
                        domain: c.domain,
                        protected: c.protected,
                        privileged_values,
                    }
                })
                .collect(),
        }
    }
}

impl Schema {
    pub fn from_json_str(s: &str) -> Result<Schema> {
        // try_from errors surface as serde messages; unwrap them back into
        // InvalidSchema for a stable error family.
        serde_json::from_str(s).map_err(|e| {
            if e.is_data() {
                Error::InvalidSchema(e.to_string())
            } else {
                Error::json("schema", e)
            }
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Schema::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }
}

/// One tabular record, one code per schema column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Row {
    values: Vec<i64>,
}

impl Row {
    pub fn new(values: Vec<i64>) -> Self {
        Row { values }
    }

    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn get(&self, col: usize) -> i64 {
        self.values[col]
    }

    pub fn set(&mut self, col: usize, code: i64) {
        self.values[col] = code;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Numeric view of a [`Row`] used to train and query the built-in models.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub entries: Vec<f64>,
}

/// Rows with binary ground-truth labels under a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Schema,
    rows: Vec<Row>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(schema: Schema, rows: Vec<Row>, labels: Vec<u8>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidRow(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        for r in &rows {
            schema.validate_row(r)?;
        }
        if let Some(l) = labels.iter().find(|l| **l > 1) {
            return Err(Error::InvalidRow(format!("label {l} is not binary")));
        }
        Ok(Dataset { schema, rows, labels })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Same rows under a schema that differs only in protected flags.
    pub fn with_schema(&self, schema: Schema) -> Result<Dataset> {
        if !schema.is_compatible(&self.schema) {
            return Err(Error::InvalidSchema("schemas are not compatible".into()));
        }
        Ok(Dataset {
            schema,
            rows: self.rows.clone(),
            labels: self.labels.clone(),
        })
    }

    /// Concatenation of two datasets over compatible schemas.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let other = other.with_schema(self.schema.clone())?;
        let mut rows = self.rows.clone();
        rows.extend(other.rows);
        let mut labels = self.labels.clone();
        labels.extend(other.labels);
        Ok(Dataset {
            schema: self.schema.clone(),
            rows,
            labels,
        })
    }

    /// Values of one column as `f64`, in row order.
    pub fn column_values(&self, col: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.get(col) as f64).collect()
    }

    /// Rows selected by index, labels carried along.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.schema.columns().iter().map(|c| c.name.as_str()).collect();
        header.push(self.schema.label_name());
        w.write_record(&header).map_err(csv_err)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut rec = self.schema.format_row(row);
            rec.push(label.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Csv(e.to_string())
}

/// Reads a CSV file whose header names every schema column and the label.
///
/// Columns are located by name; additional columns are ignored, which lets
/// exported discriminatory-pair files load back as datasets of their first
/// member. Row numbers in errors are 1-based data-line indices.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn {
                column: name.to_string(),
            })
    };
    let col_pos = schema
        .columns()
        .iter()
        .map(|c| find(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let label_pos = find(schema.label_name())?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 1;
        let mut values = Vec::with_capacity(col_pos.len());
        for (c, &pos) in schema.columns().iter().zip(&col_pos) {
            let raw = rec.get(pos).unwrap_or("");
            let code = c.parse(raw).ok_or_else(|| Error::OutOfDomainValue {
                row: line,
                column: c.name.clone(),
                value: raw.to_string(),
            })?;
            values.push(code);
        }
        let raw_label = rec.get(label_pos).unwrap_or("").trim();
        let label = match raw_label {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::BadLabel {
                    row: line,
                    value: other.to_string(),
                })
            }
        };
        rows.push(Row::new(values));
        labels.push(label);
    }
    Ok(Dataset {
        schema: schema.clone(),
        rows,
        labels,
    })
}

/// Every row obtained by substituting other in-domain values into the
/// protected columns, in lexicographic order over the protected columns
/// (schema order, codes ascending). The input row itself is excluded.
pub fn protected_variants(schema: &Schema, row: &Row) -> Vec<Row> {
    let protected = schema.protected_indices();
    let ranges: Vec<(i64, i64)> = protected
        .iter()
        .map(|&i| schema.column(i).domain.code_range())
        .collect();
    let total: usize = ranges.iter().map(|(lo, hi)| (hi - lo + 1) as usize).product();
    let mut out = Vec::with_capacity(total.saturating_sub(1));
    let mut codes: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    for _ in 0..total {
        let mut candidate = row.clone();
        for (&col, &code) in protected.iter().zip(&codes) {
            candidate.set(col, code);
        }
        if candidate != *row {
            out.push(candidate);
        }
        // odometer increment, last protected column fastest
        for k in (0..codes.len()).rev() {
            if codes[k] < ranges[k].1 {
                codes[k] += 1;
                break;
            }
            codes[k] = ranges[k].0;
        }
    }
    out
}

/// Endless stream of rows drawn independently and uniformly over each
/// column's domain.
pub struct UniformRows {
    rng: rng::Rng,
    ranges: Vec<(i64, i64)>,
}

impl UniformRows {
    pub fn new(schema: &Schema, seed: u64) -> Self {
        UniformRows {
            rng: rng::seeded(seed),
            ranges: schema.columns().iter().map(|c| c.domain.code_range()).collect(),
        }
    }
}

impl Iterator for UniformRows {
    type Item = Row;

    fn next(&mut self) -> Option<Row> {
        let rng = &mut self.rng;
        Some(Row::new(
            self.ranges.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect(),
        ))
    }
}

/// `n` rows drawn independently and uniformly over each column's domain.
pub fn sample_uniform(schema: &Schema, n: usize, seed: u64) -> Vec<Row> {
    UniformRows::new(schema, seed).take(n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planets() -> Schema {
        Schema::new(
            vec![
                ColumnSpec::categorical("planet", &["Mars", "Venus"]).protected(),
                ColumnSpec::numeric("score", 0, 100),
            ],
            "y",
            1,
        )
        .unwrap()
    }

    #[test]
    fn loads_small_csv() {
        let csv = "planet,score,y\nMars,25,1\nVenus,0,0\nMars,100,1\n";
        let ds = read_csv(csv.as_bytes(), &planets()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.rows()[0].values(), &[0, 25]);
        assert_eq!(ds.labels(), &[1, 0, 1]);
    }

    #[test]
    fn rejects_out_of_domain_category() {
        let csv = "planet,score,y\nMars,1,0\nMarz,25,1\n";
        match read_csv(csv.as_bytes(), &planets()) {
            Err(Error::OutOfDomainValue { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (2, "planet", "Marz"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_column_and_bad_label() {
        let csv = "planet,y\nMars,1\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &planets()),
            Err(Error::MissingColumn { column }) if column == "score"
        ));
        let csv = "planet,score,y\nMars,3,yes\n";
        assert!(matches!(
            read_csv(csv.as_bytes(), &planets()),
            Err(Error::BadLabel { row: 1, .. })
        ));
    }

    #[test]
    fn encodes_by_domain() {
        let s = Schema::new(
            vec![
                ColumnSpec::numeric("n", 0, 100),
                ColumnSpec::categorical("c", &["A", "B", "C"]).protected(),
            ],
            "y",
            1,
        )
        .unwrap();
        assert_eq!(s.encode(&Row::new(vec![25, 2])).entries, vec![0.25, 1.0]);
        assert_eq!(s.encode(&Row::new(vec![0, 0])).entries, vec![0.0, 0.0]);
    }

    #[test]
    fn schema_invariants_are_enforced() {
        let dup = Schema::new(
            vec![
                ColumnSpec::numeric("a", 0, 1).protected(),
                ColumnSpec::numeric("a", 0, 1),
            ],
            "y",
            1,
        );
        assert!(matches!(dup, Err(Error::InvalidSchema(_))));
        let unprotected = Schema::new(vec![ColumnSpec::numeric("a", 0, 1)], "y", 1);
        assert!(matches!(unprotected, Err(Error::InvalidSchema(_))));
        let label_clash = Schema::new(vec![ColumnSpec::numeric("y", 0, 1).protected()], "y", 1);
        assert!(label_clash.is_err());
        let empty = Schema::new(vec![ColumnSpec::numeric("a", 3, 2).protected()], "y", 1);
        assert!(empty.is_err());
        let repeated = Schema::new(vec![ColumnSpec::categorical("a", &["x", "x"]).protected()], "y", 1);
        assert!(repeated.is_err());
    }

    #[test]
    fn schema_json_roundtrip_keeps_privileged_values() {
        let s = Schema::new(
            vec![
                ColumnSpec::categorical("sex", &["Female", "Male"])
                    .protected()
                    .privileged(&["Male"]),
                ColumnSpec::numeric("age", 1, 9).protected().privileged(&["3", "4"]),
            ],
            "income",
            1,
        )
        .unwrap();
        let text = s.to_json_string();
        assert!(text.contains("\"Male\""));
        assert_eq!(Schema::from_json_str(&text).unwrap(), s);
    }

    #[test]
    fn privileged_value_outside_domain_is_rejected() {
        let doc = r#"{"label":"y","favorable_label":1,"columns":[
            {"name":"sex","kind":"categorical","values":["F","M"],"protected":true,"privileged_values":["X"]}]}"#;
        assert!(matches!(Schema::from_json_str(doc), Err(Error::InvalidSchema(_))));
    }

    #[test]
    fn variant_counts() {
        let s = planets();
        assert_eq!(protected_variants(&s, &Row::new(vec![0, 5])), vec![Row::new(vec![1, 5])]);

        let age = Schema::new(vec![ColumnSpec::numeric("age", 1, 9).protected()], "y", 1).unwrap();
        assert_eq!(protected_variants(&age, &Row::new(vec![3])).len(), 8);
    }

    #[test]
    fn two_protected_columns_enumerate_the_cartesian_product() {
        let s = Schema::new(
            vec![
                ColumnSpec::categorical("g", &["F", "M"]).protected(),
                ColumnSpec::numeric("x", 0, 9),
                ColumnSpec::categorical("r", &["a", "b", "c"]).protected(),
            ],
            "y",
            1,
        )
        .unwrap();
        let row = Row::new(vec![1, 4, 2]);
        let got = protected_variants(&s, &row);
        // brute force over the product of both domains
        let mut expected = Vec::new();
        for g in 0..2 {
            for r in 0..3 {
                let cand = Row::new(vec![g, 4, r]);
                if cand != row {
                    expected.push(cand);
                }
            }
        }
        assert_eq!(got.len(), 5);
        assert_eq!(got, expected);
    }

    #[test]
    fn uniform_sampling_is_seeded_and_balanced() {
        let s = Schema::new(vec![ColumnSpec::numeric("b", 0, 1).protected()], "y", 1).unwrap();
        let one = sample_uniform(&s, 1, 3);
        assert!(one[0].get(0) == 0 || one[0].get(0) == 1);
        assert_eq!(sample_uniform(&s, 50, 9), sample_uniform(&s, 50, 9));
        let draws = sample_uniform(&s, 10_000, 11);
        let ones = draws.iter().filter(|r| r.get(0) == 1).count() as f64 / 10_000.0;
        assert!((0.45..=0.55).contains(&ones), "frequency {ones}");
    }
}
