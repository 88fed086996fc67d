//! File formats: JSON-lines complex datasets and JSON complexon files.
//!
//! A JSON-lines file may start with a header line `{"provenance": {...}}`;
//! readers skip it.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::complexon::StepComplexon;
use crate::error::{Error, Result};
use crate::simplicial::{LabeledSample, SimplicialComplex, SoftLabel};

pub type Dataset = Vec<LabeledSample<SimplicialComplex>>;

/// One line of a dataset file.
#[derive(Debug, Serialize, Deserialize)]
struct ComplexRecord {
    id: String,
    n: usize,
    simplices: Vec<Vec<usize>>,
    label: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Value>,
}

/// Reads a JSON-lines dataset. Blank lines are skipped; every record must be
/// closed under restriction and carry a valid label, and all labels must
/// have the same number of classes.
pub fn read_dataset<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut out: Dataset = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: lineno, message };
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if is_header(&value) {
            continue;
        }
        let rec: ComplexRecord =
            serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
        if rec.n == 0 {
            return Err(parse_err("complex must have at least one node".into()));
        }
        let complex = SimplicialComplex::from_simplices(rec.n, rec.simplices)
            .map_err(|e| parse_err(e.to_string()))?;
        let label = SoftLabel::new(rec.label).map_err(|e| parse_err(e.to_string()))?;
        if let Some(first) = out.first() {
            if first.label.num_classes() != label.num_classes() {
                return Err(parse_err(format!(
                    "label has {} classes, earlier records have {}",
                    label.num_classes(),
                    first.label.num_classes()
                )));
            }
        }
        out.push(LabeledSample {
            id: rec.id,
            payload: complex,
            label,
        });
    }
    Ok(out)
}

fn is_header(v: &Value) -> bool {
    v.as_object()
        .is_some_and(|o| o.len() == 1 && o.contains_key("provenance"))
}

/// The `{"provenance": ...}` header line, newline included.
pub fn header_line(provenance: &Value) -> Result<String> {
    let mut s = serde_json::to_string(&serde_json::json!({ "provenance": provenance }))?;
    s.push('\n');
    Ok(s)
}

/// Writes one JSON object per line. `provenance[i]`, when given, is attached
/// to record `i`.
pub fn write_dataset<W: Write>(
    mut writer: W,
    samples: &[LabeledSample<SimplicialComplex>],
    provenance: &[Option<Value>],
) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        let rec = ComplexRecord {
            id: s.id.clone(),
            n: s.payload.num_nodes(),
            simplices: s.payload.to_lists(),
            label: s.label.probs().to_vec(),
            provenance: provenance.get(i).cloned().flatten(),
        };
        serde_json::to_writer(&mut writer, &rec)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ComplexonRecord {
    n: usize,
    max_dim: usize,
    levels: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Value>,
}

/// A complexon file: the function plus optional identity, label, and
/// provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexonFile {
    pub complexon: StepComplexon,
    pub id: Option<String>,
    pub label: Option<SoftLabel>,
    pub provenance: Option<Value>,
}

impl ComplexonFile {
    pub fn bare(complexon: StepComplexon) -> Self {
        ComplexonFile {
            complexon,
            id: None,
            label: None,
            provenance: None,
        }
    }
}

/// Full (non-canonical) row-major arrays keyed by dimension.
pub fn complexon_to_json(file: &ComplexonFile) -> Result<String> {
    let w = &file.complexon;
    let rec = ComplexonRecord {
        n: w.resolution(),
        max_dim: w.max_dim(),
        levels: (1..=w.max_dim()).map(|c| (c.to_string(), w.level(c).to_vec())).collect(),
        id: file.id.clone(),
        label: file.label.as_ref().map(|l| l.probs().to_vec()),
        provenance: file.provenance.clone(),
    };
    Ok(serde_json::to_string(&rec)?)
}

/// Parses a complexon file; symmetry is checked to within
/// [`SYMMETRY_TOLERANCE`](crate::complexon::SYMMETRY_TOLERANCE).
pub fn complexon_from_json(text: &str) -> Result<ComplexonFile> {
    let mut rec: ComplexonRecord = serde_json::from_str(text)?;
    let mut levels = Vec::with_capacity(rec.max_dim);
    for c in 1..=rec.max_dim {
        let level = rec
            .levels
            .remove(&c.to_string())
            .ok_or_else(|| Error::shape(format!("missing level {c}")))?;
        levels.push(level);
    }
    if let Some(extra) = rec.levels.keys().next() {
        return Err(Error::shape(format!("unexpected level {extra:?} beyond max_dim")));
    }
    Ok(ComplexonFile {
        complexon: StepComplexon::new(rec.n, levels)?,
        id: rec.id,
        label: rec.label.map(SoftLabel::new).transpose()?,
        provenance: rec.provenance,
    })
}

/// Reads one complexon record per line.
pub fn read_complexons<R: BufRead>(reader: R) -> Result<Vec<ComplexonFile>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |e: Error| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        };
        let value: Value = serde_json::from_str(&line).map_err(|e| parse_err(e.into()))?;
        if is_header(&value) {
            continue;
        }
        out.push(complexon_from_json(&line).map_err(parse_err)?);
    }
    Ok(out)
}

pub fn write_complexons<W: Write>(mut writer: W, files: &[ComplexonFile]) -> Result<()> {
    for f in files {
        writer.write_all(complexon_to_json(f)?.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes serializable rows as CSV, preceded by a `# provenance: {...}`
/// comment line when `provenance` is given.
pub fn rows_to_csv<T: Serialize>(rows: &[T], provenance: Option<&Value>) -> Result<String> {
    let mut out = Vec::new();
    if let Some(p) = provenance {
        out.extend_from_slice(b"# provenance: ");
        serde_json::to_writer(&mut out, p)?;
        out.push(b'\n');
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Content hash of a complexon's levels, independent of any metadata.
pub fn complexon_hash(w: &StepComplexon) -> String {
    let text = complexon_to_json(&ComplexonFile::bare(w.clone())).expect("serializable");
    sha256_hex(text.as_bytes())
}
