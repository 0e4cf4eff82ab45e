// Record/label file readers and writers.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::record::{validate_record, BinaryLabel, PredictionRecord};

/// Reads a JSONL record file. Blank lines are skipped; every other line must
/// hold one valid record.
pub fn load_records(path: &Path) -> Result<Vec<PredictionRecord>> {
    let text = fs::read_to_string(path)?;
    parse_records(&text, &path.display().to_string())
}

pub fn parse_records(text: &str, origin: &str) -> Result<Vec<PredictionRecord>> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_string(),
            line: i + 1,
            message,
        };
        let record: PredictionRecord =
            serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let record = validate_record(record).map_err(|e| parse_err(format!("{}: {e}", e.kind())))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_records(path: &Path, records: &[PredictionRecord]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a two-column `item_id,label` CSV (header required).
pub fn load_labels(path: &Path) -> Result<BTreeMap<String, BinaryLabel>> {
    let origin = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    let mut labels = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: origin.clone(),
            line,
            message,
        };
        let (Some(item), Some(label)) = (row.get(0), row.get(1)) else {
            return Err(parse_err("expected item_id,label".into()));
        };
        let label: BinaryLabel = label.parse().map_err(parse_err)?;
        if labels.insert(item.to_string(), label).is_some() {
            return Err(parse_err(format!("duplicate label for item {item:?}")));
        }
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[(String, BinaryLabel)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["item_id", "label"])?;
    for (item, label) in labels {
        w.write_record([item.as_str(), if label.is_yes() { "1" } else { "0" }])?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json_bytes(value)?)?;
    Ok(())
}

/// Pretty JSON with a trailing newline; the byte form of every report.
pub fn to_json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
