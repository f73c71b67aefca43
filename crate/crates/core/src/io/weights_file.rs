//! Weight-table files: one JSON document holding the weight function, the
//! source positive ratios and the per-attribute weight pairs.
//!
//! Floats are written in shortest round-trip form, so a write/read cycle
//! reproduces every weight bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::weights::{WeightFunction, WeightPair, WeightTable};

use super::{check_format, parse_error, IoError, FORMAT_VERSION, WEIGHTS_FORMAT};

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    function: WeightFunction,
    ratios: Vec<f64>,
    weights: Vec<(f64, f64)>,
}

pub fn write_weights(table: &WeightTable, path: &Path) -> Result<(), IoError> {
    let doc = WeightsFile {
        format: WEIGHTS_FORMAT.to_owned(),
        version: FORMAT_VERSION,
        function: *table.function(),
        ratios: table.ratios().to_vec(),
        weights: table.pairs().iter().map(|p| (p.pos, p.neg)).collect(),
    };
    let mut out = serde_json::to_vec(&doc).expect("weights serialize");
    out.push(b'\n');
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a weight table, re-validating ratios against the stated function
/// and requiring positive finite weights.
pub fn read_weights(path: &Path) -> Result<WeightTable, IoError> {
    let content = std::fs::read_to_string(path)?;
    let doc: WeightsFile = serde_json::from_str(content.trim_end())
        .map_err(|e| parse_error(path, 1, format!("bad weight table: {e}")))?;
    check_format(path, WEIGHTS_FORMAT, &doc.format, doc.version)?;
    if let Some(&(p, n)) = doc
        .weights
        .iter()
        .find(|(p, n)| !(p.is_finite() && n.is_finite() && *p > 0.0 && *n > 0.0))
    {
        return Err(IoError::InvalidWeights(format!(
            "weight pair ({p}, {n}) is not positive and finite"
        )));
    }
    let pairs = doc
        .weights
        .into_iter()
        .map(|(pos, neg)| WeightPair { pos, neg })
        .collect();
    WeightTable::from_parts(doc.function, doc.ratios, pairs)
        .map_err(|e| IoError::InvalidWeights(e.to_string()))
}
