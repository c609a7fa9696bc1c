//! Prediction CSV: `id,label,p0,...,p{C-1}`, probabilities with 9 decimals.

use std::path::Path;

use super::{path_label, read_text, write_bytes};
use crate::error::{Error, Result};
use crate::numcore::ProbVector;

/// Allowed deviation of a row sum from 1 after text round trip.
pub const ROW_SUM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    /// True class; `None` for unlabeled rows.
    pub label: Option<usize>,
    pub probs: ProbVector,
}

pub fn write_predictions(path: &Path, rows: &[PredictionRow]) -> Result<()> {
    let classes = rows.first().map(|r| r.probs.len()).unwrap_or(0);
    let mut out = String::from("id,label");
    for c in 0..classes {
        out.push_str(&format!(",p{c}"));
    }
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        if r.probs.len() != classes {
            return Err(Error::at_row(path_label(path), i + 1, "class count differs from first row"));
        }
        if r.id.contains([',', '"', '\n']) {
            return Err(Error::at_row(path_label(path), i + 1, "id contains a CSV delimiter"));
        }
        out.push_str(&r.id);
        out.push(',');
        if let Some(l) = r.label {
            out.push_str(&l.to_string());
        }
        for p in r.probs.as_slice() {
            out.push_str(&format!(",{p:.9}"));
        }
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let ctx = path_label(path);
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(Error::at_row(&ctx, 0, "empty prediction file"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::at_row(&ctx, 0, e.to_string()))?
        .iter()
        .map(String::from)
        .collect();
    let classes = header.len().saturating_sub(2);
    let expected: Vec<String> = ["id".to_string(), "label".to_string()]
        .into_iter()
        .chain((0..classes).map(|c| format!("p{c}")))
        .collect();
    if classes == 0 || header != expected {
        return Err(Error::at_row(&ctx, 0, "header must be id,label,p0,...,p{C-1}"));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::at_row(&ctx, row, e.to_string()))?;
        let label = match &rec[1] {
            "" => None,
            s => {
                let l: usize = s
                    .parse()
                    .map_err(|_| Error::at_row(&ctx, row, format!("bad label '{s}'")))?;
                if l >= classes {
                    return Err(Error::at_row(&ctx, row, format!("label {l} >= class count {classes}")));
                }
                Some(l)
            }
        };
        let values = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::at_row(&ctx, row, format!("bad probability '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let probs = ProbVector::with_tolerance(values, ROW_SUM_TOL)
            .map_err(|e| Error::at_row(&ctx, row, e.to_string()))?;
        rows.push(PredictionRow {
            id: rec[0].to_string(),
            label,
            probs,
        });
    }
    Ok(rows)
}
