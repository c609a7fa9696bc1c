use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{path_label, read_text, write_bytes, CLASSES_FILE, MANIFEST_FILE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    FerTrain,
    FerEval,
    Fr,
    Compound,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::FerTrain => "fer-train",
            Split::FerEval => "fer-eval",
            Split::Fr => "fr",
            Split::Compound => "compound",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fer-train" => Ok(Split::FerTrain),
            "fer-eval" => Ok(Split::FerEval),
            "fr" => Ok(Split::Fr),
            "compound" => Ok(Split::Compound),
            other => Err(Error::invalid(format!(
                "unknown split '{other}' (expected fer-train, fer-eval, fr, compound)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    /// Image path relative to the dataset directory.
    pub path: String,
    pub label: Option<usize>,
    pub split: Split,
    /// `(c1, c2)`: upper-half and lower-half classes of a compound sample.
    pub constituents: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub class_names: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

const HEADER: [&str; 6] = ["id", "path", "label", "split", "c1", "c2"];

impl DatasetManifest {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.class_count();
        if c < 2 {
            return Err(Error::invalid("a dataset needs at least two classes"));
        }
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            let row = i + 1;
            if !seen.insert(e.id.as_str()) {
                return Err(Error::at_row(MANIFEST_FILE, row, format!("duplicate id '{}'", e.id)));
            }
            if let Some(l) = e.label {
                if l >= c {
                    return Err(Error::at_row(MANIFEST_FILE, row, format!("label {l} >= class count {c}")));
                }
            }
            match (e.split, e.constituents) {
                (Split::Compound, Some((a, b))) => {
                    if a == b || a >= c || b >= c {
                        return Err(Error::at_row(
                            MANIFEST_FILE,
                            row,
                            format!("compound constituents ({a},{b}) must be two distinct classes < {c}"),
                        ));
                    }
                }
                (Split::Compound, None) => {
                    return Err(Error::at_row(MANIFEST_FILE, row, "compound entry without constituents"));
                }
                (_, Some(_)) => {
                    return Err(Error::at_row(MANIFEST_FILE, row, "constituents on a non-compound entry"));
                }
                (Split::FerTrain | Split::FerEval, None) if e.label.is_none() => {
                    return Err(Error::at_row(MANIFEST_FILE, row, "labeled split entry without label"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.validate()?;
        let mut names = String::new();
        for n in &self.class_names {
            names.push_str(n);
            names.push('\n');
        }
        write_bytes(&dir.join(CLASSES_FILE), names.as_bytes())?;

        let path = dir.join(MANIFEST_FILE);
        let mut w = csv::Writer::from_writer(Vec::new());
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let fail = |e: csv::Error| Error::Format {
            context: path_label(&path),
            location: "write".into(),
            message: e.to_string(),
        };
        w.write_record(HEADER).map_err(fail)?;
        for e in &self.entries {
            w.write_record([
                e.id.clone(),
                e.path.clone(),
                opt(e.label),
                e.split.to_string(),
                opt(e.constituents.map(|p| p.0)),
                opt(e.constituents.map(|p| p.1)),
            ])
            .map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
        write_bytes(&path, &bytes)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let names_path = dir.join(CLASSES_FILE);
        let class_names: Vec<String> = read_text(&names_path)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();

        let path = dir.join(MANIFEST_FILE);
        let ctx = path_label(&path);
        let text = read_text(&path)?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = rdr
            .headers()
            .map_err(|e| Error::at_row(&ctx, 0, e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != HEADER {
            return Err(Error::at_row(&ctx, 0, format!("expected header {}", HEADER.join(","))));
        }
        let mut entries = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::at_row(&ctx, row, e.to_string()))?;
            let num = |field: &str, what: &str| -> Result<Option<usize>> {
                if field.is_empty() {
                    Ok(None)
                } else {
                    field
                        .parse()
                        .map(Some)
                        .map_err(|_| Error::at_row(&ctx, row, format!("bad {what} '{field}'")))
                }
            };
            let split: Split = rec[3]
                .parse()
                .map_err(|e: Error| Error::at_row(&ctx, row, e.to_string()))?;
            let constituents = match (num(&rec[4], "c1")?, num(&rec[5], "c2")?) {
                (Some(a), Some(b)) => Some((a, b)),
                (None, None) => None,
                _ => return Err(Error::at_row(&ctx, row, "c1 and c2 must both be set or both empty")),
            };
            entries.push(ManifestEntry {
                id: rec[0].to_string(),
                path: rec[1].to_string(),
                label: num(&rec[2], "label")?,
                split,
                constituents,
            });
        }
        let m = Self { class_names, entries };
        m.validate()?;
        Ok(m)
    }
}
