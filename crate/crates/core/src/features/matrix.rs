use std::fmt::Write as _;
use std::path::Path;

use crate::dataio::{ClassLabel, LabeledSample};
use crate::error::{Error, Result};

use super::ExtractorId;

/// Labeled rows sharing one extractor and dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub extractor: ExtractorId,
    pub rows: Vec<LabeledSample>,
}

impl FeatureMatrix {
    pub fn new(extractor: ExtractorId, rows: Vec<LabeledSample>) -> Result<Self> {
        let dims = extractor.dims();
        for row in &rows {
            if row.features.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: row.features.len(),
                });
            }
        }
        Ok(FeatureMatrix { extractor, rows })
    }

    pub fn dims(&self) -> usize {
        self.extractor.dims()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.rows.iter().filter(|r| r.label == label).count()
    }

    /// CSV text: an `# extractor=<id>;dims=<d>` line, a column header,
    /// then one row per sample. Values use the shortest representation
    /// that parses back to the same `f64`.
    pub fn to_csv(&self) -> String {
        let dims = self.dims();
        let mut out = format!("# extractor={};dims={dims}\nlabel,synthetic", self.extractor);
        for j in 0..dims {
            write!(out, ",v{j}").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(row.label.as_str());
            out.push_str(if row.synthetic { ",1" } else { ",0" });
            for v in &row.features {
                write!(out, ",{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let (first, body) = text.split_once('\n').unwrap_or((text, ""));
        let meta = first
            .trim()
            .strip_prefix("# ")
            .ok_or_else(|| Error::Malformed("feature file must start with '# extractor=...'".into()))?;
        let mut extractor = None;
        let mut dims = None;
        for part in meta.split(';') {
            match part.split_once('=') {
                Some(("extractor", v)) => extractor = Some(v.parse::<ExtractorId>()?),
                Some(("dims", v)) => {
                    dims = Some(v.parse::<usize>().map_err(|_| {
                        Error::Malformed(format!("bad dims '{v}' in feature header"))
                    })?)
                }
                _ => return Err(Error::Malformed(format!("bad feature header field '{part}'"))),
            }
        }
        let extractor =
            extractor.ok_or_else(|| Error::Malformed("feature header lacks extractor".into()))?;
        let dims = dims.ok_or_else(|| Error::Malformed("feature header lacks dims".into()))?;
        if dims != extractor.dims() {
            return Err(Error::DimensionMismatch {
                expected: extractor.dims(),
                actual: dims,
            });
        }

        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(body.as_bytes());
        let header_len = reader
            .headers()
            .map_err(|e| Error::Malformed(e.to_string()))?
            .len();
        if header_len != dims + 2 {
            return Err(Error::DimensionMismatch {
                expected: dims,
                actual: header_len.saturating_sub(2),
            });
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Malformed(e.to_string()))?;
            if rec.len() != dims + 2 {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    actual: rec.len().saturating_sub(2),
                });
            }
            let label: ClassLabel = rec[0].parse()?;
            let synthetic = match &rec[1] {
                "0" => false,
                "1" => true,
                other => return Err(Error::Malformed(format!("synthetic flag '{other}'"))),
            };
            let features = rec
                .iter()
                .skip(2)
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Malformed(format!("feature value '{v}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(LabeledSample {
                features,
                label,
                synthetic,
            });
        }
        if rows.is_empty() {
            return Err(Error::Dataset("feature file has no rows".into()));
        }
        Self::new(extractor, rows)
    }
}

pub fn save_features(matrix: &FeatureMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FeatureMatrix::parse(&text)
}
