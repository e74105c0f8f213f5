use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::ClassLabel;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path as written in the manifest, relative to the manifest root.
    pub image_path: String,
    pub label: ClassLabel,
}

/// Labelled image list stored as a `path,label` CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.image_path.as_str()) {
                return Err(Error::Dataset(format!(
                    "duplicate manifest path {}",
                    e.image_path
                )));
            }
        }
        Ok(DatasetManifest {
            root: root.into(),
            entries,
        })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.image_path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn count(&self, label: ClassLabel) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// Reads a manifest; relative paths resolve against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root)
    }

    pub fn parse(text: &str, root: impl Into<PathBuf>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Malformed(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["path", "label"] {
            return Err(Error::Malformed(format!(
                "manifest header must be 'path,label', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::Malformed(e.to_string()))?;
            if rec.len() != 2 {
                return Err(Error::Malformed(format!("manifest row {:?}", rec)));
            }
            entries.push(ManifestEntry {
                image_path: rec[0].to_string(),
                label: rec[1].parse()?,
            });
        }
        Self::new(root, entries)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,label\n");
        for e in &self.entries {
            out.push_str(&e.image_path);
            out.push(',');
            out.push_str(e.label.as_str());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
