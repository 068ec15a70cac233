use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::align::Affine2;
use super::canvas::CanvasSpec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitLabel {
    Train,
    Val,
    Test,
}

impl SplitLabel {
    pub const ORDER: [SplitLabel; 3] = [SplitLabel::Train, SplitLabel::Val, SplitLabel::Test];
}

impl fmt::Display for SplitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitLabel::Train => "train",
            SplitLabel::Val => "val",
            SplitLabel::Test => "test",
        })
    }
}

/// One paired sample on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub visible: PathBuf,
    /// Real IR frame; absent when only visible footage exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ir: Option<PathBuf>,
    /// Radiation-zone label mask (class ids as pixel values).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default)]
    pub visible_index: usize,
    #[serde(default)]
    pub ir_index: usize,
    #[serde(default)]
    pub visible_timestamp: f64,
    #[serde(default)]
    pub ir_timestamp: f64,
    #[serde(default)]
    pub time_offset: f64,
    #[serde(default)]
    pub alignment: Affine2,
    /// Padding applied when the images were placed on the canvas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub padding: Option<CanvasSpec>,
}

impl ManifestEntry {
    pub fn new(id: impl Into<String>, visible: impl Into<PathBuf>) -> Self {
        Self {
            id: id.into(),
            visible: visible.into(),
            ir: None,
            mask: None,
            experiment: None,
            visible_index: 0,
            ir_index: 0,
            visible_timestamp: 0.0,
            ir_timestamp: 0.0,
            time_offset: 0.0,
            alignment: Affine2::identity(),
            padding: None,
        }
    }

    pub fn experiment(&self) -> &str {
        self.experiment.as_deref().unwrap_or("default")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub split_label: Option<SplitLabel>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canvas: Option<CanvasSpec>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, seed: u64) -> Self {
        Self {
            entries,
            split_label: None,
            seed,
            canvas: None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads a manifest; relative paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut manifest.entries {
            e.visible = resolve(base, &e.visible);
            e.ir = e.ir.as_ref().map(|p| resolve(base, p));
            e.mask = e.mask.as_ref().map(|p| resolve(base, p));
        }
        Ok(manifest)
    }

    /// Writes pretty JSON; paths under the manifest's directory are stored
    /// relative to it so bundles can be moved.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        let mut out = self.clone();
        for e in &mut out.entries {
            e.visible = relativize(base, &e.visible);
            e.ir = e.ir.as_ref().map(|p| relativize(base, p));
            e.mask = e.mask.as_ref().map(|p| relativize(base, p));
        }
        if !base.as_os_str().is_empty() {
            std::fs::create_dir_all(base).map_err(|e| Error::io(base, e))?;
        }
        let text = serde_json::to_string_pretty(&out)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// SHA-256 over entry ids and paths; stable across machines when the
    /// manifest uses relative paths.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.id.as_bytes());
            h.update([0]);
            for p in [Some(&e.visible), e.ir.as_ref(), e.mask.as_ref()].into_iter().flatten() {
                if let Some(name) = p.file_name() {
                    h.update(name.as_encoded_bytes());
                }
                h.update([0]);
            }
        }
        hex::encode(h.finalize())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn relativize(base: &Path, p: &Path) -> PathBuf {
    p.strip_prefix(base)
        .map(Path::to_path_buf)
        .unwrap_or_else(|_| p.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_load_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = ManifestEntry::new("a", dir.path().join("vis/a.png"));
        e.ir = Some(dir.path().join("ir/a.png"));
        let m = DatasetManifest::new(vec![e], 3);
        let p = dir.path().join("manifest.json");
        m.save(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("\"vis/a.png\""), "{text}");
        assert_eq!(DatasetManifest::load(&p).unwrap(), m);
    }

    #[test]
    fn schema_has_required_keys() {
        let m = DatasetManifest::new(vec![ManifestEntry::new("x", "x.png")], 1);
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        for key in ["entries", "split_label", "seed"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
}
