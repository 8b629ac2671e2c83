use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{read_json, resolve, subdirectories};

/// Reserved id of the reference source.
pub const GROUND_TRUTH: &str = "ground_truth";

/// On-disk corpus description. Relative paths are taken from the manifest's
/// own directory.
///
/// ```json
/// {
///   "ground_truth": "gt",
///   "models": {"hallo2": "models/hallo2"},
///   "videos": ["id01", "id02"],
///   "topology": "topology.json"
/// }
/// ```
///
/// Each source directory holds one feature directory per video id. Without
/// `videos` the common list is every subdirectory of the ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub ground_truth: PathBuf,
    #[serde(default)]
    pub models: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub videos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<PathBuf>,
}

/// A loaded manifest with resolved paths and the common video list.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub ground_truth: PathBuf,
    pub models: BTreeMap<String, PathBuf>,
    pub videos: Vec<String>,
    pub topology: Option<PathBuf>,
}

impl CorpusManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let file: ManifestFile = read_json(path)?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_file(file, &root)
    }

    pub fn from_file(file: ManifestFile, root: &Path) -> Result<Self> {
        if file.models.contains_key(GROUND_TRUTH) {
            return Err(Error::Manifest(format!("model id `{GROUND_TRUTH}` is reserved for the reference")));
        }
        let ground_truth = resolve(root, &file.ground_truth);
        if !ground_truth.is_dir() {
            return Err(Error::Manifest(format!("ground-truth directory {} does not exist", ground_truth.display())));
        }
        let mut models = BTreeMap::new();
        for (id, dir) in file.models {
            let dir = resolve(root, &dir);
            if !dir.is_dir() {
                return Err(Error::Manifest(format!("directory {} of model `{id}` does not exist", dir.display())));
            }
            models.insert(id, dir);
        }
        let videos = match file.videos {
            Some(v) => v,
            None => subdirectories(&ground_truth)?,
        };
        if videos.is_empty() {
            return Err(Error::Manifest(format!("no videos listed and none found under {}", ground_truth.display())));
        }
        let mut sorted = videos.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Manifest(format!("video `{}` listed twice", w[0])));
        }
        Ok(Self {
            root: root.to_path_buf(),
            ground_truth,
            models,
            videos,
            topology: file.topology.map(|t| resolve(root, &t)),
        })
    }

    /// Source ids, ground truth first, then models in id order.
    pub fn sources(&self) -> impl Iterator<Item = (&str, &Path)> {
        std::iter::once((GROUND_TRUTH, self.ground_truth.as_path()))
            .chain(self.models.iter().map(|(k, v)| (k.as_str(), v.as_path())))
    }
}
