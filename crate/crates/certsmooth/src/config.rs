//! Run configuration files.
//!
//! Paths inside a config file are resolved relative to the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use certsmooth_core::calibration::LabeledDataset;
use certsmooth_core::certifier::{CertificationMode, SamplingConfig};
use serde::{Deserialize, Serialize};

use crate::dataset::load_dataset;
use crate::error::{Error, Result};
use crate::model::{load_classifier, ClassifierKind, LoadedClassifier, UncertaintyEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierEntry {
    pub kind: ClassifierKind,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingEntry {
    pub sigma: f64,
    pub n0: u64,
    pub n: u64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SamplingEntry {
    fn default() -> Self {
        let d = SamplingConfig::default();
        SamplingEntry { sigma: d.sigma, n0: d.n0, n: d.n, alpha: d.alpha.get(), seed: d.seed }
    }
}

fn default_modes() -> Vec<String> {
    CertificationMode::ALL.iter().map(|m| m.as_str().to_string()).collect()
}

fn default_stride() -> usize {
    1
}

/// The config file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub classifier: ClassifierEntry,
    #[serde(default)]
    pub uncertainty: Option<UncertaintyEntry>,
    #[serde(default)]
    pub sampling: SamplingEntry,
    #[serde(default = "default_modes")]
    pub modes: Vec<String>,
    pub dataset: PathBuf,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub sigma: Option<f64>,
    pub n0: Option<u64>,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub modes: Option<Vec<String>>,
    pub stride: Option<usize>,
}

impl RunConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, Some(e.line()), e))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        let s = &mut self.sampling;
        s.sigma = o.sigma.unwrap_or(s.sigma);
        s.n0 = o.n0.unwrap_or(s.n0);
        s.n = o.n.unwrap_or(s.n);
        s.alpha = o.alpha.unwrap_or(s.alpha);
        s.seed = o.seed.unwrap_or(s.seed);
        if let Some(theta) = o.theta {
            match self.uncertainty.as_mut() {
                Some(u) => u.theta = Some(theta),
                None => return Err(Error::Config("--theta needs an uncertainty kind in the config".into())),
            }
        }
        if let Some(out) = &o.output {
            self.output = Some(out.clone());
        }
        if let Some(modes) = &o.modes {
            self.modes = modes.clone();
        }
        if let Some(stride) = o.stride {
            self.stride = stride;
        }
        Ok(())
    }

    /// Load every referenced file and validate all fields.
    pub fn resolve(&self, base_dir: &Path) -> Result<RunConfig> {
        let sampling = SamplingConfig::new(
            self.sampling.sigma,
            self.sampling.n0,
            self.sampling.n,
            self.sampling.alpha,
            self.sampling.seed,
        )?;
        let mut modes = Vec::new();
        for m in &self.modes {
            let mode = CertificationMode::parse(m.trim())
                .ok_or_else(|| Error::Config(format!("unknown mode {m:?}; expected standard, cc or ncl")))?;
            modes.push(mode);
        }
        modes.sort();
        modes.dedup();
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        let classifier_path = base_dir.join(&self.classifier.path);
        let classifier = load_classifier(self.classifier.kind, &classifier_path, self.uncertainty)?;
        let dataset_path = base_dir.join(&self.dataset);
        let dataset = load_dataset(&dataset_path)?;
        Ok(RunConfig {
            classifier,
            dataset,
            dataset_path,
            sampling,
            modes,
            stride: self.stride,
            output: self.output.as_ref().map(|p| base_dir.join(p)),
        })
    }
}

/// A validated run with its classifier and dataset loaded.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub classifier: LoadedClassifier,
    pub dataset: LabeledDataset,
    pub dataset_path: PathBuf,
    pub sampling: SamplingConfig,
    /// Requested modes in canonical order without duplicates.
    pub modes: Vec<CertificationMode>,
    pub stride: usize,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let mut file = RunConfigFile::read(path)?;
        file.apply(overrides)?;
        file.resolve(path.parent().unwrap_or(Path::new(".")))
    }
}
