//! JSON model files and the classifier they describe.

use std::fs;
use std::path::Path;

use certsmooth_core::classifier::{
    Activation, BaseClassifier, Box2d, ClassDistribution, Equipped, EquippedClassifier, ExtendedLabel, LabelView,
    Layer, LinearModel, MlpModel, Region1d, Region2d, RegionLabel, UncertaintyConfig, UncertaintyKind,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Mlp,
    Linear,
    Region1d,
    Region2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ActivationDto {
    Relu,
    None,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDto {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default = "no_activation")]
    activation: ActivationDto,
}

fn no_activation() -> ActivationDto {
    ActivationDto::None
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MlpDto {
    input_dim: usize,
    classes: usize,
    layers: Vec<LayerDto>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearDto {
    w: Vec<f64>,
    b: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionLabelDto {
    class: usize,
    #[serde(default = "confident_by_default")]
    confident: bool,
}

fn confident_by_default() -> bool {
    true
}

impl From<RegionLabelDto> for RegionLabel {
    fn from(d: RegionLabelDto) -> Self {
        RegionLabel { class: d.class, confident: d.confident }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Region1dDto {
    breakpoints: Vec<f64>,
    labels: Vec<RegionLabelDto>,
    #[serde(default)]
    classes: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDto {
    lo: [f64; 2],
    hi: [f64; 2],
    label: RegionLabelDto,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Region2dDto {
    default: RegionLabelDto,
    boxes: Vec<BoxDto>,
    #[serde(default)]
    classes: Option<usize>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, Some(e.line()), e))
}

fn model_error(path: &Path, e: certsmooth_core::Error) -> Error {
    Error::parse(path, None, e)
}

pub fn load_mlp(path: &Path) -> Result<MlpModel> {
    let dto: MlpDto = read_json(path)?;
    let layers = dto
        .layers
        .into_iter()
        .map(|l| {
            let act = match l.activation {
                ActivationDto::Relu => Activation::Relu,
                ActivationDto::None => Activation::None,
            };
            Layer::new(l.w, l.b, act)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| model_error(path, e))?;
    let model = MlpModel::new(layers).map_err(|e| model_error(path, e))?;
    if model.input_dim() != dto.input_dim || model.num_classes() != dto.classes {
        return Err(Error::parse(
            path,
            None,
            format!(
                "declared shape {}->{} does not match layers {}->{}",
                dto.input_dim,
                dto.classes,
                model.input_dim(),
                model.num_classes()
            ),
        ));
    }
    Ok(model)
}

pub fn load_linear(path: &Path) -> Result<LinearModel> {
    let dto: LinearDto = read_json(path)?;
    LinearModel::new(dto.w, dto.b).map_err(|e| model_error(path, e))
}

pub fn load_region1d(path: &Path) -> Result<Region1d> {
    let dto: Region1dDto = read_json(path)?;
    Region1d::new(dto.breakpoints, dto.labels.into_iter().map(Into::into).collect(), dto.classes)
        .map_err(|e| model_error(path, e))
}

pub fn load_region2d(path: &Path) -> Result<Region2d> {
    let dto: Region2dDto = read_json(path)?;
    let boxes = dto.boxes.into_iter().map(|b| Box2d { lo: b.lo, hi: b.hi, label: b.label.into() }).collect();
    Region2d::new(dto.default.into(), boxes, dto.classes).map_err(|e| model_error(path, e))
}

/// A base classifier that produces class probabilities.
#[derive(Debug, Clone)]
pub enum ScoredModel {
    Mlp(MlpModel),
    Linear(LinearModel),
}

impl BaseClassifier for ScoredModel {
    fn num_classes(&self) -> usize {
        match self {
            ScoredModel::Mlp(m) => m.num_classes(),
            ScoredModel::Linear(m) => m.num_classes(),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            ScoredModel::Mlp(m) => m.input_dim(),
            ScoredModel::Linear(m) => m.input_dim(),
        }
    }

    fn classify(&self, x: &[f64]) -> certsmooth_core::Result<ClassDistribution> {
        match self {
            ScoredModel::Mlp(m) => m.classify(x),
            ScoredModel::Linear(m) => m.classify(x),
        }
    }
}

/// Any classifier the command line can certify.
#[derive(Debug, Clone)]
pub enum LoadedClassifier {
    Scored(Equipped<ScoredModel>),
    Region1d(Region1d),
    Region2d(Region2d),
}

impl LoadedClassifier {
    /// The underlying scored model, if the file described one.
    pub fn scored(&self) -> Option<&ScoredModel> {
        match self {
            LoadedClassifier::Scored(e) => Some(&e.base),
            _ => None,
        }
    }
}

impl EquippedClassifier for LoadedClassifier {
    fn num_classes(&self) -> usize {
        match self {
            LoadedClassifier::Scored(c) => c.num_classes(),
            LoadedClassifier::Region1d(c) => c.num_classes(),
            LoadedClassifier::Region2d(c) => c.num_classes(),
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            LoadedClassifier::Scored(c) => c.input_dim(),
            LoadedClassifier::Region1d(c) => c.input_dim(),
            LoadedClassifier::Region2d(c) => c.input_dim(),
        }
    }

    fn label(&self, x: &[f64], view: LabelView) -> certsmooth_core::Result<ExtendedLabel> {
        match self {
            LoadedClassifier::Scored(c) => c.label(x, view),
            LoadedClassifier::Region1d(c) => c.label(x, view),
            LoadedClassifier::Region2d(c) => c.label(x, view),
        }
    }
}

/// Uncertainty rule as written in a config file; a missing or null `theta`
/// disables rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UncertaintyEntry {
    pub kind: UncertaintyKindDto,
    #[serde(default)]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum UncertaintyKindDto {
    Confidence,
    Margin,
    Entropy,
}

impl From<UncertaintyKindDto> for UncertaintyKind {
    fn from(k: UncertaintyKindDto) -> Self {
        match k {
            UncertaintyKindDto::Confidence => UncertaintyKind::Confidence,
            UncertaintyKindDto::Margin => UncertaintyKind::Margin,
            UncertaintyKindDto::Entropy => UncertaintyKind::Entropy,
        }
    }
}

/// Load a classifier file. Region classifiers carry their own uncertain
/// regions, so `uncertainty` only applies to scored models.
pub fn load_classifier(
    kind: ClassifierKind,
    path: &Path,
    uncertainty: Option<UncertaintyEntry>,
) -> Result<LoadedClassifier> {
    let scored = match kind {
        ClassifierKind::Mlp => ScoredModel::Mlp(load_mlp(path)?),
        ClassifierKind::Linear => ScoredModel::Linear(load_linear(path)?),
        ClassifierKind::Region1d => return Ok(LoadedClassifier::Region1d(load_region1d(path)?)),
        ClassifierKind::Region2d => return Ok(LoadedClassifier::Region2d(load_region2d(path)?)),
    };
    let rule = match uncertainty {
        None => None,
        Some(UncertaintyEntry { kind, theta: None }) => Some(UncertaintyConfig::disabled(kind.into())),
        Some(UncertaintyEntry { kind, theta: Some(theta) }) => {
            Some(UncertaintyConfig::new(kind.into(), theta, scored.num_classes())?)
        }
    };
    Ok(LoadedClassifier::Scored(match rule {
        Some(rule) => Equipped::new(scored, rule),
        None => Equipped::plain(scored),
    }))
}
