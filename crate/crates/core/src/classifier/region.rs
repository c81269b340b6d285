use alloc::vec::Vec;

use super::{check_dim, EquippedClassifier, ExtendedLabel, LabelView};
use crate::{Error, Result};

/// Label of a decision region: the base class plus whether the region is
/// predicted confidently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionLabel {
    pub class: usize,
    pub confident: bool,
}

impl RegionLabel {
    pub fn confident(class: usize) -> Self {
        RegionLabel { class, confident: true }
    }

    pub fn uncertain(class: usize) -> Self {
        RegionLabel { class, confident: false }
    }

    pub fn resolve(self, view: LabelView) -> ExtendedLabel {
        match view {
            LabelView::Base => ExtendedLabel::Class(self.class),
            LabelView::Extended if self.confident => ExtendedLabel::Class(self.class),
            LabelView::Extended => ExtendedLabel::Uncertain,
        }
    }
}

fn class_count<'a>(labels: impl Iterator<Item = &'a RegionLabel>, requested: Option<usize>) -> Result<usize> {
    let needed = labels.map(|l| l.class + 1).max().unwrap_or(1);
    match requested {
        Some(k) if k < needed => {
            Err(Error::InvalidModel(alloc::format!("class index {} exceeds {} classes", needed - 1, k)))
        }
        Some(k) => Ok(k),
        None => Ok(needed),
    }
}

/// Partition of the real line. Interval `i` is `[b_i, b_{i+1})` with
/// `b_0 = -∞` and `b_{m+1} = +∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region1d {
    breakpoints: Vec<f64>,
    labels: Vec<RegionLabel>,
    num_classes: usize,
}

impl Region1d {
    pub fn new(breakpoints: Vec<f64>, labels: Vec<RegionLabel>, num_classes: Option<usize>) -> Result<Self> {
        if labels.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidModel(alloc::format!(
                "{} breakpoints need {} labels, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                labels.len()
            )));
        }
        if breakpoints.iter().any(|b| !b.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidModel("breakpoints must be finite and strictly increasing".into()));
        }
        let num_classes = class_count(labels.iter(), num_classes)?;
        Ok(Region1d { breakpoints, labels, num_classes })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn labels(&self) -> &[RegionLabel] {
        &self.labels
    }

    pub fn region_at(&self, x: f64) -> RegionLabel {
        self.labels[self.breakpoints.partition_point(|&b| b <= x)]
    }
}

impl EquippedClassifier for Region1d {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn label(&self, x: &[f64], view: LabelView) -> Result<ExtendedLabel> {
        check_dim(1, x)?;
        Ok(self.region_at(x[0]).resolve(view))
    }
}

/// Axis-aligned box `[lo, hi)` in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2d {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub label: RegionLabel,
}

impl Box2d {
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..2).all(|i| self.lo[i] <= x[i] && x[i] < self.hi[i])
    }

    fn overlaps(&self, other: &Box2d) -> bool {
        (0..2).all(|i| self.lo[i] < other.hi[i] && other.lo[i] < self.hi[i])
    }
}

/// Disjoint labelled boxes on top of a default label.
#[derive(Debug, Clone, PartialEq)]
pub struct Region2d {
    default: RegionLabel,
    boxes: Vec<Box2d>,
    num_classes: usize,
}

impl Region2d {
    pub fn new(default: RegionLabel, boxes: Vec<Box2d>, num_classes: Option<usize>) -> Result<Self> {
        for b in &boxes {
            if (0..2).any(|i| b.lo[i].is_nan() || b.hi[i].is_nan() || b.lo[i] >= b.hi[i]) {
                return Err(Error::InvalidModel("box with empty extent".into()));
            }
        }
        for (i, a) in boxes.iter().enumerate() {
            if boxes[i + 1..].iter().any(|b| a.overlaps(b)) {
                return Err(Error::InvalidModel("boxes overlap".into()));
            }
        }
        let num_classes = class_count(boxes.iter().map(|b| &b.label).chain([&default]), num_classes)?;
        Ok(Region2d { default, boxes, num_classes })
    }

    pub fn default_label(&self) -> RegionLabel {
        self.default
    }

    pub fn boxes(&self) -> &[Box2d] {
        &self.boxes
    }

    pub fn region_at(&self, x: &[f64]) -> RegionLabel {
        self.boxes.iter().find(|b| b.contains(x)).map_or(self.default, |b| b.label)
    }
}

impl EquippedClassifier for Region2d {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn label(&self, x: &[f64], view: LabelView) -> Result<ExtendedLabel> {
        check_dim(2, x)?;
        Ok(self.region_at(x).resolve(view))
    }
}
