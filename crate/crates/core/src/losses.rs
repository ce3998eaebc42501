//! Training losses as scalar functions with analytic (sub)gradients.
//!
//! The depth losses are plain L1 sums. A `Mean` reduction is available but
//! not the default: with sums, far objects (large class values) contribute
//! proportionally larger errors.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mask_assembly::PixelDepthMap;

/// Distance from an L1 kink below which the subgradient is refused.
pub const KINK_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 1.0 }
    }
}

impl LossWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        if w1 >= 0.0 && w2 >= 0.0 {
            Ok(Self { w1, w2 })
        } else {
            Err(Error::InvalidInput(alloc::format!(
                "loss weights must be non-negative, got ({w1}, {w2})"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalParams {
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            alpha: 0.25,
        }
    }
}

impl FocalParams {
    pub fn new(gamma: f64, alpha: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "focal gamma must be non-negative, got {gamma}"
            )));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "focal alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self { gamma, alpha })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

impl Reduction {
    fn apply(self, total: f64, n: usize) -> f64 {
        match self {
            Reduction::Sum => total,
            Reduction::Mean if n == 0 => 0.0,
            Reduction::Mean => total / n as f64,
        }
    }

    fn factor(self, n: usize) -> f64 {
        match self {
            Reduction::Sum => 1.0,
            Reduction::Mean => 1.0 / n.max(1) as f64,
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

fn p_true(p: f64, positive: bool) -> f64 {
    if positive { p } else { 1.0 - p }
}

/// `-alpha * (1 - p_t)^gamma * ln(p_t)`, with `p_t = p` for a positive label
/// and `1 - p` otherwise.
pub fn focal_loss(p: f64, positive: bool, params: &FocalParams) -> Result<f64> {
    check_probability(p)?;
    let pt = p_true(p, positive);
    Ok(-params.alpha * libm::pow(1.0 - pt, params.gamma) * libm::log(pt))
}

/// Derivative of [`focal_loss`] with respect to `p`.
pub fn focal_loss_grad(p: f64, positive: bool, params: &FocalParams) -> Result<f64> {
    check_probability(p)?;
    let pt = p_true(p, positive);
    let q = 1.0 - pt;
    let g = params.gamma;
    // d/dpt of -a q^g ln pt = a (g q^(g-1) ln pt - q^g / pt)
    let focusing = if g == 0.0 { 0.0 } else { g * libm::pow(q, g - 1.0) * libm::log(pt) };
    let d_dpt = params.alpha * (focusing - libm::pow(q, g) / pt);
    Ok(if positive { d_dpt } else { -d_dpt })
}

pub fn loss_2d(l_cls: f64, l_box: f64, w: &LossWeights) -> f64 {
    w.w1 * l_cls + w.w2 * l_box
}

/// `(d/d l_cls, d/d l_box)` of [`loss_2d`].
pub fn loss_2d_grad(w: &LossWeights) -> (f64, f64) {
    (w.w1, w.w2)
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left: a, right: b })
    }
}

fn l1(pred: &[f64], target: impl Iterator<Item = f64>) -> f64 {
    pred.iter().zip(target).fold(0.0, |acc, (p, t)| acc + (p - t).abs())
}

fn l1_grad(pred: &[f64], target: impl Iterator<Item = f64>, factor: f64) -> Result<Vec<f64>> {
    pred.iter()
        .zip(target)
        .enumerate()
        .map(|(index, (p, t))| {
            let diff = p - t;
            if diff.abs() <= KINK_EPSILON {
                Err(Error::NonDifferentiable { index })
            } else {
                Ok(factor * diff.signum())
            }
        })
        .collect()
}

/// Sum of absolute differences between predicted and true instance depths.
pub fn instance_depth_loss(pred: &[f64], gt: &[f64]) -> Result<f64> {
    instance_depth_loss_with(pred, gt, Reduction::Sum)
}

pub fn instance_depth_loss_with(pred: &[f64], gt: &[f64], reduction: Reduction) -> Result<f64> {
    check_lengths(pred.len(), gt.len())?;
    Ok(reduction.apply(l1(pred, gt.iter().copied()), pred.len()))
}

/// Gradient of [`instance_depth_loss_with`] with respect to `pred`.
pub fn instance_depth_loss_grad(pred: &[f64], gt: &[f64], reduction: Reduction) -> Result<Vec<f64>> {
    check_lengths(pred.len(), gt.len())?;
    l1_grad(pred, gt.iter().copied(), reduction.factor(pred.len()))
}

/// Dense real-valued prediction of per-pixel depth classes.
#[derive(Debug, Clone, PartialEq)]
pub struct RealMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl RealMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_lengths(values.len(), width * height)?;
        Ok(Self {
            width,
            height,
            values,
        })
    }
}

fn check_map_shapes(pred: &RealMap, label: &PixelDepthMap) -> Result<()> {
    if pred.width == label.width() && pred.height == label.height() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected_w: label.width(),
            expected_h: label.height(),
            got_w: pred.width,
            got_h: pred.height,
        })
    }
}

/// Sum over every pixel of `|label - pred|`; background pixels target 0.
pub fn pixel_depth_loss(pred: &RealMap, label: &PixelDepthMap) -> Result<f64> {
    pixel_depth_loss_with(pred, label, Reduction::Sum)
}

pub fn pixel_depth_loss_with(pred: &RealMap, label: &PixelDepthMap, reduction: Reduction) -> Result<f64> {
    check_map_shapes(pred, label)?;
    let total = l1(&pred.values, label.values().iter().map(|&v| f64::from(v)));
    Ok(reduction.apply(total, pred.values.len()))
}

pub fn pixel_depth_loss_grad(pred: &RealMap, label: &PixelDepthMap, reduction: Reduction) -> Result<Vec<f64>> {
    check_map_shapes(pred, label)?;
    l1_grad(
        &pred.values,
        label.values().iter().map(|&v| f64::from(v)),
        reduction.factor(pred.values.len()),
    )
}
