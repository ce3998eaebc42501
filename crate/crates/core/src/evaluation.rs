//! Region-level mask evaluation.
//!
//! Predictions are ranked by score (ties broken by image index, then instance
//! id), greedily matched to the unmatched ground-truth mask of highest IoU at
//! or above the threshold, and scored by the area under the all-point
//! interpolated precision/recall curve. `AP` averages this over a list of IoU
//! thresholds (0.50:0.05:0.95 by default) and `AP50` uses 0.5 alone.

use alloc::vec;
use alloc::vec::Vec;

use crate::bitmap::Bitmap;
use crate::error::{Error, Result};
use crate::mask_assembly::{Category, InstanceMask};

/// IoU of two binary masks; 0 when both are empty.
pub fn mask_iou(a: &Bitmap, b: &Bitmap) -> Result<f64> {
    let (inter, union) = a.overlap_counts(b)?;
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalParams {
    pub iou_thresholds: Vec<f64>,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            iou_thresholds: coco_thresholds(),
        }
    }
}

impl EvalParams {
    pub fn new(iou_thresholds: Vec<f64>) -> Result<Self> {
        if iou_thresholds.is_empty() {
            return Err(Error::InvalidInput("at least one IoU threshold is required".into()));
        }
        if let Some(t) = iou_thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::InvalidInput(alloc::format!(
                "IoU threshold {t} outside (0, 1]"
            )));
        }
        Ok(Self { iou_thresholds })
    }
}

/// `0.50, 0.55, ..., 0.95`.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| f64::from(50 + 5 * i) / 100.0).collect()
}

/// Predictions and ground truth for one image.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalImage {
    pub predictions: Vec<InstanceMask>,
    pub ground_truth: Vec<InstanceMask>,
}

/// Score-descending order with deterministic tie-breaking by id.
fn rank_order(scores: &[(f64, u32)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .0
            .total_cmp(&scores[a].0)
            .then(scores[a].1.cmp(&scores[b].1))
    });
    order
}

/// Greedy matching; `ious[p][g]` is the IoU of prediction `p` and ground truth
/// `g`, `order` the ranking of predictions. Returns true-positive flags
/// indexed by prediction.
pub fn greedy_match(ious: &[Vec<f64>], n_gt: usize, order: &[usize], threshold: f64) -> Vec<bool> {
    let mut gt_taken = vec![false; n_gt];
    let mut tp = vec![false; ious.len()];
    for &p in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, &iou) in ious[p].iter().enumerate() {
            if gt_taken[g] || iou < threshold {
                continue;
            }
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((g, iou));
            }
        }
        if let Some((g, _)) = best {
            gt_taken[g] = true;
            tp[p] = true;
        }
    }
    tp
}

/// Area under the all-point interpolated precision/recall curve for a ranked
/// list of true/false positives.
pub fn ap_from_ranking(ranked_tp: &[bool], n_gt: usize) -> f64 {
    if n_gt == 0 || ranked_tp.is_empty() {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(ranked_tp.len());
    let mut tp = 0usize;
    for (rank, &hit) in ranked_tp.iter().enumerate() {
        tp += usize::from(hit);
        precision.push(tp as f64 / (rank + 1) as f64);
    }
    // Precision envelope: best precision at this rank or any later one.
    for i in (0..precision.len().saturating_sub(1)).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    let total: f64 = ranked_tp
        .iter()
        .zip(&precision)
        .filter(|(hit, _)| **hit)
        .fold(0.0, |acc, (_, p)| acc + p);
    total / n_gt as f64
}

/// IoU matrices and ranking keys for one image, restricted to a category.
struct PreparedImage {
    ious: Vec<Vec<f64>>,
    keys: Vec<(f64, u32)>,
    order: Vec<usize>,
    n_gt: usize,
}

fn prepare(image: &EvalImage, category: Option<Category>) -> Result<PreparedImage> {
    let keep = |m: &&InstanceMask| category.is_none_or(|c| m.category == c);
    let preds: Vec<&InstanceMask> = image.predictions.iter().filter(keep).collect();
    let gts: Vec<&InstanceMask> = image.ground_truth.iter().filter(keep).collect();
    let ious = preds
        .iter()
        .map(|p| gts.iter().map(|g| mask_iou(&p.bitmap, &g.bitmap)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let keys: Vec<(f64, u32)> = preds.iter().map(|p| (p.score, p.id)).collect();
    let order = rank_order(&keys);
    Ok(PreparedImage {
        ious,
        keys,
        order,
        n_gt: gts.len(),
    })
}

fn ap_prepared(images: &[PreparedImage], threshold: f64) -> f64 {
    // (score, image, id, tp)
    let mut ranked: Vec<(f64, usize, u32, bool)> = Vec::new();
    let mut n_gt = 0;
    for (i, img) in images.iter().enumerate() {
        n_gt += img.n_gt;
        let tp = greedy_match(&img.ious, img.n_gt, &img.order, threshold);
        ranked.extend(
            img.keys
                .iter()
                .zip(tp)
                .map(|(&(score, id), hit)| (score, i, id, hit)),
        );
    }
    ranked.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let flags: Vec<bool> = ranked.iter().map(|r| r.3).collect();
    ap_from_ranking(&flags, n_gt)
}

/// Average precision of scored predicted masks against ground-truth masks of
/// a single image at one IoU threshold. Categories are ignored.
pub fn average_precision(preds: &[InstanceMask], gts: &[InstanceMask], iou_threshold: f64) -> Result<f64> {
    let image = EvalImage {
        predictions: preds.to_vec(),
        ground_truth: gts.to_vec(),
    };
    average_precision_images(core::slice::from_ref(&image), None, iou_threshold)
}

/// Average precision pooled over images, optionally restricted to one category.
pub fn average_precision_images(
    images: &[EvalImage],
    category: Option<Category>,
    iou_threshold: f64,
) -> Result<f64> {
    let prepared = images
        .iter()
        .map(|img| prepare(img, category))
        .collect::<Result<Vec<_>>>()?;
    Ok(ap_prepared(&prepared, iou_threshold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryScores {
    pub category: Category,
    /// `None` when the category has no ground-truth instance.
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub num_gt: usize,
    pub num_pred: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub per_category: Vec<CategoryScores>,
    /// Mean over categories that have ground truth; 0 if none do.
    pub mean_ap: f64,
    pub mean_ap50: f64,
}

impl EvalResult {
    pub fn category(&self, c: Category) -> Option<&CategoryScores> {
        self.per_category.iter().find(|s| s.category == c)
    }
}

/// Per-category AP and AP50 and their means over `categories`.
pub fn evaluate(images: &[EvalImage], categories: &[Category], params: &EvalParams) -> Result<EvalResult> {
    let mut per_category = Vec::with_capacity(categories.len());
    for &category in categories {
        let prepared = images
            .iter()
            .map(|img| prepare(img, Some(category)))
            .collect::<Result<Vec<_>>>()?;
        let num_gt: usize = prepared.iter().map(|p| p.n_gt).sum();
        let num_pred: usize = prepared.iter().map(|p| p.keys.len()).sum();
        let (ap, ap50) = if num_gt == 0 {
            (None, None)
        } else {
            // Averaged as offsets from AP50 so equal per-threshold values
            // cannot round above it.
            let ap50 = ap_prepared(&prepared, 0.5);
            let offsets: f64 = params
                .iou_thresholds
                .iter()
                .fold(0.0, |acc, &t| acc + (ap_prepared(&prepared, t) - ap50));
            (
                Some(ap50 + offsets / params.iou_thresholds.len() as f64),
                Some(ap50),
            )
        };
        per_category.push(CategoryScores {
            category,
            ap,
            ap50,
            num_gt,
            num_pred,
        });
    }
    let mean = |f: fn(&CategoryScores) -> Option<f64>| {
        let vals: Vec<f64> = per_category.iter().filter_map(f).collect();
        if vals.is_empty() { 0.0 } else { vals.iter().fold(0.0, |a, b| a + b) / vals.len() as f64 }
    };
    let mean_ap = mean(|s| s.ap);
    let mean_ap50 = mean(|s| s.ap50);
    Ok(EvalResult {
        per_category,
        mean_ap,
        mean_ap50,
    })
}
