//! Match-and-crop assembly of instance masks.
//!
//! A pixel joins instance `k` when it is foreground, its depth class lies
//! within the instance's threshold of the instance's own (continuous) depth
//! index, and it falls inside the instance's 2D box scaled down to the map
//! resolution. Pixels claimed by several instances go to the one whose depth
//! index is closest; ties go to the nearer object.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::bitmap::Bitmap;
use crate::depth_bins::{DepthBins, BACKGROUND};
use crate::error::{Error, Result};
use crate::geometry::{depth_margin, depth_threshold, ObjectDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Car,
    Pedestrian,
    Cyclist,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Car, Category::Pedestrian, Category::Cyclist];

    pub fn name(self) -> &'static str {
        match self {
            Category::Car => "Car",
            Category::Pedestrian => "Pedestrian",
            Category::Cyclist => "Cyclist",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Car" | "car" => Ok(Category::Car),
            "Pedestrian" | "pedestrian" => Ok(Category::Pedestrian),
            "Cyclist" | "cyclist" => Ok(Category::Cyclist),
            other => Err(Error::InvalidInput(alloc::format!("unknown category `{other}`"))),
        }
    }
}

/// Axis-aligned box in full-resolution pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub left: f64,
    pub top: f64,
    pub right: f64,
    pub bottom: f64,
}

impl BBox {
    pub const fn new(left: f64, top: f64, right: f64, bottom: f64) -> Self {
        Self {
            left,
            top,
            right,
            bottom,
        }
    }

    pub fn area(&self) -> f64 {
        (self.right - self.left).max(0.0) * (self.bottom - self.top).max(0.0)
    }

    pub fn is_valid(&self) -> bool {
        [self.left, self.top, self.right, self.bottom]
            .iter()
            .all(|v| v.is_finite())
            && self.right > self.left
            && self.bottom > self.top
    }
}

/// Half-open integer rectangle `[left, right) x [top, bottom)` at map resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PixelRect {
    pub left: i64,
    pub top: i64,
    pub right: i64,
    pub bottom: i64,
}

impl PixelRect {
    /// Restricts the rectangle to a `width x height` grid.
    pub fn clip(&self, width: usize, height: usize) -> PixelRect {
        let (w, h) = (width as i64, height as i64);
        let left = self.left.clamp(0, w);
        let top = self.top.clamp(0, h);
        PixelRect {
            left,
            top,
            right: self.right.clamp(left, w),
            bottom: self.bottom.clamp(top, h),
        }
    }

    pub fn contains(&self, col: usize, row: usize) -> bool {
        let (c, r) = (col as i64, row as i64);
        c >= self.left && c < self.right && r >= self.top && r < self.bottom
    }

    pub fn intersects(&self, other: &PixelRect) -> bool {
        self.left < other.right
            && other.left < self.right
            && self.top < other.bottom
            && other.top < self.bottom
    }

    pub fn is_empty(&self) -> bool {
        self.right <= self.left || self.bottom <= self.top
    }

    fn cols(&self) -> core::ops::Range<usize> {
        self.left as usize..self.right as usize
    }

    fn rows(&self) -> core::ops::Range<usize> {
        self.top as usize..self.bottom as usize
    }
}

/// Divides a full-resolution box by `scale`, flooring the near edges and
/// ceiling the far ones so the result covers every map pixel the box touches.
pub fn scale_bbox(bbox: &BBox, scale: f64) -> PixelRect {
    PixelRect {
        left: libm::floor(bbox.left / scale) as i64,
        top: libm::floor(bbox.top / scale) as i64,
        right: libm::ceil(bbox.right / scale) as i64,
        bottom: libm::ceil(bbox.bottom / scale) as i64,
    }
}

/// Grid of depth classes; `0` is background, `1..=k` are object classes.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDepthMap {
    width: usize,
    height: usize,
    k: u32,
    /// Full-image resolution divided by map resolution.
    scale: f64,
    values: Vec<u16>,
}

impl PixelDepthMap {
    pub fn new(width: usize, height: usize, k: u32, scale: f64, values: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("depth map must have positive size".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput("map scale must be positive".into()));
        }
        if values.len() != width * height {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: width * height,
            });
        }
        if let Some(&bad) = values.iter().find(|&&v| u32::from(v) > k) {
            return Err(Error::InvalidInput(alloc::format!(
                "depth class {bad} exceeds K={k}"
            )));
        }
        Ok(Self {
            width,
            height,
            k,
            scale,
            values,
        })
    }

    /// All-background map.
    pub fn background(width: usize, height: usize, k: u32, scale: f64) -> Result<Self> {
        Self::new(width, height, k, scale, vec![BACKGROUND; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidInput("map scale must be positive".into()));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn get(&self, col: usize, row: usize) -> u16 {
        self.values[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, class: u16) {
        debug_assert!(u32::from(class) <= self.k);
        self.values[row * self.width + col] = class;
    }

    pub fn check_bins(&self, bins: &DepthBins) -> Result<()> {
        if self.k != bins.k() {
            return Err(Error::KMismatch {
                map_k: self.k,
                bins_k: bins.k(),
            });
        }
        Ok(())
    }
}

/// One detected object as delivered by a 3D detector.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDetection {
    pub id: u32,
    pub category: Category,
    pub score: f64,
    pub bbox: BBox,
    /// Metric depth of the object center.
    pub center_depth: f64,
    pub dims: ObjectDims,
    pub theta: f64,
}

impl InstanceDetection {
    pub fn validate(&self) -> Result<()> {
        if !self.bbox.is_valid() {
            return Err(Error::InvalidInput(alloc::format!(
                "detection {} has an empty or non-finite box",
                self.id
            )));
        }
        if !(self.center_depth > 0.0) {
            return Err(Error::NonPositiveDepth(self.center_depth));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::InvalidInput(alloc::format!(
                "detection {} has score {} outside [0, 1]",
                self.id,
                self.score
            )));
        }
        if !self.theta.is_finite() {
            return Err(Error::InvalidInput(alloc::format!(
                "detection {} has a non-finite angle",
                self.id
            )));
        }
        self.dims.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMask {
    pub id: u32,
    pub category: Category,
    pub score: f64,
    pub bitmap: Bitmap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyParams {
    /// Extra tolerance, in classes, added to every instance threshold.
    ///
    /// Pixel classes are rounded to the nearest integer, so a pixel on the
    /// object's near face can sit up to half a class beyond the continuous
    /// threshold. `0.5` absorbs that; `0.0` gives the bare match condition.
    pub quantization_slack: f64,
}

impl Default for AssemblyParams {
    fn default() -> Self {
        Self {
            quantization_slack: 0.5,
        }
    }
}

/// Per-instance quantities the matcher needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceTarget {
    pub id: u32,
    /// Continuous depth index of the object center.
    pub index: f64,
    /// Matching threshold in class units, before slack.
    pub delta: f64,
    pub center_depth: f64,
    /// Crop window clipped to the map.
    pub rect: PixelRect,
}

impl InstanceTarget {
    pub fn new(det: &InstanceDetection, bins: &DepthBins, map: &PixelDepthMap) -> Result<Self> {
        det.validate()?;
        let index = bins.continuous_index(det.center_depth)?;
        let margin = depth_margin(&det.dims, det.theta);
        let delta = depth_threshold(bins, det.center_depth, margin)?.delta;
        Ok(Self {
            id: det.id,
            index,
            delta,
            center_depth: det.center_depth,
            rect: scale_bbox(&det.bbox, map.scale()).clip(map.width(), map.height()),
        })
    }

    /// Distance of a pixel class to this instance, if it passes the match test.
    fn match_distance(&self, class: u16, slack: f64) -> Option<f64> {
        if class == BACKGROUND {
            return None;
        }
        let dist = (f64::from(class) - self.index).abs();
        (dist < self.delta + slack).then_some(dist)
    }
}

fn match_target(
    map: &PixelDepthMap,
    target: &InstanceTarget,
    det: &InstanceDetection,
    params: &AssemblyParams,
) -> InstanceMask {
    let mut bitmap = Bitmap::new(map.width(), map.height());
    for row in target.rect.rows() {
        for col in target.rect.cols() {
            if target
                .match_distance(map.get(col, row), params.quantization_slack)
                .is_some()
            {
                bitmap.set(col, row, true);
            }
        }
    }
    InstanceMask {
        id: det.id,
        category: det.category,
        score: det.score,
        bitmap,
    }
}

/// Mask of every pixel satisfying the match and crop conditions for `det`.
pub fn match_pixels(
    map: &PixelDepthMap,
    det: &InstanceDetection,
    bins: &DepthBins,
    params: &AssemblyParams,
) -> Result<InstanceMask> {
    map.check_bins(bins)?;
    let target = InstanceTarget::new(det, bins, map)?;
    Ok(match_target(map, &target, det, params))
}

/// Validates the batch and computes one target per detection.
pub fn prepare_targets(
    map: &PixelDepthMap,
    dets: &[InstanceDetection],
    bins: &DepthBins,
) -> Result<Vec<InstanceTarget>> {
    map.check_bins(bins)?;
    let mut seen = BTreeSet::new();
    for det in dets {
        if !seen.insert(det.id) {
            return Err(Error::DuplicateId(det.id));
        }
    }
    dets.iter()
        .map(|d| InstanceTarget::new(d, bins, map))
        .collect()
}

/// Matches one prepared target; the building block for parallel assembly.
pub fn match_prepared(
    map: &PixelDepthMap,
    target: &InstanceTarget,
    det: &InstanceDetection,
    params: &AssemblyParams,
) -> InstanceMask {
    match_target(map, target, det, params)
}

/// Makes masks pairwise disjoint.
///
/// `masks[i]` must have been produced for `targets[i]`. A contested pixel
/// stays with the instance whose depth index is closest to the pixel class,
/// then the one with the smaller center depth, then the smaller id.
pub fn resolve_conflicts(map: &PixelDepthMap, targets: &[InstanceTarget], masks: &mut [InstanceMask]) {
    debug_assert_eq!(targets.len(), masks.len());
    const NONE: u32 = u32::MAX;
    let mut owner = vec![NONE; map.width() * map.height()];
    let key = |t: &InstanceTarget, class: u16| {
        ((f64::from(class) - t.index).abs(), t.center_depth, t.id)
    };
    for k in 0..targets.len() {
        let rect = targets[k].rect;
        for row in rect.rows() {
            for col in rect.cols() {
                if !masks[k].bitmap.get(col, row) {
                    continue;
                }
                let px = row * map.width() + col;
                let current = owner[px];
                if current == NONE {
                    owner[px] = k as u32;
                    continue;
                }
                let class = map.get(col, row);
                let (dk, zk, ik) = key(&targets[k], class);
                let (dc, zc, ic) = key(&targets[current as usize], class);
                let challenger_wins = dk
                    .total_cmp(&dc)
                    .then(zk.total_cmp(&zc))
                    .then(ik.cmp(&ic))
                    .is_lt();
                if challenger_wins {
                    masks[current as usize].bitmap.set(col, row, false);
                    owner[px] = k as u32;
                } else {
                    masks[k].bitmap.set(col, row, false);
                }
            }
        }
    }
}

/// Assigns map pixels to detections, producing pairwise disjoint masks in
/// detection order.
pub fn assemble(
    map: &PixelDepthMap,
    dets: &[InstanceDetection],
    bins: &DepthBins,
    params: &AssemblyParams,
) -> Result<Vec<InstanceMask>> {
    let targets = prepare_targets(map, dets, bins)?;
    let mut masks: Vec<InstanceMask> = targets
        .iter()
        .zip(dets)
        .map(|(t, d)| match_target(map, t, d, params))
        .collect();
    resolve_conflicts(map, &targets, &mut masks);
    Ok(masks)
}

/// Flattens disjoint masks into an id map (`0` = no instance).
pub fn id_map(width: usize, height: usize, masks: &[InstanceMask]) -> Result<Vec<u32>> {
    let mut ids = vec![0u32; width * height];
    for m in masks {
        if m.bitmap.width() != width || m.bitmap.height() != height {
            return Err(Error::DimensionMismatch {
                expected_w: width,
                expected_h: height,
                got_w: m.bitmap.width(),
                got_h: m.bitmap.height(),
            });
        }
        for (px, &bit) in m.bitmap.bits().iter().enumerate() {
            if bit {
                if ids[px] != 0 {
                    return Err(Error::InvalidInput(alloc::format!(
                        "masks {} and {} overlap",
                        ids[px],
                        m.id
                    )));
                }
                ids[px] = m.id;
            }
        }
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bins() -> DepthBins {
        DepthBins::exponential(64, 2.0, 80.0).unwrap()
    }

    fn det(id: u32, bbox: BBox, depth: f64) -> InstanceDetection {
        InstanceDetection {
            id,
            category: Category::Car,
            score: 0.9,
            bbox,
            center_depth: depth,
            dims: ObjectDims::new(1.6, 3.9, 1.5).unwrap(),
            theta: 0.0,
        }
    }

    #[test]
    fn scale_bbox_examples() {
        let b = BBox::new(100.0, 40.0, 200.0, 80.0);
        assert_eq!(scale_bbox(&b, 1.0), PixelRect { left: 100, top: 40, right: 200, bottom: 80 });
        assert_eq!(scale_bbox(&b, 4.0), PixelRect { left: 25, top: 10, right: 50, bottom: 20 });
        let b = BBox::new(101.0, 41.0, 199.0, 79.0);
        assert_eq!(scale_bbox(&b, 4.0), PixelRect { left: 25, top: 10, right: 50, bottom: 20 });
    }

    #[test]
    fn clip_keeps_rect_inside() {
        let r = PixelRect { left: -3, top: 5, right: 40, bottom: 7 }.clip(30, 6);
        assert_eq!(r, PixelRect { left: 0, top: 5, right: 30, bottom: 6 });
        let r = PixelRect { left: 50, top: 0, right: 60, bottom: 2 }.clip(30, 6);
        assert!(r.is_empty());
    }

    #[test]
    fn background_map_gives_empty_mask() {
        let map = PixelDepthMap::background(40, 20, 64, 4.0).unwrap();
        let m = match_pixels(&map, &det(1, BBox::new(0.0, 0.0, 160.0, 80.0), 10.0), &bins(), &AssemblyParams::default()).unwrap();
        assert!(m.bitmap.is_empty());
    }

    #[test]
    fn uniform_class_fills_the_crop() {
        let b = bins();
        let d = det(3, BBox::new(8.0, 4.0, 40.0, 20.0), 15.0);
        let class = b.class_of_depth(15.0).unwrap();
        let map = PixelDepthMap::new(20, 10, 64, 4.0, vec![class; 200]).unwrap();
        for params in [AssemblyParams::default(), AssemblyParams { quantization_slack: 0.0 }] {
            let m = match_pixels(&map, &d, &b, &params).unwrap();
            let expected = Bitmap::from_fn(20, 10, |c, r| (2..10).contains(&c) && (1..5).contains(&r));
            assert_eq!(m.bitmap, expected);
        }
        assert_eq!(match_pixels(&map, &d, &b, &AssemblyParams::default()).unwrap().id, 3);
    }

    #[test]
    fn k_mismatch_is_a_configuration_error() {
        let map = PixelDepthMap::background(4, 4, 32, 1.0).unwrap();
        let err = match_pixels(&map, &det(1, BBox::new(0.0, 0.0, 2.0, 2.0), 5.0), &bins(), &AssemblyParams::default()).unwrap_err();
        assert_eq!(err, Error::KMismatch { map_k: 32, bins_k: 64 });
    }

    #[test]
    fn duplicate_ids_rejected() {
        let map = PixelDepthMap::background(4, 4, 64, 1.0).unwrap();
        let a = det(7, BBox::new(0.0, 0.0, 2.0, 2.0), 5.0);
        let err = assemble(&map, &[a.clone(), a], &bins(), &AssemblyParams::default()).unwrap_err();
        assert_eq!(err, Error::DuplicateId(7));
    }

    #[test]
    fn map_rejects_out_of_range_classes() {
        assert!(PixelDepthMap::new(2, 1, 8, 1.0, vec![0, 9]).is_err());
        assert!(PixelDepthMap::new(0, 1, 8, 1.0, vec![]).is_err());
        assert!(PixelDepthMap::new(1, 1, 8, 0.0, vec![0]).is_err());
    }

    /// Independent per-pixel evaluation of the match condition.
    fn brute_force_match(map: &PixelDepthMap, d: &InstanceDetection, b: &DepthBins, slack: f64) -> Bitmap {
        let s = 1.0 + 63.0 * libm::log(d.center_depth / 2.0) / libm::log(40.0);
        let dd = 0.5 * d.dims.w * libm::fabs(libm::cos(d.theta)) + 0.5 * d.dims.l * libm::fabs(libm::sin(d.theta));
        let delta = 63.0 * libm::log(d.center_depth / (d.center_depth - dd)) / libm::log(40.0);
        assert_eq!(b.k(), 64);
        Bitmap::from_fn(map.width(), map.height(), |c, r| {
            let x = map.get(c, r);
            // Pixel footprint [c*s, (c+1)*s) touches the box.
            let inside = (c as f64 + 1.0) * map.scale() > d.bbox.left
                && (c as f64) * map.scale() < d.bbox.right
                && (r as f64 + 1.0) * map.scale() > d.bbox.top
                && (r as f64) * map.scale() < d.bbox.bottom;
            x != 0 && inside && (f64::from(x) - s).abs() < delta + slack
        })
    }

    #[test]
    fn two_object_scene_separates_by_depth_class() {
        let b = bins();
        // Object A occupies columns 0..10 at class 10, object B columns 6..20
        // at class 40, with B drawn over A where they overlap.
        let (w, h) = (20usize, 8usize);
        let mut values = vec![0u16; w * h];
        for r in 1..7 {
            for c in 0..10 {
                values[r * w + c] = 10;
            }
            for c in 6..20 {
                values[r * w + c] = 40;
            }
        }
        let map = PixelDepthMap::new(w, h, 64, 1.0, values).unwrap();
        let da = det(1, BBox::new(0.0, 0.0, 12.0, 8.0), b.depth_of_class(10).unwrap());
        let db = det(2, BBox::new(4.0, 0.0, 20.0, 8.0), b.depth_of_class(40).unwrap());
        let p = AssemblyParams::default();
        for d in [&da, &db] {
            let t = InstanceTarget::new(d, &b, &map).unwrap();
            assert!(t.delta < 15.0);
        }
        let ma = match_pixels(&map, &da, &b, &p).unwrap();
        let mb = match_pixels(&map, &db, &b, &p).unwrap();
        assert_eq!(ma.bitmap, brute_force_match(&map, &da, &b, 0.5));
        assert_eq!(mb.bitmap, brute_force_match(&map, &db, &b, 0.5));
        assert_eq!(ma.bitmap, Bitmap::from_fn(w, h, |c, r| c < 6 && (1..7).contains(&r)));
        assert_eq!(mb.bitmap, Bitmap::from_fn(w, h, |c, r| c >= 6 && (1..7).contains(&r)));
        let all = assemble(&map, &[da, db], &b, &p).unwrap();
        assert_eq!(all[0], ma);
        assert_eq!(all[1], mb);
    }

    #[test]
    fn contested_pixel_goes_to_class_nearer_instance() {
        let b = bins();
        let near = b.continuous_index(8.0).unwrap();
        let far = b.continuous_index(15.0).unwrap();
        // Wide, rotated objects so both thresholds cover the gap between them.
        let wide = ObjectDims::new(4.0, 6.0, 1.5).unwrap();
        let mk = |id, depth| InstanceDetection {
            dims: wide,
            theta: 0.7,
            ..det(id, BBox::new(0.0, 0.0, 6.0, 1.0), depth)
        };
        let (da, db) = (mk(1, 8.0), mk(2, 15.0));
        let (w, h) = (6usize, 1usize);
        let values: Vec<u16> = (0..6).map(|c| near as u16 + c as u16 * 2).collect();
        let map = PixelDepthMap::new(w, h, 64, 1.0, values.clone()).unwrap();
        let p = AssemblyParams::default();
        let ma = match_pixels(&map, &da, &b, &p).unwrap();
        let mb = match_pixels(&map, &db, &b, &p).unwrap();
        let masks = assemble(&map, &[da.clone(), db.clone()], &b, &p).unwrap();
        // Brute-force resolver over every pixel.
        for (c, &x) in values.iter().enumerate() {
            let (ina, inb) = (ma.bitmap.get(c, 0), mb.bitmap.get(c, 0));
            let (ea, eb) = match (ina, inb) {
                (true, true) => {
                    let (dist_a, dist_b) = ((f64::from(x) - near).abs(), (f64::from(x) - far).abs());
                    if dist_a <= dist_b { (true, false) } else { (false, true) }
                }
                other => other,
            };
            assert_eq!(masks[0].bitmap.get(c, 0), ea, "pixel {c}");
            assert_eq!(masks[1].bitmap.get(c, 0), eb, "pixel {c}");
        }
        // At least one pixel really was contested.
        assert!((0..6).any(|c| ma.bitmap.get(c, 0) && mb.bitmap.get(c, 0)));
    }

    #[test]
    fn full_tie_goes_to_smaller_id() {
        let b = bins();
        let mk = |id, depth| det(id, BBox::new(0.0, 0.0, 1.0, 1.0), depth);
        let map = PixelDepthMap::new(1, 1, 64, 1.0, vec![b.class_of_depth(10.0).unwrap()]).unwrap();
        let masks = assemble(&map, &[mk(5, 10.0), mk(2, 10.0)], &b, &AssemblyParams::default()).unwrap();
        assert!(!masks[0].bitmap.get(0, 0));
        assert!(masks[1].bitmap.get(0, 0));
    }

    #[test]
    fn id_map_flattens_disjoint_masks() {
        let b = bins();
        let class = b.class_of_depth(10.0).unwrap();
        let map = PixelDepthMap::new(4, 1, 64, 1.0, vec![class; 4]).unwrap();
        let dets = [det(3, BBox::new(0.0, 0.0, 2.0, 1.0), 10.0), det(9, BBox::new(2.0, 0.0, 4.0, 1.0), 10.0)];
        let masks = assemble(&map, &dets, &b, &AssemblyParams::default()).unwrap();
        assert_eq!(id_map(4, 1, &masks).unwrap(), vec![3, 3, 9, 9]);
    }

    prop_compose! {
        fn scene()(
            values in proptest::collection::vec(prop_oneof![Just(0u16), 1u16..=64], 24 * 12),
            dets in proptest::collection::vec(
                (0.0f64..90.0, 0.0f64..40.0, 4.0f64..60.0, 4.0f64..30.0, 3.0f64..70.0, 0.3f64..3.0, 0.3f64..5.0, -3.0f64..3.0),
                0..6,
            ),
        ) -> (PixelDepthMap, Vec<InstanceDetection>) {
            let map = PixelDepthMap::new(24, 12, 64, 4.0, values).unwrap();
            let dets = dets
                .into_iter()
                .enumerate()
                .map(|(i, (l, t, w, h, z, dw, dl, th))| InstanceDetection {
                    id: i as u32 + 1,
                    category: Category::ALL[i % 3],
                    score: 0.5,
                    bbox: BBox::new(l, t, l + w, t + h),
                    center_depth: z,
                    dims: ObjectDims::new(dw, dl, 1.0).unwrap(),
                    theta: th,
                })
                .collect();
            (map, dets)
        }
    }

    proptest! {
        #[test]
        fn assembled_masks_are_disjoint_cropped_and_foreground((map, dets) in scene()) {
            let b = bins();
            let p = AssemblyParams::default();
            let masks = assemble(&map, &dets, &b, &p).unwrap();
            prop_assert_eq!(masks.len(), dets.len());
            let mut claimed = vec![false; map.width() * map.height()];
            for (m, d) in masks.iter().zip(&dets) {
                let rect = scale_bbox(&d.bbox, map.scale());
                let single = match_pixels(&map, d, &b, &p).unwrap();
                for (c, r) in m.bitmap.iter_set() {
                    let px = r * map.width() + c;
                    prop_assert!(!claimed[px]);
                    claimed[px] = true;
                    prop_assert!(rect.contains(c, r));
                    prop_assert!(map.get(c, r) != 0);
                    prop_assert!(single.bitmap.get(c, r));
                }
            }
            if dets.len() == 1 {
                prop_assert_eq!(&masks[0], &match_pixels(&map, &dets[0], &b, &p).unwrap());
            }
        }

        #[test]
        fn larger_tolerance_never_shrinks_a_mask((map, dets) in scene(), extra in 0.0f64..5.0) {
            let b = bins();
            for d in &dets {
                let small = match_pixels(&map, d, &b, &AssemblyParams { quantization_slack: 0.0 }).unwrap();
                let big = match_pixels(&map, d, &b, &AssemblyParams { quantization_slack: extra }).unwrap();
                for (c, r) in small.bitmap.iter_set() {
                    prop_assert!(big.bitmap.get(c, r));
                }
            }
        }
    }
}
