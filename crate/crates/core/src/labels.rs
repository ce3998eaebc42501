//! Depth-class training labels from binary coarse masks.
//!
//! Each instance paints its own depth class `i_k` wherever its coarse mask is
//! set (`p_k = i_k * m_k`); everything else stays background. Where coarse
//! masks overlap, the nearer instance wins.

use alloc::vec;
use alloc::vec::Vec;

use crate::bitmap::Bitmap;
use crate::depth_bins::{DepthBins, BACKGROUND};
use crate::error::{Error, Result};
use crate::mask_assembly::PixelDepthMap;

/// Binary instance mask from an annotation model.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarseMask {
    pub id: u32,
    pub bitmap: Bitmap,
}

/// Builds a pixel-level depth-class map (scale 1) from coarse masks paired
/// with their instance depths in meters.
pub fn synthesize_pixel_labels(
    masks: &[(CoarseMask, f64)],
    bins: &DepthBins,
    width: usize,
    height: usize,
) -> Result<PixelDepthMap> {
    let mut classes = Vec::with_capacity(masks.len());
    for (mask, depth) in masks {
        if mask.bitmap.width() != width || mask.bitmap.height() != height {
            return Err(Error::DimensionMismatch {
                expected_w: width,
                expected_h: height,
                got_w: mask.bitmap.width(),
                got_h: mask.bitmap.height(),
            });
        }
        classes.push(bins.class_of_depth(*depth)?);
    }

    // Paint far to near so nearer instances overwrite.
    let mut order: Vec<usize> = (0..masks.len()).collect();
    order.sort_by(|&a, &b| {
        masks[b]
            .1
            .total_cmp(&masks[a].1)
            .then(masks[b].0.id.cmp(&masks[a].0.id))
    });

    let mut values = vec![BACKGROUND; width * height];
    for k in order {
        let class = classes[k];
        for (px, &bit) in masks[k].0.bitmap.bits().iter().enumerate() {
            if bit {
                values[px] = class;
            }
        }
    }
    PixelDepthMap::new(width, height, bins.k(), 1.0, values)
}
