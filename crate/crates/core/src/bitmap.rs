use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Row-major binary image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::LengthMismatch {
                left: bits.len(),
                right: width * height,
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Builds a bitmap from a predicate over `(col, row)`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                bits.push(f(col, row));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_shape(&self, other: &Bitmap) -> Result<()> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            })
        }
    }

    /// `(intersection, union)` pixel counts.
    pub fn overlap_counts(&self, other: &Bitmap) -> Result<(usize, usize)> {
        self.same_shape(other)?;
        let mut inter = 0;
        let mut union = 0;
        for (&a, &b) in self.bits.iter().zip(other.bits.iter()) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        Ok((inter, union))
    }

    /// Set pixels as `(col, row)` pairs in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }
}
