//! Mapping between metric depth and discrete depth classes.
//!
//! Classes are numbered `1..=K`; class `0` is reserved for background in
//! every map this crate produces. The exponential scheme places class `i` at
//! `d_min * (d_max / d_min)^((i - 1) / (K - 1))`, so bins are narrow close to
//! the camera and wide far away. The linear scheme spaces them evenly.

use crate::error::{Error, Result};

/// Class index used for background pixels.
pub const BACKGROUND: u16 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Linear,
    Exponential,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Linear => "linear",
            Scheme::Exponential => "exponential",
        }
    }
}

impl core::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "lin" => Ok(Scheme::Linear),
            "exponential" | "exp" => Ok(Scheme::Exponential),
            _ => Err(Error::InvalidBins("scheme must be `linear` or `exponential`")),
        }
    }
}

/// A discretization of `[d_min, d_max]` into `k` depth classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthBins {
    k: u32,
    d_min: f64,
    d_max: f64,
    scheme: Scheme,
}

impl DepthBins {
    pub fn new(k: u32, d_min: f64, d_max: f64, scheme: Scheme) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidBins("K must be at least 2"));
        }
        if k > u32::from(u16::MAX) {
            return Err(Error::InvalidBins("K must fit in a 16-bit sample"));
        }
        if !(d_min.is_finite() && d_max.is_finite()) {
            return Err(Error::InvalidBins("depth range must be finite"));
        }
        if d_min <= 0.0 {
            return Err(Error::InvalidBins("d_min must be positive"));
        }
        if d_max <= d_min {
            return Err(Error::InvalidBins("d_max must exceed d_min"));
        }
        Ok(Self {
            k,
            d_min,
            d_max,
            scheme,
        })
    }

    pub fn exponential(k: u32, d_min: f64, d_max: f64) -> Result<Self> {
        Self::new(k, d_min, d_max, Scheme::Exponential)
    }

    pub fn linear(k: u32, d_min: f64, d_max: f64) -> Result<Self> {
        Self::new(k, d_min, d_max, Scheme::Linear)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Same range and scheme with a different class count.
    pub fn with_k(&self, k: u32) -> Result<Self> {
        Self::new(k, self.d_min, self.d_max, self.scheme)
    }

    fn km1(&self) -> f64 {
        f64::from(self.k - 1)
    }

    /// Natural log of `d_max / d_min`, the base of the exponential scheme.
    fn log_ratio(&self) -> f64 {
        libm::log(self.d_max / self.d_min)
    }

    /// Metric depth of class `i`, for `1 <= i <= K`.
    pub fn depth_of_class(&self, i: u32) -> Result<f64> {
        if i == 0 || i > self.k {
            return Err(Error::ClassOutOfRange {
                index: i64::from(i),
                k: self.k,
            });
        }
        // Pin the endpoints so they are exact rather than within an ulp.
        if i == 1 {
            return Ok(self.d_min);
        }
        if i == self.k {
            return Ok(self.d_max);
        }
        let t = f64::from(i - 1) / self.km1();
        Ok(match self.scheme {
            Scheme::Exponential => self.d_min * libm::pow(self.d_max / self.d_min, t),
            Scheme::Linear => self.d_min + t * (self.d_max - self.d_min),
        })
    }

    /// Real-valued inverse of [`depth_of_class`](Self::depth_of_class).
    ///
    /// Depths outside `[d_min, d_max]` are clamped to the range first, so the
    /// result always lies in `[1, K]`.
    pub fn continuous_index(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::NonPositiveDepth(d));
        }
        let d = d.clamp(self.d_min, self.d_max);
        Ok(1.0 + self.km1() * self.unit_position(d))
    }

    /// Position of an in-range depth on `[0, 1]` under the scheme.
    fn unit_position(&self, d: f64) -> f64 {
        match self.scheme {
            Scheme::Exponential => libm::log(d / self.d_min) / self.log_ratio(),
            Scheme::Linear => (d - self.d_min) / (self.d_max - self.d_min),
        }
    }

    /// Nearest class to `d` (round half up), clamped to `[1, K]`.
    pub fn class_of_depth(&self, d: f64) -> Result<u16> {
        let ci = self.continuous_index(d)?;
        let rounded = libm::floor(ci + 0.5).clamp(1.0, f64::from(self.k));
        Ok(rounded as u16)
    }

    /// Width in index units of a metric interval `[near, far]` using the
    /// unclamped scheme formula. Used for the per-instance threshold.
    pub(crate) fn index_span(&self, near: f64, far: f64) -> f64 {
        match self.scheme {
            Scheme::Exponential => self.km1() * libm::log(far / near) / self.log_ratio(),
            Scheme::Linear => self.km1() * (far - near) / (self.d_max - self.d_min),
        }
    }
}
