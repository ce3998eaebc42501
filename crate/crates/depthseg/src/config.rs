//! Run configuration.
//!
//! Values come from command-line flags, then a TOML file, then defaults:
//!
//! ```toml
//! k = 64
//! d_min = 2.0
//! d_max = 80.0
//! scheme = "exponential"
//! scale = 4.0
//! ap_thresholds = [0.5, 0.75]
//! quantization_slack = 0.5
//! ```

use std::path::Path;

use anyhow::{bail, Context};
use depthseg_core::evaluation::coco_thresholds;
use depthseg_core::{AssemblyParams, DepthBins, EvalParams, Scheme};
use serde::Deserialize;

/// Optional overrides, as given by a config file or by flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub k: Option<u32>,
    pub d_min: Option<f64>,
    pub d_max: Option<f64>,
    pub scheme: Option<String>,
    pub scale: Option<f64>,
    pub ap_thresholds: Option<Vec<f64>>,
    pub quantization_slack: Option<f64>,
}

impl ConfigLayer {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("{}", path.display()))
    }

    /// Fields set in `self` win over `other`.
    pub fn over(self, other: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            k: self.k.or(other.k),
            d_min: self.d_min.or(other.d_min),
            d_max: self.d_max.or(other.d_max),
            scheme: self.scheme.or(other.scheme),
            scale: self.scale.or(other.scale),
            ap_thresholds: self.ap_thresholds.or(other.ap_thresholds),
            quantization_slack: self.quantization_slack.or(other.quantization_slack),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub bins: DepthBins,
    /// Image pixels per map pixel.
    pub scale: f64,
    pub eval: EvalParams,
    pub assembly: AssemblyParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::resolve(ConfigLayer::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn resolve(layer: ConfigLayer) -> anyhow::Result<Self> {
        let scheme: Scheme = match &layer.scheme {
            Some(s) => s.parse()?,
            None => Scheme::Exponential,
        };
        let bins = DepthBins::new(
            layer.k.unwrap_or(64),
            layer.d_min.unwrap_or(2.0),
            layer.d_max.unwrap_or(80.0),
            scheme,
        )?;
        let scale = layer.scale.unwrap_or(4.0);
        if !(scale.is_finite() && scale > 0.0) {
            bail!("scale must be positive, got {scale}");
        }
        let eval = EvalParams::new(layer.ap_thresholds.unwrap_or_else(coco_thresholds))?;
        let slack = layer.quantization_slack.unwrap_or(AssemblyParams::default().quantization_slack);
        if !(slack.is_finite() && slack >= 0.0) {
            bail!("quantization_slack must be non-negative, got {slack}");
        }
        Ok(Self {
            bins,
            scale,
            eval,
            assembly: AssemblyParams {
                quantization_slack: slack,
            },
        })
    }

    /// Flags over the optional file over defaults.
    pub fn from_sources(flags: ConfigLayer, file: Option<&Path>) -> anyhow::Result<Self> {
        let file_layer = match file {
            Some(p) => ConfigLayer::load(p)?,
            None => ConfigLayer::default(),
        };
        Self::resolve(flags.over(file_layer))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::default();
        assert_eq!(c.bins, DepthBins::exponential(64, 2.0, 80.0).unwrap());
        assert_eq!(c.scale, 4.0);
        assert_eq!(c.eval.iou_thresholds.len(), 10);
        assert_eq!(c.assembly, AssemblyParams::default());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let file = ConfigLayer::from_toml("k = 32\nd_max = 60.0\nscheme = \"linear\"").unwrap();
        let flags = ConfigLayer {
            k: Some(16),
            ..ConfigLayer::default()
        };
        let c = RunConfig::resolve(flags.over(file)).unwrap();
        assert_eq!(c.bins, DepthBins::linear(16, 2.0, 60.0).unwrap());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ConfigLayer::from_toml("kk = 3").is_err());
        for layer in [
            ConfigLayer { k: Some(1), ..Default::default() },
            ConfigLayer { d_min: Some(90.0), ..Default::default() },
            ConfigLayer { scheme: Some("cubic".into()), ..Default::default() },
            ConfigLayer { scale: Some(0.0), ..Default::default() },
            ConfigLayer { ap_thresholds: Some(vec![1.5]), ..Default::default() },
            ConfigLayer { quantization_slack: Some(-1.0), ..Default::default() },
        ] {
            assert!(RunConfig::resolve(layer).is_err());
        }
    }
}
