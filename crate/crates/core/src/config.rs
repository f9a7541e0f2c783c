//! Configuration structs for every pipeline stage. All fields have
//! defaults matching the reference setup; validation is explicit so a
//! bad config fails before any expensive work starts.

use crate::colorspace::DEFAULT_XI;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn invalid(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Parameters of the color-network construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapperConfig {
    /// Sampling stride along each sRGB axis. The endpoint 255 is always
    /// included, so stride 8 gives 33^3 samples.
    pub stride: u32,
    /// Hue offset of the lens projection, radians.
    pub xi: f64,
    /// Number of cover intervals along the chroma axis.
    pub chroma_intervals: usize,
    /// Number of cover intervals along the hue axis.
    pub hue_intervals: usize,
    /// Overlap gain for chroma intervals, percent of interval length.
    pub chroma_gain: f64,
    /// Overlap gain for hue intervals, percent of interval length.
    pub hue_gain: f64,
    /// DBSCAN neighborhood radius in HyAB units.
    pub dbscan_eps: f64,
    /// DBSCAN core-point threshold, neighbors including the point itself.
    pub dbscan_min_pts: usize,
}

impl Default for MapperConfig {
    fn default() -> Self {
        Self {
            stride: 8,
            xi: DEFAULT_XI,
            chroma_intervals: 3,
            hue_intervals: 8,
            chroma_gain: 10.0,
            hue_gain: 25.0,
            dbscan_eps: 8.0,
            dbscan_min_pts: 5,
        }
    }
}

impl MapperConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.stride > 256 {
            return Err(invalid("stride must be in 1..=256"));
        }
        if self.chroma_intervals == 0 || self.hue_intervals == 0 {
            return Err(invalid("interval counts must be positive"));
        }
        for (name, g) in [("chroma_gain", self.chroma_gain), ("hue_gain", self.hue_gain)] {
            if !(0.0..100.0).contains(&g) {
                return Err(invalid(format!("{name} must be in [0, 100)")));
            }
        }
        if !(self.dbscan_eps > 0.0) {
            return Err(invalid("dbscan_eps must be positive"));
        }
        if self.dbscan_min_pts == 0 {
            return Err(invalid("dbscan_min_pts must be positive"));
        }
        Ok(())
    }
}

/// Parameters of point-cloud normalization and slicing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlicingConfig {
    /// Uniform scale applied before normalization.
    pub sigma_s: f64,
    /// Slice thickness along z after view normalization.
    pub sigma1: f64,
    /// Strip width along x within each slice.
    pub sigma2: f64,
    /// Rotation about the y axis applied after view normalization, radians.
    pub alpha: f64,
}

impl Default for SlicingConfig {
    fn default() -> Self {
        Self { sigma_s: 1.0, sigma1: 0.01, sigma2: 0.01, alpha: 0.0 }
    }
}

impl SlicingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s > 0.0) {
            return Err(invalid("sigma_s must be positive"));
        }
        if !(self.sigma1 > 0.0) || !(self.sigma2 > 0.0) {
            return Err(invalid("slice and strip widths must be positive"));
        }
        if !self.alpha.is_finite() {
            return Err(invalid("alpha must be finite"));
        }
        Ok(())
    }
}

/// Parameters of the per-slice persistence images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriptorConfig {
    /// Persistence images are `grid_size` x `grid_size` pixels.
    pub grid_size: usize,
    /// Gaussian spread of each diagram point, as a multiple of the strip
    /// width sigma2.
    pub sigma_pi_factor: f64,
    /// Birth/persistence extent covered by the image, in normalized
    /// coordinate units. Fixed across objects so images are comparable.
    pub pi_range: f64,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self { grid_size: 8, sigma_pi_factor: 0.5, pi_range: 1.0 }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size == 0 {
            return Err(invalid("grid_size must be positive"));
        }
        if !(self.sigma_pi_factor > 0.0) {
            return Err(invalid("sigma_pi_factor must be positive"));
        }
        if !(self.pi_range > 0.0) {
            return Err(invalid("pi_range must be positive"));
        }
        Ok(())
    }
}

/// Classifier architecture and training schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Width of the single hidden layer.
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// L2 penalty on the weight matrices. Biases are exempt. Keeps the
    /// softmax from saturating, so a confidently wrong classifier cannot
    /// dominate prediction fusion.
    pub weight_decay: f64,
    /// Fraction of input features zeroed per training batch (inverted
    /// dropout). Forces redundant feature use, so descriptors with empty
    /// trailing blocks still carry enough evidence at test time.
    pub input_dropout: f64,
    /// Cross-entropy target smoothing: 1 - eps on the true class, eps
    /// spread uniformly. Caps the probability either classifier can
    /// reach, so fusion compares calibrated confidences instead of two
    /// saturated ones.
    pub label_smoothing: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: 512,
            epochs: 60,
            learning_rate: 1e-3,
            batch_size: 32,
            weight_decay: 1e-2,
            input_dropout: 0.2,
            label_smoothing: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(invalid("hidden, epochs and batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be positive"));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(invalid("weight_decay must be finite and non-negative"));
        }
        if !(0.0..1.0).contains(&self.input_dropout) {
            return Err(invalid("input_dropout must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(invalid("label_smoothing must be in [0, 1)"));
        }
        Ok(())
    }
}

/// Everything needed to run the full pipeline end to end.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mapper: MapperConfig,
    pub slicing: SlicingConfig,
    pub descriptor: DescriptorConfig,
    pub model: ModelConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.mapper.validate()?;
        self.slicing.validate()?;
        self.descriptor.validate()?;
        self.model.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        PipelineConfig::default().validate().unwrap();
    }

    #[test]
    fn gain_of_100_is_rejected() {
        let cfg = MapperConfig { hue_gain: 100.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_stride_is_rejected() {
        let cfg = MapperConfig { stride: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_survive_json_round_trip() {
        let cfg = PipelineConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: PipelineConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
