//! Run configuration: built-in defaults, an optional `key = value` file, and
//! command-line flags, applied in that order.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use eigencorpus::corrnet::DEFAULT_THRESHOLD;
use eigencorpus::pixstats::{SpreadMode, VarianceDivisor, DEFAULT_BOUND_SCALE};
use serde::Deserialize;

use crate::error::UsageError;

pub const DEFAULT_CROP: usize = 550;
pub const DEFAULT_COMPONENTS: usize = 5;
pub const DEFAULT_SEED: u64 = 2014;
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub crop_size: usize,
    pub threshold: f64,
    pub scale: f64,
    pub spread_mode: SpreadMode,
    pub divisor: VarianceDivisor,
    pub components: usize,
    /// Seeds the network layout.
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crop_size: DEFAULT_CROP,
            threshold: DEFAULT_THRESHOLD,
            scale: DEFAULT_BOUND_SCALE,
            spread_mode: SpreadMode::default(),
            divisor: VarianceDivisor::default(),
            components: DEFAULT_COMPONENTS,
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

/// Any subset of the configuration, as read from a file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub crop_size: Option<usize>,
    pub threshold: Option<f64>,
    pub scale: Option<f64>,
    pub spread_mode: Option<String>,
    pub divisor: Option<String>,
    pub components: Option<usize>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

impl PartialConfig {
    /// Reads a flat TOML table whose keys are `RunConfig` field names.
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| UsageError(e.to_string()).into())
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: PartialConfig) -> PartialConfig {
        PartialConfig {
            crop_size: other.crop_size.or(self.crop_size),
            threshold: other.threshold.or(self.threshold),
            scale: other.scale.or(self.scale),
            spread_mode: other.spread_mode.or(self.spread_mode),
            divisor: other.divisor.or(self.divisor),
            components: other.components.or(self.components),
            seed: other.seed.or(self.seed),
            out_dir: other.out_dir.or(self.out_dir),
        }
    }

    /// Fills unset fields with defaults and validates the result.
    pub fn resolve(self) -> Result<RunConfig, UsageError> {
        let d = RunConfig::default();
        let spread_mode = parse_field(self.spread_mode)?.unwrap_or(d.spread_mode);
        let divisor = parse_field(self.divisor)?.unwrap_or(d.divisor);
        let config = RunConfig {
            crop_size: self.crop_size.unwrap_or(d.crop_size),
            threshold: self.threshold.unwrap_or(d.threshold),
            scale: self.scale.unwrap_or(d.scale),
            spread_mode,
            divisor,
            components: self.components.unwrap_or(d.components),
            seed: self.seed.unwrap_or(d.seed),
            out_dir: self.out_dir.unwrap_or(d.out_dir),
        };
        config.validate()?;
        Ok(config)
    }
}

fn parse_field<T>(value: Option<String>) -> Result<Option<T>, UsageError>
where
    T: std::str::FromStr<Err = eigencorpus::Error>,
{
    value
        .map(|v| v.trim().parse())
        .transpose()
        .map_err(|e: eigencorpus::Error| UsageError(e.to_string()))
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), UsageError> {
        if self.crop_size < 2 {
            return Err(UsageError(format!(
                "crop_size must be at least 2, got {}",
                self.crop_size
            )));
        }
        if self.components < 1 {
            return Err(UsageError("components must be at least 1".into()));
        }
        if !self.threshold.is_finite() {
            return Err(UsageError(format!(
                "threshold must be finite, got {}",
                self.threshold
            )));
        }
        if !(self.scale.is_finite() && self.scale >= 0.0) {
            return Err(UsageError(format!(
                "scale must be finite and non-negative, got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_constants() {
        let c = PartialConfig::default().resolve().unwrap();
        assert_eq!(c.crop_size, 550);
        assert_eq!(c.threshold, 0.3 * 0.3 * 0.3);
        assert_eq!(c.scale, 1.96);
        assert_eq!(c.spread_mode, SpreadMode::Variance);
        assert_eq!(c.divisor, VarianceDivisor::Population);
        assert_eq!(c.components, 5);
        assert_eq!(c.seed, 2014);
    }

    #[test]
    fn flags_win_over_file() {
        let file =
            PartialConfig::parse("crop_size = 64\nseed = 7\n# note\nspread_mode = \"stddev\"\n")
                .unwrap();
        let flags = PartialConfig {
            crop_size: Some(32),
            ..Default::default()
        };
        let c = file.overridden_by(flags).resolve().unwrap();
        assert_eq!(c.crop_size, 32);
        assert_eq!(c.seed, 7);
        assert_eq!(c.spread_mode, SpreadMode::StdDev);
    }

    #[test]
    fn unknown_keys_and_bad_values_rejected() {
        assert!(PartialConfig::parse("crop = 5").is_err());
        let bad = PartialConfig {
            components: Some(0),
            ..Default::default()
        };
        assert!(bad.resolve().is_err());
        let bad = PartialConfig {
            threshold: Some(f64::NAN),
            ..Default::default()
        };
        assert!(bad.resolve().is_err());
        let bad = PartialConfig {
            divisor: Some("median".into()),
            ..Default::default()
        };
        assert!(bad.resolve().is_err());
    }
}
