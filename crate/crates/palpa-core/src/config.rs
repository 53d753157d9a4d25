//! TOML run configuration. Every section is optional; a present section must
//! be complete except where a field documents a default.
//!
//! ```toml
//! [material]
//! k_min = 50.0
//! k_max = 400.0
//! b_min = 0.0
//! b_max = 2.0
//!
//! [kernel]
//! amplitude = 1.0
//! width = 0.02
//! cutoff_eps = 1e-5
//!
//! [band]
//! f_lo = 2.1
//! f_hi = 2.5
//! f_on = 0.5
//! f_off = 0.2
//!
//! [classifier]
//! t_force_cv = 0.15
//! t_speed_cv = 0.25
//! t_band = 0.6
//!
//! [force_map]
//! c_h = 0.012
//! c_r = 0.004
//! segments = 16
//!
//! [session]
//! publish_hz = 60.0
//! resolver = "proxy"
//! queue_capacity = 1024
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assessment::{BandConfig, Thresholds};
use crate::deformation::KernelParams;
use crate::force_map::ConeScale;
use crate::haptic::resolver_registry;
use crate::haptic::SERVO_HZ;
use crate::stiffness::MaterialRange;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    /// State messages per simulated second.
    pub publish_hz: f64,
    /// Contact strategy, by registry name.
    pub resolver: String,
    /// Trace writer queue length, in samples.
    pub queue_capacity: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            publish_hz: 60.0,
            resolver: "proxy".into(),
            queue_capacity: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub material: MaterialRange,
    pub kernel: KernelParams,
    pub band: BandConfig,
    pub classifier: Thresholds,
    pub force_map: ConeScale,
    pub session: SessionConfig,
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: SimConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.material.validate().map_err(|e| invalid(&e))?;
        self.kernel.validate().map_err(|e| invalid(&e))?;
        self.band.validate().map_err(|e| invalid(&e))?;
        self.classifier.validate().map_err(|e| invalid(&e))?;
        self.force_map.validate().map_err(|e| invalid(&e))?;
        let hz = self.session.publish_hz;
        if !(hz > 0.0 && hz <= SERVO_HZ as f64) {
            return Err(ConfigError::Invalid(format!(
                "session.publish_hz = {hz} must be in (0, {SERVO_HZ}]"
            )));
        }
        if resolver_registry().get(&self.session.resolver).is_none() {
            return Err(ConfigError::Invalid(format!(
                "session.resolver `{}` is not one of {:?}",
                self.session.resolver,
                resolver_registry().names()
            )));
        }
        if self.session.queue_capacity == 0 {
            return Err(ConfigError::Invalid("session.queue_capacity must be > 0".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let config = SimConfig::from_toml_str("").unwrap();
        assert_eq!(config, SimConfig::default());
        assert_eq!(config.band.f_lo, 2.1);
        assert_eq!(config.session.publish_hz, 60.0);
    }

    #[test]
    fn defaults_round_trip() {
        let text = SimConfig::default().to_toml_string();
        assert_eq!(SimConfig::from_toml_str(&text).unwrap(), SimConfig::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(SimConfig::from_toml_str("[band]\nf_lo = 3.0").is_err());
        assert!(SimConfig::from_toml_str("[session]\nresolver = \"magic\"").is_err());
        assert!(SimConfig::from_toml_str("[session]\npublish_hz = 0.0").is_err());
        assert!(SimConfig::from_toml_str("[bogus]\nx = 1").is_err());
        assert!(SimConfig::from_toml_str("[material]\nk_min = 500.0\nk_max = 400.0\nb_min = 0.0\nb_max = 2.0").is_err());
    }

    #[test]
    fn partial_sections() {
        let config = SimConfig::from_toml_str("[band]\nf_hi = 2.6\n[force_map]\nc_h = 0.02").unwrap();
        assert_eq!(config.band.f_hi, 2.6);
        assert_eq!(config.band.f_lo, 2.1);
        assert_eq!(config.force_map.c_h, 0.02);
        assert_eq!(config.force_map.c_r, 0.004);
    }
}
