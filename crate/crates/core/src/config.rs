//! The simulator configuration file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::env::{MotionLimits, ScanConfig};
use crate::episode::RewardWeights;
use crate::harness::RefParams;
use crate::humans::SocialForceParams;
use crate::nav::NavConfig;
use crate::world::{ConfigError, MapError, ScenarioConfig, WorldMap, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read config {path}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("unsupported config format_version {0}")]
    Version(u32),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotConfig {
    pub radius: f64,
    /// Standard deviation of Gaussian noise on (linear, angular) velocity.
    pub noise_std: [f64; 2],
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self {
            radius: 0.3,
            noise_std: [0.0, 0.0],
        }
    }
}

fn default_format_version() -> u32 {
    FORMAT_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub scenario: ScenarioConfig,
    /// Number of human slots in the observation (H_cap).
    pub human_slots: usize,
    pub robot: RobotConfig,
    pub social_force: SocialForceParams,
    pub navigation: NavConfig,
    pub scan: ScanConfig,
    pub reward: RewardWeights,
    /// Physics substep (s). The action period is `navigation.control_period`.
    pub substep: f64,
    pub ref_policy: RefParams,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scenario: ScenarioConfig::default(),
            human_slots: 5,
            robot: RobotConfig::default(),
            social_force: SocialForceParams::default(),
            navigation: NavConfig::default(),
            scan: ScanConfig::default(),
            reward: RewardWeights::default(),
            substep: 0.05,
            ref_policy: RefParams::default(),
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        let cfg: SimConfig =
            serde_json::from_str(text).map_err(|e| LoadError::Parse(e.to_string()))?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(LoadError::Version(cfg.format_version));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization cannot fail")
    }

    /// Reads a config file; relative map paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, WorldMap), LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg = Self::from_json(&text)?;
        let map = WorldMap::resolve(&cfg.scenario.map, path.parent())?;
        Ok((cfg, map))
    }

    /// The map named by `scenario.map`, with relative paths taken from the
    /// working directory.
    pub fn load_map(&self) -> Result<WorldMap, MapError> {
        WorldMap::resolve(&self.scenario.map, None)
    }

    /// Action period (s).
    pub fn dt_action(&self) -> f64 {
        self.navigation.control_period
    }

    pub fn motion_limits(&self) -> MotionLimits {
        MotionLimits {
            v_max: self.navigation.v_max,
            w_max: self.navigation.w_max,
            a_max: self.navigation.a_max,
            alpha_max: self.navigation.alpha_max,
            noise_std: self.robot.noise_std,
        }
    }

    /// First 16 bytes of the SHA-256 of the canonical JSON, hex encoded.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialization cannot fail");
        hex::encode(&Sha256::digest(&bytes)[..16])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        self.scenario.validate(self.human_slots)?;
        self.social_force.validate().map_err(ConfigError::Invalid)?;
        self.reward.validate().map_err(ConfigError::Invalid)?;
        let nav = &self.navigation;
        for (name, v) in [
            ("navigation.v_max", nav.v_max),
            ("navigation.w_max", nav.w_max),
            ("navigation.a_max", nav.a_max),
            ("navigation.alpha_max", nav.alpha_max),
            ("navigation.control_period", nav.control_period),
            ("navigation.rollout.horizon", nav.rollout.horizon),
            ("navigation.rollout.score_dt", nav.rollout.score_dt),
            ("robot.radius", self.robot.radius),
            ("scan.max_range", self.scan.max_range),
            ("scan.fov_deg", self.scan.fov_deg),
            ("substep", self.substep),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be positive, got {v}"));
            }
        }
        if nav.rollout.angular_samples == 0 || nav.rollout.linear_samples == 0 {
            return invalid("navigation.rollout sample counts must be at least 1".into());
        }
        if self
            .robot
            .noise_std
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            return invalid("robot.noise_std must be non-negative".into());
        }
        let ratio = nav.control_period / self.substep;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return invalid(format!(
                "navigation.control_period {} is not a multiple of substep {}",
                nav.control_period, self.substep
            ));
        }
        if self.scan.rays == 0 {
            return invalid("scan.rays must be at least 1".into());
        }
        Ok(())
    }
}
