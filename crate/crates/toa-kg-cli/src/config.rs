//! Experiment configuration: versioned JSON schema, semantic validation with
//! field-precise messages, and the mapping onto planner overrides.

use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use toa_kg::plan::PlanOverrides;
use toa_kg::recipe::PacketRecipe;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub mass: f64,
    pub epsilon: f64,
    pub detector: DetectorConfig,
    pub packet: PacketRecipe,
    pub grids: GridConfig,
    #[serde(default)]
    pub seed: u64,
    /// Ordering exponent used by the hermiticity suite; n = 1/2 is the
    /// Hermitian choice, anything else makes `verify hermiticity` fail.
    #[serde(default = "default_ordering")]
    pub ordering_exponent: f64,
    #[serde(default)]
    pub limits: Option<LimitsConfig>,
}

fn default_ordering() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub position: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_radial_n")]
    pub radial_n: usize,
    #[serde(default)]
    pub z_window: Option<[f64; 2]>,
    #[serde(default)]
    pub angular_polar: Option<usize>,
    #[serde(default)]
    pub angular_azimuth: Option<usize>,
    pub t_window: [f64; 2],
    #[serde(default = "default_t_samples")]
    pub t_samples: usize,
}

fn default_radial_n() -> usize {
    16_384
}

fn default_t_samples() -> usize {
    2048
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    /// Momentum ceiling of the non-relativistic comparison; must be << mass.
    #[serde(default)]
    pub kmax: Option<f64>,
    #[serde(default = "default_limits_t")]
    pub t: f64,
}

fn default_limits_t() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&raw)
            .with_context(|| format!("invalid config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "field `schema_version`: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            );
        }
        if !self.mass.is_finite() || self.mass < 0.0 {
            bail!("field `mass`: must be finite and non-negative, got {}", self.mass);
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            bail!("field `epsilon`: must be finite and positive, got {}", self.epsilon);
        }
        if self.detector.position.iter().any(|x| !x.is_finite()) {
            bail!("field `detector.position`: must be finite");
        }
        match &self.packet {
            PacketRecipe::Gaussian { sigma, k0, x0 } => {
                if !(*sigma > 0.0) || !sigma.is_finite() {
                    bail!("field `packet.sigma`: must be finite and positive, got {sigma}");
                }
                if k0.iter().chain(x0.iter()).any(|x| !x.is_finite()) {
                    bail!("field `packet.k0`/`packet.x0`: must be finite");
                }
            }
            PacketRecipe::RadialGaussianInZ { z0, width } => {
                if !(*width > 0.0) || !width.is_finite() {
                    bail!("field `packet.width`: must be finite and positive, got {width}");
                }
                if !z0.is_finite() {
                    bail!("field `packet.z0`: must be finite");
                }
            }
        }
        if self.grids.radial_n < 64 {
            bail!(
                "field `grids.radial_n`: must be at least 64, got {}",
                self.grids.radial_n
            );
        }
        if let Some([lo, hi]) = self.grids.z_window {
            if !(hi > lo) {
                bail!("field `grids.z_window`: must be an increasing pair, got [{lo}, {hi}]");
            }
        }
        let [t_lo, t_hi] = self.grids.t_window;
        if !(t_hi > t_lo) {
            bail!("field `grids.t_window`: must be an increasing pair, got [{t_lo}, {t_hi}]");
        }
        if self.grids.t_samples < 8 {
            bail!(
                "field `grids.t_samples`: must be at least 8, got {}",
                self.grids.t_samples
            );
        }
        if !self.ordering_exponent.is_finite() {
            bail!("field `ordering_exponent`: must be finite");
        }
        if let Some(lim) = &self.limits {
            if let Some(kmax) = lim.kmax {
                if !(kmax > 0.0) || !kmax.is_finite() {
                    bail!("field `limits.kmax`: must be finite and positive, got {kmax}");
                }
            }
            if !lim.t.is_finite() {
                bail!("field `limits.t`: must be finite");
            }
        }
        Ok(())
    }

    pub fn overrides(&self, resolution: Option<usize>) -> PlanOverrides {
        PlanOverrides {
            radial_n: resolution.unwrap_or(self.grids.radial_n),
            z_window: self.grids.z_window.map(|[a, b]| (a, b)),
            angular_polar: self.grids.angular_polar,
            angular_azimuth: self.grids.angular_azimuth,
            ..Default::default()
        }
    }
}
