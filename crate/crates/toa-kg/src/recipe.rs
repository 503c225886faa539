//! Wave-packet recipes: the declarative descriptions of states that the CLI
//! config carries and from which packets are sampled onto grids.

use serde::{Deserialize, Serialize};

/// A packet recipe. `Gaussian` builds a three-dimensional packet in the full
/// momentum representation; `RadialGaussianInZ` builds a detected-subspace
/// element directly as a Gaussian profile in the conjugate coordinate Z.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PacketRecipe {
    Gaussian {
        k0: [f64; 3],
        sigma: f64,
        #[serde(default)]
        x0: [f64; 3],
    },
    RadialGaussianInZ {
        z0: f64,
        width: f64,
    },
}

impl PacketRecipe {
    /// Momentum support [k_lo, k_hi] outside of which the radial envelope is
    /// negligible (used for automatic window planning). For the Z recipe the
    /// support is expressed through the Z window instead.
    pub fn radial_support(&self) -> Option<(f64, f64)> {
        match self {
            PacketRecipe::Gaussian { k0, sigma, .. } => {
                let k0n = (k0[0] * k0[0] + k0[1] * k0[1] + k0[2] * k0[2]).sqrt();
                Some(((k0n - 12.0 * sigma).max(0.0), k0n + 12.0 * sigma))
            }
            PacketRecipe::RadialGaussianInZ { .. } => None,
        }
    }

    /// Z support for recipes defined directly in Z.
    pub fn z_support(&self) -> Option<(f64, f64)> {
        match self {
            PacketRecipe::Gaussian { .. } => None,
            PacketRecipe::RadialGaussianInZ { z0, width } => {
                Some((z0 - 14.0 * width, z0 + 14.0 * width))
            }
        }
    }
}
