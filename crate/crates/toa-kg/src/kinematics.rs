//! Scalar kinematic maps for the free relativistic particle in natural units
//! (hbar = c = 1): the energy omega(k) = sqrt(k^2 + m^2), the low-momentum
//! regularization profile f(k), the conjugate coordinate Z(k) with its exact
//! inverse, and the momentum grids the rest of the crate integrates on.
//!
//! Z is defined by Z(k) = int_eps^k dk' / (omega(k') f(k')). Both branches
//! have closed forms:
//!   k >= eps:  Z = omega(k) - omega(eps)
//!   k <  eps:  Z = (eps^2/m) [ln(k/(m+omega(k))) - ln(eps/(m+omega(eps)))]
//!              (m > 0), and Z = eps - eps^2/k for m = 0.
//! Z is a strictly increasing bijection of (0, inf) onto (-inf, inf).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::gauss::gauss_legendre_on;
use crate::numerics::sum::sum_f64;

/// Particle mass, in inverse length units. m = 0 is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mass(f64);

impl Mass {
    pub fn new(m: f64) -> Result<Self> {
        if !m.is_finite() || m < 0.0 {
            return Err(Error::InvalidMass(m));
        }
        Ok(Self(m))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Regularization cutoff epsilon > 0 of the profile f(k).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegularizationCut(f64);

impl RegularizationCut {
    pub fn new(eps: f64) -> Result<Self> {
        if !eps.is_finite() || eps <= 0.0 {
            return Err(Error::InvalidCutoff(eps));
        }
        Ok(Self(eps))
    }

    #[inline]
    pub fn epsilon(self) -> f64 {
        self.0
    }
}

/// omega(k) = sqrt(k^2 + m^2). Rejects negative k.
pub fn omega(k: f64, m: Mass) -> Result<f64> {
    if !(k >= 0.0) {
        return Err(Error::NegativeMomentum(k));
    }
    Ok(k.hypot(m.value()))
}

/// The regularization profile: f(k) = 1/k for k > eps, k/eps^2 for k < eps.
/// Continuous (value 1/eps) at k = eps. Rejects k <= 0.
pub fn f_reg(k: f64, cut: RegularizationCut) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::NonPositiveMomentum(k));
    }
    let eps = cut.epsilon();
    Ok(if k >= eps { 1.0 / k } else { k / (eps * eps) })
}

/// The Z(k) map and its inverse for a fixed (m, eps) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZMap {
    mass: Mass,
    cut: RegularizationCut,
    omega_eps: f64,
    /// ln(eps / (m + omega(eps))), the lower-branch reference (m > 0 only)
    log_ref: f64,
}

impl ZMap {
    pub fn new(mass: Mass, cut: RegularizationCut) -> Self {
        let m = mass.value();
        let eps = cut.epsilon();
        let omega_eps = eps.hypot(m);
        let log_ref = if m > 0.0 {
            (eps / (m + omega_eps)).ln()
        } else {
            0.0
        };
        Self {
            mass,
            cut,
            omega_eps,
            log_ref,
        }
    }

    #[inline]
    pub fn mass(&self) -> Mass {
        self.mass
    }

    #[inline]
    pub fn cut(&self) -> RegularizationCut {
        self.cut
    }

    #[inline]
    pub fn omega_eps(&self) -> f64 {
        self.omega_eps
    }

    #[inline]
    pub fn omega(&self, k: f64) -> f64 {
        k.hypot(self.mass.value())
    }

    #[inline]
    pub fn f(&self, k: f64) -> f64 {
        let eps = self.cut.epsilon();
        if k >= eps {
            1.0 / k
        } else {
            k / (eps * eps)
        }
    }

    /// Z(k), closed form on both branches. Rejects k <= 0.
    pub fn z_of_k(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::NonPositiveMomentum(k));
        }
        Ok(self.z_unchecked(k))
    }

    #[inline]
    pub(crate) fn z_unchecked(&self, k: f64) -> f64 {
        let m = self.mass.value();
        let eps = self.cut.epsilon();
        if k >= eps {
            self.omega(k) - self.omega_eps
        } else if m > 0.0 {
            let lg = (k / (m + self.omega(k))).ln();
            (eps * eps / m) * (lg - self.log_ref)
        } else {
            eps - eps * eps / k
        }
    }

    /// Inverse of Z. Total on the reals; for Z so negative that the
    /// corresponding momentum underflows, clamps to the smallest positive
    /// normal (the map stays strictly positive and monotone).
    pub fn k_of_z(&self, z: f64) -> f64 {
        let m = self.mass.value();
        let eps = self.cut.epsilon();
        if z >= 0.0 {
            // k^2 = (z + w_eps)^2 - m^2 = z (z + 2 w_eps) + eps^2, which is
            // exact at z = 0 and free of the (w - m) cancellation
            (z * (z + 2.0 * self.omega_eps) + eps * eps).sqrt()
        } else if m > 0.0 {
            // u = k/(m + omega(k)) in (0,1); Z = (eps^2/m)(ln u - log_ref)
            let u = (m * z / (eps * eps) + self.log_ref).exp();
            let k = 2.0 * m * u / (1.0 - u * u);
            if k > 0.0 {
                k.min(eps)
            } else {
                f64::MIN_POSITIVE
            }
        } else {
            eps * eps / (eps - z)
        }
    }

    /// Jacobian dk/dZ = omega(k) f(k). Rejects k <= 0.
    pub fn dk_dz(&self, k: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::NonPositiveMomentum(k));
        }
        Ok(self.omega(k) * self.f(k))
    }

    /// Most negative Z whose momentum is still comfortably representable.
    /// Grids must not extend below this.
    pub fn representable_z_floor(&self) -> f64 {
        self.z_unchecked(1e-280)
    }
}

/// Quadrature scheme backing a radial grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialScheme {
    /// Composite Gauss-Legendre panels in k; integrates constants exactly.
    GaussLegendre,
    /// Nodes at uniform Z values; k-weights are the flat-Z trapezoid
    /// omega*f*dZ, so the discrete KG form is exactly flat in Z.
    UniformZ { z_lo: f64, dz: f64 },
}

/// Discretized modulus-of-momentum axis with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    scheme: RadialScheme,
    zmap: ZMap,
}

impl RadialGrid {
    /// Composite Gauss-Legendre rule: `panels` equal panels of `order` nodes
    /// each on [k_min, k_max].
    pub fn gauss_legendre(
        zmap: ZMap,
        k_min: f64,
        k_max: f64,
        panels: usize,
        order: usize,
    ) -> Result<Self> {
        if !(k_min > 0.0 && k_max > k_min && k_min.is_finite() && k_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "bad momentum range [{k_min}, {k_max}]"
            )));
        }
        if panels == 0 || order == 0 {
            return Err(Error::InvalidGrid("empty Gauss-Legendre rule".into()));
        }
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let a = k_min + (k_max - k_min) * p as f64 / panels as f64;
            let b = k_min + (k_max - k_min) * (p + 1) as f64 / panels as f64;
            let (x, w) = gauss_legendre_on(order, a, b);
            nodes.extend(x);
            weights.extend(w);
        }
        Ok(Self {
            nodes,
            weights,
            scheme: RadialScheme::GaussLegendre,
            zmap,
        })
    }

    /// Uniform-Z grid of n nodes on [z_lo, z_hi].
    pub fn uniform_z(zmap: ZMap, z_lo: f64, z_hi: f64, n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::InvalidGrid(format!(
                "uniform-Z grid needs at least 16 nodes, got {n}"
            )));
        }
        if !(z_lo.is_finite() && z_hi.is_finite() && z_hi > z_lo) {
            return Err(Error::InvalidGrid(format!("bad Z window [{z_lo}, {z_hi}]")));
        }
        if z_lo < zmap.representable_z_floor() {
            return Err(Error::InvalidGrid(format!(
                "Z window lower edge {z_lo} maps to unrepresentably small momenta (floor {:.3e})",
                zmap.representable_z_floor()
            )));
        }
        let dz = (z_hi - z_lo) / (n - 1) as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let z = z_lo + dz * j as f64;
            let k = zmap.k_of_z(z);
            let trap = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            nodes.push(k);
            weights.push(zmap.omega(k) * zmap.f(k) * dz * trap);
        }
        Ok(Self {
            nodes,
            weights,
            scheme: RadialScheme::UniformZ { z_lo, dz },
            zmap,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn scheme(&self) -> RadialScheme {
        self.scheme
    }

    #[inline]
    pub fn zmap(&self) -> &ZMap {
        &self.zmap
    }

    /// Z value of node j (exact for the uniform-Z scheme).
    pub fn z_at(&self, j: usize) -> f64 {
        match self.scheme {
            RadialScheme::UniformZ { z_lo, dz } => z_lo + dz * j as f64,
            RadialScheme::GaussLegendre => self.zmap.z_unchecked(self.nodes[j]),
        }
    }

    /// For uniform-Z grids: (z_lo, dz).
    pub fn uniform_z_params(&self) -> Result<(f64, f64)> {
        match self.scheme {
            RadialScheme::UniformZ { z_lo, dz } => Ok((z_lo, dz)),
            RadialScheme::GaussLegendre => Err(Error::NotUniformZ),
        }
    }

    /// Z window covered by the grid.
    pub fn z_window(&self) -> (f64, f64) {
        (self.z_at(0), self.z_at(self.len() - 1))
    }

    /// int F(k) dk over the grid span.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        sum_f64(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&k, &w)| w * f(k)),
        )
    }
}
