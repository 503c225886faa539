//! The physical Hilbert space of positive-energy solutions in the momentum
//! representation: KG inner product, wave packets, localized states, and the
//! detector-indexed detected subspace with its orthogonal projection.
//!
//! States are sampled on a product grid (radial nodes x directions on the
//! sphere) with the Lorentz-invariant measure d^3k/(2 omega). The detected
//! subspace at detector position X consists of functions of the form
//! e^{-i k.X} times a radial profile; at fixed |k| it is the one-dimensional
//! angular span of e^{-i k.X}, so the angular average against e^{+i k.X} is
//! the KG-orthogonal projection.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::{Mass, RadialGrid, RegularizationCut};
use crate::numerics::gauss::gauss_legendre;
use crate::numerics::sum::{sum_f64, ComplexAccumulator};
use crate::recipe::PacketRecipe;

const NORMALIZATION_TOL: f64 = 1e-6;

/// Quadrature on the unit sphere: product Gauss-Legendre in cos(theta) with a
/// uniform (trapezoidal) rule in phi. Weights sum to 4 pi.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularQuadrature {
    directions: Vec<[f64; 3]>,
    weights: Vec<f64>,
    n_polar: usize,
    n_azimuth: usize,
}

impl AngularQuadrature {
    pub fn new(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar == 0 || n_azimuth == 0 {
            return Err(Error::InvalidGrid("empty angular quadrature".into()));
        }
        let (mu, wmu) = gauss_legendre(n_polar);
        let dphi = 2.0 * PI / n_azimuth as f64;
        let mut directions = Vec::with_capacity(n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(n_polar * n_azimuth);
        for (m, wm) in mu.iter().zip(&wmu) {
            let s = (1.0 - m * m).max(0.0).sqrt();
            for b in 0..n_azimuth {
                let phi = dphi * b as f64;
                directions.push([s * phi.cos(), s * phi.sin(), *m]);
                weights.push(wm * dphi);
            }
        }
        Ok(Self {
            directions,
            weights,
            n_polar,
            n_azimuth,
        })
    }

    /// Order selection for integrands that are products of a plane wave of
    /// bandwidth `polar_band` (in cos theta) and azimuthal content up to
    /// `azimuth_band` harmonics.
    pub fn for_bandwidth(polar_band: f64, azimuth_band: f64) -> Result<Self> {
        let n_polar = (polar_band.ceil() as usize + 24).max(24);
        let n_azimuth = (2 * azimuth_band.ceil() as usize + 8).max(8);
        Self::new(n_polar, n_azimuth)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    #[inline]
    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn n_polar(&self) -> usize {
        self.n_polar
    }

    #[inline]
    pub fn n_azimuth(&self) -> usize {
        self.n_azimuth
    }
}

/// Product grid in momentum space: radial nodes times sphere directions.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceGrid {
    pub radial: Arc<RadialGrid>,
    pub angular: AngularQuadrature,
}

impl KSpaceGrid {
    pub fn new(radial: Arc<RadialGrid>, angular: AngularQuadrature) -> Arc<Self> {
        Arc::new(Self { radial, angular })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.radial.len() * self.angular.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Detector position and the regularization cutoff that fixes the detected
/// subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub position: [f64; 3],
    pub cut: RegularizationCut,
}

impl Detector {
    pub fn new(position: [f64; 3], cut: RegularizationCut) -> Result<Self> {
        if position.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("detector position must be finite".into()));
        }
        Ok(Self { position, cut })
    }

    pub fn distance(&self) -> f64 {
        let [x, y, z] = self.position;
        (x * x + y * y + z * z).sqrt()
    }
}

/// Positive-energy KG state sampled on a product grid. Values are indexed
/// radial-major: `values[j * n_angular + a]`.
#[derive(Debug, Clone)]
pub struct WavePacket {
    grid: Arc<KSpaceGrid>,
    values: Vec<Complex64>,
    mass: Mass,
    improper: bool,
    recipe: Option<PacketRecipe>,
    recipe_amplitude: Option<f64>,
}

impl WavePacket {
    /// Sample `f(k, nhat)` on the grid.
    pub fn from_fn<F>(grid: Arc<KSpaceGrid>, mass: Mass, f: F) -> Result<Self>
    where
        F: Fn(f64, [f64; 3]) -> Complex64 + Sync,
    {
        if (mass.value() - grid.radial.zmap().mass().value()).abs() != 0.0 {
            return Err(Error::Invalid(
                "packet mass differs from the grid's Z-map mass".into(),
            ));
        }
        let na = grid.angular.len();
        let dirs = grid.angular.directions();
        let nodes = grid.radial.nodes();
        let values: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let j = idx / na;
                let a = idx % na;
                f(nodes[j], dirs[a])
            })
            .collect();
        Ok(Self {
            grid,
            values,
            mass,
            improper: false,
            recipe: None,
            recipe_amplitude: None,
        })
    }

    #[inline]
    pub fn grid(&self) -> &Arc<KSpaceGrid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn mass(&self) -> Mass {
        self.mass
    }

    /// Whether this is a non-normalizable generalized state represented on a
    /// truncated grid (its norm depends on the cutoff).
    #[inline]
    pub fn is_improper(&self) -> bool {
        self.improper
    }

    #[inline]
    pub fn recipe(&self) -> Option<&PacketRecipe> {
        self.recipe.as_ref()
    }

    /// Overall amplitude applied to the recipe's unnormalized profile, when
    /// the packet came from a recipe.
    #[inline]
    pub fn recipe_amplitude(&self) -> Option<f64> {
        self.recipe_amplitude
    }

    /// Squared KG norm: int d^3k/(2 omega) |Phi|^2 by quadrature.
    pub fn kg_norm2(&self) -> f64 {
        let na = self.grid.angular.len();
        let wa = self.grid.angular.weights();
        let radial = &self.grid.radial;
        let per_shell: Vec<f64> = (0..radial.len())
            .into_par_iter()
            .map(|j| {
                let k = radial.nodes()[j];
                let w = radial.weights()[j];
                let meas = w * k * k / (2.0 * radial.zmap().omega(k));
                let mut acc = 0.0;
                for a in 0..na {
                    acc += wa[a] * self.values[j * na + a].norm_sqr();
                }
                meas * acc
            })
            .collect();
        sum_f64(per_shell)
    }

    /// Rescale to unit KG norm.
    pub fn normalize(mut self) -> Result<Self> {
        if self.improper {
            return Err(Error::ImproperState);
        }
        let n2 = self.kg_norm2();
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::Invalid(format!("cannot normalize: norm^2 = {n2}")));
        }
        let s = 1.0 / n2.sqrt();
        for v in &mut self.values {
            *v *= s;
        }
        if let Some(a) = self.recipe_amplitude.as_mut() {
            *a *= s;
        }
        Ok(self)
    }

    /// New packet with values `g(k, nhat, value)`; grid and mass are shared.
    pub fn map_with_k<G>(&self, g: G) -> Self
    where
        G: Fn(f64, [f64; 3], Complex64) -> Complex64 + Sync,
    {
        let na = self.grid.angular.len();
        let dirs = self.grid.angular.directions();
        let nodes = self.grid.radial.nodes();
        let values: Vec<Complex64> = (0..self.values.len())
            .into_par_iter()
            .map(|idx| {
                let j = idx / na;
                let a = idx % na;
                g(nodes[j], dirs[a], self.values[idx])
            })
            .collect();
        Self {
            grid: Arc::clone(&self.grid),
            values,
            mass: self.mass,
            improper: self.improper,
            recipe: None,
            recipe_amplitude: None,
        }
    }
}

/// Element of the detected subspace at a fixed detector: the stripped radial
/// profile Psi(k), with the e^{-i k.X} phase held through the detector field.
#[derive(Debug, Clone)]
pub struct RadialPacket {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
    detector: Detector,
    mass: Mass,
    improper: bool,
}

impl RadialPacket {
    pub fn from_fn<F>(
        grid: Arc<RadialGrid>,
        detector: Detector,
        mass: Mass,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        check_radial_consistency(&grid, &detector, mass)?;
        let values = grid.nodes().iter().map(|&k| f(k)).collect();
        Ok(Self {
            grid,
            values,
            detector,
            mass,
            improper: false,
        })
    }

    pub(crate) fn from_values(
        grid: Arc<RadialGrid>,
        detector: Detector,
        mass: Mass,
        values: Vec<Complex64>,
        improper: bool,
    ) -> Self {
        Self {
            grid,
            values,
            detector,
            mass,
            improper,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    pub fn detector(&self) -> Detector {
        self.detector
    }

    #[inline]
    pub fn mass(&self) -> Mass {
        self.mass
    }

    #[inline]
    pub fn is_improper(&self) -> bool {
        self.improper
    }

    pub(crate) fn mark_improper(mut self) -> Self {
        self.improper = true;
        self
    }

    /// Squared KG norm of the lifted state: 4 pi int k^2 dk/(2 omega) |Psi|^2.
    pub fn kg_norm2(&self) -> f64 {
        let zm = self.grid.zmap();
        sum_f64(
            self.grid
                .nodes()
                .iter()
                .zip(self.grid.weights())
                .zip(&self.values)
                .map(|((&k, &w), v)| 4.0 * PI * w * k * k / (2.0 * zm.omega(k)) * v.norm_sqr()),
        )
    }

    pub fn normalize(mut self) -> Result<Self> {
        if self.improper {
            return Err(Error::ImproperState);
        }
        let n2 = self.kg_norm2();
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::Invalid(format!("cannot normalize: norm^2 = {n2}")));
        }
        let s = 1.0 / n2.sqrt();
        for v in &mut self.values {
            *v *= s;
        }
        Ok(self)
    }

    /// KG inner product of two detected-subspace elements at the same
    /// detector: 4 pi int k^2 dk/(2 omega) a* b.
    pub fn kg_inner(&self, other: &Self) -> Result<Complex64> {
        if !compatible_radial(self, other) {
            return Err(Error::GridMismatch);
        }
        let zm = self.grid.zmap();
        let mut acc = ComplexAccumulator::new();
        for (((&k, &w), a), b) in self
            .grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .zip(&self.values)
            .zip(&other.values)
        {
            let meas = 4.0 * PI * w * k * k / (2.0 * zm.omega(k));
            acc.add(meas * a.conj() * b);
        }
        Ok(acc.value())
    }

    /// Lift back to the product grid as e^{-i k.X} Psi(k).
    pub fn lift(&self, grid: &Arc<KSpaceGrid>) -> Result<WavePacket> {
        if !Arc::ptr_eq(&self.grid, &grid.radial) && *self.grid != *grid.radial {
            return Err(Error::GridMismatch);
        }
        let x = self.detector.position;
        let values = &self.values;
        let mut packet = WavePacket::from_fn(Arc::clone(grid), self.mass, |k, nhat| {
            let kx = k * (nhat[0] * x[0] + nhat[1] * x[1] + nhat[2] * x[2]);
            Complex64::cis(-kx)
        })?;
        let na = grid.angular.len();
        packet
            .values
            .par_iter_mut()
            .enumerate()
            .for_each(|(idx, v)| {
                *v *= values[idx / na];
            });
        packet.improper = self.improper;
        Ok(packet)
    }
}

fn check_radial_consistency(grid: &RadialGrid, detector: &Detector, mass: Mass) -> Result<()> {
    if (mass.value() - grid.zmap().mass().value()).abs() != 0.0 {
        return Err(Error::Invalid(
            "packet mass differs from the grid's Z-map mass".into(),
        ));
    }
    if (detector.cut.epsilon() - grid.zmap().cut().epsilon()).abs() != 0.0 {
        return Err(Error::Invalid(
            "detector cutoff differs from the grid's Z-map cutoff".into(),
        ));
    }
    Ok(())
}

fn compatible_radial(a: &RadialPacket, b: &RadialPacket) -> bool {
    (Arc::ptr_eq(&a.grid, &b.grid) || *a.grid == *b.grid)
        && a.mass == b.mass
        && a.detector == b.detector
}

fn compatible(a: &WavePacket, b: &WavePacket) -> bool {
    (Arc::ptr_eq(&a.grid, &b.grid) || *a.grid == *b.grid) && a.mass == b.mass
}

/// KG scalar product int d^3k/(2 omega) Phi* Psi by quadrature.
pub fn kg_inner(phi: &WavePacket, psi: &WavePacket) -> Result<Complex64> {
    if !compatible(phi, psi) {
        return Err(Error::GridMismatch);
    }
    let grid = &phi.grid;
    let na = grid.angular.len();
    let wa = grid.angular.weights();
    let radial = &grid.radial;
    let per_shell: Vec<Complex64> = (0..radial.len())
        .into_par_iter()
        .map(|j| {
            let k = radial.nodes()[j];
            let w = radial.weights()[j];
            let meas = w * k * k / (2.0 * radial.zmap().omega(k));
            let mut acc = ComplexAccumulator::new();
            for a in 0..na {
                acc.add(wa[a] * phi.values[j * na + a].conj() * psi.values[j * na + a]);
            }
            acc.value() * meas
        })
        .collect();
    let mut acc = ComplexAccumulator::new();
    for s in per_shell {
        acc.add(s);
    }
    Ok(acc.value())
}

/// Gaussian packet Phi(k) ~ exp(-|k - k0|^2 / (4 sigma^2)) exp(-i k.x0),
/// normalized in the KG norm.
pub fn gaussian_packet(
    k0: [f64; 3],
    sigma: f64,
    x0: [f64; 3],
    mass: Mass,
    grid: Arc<KSpaceGrid>,
) -> Result<WavePacket> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let inv4s2 = 1.0 / (4.0 * sigma * sigma);
    let mut packet = WavePacket::from_fn(grid, mass, move |k, nhat| {
        let dx = k * nhat[0] - k0[0];
        let dy = k * nhat[1] - k0[1];
        let dz = k * nhat[2] - k0[2];
        let d2 = dx * dx + dy * dy + dz * dz;
        let kx0 = k * (nhat[0] * x0[0] + nhat[1] * x0[1] + nhat[2] * x0[2]);
        (-d2 * inv4s2).exp() * Complex64::cis(-kx0)
    })?;
    // amplitude tracks the overall scale applied to the raw
    // e^{-|k-k0|^2/(4 sigma^2)} profile; normalize() updates it
    packet.recipe_amplitude = Some(1.0);
    packet.recipe = Some(PacketRecipe::Gaussian { k0, sigma, x0 });
    packet.normalize()
}

/// Localized state at x (t = 0): (2 pi)^{-3/2} sqrt(2 omega) e^{-i k.x}.
/// Improper: its norm grows with the grid cutoff.
pub fn newton_wigner_state(x: [f64; 3], mass: Mass, grid: Arc<KSpaceGrid>) -> Result<WavePacket> {
    let zm = *grid.radial.zmap();
    let norm = (2.0 * PI).powf(-1.5);
    let mut packet = WavePacket::from_fn(grid, mass, move |k, nhat| {
        let kx = k * (nhat[0] * x[0] + nhat[1] * x[1] + nhat[2] * x[2]);
        norm * (2.0 * zm.omega(k)).sqrt() * Complex64::cis(-kx)
    })?;
    packet.improper = true;
    Ok(packet)
}

/// Probability amplitude to find the packet at position x at t = 0:
/// (2 pi)^{-3/2} int d^3k/(2 omega) e^{i k.x} sqrt(2 omega) Phi(k).
pub fn position_amplitude(packet: &WavePacket, x: [f64; 3]) -> Complex64 {
    let grid = &packet.grid;
    let na = grid.angular.len();
    let wa = grid.angular.weights();
    let dirs = grid.angular.directions();
    let radial = &grid.radial;
    let norm = (2.0 * PI).powf(-1.5);
    let per_shell: Vec<Complex64> = (0..radial.len())
        .into_par_iter()
        .map(|j| {
            let k = radial.nodes()[j];
            let w = radial.weights()[j];
            let omega = radial.zmap().omega(k);
            let meas = w * k * k / (2.0 * omega) * (2.0 * omega).sqrt();
            let mut acc = ComplexAccumulator::new();
            for a in 0..na {
                let kx = k * (dirs[a][0] * x[0] + dirs[a][1] * x[1] + dirs[a][2] * x[2]);
                acc.add(wa[a] * Complex64::cis(kx) * packet.values[j * na + a]);
            }
            acc.value() * meas
        })
        .collect();
    let mut acc = ComplexAccumulator::new();
    for s in per_shell {
        acc.add(s);
    }
    norm * acc.value()
}

/// KG-orthogonal projection onto the detected subspace at `det`:
/// Psi(k) = (1/4 pi) int dOmega e^{+i k.X} Phi(k).
pub fn detected_projection(packet: &WavePacket, det: &Detector) -> Result<RadialPacket> {
    check_radial_consistency(&packet.grid.radial, det, packet.mass)?;
    let grid = &packet.grid;
    let na = grid.angular.len();
    let wa = grid.angular.weights();
    let dirs = grid.angular.directions();
    let x = det.position;
    let values: Vec<Complex64> = (0..grid.radial.len())
        .into_par_iter()
        .map(|j| {
            let k = grid.radial.nodes()[j];
            let mut acc = ComplexAccumulator::new();
            for a in 0..na {
                let kx = k * (dirs[a][0] * x[0] + dirs[a][1] * x[1] + dirs[a][2] * x[2]);
                acc.add(wa[a] * Complex64::cis(kx) * packet.values[j * na + a]);
            }
            acc.value() / (4.0 * PI)
        })
        .collect();
    Ok(RadialPacket {
        grid: Arc::clone(&grid.radial),
        values,
        detector: *det,
        mass: packet.mass,
        improper: packet.improper,
    })
}

/// Detected-subspace element whose Z-representation h(Z) = k sqrt(f) Psi(k)
/// is a (possibly chirped) Gaussian: h = exp(-(Z-z0)^2/(4 w^2)) e^{i chirp Z}.
/// Requires a uniform-Z grid. Not normalized.
pub fn radial_gaussian_z(
    grid: Arc<RadialGrid>,
    detector: Detector,
    mass: Mass,
    z0: f64,
    width: f64,
    chirp: f64,
) -> Result<RadialPacket> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::NonPositiveSigma(width));
    }
    check_radial_consistency(&grid, &detector, mass)?;
    grid.uniform_z_params()?;
    let zm = *grid.zmap();
    let values: Vec<Complex64> = (0..grid.len())
        .map(|j| {
            let z = grid.z_at(j);
            let k = grid.nodes()[j];
            let a = k * zm.f(k).sqrt();
            let h = (-(z - z0) * (z - z0) / (4.0 * width * width)).exp();
            Complex64::cis(chirp * z) * (h / a)
        })
        .collect();
    Ok(RadialPacket {
        grid,
        values,
        detector,
        mass,
        improper: false,
    })
}

/// 1 - |P_X Phi|^2 for a normalized packet: 0 iff the packet lies in the
/// detected subspace, 1 iff it is orthogonal to it.
pub fn membership_residual(packet: &WavePacket, det: &Detector) -> Result<f64> {
    let n2 = packet.kg_norm2();
    if (n2 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::UnnormalizedPacket((n2 - 1.0).abs()));
    }
    let proj = detected_projection(packet, det)?;
    Ok(1.0 - proj.kg_norm2())
}
