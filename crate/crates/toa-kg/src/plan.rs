//! Experiment planning: turns a packet recipe plus detector into concrete
//! grids. Chooses the Z window from the packet's support, rotates the frame
//! so the dominant axis is the polar axis (plane waves about the polar axis
//! carry no azimuthal content), and sizes the angular quadrature from the
//! bandwidths of the plane-wave and packet factors.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{
    gaussian_packet, radial_gaussian_z, AngularQuadrature, Detector, KSpaceGrid, RadialPacket,
    WavePacket,
};
use crate::kinematics::{Mass, RadialGrid, RegularizationCut, ZMap};
use crate::recipe::PacketRecipe;
use crate::spectra::{
    arrival_amplitude, radial_arrival_amplitude, AmplitudeMethod, ArrivalSpectrum, TGrid,
};

/// Caps and overrides applied during planning.
#[derive(Debug, Clone)]
pub struct PlanOverrides {
    pub radial_n: usize,
    pub z_window: Option<(f64, f64)>,
    pub angular_polar: Option<usize>,
    pub angular_azimuth: Option<usize>,
    /// Upper bound on radial_n * n_polar * n_azimuth.
    pub max_product_cells: usize,
}

impl Default for PlanOverrides {
    fn default() -> Self {
        Self {
            radial_n: 16_384,
            z_window: None,
            angular_polar: None,
            angular_azimuth: None,
            max_product_cells: 1 << 24,
        }
    }
}

/// Planned grids for one experiment, in the internal (rotated) frame.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub zmap: ZMap,
    pub mass: Mass,
    pub radial: Arc<RadialGrid>,
    /// Present for recipes living on the full product grid.
    pub angular: Option<AngularQuadrature>,
    /// Detector in the internal frame.
    pub detector: Detector,
    /// Rotation from the user frame to the internal frame.
    pub rotation: [[f64; 3]; 3],
    pub recipe: PacketRecipe,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn apply3(r: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
        r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
        r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
    ]
}

const IDENTITY3: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Rotation taking the unit direction of `axis` to +z (Rodrigues form).
fn rotation_to_z(axis: [f64; 3]) -> [[f64; 3]; 3] {
    let n = norm3(axis);
    if n == 0.0 {
        return IDENTITY3;
    }
    let u = [axis[0] / n, axis[1] / n, axis[2] / n];
    let c = u[2];
    if c > 1.0 - 1e-14 {
        return IDENTITY3;
    }
    if c < -1.0 + 1e-14 {
        return [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]];
    }
    // v = u x z = (u_y, -u_x, 0)
    let v = [u[1], -u[0], 0.0];
    let s2 = v[0] * v[0] + v[1] * v[1];
    let f = (1.0 - c) / s2;
    [
        [1.0 + f * (-v[1] * v[1]), f * v[0] * v[1], v[1]],
        [f * v[0] * v[1], 1.0 + f * (-v[0] * v[0]), -v[0]],
        [-v[1], v[0], c],
    ]
}

/// Z window containing the radial support of a Gaussian recipe, extended
/// below the cut until the Z-representation envelope has decayed.
pub fn auto_z_window(zmap: &ZMap, k0n: f64, sigma: f64) -> Result<(f64, f64)> {
    let k_hi = k0n + 12.0 * sigma;
    let z_hi = zmap.z_of_k(k_hi)?;
    let k_lo_env = k0n - 10.0 * sigma;
    let floor = zmap.representable_z_floor() * 0.95;
    if k_lo_env > zmap.cut().epsilon() {
        return Ok((zmap.z_of_k(k_lo_env)?, z_hi));
    }
    // the support reaches the cut region: probe the envelope of
    // h(Z) = k sqrt(f) e^{-(k-k0)^2/(4 sigma^2)} downward until decayed
    let h_env = |z: f64| {
        let k = zmap.k_of_z(z);
        let d = k - k0n;
        k * zmap.f(k).sqrt() * (-d * d / (4.0 * sigma * sigma)).exp()
    };
    let z_ref = zmap.z_unchecked(k0n.max(zmap.cut().epsilon()));
    let peak = h_env(z_ref);
    let span0 = (z_hi - z_ref).max(1e-6);
    let z_bottom = (z_ref - 100.0 * span0).max(floor);
    let nprobe = 4096usize;
    let mut cut_at = z_bottom;
    for i in 0..nprobe {
        let z = z_bottom + (z_ref - z_bottom) * i as f64 / nprobe as f64;
        if h_env(z) > 1e-10 * peak {
            cut_at = z;
            break;
        }
    }
    let step = (z_ref - z_bottom) / nprobe as f64;
    Ok(((cut_at - step).max(floor), z_hi))
}

/// Plan grids for a recipe at the given detector.
pub fn plan_experiment(
    recipe: &PacketRecipe,
    mass: Mass,
    cut: RegularizationCut,
    detector_position: [f64; 3],
    ov: &PlanOverrides,
) -> Result<ExperimentPlan> {
    let zmap = ZMap::new(mass, cut);
    match recipe {
        PacketRecipe::RadialGaussianInZ { z0, width } => {
            if !(*width > 0.0) {
                return Err(Error::NonPositiveSigma(*width));
            }
            let (z_lo, z_hi) = ov.z_window.unwrap_or((
                (z0 - 14.0 * width).max(zmap.representable_z_floor() * 0.95),
                z0 + 14.0 * width,
            ));
            let radial = Arc::new(RadialGrid::uniform_z(zmap, z_lo, z_hi, ov.radial_n)?);
            let detector = Detector::new(detector_position, cut)?;
            Ok(ExperimentPlan {
                zmap,
                mass,
                radial,
                angular: None,
                detector,
                rotation: IDENTITY3,
                recipe: recipe.clone(),
            })
        }
        PacketRecipe::Gaussian { k0, sigma, x0 } => {
            if !(*sigma > 0.0) {
                return Err(Error::NonPositiveSigma(*sigma));
            }
            let k0n = norm3(*k0);
            if !(k0n + *sigma > 0.0) {
                return Err(Error::Invalid("Gaussian recipe has no support".into()));
            }
            let xn = norm3(detector_position);
            let (z_lo, z_hi) = match ov.z_window {
                Some(w) => w,
                None => auto_z_window(&zmap, k0n, *sigma)?,
            };
            let radial = Arc::new(RadialGrid::uniform_z(zmap, z_lo, z_hi, ov.radial_n)?);
            let kmax = *radial.nodes().last().expect("non-empty grid");
            // envelope-weighted momentum: beyond k0 + 7 sigma the radial
            // envelope is below 2e-11, so higher angular content there never
            // contributes at the working tolerances
            let k_band = kmax.min(k0n + 7.0 * sigma);

            // frame choice: plane waves about the polar axis carry no
            // azimuthal content, so aligning the polar axis with either the
            // detector or the packet momentum removes the corresponding
            // factor's phi dependence; pick whichever needs fewer cells
            let orders_for = |axis: [f64; 3]| -> (usize, usize, [[f64; 3]; 3]) {
                let rotation = rotation_to_z(axis);
                let k0_r = apply3(&rotation, *k0);
                let x0_r = apply3(&rotation, *x0);
                let det_r = apply3(&rotation, detector_position);
                let a_packet = k_band * k0n / (2.0 * sigma * sigma);
                let band_polar = k_band * (xn + norm3(x0_r)) + a_packet;
                let k0_perp = (k0_r[0] * k0_r[0] + k0_r[1] * k0_r[1]).sqrt();
                let x0_perp = (x0_r[0] * x0_r[0] + x0_r[1] * x0_r[1]).sqrt();
                let det_perp = (det_r[0] * det_r[0] + det_r[1] * det_r[1]).sqrt();
                let band_azim = if k0n > 0.0 {
                    (k0_perp / k0n) * a_packet + k_band * (x0_perp + det_perp)
                } else {
                    k_band * (x0_perp + det_perp)
                };
                let n_polar = ov
                    .angular_polar
                    .unwrap_or((band_polar.ceil() as usize) + 24);
                let n_azimuth = ov
                    .angular_azimuth
                    .unwrap_or(2 * (band_azim.ceil() as usize) + 8);
                (n_polar, n_azimuth, rotation)
            };
            let mut candidates: Vec<[f64; 3]> = Vec::new();
            if xn > 0.0 {
                candidates.push(detector_position);
            }
            if k0n > 0.0 {
                candidates.push(*k0);
            }
            if candidates.is_empty() {
                candidates.push([0.0, 0.0, 1.0]);
            }
            let (n_polar, n_azimuth, rotation) = candidates
                .into_iter()
                .map(orders_for)
                .min_by_key(|(np, na, _)| np.saturating_mul(*na))
                .expect("non-empty candidates");
            let det_r = apply3(&rotation, detector_position);
            let cells = ov
                .radial_n
                .saturating_mul(n_polar)
                .saturating_mul(n_azimuth);
            if cells > ov.max_product_cells {
                return Err(Error::InvalidGrid(format!(
                    "product grid of {cells} cells exceeds the cap {} \
                     (radial_n {} x polar {n_polar} x azimuth {n_azimuth}); \
                     reduce the resolution or override the angular orders",
                    ov.max_product_cells, ov.radial_n
                )));
            }
            let angular = AngularQuadrature::new(n_polar, n_azimuth)?;
            let detector = Detector::new(det_r, cut)?;
            Ok(ExperimentPlan {
                zmap,
                mass,
                radial,
                angular: Some(angular),
                detector,
                rotation,
                recipe: recipe.clone(),
            })
        }
    }
}

/// A state prepared from a recipe: either a full product-grid packet or a
/// detected-subspace radial profile.
#[derive(Debug, Clone)]
pub enum PreparedState {
    Product(WavePacket),
    Radial(RadialPacket),
}

impl PreparedState {
    pub fn kg_norm2(&self) -> f64 {
        match self {
            PreparedState::Product(p) => p.kg_norm2(),
            PreparedState::Radial(r) => r.kg_norm2(),
        }
    }

    /// Arrival spectrum at the plan's detector.
    pub fn spectrum(
        &self,
        det: &Detector,
        t: &TGrid,
        method: AmplitudeMethod,
    ) -> Result<ArrivalSpectrum> {
        match self {
            PreparedState::Product(p) => arrival_amplitude(p, det, t, method),
            PreparedState::Radial(r) => {
                if r.detector() != *det {
                    return Err(Error::GridMismatch);
                }
                radial_arrival_amplitude(r, t, method)
            }
        }
    }
}

/// Sample the plan's recipe onto its grids, normalized.
pub fn build_state(plan: &ExperimentPlan) -> Result<PreparedState> {
    match &plan.recipe {
        PacketRecipe::RadialGaussianInZ { z0, width } => {
            let g = radial_gaussian_z(
                Arc::clone(&plan.radial),
                plan.detector,
                plan.mass,
                *z0,
                *width,
                0.0,
            )?
            .normalize()?;
            Ok(PreparedState::Radial(g))
        }
        PacketRecipe::Gaussian { k0, sigma, x0 } => {
            let angular = plan
                .angular
                .clone()
                .ok_or_else(|| Error::Invalid("product recipe without angular grid".into()))?;
            let grid = KSpaceGrid::new(Arc::clone(&plan.radial), angular);
            let k0_r = apply3(&plan.rotation, *k0);
            let x0_r = apply3(&plan.rotation, *x0);
            let p = gaussian_packet(k0_r, *sigma, x0_r, plan.mass, grid)?;
            Ok(PreparedState::Product(p))
        }
    }
}

/// Heuristic T window for a recipe: covers the classical arrival time of the
/// packet center plus transit and dispersion spreads with generous margins.
pub fn suggest_t_window(
    zmap: &ZMap,
    recipe: &PacketRecipe,
    detector_position: [f64; 3],
    x0_user: Option<[f64; 3]>,
) -> (f64, f64) {
    match recipe {
        PacketRecipe::RadialGaussianInZ { width, .. } => {
            // |amp|^2 ~ e^{-2 w^2 T^2}
            let half = 6.0 / (2.0 * width) + 1.0;
            (-half, half)
        }
        PacketRecipe::Gaussian { k0, sigma, x0 } => {
            let x0v = x0_user.unwrap_or(*x0);
            let k0n = norm3(*k0).max(1e-6);
            let m = zmap.mass().value();
            let w0 = k0n.hypot(m);
            let d = {
                let dv = [
                    detector_position[0] - x0v[0],
                    detector_position[1] - x0v[1],
                    detector_position[2] - x0v[2],
                ];
                norm3(dv)
            };
            let t_c = d * w0 / k0n;
            let sigma_z = (k0n / w0) * sigma;
            let transit = 1.0 / (2.0 * sigma_z);
            let dispersion = d * m * m * sigma / (w0 * k0n * k0n);
            let half = 12.0 * transit + 8.0 * dispersion + 0.3 * t_c;
            (t_c - half, t_c + half)
        }
    }
}
