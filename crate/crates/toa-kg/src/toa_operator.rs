//! The time-of-arrival operator in one and three dimensions.
//!
//! On the detected subspace the 3-D operator reduces to a one-dimensional
//! differential operator in the modulus k. Written with the conjugate
//! coordinate Z and the gauge W(k) it is
//!
//! ```text
//! Q0 = W^{-1} (-i d/dZ) W,      W = k^{n+1/2} sqrt(f(k))   (regularized)
//! Q0 = W^{-1} (-i d/domega) W,  W = k^n                    (raw)
//! ```
//!
//! so eigenfunctions are plane waves e^{iZT} (resp. e^{i omega T}) divided by
//! the gauge. The discrete derivative acts on a uniform-Z grid; with the flat
//! KG measure in Z (the uniform-Z grid's weights), centered stencils are
//! summation-by-parts antisymmetric, which is what makes the n = 1/2 ordering
//! Hermitian at the discrete level too.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::hilbert::{Detector, RadialPacket};
use crate::kinematics::{Mass, RadialGrid, ZMap};
use crate::numerics::fd::UniformDerivative;

/// Operator-ordering exponent; n = 1/2 is the unique Hermitian ordering in
/// three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingExponent(pub f64);

impl OrderingExponent {
    pub fn hermitian() -> Self {
        Self(0.5)
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for OrderingExponent {
    fn default() -> Self {
        Self::hermitian()
    }
}

/// 1-D normalization factor alpha = 1/sqrt(pi): delta-normalizes the 1-D
/// eigenfunctions in omega on the half-line k > 0.
pub const ALPHA_1D: f64 = 0.564_189_583_547_756_3; // 1/sqrt(pi)

/// How the d/dZ stencil is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeScheme {
    /// 8th-order centered finite differences (one-sided at the edges).
    /// Robust for improper plane-wave content at any frequency.
    FiniteDifference8,
    /// FFT differentiation; exact for window-periodic or decayed profiles.
    SpectralZ,
}

/// Frequency used by the stencil self-test when the caller does not know the
/// content of its profiles.
pub const DEFAULT_PROBE_FREQUENCY: f64 = 5.0;
const STENCIL_SELF_TEST_TOL: f64 = 1e-6;

/// A d/dZ stencil bound to a uniform-Z grid, self-tested on a plane wave at
/// construction.
#[derive(Debug)]
pub struct RadialOperatorStencil {
    scheme: DerivativeScheme,
    n: usize,
    dz: f64,
    fd: Option<UniformDerivative>,
}

impl RadialOperatorStencil {
    /// Build and self-test: the stencil applied to e^{i Z t_probe} must
    /// reproduce the derivative to 1e-6 relative away from the grid edges.
    pub fn new(grid: &RadialGrid, scheme: DerivativeScheme, t_probe: f64) -> Result<Self> {
        let (_, dz) = grid.uniform_z_params()?;
        let n = grid.len();
        let fd = match scheme {
            DerivativeScheme::FiniteDifference8 => Some(UniformDerivative::order8(dz)),
            DerivativeScheme::SpectralZ => None,
        };
        let stencil = Self { scheme, n, dz, fd };
        // spectral differentiation is only exact for window-commensurate
        // frequencies; snap the probe accordingly
        let probe = match scheme {
            DerivativeScheme::FiniteDifference8 => t_probe,
            DerivativeScheme::SpectralZ => {
                let fundamental = 2.0 * PI / (n as f64 * dz);
                (t_probe / fundamental).round().max(1.0) * fundamental
            }
        };
        let wave: Vec<Complex64> = (0..n).map(|j| Complex64::cis(probe * j as f64 * dz)).collect();
        let dw = stencil.differentiate(&wave);
        let (lo, hi) = interior_range(n);
        let mut err = 0.0f64;
        for j in lo..hi {
            let exact = Complex64::new(0.0, probe) * wave[j];
            err = err.max((dw[j] - exact).norm() / probe.abs().max(1.0));
        }
        if err > STENCIL_SELF_TEST_TOL {
            return Err(Error::GridTooCoarse {
                err,
                tol: STENCIL_SELF_TEST_TOL,
                probe,
            });
        }
        Ok(stencil)
    }

    /// d/dZ of samples on the uniform-Z grid.
    pub fn differentiate(&self, u: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(u.len(), self.n);
        match self.scheme {
            DerivativeScheme::FiniteDifference8 => self.fd.as_ref().expect("fd stencil").apply(u),
            DerivativeScheme::SpectralZ => {
                let n = self.n;
                let mut buf = u.to_vec();
                let mut planner = FftPlanner::new();
                planner.plan_fft_forward(n).process(&mut buf);
                let dxi = 2.0 * PI / (n as f64 * self.dz);
                for (l, v) in buf.iter_mut().enumerate() {
                    let freq = if 2 * l < n {
                        l as f64
                    } else if 2 * l == n {
                        0.0 // drop the unmatched Nyquist mode for odd derivatives
                    } else {
                        l as f64 - n as f64
                    };
                    *v *= Complex64::new(0.0, freq * dxi);
                }
                planner.plan_fft_inverse(n).process(&mut buf);
                let s = 1.0 / n as f64;
                for v in &mut buf {
                    *v *= s;
                }
                buf
            }
        }
    }
}

/// Index range of the interior 80% of the grid, where operator checks are
/// evaluated (differentiation stencils degrade at the boundary and improper
/// eigenfunctions do not decay).
pub fn interior_range(n: usize) -> (usize, usize) {
    (n / 10, n - n / 10)
}

/// Gauge function W(k) of the chosen ordering and regularization.
fn gauge(zmap: &ZMap, n: f64, regularized: bool, k: f64) -> f64 {
    if regularized {
        k.powf(n + 0.5) * zmap.f(k).sqrt()
    } else {
        k.powf(n)
    }
}

/// Apply the time-of-arrival operator to a detected-subspace radial profile,
/// with the phase e^{-i k.X} already stripped (the packet's detector field
/// holds it). Default stencil: 8th-order finite differences at the default
/// probe frequency.
pub fn apply_q0_radial(
    psi: &RadialPacket,
    n: OrderingExponent,
    regularized: bool,
) -> Result<RadialPacket> {
    apply_q0_radial_with(
        psi,
        n,
        regularized,
        DerivativeScheme::FiniteDifference8,
        DEFAULT_PROBE_FREQUENCY,
    )
}

/// As [`apply_q0_radial`] with explicit scheme and self-test probe frequency.
pub fn apply_q0_radial_with(
    psi: &RadialPacket,
    n: OrderingExponent,
    regularized: bool,
    scheme: DerivativeScheme,
    t_probe: f64,
) -> Result<RadialPacket> {
    let grid = psi.grid();
    let stencil = RadialOperatorStencil::new(grid, scheme, t_probe)?;
    let zm = grid.zmap();
    let nv = n.value();
    let u: Vec<Complex64> = grid
        .nodes()
        .iter()
        .zip(psi.values())
        .map(|(&k, v)| gauge(zm, nv, regularized, k) * v)
        .collect();
    let du = stencil.differentiate(&u);
    let minus_i = Complex64::new(0.0, -1.0);
    let values: Vec<Complex64> = grid
        .nodes()
        .iter()
        .zip(du)
        .map(|(&k, d)| {
            // regularized: coordinate is Z; raw: coordinate is omega,
            // d/domega = (dZ/domega) d/dZ = (1/(k f)) d/dZ
            let jac = if regularized { 1.0 } else { 1.0 / (k * zm.f(k)) };
            minus_i * d * jac / gauge(zm, nv, regularized, k)
        })
        .collect();
    Ok(RadialPacket::from_values(
        Arc::clone(grid),
        psi.detector(),
        psi.mass(),
        values,
        psi.is_improper(),
    ))
}

/// |<phi, Q0 psi> - <Q0 phi, psi>| / (|phi||Q0 psi| + |Q0 phi||psi|), with the
/// KG radial measure. Near zero iff n = 1/2.
pub fn hermiticity_defect(
    n: OrderingExponent,
    phi: &RadialPacket,
    psi: &RadialPacket,
    regularized: bool,
) -> Result<f64> {
    let q_psi = apply_q0_radial(psi, n, regularized)?;
    let q_phi = apply_q0_radial(phi, n, regularized)?;
    let forward = phi.kg_inner(&q_psi)?;
    let backward = q_phi.kg_inner(psi)?;
    let num = (forward - backward).norm();
    let denom = phi.kg_norm2().sqrt() * q_psi.kg_norm2().sqrt()
        + q_phi.kg_norm2().sqrt() * psi.kg_norm2().sqrt();
    if denom == 0.0 {
        return Err(Error::Invalid("hermiticity defect of zero states".into()));
    }
    Ok(num / denom)
}

/// The sesquilinear asymmetry <phi,Q0 psi> - <Q0 phi,psi> itself (the defect
/// numerator), for comparison against the integration-by-parts residual
/// 2 pi i (1 - 2n) int k f phi* psi dk of the regularized operator.
pub fn hermiticity_asymmetry(
    n: OrderingExponent,
    phi: &RadialPacket,
    psi: &RadialPacket,
    regularized: bool,
) -> Result<Complex64> {
    let q_psi = apply_q0_radial(psi, n, regularized)?;
    let q_phi = apply_q0_radial(phi, n, regularized)?;
    Ok(phi.kg_inner(&q_psi)? - q_phi.kg_inner(psi)?)
}

/// Max-norm of ( Q0 (Z psi) - Z (Q0 psi) + i psi ) / |psi|_inf over the
/// interior of the grid, with the regularized n = 1/2 operator. Near zero:
/// [Q0, Z] = -i.
pub fn commutator_z_check(psi: &RadialPacket) -> Result<f64> {
    let grid = psi.grid();
    grid.uniform_z_params()?;
    let z_vals: Vec<f64> = (0..grid.len()).map(|j| grid.z_at(j)).collect();
    let z_psi = RadialPacket::from_values(
        Arc::clone(grid),
        psi.detector(),
        psi.mass(),
        psi.values()
            .iter()
            .zip(&z_vals)
            .map(|(v, &z)| v * z)
            .collect(),
        psi.is_improper(),
    );
    let n = OrderingExponent::hermitian();
    let q_zpsi = apply_q0_radial(&z_psi, n, true)?;
    let q_psi = apply_q0_radial(psi, n, true)?;
    let i = Complex64::new(0.0, 1.0);
    let (lo, hi) = interior_range(grid.len());
    let mut max_res = 0.0f64;
    let mut max_psi = 0.0f64;
    for j in lo..hi {
        let r = q_zpsi.values()[j] - z_vals[j] * q_psi.values()[j] + i * psi.values()[j];
        max_res = max_res.max(r.norm());
        max_psi = max_psi.max(psi.values()[j].norm());
    }
    if max_psi == 0.0 {
        return Err(Error::Invalid("commutator check of a zero state".into()));
    }
    Ok(max_res / max_psi)
}

/// Generalized eigenfunction parameters plus the evaluation rule.
#[derive(Debug, Clone, Copy)]
pub struct ToAEigenfunction {
    pub t: f64,
    pub detector: Detector,
    pub ordering: OrderingExponent,
    pub regularized: bool,
    pub mass: Mass,
}

impl ToAEigenfunction {
    /// Radial profile at momentum k (the e^{-i k.X} phase is carried by the
    /// detector field, not sampled here).
    pub fn radial_value(&self, zmap: &ZMap, k: f64) -> Complex64 {
        let n = self.ordering.value();
        if self.regularized {
            let a = gauge(zmap, n, true, k);
            Complex64::cis(zmap.z_unchecked(k) * self.t) / (2.0 * PI * a)
        } else {
            Complex64::cis(zmap.omega(k) * self.t) / (2.0 * PI * k.powf(n))
        }
    }

    /// Sample on a radial grid; the result is flagged improper.
    pub fn sample(&self, grid: Arc<RadialGrid>) -> Result<RadialPacket> {
        let zm = *grid.zmap();
        let me = *self;
        Ok(
            RadialPacket::from_fn(grid, self.detector, self.mass, |k| {
                me.radial_value(&zm, k)
            })?
            .mark_improper(),
        )
    }
}

/// Unregularized eigenfunction (1/(2 pi k^n)) e^{i omega(k) T}, sampled.
pub fn eigenfunction_raw(
    t: f64,
    det: Detector,
    n: OrderingExponent,
    mass: Mass,
    grid: Arc<RadialGrid>,
) -> Result<RadialPacket> {
    ToAEigenfunction {
        t,
        detector: det,
        ordering: n,
        regularized: false,
        mass,
    }
    .sample(grid)
}

/// Regularized eigenfunction (1/(2 pi)) e^{i Z(k) T} / (k sqrt(f)), at the
/// Hermitian ordering n = 1/2, sampled.
pub fn eigenfunction_reg(
    t: f64,
    det: Detector,
    mass: Mass,
    grid: Arc<RadialGrid>,
) -> Result<RadialPacket> {
    eigenfunction_reg_n(t, det, OrderingExponent::hermitian(), mass, grid)
}

/// Regularized eigenfunction at arbitrary ordering exponent.
pub fn eigenfunction_reg_n(
    t: f64,
    det: Detector,
    n: OrderingExponent,
    mass: Mass,
    grid: Arc<RadialGrid>,
) -> Result<RadialPacket> {
    ToAEigenfunction {
        t,
        detector: det,
        ordering: n,
        regularized: true,
        mass,
    }
    .sample(grid)
}

/// Uniform-in-omega grid on the k > 0 half-line, for the 1-D operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaGrid {
    k: Vec<f64>,
    omega: Vec<f64>,
    d_omega: f64,
    mass: Mass,
}

impl OmegaGrid {
    pub fn new(mass: Mass, k_lo: f64, k_hi: f64, n: usize) -> Result<Self> {
        if !(k_lo > 0.0 && k_hi > k_lo) {
            return Err(Error::InvalidGrid(format!(
                "bad 1-D momentum range [{k_lo}, {k_hi}]"
            )));
        }
        if n < 16 {
            return Err(Error::InvalidGrid("1-D grid needs at least 16 nodes".into()));
        }
        let m = mass.value();
        let w_lo = k_lo.hypot(m);
        let w_hi = k_hi.hypot(m);
        let d_omega = (w_hi - w_lo) / (n - 1) as f64;
        let omega: Vec<f64> = (0..n).map(|j| w_lo + d_omega * j as f64).collect();
        let k = omega
            .iter()
            .map(|&w| ((w - m) * (w + m)).max(0.0).sqrt().max(k_lo * 1e-12))
            .collect();
        Ok(Self {
            k,
            omega,
            d_omega,
            mass,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.k.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    #[inline]
    pub fn momenta(&self) -> &[f64] {
        &self.k
    }

    #[inline]
    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    #[inline]
    pub fn mass(&self) -> Mass {
        self.mass
    }
}

/// Apply the 1-D time-of-arrival operator at detector coordinate X to a
/// momentum-space function on the k > 0 half-line. In omega variables the
/// operator is k^{1/2} (-i d/domega) k^{-1/2}, conjugated by e^{-ikX}.
pub fn q0_1d_apply(psi: &[Complex64], grid: &OmegaGrid, x: f64) -> Result<Vec<Complex64>> {
    if psi.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let d = UniformDerivative::order8(grid.d_omega);
    let chi: Vec<Complex64> = psi
        .iter()
        .zip(grid.momenta())
        .map(|(v, &k)| v * Complex64::cis(k * x) / k.sqrt())
        .collect();
    let dchi = d.apply(&chi);
    let minus_i = Complex64::new(0.0, -1.0);
    Ok(dchi
        .iter()
        .zip(grid.momenta())
        .map(|(dv, &k)| minus_i * dv * k.sqrt() * Complex64::cis(-k * x))
        .collect())
}

/// 1-D eigenfunction alpha sqrt(k) e^{i(omega T - k X)} on the half-line.
pub fn eigenfunction_1d(t: f64, x: f64, grid: &OmegaGrid) -> Vec<Complex64> {
    grid.momenta()
        .iter()
        .zip(grid.omegas())
        .map(|(&k, &w)| ALPHA_1D * k.sqrt() * Complex64::cis(w * t - k * x))
        .collect()
}

/// Max deviation over k in (0, kmax] between the phase of
/// e^{-imT} x (relativistic eigenfunction) and the quadratic-dispersion
/// phase e^{i k^2 T / 2m}. Requires kmax << m (rejects kmax >= m/2).
pub fn nr_limit_compare(t: f64, _x: f64, mass: Mass, kmax: f64) -> Result<f64> {
    let m = mass.value();
    if !(m > 0.0) {
        return Err(Error::InvalidMass(m));
    }
    if kmax >= 0.5 * m {
        return Err(Error::RegimeViolated {
            kmax,
            limit: 0.5 * m,
        });
    }
    // the e^{-ikX} factor and the alpha sqrt(k) profile are common to both
    // sides; the deviation is that of the dispersion phases alone
    let n = 2001;
    let mut max_dev = 0.0f64;
    for i in 1..=n {
        let k = kmax * i as f64 / n as f64;
        let w = k.hypot(m);
        let rel = Complex64::cis((w - m) * t);
        let nr = Complex64::cis(k * k * t / (2.0 * m));
        max_dev = max_dev.max((rel - nr).norm());
    }
    Ok(max_dev)
}
