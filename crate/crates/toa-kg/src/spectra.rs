//! Arrival-time amplitudes <T,X|Phi>, detection probabilities, the
//! conditional mean arrival time, the classical baseline, and the interval
//! (projector) algebra.
//!
//! Pipeline for the amplitude: (1) project onto the detected subspace to get
//! the radial profile g(k); (2) change variables to Z, where the amplitude is
//! the Fourier sum  amp(T) = int h(Z) e^{-i Z T} dZ  with h = k sqrt(f) g;
//! (3) evaluate on the uniform T grid by a chirp-Z transform, with the naive
//! direct sum available as an independent cross-check path. The detection
//! probability is then Parseval-dual to the KG norm of the projection.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{detected_projection, Detector, RadialPacket, WavePacket};
use crate::kinematics::Mass;
use crate::numerics::fourier::{phase_sum_czt, phase_sum_direct, PhaseSumSpec};
use crate::numerics::sum::sum_f64;

const EDGE_DECAY_LIMIT: f64 = 1e-8;
const NORMALIZATION_TOL: f64 = 1e-6;

/// Uniform grid of arrival times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TGrid {
    t0: f64,
    dt: f64,
    n: usize,
}

impl TGrid {
    pub fn from_window(t_lo: f64, t_hi: f64, samples: usize) -> Result<Self> {
        if !(t_hi > t_lo) || samples < 8 {
            return Err(Error::Invalid(format!(
                "bad T grid: window [{t_lo}, {t_hi}], {samples} samples"
            )));
        }
        Ok(Self {
            t0: t_lo,
            dt: (t_hi - t_lo) / (samples - 1) as f64,
            n: samples,
        })
    }

    /// Build from explicit samples, rejecting non-uniform spacing.
    pub fn from_samples(ts: &[f64]) -> Result<Self> {
        if ts.len() < 8 {
            return Err(Error::Invalid("T grid needs at least 8 samples".into()));
        }
        let dt = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::NonUniformTGrid(f64::INFINITY));
        }
        let mut dev = 0.0f64;
        for (l, &t) in ts.iter().enumerate() {
            dev = dev.max((t - (ts[0] + dt * l as f64)).abs());
        }
        if dev > 1e-9 * dt.abs() * ts.len() as f64 {
            return Err(Error::NonUniformTGrid(dev));
        }
        Ok(Self {
            t0: ts[0],
            dt,
            n: ts.len(),
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn at(&self, l: usize) -> f64 {
        self.t0 + self.dt * l as f64
    }

    #[inline]
    pub fn window(&self) -> (f64, f64) {
        (self.t0, self.at(self.n - 1))
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|l| self.at(l)).collect()
    }
}

/// Which evaluation path computes the Fourier sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeMethod {
    /// Chirp-Z transform over FFTs (fast path).
    Fft,
    /// Naive direct oscillatory sum (cross-check path).
    DirectQuadrature,
}

/// Arrival amplitude sampled on a T grid, with derived probabilities.
#[derive(Debug, Clone)]
pub struct ArrivalSpectrum {
    t: TGrid,
    amplitude: Vec<Complex64>,
    density: Vec<f64>,
    detector: Detector,
    mass: Mass,
    total: f64,
    z_window: (f64, f64),
    diagnostics: Vec<String>,
}

impl ArrivalSpectrum {
    #[inline]
    pub fn t_grid(&self) -> TGrid {
        self.t
    }

    #[inline]
    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    #[inline]
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    #[inline]
    pub fn detector(&self) -> Detector {
        self.detector
    }

    #[inline]
    pub fn mass(&self) -> Mass {
        self.mass
    }

    /// P^(X): the density integrated over the sampled window.
    #[inline]
    pub fn total(&self) -> f64 {
        self.total
    }

    #[inline]
    pub fn z_window(&self) -> (f64, f64) {
        self.z_window
    }

    /// Intrinsic arrival-time resolution 2 pi / (Z window span): features
    /// finer than this are not resolved by the truncated Z support.
    pub fn t_resolution(&self) -> f64 {
        2.0 * PI / (self.z_window.1 - self.z_window.0)
    }

    #[inline]
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    /// Largest density value.
    pub fn peak_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Ratio of the worse edge density to the peak.
    pub fn edge_ratio(&self) -> f64 {
        let peak = self.peak_density();
        if peak == 0.0 {
            return 0.0;
        }
        self.density[0].max(self.density[self.n_last()]) / peak
    }

    fn n_last(&self) -> usize {
        self.density.len() - 1
    }

    /// Integral of the piecewise-linear density from the window start to t.
    fn cumulative(&self, t: f64) -> f64 {
        let (lo, _) = self.t.window();
        let s = (t - lo) / self.t.dt;
        let cell = (s.floor() as usize).min(self.n_last().saturating_sub(1));
        let frac = s - cell as f64;
        let mut acc = sum_f64(
            (0..cell).map(|l| 0.5 * (self.density[l] + self.density[l + 1]) * self.t.dt),
        );
        let d0 = self.density[cell];
        let d1 = self.density[cell + 1];
        let dt_part = frac * self.t.dt;
        acc += (d0 + 0.5 * (d1 - d0) * frac) * dt_part;
        acc
    }

    /// Serialize to CSV: `#`-prefixed metadata comments, then
    /// T, Re(amp), Im(amp), density rows.
    pub fn write_csv<W: Write>(&self, mut w: W, extra_meta: &[(String, String)]) -> std::io::Result<()> {
        writeln!(w, "# toa-kg arrival spectrum")?;
        writeln!(w, "# mass = {:.17e}", self.mass.value())?;
        writeln!(w, "# epsilon = {:.17e}", self.detector.cut.epsilon())?;
        writeln!(
            w,
            "# detector = {:.17e} {:.17e} {:.17e}",
            self.detector.position[0], self.detector.position[1], self.detector.position[2]
        )?;
        writeln!(
            w,
            "# z_window = {:.17e} {:.17e}",
            self.z_window.0, self.z_window.1
        )?;
        writeln!(w, "# t_resolution = {:.17e}", self.t_resolution())?;
        writeln!(w, "# total = {:.17e}", self.total)?;
        for (k, v) in extra_meta {
            writeln!(w, "# {k} = {v}")?;
        }
        for d in &self.diagnostics {
            writeln!(w, "# diagnostic: {d}")?;
        }
        writeln!(w, "T,re_amp,im_amp,density")?;
        for l in 0..self.t.len() {
            writeln!(
                w,
                "{:.17e},{:.17e},{:.17e},{:.17e}",
                self.t.at(l),
                self.amplitude[l].re,
                self.amplitude[l].im,
                self.density[l]
            )?;
        }
        Ok(())
    }
}

/// Amplitude of a detected-subspace radial profile on a T grid.
///
/// amp(T) = int_{Z-}^{Z+} h(Z) e^{-iZT} dZ with h = k sqrt(f) g, evaluated by
/// the flat-Z trapezoid and the chosen Fourier path.
pub fn radial_arrival_amplitude(
    g: &RadialPacket,
    t: &TGrid,
    method: AmplitudeMethod,
) -> Result<ArrivalSpectrum> {
    let grid = g.grid();
    let (z_lo, dz) = grid.uniform_z_params()?;
    let zm = grid.zmap();
    let n = grid.len();
    let mut h = Vec::with_capacity(n);
    let mut h_max = 0.0f64;
    for j in 0..n {
        let k = grid.nodes()[j];
        let a = k * zm.f(k).sqrt();
        let hj = a * g.values()[j];
        h_max = h_max.max(hj.norm());
        let trap = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
        h.push(hj * (dz * trap));
    }
    let mut diagnostics = Vec::new();
    if h_max > 0.0 {
        let edge = (h[0].norm() * 2.0 / dz).max(h[n - 1].norm() * 2.0 / dz);
        if edge > EDGE_DECAY_LIMIT * h_max {
            diagnostics.push(format!(
                "Z window too small: |h| at the edges is {:.3e} of its peak (limit {:.1e})",
                edge / h_max,
                EDGE_DECAY_LIMIT
            ));
        }
    }
    let spec = PhaseSumSpec {
        s0: z_lo,
        ds: dz,
        t0: t.t0,
        dt: t.dt,
        n_out: t.n,
        sign: -1.0,
    };
    let amplitude = match method {
        AmplitudeMethod::Fft => phase_sum_czt(&h, &spec),
        AmplitudeMethod::DirectQuadrature => phase_sum_direct(&h, &spec),
    };
    let density: Vec<f64> = amplitude.iter().map(|a| a.norm_sqr()).collect();
    let total = sum_f64((0..t.n).map(|l| {
        let trap = if l == 0 || l == t.n - 1 { 0.5 } else { 1.0 };
        density[l] * t.dt * trap
    }));
    let z_hi = z_lo + dz * (n - 1) as f64;
    Ok(ArrivalSpectrum {
        t: *t,
        amplitude,
        density,
        detector: g.detector(),
        mass: g.mass(),
        total,
        z_window: (z_lo, z_hi),
        diagnostics,
    })
}

/// Amplitude <T,X|Phi> of a normalized packet: projection onto the detected
/// subspace followed by the Z-side Fourier sum.
pub fn arrival_amplitude(
    packet: &WavePacket,
    det: &Detector,
    t: &TGrid,
    method: AmplitudeMethod,
) -> Result<ArrivalSpectrum> {
    let n2 = packet.kg_norm2();
    if (n2 - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::UnnormalizedPacket((n2 - 1.0).abs()));
    }
    let g = detected_projection(packet, det)?;
    radial_arrival_amplitude(&g, t, method)
}

/// Probability of arrival inside [t1, t2] (piecewise-linear density).
pub fn prob_interval(spec: &ArrivalSpectrum, t1: f64, t2: f64) -> Result<f64> {
    if !(t2 >= t1) {
        return Err(Error::ReversedInterval { t1, t2 });
    }
    let (lo, hi) = spec.t_grid().window();
    if t1 < lo - 1e-12 * (hi - lo) || t2 > hi + 1e-12 * (hi - lo) {
        return Err(Error::IntervalOutOfWindow { t1, t2, lo, hi });
    }
    let t1c = t1.clamp(lo, hi);
    let t2c = t2.clamp(lo, hi);
    Ok(spec.cumulative(t2c) - spec.cumulative(t1c))
}

/// Probability of ever being detected: the spectrum total over a window wide
/// enough that the density has decayed at the edges.
pub fn prob_detect(
    packet: &WavePacket,
    det: &Detector,
    t: &TGrid,
    method: AmplitudeMethod,
) -> Result<f64> {
    let spec = arrival_amplitude(packet, det, t, method)?;
    spectrum_total_checked(&spec)
}

/// As [`prob_detect`] for a detected-subspace radial profile.
pub fn prob_detect_radial(g: &RadialPacket, t: &TGrid, method: AmplitudeMethod) -> Result<f64> {
    let spec = radial_arrival_amplitude(g, t, method)?;
    spectrum_total_checked(&spec)
}

fn spectrum_total_checked(spec: &ArrivalSpectrum) -> Result<f64> {
    // a vanishing spectrum is all quadrature noise: the edge ratio carries
    // no window information there
    if spec.total() <= 1e-20 {
        return Ok(spec.total());
    }
    let edge = spec.edge_ratio();
    if edge > EDGE_DECAY_LIMIT {
        return Err(Error::WindowTooNarrow {
            edge_ratio: edge,
            limit: EDGE_DECAY_LIMIT,
        });
    }
    Ok(spec.total())
}

/// Conditional mean arrival time int T density / int density. Defined only
/// when the detection probability does not vanish.
pub fn conditional_mean(spec: &ArrivalSpectrum) -> Result<f64> {
    if spec.total() <= 1e-10 {
        return Err(Error::UndefinedConditionalMean(spec.total()));
    }
    let t = spec.t_grid();
    let num = sum_f64((0..t.len()).map(|l| {
        let trap = if l == 0 || l == t.len() - 1 { 0.5 } else { 1.0 };
        t.at(l) * spec.density()[l] * t.spacing() * trap
    }));
    Ok(num / spec.total())
}

/// Standard deviation of the arrival density over the window.
pub fn spectrum_std(spec: &ArrivalSpectrum) -> Result<f64> {
    let mean = conditional_mean(spec)?;
    let t = spec.t_grid();
    let num = sum_f64((0..t.len()).map(|l| {
        let trap = if l == 0 || l == t.len() - 1 { 0.5 } else { 1.0 };
        let d = t.at(l) - mean;
        d * d * spec.density()[l] * t.spacing() * trap
    }));
    Ok((num / spec.total()).max(0.0).sqrt())
}

/// Classical point particle: position, momentum, mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalState {
    pub q: [f64; 3],
    pub p: [f64; 3],
    pub mass: Mass,
}

/// Outcome of the classical time-of-arrival map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassicalArrival {
    At(f64),
    /// The straight-line trajectory misses the detector.
    Never,
}

/// Tolerance on the normalized transverse residual |(Q-X) ^ p| / (|Q-X||p|)
/// below which the trajectory counts as passing through X.
pub const CLASSICAL_TRANSVERSE_TOL: f64 = 1e-9;

/// Classical arrival time at X: T = omega(p) (X - Q).p / p^2, defined when
/// X lies on the trajectory; `Never` otherwise; error at p = 0.
pub fn classical_toa(state: &ClassicalState, x: [f64; 3]) -> Result<ClassicalArrival> {
    let p = state.p;
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if p2 == 0.0 {
        return Err(Error::ZeroMomentumClassical);
    }
    let d = [x[0] - state.q[0], x[1] - state.q[1], x[2] - state.q[2]];
    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    if d2 == 0.0 {
        return Ok(ClassicalArrival::At(0.0));
    }
    let cross = [
        d[1] * p[2] - d[2] * p[1],
        d[2] * p[0] - d[0] * p[2],
        d[0] * p[1] - d[1] * p[0],
    ];
    let cross2 = cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2];
    if (cross2 / (d2 * p2)).sqrt() > CLASSICAL_TRANSVERSE_TOL {
        return Ok(ClassicalArrival::Never);
    }
    let omega = p2.sqrt().hypot(state.mass.value());
    Ok(ClassicalArrival::At(
        omega * (d[0] * p[0] + d[1] * p[1] + d[2] * p[2]) / p2,
    ))
}

/// Disjoint ordered set of half-open arrival-time intervals [a, b).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    ivs: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Canonicalize: drop empty intervals, sort, merge overlaps and touching
    /// neighbours. The canonical form is unique.
    pub fn new<I: IntoIterator<Item = (f64, f64)>>(ivs: I) -> Result<Self> {
        let mut v: Vec<(f64, f64)> = ivs
            .into_iter()
            .filter(|(a, b)| b > a)
            .collect();
        if v.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::Invalid("intervals must be finite".into()));
        }
        v.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Ok(Self { ivs: out })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    #[inline]
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.ivs
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.ivs.iter().map(|(a, b)| b - a).sum()
    }

    /// Meet (and): set intersection.
    pub fn meet(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.ivs.len() && j < other.ivs.len() {
            let (a1, b1) = self.ivs[i];
            let (a2, b2) = other.ivs[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if hi > lo {
                out.push((lo, hi));
            }
            if b1 <= b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { ivs: out }
    }

    /// Join (or): set union.
    pub fn join(&self, other: &Self) -> Self {
        Self::new(self.ivs.iter().chain(other.ivs.iter()).copied())
            .expect("canonical operands are finite")
    }

    /// Complement relative to a window.
    pub fn complement(&self, window: (f64, f64)) -> Self {
        let (lo, hi) = window;
        let mut out = Vec::new();
        let mut cursor = lo;
        for &(a, b) in &self.ivs {
            if b <= lo {
                continue;
            }
            if a >= hi {
                break;
            }
            if a > cursor {
                out.push((cursor, a.min(hi)));
            }
            cursor = cursor.max(b);
        }
        if cursor < hi {
            out.push((cursor, hi));
        }
        Self { ivs: out }
    }
}

/// Probability of arrival within an interval set (sum over its components).
pub fn prob_over(spec: &ArrivalSpectrum, set: &IntervalSet) -> Result<f64> {
    let mut acc = 0.0;
    for &(a, b) in set.intervals() {
        acc += prob_interval(spec, a, b)?;
    }
    Ok(acc)
}

/// Both readings of "not arriving in the interval": the negation
/// 1 - P(interval) over the full Hilbert space, and the complement within
/// detection P^(X) - P(interval). The two differ whenever P^(X) < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonArrival {
    pub negation: f64,
    pub complement_within_detection: f64,
}

pub fn non_arrival(spec: &ArrivalSpectrum, t1: f64, t2: f64) -> Result<NonArrival> {
    let p = prob_interval(spec, t1, t2)?;
    Ok(NonArrival {
        negation: 1.0 - p,
        complement_within_detection: spec.total() - p,
    })
}
