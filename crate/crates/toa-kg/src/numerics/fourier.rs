//! Uniform-grid phase sums  X_l = sum_j x_j exp(sign * i * s_j * t_l)  for
//! uniform source grid s_j = s0 + j*ds and uniform target grid t_l = t0 + l*dt.
//!
//! The fast path is a chirp-Z (Bluestein) factorization over rustfft, which
//! imposes no relation between ds, dt and the lengths, so arbitrary uniform
//! target grids are evaluated exactly as the naive sum would. The naive sum
//! is kept as an independent cross-check path.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::numerics::sum::ComplexAccumulator;

/// Uniform source/target grid description for a phase sum.
#[derive(Debug, Clone, Copy)]
pub struct PhaseSumSpec {
    pub s0: f64,
    pub ds: f64,
    pub t0: f64,
    pub dt: f64,
    pub n_out: usize,
    /// +1.0 or -1.0 sign of the exponent
    pub sign: f64,
}

/// Chirp-Z evaluation of the phase sum.
pub fn phase_sum_czt(x: &[Complex64], spec: &PhaseSumSpec) -> Vec<Complex64> {
    let n = x.len();
    let m = spec.n_out;
    if n == 0 || m == 0 {
        return vec![Complex64::default(); m];
    }
    let sgn = spec.sign.signum();
    let theta = spec.ds * spec.dt;

    // a_j = x_j e^{sgn i j ds t0} e^{sgn i theta j^2/2}
    let mut l = (n + m - 1).next_power_of_two();
    if l < 32 {
        l = 32;
    }
    let mut a = vec![Complex64::default(); l];
    for (j, &xj) in x.iter().enumerate() {
        let jf = j as f64;
        let phase = sgn * (jf * spec.ds * spec.t0 + 0.5 * theta * jf * jf);
        a[j] = xj * Complex64::cis(phase);
    }
    // b wrapped: b[u] = e^{-sgn i theta u^2 / 2} for u in [0, m),
    //            b[l-u] = same for u in (0, n)
    let mut b = vec![Complex64::default(); l];
    let chirp = |u: usize| {
        let uf = u as f64;
        Complex64::cis(-sgn * 0.5 * theta * uf * uf)
    };
    for (u, slot) in b.iter_mut().enumerate().take(m) {
        *slot = chirp(u);
    }
    for u in 1..n {
        b[l - u] = chirp(u);
    }

    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(l);
    let inv = planner.plan_fft_inverse(l);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (ai, bi) in a.iter_mut().zip(&b) {
        *ai *= bi;
    }
    inv.process(&mut a);
    let scale = 1.0 / l as f64;

    (0..m)
        .map(|li| {
            let lf = li as f64;
            let t_l = spec.t0 + lf * spec.dt;
            let post = sgn * (spec.s0 * t_l + 0.5 * theta * lf * lf);
            a[li] * scale * Complex64::cis(post)
        })
        .collect()
}

/// Naive O(N*M) evaluation of the same sum, with compensated accumulation.
pub fn phase_sum_direct(x: &[Complex64], spec: &PhaseSumSpec) -> Vec<Complex64> {
    let sgn = spec.sign.signum();
    (0..spec.n_out)
        .into_par_iter()
        .map(|li| {
            let t_l = spec.t0 + li as f64 * spec.dt;
            let mut acc = ComplexAccumulator::new();
            for (j, &xj) in x.iter().enumerate() {
                let s_j = spec.s0 + j as f64 * spec.ds;
                acc.add(xj * Complex64::cis(sgn * s_j * t_l));
            }
            acc.value()
        })
        .collect()
}
