//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured figure. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion report.

use std::process::Command;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use toa_kg::hilbert::{membership_residual, radial_gaussian_z, Detector};
use toa_kg::kinematics::{Mass, RadialGrid, RegularizationCut, ZMap};
use toa_kg::plan::{build_state, plan_experiment, suggest_t_window, PlanOverrides, PreparedState};
use toa_kg::recipe::PacketRecipe;
use toa_kg::spectra::{
    conditional_mean, radial_arrival_amplitude, spectrum_std, AmplitudeMethod, TGrid,
};
use toa_kg::toa_operator::{
    apply_q0_radial_with, commutator_z_check, eigenfunction_reg, hermiticity_defect,
    interior_range, nr_limit_compare, DerivativeScheme, OrderingExponent,
};
use toa_kg::verification::{
    amplitude_by_quadrature, completeness_reconstruct, kernel_inner_numeric, ordering_sweep,
    orthogonality_kernel, rel_l2_distance,
};

fn pass(n: u32, msg: &str) {
    println!("[PASS] criterion {n}: {msg}");
}

fn setup(m: f64, eps: f64, z_lo: f64, z_hi: f64, n: usize) -> (Arc<RadialGrid>, Detector, Mass) {
    let mass = Mass::new(m).unwrap();
    let cut = RegularizationCut::new(eps).unwrap();
    let zm = ZMap::new(mass, cut);
    let z_lo = z_lo.max(zm.representable_z_floor() * 0.5);
    let grid = Arc::new(RadialGrid::uniform_z(zm, z_lo, z_hi, n).unwrap());
    let det = Detector::new([0.0, 0.0, 2.0], cut).unwrap();
    (grid, det, mass)
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    sxy / sxx
}

/// Criterion 1: Hermiticity selection. On a fixed asymmetric smooth test
/// pair, defect <= 1e-8 at n = 1/2 and >= 1e-3 at n in {0, 1/4, 1}; the
/// ordering sweep has log-log slope 1 +- 0.1 in |n - 1/2| near the minimum.
#[test]
fn criterion_1_hermiticity_selection() {
    let (grid, det, mass) = setup(1.0, 0.2, -2.0, 26.0, 4096);
    let phi = radial_gaussian_z(Arc::clone(&grid), det, mass, 10.0, 1.0, 0.7).unwrap();
    let psi = radial_gaussian_z(Arc::clone(&grid), det, mass, 13.0, 1.2, -0.4).unwrap();
    let d_half = hermiticity_defect(OrderingExponent(0.5), &phi, &psi, true).unwrap();
    assert!(d_half <= 1e-8, "defect at n=1/2: {d_half}");
    let mut worst_wrong = f64::INFINITY;
    for n in [0.0, 0.25, 1.0] {
        let d = hermiticity_defect(OrderingExponent(n), &phi, &psi, true).unwrap();
        assert!(d >= 1e-3, "defect at n={n}: {d}");
        worst_wrong = worst_wrong.min(d);
    }
    let ns: Vec<f64> = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
        .iter()
        .flat_map(|d| [0.5 - d, 0.5 + d])
        .collect();
    let sweep = ordering_sweep(&ns, &[(phi, psi)], true).unwrap();
    let slope = sweep.log_log_slope().unwrap();
    assert!((slope - 1.0).abs() <= 0.1, "sweep slope {slope}");
    pass(
        1,
        &format!(
            "hermiticity defect {d_half:.2e} at n=1/2, >= {worst_wrong:.2e} at n in {{0,1/4,1}}, slope {slope:.3}"
        ),
    );
}

/// Criterion 2: eigen relation. The regularized operator applied to its
/// regularized eigenfunctions returns T psi with interior max relative error
/// <= 1e-6 over 200 random (T, m, eps) triples.
#[test]
fn criterion_2_eigen_relation() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x45494745);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let t: f64 = rng.gen_range(-20.0..20.0);
        let m = 10f64.powf(rng.gen_range(-1.0..0.7)); // 0.1 .. 5
        let eps = 10f64.powf(rng.gen_range(-1.7..-0.3)); // 0.02 .. 0.5
        let (grid, det, mass) = setup(m, eps, -1.0, 24.0, 4096);
        let psi = eigenfunction_reg(t, det, mass, Arc::clone(&grid)).unwrap();
        let q_psi = apply_q0_radial_with(
            &psi,
            OrderingExponent::hermitian(),
            true,
            DerivativeScheme::FiniteDifference8,
            t.abs().max(1.0),
        )
        .unwrap();
        let (lo, hi) = interior_range(grid.len());
        let scale = t.abs().max(1.0);
        for j in lo..hi {
            let err = (q_psi.values()[j] - t * psi.values()[j]).norm()
                / (psi.values()[j].norm() * scale);
            worst = worst.max(err);
        }
        assert!(
            worst <= 1e-6,
            "eigen relation failed at (T={t}, m={m}, eps={eps}): {worst:.3e}"
        );
    }
    pass(2, &format!("eigen relation max interior rel err {worst:.2e} over 200 triples"));
}

/// Criterion 3: orthogonality. Numeric (psi_T, psi_T') matches the truncated
/// analytic kernel to 1e-8 absolute over 100+ random pairs across three
/// (m, eps) settings; the coincidence peak grows linearly in the Z window.
#[test]
fn criterion_3_orthogonality() {
    let mut rng = ChaCha12Rng::seed_from_u64(0x4f525448);
    let mut worst = 0.0f64;
    let mut pairs_total = 0usize;
    for (m, eps) in [(1.0, 0.2), (0.5, 0.05), (2.0, 0.35)] {
        let mass = Mass::new(m).unwrap();
        let cut = RegularizationCut::new(eps).unwrap();
        let zm = ZMap::new(mass, cut);
        let det = Detector::new([0.4, -1.0, 2.0], cut).unwrap();
        let z_lo = (-2.0f64).max(zm.representable_z_floor() * 0.5);
        let window = (z_lo, 24.0);
        let t_list: Vec<f64> = (0..14).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let report = orthogonality_kernel(&t_list, &det, mass, window, 1e-10).unwrap();
        pairs_total += report.pairs.len();
        worst = worst.max(report.max_deviation);
        assert!(
            report.max_deviation <= 1e-8,
            "kernel deviation {:.3e} at (m={m}, eps={eps})",
            report.max_deviation
        );
    }
    assert!(pairs_total >= 100);
    // delta behavior: peak at coincidence grows linearly with the window
    let zm = ZMap::new(Mass::new(1.0).unwrap(), RegularizationCut::new(0.2).unwrap());
    let peak = |span: f64| kernel_inner_numeric(&zm, (-1.0, span - 1.0), 0.0, 1e-11).re;
    let (p1, p2, p4) = (peak(6.0), peak(12.0), peak(24.0));
    assert!((p2 / p1 - 2.0).abs() <= 1e-6, "{}", p2 / p1);
    assert!((p4 / p1 - 4.0).abs() <= 1e-6, "{}", p4 / p1);
    pass(
        3,
        &format!("kernel deviation {worst:.2e} over {pairs_total} pairs; peak linear in window"),
    );
}

/// Criterion 4: completeness. Reconstruction of a Gaussian-in-Z
/// detected-subspace packet with relative L2 error <= 1e-4 at N = 2^14,
/// decreasing as the T window doubles.
#[test]
fn criterion_4_completeness() {
    let (grid, det, mass) = setup(1.0, 0.2, -2.0, 22.0, 1 << 14);
    let g = radial_gaussian_z(grid, det, mass, 10.0, 1.0, 0.0)
        .unwrap()
        .normalize()
        .unwrap();
    let mut errs = Vec::new();
    for half in [3.1f64, 6.2, 12.4] {
        let samples = (2.0 * half / 0.009).ceil() as usize;
        let t = TGrid::from_window(-half, half, samples).unwrap();
        let r = completeness_reconstruct(&g, &t, AmplitudeMethod::Fft).unwrap();
        errs.push(r.rel_l2_error);
    }
    assert!(errs[0] <= 1e-4, "reconstruction error {errs:?}");
    assert!(errs[1] < errs[0], "not decreasing: {errs:?}");
    assert!(errs[2] <= (errs[1] * 1.1).max(1e-11), "{errs:?}");
    pass(
        4,
        &format!(
            "reconstruction error {:.2e} at N=2^14, decreasing to {:.2e} as the window doubles",
            errs[0],
            errs[2]
        ),
    );
}

/// Criterion 5: commutator. Max residual of [Q0, Z] psi + i psi <= 1e-6 over
/// 20 random smooth Z profiles.
#[test]
fn criterion_5_commutator() {
    let (grid, det, mass) = setup(1.0, 0.2, -1.0, 18.0, 4096);
    let mut rng = ChaCha12Rng::seed_from_u64(0x434f4d4d);
    let (z_lo, z_hi) = grid.z_window();
    let span = z_hi - z_lo;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c = z_lo + span * rng.gen_range(0.3..0.7);
        let w = span * rng.gen_range(0.02..0.05);
        let chirp = rng.gen_range(-1.0..1.0);
        let psi = radial_gaussian_z(Arc::clone(&grid), det, mass, c, w, chirp).unwrap();
        worst = worst.max(commutator_z_check(&psi).unwrap());
    }
    assert!(worst <= 1e-6, "commutator residual {worst:.3e}");
    pass(5, &format!("[Q0,Z] residual max {worst:.2e} over 20 profiles"));
}

/// Criterion 6: probability normalization. P^(X) = 1 +- 1e-4 for normalized
/// detected-subspace packets; P^(X) = 1 - membership_residual +- 1e-6 for 50
/// random generic packets (Parseval identity over two independent routes).
#[test]
fn criterion_6_probability_normalization() {
    // (a) subspace packets
    let (grid, det, mass) = setup(1.0, 0.2, -2.0, 22.0, 8192);
    let mut worst_unit = 0.0f64;
    for (z0, w, chirp) in [
        (6.0, 0.8, 0.0),
        (8.0, 1.0, 0.5),
        (10.0, 1.3, -0.3),
        (12.0, 0.9, 1.0),
        (9.0, 1.1, 0.2),
    ] {
        let g = radial_gaussian_z(Arc::clone(&grid), det, mass, z0, w, chirp)
            .unwrap()
            .normalize()
            .unwrap();
        let half = 3.6 / w + chirp.abs();
        let t = TGrid::from_window(chirp - half, chirp + half, 1024).unwrap();
        let spec = radial_arrival_amplitude(&g, &t, AmplitudeMethod::Fft).unwrap();
        assert!(
            spec.edge_ratio() <= 1e-8,
            "window edge ratio {:.3e}",
            spec.edge_ratio()
        );
        worst_unit = worst_unit.max((spec.total() - 1.0).abs());
    }
    assert!(worst_unit <= 1e-4, "subspace packet total off by {worst_unit:.3e}");

    // (b) generic packets: spectrum-total route vs projection-norm route
    let mut rng = ChaCha12Rng::seed_from_u64(0x50415253);
    let mass = Mass::new(1.0).unwrap();
    let cut = RegularizationCut::new(0.01).unwrap();
    let zmap = ZMap::new(mass, cut);
    let mut worst_parseval = 0.0f64;
    for i in 0..50 {
        let k0n = rng.gen_range(1.0..1.4);
        let costh = rng.gen_range(-1.0f64..1.0);
        let sinth = (1.0 - costh * costh).sqrt();
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let k0 = [
            k0n * sinth * phi.cos(),
            k0n * sinth * phi.sin(),
            k0n * costh,
        ];
        let sigma = rng.gen_range(0.1..0.125 * k0n);
        let x0 = [
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-0.3..0.3),
        ];
        let xn = rng.gen_range(1.5..3.0);
        let costh_x = rng.gen_range(-1.0f64..1.0);
        let sinth_x = (1.0 - costh_x * costh_x).sqrt();
        let phi_x = rng.gen_range(0.0..std::f64::consts::TAU);
        let xdet = [
            xn * sinth_x * phi_x.cos(),
            xn * sinth_x * phi_x.sin(),
            xn * costh_x,
        ];
        let recipe = PacketRecipe::Gaussian { k0, sigma, x0 };
        let ov = PlanOverrides {
            radial_n: 768,
            ..Default::default()
        };
        let plan = plan_experiment(&recipe, mass, cut, xdet, &ov).unwrap();
        let state = build_state(&plan).unwrap();
        let packet = match &state {
            PreparedState::Product(p) => p,
            PreparedState::Radial(_) => unreachable!(),
        };
        let residual = membership_residual(packet, &plan.detector).unwrap();
        let (t_lo, t_hi) = suggest_t_window(&zmap, &recipe, xdet, None);
        let t = TGrid::from_window(t_lo, t_hi, 1536).unwrap();
        let spec = state
            .spectrum(&plan.detector, &t, AmplitudeMethod::Fft)
            .unwrap();
        assert!(
            spec.edge_ratio() <= 1e-8,
            "case {i}: spectrum edge ratio {:.3e}",
            spec.edge_ratio()
        );
        let dev = (spec.total() - (1.0 - residual)).abs();
        assert!(
            dev <= 1e-6,
            "case {i}: P {} vs 1 - residual {} (dev {dev:.3e})",
            spec.total(),
            1.0 - residual
        );
        worst_parseval = worst_parseval.max(dev);
    }
    pass(
        6,
        &format!(
            "subspace totals within {worst_unit:.2e} of 1; Parseval two-route deviation <= {worst_parseval:.2e} over 50 packets"
        ),
    );
}

/// Criterion 7: non-relativistic limit. Deviation from the
/// quadratic-dispersion phase <= 1e-3 at m=100, kmax=1, T=1, with measured
/// log-log scaling slope 4 +- 0.1 in kmax.
#[test]
fn criterion_7_nonrelativistic_limit() {
    let mass = Mass::new(100.0).unwrap();
    let dev = nr_limit_compare(1.0, 0.5, mass, 1.0).unwrap();
    assert!(dev <= 1e-3, "deviation {dev:.3e}");
    let mut pts = Vec::new();
    for i in 0..6 {
        let kmax = 10f64.powf(-(i as f64) / 5.0);
        let d = nr_limit_compare(1.0, 0.5, mass, kmax).unwrap();
        pts.push((kmax.ln(), d.ln()));
    }
    let slope = fit_slope(&pts);
    assert!((slope - 4.0).abs() <= 0.1, "slope {slope}");
    pass(
        7,
        &format!("NR phase deviation {dev:.2e} at kmax=1, m=100, T=1; scaling slope {slope:.3}"),
    );
}

/// Criterion 8: classical limit. For on-axis Gaussians with sigma/k0 = 0.05,
/// the conditional mean is within 2 spectrum standard deviations of
/// |X| omega(k0)/k0 across k0/m in {0.1, 1, 5} and m|X| in {10, 100};
/// off-cone packets are detected with small but strictly positive
/// probability.
#[test]
fn criterion_8_classical_limit() {
    let m = 1.0;
    let mass = Mass::new(m).unwrap();
    let cut = RegularizationCut::new(1e-3).unwrap();
    let zmap = ZMap::new(mass, cut);
    let mut report = String::new();
    for k0n in [0.1, 1.0, 5.0] {
        for xn in [10.0, 100.0] {
            let sigma = 0.05 * k0n;
            let recipe = PacketRecipe::Gaussian {
                k0: [k0n, 0.0, 0.0],
                sigma,
                x0: [0.0; 3],
            };
            let xdet = [xn, 0.0, 0.0];
            let ov = PlanOverrides {
                radial_n: 1024,
                ..Default::default()
            };
            let plan = plan_experiment(&recipe, mass, cut, xdet, &ov).unwrap();
            let state = build_state(&plan).unwrap();
            let (t_lo, t_hi) = suggest_t_window(&zmap, &recipe, xdet, None);
            let t = TGrid::from_window(t_lo, t_hi, 2048).unwrap();
            let spec = state
                .spectrum(&plan.detector, &t, AmplitudeMethod::Fft)
                .unwrap();
            assert!(
                spec.edge_ratio() <= 1e-8,
                "k0={k0n} X={xn}: edge ratio {:.3e}",
                spec.edge_ratio()
            );
            let total = spec.total();
            assert!(total > 0.0 && total <= 1.0 + 1e-6, "P = {total}");
            let mean = conditional_mean(&spec).unwrap();
            let std = spectrum_std(&spec).unwrap();
            let t_classical = xn * k0n.hypot(m) / k0n;
            let n_sigma = (mean - t_classical).abs() / std;
            assert!(
                n_sigma <= 2.0,
                "k0/m={k0n} m|X|={xn}: mean {mean} vs classical {t_classical}, {n_sigma:.2} sigma"
            );
            report.push_str(&format!("{n_sigma:.2} "));
        }
    }
    // off-cone: mean momentum tilted ~5 angular widths away from the
    // detector direction, with the transverse miss distance X sin(tilt) = 20
    // well beyond the packet's transverse width 1/(2 sigma) = 5, so the
    // flight cone misses the detector
    let k0n: f64 = 1.0;
    let sigma: f64 = 0.1;
    let tilt: f64 = 0.52;
    let recipe = PacketRecipe::Gaussian {
        k0: [k0n * tilt.cos(), 0.0, k0n * tilt.sin()],
        sigma,
        x0: [0.0; 3],
    };
    let xdet = [40.0, 0.0, 0.0];
    let ov = PlanOverrides {
        radial_n: 1024,
        ..Default::default()
    };
    let plan = plan_experiment(&recipe, mass, cut, xdet, &ov).unwrap();
    let state = build_state(&plan).unwrap();
    let (t_lo, t_hi) = suggest_t_window(&zmap, &recipe, xdet, None);
    let t = TGrid::from_window(t_lo, t_hi, 2048).unwrap();
    let spec = state
        .spectrum(&plan.detector, &t, AmplitudeMethod::Fft)
        .unwrap();
    let p_off = spec.total();
    // the aimed counterpart for comparison
    let aimed = PacketRecipe::Gaussian {
        k0: [k0n, 0.0, 0.0],
        sigma,
        x0: [0.0; 3],
    };
    let plan_a = plan_experiment(&aimed, mass, cut, xdet, &ov).unwrap();
    let state_a = build_state(&plan_a).unwrap();
    let spec_a = state_a
        .spectrum(&plan_a.detector, &t, AmplitudeMethod::Fft)
        .unwrap();
    let p_aimed = spec_a.total();
    assert!(
        p_off > 0.0 && p_off < 1e-2 * p_aimed,
        "off-cone P {p_off:.3e} vs aimed {p_aimed:.3e}"
    );
    pass(
        8,
        &format!(
            "classical deviations {report}sigma (all <= 2); off-cone P {p_off:.1e} << aimed {p_aimed:.1e}, strictly positive"
        ),
    );
}

/// On-axis Gaussian projection in closed form: the angular integral reduces
/// to sinh(c)/c with c = k k0/(2 sigma^2) + i k (X - x0), written stably.
fn on_axis_projection(
    amplitude: f64,
    k0: f64,
    sigma: f64,
    x_minus_x0: f64,
) -> impl Fn(f64) -> Complex64 {
    move |k: f64| {
        let s2 = sigma * sigma;
        let c = Complex64::new(k * k0 / (2.0 * s2), k * x_minus_x0);
        let em = (-(k - k0) * (k - k0) / (4.0 * s2)).exp();
        let ep = (-(k + k0) * (k + k0) / (4.0 * s2)).exp();
        let phase = Complex64::cis(k * x_minus_x0);
        amplitude * (em * phase - ep * phase.conj()) / (2.0 * c)
    }
}

/// Criterion 9: path equivalence. FFT-path and quadrature-path arrival
/// amplitudes agree to 1e-6 relative L2 on 10 canned configurations; the
/// chirp-Z machinery matches the naive direct sum; CLI determinism and the
/// exit-status contract hold end to end.
#[test]
fn criterion_9_path_equivalence() {
    let mut worst_oracle = 0.0f64;
    let mut worst_machinery = 0.0f64;

    // five detected-subspace Gaussians with analytic h(Z)
    for (z0, w, chirp, m, eps) in [
        (10.0, 1.0, 0.0, 1.0, 0.2),
        (8.0, 0.7, 0.8, 1.0, 0.2),
        (12.0, 1.5, -0.5, 0.5, 0.1),
        (9.0, 0.9, 1.5, 2.0, 0.3),
        (11.0, 1.2, -1.0, 1.0, 0.05),
    ] {
        let (grid, det, mass) = setup(m, eps, -2.0, 22.0, 8192);
        let g = radial_gaussian_z(Arc::clone(&grid), det, mass, z0, w, chirp).unwrap();
        let t = TGrid::from_window(chirp - 9.0, chirp + 9.0, 257).unwrap();
        let fft = radial_arrival_amplitude(&g, &t, AmplitudeMethod::Fft).unwrap();
        let direct = radial_arrival_amplitude(&g, &t, AmplitudeMethod::DirectQuadrature).unwrap();
        worst_machinery =
            worst_machinery.max(rel_l2_distance(fft.amplitude(), direct.amplitude()));
        let h = move |z: f64| {
            Complex64::cis(chirp * z) * (-(z - z0) * (z - z0) / (4.0 * w * w)).exp()
        };
        let oracle = amplitude_by_quadrature(h, grid.z_window(), &t.values(), 1e-11);
        let d = rel_l2_distance(fft.amplitude(), &oracle);
        assert!(d <= 1e-6, "Z-Gaussian case (z0={z0}): rel L2 {d:.3e}");
        worst_oracle = worst_oracle.max(d);
    }

    // five on-axis Gaussians: numeric projection + transform against the
    // closed-form projection fed through the continuum quadrature oracle
    for (m, eps, k0n, sigma, xn, x0n) in [
        (1.0, 0.01, 1.2, 0.12, 6.0, 0.0),
        (1.0, 0.01, 1.0, 0.1, 4.0, 0.5),
        (0.5, 0.02, 1.4, 0.14, 5.0, 0.0),
        (2.0, 0.01, 1.2, 0.12, 3.0, -0.4),
        (1.0, 0.005, 0.9, 0.09, 8.0, 0.0),
    ] {
        let mass = Mass::new(m).unwrap();
        let cut = RegularizationCut::new(eps).unwrap();
        let zmap = ZMap::new(mass, cut);
        let recipe = PacketRecipe::Gaussian {
            k0: [0.0, 0.0, k0n],
            sigma,
            x0: [0.0, 0.0, x0n],
        };
        let xdet = [0.0, 0.0, xn];
        let ov = PlanOverrides {
            radial_n: 2048,
            ..Default::default()
        };
        let plan = plan_experiment(&recipe, mass, cut, xdet, &ov).unwrap();
        let state = build_state(&plan).unwrap();
        let packet = match &state {
            PreparedState::Product(p) => p,
            PreparedState::Radial(_) => unreachable!(),
        };
        let amplitude = packet.recipe_amplitude().unwrap();
        let g = toa_kg::hilbert::detected_projection(packet, &plan.detector).unwrap();
        let (t_lo, t_hi) = suggest_t_window(&zmap, &recipe, xdet, None);
        let t = TGrid::from_window(t_lo, t_hi, 257).unwrap();
        let spec = radial_arrival_amplitude(&g, &t, AmplitudeMethod::Fft).unwrap();
        let proj = on_axis_projection(amplitude, k0n, sigma, xn - x0n);
        let h = move |z: f64| {
            let k = zmap.k_of_z(z);
            k * zmap.f(k).sqrt() * proj(k)
        };
        let oracle = amplitude_by_quadrature(h, plan.radial.z_window(), &t.values(), 1e-12);
        let d = rel_l2_distance(spec.amplitude(), &oracle);
        assert!(d <= 1e-6, "on-axis case (k0={k0n}, X={xn}): rel L2 {d:.3e}");
        worst_oracle = worst_oracle.max(d);
    }
    assert!(worst_machinery <= 1e-10, "chirp-Z vs direct {worst_machinery:.3e}");

    // CLI determinism and exit-status contract, end to end
    let bin = env!("CARGO_BIN_EXE_toa-kg");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{
  "schema_version": 1,
  "mass": 1.0,
  "epsilon": 0.2,
  "detector": { "position": [0.0, 0.0, 2.0] },
  "packet": { "type": "radial-gaussian-in-z", "z0": 10.0, "width": 1.0 },
  "grids": { "radial_n": 2048, "z_window": [-2.0, 22.0], "t_window": [-12.0, 12.0], "t_samples": 256 },
  "seed": 3
}"#,
    )
    .unwrap();
    let (o1, o2) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&o1, &o2] {
        let r = Command::new(bin)
            .args([
                "spectrum",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(
        std::fs::read(o1.join("spectrum.csv")).unwrap(),
        std::fs::read(o2.join("spectrum.csv")).unwrap(),
        "CLI outputs not byte-identical"
    );
    // exit 1: tolerance failure (forced wrong ordering)
    let bad = dir.path().join("bad_n.json");
    std::fs::write(
        &bad,
        std::fs::read_to_string(&cfg)
            .unwrap()
            .replace("\"seed\": 3", "\"seed\": 3, \"ordering_exponent\": 0.0"),
    )
    .unwrap();
    let r = Command::new(bin)
        .args([
            "verify",
            "--config",
            bad.to_str().unwrap(),
            "--out",
            dir.path().join("v").to_str().unwrap(),
            "--suite",
            "hermiticity",
        ])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
    // exit 2: config error
    let missing = dir.path().join("missing.json");
    std::fs::write(&missing, r#"{"schema_version": 1}"#).unwrap();
    let r = Command::new(bin)
        .args(["spectrum", "--config", missing.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));

    pass(
        9,
        &format!(
            "FFT vs continuum-quadrature rel L2 <= {worst_oracle:.2e} on 10 canned cases \
             (chirp-Z vs direct {worst_machinery:.1e}); CLI determinism and exit codes 0/1/2 verified"
        ),
    );
}
