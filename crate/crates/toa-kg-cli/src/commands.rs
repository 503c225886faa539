//! The four subcommands. Each writes CSVs plus a human-readable summary into
//! the output directory and finishes with a manifest. Exit status contract:
//! 0 success, 1 tolerance failure, 2 config/regime error.

use std::fmt::Write as FmtWrite;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use toa_kg::hilbert::{membership_residual, radial_gaussian_z, Detector, RadialPacket};
use toa_kg::kinematics::{Mass, RadialGrid, RegularizationCut, ZMap};
use toa_kg::plan::{build_state, plan_experiment, ExperimentPlan, PreparedState};
use toa_kg::recipe::PacketRecipe;
use toa_kg::spectra::{
    classical_toa, conditional_mean, spectrum_std, AmplitudeMethod, ClassicalArrival,
    ClassicalState, TGrid,
};
use toa_kg::toa_operator::nr_limit_compare;
use toa_kg::verification::{
    completeness_reconstruct, ordering_sweep, orthogonality_kernel,
};
use toa_kg::Error as CoreError;

use crate::config::ExperimentConfig;
use crate::manifest::ManifestBuilder;

/// Outcome of a command body: distinguishes tolerance failure (exit 1) from
/// success; config/regime errors travel as anyhow errors and map to exit 2.
pub enum Outcome {
    Pass,
    ToleranceFailure,
}

struct CheckTable {
    rows: Vec<(String, f64, f64, bool)>,
}

impl CheckTable {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// value must be <= tol
    fn check(&mut self, name: &str, value: f64, tol: f64) -> bool {
        let pass = value <= tol;
        self.rows.push((name.to_string(), value, tol, pass));
        pass
    }

    /// |value - target| must be <= tol
    fn check_near(&mut self, name: &str, value: f64, target: f64, tol: f64) -> bool {
        let dev = (value - target).abs();
        let pass = dev <= tol;
        self.rows
            .push((format!("{name} (|dev| from {target})"), dev, tol, pass));
        pass
    }

    fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.3)
    }

    fn render(&self, title: &str) -> String {
        let mut s = format!("# {title}\n");
        for (name, value, tol, pass) in &self.rows {
            let _ = writeln!(
                s,
                "{} = {:.6e} (tol {:.1e}) [{}]",
                name,
                value,
                tol,
                if *pass { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            s,
            "overall = {}",
            if self.all_pass() { "PASS" } else { "FAIL" }
        );
        s
    }
}

fn plan_from_config(
    cfg: &ExperimentConfig,
    resolution: Option<usize>,
) -> anyhow::Result<ExperimentPlan> {
    let mass = Mass::new(cfg.mass)?;
    let cut = RegularizationCut::new(cfg.epsilon)?;
    let ov = cfg.overrides(resolution);
    Ok(plan_experiment(
        &cfg.packet,
        mass,
        cut,
        cfg.detector.position,
        &ov,
    )?)
}

pub fn cmd_spectrum(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    out: &Path,
    resolution: Option<usize>,
) -> anyhow::Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let mut manifest = ManifestBuilder::new("spectrum", config_bytes);
    let plan = plan_from_config(cfg, resolution)?;
    let state = build_state(&plan)?;
    let [t_lo, t_hi] = cfg.grids.t_window;
    let t = TGrid::from_window(t_lo, t_hi, cfg.grids.t_samples)?;
    let spec = state.spectrum(&plan.detector, &t, AmplitudeMethod::Fft)?;
    if !spec.diagnostics().is_empty() {
        for d in spec.diagnostics() {
            eprintln!("diagnostic: {d}");
        }
        anyhow::bail!("window diagnostics raised; widen grids.z_window or the momentum support");
    }
    let edge = spec.edge_ratio();
    if edge > 1e-8 {
        anyhow::bail!(
            "T window too narrow: edge density is {edge:.3e} of the peak; widen grids.t_window"
        );
    }

    let mut csv = Vec::new();
    let extra = vec![
        ("radial_n".to_string(), format!("{}", plan.radial.len())),
        (
            "packet".to_string(),
            serde_json::to_string(&cfg.packet).unwrap_or_default(),
        ),
        ("seed".to_string(), format!("{}", cfg.seed)),
    ];
    spec.write_csv(&mut csv, &extra)?;
    manifest.emit(out, "spectrum.csv", &csv)?;

    let total = spec.total();
    let mean = conditional_mean(&spec);
    let std = spectrum_std(&spec);
    let mut summary = String::new();
    let _ = writeln!(summary, "# toa-kg spectrum summary");
    let _ = writeln!(summary, "p_detect = {total:.17e}");
    match (&mean, &std) {
        (Ok(m), Ok(s)) => {
            let _ = writeln!(summary, "conditional_mean = {m:.17e}");
            let _ = writeln!(summary, "spectrum_std = {s:.17e}");
        }
        _ => {
            let _ = writeln!(summary, "conditional_mean = undefined (no detection)");
            let _ = writeln!(summary, "spectrum_std = undefined (no detection)");
        }
    }
    let _ = writeln!(summary, "t_resolution = {:.17e}", spec.t_resolution());

    // cross-checks and the classical baseline, where they apply
    match &state {
        PreparedState::Product(p) => {
            let residual = membership_residual(p, &plan.detector)?;
            let _ = writeln!(summary, "membership_residual = {residual:.17e}");
            let _ = writeln!(
                summary,
                "parseval_abs_error = {:.17e}",
                (total - (1.0 - residual)).abs()
            );
        }
        PreparedState::Radial(g) => {
            let _ = writeln!(
                summary,
                "parseval_abs_error = {:.17e}",
                (total - g.kg_norm2()).abs()
            );
        }
    }
    if let PacketRecipe::Gaussian { k0, x0, .. } = &cfg.packet {
        let cls = ClassicalState {
            q: *x0,
            p: *k0,
            mass: plan.mass,
        };
        match classical_toa(&cls, cfg.detector.position) {
            Ok(ClassicalArrival::At(tc)) => {
                let _ = writeln!(summary, "classical_t = {tc:.17e}");
            }
            Ok(ClassicalArrival::Never) => {
                let _ = writeln!(summary, "classical_t = never (trajectory misses the detector)");
            }
            Err(_) => {
                let _ = writeln!(summary, "classical_t = undefined (zero momentum)");
            }
        }
    }
    manifest.emit(out, "summary.txt", summary.as_bytes())?;
    manifest.finish(out)?;
    Ok(Outcome::Pass)
}

/// Deterministic smooth interior test pair for the hermiticity checks.
fn hermiticity_pair(
    grid: &Arc<RadialGrid>,
    det: Detector,
    mass: Mass,
) -> anyhow::Result<(RadialPacket, RadialPacket)> {
    let (z_lo, z_hi) = grid.z_window();
    let span = z_hi - z_lo;
    let c1 = z_lo + 0.40 * span;
    let c2 = z_lo + 0.55 * span;
    let w = 0.04 * span;
    let phi = radial_gaussian_z(Arc::clone(grid), det, mass, c1, w, 0.7)?;
    let psi = radial_gaussian_z(Arc::clone(grid), det, mass, c2, 1.2 * w, -0.4)?;
    Ok((phi, psi))
}

fn verify_grid(cfg: &ExperimentConfig, resolution: Option<usize>) -> anyhow::Result<(Arc<RadialGrid>, Detector, Mass, ZMap)> {
    let mass = Mass::new(cfg.mass)?;
    let cut = RegularizationCut::new(cfg.epsilon)?;
    let zmap = ZMap::new(mass, cut);
    let z_lo = (-2.0f64).max(zmap.representable_z_floor() * 0.5);
    let z_hi = z_lo + 26.0;
    let n = resolution.unwrap_or(cfg.grids.radial_n).max(2048);
    let grid = Arc::new(RadialGrid::uniform_z(zmap, z_lo, z_hi, n)?);
    let det = Detector::new(cfg.detector.position, cut)?;
    Ok((grid, det, mass, zmap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifySuite {
    Orthogonality,
    Completeness,
    Hermiticity,
    Commutator,
    All,
}

pub fn cmd_verify(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    out: &Path,
    suite: VerifySuite,
    seed: Option<u64>,
    resolution: Option<usize>,
) -> anyhow::Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let mut manifest = ManifestBuilder::new("verify", config_bytes);
    let seed = seed.unwrap_or(cfg.seed);
    let (grid, det, mass, zmap) = verify_grid(cfg, resolution)?;
    let mut table = CheckTable::new();
    let run = |s: VerifySuite| suite == VerifySuite::All || suite == s;

    if run(VerifySuite::Orthogonality) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x6f72_7468);
        let t_list: Vec<f64> = (0..14).map(|_| rng.gen_range(-8.0..8.0)).collect();
        let (z_lo, z_hi) = grid.z_window();
        let report = orthogonality_kernel(&t_list, &det, mass, (z_lo, z_hi), 1e-10)?;
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        manifest.emit(out, "verify_orthogonality.csv", &csv)?;
        table.check("orthogonality_max_deviation", report.max_deviation, 1e-8);
        // delta behavior: coincidence peak grows linearly with the window
        let half = truncated_peak(&zmap, (z_lo, 0.5 * (z_lo + z_hi)));
        let full = truncated_peak(&zmap, (z_lo, z_hi));
        table.check_near("orthogonality_peak_window_scaling", full / half, 2.0, 1e-6);
    }

    if run(VerifySuite::Completeness) {
        let (z_lo, z_hi) = grid.z_window();
        let (z0, w) = match cfg.packet {
            PacketRecipe::RadialGaussianInZ { z0, width } => (z0, width),
            _ => (0.5 * (z_lo + z_hi), (z_hi - z_lo) / 28.0),
        };
        let g = radial_gaussian_z(Arc::clone(&grid), det, mass, z0, w, 0.0)?.normalize()?;
        let span = z_hi - z_lo;
        let dt_max = 2.0 * std::f64::consts::PI / (1.1 * span);
        let mut rows = String::from("# toa-kg completeness report\nt_half_width,rel_l2_error\n");
        let mut errs = Vec::new();
        // |amp|^2 ~ e^{-2 w^2 T^2}: half = 3.1/w just clears the 1e-8 edge
        // check while staying truncation-dominated
        for mult in [1.0, 2.0, 4.0] {
            let half = mult * 3.1 / w;
            let samples = ((2.0 * half / dt_max).ceil() as usize + 1).max(64);
            let t = TGrid::from_window(-half, half, samples)?;
            let rep = completeness_reconstruct(&g, &t, AmplitudeMethod::Fft)?;
            let _ = writeln!(rows, "{half:.17e},{:.17e}", rep.rel_l2_error);
            errs.push(rep.rel_l2_error);
        }
        manifest.emit(out, "verify_completeness.csv", rows.as_bytes())?;
        table.check("completeness_rel_l2_error", errs[0], 1e-4);
        let monotone = errs.windows(2).all(|w| w[1] <= (w[0] * 1.1).max(1e-11));
        table.check(
            "completeness_window_monotonicity",
            if monotone { 0.0 } else { 1.0 },
            0.5,
        );
    }

    if run(VerifySuite::Hermiticity) {
        let (phi, psi) = hermiticity_pair(&grid, det, mass)?;
        let sweep_ns = [0.0, 0.25, cfg.ordering_exponent, 0.5, 1.0];
        let sweep = ordering_sweep(&sweep_ns, &[(phi, psi)], true)?;
        let mut csv = Vec::new();
        sweep.write_csv(&mut csv)?;
        manifest.emit(out, "verify_sweep.csv", &csv)?;
        let at = |n: f64| {
            sweep
                .rows
                .iter()
                .find(|r| (r.n - n).abs() < 1e-12)
                .map(|r| r.defect)
                .unwrap_or(f64::NAN)
        };
        table.check(
            "hermiticity_defect_at_configured_n",
            at(cfg.ordering_exponent),
            1e-8,
        );
        for n in [0.0, 0.25, 1.0] {
            // defect must be LARGE away from n = 1/2: check the reciprocal
            table.check(
                &format!("hermiticity_inverse_defect_at_n_{n}"),
                1.0 / at(n),
                1e3,
            );
        }
        // |n - 1/2| scaling near the minimum
        let (phi, psi) = hermiticity_pair(&grid, det, mass)?;
        let ns: Vec<f64> = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1]
            .iter()
            .flat_map(|d| [0.5 - d, 0.5 + d])
            .collect();
        let slope_sweep = ordering_sweep(&ns, &[(phi, psi)], true)?;
        let slope = slope_sweep.log_log_slope().unwrap_or(f64::NAN);
        table.check_near("hermiticity_slope", slope, 1.0, 0.1);
    }

    if run(VerifySuite::Commutator) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x636f_6d6d);
        let (z_lo, z_hi) = grid.z_window();
        let span = z_hi - z_lo;
        let mut worst = 0.0f64;
        let mut rows = String::from("# toa-kg commutator report\ncenter,width,chirp,residual\n");
        for _ in 0..20 {
            let c = z_lo + span * rng.gen_range(0.3..0.7);
            let w = span * rng.gen_range(0.02..0.05);
            let chirp = rng.gen_range(-1.0..1.0);
            let psi = radial_gaussian_z(Arc::clone(&grid), det, mass, c, w, chirp)?;
            let r = toa_kg::toa_operator::commutator_z_check(&psi)?;
            let _ = writeln!(rows, "{c:.17e},{w:.17e},{chirp:.17e},{r:.17e}");
            worst = worst.max(r);
        }
        manifest.emit(out, "verify_commutator.csv", rows.as_bytes())?;
        table.check("commutator_max_residual", worst, 1e-6);
    }

    let summary = table.render("toa-kg verify summary");
    print!("{summary}");
    manifest.emit(out, "verify_summary.txt", summary.as_bytes())?;
    manifest.finish(out)?;
    Ok(if table.all_pass() {
        Outcome::Pass
    } else {
        Outcome::ToleranceFailure
    })
}

fn truncated_peak(zmap: &ZMap, window: (f64, f64)) -> f64 {
    toa_kg::verification::kernel_inner_numeric(zmap, window, 0.0, 1e-11).re
}

pub fn cmd_limits(
    cfg: &ExperimentConfig,
    config_bytes: &[u8],
    out: &Path,
    resolution: Option<usize>,
) -> anyhow::Result<Outcome> {
    std::fs::create_dir_all(out)?;
    let mut manifest = ManifestBuilder::new("limits", config_bytes);
    let mass = Mass::new(cfg.mass)?;
    let mut table = CheckTable::new();

    // non-relativistic limit: deviation table and its kmax^4 scaling
    let limits = cfg.limits.clone().unwrap_or(crate::config::LimitsConfig {
        kmax: None,
        t: 1.0,
    });
    let kmax = limits.kmax.unwrap_or(cfg.mass / 100.0);
    let t_nr = limits.t;
    let x = cfg
        .detector
        .position
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    // regime precondition surfaces as a config/regime error (exit 2)
    nr_limit_compare(t_nr, x, mass, kmax).map_err(|e| match e {
        CoreError::RegimeViolated { .. } => anyhow::anyhow!("{e}"),
        other => anyhow::anyhow!(other),
    })?;
    let mut rows = String::from("# toa-kg non-relativistic limit table\nkmax,deviation\n");
    let mut pts = Vec::new();
    for i in 0..6 {
        let k = kmax * 10f64.powf(-(i as f64) / 5.0);
        let dev = nr_limit_compare(t_nr, x, mass, k)?;
        let _ = writeln!(rows, "{k:.17e},{dev:.17e}");
        if dev > 0.0 {
            pts.push((k.ln(), dev.ln()));
        }
    }
    manifest.emit(out, "limits_nr.csv", rows.as_bytes())?;
    let dev_at_kmax = nr_limit_compare(t_nr, x, mass, kmax)?;
    // the phase Taylor remainder bound kmax^4 |T| / (8 m^3)
    let bound = kmax.powi(4) * t_nr.abs() / (8.0 * cfg.mass.powi(3));
    table.check("nr_deviation_at_kmax", dev_at_kmax, (2.0 * bound).max(1e-3));
    let slope = {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        sxy / sxx
    };
    table.check_near("nr_scaling_slope", slope, 4.0, 0.1);

    // classical comparison: conditional mean against |X| omega(k0)/k0
    if let PacketRecipe::Gaussian { k0, x0, .. } = &cfg.packet {
        let plan = plan_from_config(cfg, resolution)?;
        let state = build_state(&plan)?;
        let [t_lo, t_hi] = cfg.grids.t_window;
        let t = TGrid::from_window(t_lo, t_hi, cfg.grids.t_samples)?;
        let spec = state.spectrum(&plan.detector, &t, AmplitudeMethod::Fft)?;
        let mean = conditional_mean(&spec)?;
        let std = spectrum_std(&spec)?;
        let cls = ClassicalState {
            q: *x0,
            p: *k0,
            mass,
        };
        match classical_toa(&cls, cfg.detector.position)? {
            ClassicalArrival::At(tc) => {
                let mut rows = String::from(
                    "# toa-kg classical comparison\nconditional_mean,classical_t,spectrum_std,n_sigma\n",
                );
                let n_sigma = (mean - tc).abs() / std;
                let _ = writeln!(rows, "{mean:.17e},{tc:.17e},{std:.17e},{n_sigma:.17e}");
                manifest.emit(out, "limits_classical.csv", rows.as_bytes())?;
                table.check("classical_n_sigma", n_sigma, 2.0);
            }
            ClassicalArrival::Never => {
                anyhow::bail!(
                    "classical comparison needs an on-trajectory packet: \
                     packet.k0 must point from packet.x0 to detector.position"
                );
            }
        }
    }

    let summary = table.render("toa-kg limits summary");
    print!("{summary}");
    manifest.emit(out, "limits_summary.txt", summary.as_bytes())?;
    manifest.finish(out)?;
    Ok(if table.all_pass() {
        Outcome::Pass
    } else {
        Outcome::ToleranceFailure
    })
}

pub fn cmd_packet(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    // validated on load; print the normalized form (defaults filled in)
    let normalized = serde_json::to_string_pretty(cfg).context("serialize config")?;
    println!("{normalized}");
    Ok(Outcome::Pass)
}
