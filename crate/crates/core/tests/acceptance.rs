//! Acceptance suite: one `PASS`/`FAIL` line per criterion.
//!
//! Oracles are closed forms computed here, never values read back from the
//! library. A line may be `FAIL` and still leave the suite green only if it is
//! listed in `KNOWN_RED` and its failure is confirmed to match the documented
//! cause (a separate oracle that must hold).

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use fuzzyspec::deficiency::{deficiency_spaces, Classification, DeficiencyMethod};
use fuzzyspec::extensions::{
    extend_by_boundary, extension_with_degenerate_eigenvalue, isospinor_expansion, isospinor_ket,
    ExtensionParameter,
};
use fuzzyspec::flows::{generated_algebra_dimension, local_phase_op_with, FlowBackend};
use fuzzyspec::hilbert::{ComplexMatrix, StateVec, C64};
use fuzzyspec::ops::{
    build_beta_algebra, build_halfline_derivative, build_interval_derivative, build_matrix_model,
    random_hermitian, Backend,
};
use fuzzyspec::uncertainty::{fuzzyb_localizing_sequence, min_uncertainty, sample_gup, uncertainty_curve};

/// Lines allowed to fail, each with the cause its explanation check confirms.
const KNOWN_RED: &[(&str, &str)] = &[(
    "6b",
    "momentum cutoff P = 20 truncates the minimum to hbar*sqrt(beta)*pi/(2*atan(20)), 3.3% above hbar*sqrt(beta)",
)];

struct Line {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    /// For known-red lines: whether the documented cause was confirmed.
    explained: Option<bool>,
}

fn line(id: &'static str, title: &'static str, pass: bool, detail: String) -> Line {
    Line {
        id,
        title,
        pass,
        detail,
        explained: None,
    }
}

/// Sorted `θ + 2πn` with `|θ + 2πn| ≤ bound`.
fn twisted_spectrum(theta: f64, bound: f64) -> Vec<f64> {
    let n = (bound / (2.0 * PI)).ceil() as i64 + 1;
    let mut v: Vec<f64> = (-n..=n).map(|k| theta + 2.0 * PI * k as f64).filter(|m| m.abs() <= bound).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn phase_matrix(r: usize, theta: f64) -> ComplexMatrix {
    ComplexMatrix::identity(r).scale(C64::from_polar(1.0, theta))
}

/// `[[cos t, i sin t], [i sin t, cos t]]`, which mixes the two copies.
fn mixing(t: f64) -> ComplexMatrix {
    let (s, c) = t.sin_cos();
    ComplexMatrix::from_row_major(2, 2, &[C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0)]).unwrap()
}

fn criterion_1() -> Vec<Line> {
    let mut ok = true;
    let mut detail = Vec::new();
    for r in 1..=3 {
        let op = build_interval_derivative(r, 128, Backend::FiniteDifference).unwrap();
        let rep = deficiency_spaces(&op).unwrap();
        let good = (rep.r_plus, rep.r_minus) == (r, r) && rep.method == DeficiencyMethod::OdeNormalizability;
        ok &= good;
        detail.push(format!("interval r={r}: ({},{})", rep.r_plus, rep.r_minus));
    }
    let half = deficiency_spaces(&build_halfline_derivative(512, 16.0).unwrap()).unwrap();
    ok &= (half.r_plus, half.r_minus) == (0, 1) && half.method == DeficiencyMethod::OdeNormalizability;
    detail.push(format!("halfline: ({},{})", half.r_plus, half.r_minus));
    let full = deficiency_spaces(&build_matrix_model(&random_hermitian(8, 1), 0).unwrap()).unwrap();
    ok &= (full.r_plus, full.r_minus) == (0, 0);
    detail.push(format!("full-domain matrix: ({},{})", full.r_plus, full.r_minus));
    vec![line("1", "deficiency indices", ok, detail.join(", "))]
}

fn criterion_2() -> Vec<Line> {
    let interval = build_interval_derivative(1, 512, Backend::FiniteDifference).unwrap();
    let xi: Vec<f64> = (-5..=7).map(f64::from).collect();
    let curve = uncertainty_curve(&interval, &xi).unwrap();
    let lowest = curve.dx_min.iter().cloned().fold(f64::INFINITY, f64::min);
    let class_a = deficiency_spaces(&interval).unwrap().classification;
    let positive = curve.infeasible.is_empty() && curve.dx_min.len() == xi.len() && lowest > 0.9 * PI;

    let half = build_halfline_derivative(1024, 32.0).unwrap();
    let class_b = deficiency_spaces(&half).unwrap().classification;
    let seq = fuzzyb_localizing_sequence(&half, 6).unwrap();
    let decreasing = seq.dx_values.len() == 6 && seq.dx_values.windows(2).all(|w| w[1] < w[0]);
    vec![line(
        "2",
        "classification biconditional",
        positive && decreasing && class_a == Classification::FuzzyA && class_b == Classification::FuzzyB,
        format!(
            "interval {class_a}: min dx over {} xi = {lowest:.6} (> {:.6}); halfline {class_b}: dx {:.4} -> {:.4} over {} scales",
            xi.len(),
            0.9 * PI,
            seq.dx_values.first().unwrap(),
            seq.dx_values.last().unwrap(),
            seq.dx_values.len()
        ),
    )]
}

/// Largest distance from FD eigenvalues with `|μ| ≤ bound` to the closed form.
fn fd_spectral_error(n: usize, theta: f64, bound: f64) -> f64 {
    let op = build_interval_derivative(1, n, Backend::FiniteDifference).unwrap();
    let ext = extend_by_boundary(&op, &ExtensionParameter::phase(theta)).unwrap();
    let got: Vec<f64> = ext.physical_spectrum().unwrap().into_iter().filter(|e| e.abs() <= bound).collect();
    let want = twisted_spectrum(theta, bound);
    if got.len() != want.len() {
        return f64::INFINITY;
    }
    got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max)
}

fn criterion_3() -> Vec<Line> {
    let mut spectral_ok = true;
    let mut worst: f64 = 0.0;
    let op = build_interval_derivative(1, 256, Backend::Spectral).unwrap();
    for theta in [0.0, PI / 3.0, PI] {
        let ext = extend_by_boundary(&op, &ExtensionParameter::phase(theta)).unwrap();
        let got = ext.physical_spectrum().unwrap();
        let want = twisted_spectrum(theta, ext.window());
        if got.len() != want.len() {
            spectral_ok = false;
            continue;
        }
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    spectral_ok &= worst < 1e-8;

    // Eigenvalues up to |μ| ≤ 20 on N = 128 → 256.
    let mut ratios = Vec::new();
    for theta in [0.0, PI / 3.0, PI] {
        let coarse = fd_spectral_error(128, theta, 20.0);
        let fine = fd_spectral_error(256, theta, 20.0);
        ratios.push(coarse / fine);
    }
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    vec![line(
        "3",
        "extension spectra",
        spectral_ok && min_ratio >= 3.5,
        format!("spectral max error {worst:.2e}; FD error ratio under doubling min {min_ratio:.3}"),
    )]
}

fn criterion_4() -> Vec<Line> {
    let a = 0.25;
    let theta = 1.1;
    // u = 1, u′ = e^{iθ}, and for two copies a pair of non-commuting unitaries.
    let cases: Vec<(usize, ComplexMatrix, ComplexMatrix)> = vec![
        (1, ComplexMatrix::identity(1), phase_matrix(1, theta)),
        (2, mixing(0.4), &mixing(-0.9) * &ComplexMatrix::from_diag(&[C64::from_polar(1.0, 0.3), C64::from_polar(1.0, 2.2)])),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (r, u, up) in cases {
        let u = ExtensionParameter::new(u, "u").unwrap();
        let up = ExtensionParameter::new(up, "u'").unwrap();
        // M = 512 samples per copy makes a·M integral.
        let exact = build_interval_derivative(r, 513, Backend::Spectral).unwrap();
        let wrap = local_phase_op_with(&exact, &u, &up, a, FlowBackend::AnalyticWrap).unwrap();
        let spectral_op = build_interval_derivative(r, 512, Backend::Spectral).unwrap();
        let spec = local_phase_op_with(&spectral_op, &u, &up, a, FlowBackend::SpectralExponential).unwrap();
        // Independent phase oracle: (u′)⁻¹u from the inputs.
        let want = &up.u().adjoint() * u.u();
        let phase_ok = (&wrap.phase - &want).max_abs() < 1e-14;
        ok &= phase_ok && wrap.max_error() < 1e-8 && spec.max_error() < 1e-4;
        detail.push(format!("r={r}: analytic {:.2e}, spectral(N=512) {:.2e}", wrap.max_error(), spec.max_error()));
    }
    vec![line("4", "local phase rotation", ok, detail.join("; "))]
}

fn criterion_5() -> Vec<Line> {
    let op = build_interval_derivative(1, 512, Backend::FiniteDifference).unwrap();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for xi in [-5.0, 0.0, 2.5, 7.0] {
        let m = min_uncertainty(&op, xi).unwrap();
        let rel = (m.dx_min / PI - 1.0).abs();
        worst = worst.max(rel);
        ok &= rel < 0.01;
    }
    vec![line("5", "interval minimal uncertainty", ok, format!("max |dx_min/pi - 1| = {worst:.2e}"))]
}

fn criterion_6() -> Vec<Line> {
    let model = build_beta_algebra(1.0, 20.0, 1024).unwrap();
    let rep = sample_gup(&model, 10_000, 2024);
    let a = line(
        "6a",
        "GUP sampling",
        rep.violations == 0 && rep.min_margin > -1e-9 && rep.n_states == 10_000,
        format!("{} states, {} violations, min margin {:.3e}", rep.n_states, rep.violations, rep.min_margin),
    );

    // The truncated minimum does not depend on the mean; sampling near ξ = 0
    // keeps the phase e^{-iξs} well resolved on the grid.
    let xi = [-0.5, 0.0, 0.5];
    let curve = uncertainty_curve(&model.x_op, &xi).unwrap();
    let (at, dx) = curve.min().unwrap();
    let target = model.hbar() * model.beta.sqrt();
    let rel = (dx / target - 1.0).abs();
    // Closed form of the truncated problem, derived here: in s = atan(√β p)
    // the position is iħ√β d/ds on an interval of length 2 atan(√β P).
    let truncated = target * PI / (2.0 * (model.beta.sqrt() * model.momentum_cutoff).atan());
    let explained = (dx / truncated - 1.0).abs() < 5e-3;
    let mut b = line(
        "6b",
        "GUP minimal length",
        rel < 0.02,
        format!(
            "min dx = {dx:.6} at xi = {at}, hbar*sqrt(beta) = {target}, rel {rel:.2e}; truncated closed form {truncated:.6} (rel {:.2e})",
            (dx / truncated - 1.0).abs()
        ),
    );
    b.explained = Some(explained);
    vec![a, b]
}

fn criterion_7() -> Vec<Line> {
    let mut ok = true;
    let mut detail = Vec::new();
    for r in [1, 3] {
        let op = build_interval_derivative(r, 128, Backend::Spectral).unwrap();
        for xi in [0.0, 1.7, 2.5] {
            let p = extension_with_degenerate_eigenvalue(&op, xi).unwrap();
            let ext = extend_by_boundary(&op, &p).unwrap();
            let mult = ext.multiplicity(xi, 1e-8).unwrap();
            ok &= mult == r;
            detail.push(format!("r={r} xi={xi}: {mult}"));
        }
    }
    vec![line("7", "degenerate-eigenvalue extension", ok, detail.join(", "))]
}

fn criterion_8() -> Vec<Line> {
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, r) in [(4, 1), (6, 2)] {
        let op = build_matrix_model(&random_hermitian(n, 17), r).unwrap();
        let dim = generated_algebra_dimension(&op, 6, 3).unwrap();
        ok &= dim == n * n;
        detail.push(format!("(N={n}, r={r}): {dim}/{}", n * n));
    }
    vec![line("8", "generated algebra", ok, detail.join(", "))]
}

fn criterion_9() -> Vec<Line> {
    let op = build_interval_derivative(2, 512, Backend::FiniteDifference).unwrap();
    let g = op.grid().clone();
    let xi0 = 1.3;
    let deltas: Vec<f64> = (-40..=40).map(|k| 0.5 * f64::from(k)).collect();
    let grid: Vec<f64> = deltas.iter().map(|d| xi0 + d).collect();
    let mut cross_zero = true;
    let mut worst: f64 = 0.0;
    let mut decay_ok = true;
    for copy in 0..2 {
        let phi = StateVec::new(isospinor_ket(&g, xi0, copy), g.clone()).unwrap();
        let c = isospinor_expansion(&phi, &op, &grid).unwrap();
        for (k, &d) in deltas.iter().enumerate() {
            cross_zero &= c.get(k, 1 - copy) == C64::new(0.0, 0.0);
            let got = c.get(k, copy).norm();
            // ∫₀¹ e^{iΔλ} dλ.
            let want = if d == 0.0 { 1.0 } else { ((d / 2.0).sin() / (d / 2.0)).abs() };
            worst = worst.max((got - want).abs());
            if d.abs() >= 1.0 {
                decay_ok &= got <= 2.0 / d.abs();
            }
        }
    }
    vec![line(
        "9",
        "isospinor overlaps",
        cross_zero && worst < 1e-3 && decay_ok,
        format!("cross-copy exactly zero: {cross_zero}; max |overlap - sinc| = {worst:.2e}; decay bound holds: {decay_ok}"),
    )]
}

const REPRO_CONFIGS: &[(&str, &str)] = &[
    ("analyze", r#"{"model":"interval","parameters":{"copies":2,"grid":128}}"#),
    ("spectrum", r#"{"model":"interval","parameters":{"grid":128,"theta":1.0}}"#),
    ("spectrum", r#"{"model":"matrix","parameters":{"dim":6,"codim":1,"seed":5}}"#),
    ("flow", r#"{"model":"interval","parameters":{"grid":257,"a":0.25,"theta_prime":0.7}}"#),
    ("uncertainty-curve", r#"{"model":"beta","parameters":{"grid":256,"beta":1.0}}"#),
    ("gup", r#"{"model":"beta","parameters":{"grid":256,"n_states":2000,"seed":9}}"#),
    ("generate-algebra", r#"{"model":"matrix","parameters":{"dim":4,"codim":1,"seed":3}}"#),
    ("fuzzyb-demo", r#"{"model":"halfline","parameters":{"grid":512,"length":16}}"#),
];

fn run_cli(command: &str, config: &Path, out: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_fuzzyspec"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_remove("FUZZYSPEC_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("{command}: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}

fn criterion_10() -> Vec<Line> {
    let dir = tempfile::tempdir().unwrap();
    let mut ok = true;
    let mut files = 0;
    let mut problems = Vec::new();
    for (k, (command, text)) in REPRO_CONFIGS.iter().enumerate() {
        let cfg = dir.path().join(format!("c{k}.json"));
        std::fs::write(&cfg, text).unwrap();
        let first = run_cli(command, &cfg, &dir.path().join(format!("a{k}")));
        let second = run_cli(command, &cfg, &dir.path().join(format!("b{k}")));
        match (first, second) {
            (Ok(a), Ok(b)) => {
                if a != b {
                    ok = false;
                    problems.push(format!("{command}: outputs differ"));
                }
                for (name, bytes) in &a {
                    let text = String::from_utf8_lossy(bytes);
                    if !text.contains("fuzzyspec/1") || !text.contains("config_hash") {
                        ok = false;
                        problems.push(format!("{command}/{name}: missing stamp"));
                    }
                }
                files += a.len();
            }
            (Err(e), _) | (_, Err(e)) => {
                ok = false;
                problems.push(e);
            }
        }
    }
    let detail = if problems.is_empty() {
        format!("{} configs, {files} files byte-identical across reruns", REPRO_CONFIGS.len())
    } else {
        problems.join("; ")
    };
    vec![line("10", "CLI reproducibility", ok, detail)]
}

fn main() {
    // (criterion, runtime budget in seconds)
    let criteria: [(fn() -> Vec<Line>, f64); 10] = [
        (criterion_1, 5.0),
        (criterion_2, 30.0),
        (criterion_3, 10.0),
        (criterion_4, 10.0),
        (criterion_5, 20.0),
        (criterion_6, 60.0),
        (criterion_7, 10.0),
        (criterion_8, 30.0),
        (criterion_9, 5.0),
        (criterion_10, 10.0),
    ];
    let mut unexpected = 0;
    for (run, budget) in criteria {
        let start = Instant::now();
        let lines = run();
        let secs = start.elapsed().as_secs_f64();
        for mut l in lines {
            let in_time = secs <= budget;
            l.pass &= in_time;
            let status = if l.pass { "PASS" } else { "FAIL" };
            let timing = format!("{secs:.1}s of {budget:.0}s");
            println!("{status} [{}] {}: {} ({timing})", l.id, l.title, l.detail);
            if l.pass {
                continue;
            }
            match KNOWN_RED.iter().find(|(id, _)| *id == l.id) {
                Some((_, cause)) if l.explained == Some(true) && in_time => {
                    println!("     known red, cause confirmed: {cause}");
                }
                Some((_, cause)) => {
                    println!("     known red, but the documented cause was NOT confirmed: {cause}");
                    unexpected += 1;
                }
                None => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        println!("acceptance: {unexpected} unexpected failure(s)");
        std::process::exit(1);
    }
    println!("acceptance: all criteria pass except documented known-red lines");
}
