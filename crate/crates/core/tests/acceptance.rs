//! Acceptance suite. Each test prints one `PASS`/`FAIL` line for its
//! criterion before asserting it.

mod common;

use std::path::Path;
use std::process::Command;

use fracstefan::analysis::{
    energy_balance_check, exponent_fit, memory_tail, model_a_residual, TemperatureSource,
};
use fracstefan::closedform::{
    neumann_classical, sigma_solve, similarity_solution, BoundaryData, FracParams,
    LambdaConvention, Material, SimilaritySolution,
};
use fracstefan::fracops::{caputo_l1, TimeSeries};
use fracstefan::solver::{run, FrontPath, Grid1D};
use fracstefan::specfun::{gamma_fn, wright, wright_prime, WrightArgs, DEFAULT_TOL};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn verdict(id: &str, name: &str, ok: bool, detail: String) {
    println!(
        "{} [{id}] {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {id} ({name}) failed: {detail}");
}

fn model_b(mat: &Material, gamma: f64, tau: f64, ste: f64) -> (FracParams, SimilaritySolution) {
    let frac = FracParams::new(gamma, tau).unwrap();
    let bc = BoundaryData::new(ste * mat.l / mat.c).unwrap();
    let sol = similarity_solution(mat, &frac, &bc, LambdaConvention::Dimensional, 1e-14).unwrap();
    (frac, sol)
}

#[test]
fn criterion_01_classical_closed_form_equivalence() {
    let mat = Material::unit();
    let classical = FracParams::new(1.0, 1.0).unwrap();
    let mut sigma_err: f64 = 0.0;
    for ste in [0.1, 1.0, 5.0] {
        let bc = BoundaryData::new(ste).unwrap();
        let s = sigma_solve(&mat, &classical, &bc, 1e-14).unwrap();
        sigma_err = sigma_err.max((s - common::classical_sigma(ste)).abs());
    }

    let bc = BoundaryData::new(1.0).unwrap();
    let sol =
        similarity_solution(&mat, &classical, &bc, LambdaConvention::Dimensional, 1e-14).unwrap();
    let sigma = common::classical_sigma(1.0);
    let mut rng = StdRng::seed_from_u64(11);
    let mut profile_err: f64 = 0.0;
    for _ in 0..100 {
        let t: f64 = rng.gen_range(0.05..3.0);
        let x = rng.gen_range(0.0..1.0) * sol.s(t);
        let oracle = 1.0 - common::erf_quad(x / (2.0 * t.sqrt())) / common::erf_quad(0.5 * sigma);
        profile_err = profile_err.max((sol.u(x, t).unwrap() - oracle).abs());
    }
    verdict(
        "1",
        "gamma=1 closed form equals Neumann",
        sigma_err < 1e-8 && profile_err < 1e-9,
        format!(
            "max sigma diff {sigma_err:.2e} (< 1e-8), max profile diff {profile_err:.2e} (< 1e-9)"
        ),
    );
}

#[test]
fn criterion_02_wright_identities() {
    let mut erfc_err: f64 = 0.0;
    for j in 0..=120 {
        let x = 0.05 * j as f64;
        let w = wright(WrightArgs::new(-x, -0.5, 1.0).unwrap(), DEFAULT_TOL).unwrap();
        erfc_err = erfc_err.max((w - common::erfc_quad(0.5 * x)).abs());
    }
    let mut fd_err: f64 = 0.0;
    for (mu, nu) in [
        (-0.5, 1.0),
        (-0.15, 1.0),
        (-0.35, 0.65),
        (-0.25, 0.75),
        (0.3, 1.2),
    ] {
        for z in [-4.0, -2.5, -1.0, -0.3, 0.5, 1.5] {
            let h = 1e-5;
            let f = |z: f64| wright(WrightArgs::new(z, mu, nu).unwrap(), DEFAULT_TOL).unwrap();
            let fd = (f(z + h) - f(z - h)) / (2.0 * h);
            let d = wright_prime(WrightArgs::new(z, mu, nu).unwrap(), DEFAULT_TOL).unwrap();
            fd_err = fd_err.max((d - fd).abs() / d.abs().max(1e-3));
        }
    }
    verdict(
        "2",
        "Wright identities",
        erfc_err < 1e-10 && fd_err < 1e-6,
        format!("erfc identity max err {erfc_err:.2e} (< 1e-10), derivative vs FD {fd_err:.2e} (< 1e-6)"),
    );
}

#[test]
fn criterion_03_l1_convergence_order() {
    let mut worst_margin = f64::INFINITY;
    let mut details = Vec::new();
    for gamma in [0.3, 0.5, 0.8] {
        let exact = gamma_fn(4.0).unwrap() / gamma_fn(4.0 - gamma).unwrap();
        let errors: Vec<f64> = [64usize, 128, 256, 512]
            .iter()
            .map(|&n| {
                let f = TimeSeries::sample(|t| t * t * t, 1.0 / n as f64, n).unwrap();
                (caputo_l1(&f, gamma).unwrap()[n] - exact).abs()
            })
            .collect();
        let order = errors
            .windows(2)
            .map(|e| (e[0] / e[1]).log2())
            .fold(f64::INFINITY, f64::min);
        let required = 1.9 - 1.05 * gamma;
        worst_margin = worst_margin.min(order - required);
        details.push(format!(
            "gamma={gamma}: order {order:.3} (>= {required:.3})"
        ));
    }
    verdict(
        "3",
        "L1 convergence order",
        worst_margin >= 0.0,
        details.join(", "),
    );
}

/// Full-memory Caputo derivative of the closed-form temperature by
/// quadrature: log variable on [t_c, t/2], w = (t - t')^{1-γ} on [t/2, t].
fn caputo_full(sol: &SimilaritySolution, x: f64, t: f64) -> f64 {
    let gamma = sol.gamma;
    let mu = -0.5 * gamma;
    let mut z = 4.0;
    while z < 30.0 && wright(WrightArgs::new(-z, mu, 1.0).unwrap(), DEFAULT_TOL).unwrap() > 1e-8 {
        z += 0.5;
    }
    let tc = (x / (sol.lambda * z)).powf(2.0 / gamma);
    let ut = |tp: f64| sol.u_t(x, tp).unwrap();
    let mut total = 0.0;
    if tc < 0.5 * t {
        total += common::simpson(
            |v| {
                let tp = v.exp();
                (t - tp).powf(-gamma) * ut(tp) * tp
            },
            tc.ln(),
            (0.5 * t).ln(),
            4000,
        );
    }
    let beta = 1.0 - gamma;
    total += common::simpson(
        |w| ut(t - w.powf(1.0 / beta)) / beta,
        0.0,
        (0.5 * t).powf(beta),
        4000,
    );
    total / common::gamma_stirling(1.0 - gamma)
}

#[test]
fn criterion_04_full_memory_pde_residual() {
    let mat = Material::new(2.0, 1.5, 0.8, 1.2).unwrap();
    let tau = 0.7;
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for gamma in [0.3, 0.5, 0.7] {
        let (frac, sol) = model_b(&mat, gamma, tau, 1.0);
        let coeff = mat.alpha() * frac.tau_factor();
        let mut rng = StdRng::seed_from_u64(4 + (gamma * 10.0) as u64);
        let mut max_rel: f64 = 0.0;
        for _ in 0..20 {
            let t: f64 = rng.gen_range(0.5..2.0);
            let xi = rng.gen_range(0.2..3.0);
            let x = xi * sol.lambda * t.powf(0.5 * gamma);
            let lhs = caputo_full(&sol, x, t);
            let rhs = coeff * sol.u_xx(x, t).unwrap();
            max_rel = max_rel.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
        }
        worst = worst.max(max_rel);
        details.push(format!("gamma={gamma}: {max_rel:.2e}"));
    }
    verdict(
        "4",
        "closed form solves the full-memory heat equation",
        worst < 1e-3,
        format!("max relative residual {} (< 1e-3)", details.join(", ")),
    );
}

fn interior_points(sol: &SimilaritySolution) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for t in [0.5, 1.0, 2.0] {
        for r in [0.1, 0.3, 0.5, 0.7, 0.9] {
            pts.push((r * sol.s(t), t));
        }
    }
    pts
}

fn nonequivalence_material() -> Material {
    Material::new(2.0, 1.5, 0.8, 1.2).unwrap()
}

/// Largest windowed-equation residual of the closed form at γ = 1.
fn classical_floor(mat: &Material, ste: f64) -> f64 {
    let (frac, sol) = model_b(mat, 1.0, 0.7, ste);
    model_a_residual(
        TemperatureSource::Similarity(&sol),
        mat,
        &frac,
        &interior_points(&sol),
    )
    .unwrap()
    .summary()
    .max_abs
}

#[test]
fn criterion_05a_memory_tail_sign() {
    let mat = nonequivalence_material();
    let mut all_negative = true;
    let mut details = Vec::new();
    for gamma in [0.3, 0.5, 0.7] {
        for ste in [0.5, 1.0] {
            let (frac, sol) = model_b(&mat, gamma, 0.7, ste);
            let tails: Vec<f64> = interior_points(&sol)
                .iter()
                .map(|&(x, t)| memory_tail(&sol, &mat, &frac, x, t).unwrap())
                .collect();
            let (lo, hi) = tails
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                    (a.min(v), b.max(v))
                });
            all_negative &= tails.iter().all(|&v| v < 0.0);
            details.push(format!("gamma={gamma} Ste={ste}: [{lo:.3e}, {hi:.3e}]"));
        }
    }
    verdict(
        "5a",
        "memory tail strictly negative",
        all_negative,
        format!("tail range {}", details.join("; ")),
    );
}

#[test]
fn criterion_05b_nonequivalence_above_floor() {
    let mat = nonequivalence_material();
    let mut ok = true;
    let mut details = Vec::new();
    for ste in [0.5, 1.0] {
        let floor = classical_floor(&mat, ste);
        for gamma in [0.3, 0.5, 0.7] {
            let (frac, sol) = model_b(&mat, gamma, 0.7, ste);
            let report = model_a_residual(
                TemperatureSource::Similarity(&sol),
                &mat,
                &frac,
                &interior_points(&sol),
            )
            .unwrap();
            let max = report.summary().max_abs;
            ok &= max > 10.0 * floor;
            details.push(format!(
                "gamma={gamma} Ste={ste}: {max:.3e} vs floor {floor:.3e}"
            ));
        }
    }
    verdict(
        "5b",
        "windowed residual of the closed form exceeds 10x the gamma=1 floor",
        ok,
        details.join("; "),
    );
}

#[test]
fn criterion_05c_classical_collapse() {
    let mat = nonequivalence_material();
    let worst = [0.5, 1.0]
        .iter()
        .map(|&ste| classical_floor(&mat, ste))
        .fold(0.0, f64::max);
    verdict(
        "5c",
        "windowed residual vanishes at gamma=1",
        worst < 1e-4,
        format!("max residual {worst:.3e} (< 1e-4)"),
    );
}

fn classical_front_error(nx: usize) -> f64 {
    let mat = Material::unit();
    let frac = FracParams::new(1.0, 1.0).unwrap();
    let bc = BoundaryData::new(1.0).unwrap();
    let t_max = 0.4;
    let grid = Grid1D::new(1.0, nx, t_max, 5 * nx).unwrap();
    let state = run(&mat, &frac, &bc, &grid).unwrap();
    let exact = neumann_classical(&mat, &bc, 1e-14).unwrap();
    let front = &state.front;
    front
        .times()
        .iter()
        .zip(front.positions())
        .filter(|(&t, _)| t >= 0.1 * t_max)
        .map(|(&t, &s)| (s - exact.s(t)).abs() / exact.s(t))
        .fold(0.0, f64::max)
}

#[test]
fn criterion_06_solver_matches_neumann() {
    let errors: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&nx| classical_front_error(nx))
        .collect();
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let ok = errors[1] < 0.02 && ratios.iter().all(|r| (1.4..=2.6).contains(r));
    verdict(
        "6",
        "solver front vs Neumann at gamma=1",
        ok,
        format!(
            "errors {:.3e}/{:.3e}/{:.3e} at nx=200/400/800 (nx=400 < 2e-2), ratios {:.2}, {:.2} (2 +/- 30%)",
            errors[0], errors[1], errors[2], ratios[0], ratios[1]
        ),
    );
}

#[test]
fn criterion_07_quasi_static_prefactor() {
    let mat = Material::unit();
    let gamma = 0.5;
    let ste = 0.01;
    let frac = FracParams::new(gamma, 1.0).unwrap();
    let bc = BoundaryData::new(ste).unwrap();
    let grid = Grid1D::new(0.16, 400, 1.0, 4000).unwrap();
    let state = run(&mat, &frac, &bc, &grid).unwrap();
    let lambda = (mat.alpha() * frac.tau_factor()).sqrt();
    let oracle = lambda
        * (ste * gamma_fn(1.0 - 0.5 * gamma).unwrap() / gamma_fn(1.0 + 0.5 * gamma).unwrap())
            .sqrt();
    let front = &state.front;
    let ratios: Vec<f64> = front
        .times()
        .iter()
        .zip(front.positions())
        .filter(|(&t, _)| t >= 0.1)
        .map(|(&t, &s)| s / t.powf(0.5 * gamma))
        .collect();
    let a = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let rel = (a - oracle).abs() / oracle;
    verdict(
        "7",
        "quasi-static front prefactor",
        rel < 0.05,
        format!("A = {a:.6e}, oracle {oracle:.6e}, relative diff {rel:.3e} (< 5e-2)"),
    );
}

#[test]
fn criterion_08_energy_balance() {
    let mat = Material::unit();
    let frac = FracParams::new(0.5, 1.0).unwrap();
    let bc = BoundaryData::new(1.0).unwrap();
    let mismatches: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&nx| {
            let grid = Grid1D::new(1.4, nx, 1.0, 10 * nx).unwrap();
            let state = run(&mat, &frac, &bc, &grid).unwrap();
            energy_balance_check(&state, &mat, &frac)
                .unwrap()
                .max_mismatch_after(5)
        })
        .collect();
    let ok = mismatches.iter().all(|&m| m < 0.05) && mismatches.windows(2).all(|w| w[1] < w[0]);
    verdict(
        "8",
        "fractional energy balance",
        ok,
        format!(
            "max mismatch beyond level 5: {:.3e}/{:.3e}/{:.3e} at nx=100/200/400 (< 5e-2, decreasing)",
            mismatches[0], mismatches[1], mismatches[2]
        ),
    );
}

#[test]
fn criterion_09_front_exponent() {
    let mat = Material::unit();
    let mut ok = true;
    let mut details = Vec::new();
    for gamma in [0.5, 0.8] {
        let (frac, sol) = model_b(&mat, gamma, 1.0, 0.1);
        let times: Vec<f64> = (0..=4000).map(|n| n as f64 / 4000.0).collect();
        let closed = FrontPath::from_fn(times, |t| sol.s(t)).unwrap();
        let p_closed = exponent_fit(&closed, (0.1, 1.0)).unwrap().p;

        let bc = BoundaryData::new(0.1).unwrap();
        let grid = Grid1D::new(0.6, 400, 1.0, 4000).unwrap();
        let state = run(&mat, &frac, &bc, &grid).unwrap();
        let p_num = exponent_fit(&state.front, (0.1, 1.0)).unwrap().p;

        ok &= (p_closed - 0.5 * gamma).abs() < 1e-10 && (p_num - 0.5 * gamma).abs() < 0.03;
        details.push(format!(
            "gamma={gamma}: closed {p_closed:.12}, numerical {p_num:.4}"
        ));
    }
    verdict(
        "9",
        "front exponent gamma/2",
        ok,
        format!(
            "{} (+/- 1e-10 closed, +/- 0.03 numerical)",
            details.join("; ")
        ),
    );
}

fn run_cli(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fracstefan"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.cfg");
    std::fs::write(
        &config,
        "model = closed_form_b\ngamma = 0.5\ntau = 1\nrho = 1\nc = 1\nk = 1\nl = 1\nu0 = 0.5\n\
         x_max = 1.2\nnx = 120\nt_max = 1\nnt = 600\n",
    )
    .unwrap();
    let config = config.to_str().unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    for sub in ["selftest", "compare"] {
        let (a, b) = (
            tmp.path().join(format!("{sub}_1")),
            tmp.path().join(format!("{sub}_2")),
        );
        let first = run_cli(&[sub, "--config", config], &a);
        let second = run_cli(&[sub, "--config", config], &b);
        let (fa, fb) = (dir_contents(&a), dir_contents(&b));
        let same = first.status.success()
            && second.status.success()
            && !fa.is_empty()
            && fa == fb
            && first.stdout == second.stdout;
        ok &= same;
        details.push(format!("{sub}: {} file(s) identical={same}", fa.len()));
    }
    verdict("10", "byte-identical reruns", ok, details.join(", "));
}
