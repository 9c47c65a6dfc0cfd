//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chaintrunc_core::{
    bound_deterministic, bound_thermal, chain_from_io, epsilon_empirical, error_report,
    evolve_full, evolve_truncated, kernel_closed_form, kernel_taylor, min_modes,
    reconstruct_system, sample_thermal, thermal_average, InitialState, IoModel, NestedQuadrature,
    RandomFamily, ThermalState, TimeGrid, DOMINANCE_SLACK,
};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const IEP_EIGEN_REL: f64 = 1e-9;
const IEP_ORTHO: f64 = 1e-10;
const IEP_BUDGET: Duration = Duration::from_secs(5);

const KERNEL_AGREEMENT: f64 = 1e-8;
const KERNEL_SETS: usize = 20;
const KERNEL_MAX_ORDER: usize = 5;
const TAYLOR_ORDER: usize = 40;
const QUADRATURE_TOL: f64 = 1e-12;
const KERNEL_BUDGET: Duration = Duration::from_secs(30);

const DERIV_ZERO_ABS: f64 = 1e-8;
const DERIV_LEADING_REL: f64 = 1e-10;

const RECONSTRUCTION_SUP: f64 = 1e-6;
const RECONSTRUCTION_BUDGET: Duration = Duration::from_secs(60);

const DOMINANCE_INSTANCES: usize = 100;
const DOMINANCE_SAMPLES: usize = 200;

const SLOPE_TOL: f64 = 0.15;

const MC_SAMPLES: usize = 10_000;
const MC_SIGMAS: f64 = 3.0;
const MC_BUDGET: Duration = Duration::from_secs(300);

const HALF_NORMAL_DRAWS: u64 = 100_000;
const HALF_NORMAL_SIGMAS: f64 = 3.0;

const DETERMINISM_RUNS: usize = 3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn family_model(rng: &mut ChaCha8Rng, n: usize) -> IoModel {
    RandomFamily::default()
        .sample(n, rng)
        .expect("random family draw")
}

fn bath_state(rng: &mut ChaCha8Rng, n: usize, x0: f64, xdot0: f64) -> InitialState {
    let q0 = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let qd = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    InitialState::new(q0, qd, x0, xdot0).expect("initial state")
}

fn iep_round_trip() -> Outcome {
    let start = Instant::now();
    let sizes = [2, 4, 8, 16, 32, 64];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_eig, mut worst_ortho) = (0.0f64, 0.0f64);
    for m in 0..50 {
        let n = sizes[m % sizes.len()];
        let io = family_model(&mut rng, n);
        let (chain, map) = chain_from_io(&io).expect("chain");
        let mut eig = SymmetricEigen::new(chain.tridiagonal())
            .eigenvalues
            .as_slice()
            .to_vec();
        eig.sort_by(f64::total_cmp);
        for (l, w) in eig.iter().zip(io.omega()) {
            worst_eig = worst_eig.max((l - w * w).abs() / (w * w));
        }
        let o = map.matrix();
        let defect = o * o.transpose() - DMatrix::identity(n, n);
        worst_ortho = worst_ortho.max(defect.amax());
    }
    let elapsed = start.elapsed();
    outcome(
        worst_eig <= IEP_EIGEN_REL && worst_ortho <= IEP_ORTHO && elapsed < IEP_BUDGET,
        format!("max eigen rel {worst_eig:.2e}, max |OO^T-I| {worst_ortho:.2e}, {elapsed:.2?}"),
    )
}

fn kernel_agreement() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut failure = None;
    'sets: for i in 0..=KERNEL_MAX_ORDER {
        for _ in 0..KERNEL_SETS {
            let freqs: Vec<f64> = (0..=i).map(|_| rng.random_range(0.5..5.0)).collect();
            let run = || -> chaintrunc_core::Result<f64> {
                let closed = kernel_closed_form(&freqs)?;
                let table = NestedQuadrature::new(&freqs, 2.0, QUADRATURE_TOL)?;
                let mut w = 0.0f64;
                for j in 0..=40 {
                    let tau = 0.05 * j as f64;
                    let c = closed.eval(tau);
                    let t = kernel_taylor(&freqs, i, TAYLOR_ORDER, tau)?.value;
                    let q = table.eval(tau, QUADRATURE_TOL)?;
                    w = w.max((c - t).abs()).max((c - q).abs()).max((t - q).abs());
                }
                Ok(w)
            };
            match run() {
                Ok(w) => worst = worst.max(w),
                Err(e) => {
                    failure = Some(format!("i={i} {freqs:?}: {e}"));
                    break 'sets;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if let Some(f) = failure {
        return outcome(false, f);
    }
    outcome(
        worst <= KERNEL_AGREEMENT && elapsed < KERNEL_BUDGET,
        format!("max pairwise difference {worst:.2e} over 120 sets, {elapsed:.2?}"),
    )
}

fn derivative_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_zero, mut worst_lead) = (0.0f64, 0.0f64);
    for i in 0..=KERNEL_MAX_ORDER {
        for _ in 0..KERNEL_SETS {
            let freqs: Vec<f64> = (0..=i).map(|_| rng.random_range(0.5..5.0)).collect();
            let Ok(rep) = kernel_closed_form(&freqs) else {
                return outcome(false, format!("closed form failed for {freqs:?}"));
            };
            for k in 0..=2 * i + 4 {
                if k % 2 == 0 || k <= 2 * i {
                    worst_zero = worst_zero.max(rep.deriv_zero(k).abs());
                }
            }
            let prod: f64 = freqs.iter().product();
            worst_lead = worst_lead.max((rep.deriv_zero(2 * i + 1) - prod).abs() / prod);
        }
    }
    outcome(
        worst_zero <= DERIV_ZERO_ABS && worst_lead <= DERIV_LEADING_REL,
        format!("max vanishing derivative {worst_zero:.2e}, leading rel error {worst_lead:.2e}"),
    )
}

fn volterra_reconstruction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=6);
        let io = family_model(&mut rng, n);
        let (chain, map) = chain_from_io(&io).expect("chain");
        let (x0, xd0) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let init = bath_state(&mut rng, n, x0, xd0);
        let grid = TimeGrid::uniform(10.0 / io.system_frequency(), 401).expect("grid");
        match reconstruct_system(&chain, &map, &init, &grid) {
            Ok(rec) => worst = worst.max(rec.max_error()),
            Err(e) => return outcome(false, format!("N={n}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= RECONSTRUCTION_SUP && elapsed < RECONSTRUCTION_BUDGET,
        format!("max sup error {worst:.2e} over 20 instances, {elapsed:.2?}"),
    )
}

fn deterministic_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut checks, mut violations, mut worst) = (0usize, 0usize, 0.0f64);
    let mut first = None;
    for inst in 0..DOMINANCE_INSTANCES {
        let n_modes = rng.random_range(2..=8);
        let io = family_model(&mut rng, n_modes);
        let (chain, map) = chain_from_io(&io).expect("chain");
        let init = bath_state(&mut rng, n_modes, 0.0, 0.0);
        let grid = TimeGrid::uniform(3.0 / io.max_frequency(), DOMINANCE_SAMPLES).expect("grid");
        let full = evolve_full(&chain, &init, &map, &grid).expect("full");
        for n in 1..n_modes {
            let trunc = evolve_truncated(&chain, n, &init, &map, &grid).expect("truncated");
            let eps = epsilon_empirical(&full, &trunc).expect("eps");
            for (m, &t) in grid.times().iter().enumerate() {
                let b = bound_deterministic(&io, &chain, n, t, &init).expect("bound");
                checks += 1;
                worst = worst.max(eps[m] / (b + DOMINANCE_SLACK));
                if eps[m] > b + DOMINANCE_SLACK {
                    violations += 1;
                    first.get_or_insert(format!(
                        "instance {inst} n={n} t={t:.3e}: eps {:.3e} > bound {b:.3e}",
                        eps[m]
                    ));
                }
            }
        }
    }
    let mut detail =
        format!("{violations} violations in {checks} checks, max eps/(bound+slack) {worst:.3}");
    if let Some(f) = first {
        detail.push_str(&format!("; first: {f}"));
    }
    outcome(violations == 0, detail)
}

fn small_time_slope() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let th = ThermalState::new(1.0).expect("thermal");
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for _ in 0..10 {
        let n_modes = rng.random_range(4..=8);
        let io = family_model(&mut rng, n_modes);
        let (chain, map) = chain_from_io(&io).expect("chain");
        let init = bath_state(&mut rng, n_modes, 0.0, 0.0);
        let grid = TimeGrid::uniform(1.0 / io.max_frequency(), 3).expect("grid");
        for n in 1..=3 {
            let r = error_report(&io, &chain, &map, n, &init, &grid, &th).expect("report");
            let dev = (r.slope_smallt - (2 * n + 2) as f64).abs();
            if dev > worst {
                worst = dev;
                detail = format!("n={n} slope {:.4}", r.slope_smallt);
            }
        }
    }
    outcome(
        worst <= SLOPE_TOL,
        format!("max |slope-(2n+2)| {worst:.2e} ({detail})"),
    )
}

fn thermal_dominance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut checks, mut violations, mut worst) = (0usize, 0usize, 0.0f64);
    for inst in 0..10u64 {
        let n_modes = rng.random_range(3..=8);
        let io = family_model(&mut rng, n_modes);
        let (chain, map) = chain_from_io(&io).expect("chain");
        let grid = TimeGrid::uniform(3.0 / io.max_frequency(), 50).expect("grid");
        for kt in [0.1, 1.0, 10.0] {
            let th = ThermalState::new(kt).expect("thermal");
            for n in [1, 2] {
                let avg = thermal_average(&io, &chain, &map, n, &th, &grid, MC_SAMPLES, 100 + inst)
                    .expect("mc");
                for (m, &t) in grid.times().iter().enumerate() {
                    let b = bound_thermal(&io, &chain, n, t, &th).expect("bound");
                    checks += 1;
                    let excess = avg.mean[m] - b - MC_SIGMAS * avg.std_error[m];
                    if b > 0.0 {
                        worst = worst.max(avg.mean[m] / b);
                    }
                    if excess > 0.0 {
                        violations += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations == 0 && elapsed < MC_BUDGET,
        format!(
            "{violations} violations in {checks} checks, max mean/bound {worst:.3}, {elapsed:.2?}"
        ),
    )
}

fn half_normal() -> Outcome {
    let io =
        chaintrunc_core::build_io_model(&[0.6, 1.3, 2.2, 3.7, 4.9], &[0.5; 5], 3.0).expect("model");
    let kt = 1.7;
    let th = ThermalState::new(kt).expect("thermal");
    let m = HALF_NORMAL_DRAWS as f64;
    let n = io.len();
    let (mut sum_q, mut sum_v) = (vec![0.0; n], vec![0.0; n]);
    for seed in 0..HALF_NORMAL_DRAWS {
        let s = sample_thermal(&io, &th, seed);
        for k in 0..n {
            sum_q[k] += s.q0[k].abs();
            sum_v[k] += s.qdot0[k].abs();
        }
    }
    let spread = (1.0 - 2.0 / std::f64::consts::PI).sqrt();
    let mut worst = 0.0f64;
    for k in 0..n {
        let sigma_q = (kt).sqrt() / io.omega()[k];
        let sigma_v = kt.sqrt();
        let expect_q = (2.0 * kt / std::f64::consts::PI).sqrt() / io.omega()[k];
        let expect_v = (2.0 * kt / std::f64::consts::PI).sqrt();
        worst = worst.max((sum_q[k] / m - expect_q).abs() / (sigma_q * spread / m.sqrt()));
        worst = worst.max((sum_v[k] / m - expect_v).abs() / (sigma_v * spread / m.sqrt()));
    }
    outcome(
        worst <= HALF_NORMAL_SIGMAS,
        format!(
            "max deviation {worst:.2} standard errors over {} means",
            2 * n
        ),
    )
}

fn min_modes_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let th = ThermalState::new(1.0).expect("thermal");
    let mut checks = 0;
    for _ in 0..3 {
        let io = family_model(&mut rng, 8);
        let (chain, _) = chain_from_io(&io).expect("chain");
        for i in 1..=10 {
            let t = 0.3 * i as f64 / io.max_frequency();
            for j in 1..=10 {
                let tol = 10f64.powi(-j);
                let found = min_modes(&io, &chain, t, tol, &th).expect("min_modes");
                let at = bound_thermal(&io, &chain, found.n, t, &th).expect("bound");
                let below = if found.n == 0 {
                    f64::INFINITY
                } else {
                    bound_thermal(&io, &chain, found.n - 1, t, &th).expect("bound")
                };
                if !(found.certified && at <= tol && below > tol) {
                    return outcome(
                        false,
                        format!(
                            "t={t:.3e} tol={tol:e}: n={} bound {at:e}, previous {below:e}",
                            found.n
                        ),
                    );
                }
                checks += 1;
            }
        }
    }
    outcome(true, format!("{checks} (t, tol) cells recomputed"))
}

fn determinism() -> Outcome {
    let dir = tempfile::TempDir::new().expect("tempdir");
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{"model": {"kind": "random", "modes": 6}, "truncations": [1, 2, 3],
            "grid": {"t_max": 2.0, "samples": 101}, "temperature": 0.7,
            "sweep": {"modes": [4, 6], "truncations": [1, 2], "temperatures": [0.5, 2.0]}}"#,
    )
    .expect("config");
    let mut digests: Vec<Vec<String>> = Vec::new();
    for run in 0..DETERMINISM_RUNS {
        let mut per_run = Vec::new();
        for sub in ["build-chain", "simulate", "bound", "min-modes", "sweep"] {
            let out = dir.path().join(format!("{sub}-{run}.csv"));
            if let Err(e) = invoke(sub, &config, &out) {
                return outcome(false, e);
            }
            let bytes = std::fs::read(&out).expect("output");
            per_run.push(
                Sha256::digest(&bytes)
                    .iter()
                    .map(|b| format!("{b:02x}"))
                    .collect::<String>(),
            );
        }
        digests.push(per_run);
    }
    let same = digests.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same,
        format!(
            "{DETERMINISM_RUNS} runs of 5 commands, sha256 {}",
            if same { "identical" } else { "differ" }
        ),
    )
}

fn invoke(sub: &str, config: &Path, out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_chaintrunc"))
        .args([sub, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--seed", "42"])
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{sub}: {}",
            String::from_utf8_lossy(&status.stderr).trim()
        ))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("chain round trip", iep_round_trip),
        ("kernel triple agreement", kernel_agreement),
        ("kernel derivative structure", derivative_structure),
        ("volterra reconstruction", volterra_reconstruction),
        ("deterministic bound dominance", deterministic_dominance),
        ("small-time error slope", small_time_slope),
        ("thermal bound dominance in mean", thermal_dominance),
        ("thermal sampler half-normal mean", half_normal),
        ("min_modes consistency", min_modes_consistency),
        ("cli determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
