//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Tolerances are fixed here on purpose.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{draw, gamma_oracle, gamma_ratio_oracle, rng, scan_bisect};
use fracstar::closed_form::{
    amplitude_forced, amplitude_homogeneous, build_solution, frac_derivative_of_solution,
    planted_forcing, AmplitudeChoice, PowerSolution, RootBracket,
};
use fracstar::frac_ops::{gl_weights, GridSpec, Monomial};
use fracstar::model::{solution_exponent, BondSpec, ProblemKind, StarGraphProblem};
use fracstar::specfun::gamma;
use fracstar::verify::{
    convergence_order, free_end_integral_decay, left_end_conditions, ode_residual, Scheme,
    RESIDUAL_THRESHOLD,
};
use fracstar::vertex::{
    compare_kirchhoff_forms, matched_forcing, solve_lambdas_homogeneous, solve_vertex_forced,
    vertex_residuals, ForcedStatus,
};

const SEED: u64 = 0x5eed_0001;
const IDENTITY_DRAWS: usize = 500;
const REDUCTION_DRAWS: usize = 100;
const PLANTED_DRAWS: usize = 100;
const CONTROL_DRAWS: usize = 500;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn grid() -> GridSpec {
    GridSpec::new(4096, 2.0).unwrap()
}

fn homogeneous_solution(d: &common::Draw) -> PowerSolution {
    build_solution(
        1,
        &d.bond,
        d.alpha,
        ProblemKind::Homogeneous,
        AmplitudeChoice::default(),
    )
    .unwrap()
}

fn symmetric_split() -> Outcome {
    let start = Instant::now();
    let bond = BondSpec::homogeneous(1.0, 1.0, 1.0 / 3.0, 3.0);
    let problem = StarGraphProblem::symmetric(1.5, 3, bond);
    let a = solve_lambdas_homogeneous(&problem, 3.0).unwrap();
    let split = rel(a.lambdas[1] + a.lambdas[2], 3.0);
    let r = vertex_residuals(&problem.with_lambdas(&a.lambdas)).unwrap();
    let gaps = r.max_continuity_relative().max(r.kirchhoff_relative());

    let (m, b1) = (1.0 / 3.0, 0.5);
    let b_out = matched_forcing(b1, 3.0, 1.5, m).unwrap();
    let forced = StarGraphProblem::forced(
        1.5,
        vec![
            BondSpec::forced(1.0, 1.0, m, 3.0, b1, 1.5).unwrap(),
            BondSpec::forced(1.0, 1.0, m, 1.0, b_out, 1.5).unwrap(),
            BondSpec::forced(1.0, 1.0, m, 1.0, b_out, 1.5).unwrap(),
        ],
    );
    let rep = solve_vertex_forced(&forced, 3.0, &[1.0, 1.0]).unwrap();
    let forced_split = rel(rep.lambdas[1] + rep.lambdas[2], rep.lambdas[0]);
    let elapsed = start.elapsed();

    outcome(
        split <= 1e-12
            && gaps <= 1e-12
            && rep.status == ForcedStatus::Solved
            && forced_split <= 1e-9
            && elapsed < Duration::from_secs(1),
        format!(
            "homogeneous split {split:.1e}, gaps {gaps:.1e}; forced split {forced_split:.1e} ({:?}); {elapsed:.2?}",
            rep.status
        ),
    )
}

fn exact_solution_identity() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED);
    let mut worst_coef = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    let mut worst_numeric = 0.0_f64;
    for _ in 0..IDENTITY_DRAWS {
        let d = draw(&mut r, false);
        let sol = homogeneous_solution(&d);
        let lhs = frac_derivative_of_solution(&sol, d.alpha).unwrap();
        let b = &d.bond;
        let rhs = Monomial::new(b.lam * sol.amplitude.powf(b.m), b.beta + b.m * sol.exponent);
        worst_coef = worst_coef.max(rel(lhs.coef, rhs.coef));
        assert!((lhs.expo - rhs.expo).abs() <= 1e-12 * rhs.expo.abs().max(1.0));

        // same coefficient from the oracle Gamma, independent of the library
        let p = sol.exponent;
        let oracle_lhs = sol.amplitude * gamma_ratio_oracle(p + 1.0, p + 1.0 - d.alpha);
        worst_oracle = worst_oracle.max(rel(oracle_lhs, rhs.coef));

        let report = ode_residual(&sol, b, d.alpha, &grid()).unwrap();
        worst_numeric = worst_numeric.max(report.max_rel_residual);
    }
    let elapsed = start.elapsed();
    outcome(
        worst_coef <= 1e-10
            && worst_oracle <= 1e-10
            && worst_numeric <= RESIDUAL_THRESHOLD
            && elapsed < Duration::from_secs(60),
        format!(
            "{IDENTITY_DRAWS} draws: coefficient {worst_coef:.1e} (oracle {worst_oracle:.1e}), GL residual {worst_numeric:.1e}; {elapsed:.2?}"
        ),
    )
}

fn forced_reduction() -> Outcome {
    let mut r = rng(SEED + 2);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for _ in 0..REDUCTION_DRAWS {
        let d = draw(&mut r, true);
        let b = &d.bond;
        let forced = BondSpec::forced(b.length, b.beta, b.m, b.lam, 1e-12, d.alpha).unwrap();
        let a_hom = amplitude_homogeneous(b, d.alpha).unwrap();
        match amplitude_forced(&forced, d.alpha, RootBracket::new(1e-10, 1e10)) {
            Ok(roots) => {
                let nearest = roots
                    .iter()
                    .map(|a| rel(*a, a_hom))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(nearest);
                if roots.len() != 1 {
                    failures += 1;
                }
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        worst <= 1e-6 && failures == 0,
        format!("{REDUCTION_DRAWS} draws with b = 1e-12: worst relative gap {worst:.1e}, {failures} draws without a unique root"),
    )
}

fn planted_roots() -> Outcome {
    let mut r = rng(SEED + 3);
    let mut worst_root = 0.0_f64;
    let mut worst_residual = 0.0_f64;
    let mut oracle_gap = 0.0_f64;
    for i in 0..PLANTED_DRAWS {
        let d = draw(&mut r, true);
        let b = &d.bond;
        let planted = planted_forcing(b, d.alpha).unwrap();
        let bond = BondSpec::forced(b.length, b.beta, b.m, b.lam, planted, d.alpha).unwrap();
        let roots = amplitude_forced(&bond, d.alpha, RootBracket::default()).unwrap();
        let nearest = roots
            .iter()
            .copied()
            .min_by(|x, y| (x - 1.0).abs().total_cmp(&(y - 1.0).abs()))
            .unwrap();
        worst_root = worst_root.max((nearest - 1.0).abs());

        // cross-check the library root finder on a handful of draws
        if i < 10 {
            let p = solution_exponent(&bond, d.alpha).unwrap();
            let (gl, gh) = (gamma_oracle(p + 1.0 - d.alpha), gamma_oracle(p + 1.0));
            let f = |a: f64| gl * (bond.lam * a.powf(bond.m) + planted) - gh * a;
            let oracle = scan_bisect(f, 0.5, 1.5, 1_000_000);
            let o = oracle
                .iter()
                .copied()
                .min_by(|x, y| (x - 1.0).abs().total_cmp(&(y - 1.0).abs()))
                .unwrap_or(f64::NAN);
            oracle_gap = oracle_gap.max((o - nearest).abs());
        }

        let sol = build_solution(
            1,
            &bond,
            d.alpha,
            ProblemKind::Forced,
            AmplitudeChoice::Nearest(1.0),
        )
        .unwrap();
        let report = ode_residual(&sol, &bond, d.alpha, &grid()).unwrap();
        worst_residual = worst_residual.max(report.max_rel_residual);
    }
    outcome(
        worst_root <= 1e-10 && oracle_gap <= 1e-9 && worst_residual <= RESIDUAL_THRESHOLD,
        format!(
            "{PLANTED_DRAWS} draws: |A - 1| {worst_root:.1e}, scan oracle gap {oracle_gap:.1e}, GL residual {worst_residual:.1e}"
        ),
    )
}

fn free_end_conditions() -> Outcome {
    let mut r = rng(SEED);
    let mut bad_limits = 0;
    let mut bad_decay = 0;
    for _ in 0..IDENTITY_DRAWS {
        let d = draw(&mut r, false);
        let sol = homogeneous_solution(&d);
        let ends = left_end_conditions(&sol, d.alpha);
        let p = sol.exponent;
        let expected = p + 2.0 - d.alpha > 0.0 && p + 1.0 - d.alpha > 0.0;
        if !(ends.both_vanish && expected) {
            bad_limits += 1;
        }
        let decay = free_end_integral_decay(&sol, d.bond.length, d.alpha, &grid()).unwrap();
        if !decay.windows(2).all(|w| w[1].1 < w[0].1) {
            bad_decay += 1;
        }
    }
    outcome(
        bad_limits == 0 && bad_decay == 0,
        format!("{IDENTITY_DRAWS} draws: {bad_limits} non-vanishing limits, {bad_decay} non-monotone decays"),
    )
}

fn operator_kernels() -> Outcome {
    let mut r = rng(SEED + 6);
    let mut worst_rec = 0.0_f64;
    let mut worst_refl = 0.0_f64;
    let mut worst_oracle = 0.0_f64;
    for _ in 0..1000 {
        let x: f64 = rand::Rng::gen_range(&mut r, -20.0..20.0);
        if (x - x.round()).abs() < 1e-3 {
            continue;
        }
        let g = gamma(x).unwrap();
        worst_rec = worst_rec.max(rel(gamma(x + 1.0).unwrap(), x * g));
        let refl = std::f64::consts::PI / (std::f64::consts::PI * x).sin();
        worst_refl = worst_refl.max(rel(g * gamma(1.0 - x).unwrap(), refl));
        worst_oracle = worst_oracle.max(rel(g, gamma_oracle(x)));
    }

    let mut worst_weight = 0.0_f64;
    let mut sign_ok = true;
    for &q in &[0.3, 0.5, 0.9, 1.2, 1.5, 1.8] {
        let w = gl_weights(q, 40);
        for (k, wk) in w.iter().enumerate() {
            // (-1)^k C(q, k) by the oracle Gamma, valid while q - k + 1 > 0 or non-integer
            let exact = (-1f64).powi(k as i32) * gamma_oracle(q + 1.0)
                / (gamma_oracle(k as f64 + 1.0) * gamma_oracle(q - k as f64 + 1.0));
            worst_weight = worst_weight.max((wk - exact).abs());
            let expected_sign = match k {
                0 => 1.0,
                1 => -1.0,
                _ if q < 1.0 => -1.0,
                _ => 1.0,
            };
            sign_ok &= wk.signum() == expected_sign;
        }
    }

    let target = Monomial::new(1.0, 2.5);
    let gl_order = convergence_order(Scheme::GrunwaldLetnikov, target, 1.5, 6).unwrap();
    let pt_order =
        convergence_order(Scheme::ProductTrapezoid, Monomial::new(1.0, 2.0), 0.5, 6).unwrap();

    outcome(
        worst_rec <= 1e-11
            && worst_refl <= 1e-9
            && worst_oracle <= 1e-9
            && worst_weight <= 1e-10
            && sign_ok
            && (gl_order - 1.0).abs() <= 0.3
            && (pt_order - 2.0).abs() <= 0.4,
        format!(
            "recurrence {worst_rec:.1e}, reflection {worst_refl:.1e}, oracle {worst_oracle:.1e}, weights {worst_weight:.1e} (signs {}), orders GL {gl_order:.2} / trapezoid {pt_order:.2}",
            if sign_ok { "ok" } else { "wrong" }
        ),
    )
}

fn negative_control() -> Outcome {
    let mut r = rng(SEED + 7);
    let mut rejected = 0;
    for i in 0..CONTROL_DRAWS {
        let d = draw(&mut r, false);
        let mut sol = homogeneous_solution(&d);
        sol.amplitude *= if i % 2 == 0 { 1.01 } else { 0.99 };
        let report = ode_residual(&sol, &d.bond, d.alpha, &grid()).unwrap();
        if !report.certified() {
            rejected += 1;
        }
    }
    let rate = rejected as f64 / CONTROL_DRAWS as f64;
    outcome(
        rate >= 0.99,
        format!(
            "{rejected}/{CONTROL_DRAWS} perturbed amplitudes rejected ({:.1}%)",
            100.0 * rate
        ),
    )
}

fn kirchhoff_forms() -> Outcome {
    let third = 1.0 / 3.0;
    let symmetric = StarGraphProblem::homogeneous(
        1.5,
        vec![
            BondSpec::homogeneous(2.0, 1.0, third, 2.0),
            BondSpec::homogeneous(2.0, 1.0, third, 1.0),
            BondSpec::homogeneous(2.0, 1.0, third, 1.0),
        ],
    );
    let s = compare_kirchhoff_forms(&symmetric).unwrap();
    let sym_gap = s
        .derived_normalized
        .iter()
        .zip(&s.printed_normalized)
        .map(|(d, p)| rel(*d, *p))
        .fold(0.0_f64, f64::max);

    let asymmetric = StarGraphProblem::homogeneous(
        1.5,
        vec![
            BondSpec::homogeneous(1.0, 1.0, third, 2.0),
            BondSpec::homogeneous(2.0, 1.0, third, 1.0),
            BondSpec::homogeneous(0.5, 1.0, third, 1.0),
        ],
    );
    let a = compare_kirchhoff_forms(&asymmetric).unwrap();
    let ratio_gap = a
        .ratios
        .iter()
        .zip(&a.predicted_ratios)
        .zip(&asymmetric.bonds)
        .map(|((r, p), b)| rel(*r, *p).max(rel(*p, b.length.powf(-1.5))))
        .fold(0.0_f64, f64::max);
    let forms_differ = a
        .derived_normalized
        .iter()
        .zip(&a.printed_normalized)
        .any(|(d, p)| rel(*d, *p) > 1e-3);
    outcome(
        sym_gap <= 1e-12 && ratio_gap <= 1e-12 && forms_differ,
        format!(
            "symmetric forms agree to {sym_gap:.1e}; asymmetric ratio vs L^-alpha {ratio_gap:.1e}, forms differ: {forms_differ}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            "symmetric split lambda1 = lambda2 + lambda3",
            symmetric_split,
        ),
        ("exact power-law solution identity", exact_solution_identity),
        ("forced amplitude reduces to homogeneous", forced_reduction),
        ("planted forced roots", planted_roots),
        ("free-end boundary conditions", free_end_conditions),
        ("operator kernel properties", operator_kernels),
        ("negative control", negative_control),
        ("Kirchhoff coefficient forms", kirchhoff_forms),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", i + 1, o.detail);
        if !o.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
