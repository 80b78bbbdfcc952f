//! Matching conditions at the branch vertex.
//!
//! With `y_j = A_j x^{p_j}` the weighted trace and the weighted flux of bond `j` are
//!
//! ```text
//! c_j = λ_j^{1/(m_j-1)} A_j L_j^{p_j}
//! k_j = λ_j^{m_j/(m_j-1)} A_j Γ(p_j+1)/Γ(p_j+2-α) L_j^{p_j+1-α}     (= λ_j^{..} (D^{α-1} y_j)(L_j))
//! ```
//!
//! and the vertex conditions are `c_1 = c_2 = … = c_N` and `k_1 = k_2 + … + k_N`.

use serde::{Deserialize, Serialize};

use crate::closed_form::{
    build_solution, build_solutions, real_pow, AmplitudeChoice, PowerSolution,
};
use crate::error::{domain, Error, Result, ScanTrace};
use crate::model::{gamma_star, solution_exponent, validate, Severity, StarGraphProblem};
use crate::roots::{log_space, scan_roots};
use crate::specfun::gamma_ratio;

/// Relative tolerance for a vertex condition to count as satisfied by a solver.
pub const SOLVED_TOLERANCE: f64 = 1e-9;
/// Relative tolerance met by closed-form constructions.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexResiduals {
    /// `c_j - c_1` for `j = 2..N`.
    pub continuity_gaps: Vec<f64>,
    /// `k_1 - (k_2 + … + k_N)`.
    pub kirchhoff_gap: f64,
    /// `max |c_j|`.
    pub scale: f64,
    /// `max |k_j|`.
    pub flux_scale: f64,
}

impl VertexResiduals {
    pub fn max_continuity_relative(&self) -> f64 {
        let worst = self
            .continuity_gaps
            .iter()
            .fold(0.0_f64, |acc, g| acc.max(g.abs()));
        worst / self.scale.max(f64::MIN_POSITIVE)
    }

    pub fn kirchhoff_relative(&self) -> f64 {
        self.kirchhoff_gap.abs() / self.flux_scale.max(f64::MIN_POSITIVE)
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.max_continuity_relative() <= tol && self.kirchhoff_relative() <= tol
    }
}

fn check_counts(problem: &StarGraphProblem, solutions: &[PowerSolution]) -> Result<()> {
    if problem.bonds.len() == solutions.len() {
        Ok(())
    } else {
        Err(domain(format!(
            "{} bonds but {} solutions",
            problem.bonds.len(),
            solutions.len()
        )))
    }
}

/// Weighted traces `c_j`.
pub fn continuity_values(
    problem: &StarGraphProblem,
    solutions: &[PowerSolution],
) -> Result<Vec<f64>> {
    check_counts(problem, solutions)?;
    problem
        .bonds
        .iter()
        .zip(solutions)
        .map(|(bond, sol)| {
            let w = real_pow(bond.lam, 1.0 / (bond.m - 1.0))?;
            Ok(w * sol.amplitude * bond.length.powf(sol.exponent))
        })
        .collect()
}

/// Weighted fluxes `k_j`, from the power rule applied to `D^{α-1} y_j` at `L_j`.
pub fn kirchhoff_terms(
    problem: &StarGraphProblem,
    solutions: &[PowerSolution],
) -> Result<Vec<f64>> {
    check_counts(problem, solutions)?;
    let alpha = problem.alpha;
    problem
        .bonds
        .iter()
        .zip(solutions)
        .map(|(bond, sol)| {
            let w = real_pow(bond.lam, bond.m / (bond.m - 1.0))?;
            let p = sol.exponent;
            let ratio = gamma_ratio(p + 1.0, p + 2.0 - alpha)?;
            Ok(w * sol.amplitude * ratio * bond.length.powf(p + 1.0 - alpha))
        })
        .collect()
}

/// Gaps of the vertex conditions for already-built solutions.
pub fn residuals_from(
    problem: &StarGraphProblem,
    solutions: &[PowerSolution],
) -> Result<VertexResiduals> {
    let c = continuity_values(problem, solutions)?;
    let k = kirchhoff_terms(problem, solutions)?;
    if c.is_empty() {
        return Err(domain("no bonds"));
    }
    let residuals = VertexResiduals {
        continuity_gaps: c[1..].iter().map(|cj| cj - c[0]).collect(),
        kirchhoff_gap: k[0] - k[1..].iter().sum::<f64>(),
        scale: c.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
        flux_scale: k.iter().fold(0.0_f64, |a, v| a.max(v.abs())),
    };
    let finite = residuals.continuity_gaps.iter().all(|g| g.is_finite())
        && residuals.kirchhoff_gap.is_finite()
        && residuals.scale.is_finite();
    if finite {
        Ok(residuals)
    } else {
        Err(domain("vertex residuals are not finite"))
    }
}

fn ensure_valid(problem: &StarGraphProblem) -> Result<()> {
    let errors: Vec<String> = validate(problem)
        .into_iter()
        .filter(|v| v.severity == Severity::Error)
        .map(|v| v.to_string())
        .collect();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(domain(format!("invalid problem: {}", errors.join("; "))))
    }
}

/// Build every bond solution (default amplitude choice) and report the vertex gaps.
pub fn vertex_residuals(problem: &StarGraphProblem) -> Result<VertexResiduals> {
    ensure_valid(problem)?;
    let solutions = build_solutions(problem, AmplitudeChoice::default())?;
    residuals_from(problem, &solutions)
}

/// `[Γ(p+1)/Γ(γ*+1)]^{1/(m-1)}`, the λ-free part of the homogeneous trace.
fn homogeneous_trace_factor(problem: &StarGraphProblem, j: usize) -> Result<f64> {
    let bond = &problem.bonds[j];
    let p = solution_exponent(bond, problem.alpha)?;
    let gs = gamma_star(bond, problem.alpha)?;
    real_pow(gamma_ratio(p + 1.0, gs + 1.0)?, 1.0 / (bond.m - 1.0))
}

/// λ-free homogeneous traces `c_j = [Γ(p+1)/Γ(γ*+1)]^{1/(m-1)} L^p`.
pub fn homogeneous_traces(problem: &StarGraphProblem) -> Result<Vec<f64>> {
    (0..problem.bonds.len())
        .map(|j| {
            let p = solution_exponent(&problem.bonds[j], problem.alpha)?;
            Ok(homogeneous_trace_factor(problem, j)? * problem.bonds[j].length.powf(p))
        })
        .collect()
}

/// λ-free flux coefficients `K_j` with `k_j = K_j λ_j` (homogeneous case).
pub fn flux_coefficients_homogeneous(problem: &StarGraphProblem) -> Result<Vec<f64>> {
    let alpha = problem.alpha;
    (0..problem.bonds.len())
        .map(|j| {
            let bond = &problem.bonds[j];
            let p = solution_exponent(bond, alpha)?;
            let c = homogeneous_trace_factor(problem, j)?;
            Ok(c * gamma_ratio(p + 1.0, p + 2.0 - alpha)? * bond.length.powf(p + 1.0 - alpha))
        })
        .collect()
}

fn require_kind(problem: &StarGraphProblem, forced: bool) -> Result<()> {
    if problem.is_forced() == forced {
        Ok(())
    } else {
        Err(domain(format!(
            "operation needs a {} problem",
            if forced { "forced" } else { "homogeneous" }
        )))
    }
}

/// Lengths `L_2..L_N` that satisfy weighted continuity for the given `L_1`.
/// Returns all `N` lengths, the first being `length_1`.
pub fn solve_lengths_homogeneous(problem: &StarGraphProblem, length_1: f64) -> Result<Vec<f64>> {
    require_kind(problem, false)?;
    if problem.bonds.is_empty() || !(length_1 > 0.0) {
        return Err(domain("need at least one bond and L_1 > 0"));
    }
    let p1 = solution_exponent(&problem.bonds[0], problem.alpha)?;
    let c1 = homogeneous_trace_factor(problem, 0)? * length_1.powf(p1);
    let mut lengths = vec![length_1];
    for j in 1..problem.bonds.len() {
        let p = solution_exponent(&problem.bonds[j], problem.alpha)?;
        if p == 0.0 {
            return Err(Error::Degenerate(format!(
                "bond {}: zero solution exponent leaves the trace independent of L",
                j + 1
            )));
        }
        let ratio = c1 / homogeneous_trace_factor(problem, j)?;
        if !(ratio > 0.0) {
            return Err(Error::Branch {
                base: ratio,
                exponent: 1.0 / p,
            });
        }
        lengths.push(ratio.powf(1.0 / p));
    }
    Ok(lengths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaAssignment {
    /// `λ_1..λ_N`, with `λ_1` as given.
    pub lambdas: Vec<f64>,
    /// `K_j`, so that any `λ` with `K_1 λ_1 = Σ_{j≥2} K_j λ_j` also works.
    pub flux_coefficients: Vec<f64>,
}

/// Solve the homogeneous Kirchhoff rule for `λ_2..λ_N` given `λ_1`.
///
/// Continuity does not involve `λ` here, so it has to hold already. With more
/// than one unknown the flux is split equally over the out-going bonds.
pub fn solve_lambdas_homogeneous(
    problem: &StarGraphProblem,
    lambda_1: f64,
) -> Result<LambdaAssignment> {
    require_kind(problem, false)?;
    let n = problem.bonds.len();
    if n < 2 {
        return Err(domain("need at least 2 bonds"));
    }
    if lambda_1 == 0.0 || !lambda_1.is_finite() {
        return Err(domain(format!(
            "lambda_1 must be finite and nonzero, got {lambda_1}"
        )));
    }
    let traces = homogeneous_traces(problem)?;
    let scale = traces.iter().fold(0.0_f64, |a, c| a.max(c.abs()));
    let worst = traces[1..]
        .iter()
        .map(|c| (c - traces[0]).abs())
        .fold(0.0_f64, f64::max);
    if worst > SOLVED_TOLERANCE * scale {
        return Err(Error::Compatibility(format!(
            "weighted continuity fails independently of lambda: max |c_j - c_1| = {worst:e} (relative {:e}); adjust lengths",
            worst / scale
        )));
    }
    let k = flux_coefficients_homogeneous(problem)?;
    if let Some(j) = k.iter().position(|&kj| kj == 0.0 || !kj.is_finite()) {
        return Err(Error::Degenerate(format!(
            "bond {}: flux coefficient is {}",
            j + 1,
            k[j]
        )));
    }
    let share = k[0] * lambda_1 / (n - 1) as f64;
    let mut lambdas = vec![lambda_1];
    lambdas.extend(k[1..].iter().map(|kj| share / kj));
    Ok(LambdaAssignment {
        lambdas,
        flux_coefficients: k,
    })
}

/// Forcing `b_j` that gives bond `j` with `λ_j` the same vertex-weighted
/// forcing `b λ^{1/(m-1)}` as a reference bond with `(b_ref, λ_ref)`.
///
/// Bonds sharing `m, β, L` and this weighted forcing have equal traces and
/// fluxes proportional to `λ`, which is what makes `λ_1 = λ_2 + … + λ_N` work
/// with a forcing term.
pub fn matched_forcing(b_ref: f64, lambda_ref: f64, lambda: f64, m: f64) -> Result<f64> {
    Ok(b_ref * real_pow(lambda_ref / lambda, 1.0 / (m - 1.0))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcedStatus {
    Solved,
    Incompatible,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondFailure {
    pub bond_index: usize,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForcedVertexReport {
    pub status: ForcedStatus,
    /// `λ_1..λ_N`; NaN where stage 1 failed.
    pub lambdas: Vec<f64>,
    pub solutions: Vec<PowerSolution>,
    pub residuals: Option<VertexResiduals>,
    pub failures: Vec<BondFailure>,
}

const FORCED_LAMBDA_SPAN: f64 = 1e3;
const FORCED_LAMBDA_PANELS: usize = 120;

/// Forced vertex system: fix `λ_1`, solve continuity `c_j(λ_j) = c_1` for
/// each `j ≥ 2` (amplitudes re-solved at every trial `λ_j`), then report the
/// Kirchhoff gap as a compatibility residual.
///
/// `guesses[j-2]` centres the `λ_j` scan, which covers three decades either
/// side with the guess's sign; missing guesses fall back to the problem's `λ_j`.
pub fn solve_vertex_forced(
    problem: &StarGraphProblem,
    lambda_1: f64,
    guesses: &[f64],
) -> Result<ForcedVertexReport> {
    require_kind(problem, true)?;
    let n = problem.bonds.len();
    if n < 2 {
        return Err(domain("need at least 2 bonds"));
    }
    let alpha = problem.alpha;
    let kind = problem.kind;
    let choice = AmplitudeChoice::default();
    let bond_1 = problem.bonds[0].with_lambda(lambda_1);
    let sol_1 = build_solution(1, &bond_1, alpha, kind, choice)?;
    let c1 = real_pow(lambda_1, 1.0 / (bond_1.m - 1.0))?
        * sol_1.amplitude
        * bond_1.length.powf(sol_1.exponent);

    let mut lambdas = vec![lambda_1];
    let mut failures = Vec::new();
    for j in 1..n {
        let bond = problem.bonds[j];
        let guess = guesses.get(j - 1).copied().unwrap_or(bond.lam);
        if guess == 0.0 || !guess.is_finite() {
            failures.push(BondFailure {
                bond_index: j + 1,
                error: domain(format!("lambda guess {guess} must be finite and nonzero")),
            });
            lambdas.push(f64::NAN);
            continue;
        }
        let sign = guess.signum();
        let gap = |mag: f64| -> f64 {
            let lam = sign * mag;
            let trial = bond.with_lambda(lam);
            build_solution(j + 1, &trial, alpha, kind, choice)
                .and_then(|s| {
                    Ok(real_pow(lam, 1.0 / (bond.m - 1.0))?
                        * s.amplitude
                        * bond.length.powf(s.exponent)
                        - c1)
                })
                .unwrap_or(f64::NAN)
        };
        let mag = guess.abs();
        let points = log_space(
            mag / FORCED_LAMBDA_SPAN,
            mag * FORCED_LAMBDA_SPAN,
            FORCED_LAMBDA_PANELS,
        );
        let (roots, trace) = scan_roots(&gap, &points, 1e-15 * c1.abs());
        // jumps between amplitude branches show up as spurious sign changes
        let accept = 1e-9 * c1.abs().max(f64::MIN_POSITIVE);
        let best = roots
            .into_iter()
            .filter(|&r| gap(r).abs() <= accept)
            .min_by(|a, b| (a / mag).ln().abs().total_cmp(&(b / mag).ln().abs()));
        match best {
            Some(r) => lambdas.push(sign * r),
            None => {
                failures.push(BondFailure {
                    bond_index: j + 1,
                    error: Error::NoRoot {
                        trace: ScanTrace {
                            lo: sign * trace.lo,
                            hi: sign * trace.hi,
                            samples: trace.samples,
                        },
                    },
                });
                lambdas.push(f64::NAN);
            }
        }
    }

    if !failures.is_empty() {
        return Ok(ForcedVertexReport {
            status: ForcedStatus::Failed,
            lambdas,
            solutions: Vec::new(),
            residuals: None,
            failures,
        });
    }
    let solved = problem.with_lambdas(&lambdas);
    let solutions = build_solutions(&solved, choice)?;
    let residuals = residuals_from(&solved, &solutions)?;
    let status = if residuals.satisfied(SOLVED_TOLERANCE) {
        ForcedStatus::Solved
    } else {
        ForcedStatus::Incompatible
    };
    Ok(ForcedVertexReport {
        status,
        lambdas,
        solutions,
        residuals: Some(residuals),
        failures,
    })
}

/// Kirchhoff terms with the `L`-exponents and Gamma factors exactly as they
/// appear in the commonly quoted closed-form vertex systems:
///
/// - homogeneous: `λ_j/(γ*_j+1) [Γ(p_j+1)/Γ(γ*_j+1)]^{1/(m_j-1)+1} L_j^{p_j+1}`
/// - forced: `λ_j^{m_j/(m_j-1)} A_j Γ(γ_j)/Γ(γ_j-α) L_j^{γ_j-α-1}`, `γ_j = p_j + 1`
///
/// These differ from [`kirchhoff_terms`] (which applies `D^{α-1}` to `y_j`)
/// by `L_j^{α}` and by `(p_j+1-α)/L_j` respectively. Kept for diagnostics only.
pub fn kirchhoff_terms_as_printed(
    problem: &StarGraphProblem,
    solutions: &[PowerSolution],
) -> Result<Vec<f64>> {
    check_counts(problem, solutions)?;
    let alpha = problem.alpha;
    problem
        .bonds
        .iter()
        .zip(solutions)
        .map(|(bond, sol)| {
            let p = sol.exponent;
            if problem.is_forced() {
                let w = real_pow(bond.lam, bond.m / (bond.m - 1.0))?;
                let g = p + 1.0;
                Ok(w * sol.amplitude
                    * gamma_ratio(g, g - alpha)?
                    * bond.length.powf(g - alpha - 1.0))
            } else {
                let gs = gamma_star(bond, alpha)?;
                let ratio = gamma_ratio(p + 1.0, gs + 1.0)?;
                let pow = real_pow(ratio, 1.0 / (bond.m - 1.0) + 1.0)?;
                Ok(bond.lam / (gs + 1.0) * pow * bond.length.powf(p + 1.0))
            }
        })
        .collect()
}

/// Side-by-side Kirchhoff terms in both forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KirchhoffComparison {
    pub derived: Vec<f64>,
    pub printed: Vec<f64>,
    /// `derived_j / printed_j`.
    pub ratios: Vec<f64>,
    /// The ratio predicted analytically: `L^{-α}` (homogeneous) or `L/(p+1-α)` (forced).
    pub predicted_ratios: Vec<f64>,
    /// `k_j / k_1` in each form; these agree whenever all ratios are equal.
    pub derived_normalized: Vec<f64>,
    pub printed_normalized: Vec<f64>,
    /// Kirchhoff gap relative to `max |k_j|` in each form.
    pub derived_gap: f64,
    pub printed_gap: f64,
}

pub fn compare_kirchhoff_forms(problem: &StarGraphProblem) -> Result<KirchhoffComparison> {
    ensure_valid(problem)?;
    let solutions = build_solutions(problem, AmplitudeChoice::default())?;
    let derived = kirchhoff_terms(problem, &solutions)?;
    let printed = kirchhoff_terms_as_printed(problem, &solutions)?;
    let ratios = derived.iter().zip(&printed).map(|(d, p)| d / p).collect();
    let predicted_ratios = problem
        .bonds
        .iter()
        .zip(&solutions)
        .map(|(bond, sol)| {
            if problem.is_forced() {
                bond.length / (sol.exponent + 1.0 - problem.alpha)
            } else {
                bond.length.powf(-problem.alpha)
            }
        })
        .collect();
    let normalize = |v: &[f64]| v.iter().map(|x| x / v[0]).collect::<Vec<_>>();
    let rel_gap = |v: &[f64]| {
        let s = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        (v[0] - v[1..].iter().sum::<f64>()).abs() / s
    };
    Ok(KirchhoffComparison {
        derived_normalized: normalize(&derived),
        printed_normalized: normalize(&printed),
        derived_gap: rel_gap(&derived),
        printed_gap: rel_gap(&printed),
        derived,
        printed,
        ratios,
        predicted_ratios,
    })
}
