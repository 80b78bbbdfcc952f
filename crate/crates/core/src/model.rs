//! Star-graph problem data and validation.
//!
//! Every bond `j` carries the coordinate `x ∈ [0, L_j]`; the free end is at
//! `x = 0` and the shared branch vertex at `x = L_j`. Bond 1 (index 0 in
//! [`StarGraphProblem::bonds`]) is the in-flow side of the Kirchhoff rule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `|m - 1|` below this counts as the excluded linear case.
pub const LINEAR_POWER_TOLERANCE: f64 = 1e-12;
/// Allowed mismatch between a given forcing exponent and `(β + mα)/(1 - m)`.
pub const FORCING_EXPONENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BondSpec {
    pub length: f64,
    pub beta: f64,
    pub m: f64,
    pub lam: f64,
    pub forcing_b: Option<f64>,
    pub forcing_nu: Option<f64>,
}

impl BondSpec {
    pub fn homogeneous(length: f64, beta: f64, m: f64, lam: f64) -> Self {
        Self {
            length,
            beta,
            m,
            lam,
            forcing_b: None,
            forcing_nu: None,
        }
    }

    /// Forced bond with `ν` taken from the exponent-matching rule.
    pub fn forced(length: f64, beta: f64, m: f64, lam: f64, b: f64, alpha: f64) -> Result<Self> {
        let mut bond = Self::homogeneous(length, beta, m, lam);
        bond.forcing_b = Some(b);
        bond.forcing_nu = Some(gamma_star(&bond, alpha)?);
        Ok(bond)
    }

    pub fn with_lambda(mut self, lam: f64) -> Self {
        self.lam = lam;
        self
    }

    /// Forcing amplitude, zero when absent.
    pub fn b(&self) -> f64 {
        self.forcing_b.unwrap_or(0.0)
    }
}

fn check_nonlinear(bond: &BondSpec) -> Result<()> {
    if (bond.m - 1.0).abs() < LINEAR_POWER_TOLERANCE {
        Err(domain(format!(
            "nonlinearity power m = {} must differ from 1",
            bond.m
        )))
    } else {
        Ok(())
    }
}

/// `γ* = (β + mα)/(1 - m)`.
pub fn gamma_star(bond: &BondSpec, alpha: f64) -> Result<f64> {
    check_nonlinear(bond)?;
    Ok((bond.beta + bond.m * alpha) / (1.0 - bond.m))
}

/// Exponent `p = (β + α)/(1 - m)` of the power solution; `p = γ* + α`.
pub fn solution_exponent(bond: &BondSpec, alpha: f64) -> Result<f64> {
    check_nonlinear(bond)?;
    Ok((bond.beta + alpha) / (1.0 - bond.m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Homogeneous,
    Forced,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Homogeneous => "homogeneous",
            Self::Forced => "forced",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarGraphProblem {
    pub alpha: f64,
    pub bonds: Vec<BondSpec>,
    pub kind: ProblemKind,
}

impl StarGraphProblem {
    pub fn new(alpha: f64, kind: ProblemKind, bonds: Vec<BondSpec>) -> Self {
        Self { alpha, bonds, kind }
    }

    pub fn homogeneous(alpha: f64, bonds: Vec<BondSpec>) -> Self {
        Self::new(alpha, ProblemKind::Homogeneous, bonds)
    }

    pub fn forced(alpha: f64, bonds: Vec<BondSpec>) -> Self {
        Self::new(alpha, ProblemKind::Forced, bonds)
    }

    /// `n` identical bonds, all with the same `λ`.
    pub fn symmetric(alpha: f64, n: usize, bond: BondSpec) -> Self {
        Self::homogeneous(alpha, vec![bond; n])
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.bonds.iter().map(|b| b.lam).collect()
    }

    pub fn with_lambdas(&self, lambdas: &[f64]) -> Self {
        let mut out = self.clone();
        for (bond, &lam) in out.bonds.iter_mut().zip(lambdas) {
            bond.lam = lam;
        }
        out
    }

    pub fn is_forced(&self) -> bool {
        self.kind == ProblemKind::Forced
    }

    /// True when [`validate`] reports no `Error`-severity violation.
    pub fn is_valid(&self) -> bool {
        validate(self).iter().all(|v| v.severity != Severity::Error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    AlphaRange,
    BondCount,
    NonFinite,
    PositiveLength,
    NonlinearPower,
    NonzeroLambda,
    ForcedPositivePower,
    ForcingPresent,
    ForcingExponent,
    UnusedForcing,
    Admissibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// 1-based bond index; `None` for problem-wide constraints.
    pub bond_index: Option<usize>,
    pub constraint: Constraint,
    pub value: f64,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        match self.bond_index {
            Some(j) => write!(f, "{sev}: bond {j}: {}", self.message),
            None => write!(f, "{sev}: {}", self.message),
        }
    }
}

/// Check every invariant of the problem. Violations come back in a fixed
/// order: problem-wide first, then bond by bond.
pub fn validate(problem: &StarGraphProblem) -> Vec<Violation> {
    let mut out = Vec::new();
    let alpha = problem.alpha;
    let mut push = |bond_index, constraint, value, severity, message: String| {
        out.push(Violation {
            bond_index,
            constraint,
            value,
            severity,
            message,
        })
    };

    let alpha_ok = alpha > 1.0 && alpha < 2.0;
    if !alpha_ok {
        push(
            None,
            Constraint::AlphaRange,
            alpha,
            Severity::Error,
            format!("alpha out of (1,2): {alpha}"),
        );
    }
    if problem.bonds.len() < 2 {
        push(
            None,
            Constraint::BondCount,
            problem.bonds.len() as f64,
            Severity::Error,
            format!(
                "star graph needs at least 2 bonds, got {}",
                problem.bonds.len()
            ),
        );
    }

    let forced = problem.is_forced();
    for (i, bond) in problem.bonds.iter().enumerate() {
        let j = Some(i + 1);
        let fields = [
            ("length", bond.length),
            ("beta", bond.beta),
            ("m", bond.m),
            ("lambda", bond.lam),
        ];
        let mut finite = true;
        for (name, v) in fields {
            if !v.is_finite() {
                finite = false;
                push(
                    j,
                    Constraint::NonFinite,
                    v,
                    Severity::Error,
                    format!("{name} is not finite"),
                );
            }
        }
        if !finite {
            continue;
        }
        if bond.length <= 0.0 {
            push(
                j,
                Constraint::PositiveLength,
                bond.length,
                Severity::Error,
                format!("length must be > 0, got {}", bond.length),
            );
        }
        let nonlinear = (bond.m - 1.0).abs() >= LINEAR_POWER_TOLERANCE;
        if !nonlinear {
            push(
                j,
                Constraint::NonlinearPower,
                bond.m,
                Severity::Error,
                "m ≠ 1 required".to_string(),
            );
        }
        if bond.lam == 0.0 {
            push(
                j,
                Constraint::NonzeroLambda,
                bond.lam,
                Severity::Error,
                "lambda ≠ 0 required".to_string(),
            );
        }

        if forced {
            if bond.m <= 0.0 {
                push(
                    j,
                    Constraint::ForcedPositivePower,
                    bond.m,
                    Severity::Error,
                    format!("forced problems need m > 0, got {}", bond.m),
                );
            }
            match (bond.forcing_b, bond.forcing_nu) {
                (Some(b), Some(nu)) => {
                    if !b.is_finite() || !nu.is_finite() {
                        push(
                            j,
                            Constraint::NonFinite,
                            if b.is_finite() { nu } else { b },
                            Severity::Error,
                            "forcing term is not finite".to_string(),
                        );
                    } else if nonlinear && alpha.is_finite() {
                        let expected = (bond.beta + bond.m * alpha) / (1.0 - bond.m);
                        let tol = FORCING_EXPONENT_TOLERANCE * expected.abs().max(1.0);
                        if (nu - expected).abs() > tol {
                            push(
                                j,
                                Constraint::ForcingExponent,
                                nu,
                                Severity::Error,
                                format!(
                                    "forcing exponent nu = {nu} must equal (beta + m*alpha)/(1 - m) = {expected}"
                                ),
                            );
                        }
                    }
                }
                _ => push(
                    j,
                    Constraint::ForcingPresent,
                    f64::NAN,
                    Severity::Error,
                    "forced problems need both b and nu".to_string(),
                ),
            }
        } else if bond.forcing_b.is_some() || bond.forcing_nu.is_some() {
            push(
                j,
                Constraint::UnusedForcing,
                bond.b(),
                Severity::Warning,
                "forcing term ignored in a homogeneous problem".to_string(),
            );
        }

        if nonlinear && alpha.is_finite() {
            let gap = (bond.beta + bond.m * alpha) / (1.0 - bond.m) - alpha;
            if !(gap > 0.0 && gap < 1.0) {
                push(
                    j,
                    Constraint::Admissibility,
                    gap,
                    Severity::Warning,
                    format!("gamma* - alpha = {gap} outside (0,1)"),
                );
            }
        }
    }
    out
}
