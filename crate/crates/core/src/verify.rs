//! Numeric checks of the closed-form solutions that do not reuse the power rule
//! on the left-hand side.

use serde::{Deserialize, Serialize};

use crate::closed_form::{real_pow, PowerSolution};
use crate::error::{domain, Error, Result};
use crate::frac_ops::{
    power_derivative, power_integral, rl_derivative_numeric, rl_integral_numeric, GridSamples,
    GridSpec, Monomial,
};
use crate::model::BondSpec;

/// `max_rel_residual` at or below this certifies a solution.
pub const RESIDUAL_THRESHOLD: f64 = 1e-3;
pub const CHECK_POINTS: usize = 16;
/// Check points start at this fraction of the bond length.
pub const CHECK_START: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckPoint {
    pub x: f64,
    pub numeric: f64,
    pub analytic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EndLimit {
    Vanishes,
    Finite,
    Divergent,
}

impl EndLimit {
    fn classify(exponent: f64) -> Self {
        if exponent > 0.0 {
            Self::Vanishes
        } else if exponent == 0.0 {
            Self::Finite
        } else {
            Self::Divergent
        }
    }
}

/// Behaviour of `I^{2-α} y` and `D^{α-1} y` at the free end `x → 0+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeftEnd {
    pub integral_limit_exponent: f64,
    pub derivative_limit_exponent: f64,
    pub integral_limit: EndLimit,
    pub derivative_limit: EndLimit,
    pub both_vanish: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub bond_index: usize,
    pub max_rel_residual: f64,
    pub check_points: Vec<CheckPoint>,
    pub left_end: LeftEnd,
}

impl ResidualReport {
    pub fn certified(&self) -> bool {
        self.max_rel_residual <= RESIDUAL_THRESHOLD
    }
}

/// Analytic free-end exponents: `I^{2-α} y ~ x^{p+2-α}`, `D^{α-1} y ~ x^{p+1-α}`.
pub fn left_end_conditions(solution: &PowerSolution, alpha: f64) -> LeftEnd {
    let p = solution.exponent;
    let integral_limit_exponent = p + 2.0 - alpha;
    let derivative_limit_exponent = p + 1.0 - alpha;
    LeftEnd {
        integral_limit_exponent,
        derivative_limit_exponent,
        integral_limit: EndLimit::classify(integral_limit_exponent),
        derivative_limit: EndLimit::classify(derivative_limit_exponent),
        both_vanish: integral_limit_exponent > 0.0 && derivative_limit_exponent > 0.0,
    }
}

/// Right-hand side `λ x^β y^m + b x^ν` for a bond.
fn equation_rhs(bond: &BondSpec, y: f64, x: f64) -> Result<f64> {
    let mut rhs = bond.lam * x.powf(bond.beta) * real_pow(y, bond.m)?;
    if let (Some(b), Some(nu)) = (bond.forcing_b, bond.forcing_nu) {
        rhs += b * x.powf(nu);
    }
    Ok(rhs)
}

/// Compare Grünwald–Letnikov `D^α y` with the equation's right-hand side at
/// [`CHECK_POINTS`] equally spaced points of `[L/4, L]`. Each point uses `grid.n`
/// GL steps between 0 and the point.
pub fn ode_residual(
    solution: &PowerSolution,
    bond: &BondSpec,
    alpha: f64,
    grid: &GridSpec,
) -> Result<ResidualReport> {
    grid.check()?;
    let length = bond.length;
    let y = |x: f64| solution.eval(x);
    let mut check_points = Vec::with_capacity(CHECK_POINTS);
    let mut max_rel = 0.0_f64;
    for i in 0..CHECK_POINTS {
        let frac = CHECK_START + (1.0 - CHECK_START) * i as f64 / (CHECK_POINTS - 1) as f64;
        let x = length * frac;
        let numeric = rl_derivative_numeric(y, alpha, x, x / grid.n as f64)?;
        let analytic = equation_rhs(bond, y(x), x)?;
        let rel = (numeric - analytic).abs() / analytic.abs().max(1e-30);
        max_rel = max_rel.max(rel);
        check_points.push(CheckPoint {
            x,
            numeric,
            analytic,
        });
    }
    if max_rel.is_nan() {
        return Err(domain(format!(
            "bond {}: residual is NaN",
            solution.bond_index
        )));
    }
    Ok(ResidualReport {
        bond_index: solution.bond_index,
        max_rel_residual: max_rel,
        check_points,
        left_end: left_end_conditions(solution, alpha),
    })
}

/// `|(I^{2-α} y)(x)|` by product-trapezoidal quadrature at `x = L/256, L/1024,
/// L/4096, L/16384` (nodes of the graded grid when `grading = 2` and
/// `n` is a multiple of 128); otherwise at the nearest grid nodes to those points.
pub fn free_end_integral_decay(
    solution: &PowerSolution,
    length: f64,
    alpha: f64,
    grid: &GridSpec,
) -> Result<Vec<(f64, f64)>> {
    let samples = GridSamples::sample(grid, length, |x| solution.eval(x))?;
    [256.0, 1024.0, 4096.0, 16384.0]
        .iter()
        .map(|d| {
            let target = length / d;
            let i = samples.nodes.partition_point(|&t| t < target);
            let i = i.clamp(1, samples.nodes.len() - 1);
            let x = samples.nodes[i];
            Ok((x, rl_integral_numeric(&samples, 2.0 - alpha, x)?.abs()))
        })
        .collect()
}

/// Numeric schemes whose empirical order [`convergence_order`] can measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// `D^q` by Grünwald–Letnikov, first order.
    GrunwaldLetnikov,
    /// `I^q` by product-trapezoidal quadrature on a uniform mesh, second order.
    ProductTrapezoid,
    /// The power rule itself; its error is zero, so the estimate is degenerate.
    PowerRule,
}

/// Coarsest step of a convergence study (`x = 1`, 32 steps).
const BASE_STEPS: usize = 32;
const NOISE_FLOOR: f64 = 1e-13;

/// Least-squares slope of `log(error)` against `log(step)` at `x = 1`, halving
/// the step `levels` times from `1/32`; the error is measured against the power rule.
pub fn convergence_order(scheme: Scheme, target: Monomial, q: f64, levels: usize) -> Result<f64> {
    if levels < 3 {
        return Err(domain(format!("need at least 3 levels, got {levels}")));
    }
    if target.expo < q {
        return Err(domain(format!(
            "target exponent {} below order {q}: not smooth enough at the check point",
            target.expo
        )));
    }
    let x = 1.0;
    let exact = match scheme {
        Scheme::ProductTrapezoid => power_integral(q, target)?.eval(x),
        _ => power_derivative(q, target)?.eval(x),
    };
    let mut points = Vec::with_capacity(levels);
    for level in 0..levels {
        let n = BASE_STEPS << level;
        let step = x / n as f64;
        let approx = match scheme {
            Scheme::GrunwaldLetnikov => rl_derivative_numeric(|t| target.eval(t), q, x, step)?,
            Scheme::ProductTrapezoid => {
                let grid = GridSpec::new(n, 1.0)?;
                let samples = GridSamples::sample(&grid, x, |t| target.eval(t))?;
                rl_integral_numeric(&samples, q, x)?
            }
            Scheme::PowerRule => power_derivative(q, target)?.eval(x),
        };
        let err = (approx - exact).abs();
        if !(err >= NOISE_FLOOR * exact.abs().max(1.0)) {
            return Err(Error::Degenerate(format!(
                "error {err:e} at level {level} is at the noise floor"
            )));
        }
        points.push((step.ln(), err.ln()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
