//! Exact per-bond power solutions `y_j(x) = A_j x^{p_j}`.
//!
//! The exponent is always `p = (β + α)/(1 - m)`. In the homogeneous case the
//! amplitude is explicit; with a forcing term it is a root of
//! `Γ(p+1-α)(λ A^m + b) - Γ(p+1) A = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::frac_ops::{power_derivative, Monomial};
use crate::model::{gamma_star, solution_exponent, BondSpec, ProblemKind, StarGraphProblem};
use crate::roots::{log_space, scan_roots};
use crate::specfun::{gamma, gamma_ratio};

/// Exponents closer than this to an integer are treated as integers when
/// raising negative bases.
const INTEGER_EXPONENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSolution {
    pub amplitude: f64,
    pub exponent: f64,
    /// 1-based.
    pub bond_index: usize,
}

impl PowerSolution {
    pub fn monomial(&self) -> Monomial {
        Monomial::new(self.amplitude, self.exponent)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.monomial().eval(x)
    }

    /// `γ_j = p_j + 1`.
    pub fn gamma(&self) -> f64 {
        self.exponent + 1.0
    }
}

/// Real power on the principal branch. Negative bases are accepted only for
/// integer exponents.
pub fn real_pow(base: f64, exponent: f64) -> Result<f64> {
    if base > 0.0 {
        return Ok(base.powf(exponent));
    }
    if base == 0.0 {
        return match exponent {
            e if e > 0.0 => Ok(0.0),
            0.0 => Ok(1.0),
            _ => Err(Error::Branch { base, exponent }),
        };
    }
    let k = exponent.round();
    if (exponent - k).abs() < INTEGER_EXPONENT_TOLERANCE && k.abs() < f64::from(i32::MAX) {
        Ok(base.powi(k as i32))
    } else {
        Err(Error::Branch { base, exponent })
    }
}

/// `A = [Γ(p+1) / (λ Γ(γ*+1))]^{1/(m-1)}`.
pub fn amplitude_homogeneous(bond: &BondSpec, alpha: f64) -> Result<f64> {
    let p = solution_exponent(bond, alpha)?;
    let gs = gamma_star(bond, alpha)?;
    if bond.lam == 0.0 {
        return Err(domain("lambda must be nonzero"));
    }
    let base = gamma_ratio(p + 1.0, gs + 1.0)? / bond.lam;
    let a = real_pow(base, 1.0 / (bond.m - 1.0))?;
    if a.is_finite() {
        Ok(a)
    } else {
        Err(domain(format!(
            "amplitude overflows (base {base}, m = {})",
            bond.m
        )))
    }
}

/// Residual of the forced amplitude equation, `Γ(p+1-α)(λ A^m + b) - Γ(p+1) A`.
pub fn treq_residual(amplitude: f64, bond: &BondSpec, alpha: f64) -> Result<f64> {
    let p = solution_exponent(bond, alpha)?;
    let g_low = gamma(p + 1.0 - alpha)?;
    let g_high = gamma(p + 1.0)?;
    let pow = real_pow(amplitude, bond.m).map_err(|_| {
        domain(format!(
            "amplitude {amplitude} cannot be raised to non-integer power m = {}",
            bond.m
        ))
    })?;
    Ok(g_low * (bond.lam * pow + bond.b()) - g_high * amplitude)
}

/// Search interval and panel count for the forced amplitude scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    pub panels: usize,
}

impl Default for RootBracket {
    fn default() -> Self {
        Self {
            lo: 1e-8,
            hi: 1e8,
            panels: 256,
        }
    }
}

impl RootBracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            ..Self::default()
        }
    }
}

/// All roots of [`treq_residual`] in the bracket, ascending.
pub fn amplitude_forced(bond: &BondSpec, alpha: f64, bracket: RootBracket) -> Result<Vec<f64>> {
    if !(bracket.lo > 0.0 && bracket.lo < bracket.hi && bracket.panels > 0) {
        return Err(domain(format!(
            "amplitude bracket needs 0 < lo < hi, got [{}, {}]",
            bracket.lo, bracket.hi
        )));
    }
    let p = solution_exponent(bond, alpha)?;
    let g_low = gamma(p + 1.0 - alpha)?;
    let g_high = gamma(p + 1.0)?;
    let (lam, b, m) = (bond.lam, bond.b(), bond.m);
    let residual = move |a: f64| g_low * (lam * a.powf(m) + b) - g_high * a;
    let scale = (g_low * b).abs().max(1.0);
    let points = log_space(bracket.lo, bracket.hi, bracket.panels);
    let (roots, trace) = scan_roots(&residual, &points, 1e-12 * scale);
    if roots.is_empty() {
        Err(Error::NoRoot { trace })
    } else {
        Ok(roots)
    }
}

/// Which forced-case root becomes the bond amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum AmplitudeChoice {
    #[default]
    SmallestPositive,
    Largest,
    Index(usize),
    Nearest(f64),
}

impl AmplitudeChoice {
    fn pick(&self, roots: &[f64]) -> Option<f64> {
        match *self {
            Self::SmallestPositive => roots.iter().copied().find(|&r| r > 0.0),
            Self::Largest => roots.last().copied(),
            Self::Index(i) => roots.get(i).copied(),
            Self::Nearest(t) => roots
                .iter()
                .copied()
                .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs())),
        }
    }
}

/// Power solution for one bond.
pub fn build_solution(
    bond_index: usize,
    bond: &BondSpec,
    alpha: f64,
    kind: ProblemKind,
    choice: AmplitudeChoice,
) -> Result<PowerSolution> {
    let exponent = solution_exponent(bond, alpha)?;
    let amplitude = match kind {
        ProblemKind::Homogeneous => amplitude_homogeneous(bond, alpha)?,
        ProblemKind::Forced => {
            let roots = amplitude_forced(bond, alpha, RootBracket::default())?;
            choice.pick(&roots).ok_or_else(|| {
                domain(format!(
                    "amplitude selector {choice:?} matches none of {} roots",
                    roots.len()
                ))
            })?
        }
    };
    if !(exponent > -1.0) {
        return Err(domain(format!(
            "solution exponent {exponent} must exceed -1 on bond {bond_index}"
        )));
    }
    Ok(PowerSolution {
        amplitude,
        exponent,
        bond_index,
    })
}

/// Power solutions for every bond, in bond order.
pub fn build_solutions(
    problem: &StarGraphProblem,
    choice: AmplitudeChoice,
) -> Result<Vec<PowerSolution>> {
    problem
        .bonds
        .iter()
        .enumerate()
        .map(|(i, b)| build_solution(i + 1, b, problem.alpha, problem.kind, choice))
        .collect()
}

/// `D^q y` of a power solution, exactly.
pub fn frac_derivative_of_solution(sol: &PowerSolution, q: f64) -> Result<Monomial> {
    if !(q > 0.0 && q < 2.0) {
        return Err(domain(format!("derivative order {q} outside (0, 2)")));
    }
    power_derivative(q, sol.monomial())
}

/// Forcing amplitude `b` that makes `A = 1` an exact root of the forced equation.
pub fn planted_forcing(bond: &BondSpec, alpha: f64) -> Result<f64> {
    let p = solution_exponent(bond, alpha)?;
    Ok(gamma_ratio(p + 1.0, p + 1.0 - alpha)? - bond.lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn forced_bond(lam: f64, b: f64) -> BondSpec {
        BondSpec::forced(1.0, 1.0, 1.0 / 3.0, lam, b, 1.5).unwrap()
    }

    #[test]
    fn homogeneous_amplitude_examples() {
        let b = BondSpec::homogeneous(1.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(
            amplitude_homogeneous(&b, 1.5).unwrap(),
            0.752_252_778_063_675,
            max_relative = 1e-12
        );
        let b = BondSpec::homogeneous(1.0, 1.0, 1.0 / 3.0, 2.0);
        // [2 Γ(3.25)/Γ(4.75)]^{3/2}, mpmath
        assert_relative_eq!(
            amplitude_homogeneous(&b, 1.5).unwrap(),
            0.170_429_516_556_287_79,
            max_relative = 1e-12
        );
        let b = BondSpec::homogeneous(1.0, 1.0, 1.0 / 3.0, -2.0);
        assert!(matches!(
            amplitude_homogeneous(&b, 1.5),
            Err(Error::Branch { .. })
        ));
    }

    #[test]
    fn negative_base_with_integer_power() {
        // m = 0: exponent 1/(m-1) = -1, so a negative lambda is fine
        let b = BondSpec::homogeneous(1.0, 0.0, 0.0, -1.0);
        assert_relative_eq!(
            amplitude_homogeneous(&b, 1.5).unwrap(),
            -0.752_252_778_063_675,
            max_relative = 1e-12
        );
    }

    #[test]
    fn real_pow_branches() {
        assert_eq!(real_pow(-2.0, 3.0).unwrap(), -8.0);
        assert_eq!(real_pow(-2.0, -1.0).unwrap(), -0.5);
        assert!(real_pow(-2.0, 0.5).is_err());
        assert_eq!(real_pow(0.0, 2.0).unwrap(), 0.0);
        assert!(real_pow(0.0, -1.0).is_err());
    }

    #[test]
    fn residual_examples() {
        let bond = forced_bond(2.0, 0.0);
        let planted = forced_bond(2.0, planted_forcing(&bond, 1.5).unwrap());
        assert!(treq_residual(1.0, &planted, 1.5).unwrap().abs() < 1e-12);

        let a = amplitude_homogeneous(&bond, 1.5).unwrap();
        assert!(treq_residual(a, &bond, 1.5).unwrap().abs() < 1e-10);

        let b = forced_bond(2.0, 0.7);
        let r = treq_residual(0.0, &b, 1.5).unwrap();
        assert_relative_eq!(r, gamma(3.25).unwrap() * 0.7, max_relative = 1e-14);
        assert!(r > 0.0);

        assert!(matches!(
            treq_residual(-1.0, &b, 1.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn forced_roots_planted_and_limit() {
        let bond = forced_bond(2.0, 0.0);
        let planted = forced_bond(2.0, planted_forcing(&bond, 1.5).unwrap());
        let roots = amplitude_forced(&planted, 1.5, RootBracket::default()).unwrap();
        assert!(roots.iter().any(|r| (r - 1.0).abs() < 1e-10), "{roots:?}");

        let tiny = forced_bond(2.0, 1e-12);
        let roots = amplitude_forced(&tiny, 1.5, RootBracket::default()).unwrap();
        assert_eq!(roots.len(), 1);
        let a = amplitude_homogeneous(&bond, 1.5).unwrap();
        assert_relative_eq!(roots[0], a, max_relative = 1e-6);
    }

    #[test]
    fn forced_root_for_unit_forcing() {
        // single root of Γ(3.25)(2A^{1/3} + 1) = Γ(4.75) A; mpmath findroot
        let bond = forced_bond(2.0, 1.0);
        let roots = amplitude_forced(&bond, 1.5, RootBracket::default()).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0], 0.375_457_549_490_402_5, max_relative = 1e-12);
    }

    #[test]
    fn no_root_reports_trace() {
        // m = 2, λ > 0, b > 0: residual stays positive on a small bracket
        let bond = BondSpec::forced(1.0, -4.0, 2.0, 1.0, 10.0, 1.5).unwrap();
        match amplitude_forced(&bond, 1.5, RootBracket::new(1e-3, 1e-2)) {
            Err(Error::NoRoot { trace }) => assert_eq!(trace.samples.len(), 257),
            other => panic!("expected NoRoot, got {other:?}"),
        }
        assert!(amplitude_forced(&bond, 1.5, RootBracket::new(1.0, 0.5)).is_err());
    }

    #[test]
    fn build_examples() {
        let b = BondSpec::homogeneous(1.0, 0.0, 0.0, 1.0);
        let s = build_solution(1, &b, 1.5, ProblemKind::Homogeneous, Default::default()).unwrap();
        assert_relative_eq!(s.amplitude, 0.752_252_778_063_675, max_relative = 1e-12);
        assert_eq!(s.exponent, 1.5);

        let bond = forced_bond(2.0, 0.0);
        let planted = forced_bond(2.0, planted_forcing(&bond, 1.5).unwrap());
        let s = build_solution(2, &planted, 1.5, ProblemKind::Forced, Default::default()).unwrap();
        assert!((s.amplitude - 1.0).abs() < 1e-10);
        assert_relative_eq!(s.exponent, 3.75, max_relative = 1e-14);
        assert_eq!(s.bond_index, 2);

        let tiny = forced_bond(2.0, 1e-12);
        let f = build_solution(1, &tiny, 1.5, ProblemKind::Forced, Default::default()).unwrap();
        let h =
            build_solution(1, &bond, 1.5, ProblemKind::Homogeneous, Default::default()).unwrap();
        assert_relative_eq!(f.amplitude, h.amplitude, max_relative = 1e-6);
        assert_eq!(f.exponent, h.exponent);
    }

    #[test]
    fn choice_selectors() {
        let roots = [-1.0, 0.5, 2.0, 9.0];
        assert_eq!(AmplitudeChoice::SmallestPositive.pick(&roots), Some(0.5));
        assert_eq!(AmplitudeChoice::Largest.pick(&roots), Some(9.0));
        assert_eq!(AmplitudeChoice::Index(2).pick(&roots), Some(2.0));
        assert_eq!(AmplitudeChoice::Index(7).pick(&roots), None);
        assert_eq!(AmplitudeChoice::Nearest(1.6).pick(&roots), Some(2.0));
    }

    #[test]
    fn derivative_of_solution_examples() {
        let s = PowerSolution {
            amplitude: 0.3,
            exponent: 3.75,
            bond_index: 1,
        };
        let d = frac_derivative_of_solution(&s, 0.5).unwrap();
        assert_relative_eq!(d.coef, 0.3 * 2.001_935_557_122_343, max_relative = 1e-12);
        assert_eq!(d.expo, 3.25);

        let k = PowerSolution {
            amplitude: 1.7,
            exponent: 0.5,
            bond_index: 1,
        };
        assert!(frac_derivative_of_solution(&k, 1.5).unwrap().is_zero());

        let c = PowerSolution {
            amplitude: 2.0,
            exponent: 1.5,
            bond_index: 1,
        };
        let d = frac_derivative_of_solution(&c, 1.0).unwrap();
        assert_relative_eq!(d.coef, 3.0, max_relative = 1e-13);
        assert_eq!(d.expo, 0.5);
    }
}
