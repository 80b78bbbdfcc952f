//! Left-sided Riemann–Liouville operators on `[0, x]`.
//!
//! Monomials go through the exact power rule. General functions go through
//! Grünwald–Letnikov differences (derivatives) or product-trapezoidal
//! quadrature on a graded mesh (integrals); those two exist to check the
//! power-rule results independently.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::specfun::{gamma, gamma_ratio};

/// `coef * x^expo` on `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub expo: f64,
}

impl Monomial {
    pub fn new(coef: f64, expo: f64) -> Self {
        Self { coef, expo }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.coef == 0.0 {
            0.0
        } else {
            self.coef * x.powf(self.expo)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coef == 0.0
    }

    fn check_integrable(&self) -> Result<()> {
        if self.expo > -1.0 {
            Ok(())
        } else {
            Err(domain(format!(
                "monomial exponent {} must exceed -1",
                self.expo
            )))
        }
    }
}

fn check_order(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("operator order {q} must be positive")))
    }
}

/// `I^q (c t^p) = c Γ(p+1)/Γ(p+1+q) x^{p+q}`.
pub fn power_integral(q: f64, mono: Monomial) -> Result<Monomial> {
    check_order(q)?;
    mono.check_integrable()?;
    let p = mono.expo;
    Ok(Monomial::new(
        mono.coef * gamma_ratio(p + 1.0, p + 1.0 + q)?,
        p + q,
    ))
}

/// `D^q (c t^p) = c Γ(p+1)/Γ(p+1-q) x^{p-q}`; the coefficient is exactly zero
/// when `p + 1 - q` is a nonpositive integer.
pub fn power_derivative(q: f64, mono: Monomial) -> Result<Monomial> {
    check_order(q)?;
    mono.check_integrable()?;
    let p = mono.expo;
    Ok(Monomial::new(
        mono.coef * gamma_ratio(p + 1.0, p + 1.0 - q)?,
        p - q,
    ))
}

/// Grünwald–Letnikov weights `w_k = (-1)^k binom(q, k)`, `k = 0..=n`.
pub fn gl_weights(q: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for k in 1..=n {
        let prev = w[k - 1];
        w.push(prev * (1.0 - (q + 1.0) / k as f64));
    }
    w
}

/// Minimum number of steps between 0 and the evaluation point.
pub const MIN_GL_STEPS: f64 = 8.0;

/// Grünwald–Letnikov approximation of `(D^q f)(x)` with the given step.
///
/// First order in `step`. For `q > 1` the scheme assumes `f(0) = 0`.
pub fn rl_derivative_numeric<F>(f: F, q: f64, x: f64, step: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(q > 0.0 && q < 2.0) {
        return Err(domain(format!("GL order {q} outside (0, 2)")));
    }
    if !(step > 0.0) || !(x > 0.0) {
        return Err(domain(format!(
            "GL needs x > 0 and step > 0 (x={x}, step={step})"
        )));
    }
    let ratio = x / step;
    if ratio < MIN_GL_STEPS * (1.0 - 1e-12) {
        return Err(domain(format!(
            "GL needs at least {MIN_GL_STEPS} steps in [0, x], got {ratio:.3}"
        )));
    }
    let n = (ratio * (1.0 + 4.0 * f64::EPSILON)).floor() as usize;
    let weights = gl_weights(q, n);
    let sum: f64 = weights
        .iter()
        .enumerate()
        .map(|(k, w)| w * f((x - k as f64 * step).max(0.0)))
        .sum();
    Ok(sum / step.powf(q))
}

/// Sample count and grading of a mesh `x_k = L (k/n)^grading` on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub grading: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            n: 4096,
            grading: 2.0,
        }
    }
}

impl GridSpec {
    pub fn new(n: usize, grading: f64) -> Result<Self> {
        let g = Self { n, grading };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.n < 8 {
            return Err(domain(format!("grid needs n >= 8, got {}", self.n)));
        }
        if !(self.grading >= 1.0) || !self.grading.is_finite() {
            return Err(domain(format!(
                "grid grading must be >= 1, got {}",
                self.grading
            )));
        }
        Ok(())
    }

    /// Nodes on `[0, length]`, `n + 1` of them, last one exactly `length`.
    pub fn nodes(&self, length: f64) -> Result<Vec<f64>> {
        self.check()?;
        if !(length > 0.0) {
            return Err(domain(format!(
                "grid length must be positive, got {length}"
            )));
        }
        let n = self.n as f64;
        let mut xs: Vec<f64> = (0..=self.n)
            .map(|k| length * (k as f64 / n).powf(self.grading))
            .collect();
        xs[self.n] = length;
        Ok(xs)
    }
}

/// Samples of a function on a fixed mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridSamples {
    pub fn sample<F: Fn(f64) -> f64>(grid: &GridSpec, length: f64, f: F) -> Result<Self> {
        let nodes = grid.nodes(length)?;
        let values = nodes.iter().map(|&x| f(x)).collect();
        Ok(Self { nodes, values })
    }

    /// Index of the node equal to `x`, within a relative `1e-12`.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let tol = 1e-12 * x.abs().max(f64::MIN_POSITIVE);
        let i = self.nodes.partition_point(|&t| t < x - tol);
        (i < self.nodes.len() && (self.nodes[i] - x).abs() <= tol).then_some(i)
    }
}

const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (-0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.183_434_642_495_649_78, 0.362_683_783_378_361_77),
    (0.525_532_409_916_329, 0.313_706_645_877_887_05),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_34),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_69),
];

/// Integrals of `u^{q-1} (b - u)` and `u^{q-1} (u - a)` over `[a, b]`, `0 <= a < b`.
fn kernel_moments(q: f64, a: f64, b: f64) -> (f64, f64) {
    let h = b - a;
    if h < 0.125 * b {
        // closed forms cancel badly here; the integrand is analytic well past [a, b]
        let (mut lo, mut hi) = (0.0, 0.0);
        for (t, w) in GAUSS_LEGENDRE_8 {
            let s = 0.5 * (t + 1.0);
            let k = (a + h * s).powf(q - 1.0);
            lo += w * k * (1.0 - s);
            hi += w * k * s;
        }
        (0.5 * h * h * lo, 0.5 * h * h * hi)
    } else {
        let bq = b.powf(q);
        let aq = if a > 0.0 { a.powf(q) } else { 0.0 };
        let m0 = (bq - aq) / q;
        let m1 = (b * bq - a * aq) / (q + 1.0);
        (b * m0 - m1, m1 - a * m0)
    }
}

/// Product-trapezoidal approximation of `(I^q f)(x)` from samples on a mesh;
/// `x` must be one of the mesh nodes. Exact when `f` is piecewise linear on the mesh.
pub fn rl_integral_numeric(samples: &GridSamples, q: f64, x: f64) -> Result<f64> {
    check_order(q)?;
    if samples.nodes.len() != samples.values.len() {
        return Err(domain("sample and node counts differ"));
    }
    let j = samples
        .node_index(x)
        .ok_or_else(|| Error::Domain(format!("x = {x} is not a grid node")))?;
    let xj = samples.nodes[j];
    let mut acc = 0.0;
    for k in 0..j {
        let (t0, t1) = (samples.nodes[k], samples.nodes[k + 1]);
        let h = t1 - t0;
        if h <= 0.0 {
            continue;
        }
        // u = xj - t runs over [xj - t1, xj - t0]
        let (a, b) = ((xj - t1).max(0.0), xj - t0);
        let (next_w, prev_w) = kernel_moments(q, a, b);
        // f_k pairs with (t1 - t) = (u - a), f_{k+1} with (t - t0) = (b - u)
        acc += (samples.values[k] * prev_w + samples.values[k + 1] * next_w) / h;
    }
    Ok(acc / gamma(q)?)
}
