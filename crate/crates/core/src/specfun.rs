//! Real-argument Gamma function.
//!
//! Lanczos approximation (g = 7, nine coefficients) for `x >= 0.5` and the
//! reflection formula below that. Everything here is pure and allocation free.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Absolute distance to a nonpositive integer below which an argument counts as a pole.
pub const POLE_TOLERANCE: f64 = 1e-12;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

// 0.5 * ln(2*pi)
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln|Γ(x)|` together with the sign of `Γ(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLogGamma {
    pub log_abs: f64,
    pub sign: i8,
}

impl SignedLogGamma {
    pub fn value(self) -> f64 {
        f64::from(self.sign) * self.log_abs.exp()
    }
}

/// True when `x` lies within [`POLE_TOLERANCE`] of `0, -1, -2, ...`.
pub fn is_pole(x: f64) -> bool {
    x <= POLE_TOLERANCE && (x - x.round()).abs() < POLE_TOLERANCE
}

/// `sin(pi * x)` with exact argument reduction, so zeros at the integers are
/// reproduced and the sign is reliable for large `|x|`.
pub fn sin_pi(x: f64) -> f64 {
    let mut r = x % 2.0;
    if r < 0.0 {
        r += 2.0;
    }
    let (r, sign) = if r > 1.0 { (r - 1.0, -1.0) } else { (r, 1.0) };
    let r = if r > 0.5 { 1.0 - r } else { r };
    sign * (PI * r).sin()
}

fn lanczos_sum(z: f64) -> f64 {
    LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, c)| {
            acc + c / (z + (i + 1) as f64)
        })
}

// Valid for x >= 0.5.
fn gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let w = z + LANCZOS_G + 0.5;
    let half = 0.5 * (z + 0.5);
    // split the power so large x does not overflow before exp(-w) is applied
    let wp = w.powf(half);
    (2.0 * PI).sqrt() * wp * (wp * (-w).exp()) * lanczos_sum(z)
}

fn ln_gamma_lanczos(x: f64) -> f64 {
    let z = x - 1.0;
    let w = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * w.ln() - w + lanczos_sum(z).ln()
}

/// Γ(x) for real `x`.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("gamma of NaN".into()));
    }
    if is_pole(x) {
        return Err(Error::Pole { x });
    }
    if x < 0.5 {
        Ok(PI / (sin_pi(x) * gamma_lanczos(1.0 - x)))
    } else if x == x.trunc() && x <= 171.0 {
        // factorials; exact through 22!
        Ok((2..x as u32).fold(1.0, |acc, k| acc * f64::from(k)))
    } else {
        Ok(gamma_lanczos(x))
    }
}

/// Signed `ln|Γ(x)|`.
pub fn ln_gamma_signed(x: f64) -> Result<SignedLogGamma> {
    if x.is_nan() {
        return Err(Error::Domain("log-gamma of NaN".into()));
    }
    if is_pole(x) {
        return Err(Error::Pole { x });
    }
    if x < 0.5 {
        let s = sin_pi(x);
        Ok(SignedLogGamma {
            log_abs: PI.ln() - s.abs().ln() - ln_gamma_lanczos(1.0 - x),
            sign: if s < 0.0 { -1 } else { 1 },
        })
    } else {
        Ok(SignedLogGamma {
            log_abs: ln_gamma_lanczos(x),
            sign: 1,
        })
    }
}

/// Γ(a)/Γ(b) by differencing signed log-Gammas.
///
/// A pole in `b` alone gives exactly `0` (reciprocal Gamma vanishes there);
/// a pole in `a` is an error.
pub fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    let num = ln_gamma_signed(a)?;
    if is_pole(b) {
        return Ok(0.0);
    }
    let den = ln_gamma_signed(b)?;
    let sign = f64::from(num.sign * den.sign);
    Ok(sign * (num.log_abs - den.log_abs).exp())
}
