//! Test-only reference implementations, independent of the library's own
//! special functions, plus the random parameter plan shared by the suites.
#![allow(dead_code)]

use fracstar::model::BondSpec;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// ln Γ(z) for z > 0: shift to z ≥ 15, then the Stirling series through z^-13.
pub fn ln_gamma_oracle(z: f64) -> f64 {
    assert!(z > 0.0);
    let mut shift = 0.0;
    let mut z = z;
    while z < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let r = 1.0 / z;
    let r2 = r * r;
    let series = r
        * (1.0 / 12.0
            - r2 * (1.0 / 360.0
                - r2 * (1.0 / 1260.0
                    - r2 * (1.0 / 1680.0
                        - r2 * (1.0 / 1188.0 - r2 * (691.0 / 360_360.0 - r2 / 156.0))))));
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series - shift
}

/// Γ(x) away from the poles; reflection for x < 1/2.
pub fn gamma_oracle(x: f64) -> f64 {
    if x < 0.5 {
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma_oracle(1.0 - x))
    } else {
        ln_gamma_oracle(x).exp()
    }
}

/// Γ(a)/Γ(b) for positive a, b.
pub fn gamma_ratio_oracle(a: f64, b: f64) -> f64 {
    (ln_gamma_oracle(a) - ln_gamma_oracle(b)).exp()
}

/// Independent root finder: dense linear scan for sign changes, then bisection.
pub fn scan_bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=samples {
        let x1 = lo + (hi - lo) * i as f64 / samples as f64;
        let f1 = f(x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = f(mid);
                if fm == 0.0 || b - a <= 4.0 * f64::EPSILON * mid.abs() {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One admissible single-bond draw.
#[derive(Debug, Clone, Copy)]
pub struct Draw {
    pub alpha: f64,
    pub bond: BondSpec,
}

/// Uniform on the union of two intervals.
fn two_intervals<R: Rng>(rng: &mut R, a: (f64, f64), b: (f64, f64)) -> f64 {
    let wa = a.1 - a.0;
    let t = rng.gen_range(0.0..wa + (b.1 - b.0));
    if t < wa {
        a.0 + t
    } else {
        b.0 + (t - wa)
    }
}

/// `α ∈ (1.05, 1.95)`, `|1 - m| ≥ 1/4`, `γ* - α ∈ (0.05, 0.95)` (β is solved
/// from that gap), `λ ∈ [0.1, 10]`, `L ∈ [0.5, 3]`. With `positive_m` the
/// nonlinearity exponent is kept positive, as the forced equation needs.
pub fn draw<R: Rng>(rng: &mut R, positive_m: bool) -> Draw {
    let alpha = rng.gen_range(1.05..1.95);
    let m = if positive_m {
        two_intervals(rng, (0.01, 0.75), (1.25, 3.0))
    } else {
        two_intervals(rng, (-2.0, 0.75), (1.25, 3.0))
    };
    let gap = rng.gen_range(0.05..0.95);
    let gamma_star = alpha + gap;
    let beta = gamma_star * (1.0 - m) - m * alpha;
    let lam = rng.gen_range(0.1..10.0);
    let length = rng.gen_range(0.5..3.0);
    Draw {
        alpha,
        bond: BondSpec::homogeneous(length, beta, m, lam),
    }
}
