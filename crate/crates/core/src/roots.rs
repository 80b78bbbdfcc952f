//! Bracketing root finders used by the amplitude and vertex solvers.

use crate::error::{ScanSample, ScanTrace};

/// Brent's method on a bracket with `f(a) * f(b) <= 0`.
///
/// Stops when `|f| <= ftol`, or when the bracket has shrunk to a few ulps.
pub(crate) fn brent<F>(f: &F, mut a: f64, mut b: f64, ftol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + f64::MIN_POSITIVE;
        let m = 0.5 * (c - b);
        if fb.abs() <= ftol || m.abs() <= tol {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if fb == 0.0 {
            return b;
        }
    }
    b
}

/// Golden-section minimum of `g` on `[a, b]`; stops early once `g` drops below zero.
fn golden_min<G>(g: &G, mut a: f64, mut b: f64) -> (f64, f64)
where
    G: Fn(f64) -> f64,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..200 {
        if g1 < 0.0 {
            return (x1, g1);
        }
        if g2 < 0.0 {
            return (x2, g2);
        }
        if b - a <= 4.0 * f64::EPSILON * b.abs() {
            break;
        }
        if g1 <= g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        }
    }
    if g1 <= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// `panels + 1` points, log-spaced on `[lo, hi]` (`0 < lo < hi`).
pub(crate) fn log_space(lo: f64, hi: f64, panels: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    let mut xs: Vec<f64> = (0..=panels)
        .map(|i| (llo + (lhi - llo) * i as f64 / panels as f64).exp())
        .collect();
    xs[0] = lo;
    xs[panels] = hi;
    xs
}

/// Scan the points for sign changes of `f` and refine each with Brent.
///
/// Non-finite samples break brackets. Returns the sorted roots and the scan trace.
pub(crate) fn scan_roots<F>(f: &F, points: &[f64], ftol: f64) -> (Vec<f64>, ScanTrace)
where
    F: Fn(f64) -> f64,
{
    let samples: Vec<ScanSample> = points
        .iter()
        .map(|&x| ScanSample { x, value: f(x) })
        .collect();
    let mut roots = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if s.value == 0.0 {
            roots.push(s.x);
            continue;
        }
        if let Some(next) = samples.get(i + 1) {
            if s.value.is_finite()
                && next.value.is_finite()
                && next.value != 0.0
                && s.value.signum() != next.value.signum()
            {
                roots.push(brent(f, s.x, next.x, ftol));
            }
        }
    }
    // Two roots inside one panel leave no sign change between samples; a
    // local minimum of |f| flanked by same-signed samples marks such a pair.
    for w in samples.windows(3) {
        let (a, b, c) = (&w[0], &w[1], &w[2]);
        let finite = a.value.is_finite() && b.value.is_finite() && c.value.is_finite();
        let same_sign =
            a.value.signum() == b.value.signum() && b.value.signum() == c.value.signum();
        if !(finite && same_sign && b.value != 0.0)
            || b.value.abs() >= a.value.abs()
            || b.value.abs() > c.value.abs()
        {
            continue;
        }
        let sign = b.value.signum();
        let (x_min, g_min) = golden_min(&|x: f64| sign * f(x), a.x, c.x);
        if g_min < 0.0 {
            roots.push(brent(f, a.x, x_min, ftol));
            roots.push(brent(f, x_min, c.x, ftol));
        } else if g_min <= ftol {
            roots.push(x_min);
        }
    }
    roots.sort_by(f64::total_cmp);
    let trace = ScanTrace {
        lo: points.first().copied().unwrap_or(f64::NAN),
        hi: points.last().copied().unwrap_or(f64::NAN),
        samples,
    };
    (roots, trace)
}
