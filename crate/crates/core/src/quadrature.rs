//! Quadrature helpers: Gauss–Legendre rules, adaptive Simpson and polar
//! integration over discs.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::cvec::C64;

/// Gauss–Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
    let (h, m) = (0.5 * (b - a), 0.5 * (b + a));
    rule.as_node_weight_pairs().iter().map(|&(x, w)| (m + h * x, h * w)).collect()
}

fn simpson_rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with absolute tolerance `tol`. The interval is split in
/// 8 before adapting so that a lucky symmetric sample does not stop it early.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let pieces = 8;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_rec(&f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// Mean of a periodic function over [0, 2π) by the trapezoid rule, doubling
/// the node count until two passes agree to `rel`.
pub fn periodic_mean<F: Fn(f64) -> f64>(f: F, rel: f64) -> f64 {
    let mut m = 32usize;
    let mean = |m: usize| (0..m).map(|k| f(2.0 * PI * k as f64 / m as f64)).sum::<f64>() / m as f64;
    let mut prev = mean(m);
    while m < 1 << 14 {
        m *= 2;
        let cur = mean(m);
        if (cur - prev).abs() <= rel * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// ∫_{|z|<R} f dm in polar coordinates: adaptive Simpson in the radius,
/// trapezoid in the angle. `rel` is the relative target.
pub fn disc_integral<F: Fn(C64) -> f64>(f: F, radius: f64, rel: f64) -> f64 {
    let radial = |s: f64| 2.0 * PI * s * periodic_mean(|t| f(C64::from_polar(s, t)), rel * 0.1);
    let rough = gauss_legendre(16, 0.0, radius).iter().map(|&(s, w)| w * radial(s)).sum::<f64>();
    adaptive_simpson(radial, 0.0, radius, rel * rough.abs().max(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials() {
        let v: f64 = gauss_legendre(5, 0.0, 2.0).iter().map(|&(x, w)| w * x.powi(7)).sum();
        assert!((v - 32.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_and_disc() {
        assert!((adaptive_simpson(|x: f64| x.sin(), 0.0, PI, 1e-10) - 2.0).abs() < 1e-9);
        let v = disc_integral(|z| z.norm_sqr(), 1.0, 1e-8);
        assert!((v - PI / 2.0).abs() < 1e-7);
    }
}
