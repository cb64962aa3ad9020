//! Convex-type machinery: extremal radii τ_j, pseudo-ball volume
//! surrogates, the doubling estimate, surrogate kernel norms
//! σ(B)^{−1/p′}, the SH identities, C_p, and Carleson window areas.
//!
//! Kernel norms are surrogates defined from σ(B); the SH checks therefore
//! exercise exponent arithmetic, not an actual reproducing kernel.

use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::domain::DomainSpec;
use crate::error::{PclabError, Result};
use crate::geometry::{project_to_boundary, tangent_frame, BoundaryFrame};
use crate::packing::PackingResult;
use crate::polydisc::{ls_slope, make_polydisc, GoodFamily};

pub const TAU_PHASES: usize = 32;
pub const TAU_REL_TOL: f64 = 1e-8;
/// Search cap for τ (no bounded domain we model is wider).
pub const TAU_CAP: f64 = 1e3;

fn phase_max(domain: &DomainSpec, x: &CVec, e: &CVec, t: f64) -> f64 {
    (0..TAU_PHASES)
        .map(|k| {
            let ph = C64::from_polar(t, 2.0 * std::f64::consts::PI * k as f64 / TAU_PHASES as f64);
            domain.rho_unchecked(&(x + &e.cscale(ph))).abs()
        })
        .fold(0.0, f64::max)
}

/// τ along a unit direction e: largest t with max_{|λ|=t} |ρ(x + λe)| ≤ δ
/// (32 phases), by bracket doubling and bisection.
pub fn tau_along(domain: &DomainSpec, x: &CVec, e: &CVec, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(PclabError::InvalidInput("tau needs delta > 0".into()));
    }
    let f = |t: f64| phase_max(domain, x, e, t);
    let mut lo = 0.0;
    let mut hi = delta.min(1.0) * 1e-3;
    while f(hi) <= delta {
        lo = hi;
        hi *= 2.0;
        if hi > TAU_CAP {
            return Err(PclabError::Numerical("tau search unbounded".into()));
        }
    }
    while hi - lo > TAU_REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= delta {
            lo = mid
        } else {
            hi = mid
        }
    }
    Ok(lo)
}

/// τ_j(x, δ) along frame vector j (0 = complex normal).
pub fn tau(domain: &DomainSpec, x: &CVec, j: usize, delta: f64) -> Result<f64> {
    let frame = tangent_frame(domain, x)?;
    let e = frame
        .basis
        .get(j)
        .ok_or_else(|| PclabError::InvalidInput(format!("direction {j} out of range")))?;
    tau_along(domain, x, e, delta)
}

#[derive(Clone, Debug, Serialize)]
pub struct PseudoBall {
    pub center: CVec,
    pub delta: f64,
    pub tau: Vec<f64>,
    /// σ(B) = δ ∏_{j≥2} τ_j².
    pub sigma: f64,
    /// m(T) = δ σ(B).
    pub tent: f64,
}

pub fn pseudo_ball_in(domain: &DomainSpec, frame: &BoundaryFrame, delta: f64) -> Result<PseudoBall> {
    let tau: Vec<f64> = frame
        .basis
        .par_iter()
        .map(|e| tau_along(domain, &frame.alpha, e, delta))
        .collect::<Result<_>>()?;
    let sigma = delta * tau[1..].iter().map(|t| t * t).product::<f64>();
    Ok(PseudoBall { center: frame.alpha.clone(), delta, tau, sigma, tent: delta * sigma })
}

pub fn pseudo_ball(domain: &DomainSpec, x: &CVec, delta: f64) -> Result<PseudoBall> {
    pseudo_ball_in(domain, &tangent_frame(domain, x)?, delta)
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingReport {
    pub n: f64,
    pub sigma: f64,
    pub sigma_scaled: f64,
    pub factor: f64,
    pub passes: bool,
}

/// σ(B(x, δ)) ≤ ½ σ(B(x, Nδ)).
pub fn doubling_check(domain: &DomainSpec, x: &CVec, delta: f64, n: f64) -> Result<DoublingReport> {
    let frame = tangent_frame(domain, x)?;
    let s = pseudo_ball_in(domain, &frame, delta)?.sigma;
    let big = if n == 1.0 { s } else { pseudo_ball_in(domain, &frame, n * delta)?.sigma };
    Ok(DoublingReport { n, sigma: s, sigma_scaled: big, factor: big / s, passes: s <= 0.5 * big })
}

/// Smallest integer N in 2..=8 for which doubling holds.
pub fn doubling_n0(domain: &DomainSpec, x: &CVec, delta: f64) -> Result<Option<u32>> {
    for n in 2..=8u32 {
        if doubling_check(domain, x, delta, n as f64)?.passes {
            return Ok(Some(n));
        }
    }
    Ok(None)
}

/// Log-log slope of τ_j(x, δ) over a δ ladder.
pub fn tau_exponent(domain: &DomainSpec, x: &CVec, j: usize, deltas: &[f64]) -> Result<f64> {
    let taus: Vec<f64> = deltas.iter().map(|&d| tau(domain, x, j, d)).collect::<Result<_>>()?;
    let xs: Vec<f64> = deltas.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
    Ok(ls_slope(&xs, &ys))
}

/// Conjugate exponent (1 ↔ ∞).
pub fn conjugate(p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(PclabError::InvalidInput(format!("exponent {p} below 1")));
    }
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

/// Surrogate ‖k‖ in the dual of H^p: σ^{−1/p′}.
pub fn surrogate_norm(sigma: f64, p: f64) -> Result<f64> {
    let pp = conjugate(p)?;
    Ok(if pp.is_infinite() { 1.0 } else { sigma.powf(-1.0 / pp) })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelNorm {
    pub p: f64,
    pub p_prime: f64,
    pub r: f64,
    pub sigma: f64,
    pub value: f64,
}

/// σ(B(π(a), r(a)))^{−1/p′}.
pub fn surrogate_kernel_norm(domain: &DomainSpec, a: &CVec, p: f64) -> Result<KernelNorm> {
    let alpha = project_to_boundary(domain, a)?;
    let r = a.dist(&alpha);
    if !(r > 0.0) {
        return Err(PclabError::Precondition("kernel norm needs a point off the boundary".into()));
    }
    let sigma = pseudo_ball(domain, &alpha, r)?.sigma;
    Ok(KernelNorm { p, p_prime: conjugate(p)?, r, sigma, value: surrogate_norm(sigma, p)? })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    /// |log lhs − log rhs|.
    pub log_err: f64,
    pub holds: bool,
}

fn identity(lhs: f64, rhs: f64) -> IdentityReport {
    let log_err = (lhs.ln() - rhs.ln()).abs();
    IdentityReport { lhs, rhs, log_err, holds: log_err <= 1e-10 }
}

/// ‖k‖_q ‖k‖_{q′} against ‖k‖₂² on the surrogate with volume σ.
pub fn sh_identity(sigma: f64, q: f64) -> Result<IdentityReport> {
    let qq = conjugate(q)?;
    Ok(identity(surrogate_norm(sigma, qq)? * surrogate_norm(sigma, q)?, surrogate_norm(sigma, 2.0)?.powi(2)))
}

/// ‖k‖_{s′} against ‖k‖_{p′} ‖k‖_{q′} with 1/s = 1/p + 1/q.
pub fn sh_identity2(sigma: f64, p: f64, q: f64, s: f64) -> Result<IdentityReport> {
    if ((1.0 / s) - (1.0 / p) - (1.0 / q)).abs() > 1e-12 {
        return Err(PclabError::InvalidInput(format!("1/{s} != 1/{p} + 1/{q}")));
    }
    let norm_dual = |e: f64| -> Result<f64> { surrogate_norm(sigma, conjugate(e)?) };
    Ok(identity(norm_dual(s)?, norm_dual(p)? * norm_dual(q)?))
}

pub fn sh_check(domain: &DomainSpec, a: &CVec, q: f64) -> Result<IdentityReport> {
    sh_identity(surrogate_kernel_norm(domain, a, 2.0)?.sigma, q)
}

pub fn sh_check2(domain: &DomainSpec, a: &CVec, p: f64, q: f64, s: f64) -> Result<IdentityReport> {
    sh_identity2(surrogate_kernel_norm(domain, a, 2.0)?.sigma, p, q, s)
}

#[derive(Clone, Debug, Serialize)]
pub struct CpReport {
    pub p: f64,
    /// C_p^p = 1 + 1/(1 − 2^{1−p}).
    pub cp_pow_p: f64,
    pub cp: f64,
    /// 1 + Σ_{k<64} 2^{(1−p)k}.
    pub series64: f64,
    pub series_agrees: bool,
}

pub fn cp_constant(p: f64) -> Result<CpReport> {
    if !(p > 1.0) {
        return Err(PclabError::InvalidInput(format!("C_p needs p > 1, got {p}")));
    }
    let q = 2f64.powf(1.0 - p);
    let cp_pow_p = 1.0 + 1.0 / (1.0 - q);
    let series64 = 1.0 + (0..64).map(|k| q.powi(k)).sum::<f64>();
    Ok(CpReport {
        p,
        cp_pow_p,
        cp: cp_pow_p.powf(1.0 / p),
        series64,
        series_agrees: (series64 - cp_pow_p).abs() <= 1e-9 * cp_pow_p,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowReport {
    pub r: f64,
    /// σ(∂Ω ∩ P_a(2)).
    pub window_area: f64,
    pub p: f64,
    /// 1 / surrogate norm.
    pub norm_inverse: f64,
    pub ratio: f64,
    /// Σ r(b)^{1+2μ(b)} over packed centers b in Ω ∩ P_a(2), if a packing was given.
    pub packing_measure: Option<f64>,
    /// The window left the region where ∂Ω is a graph over T_α.
    pub out_of_collar: bool,
}

/// Window area by integrating the boundary as a graph over the real tangent
/// hyperplane at π(a), with adaptive subdivision of cells cut by the window.
pub fn carleson_window_data(family: &GoodFamily, a: &CVec, p: f64, packing: Option<&PackingResult>) -> Result<WindowReport> {
    let domain = &family.domain;
    let disc = make_polydisc(family, a, 2.0)?;
    let alpha = project_to_boundary(domain, a)?;
    let frame = tangent_frame(domain, &alpha)?;
    let nu = frame.normal().clone();
    // orthonormal real basis of T_α: iν, L_j, iL_j
    let mut dirs = vec![nu.cscale(C64::new(0.0, 1.0))];
    for l in frame.tangents() {
        dirs.push(l.clone());
        dirs.push(l.cscale(C64::new(0.0, 1.0)));
    }
    let half: Vec<f64> = dirs
        .iter()
        .map(|e| disc.radii.iter().zip(&disc.frame.basis).map(|(r, l)| r * e.dot(l).norm()).sum::<f64>() * 1.05)
        .collect();
    let inside = |b: &CVec| {
        disc.frame
            .basis
            .iter()
            .zip(&disc.radii)
            .all(|(l, r)| (b - a).dot(l).norm() < *r)
    };
    let out_of_collar = std::sync::atomic::AtomicBool::new(false);
    // boundary point over ξ and its area factor, None when Newton fails
    let lift = |xi: &[f64]| -> Option<(CVec, f64)> {
        let mut base = alpha.clone();
        for (e, t) in dirs.iter().zip(xi) {
            base = &base + &e.scale(*t);
        }
        let mut s = 0.0;
        for _ in 0..50 {
            let z = &base + &nu.scale(s);
            let rho = domain.rho_unchecked(&z);
            let g = domain.grad_real(&z);
            let gn = g.real_dot(&nu);
            if gn.abs() < 1e-12 * g.norm() {
                return None;
            }
            let step = rho / gn;
            s -= step;
            if step.abs() < 1e-14 {
                let z = &base + &nu.scale(s);
                let g = domain.grad_real(&z);
                return Some((z, g.norm() / g.real_dot(&nu).abs()));
            }
        }
        None
    };
    let d = dirs.len();
    let value = |xi: &[f64]| -> (bool, f64) {
        match lift(xi) {
            Some((b, jac)) => (inside(&b), jac),
            None => {
                out_of_collar.store(true, std::sync::atomic::Ordering::Relaxed);
                (false, 0.0)
            }
        }
    };
    // cell with center c and half-widths h, refined while corners disagree;
    // partial areas are collected before summing so the result does not
    // depend on the thread schedule
    fn cell_area<F: Fn(&[f64]) -> (bool, f64) + Sync>(f: &F, c: &[f64], h: &[f64], depth: u32) -> f64 {
        let d = c.len();
        let vol: f64 = h.iter().map(|x| 2.0 * x).product();
        let (cin, cj) = f(c);
        let mut mixed = false;
        for code in 0..(1usize << d) {
            let corner: Vec<f64> = (0..d).map(|i| c[i] + if code >> i & 1 == 1 { h[i] } else { -h[i] }).collect();
            if f(&corner).0 != cin {
                mixed = true;
                break;
            }
        }
        if !mixed || depth == 0 {
            return if cin { cj * vol } else { 0.0 };
        }
        let hh: Vec<f64> = h.iter().map(|x| 0.5 * x).collect();
        (0..(1usize << d))
            .into_par_iter()
            .map(|code| {
                let cc: Vec<f64> = (0..d).map(|i| c[i] + if code >> i & 1 == 1 { hh[i] } else { -hh[i] }).collect();
                cell_area(f, &cc, &hh, depth - 1)
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }
    let per_axis = 8usize;
    let h: Vec<f64> = half.iter().map(|w| w / per_axis as f64).collect();
    let window_area: f64 = (0..per_axis.pow(d as u32))
        .into_par_iter()
        .map(|code| {
            let mut c = code;
            let center: Vec<f64> = (0..d)
                .map(|i| {
                    let k = c % per_axis;
                    c /= per_axis;
                    -half[i] + (2 * k + 1) as f64 * h[i]
                })
                .collect();
            cell_area(&value, &center, &h, 3)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let norm = surrogate_kernel_norm(domain, a, p)?;
    let packing_measure = packing.map(|pk| {
        pk.points
            .iter()
            .filter(|q| inside(&q.a))
            .map(|q| q.r.powf(1.0 + 2.0 * q.mu))
            .sum()
    });
    Ok(WindowReport {
        r: disc.r,
        window_area,
        p,
        norm_inverse: 1.0 / norm.value,
        ratio: window_area * norm.value,
        packing_measure,
        out_of_collar: out_of_collar.into_inner(),
    })
}

/// McNeal-type pseudo-distance: the least δ with y ∈ B(x, δ), where B is
/// the polydisc of radii τ_j(x, δ) in the frame at x.
pub fn pseudo_distance(domain: &DomainSpec, x: &CVec, y: &CVec) -> Result<f64> {
    let frame = tangent_frame(domain, x)?;
    let coords: Vec<f64> = frame.basis.iter().map(|l| (y - x).dot(l).norm()).collect();
    let member = |d: f64| -> Result<bool> {
        let b = pseudo_ball_in(domain, &frame, d)?;
        Ok(coords.iter().zip(&b.tau).all(|(c, t)| c < t))
    };
    let (mut lo, mut hi) = (0.0, 1e-12);
    while !member(hi)? {
        lo = hi;
        hi *= 4.0;
        if hi > 1e3 {
            return Err(PclabError::Numerical("pseudo-distance search unbounded".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if member(mid)? {
            hi = mid
        } else {
            lo = mid
        }
    }
    Ok(hi)
}

/// ρ*(z, w) = |r(z)| + |r(w)| + ρ(π(z), π(w)).
pub fn rho_star(domain: &DomainSpec, z: &CVec, w: &CVec) -> Result<f64> {
    let pz = project_to_boundary(domain, z)?;
    let pw = project_to_boundary(domain, w)?;
    Ok(z.dist(&pz) + w.dist(&pw) + pseudo_distance(domain, &pz, &pw)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let x = CVec::real(&[1.0, 0.0]);
        let t = tau(&ball, &x, 1, 1e-4).unwrap();
        assert!((t - 1e-2).abs() < 1e-9);
        let t1 = tau(&ball, &x, 0, 1e-4).unwrap();
        assert!((t1 / 1e-4 - 0.5).abs() < 1e-3);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let t = tau(&egg, &x, 1, 1e-4).unwrap();
        assert!((t - 0.1).abs() < 1e-8);
        assert!((tau_exponent(&egg, &x, 1, &[1e-2, 1e-3, 1e-4]).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn doubling_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let x = CVec::real(&[1.0, 0.0]);
        assert!(doubling_check(&ball, &x, 1e-3, 2.0).unwrap().passes);
        assert!(!doubling_check(&ball, &x, 1e-3, 1.0).unwrap().passes);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let r = doubling_check(&egg, &x, 1e-3, 2.0).unwrap();
        assert!(r.passes && (r.factor - 2f64.powf(1.5)).abs() < 0.05, "{r:?}");
        let b = pseudo_ball(&egg, &x, 1e-3).unwrap();
        assert!((b.tent - 1e-3 * b.sigma).abs() <= 1e-18);
    }

    #[test]
    fn norms_and_identities() {
        assert_eq!(surrogate_norm(0.01, 1.0).unwrap(), 1.0);
        assert!((surrogate_norm(0.01, 2.0).unwrap() - 10.0).abs() < 1e-12);
        assert!((surrogate_norm(0.01, f64::INFINITY).unwrap() - 100.0).abs() < 1e-9);
        assert!(sh_identity(0.003, 3.0).unwrap().holds);
        assert!(sh_identity2(0.003, 4.0, 4.0, 2.0).unwrap().holds);
        assert!(sh_identity2(0.003, 4.0, 3.0, 2.0).is_err());
        let ball = DomainSpec::unit_ball(2).unwrap();
        let k = surrogate_kernel_norm(&ball, &CVec::real(&[0.99, 0.0]), f64::INFINITY).unwrap();
        assert!((k.value * 1e-4 - 1.0).abs() < 0.1, "{k:?}");
    }

    #[test]
    fn cp_examples() {
        let c = cp_constant(2.0).unwrap();
        assert!((c.cp_pow_p - 3.0).abs() < 1e-15 && c.series_agrees);
        assert!((cp_constant(50.0).unwrap().cp_pow_p - 2.0).abs() < 0.1);
        assert!(cp_constant(1.0).is_err());
    }

    #[test]
    fn ball_window_scales_like_r_squared() {
        let fam = GoodFamily::minimal(DomainSpec::unit_ball(2).unwrap());
        let ratios: Vec<f64> = [3, 5, 7]
            .iter()
            .map(|k| {
                let r = 0.5f64.powi(*k);
                carleson_window_data(&fam, &CVec::real(&[1.0 - r, 0.0]), f64::INFINITY, None).unwrap().ratio
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        assert!(hi / lo < 1.5, "{ratios:?}");
    }

    #[test]
    fn pseudo_distance_is_small_near_x() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let x = CVec::real(&[1.0, 0.0]);
        let y = CVec::real(&[1.0 - 5e-5, 0.01]);
        let d = pseudo_distance(&ball, &x, &y).unwrap();
        assert!(d > 5e-5 && d < 1e-3, "{d}");
    }
}
