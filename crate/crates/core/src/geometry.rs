//! Boundary projection π, boundary distance r(a), tangent frames and
//! boundary parametrizations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cvec::{gram_schmidt, CVec, C64};
use crate::domain::DomainSpec;
use crate::error::{PclabError, Result};
use crate::lowdisc::{radical_inverse, PRIMES};

pub const MAX_PROJECTION_ITERS: usize = 100;

/// Boundary point with an orthonormal complex basis: `basis[0]` is the
/// complex normal L₁, the rest span the complex tangent space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundaryFrame {
    pub alpha: CVec,
    pub basis: Vec<CVec>,
}

impl BoundaryFrame {
    pub fn normal(&self) -> &CVec {
        &self.basis[0]
    }

    pub fn tangents(&self) -> &[CVec] {
        &self.basis[1..]
    }

    /// max |⟨L_j, L_k⟩ − δ_jk|.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (j, a) in self.basis.iter().enumerate() {
            for (k, b) in self.basis.iter().enumerate() {
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Outward real unit normal ν(α) = ∇ρ/|∇ρ| as a complex vector.
pub fn outward_normal(domain: &DomainSpec, z: &CVec) -> Result<CVec> {
    domain.check_dim(z)?;
    domain.grad_real(z).normalized().ok_or(PclabError::DegenerateBoundary)
}

/// Normal projection π(a) onto ∂Ω.
///
/// Gradient-Newton steps bring the point to the level set; a Lagrange-Newton
/// refinement then solves the nearest-point conditions z − a + λ∇ρ(z) = 0,
/// ρ(z) = 0.
pub fn project_to_boundary(domain: &DomainSpec, a: &CVec) -> Result<CVec> {
    domain.check_dim(a)?;
    let mut z = a.clone();
    let mut iters = 0;
    let mut last = f64::INFINITY;
    let mut stalls = 0;
    loop {
        let r = domain.rho_unchecked(&z);
        if r.abs() < 1e-14 {
            break;
        }
        iters += 1;
        if iters > MAX_PROJECTION_ITERS || !r.is_finite() {
            return Err(PclabError::ProjectionFailed { iterations: iters.min(MAX_PROJECTION_ITERS) });
        }
        if r.abs() >= last {
            stalls += 1;
            if stalls > 5 {
                return Err(PclabError::ProjectionFailed { iterations: iters });
            }
        }
        last = r.abs();
        let g = domain.grad_real(&z);
        let gn = g.norm_sqr();
        if !(gn > 0.0) {
            return Err(PclabError::ProjectionFailed { iterations: iters });
        }
        let step = g.scale(r / gn);
        z = &z - &step;
        if step.norm() < 1e-16 * (1.0 + z.norm()) && r.abs() < 1e-12 {
            break;
        }
    }
    nearest_point_refine(domain, a, z, MAX_PROJECTION_ITERS - iters.min(MAX_PROJECTION_ITERS - 10))
}

/// Lagrange-Newton for the nearest boundary point to `a`, started at `z`.
fn nearest_point_refine(domain: &DomainSpec, a: &CVec, z0: CVec, budget: usize) -> Result<CVec> {
    let n = domain.n();
    let m = 2 * n;
    let mut x = DVector::from_vec(z0.to_reals());
    let av = DVector::from_vec(a.to_reals());
    let to_c = |x: &DVector<f64>| CVec::from_reals(x.as_slice()).expect("even length");
    let g0 = DVector::from_vec(domain.grad_real(&z0).to_reals());
    let mut lambda = (&av - &x).dot(&g0) / g0.norm_squared().max(1e-300);
    for _ in 0..budget.max(10) {
        let z = to_c(&x);
        let g = DVector::from_vec(domain.grad_real(&z).to_reals());
        let rho = domain.rho_unchecked(&z);
        let f1 = &x - &av + &g * lambda;
        let scale = g.norm().max(1e-300);
        let dist = (&x - &av).norm();
        if rho.abs() < 1e-15 * scale.max(1.0) && f1.norm() < 1e-14 * (1.0 + dist) {
            return finish_projection(domain, a, z);
        }
        let h = domain.real_hessian(&z);
        let mut k = DMatrix::zeros(m + 1, m + 1);
        for i in 0..m {
            for j in 0..m {
                k[(i, j)] = lambda * h[(i, j)];
            }
            k[(i, i)] += 1.0;
            k[(i, m)] = g[i];
            k[(m, i)] = g[i];
        }
        let mut rhs = DVector::zeros(m + 1);
        for i in 0..m {
            rhs[i] = -f1[i];
        }
        rhs[m] = -rho;
        let sol = match k.lu().solve(&rhs) {
            Some(s) => s,
            None => return Err(PclabError::ProjectionFailed { iterations: MAX_PROJECTION_ITERS }),
        };
        let dx = sol.rows(0, m).into_owned();
        x += &dx;
        lambda += sol[m];
        if dx.norm() < 1e-15 * (1.0 + x.norm()) {
            return finish_projection(domain, a, to_c(&x));
        }
    }
    Err(PclabError::ProjectionFailed { iterations: MAX_PROJECTION_ITERS })
}

fn finish_projection(domain: &DomainSpec, a: &CVec, z: CVec) -> Result<CVec> {
    let rho = domain.rho_unchecked(&z);
    if rho.abs() >= 1e-12 || !z.is_finite() {
        return Err(PclabError::ProjectionFailed { iterations: MAX_PROJECTION_ITERS });
    }
    let d = &z - a;
    if d.norm() > 0.0 {
        let nu = outward_normal(domain, &z)?;
        let along = d.real_dot(&nu);
        let perp = (&d - &nu.scale(along)).norm();
        if perp > 1e-8 * d.norm().max(1.0) {
            return Err(PclabError::Numerical(format!(
                "projection residual not normal: tangential part {perp:e}"
            )));
        }
    }
    Ok(z)
}

/// r(a) = |a − π(a)| for a strictly inside Ω.
pub fn boundary_distance(domain: &DomainSpec, a: &CVec) -> Result<f64> {
    let rho = domain.rho(a)?;
    if rho >= 0.0 {
        return Err(PclabError::OutsideDomain { rho });
    }
    let p = project_to_boundary(domain, a)?;
    Ok(a.dist(&p))
}

/// r(a) with a global check: the normal-segment length is compared with the
/// nearest point of a boundary sample refined by Lagrange-Newton, and the
/// smaller value wins. Intended for non-convex general polynomials.
pub fn boundary_distance_global(domain: &DomainSpec, a: &CVec, res: usize) -> Result<f64> {
    let local = boundary_distance(domain, a)?;
    let grid = boundary_grid(domain, res)?;
    let best = grid
        .iter()
        .min_by(|p, q| a.dist(&p.point).total_cmp(&a.dist(&q.point)))
        .ok_or(PclabError::EmptyParametrization)?;
    let refined = nearest_point_refine(domain, a, best.point.clone(), MAX_PROJECTION_ITERS)
        .map(|z| a.dist(&z))
        .unwrap_or(f64::INFINITY);
    Ok(local.min(refined).min(a.dist(&best.point)))
}

/// Orthonormal frame at a boundary point: L₁ ∝ ∂ρ/∂z̄, and L₂..Lₙ from
/// Gram-Schmidt on the coordinate axes after dropping the axis with the
/// largest overlap with L₁ (lowest index wins ties).
pub fn tangent_frame(domain: &DomainSpec, alpha: &CVec) -> Result<BoundaryFrame> {
    let rho = domain.rho(alpha)?;
    if rho.abs() >= 1e-10 {
        return Err(PclabError::NotOnBoundary { rho });
    }
    frame_from_normal(alpha.clone(), domain.grad_dzbar(alpha))
}

pub(crate) fn frame_from_normal(alpha: CVec, grad: CVec) -> Result<BoundaryFrame> {
    let n = alpha.n();
    let gnorm = grad.norm();
    if !(gnorm > 1e-14) {
        return Err(PclabError::DegenerateBoundary);
    }
    let l1 = grad.scale(1.0 / gnorm);
    let overlaps: Vec<f64> = (0..n).map(|k| l1[k].norm()).collect();
    let max = overlaps.iter().cloned().fold(0.0, f64::max);
    let drop = overlaps.iter().position(|&o| o >= max - 1e-12).unwrap_or(0);
    let axes: Vec<CVec> = (0..n).filter(|&k| k != drop).map(|k| CVec::axis(n, k)).collect();
    let rest = gram_schmidt(std::slice::from_ref(&l1), &axes);
    if rest.len() != n - 1 {
        return Err(PclabError::Numerical("tangent Gram-Schmidt lost rank".into()));
    }
    let mut basis = vec![l1];
    basis.extend(rest);
    Ok(BoundaryFrame { alpha, basis })
}

/// A boundary grid point with its grid indices.
#[derive(Clone, Debug)]
pub struct GridPoint {
    pub row: usize,
    pub col: usize,
    pub point: CVec,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Level shares and angles for grid cell (row, col) of a res×res grid.
///
/// Row i fixes the share t_n = i/(res−1) of the last coordinate's level;
/// column j fixes the angle of z₁. Remaining shares and angles come from
/// deterministic low-discrepancy offsets.
fn grid_params(n: usize, res: usize, row: usize, col: usize) -> (Vec<f64>, Vec<f64>) {
    let idx = (row * res + col) as u64;
    let tn = row as f64 / (res - 1) as f64;
    let mut shares = vec![0.0; n];
    shares[n - 1] = tn;
    let mut rem = 1.0 - tn;
    for (k, share) in shares.iter_mut().enumerate().take(n - 1) {
        let left = n - 2 - k;
        if left == 0 {
            *share = rem;
        } else {
            let u = radical_inverse(idx + 1, PRIMES[k % PRIMES.len()]);
            let s = rem * (1.0 - (1.0 - u).powf(1.0 / left as f64));
            *share = s;
            rem -= s;
        }
    }
    let mut angles = vec![0.0; n];
    angles[0] = 2.0 * PI * col as f64 / res as f64;
    if n == 2 {
        angles[1] = 2.0 * PI * ((idx as f64 * GOLDEN).fract());
    } else {
        for (k, a) in angles.iter_mut().enumerate().skip(1) {
            *a = 2.0 * PI * radical_inverse(idx + 1, PRIMES[(n + k) % PRIMES.len()]);
        }
    }
    (shares, angles)
}

/// Boundary point from level shares (summing to 1) and angles.
pub fn boundary_point_from_params(domain: &DomainSpec, shares: &[f64], angles: &[f64]) -> Result<Option<CVec>> {
    let n = domain.n();
    match domain.reinhardt_levels() {
        Some(levels) => {
            let z: Vec<C64> = (0..n)
                .map(|k| {
                    let s = levels[k].inverse(shares[k]);
                    C64::from_polar(s.sqrt(), angles[k])
                })
                .collect();
            Ok(Some(CVec::from_vec(z)))
        }
        None => {
            let u: Vec<C64> = (0..n).map(|k| C64::from_polar(shares[k].max(0.0).sqrt(), angles[k])).collect();
            ray_shoot(domain, &CVec::from_vec(u))
        }
    }
}

/// Boundary point on the ray t·u from the origin (requires ρ(0) < 0).
pub fn ray_shoot(domain: &DomainSpec, u: &CVec) -> Result<Option<CVec>> {
    let origin = CVec::zeros(domain.n());
    if domain.rho_unchecked(&origin) >= 0.0 {
        return Err(PclabError::InvalidInput("ray shooting needs rho(0) < 0".into()));
    }
    let u = match u.normalized() {
        Some(u) => u,
        None => return Ok(None),
    };
    let f = |t: f64| domain.rho_unchecked(&u.scale(t));
    let (mut lo, mut hi) = (0.0, 0.0);
    let mut t = 0.05;
    while t <= 100.0 {
        if f(t) >= 0.0 {
            hi = t;
            break;
        }
        lo = t;
        t *= 1.25;
    }
    if hi == 0.0 {
        return Ok(None);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    let mut z = u.scale(0.5 * (lo + hi));
    for _ in 0..5 {
        let r = domain.rho_unchecked(&z);
        let g = domain.grad_real(&z);
        let gn = g.norm_sqr();
        if r.abs() < 1e-15 || gn == 0.0 {
            break;
        }
        z = &z - &g.scale(r / gn);
    }
    Ok(Some(z))
}

/// res×res boundary grid in row-major order.
///
/// Reinhardt models use level shares, so row 0 is exactly {z_n = 0}; general
/// polynomials use rays from the origin in the directions of the unit-ball
/// grid.
pub fn boundary_grid(domain: &DomainSpec, res: usize) -> Result<Vec<GridPoint>> {
    if res < 2 {
        return Err(PclabError::InvalidInput("grid resolution must be at least 2".into()));
    }
    let n = domain.n();
    let mut out = Vec::with_capacity(res * res);
    for row in 0..res {
        for col in 0..res {
            let (shares, angles) = grid_params(n, res, row, col);
            if let Some(point) = boundary_point_from_params(domain, &shares, &angles)? {
                out.push(GridPoint { row, col, point });
            }
        }
    }
    if out.is_empty() {
        return Err(PclabError::EmptyParametrization);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn projection_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let p = project_to_boundary(&ball, &CVec::real(&[0.5, 0.0])).unwrap();
        assert!(p.dist(&CVec::real(&[1.0, 0.0])) < 1e-12);
        let p = project_to_boundary(&ball, &CVec::real(&[0.0, 0.25])).unwrap();
        assert!(p.dist(&CVec::real(&[0.0, 1.0])) < 1e-12);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let p = project_to_boundary(&egg, &CVec::real(&[0.9, 0.0])).unwrap();
        assert!(p.dist(&CVec::real(&[1.0, 0.0])) < 1e-12);
        assert!(project_to_boundary(&ball, &CVec::real(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn distance_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        assert_abs_diff_eq!(boundary_distance(&ball, &CVec::real(&[0.5, 0.0])).unwrap(), 0.5, epsilon = 1e-12);
        let b3 = DomainSpec::unit_ball(3).unwrap();
        assert_abs_diff_eq!(boundary_distance(&b3, &CVec::real(&[0.0, 0.0, 0.9])).unwrap(), 0.1, epsilon = 1e-12);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        assert_abs_diff_eq!(boundary_distance(&egg, &CVec::real(&[0.9, 0.0])).unwrap(), 0.1, epsilon = 1e-12);
        assert!(matches!(
            boundary_distance(&ball, &CVec::real(&[1.0, 0.5])),
            Err(PclabError::OutsideDomain { .. })
        ));
        let g = boundary_distance_global(&egg, &CVec::real(&[0.9, 0.0]), 24).unwrap();
        assert_abs_diff_eq!(g, 0.1, epsilon = 1e-9);
    }

    #[test]
    fn frame_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let f = tangent_frame(&ball, &CVec::real(&[1.0, 0.0])).unwrap();
        assert!(f.basis[0].dist(&CVec::axis(2, 0)) < 1e-15);
        assert!(f.basis[1].dist(&CVec::axis(2, 1)) < 1e-15);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let f = tangent_frame(&egg, &CVec::real(&[0.0, 1.0])).unwrap();
        assert!(f.basis[0].dist(&CVec::axis(2, 1)) < 1e-15);
        assert!(f.basis[1].dist(&CVec::axis(2, 0)) < 1e-15);
        let h = 0.5f64.sqrt();
        let f = tangent_frame(&ball, &CVec::real(&[h, h])).unwrap();
        let l2 = &f.basis[1];
        // (1,-1)/√2 up to a phase
        let target = CVec::real(&[h, -h]);
        assert!((l2.dot(&target).norm() - 1.0).abs() < 1e-12);
        assert!(f.unitarity_defect() < 1e-12);
        assert!(tangent_frame(&ball, &CVec::real(&[0.5, 0.0])).is_err());
    }

    #[test]
    fn grids_lie_on_the_boundary() {
        for d in [
            DomainSpec::unit_ball(2).unwrap(),
            DomainSpec::unit_ball(3).unwrap(),
            DomainSpec::egg(&[1, 2]).unwrap(),
            DomainSpec::exp_flat(),
        ] {
            let g = boundary_grid(&d, 12).unwrap();
            assert_eq!(g.len(), 144);
            for p in &g {
                assert!(d.rho(&p.point).unwrap().abs() < 1e-10, "{} {:?}", d.name(), p.point);
            }
            // row 0 is z_n = 0
            assert!(g.iter().filter(|p| p.row == 0).all(|p| p.point[d.n() - 1].norm() == 0.0));
        }
    }

    #[test]
    fn ray_shooting_for_general_polynomials() {
        let d = DomainSpec::general_polynomial(
            2,
            vec![
                crate::domain::Term { alpha: vec![1, 0], beta: vec![1, 0], coeff: 1.0 },
                crate::domain::Term { alpha: vec![0, 2], beta: vec![0, 2], coeff: 1.0 },
                crate::domain::Term { alpha: vec![0, 0], beta: vec![0, 0], coeff: -1.0 },
            ],
        )
        .unwrap();
        let g = boundary_grid(&d, 10).unwrap();
        assert_eq!(g.len(), 100);
        assert!(g.iter().all(|p| d.rho(&p.point).unwrap().abs() < 1e-12));
    }
}
