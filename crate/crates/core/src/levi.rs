//! Levi form on the complex tangent space, its determinant 𝒟, the weak set
//! W = {𝒟 = 0} and the non-flatness test.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::domain::DomainSpec;
use crate::error::{PclabError, Result};
use crate::geometry::{boundary_grid, project_to_boundary, tangent_frame, BoundaryFrame};

/// Relative factor in the default weak tolerance.
pub const WEAK_TOL_FACTOR: f64 = 1e-8;
/// Resolution of the coarse sample defining the 𝒟 scale.
pub const SCALE_SAMPLE_RES: usize = 16;

#[derive(Clone, Debug)]
pub struct LeviMatrix {
    pub frame: BoundaryFrame,
    pub entries: DMatrix<C64>,
}

impl LeviMatrix {
    pub fn hermitian_defect(&self) -> f64 {
        let m = &self.entries;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.entries.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// ℒ_jk = Σ_pq ∂²ρ/∂z_p∂z̄_q · L_j^p · conj(L_k^q), j,k over the tangent vectors.
pub fn levi_matrix(domain: &DomainSpec, frame: &BoundaryFrame) -> LeviMatrix {
    let (_, b) = domain.complex_hessians(&frame.alpha);
    let t = frame.tangents();
    let m = t.len();
    let mut e = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for p in 0..domain.n() {
                for q in 0..domain.n() {
                    acc += b[(p, q)] * t[j][p] * t[k][q].conj();
                }
            }
            e[(j, k)] = acc;
        }
    }
    LeviMatrix { frame: frame.clone(), entries: e }
}

fn det_of(m: &LeviMatrix) -> Result<f64> {
    let d = m.entries.clone().determinant();
    if d.im.abs() > 1e-8 * d.re.abs().max(1.0) {
        return Err(PclabError::Numerical(format!("Levi determinant has imaginary part {:e}", d.im)));
    }
    Ok(d.re)
}

/// 𝒟(α) = det ℒ in the standard tangent frame.
pub fn levi_determinant(domain: &DomainSpec, alpha: &CVec) -> Result<f64> {
    let frame = tangent_frame(domain, alpha)?;
    det_of(&levi_matrix(domain, &frame))
}

/// 𝒟 in a caller-supplied frame.
pub fn levi_determinant_in(domain: &DomainSpec, frame: &BoundaryFrame) -> Result<f64> {
    det_of(&levi_matrix(domain, frame))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PointClass {
    Strict,
    Weak,
}

/// max |𝒟| over a coarse boundary grid; the scale for relative tolerances.
pub fn levi_scale(domain: &DomainSpec) -> Result<f64> {
    let grid = boundary_grid(domain, SCALE_SAMPLE_RES)?;
    let vals: Vec<f64> = grid
        .par_iter()
        .map(|p| levi_determinant(domain, &p.point).map(f64::abs).unwrap_or(0.0))
        .collect();
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// Default weak tolerance: 1e−8 · max |𝒟| over the coarse sample.
pub fn default_weak_tol(domain: &DomainSpec) -> Result<f64> {
    Ok(WEAK_TOL_FACTOR * levi_scale(domain)?)
}

pub fn classify_point(domain: &DomainSpec, alpha: &CVec, tol: f64) -> Result<PointClass> {
    let d = levi_determinant(domain, alpha)?;
    Ok(if d.abs() <= tol { PointClass::Weak } else { PointClass::Strict })
}

/// One classified boundary grid point.
#[derive(Clone, Debug, Serialize)]
pub struct ClassifiedPoint {
    pub row: usize,
    pub col: usize,
    pub point: CVec,
    pub rho: f64,
    pub levi_det: f64,
    pub class: PointClass,
}

/// Classify every point of the res×res boundary grid.
pub fn classify_grid(domain: &DomainSpec, res: usize, tol: f64) -> Result<Vec<ClassifiedPoint>> {
    let grid = boundary_grid(domain, res)?;
    grid.par_iter()
        .map(|g| {
            let d = levi_determinant(domain, &g.point)?;
            Ok(ClassifiedPoint {
                row: g.row,
                col: g.col,
                point: g.point.clone(),
                rho: domain.rho_unchecked(&g.point),
                levi_det: d,
                class: if d.abs() <= tol { PointClass::Weak } else { PointClass::Strict },
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakSetSample {
    pub points: Vec<CVec>,
    pub tol: f64,
    /// Angular grid spacing 2π/res of the boundary grid.
    pub spacing: f64,
}

pub fn weak_set_sample(domain: &DomainSpec, res: usize, tol: f64) -> Result<WeakSetSample> {
    if res < 8 {
        return Err(PclabError::InvalidInput("weak-set grid needs resolution >= 8".into()));
    }
    let points = classify_grid(domain, res, tol)?
        .into_iter()
        .filter(|c| c.class == PointClass::Weak && c.rho.abs() < 1e-10)
        .map(|c| c.point)
        .collect();
    Ok(WeakSetSample { points, tol, spacing: 2.0 * std::f64::consts::PI / res as f64 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Nonflatness {
    Order(usize),
    Flat,
}

/// Knobs of the non-flatness test.
#[derive(Clone, Copy, Debug)]
pub struct NonflatnessOptions {
    pub step: f64,
    pub rel_tol: f64,
}

impl Default for NonflatnessOptions {
    fn default() -> Self {
        NonflatnessOptions { step: 1e-2, rel_tol: 1e-6 }
    }
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// k-th central difference of f at 0 on nodes (j − k/2)·h.
fn central_difference(f: &dyn Fn(f64) -> Result<f64>, k: usize, h: f64) -> Result<f64> {
    let mut acc = 0.0;
    for j in 0..=k {
        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom(k, j) * f((j as f64 - k as f64 / 2.0) * h)?;
    }
    Ok(acc / h.powi(k as i32))
}

/// Smallest k ≤ Kmax with ∂^k(𝒟∘γ_v)(0) ≠ 0, where γ_v(t) = π(α + t·v).
///
/// Derivatives are Richardson-extrapolated central differences; a Taylor
/// coefficient |f^{(k)}|/k! counts as nonzero above `rel_tol` times `scale`
/// (the 𝒟 scale of the domain).
pub fn nonflatness_order(
    domain: &DomainSpec,
    alpha: &CVec,
    v: &CVec,
    kmax: usize,
    scale: f64,
    opts: NonflatnessOptions,
) -> Result<Nonflatness> {
    let frame = tangent_frame(domain, alpha)?;
    let v = v.normalized().ok_or_else(|| PclabError::InvalidInput("zero direction".into()))?;
    // real span of the complex tangent space ⟺ Hermitian-orthogonal to L₁
    let pairing = v.dot(frame.normal()).norm();
    if pairing > 1e-8 {
        return Err(PclabError::NotTangent { pairing });
    }
    let f = |t: f64| -> Result<f64> {
        if t == 0.0 {
            return levi_determinant(domain, alpha);
        }
        let p = project_to_boundary(domain, &(alpha + &v.scale(t)))?;
        levi_determinant(domain, &p)
    };
    let threshold = opts.rel_tol * scale.max(f64::MIN_POSITIVE);
    let mut fact = 1.0;
    for k in 0..=kmax {
        if k > 0 {
            fact *= k as f64;
        }
        let d = if k == 0 {
            f(0.0)?
        } else {
            let d1 = central_difference(&f, k, opts.step)?;
            let d2 = central_difference(&f, k, opts.step / 2.0)?;
            (4.0 * d2 - d1) / 3.0
        };
        if d.abs() / fact > threshold {
            return Ok(Nonflatness::Order(k));
        }
    }
    Ok(Nonflatness::Flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levi_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let f = tangent_frame(&ball, &CVec::real(&[1.0, 0.0])).unwrap();
        let l = levi_matrix(&ball, &f);
        assert!((l.entries[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let f = tangent_frame(&egg, &CVec::real(&[1.0, 0.0])).unwrap();
        assert_eq!(levi_matrix(&egg, &f).entries[(0, 0)].norm(), 0.0);
        let f = tangent_frame(&egg, &CVec::real(&[0.0, 1.0])).unwrap();
        assert!((levi_matrix(&egg, &f).entries[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn determinant_examples() {
        let b3 = DomainSpec::unit_ball(3).unwrap();
        let a = CVec::real(&[0.6, 0.0, 0.8]);
        assert!((levi_determinant(&b3, &a).unwrap() - 1.0).abs() < 1e-12);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        assert_eq!(levi_determinant(&egg, &CVec::real(&[1.0, 0.0])).unwrap(), 0.0);
        let ef = DomainSpec::exp_flat();
        assert_eq!(levi_determinant(&ef, &CVec::real(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn classification_examples() {
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let tol = default_weak_tol(&egg).unwrap();
        let a = CVec::from_vec(vec![C64::from_polar(1.0, 0.7), C64::new(0.0, 0.0)]);
        assert_eq!(classify_point(&egg, &a, tol).unwrap(), PointClass::Weak);
        let ball = DomainSpec::unit_ball(2).unwrap();
        let tol_b = default_weak_tol(&ball).unwrap();
        assert_eq!(classify_point(&ball, &CVec::real(&[0.0, 1.0]), tol_b).unwrap(), PointClass::Strict);
        let ef = DomainSpec::exp_flat();
        let tol_e = default_weak_tol(&ef).unwrap();
        // |z₂|² = 1/2 on the boundary
        let s: f64 = 0.5;
        let z1 = (1.0 - crate::domain::exp_flat_g(s)).sqrt();
        let a = CVec::real(&[z1, s.sqrt()]);
        assert_eq!(classify_point(&ef, &a, tol_e).unwrap(), PointClass::Strict);
    }

    #[test]
    fn weak_samples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        assert!(weak_set_sample(&ball, 16, default_weak_tol(&ball).unwrap()).unwrap().points.is_empty());
        let ef = DomainSpec::exp_flat();
        let w = weak_set_sample(&ef, 16, default_weak_tol(&ef).unwrap()).unwrap();
        assert_eq!(w.points.len(), 16);
        assert!(w.points.iter().all(|p| p[1].norm() == 0.0 && (p[0].norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn reinhardt_closed_form_for_levi_determinant() {
        // n = 2, ρ = h₁(|z₁|²) + h₂(|z₂|²) − 1 with h₁(s) = s:
        // 𝒟 = (s h₂'² + (h₂' + s h₂'')|z₁|²)/(|z₁|² + s h₂'²).
        let ef = DomainSpec::exp_flat();
        for &s in &[0.05, 0.2, 0.6, 0.95] {
            let d = crate::domain::exp_flat_derivatives(s, 2);
            let x1 = 1.0 - d[0];
            let a = CVec::real(&[x1.sqrt(), s.sqrt()]);
            let expect = (s * d[1] * d[1] + (d[1] + s * d[2]) * x1) / (x1 + s * d[1] * d[1]);
            let got = levi_determinant(&ef, &a).unwrap();
            assert!((got - expect).abs() < 1e-12 * (1.0 + expect.abs()), "{s}: {got} vs {expect}");
        }
    }

    #[test]
    fn nonflatness_examples() {
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let scale = levi_scale(&egg).unwrap();
        let a = CVec::real(&[1.0, 0.0]);
        let v = CVec::axis(2, 1);
        assert_eq!(
            nonflatness_order(&egg, &a, &v, 8, scale, Default::default()).unwrap(),
            Nonflatness::Order(2)
        );
        let ef = DomainSpec::exp_flat();
        let scale = levi_scale(&ef).unwrap();
        assert_eq!(nonflatness_order(&ef, &a, &v, 12, scale, Default::default()).unwrap(), Nonflatness::Flat);
        let ball = DomainSpec::unit_ball(2).unwrap();
        assert_eq!(
            nonflatness_order(&ball, &a, &v, 2, 1.0, Default::default()).unwrap(),
            Nonflatness::Order(0)
        );
        assert!(nonflatness_order(&ball, &a, &CVec::axis(2, 0), 2, 1.0, Default::default()).is_err());
    }
}
