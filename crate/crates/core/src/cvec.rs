//! Points of ℂⁿ.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PclabError, Result};

pub type C64 = Complex64;

/// A point (or direction) of ℂⁿ, n ≥ 1 for directions and n ≥ 2 for domain points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVec(Vec<C64>);

impl CVec {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(PclabError::InvalidInput("non-finite coordinate".into()));
        }
        Ok(CVec(coords))
    }

    /// Build from values known to be finite (internal constructions).
    pub fn from_vec(coords: Vec<C64>) -> Self {
        CVec(coords)
    }

    pub fn zeros(n: usize) -> Self {
        CVec(vec![C64::new(0.0, 0.0); n])
    }

    /// The unit vector e_k (0-based index).
    pub fn axis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[k] = C64::new(1.0, 0.0);
        v
    }

    /// Real-valued coordinates (imaginary parts zero).
    pub fn real(xs: &[f64]) -> Self {
        CVec(xs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Interleaved real coordinates (x₁, y₁, x₂, y₂, …).
    pub fn from_reals(xs: &[f64]) -> Result<Self> {
        if xs.len() % 2 != 0 {
            return Err(PclabError::InvalidInput(
                "interleaved coordinates need an even count".into(),
            ));
        }
        Self::new(xs.chunks(2).map(|p| C64::new(p[0], p[1])).collect())
    }

    pub fn to_reals(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, C64> {
        self.0.iter()
    }

    /// Hermitian inner product ⟨self, other⟩ = Σ selfᵢ·conj(otherᵢ).
    pub fn dot(&self, other: &CVec) -> C64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b.conj()).sum()
    }

    /// Real inner product of the underlying ℝ²ⁿ vectors.
    pub fn real_dot(&self, other: &CVec) -> f64 {
        self.dot(other).re
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Option<CVec> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self.scale(1.0 / n))
    }

    pub fn scale(&self, s: f64) -> CVec {
        CVec(self.0.iter().map(|c| c * s).collect())
    }

    pub fn cscale(&self, s: C64) -> CVec {
        CVec(self.0.iter().map(|c| c * s).collect())
    }

    pub fn conj(&self) -> CVec {
        CVec(self.0.iter().map(|c| c.conj()).collect())
    }

    pub fn dist(&self, other: &CVec) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Index<usize> for CVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVec {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

impl Add<&CVec> for &CVec {
    type Output = CVec;
    fn add(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&CVec> for &CVec {
    type Output = CVec;
    fn sub(self, rhs: &CVec) -> CVec {
        CVec(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for CVec {
    type Output = CVec;
    fn add(self, rhs: CVec) -> CVec {
        &self + &rhs
    }
}

impl Sub for CVec {
    type Output = CVec;
    fn sub(self, rhs: CVec) -> CVec {
        &self - &rhs
    }
}

impl Mul<f64> for &CVec {
    type Output = CVec;
    fn mul(self, s: f64) -> CVec {
        self.scale(s)
    }
}

impl Mul<C64> for &CVec {
    type Output = CVec;
    fn mul(self, s: C64) -> CVec {
        self.cscale(s)
    }
}

impl Neg for &CVec {
    type Output = CVec;
    fn neg(self) -> CVec {
        self.scale(-1.0)
    }
}

/// Orthonormalize `vs` against the unit vectors in `against` and each other
/// (modified Gram-Schmidt, two passes). Vectors that collapse below `1e-12`
/// are dropped.
pub fn gram_schmidt(against: &[CVec], vs: &[CVec]) -> Vec<CVec> {
    let mut out: Vec<CVec> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in against.iter().chain(out.iter()) {
                let c = w.dot(u);
                w = &w - &u.cscale(c);
            }
        }
        if let Some(u) = (w.norm() > 1e-12).then(|| w.normalized()).flatten() {
            out.push(u);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermitian_dot_is_conjugate_linear_in_second_slot() {
        let a = CVec::from_vec(vec![C64::new(1.0, 2.0), C64::new(0.0, 1.0)]);
        let b = CVec::from_vec(vec![C64::new(0.5, -1.0), C64::new(3.0, 0.0)]);
        let i = C64::new(0.0, 1.0);
        assert!((a.dot(&b.cscale(i)) - a.dot(&b) * i.conj()).norm() < 1e-15);
        assert!((a.dot(&a).re - a.norm_sqr()).abs() < 1e-15);
    }

    #[test]
    fn interleaved_round_trip() {
        let v = CVec::from_reals(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(v.to_reals(), vec![1.0, 2.0, 3.0, 4.0]);
        assert!(CVec::from_reals(&[1.0]).is_err());
        assert!(CVec::new(vec![C64::new(f64::NAN, 0.0)]).is_err());
    }

    #[test]
    fn gram_schmidt_orthonormal() {
        let l1 = CVec::real(&[1.0, 1.0]).normalized().unwrap();
        let rest = gram_schmidt(&[l1.clone()], &[CVec::axis(2, 1)]);
        assert_eq!(rest.len(), 1);
        assert!(rest[0].dot(&l1).norm() < 1e-15);
        assert!((rest[0].norm() - 1.0).abs() < 1e-15);
    }
}
