//! Defining functions ρ and their exact mixed derivatives ∂^α ∂̄^β ρ.
//!
//! Every built-in domain is compiled to a list of monomials c·z^A·z̄^B plus,
//! for `ExpFlat`, one radial term g(|z₂|²) with g(s) = exp(1 − 1/s). Both
//! kinds of term are differentiated in closed form, so jets up to the
//! configured order are exact up to rounding.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::cvec::{CVec, C64};
use crate::error::{PclabError, Result};

/// Default maximal derivative order for jets and line restrictions.
pub const DEFAULT_MAX_ORDER: usize = 16;

/// exp(x) underflows to zero below this argument.
const EXP_UNDERFLOW: f64 = -745.0;

/// One monomial c·z^α·z̄^β of a polynomial defining function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    pub coeff: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DomainKind {
    UnitBall,
    /// ρ = Σ |z_j|^{2 m_j} − 1.
    Egg { exponents: Vec<u32> },
    /// ρ = |z₁|² + exp(1 − |z₂|⁻²) − 1 in ℂ².
    ExpFlat,
    GeneralPolynomial { terms: Vec<Term> },
}

/// Level function h_j of a Reinhardt domain ρ = Σ h_j(|z_j|²) − 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Level {
    /// h(s) = s^m.
    Power(u32),
    /// h(s) = exp(1 − 1/s), h(0) = 0.
    Exp,
}

impl Level {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Level::Power(m) => s.powi(m as i32),
            Level::Exp => exp_flat_g(s),
        }
    }

    /// Inverse of h on [0, 1].
    pub fn inverse(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Level::Power(m) => t.powf(1.0 / m as f64),
            Level::Exp => {
                if t <= 0.0 {
                    0.0
                } else {
                    1.0 / (1.0 - t.ln())
                }
            }
        }
    }
}

/// A bounded domain Ω = {ρ < 0} in ℂⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    kind: DomainKind,
    n: usize,
    terms: Vec<Term>,
    /// Coordinate carrying the radial exp term (ExpFlat only).
    flat: Option<usize>,
    max_order: usize,
}

/// g(s) = exp(1 − 1/s) with its flat limit g(0) = 0.
pub fn exp_flat_g(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let x = 1.0 - 1.0 / s;
    if x < EXP_UNDERFLOW {
        0.0
    } else {
        x.exp()
    }
}

/// g^{(k)}(s) for k = 0..=kmax, where g(s) = exp(1 − 1/s).
///
/// g^{(k)} = P_k(1/s)·g with P₀ = 1 and P_{k+1}(u) = u²(P_k(u) − P_k'(u)).
pub fn exp_flat_derivatives(s: f64, kmax: usize) -> Vec<f64> {
    let g = exp_flat_g(s);
    if g == 0.0 {
        return vec![0.0; kmax + 1];
    }
    let u = 1.0 / s;
    let mut out = Vec::with_capacity(kmax + 1);
    let mut p: Vec<f64> = vec![1.0];
    for k in 0..=kmax {
        let val = p.iter().rev().fold(0.0, |acc, c| acc * u + c);
        out.push(val * g);
        if k == kmax {
            break;
        }
        // u²·(P − P')
        let mut next = vec![0.0; p.len() + 2];
        for (i, c) in p.iter().enumerate() {
            next[i + 2] += c;
            if i > 0 {
                next[i + 1] -= c * i as f64;
            }
        }
        p = next;
    }
    out
}

fn falling(a: u32, k: u32) -> f64 {
    (0..k).map(|i| (a - i) as f64).product()
}

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn cpow(z: C64, k: u32) -> C64 {
    z.powu(k)
}

/// Multiply two truncated polynomials.
fn poly_mul(a: &[C64], b: &[C64], deg: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); (a.len() + b.len() - 1).min(deg + 1)];
    for (i, x) in a.iter().enumerate() {
        if x.norm_sqr() == 0.0 {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j > deg {
                break;
            }
            out[i + j] += x * y;
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct DomainDoc {
    kind: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct EggParams {
    exponents: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct PolyParams {
    terms: Vec<Term>,
}

impl DomainSpec {
    pub fn unit_ball(n: usize) -> Result<Self> {
        let ones = vec![1; n];
        let mut s = Self::egg(&ones)?;
        s.kind = DomainKind::UnitBall;
        Ok(s)
    }

    pub fn egg(exponents: &[u32]) -> Result<Self> {
        let n = exponents.len();
        if n < 2 {
            return Err(PclabError::InvalidInput("dimension must be at least 2".into()));
        }
        if exponents.iter().any(|&m| m == 0) {
            return Err(PclabError::InvalidInput("egg exponents must be positive".into()));
        }
        let mut terms: Vec<Term> = exponents
            .iter()
            .enumerate()
            .map(|(j, &m)| {
                let mut a = vec![0; n];
                a[j] = m;
                Term { alpha: a.clone(), beta: a, coeff: 1.0 }
            })
            .collect();
        terms.push(Term { alpha: vec![0; n], beta: vec![0; n], coeff: -1.0 });
        Ok(DomainSpec {
            kind: DomainKind::Egg { exponents: exponents.to_vec() },
            n,
            terms,
            flat: None,
            max_order: DEFAULT_MAX_ORDER,
        })
    }

    pub fn exp_flat() -> Self {
        DomainSpec {
            kind: DomainKind::ExpFlat,
            n: 2,
            terms: vec![
                Term { alpha: vec![1, 0], beta: vec![1, 0], coeff: 1.0 },
                Term { alpha: vec![0, 0], beta: vec![0, 0], coeff: -1.0 },
            ],
            flat: Some(1),
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn general_polynomial(n: usize, terms: Vec<Term>) -> Result<Self> {
        if n < 2 {
            return Err(PclabError::InvalidInput("dimension must be at least 2".into()));
        }
        if terms.is_empty() {
            return Err(PclabError::InvalidInput("polynomial has no terms".into()));
        }
        let mut sums: HashMap<(Vec<u32>, Vec<u32>), f64> = HashMap::new();
        for t in &terms {
            if t.alpha.len() != n || t.beta.len() != n {
                return Err(PclabError::DimensionMismatch {
                    expected: n,
                    got: t.alpha.len().max(t.beta.len()),
                });
            }
            if !t.coeff.is_finite() {
                return Err(PclabError::InvalidInput("non-finite coefficient".into()));
            }
            *sums.entry((t.alpha.clone(), t.beta.clone())).or_default() += t.coeff;
        }
        for ((a, b), c) in &sums {
            let mirror = sums.get(&(b.clone(), a.clone())).copied().unwrap_or(0.0);
            if (c - mirror).abs() > 1e-14 * c.abs().max(mirror.abs()) {
                return Err(PclabError::InvalidInput(format!(
                    "terms are not closed under conjugation: ({a:?},{b:?}) has {c} but its mirror has {mirror}"
                )));
            }
        }
        Ok(DomainSpec {
            kind: DomainKind::GeneralPolynomial { terms: terms.clone() },
            n,
            terms,
            flat: None,
            max_order: DEFAULT_MAX_ORDER,
        })
    }

    pub fn with_max_order(mut self, k: usize) -> Self {
        self.max_order = k;
        self
    }

    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn name(&self) -> String {
        match &self.kind {
            DomainKind::UnitBall => format!("UnitBall({})", self.n),
            DomainKind::Egg { exponents } => format!("Egg({},{:?})", self.n, exponents),
            DomainKind::ExpFlat => "ExpFlat".into(),
            DomainKind::GeneralPolynomial { terms } => {
                format!("GeneralPolynomial({}, {} terms)", self.n, terms.len())
            }
        }
    }

    /// Level functions when ρ = Σ h_j(|z_j|²) − 1, `None` for general polynomials.
    pub fn reinhardt_levels(&self) -> Option<Vec<Level>> {
        match &self.kind {
            DomainKind::UnitBall => Some(vec![Level::Power(1); self.n]),
            DomainKind::Egg { exponents } => Some(exponents.iter().map(|&m| Level::Power(m)).collect()),
            DomainKind::ExpFlat => Some(vec![Level::Power(1), Level::Exp]),
            DomainKind::GeneralPolynomial { .. } => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DomainDoc = serde_json::from_str(text)
            .map_err(|e| PclabError::InvalidInput(format!("domain JSON: {e}")))?;
        let key: String = doc.kind.chars().filter(|c| *c != '_' && *c != '-').collect::<String>().to_lowercase();
        let params = doc.params.unwrap_or(serde_json::Value::Null);
        let bad = |e: serde_json::Error| PclabError::InvalidInput(format!("domain params: {e}"));
        match key.as_str() {
            "unitball" | "ball" => Self::unit_ball(doc.n),
            "egg" => {
                let p: EggParams = serde_json::from_value(params).map_err(bad)?;
                if p.exponents.len() != doc.n {
                    return Err(PclabError::DimensionMismatch { expected: doc.n, got: p.exponents.len() });
                }
                Self::egg(&p.exponents)
            }
            "expflat" => {
                if doc.n != 2 {
                    return Err(PclabError::InvalidInput("ExpFlat is defined only for n = 2".into()));
                }
                Ok(Self::exp_flat())
            }
            "generalpolynomial" | "polynomial" => {
                let p: PolyParams = serde_json::from_value(params).map_err(bad)?;
                Self::general_polynomial(doc.n, p.terms)
            }
            other => Err(PclabError::InvalidInput(format!("unknown domain kind '{other}'"))),
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, params) = match &self.kind {
            DomainKind::UnitBall => ("unit_ball", None),
            DomainKind::Egg { exponents } => (
                "egg",
                Some(serde_json::to_value(EggParams { exponents: exponents.clone() }).unwrap()),
            ),
            DomainKind::ExpFlat => ("exp_flat", None),
            DomainKind::GeneralPolynomial { terms } => (
                "general_polynomial",
                Some(serde_json::to_value(PolyParams { terms: terms.clone() }).unwrap()),
            ),
        };
        serde_json::to_string_pretty(&DomainDoc { kind: kind.into(), n: self.n, params }).unwrap()
    }

    pub fn check_dim(&self, z: &CVec) -> Result<()> {
        if z.n() != self.n {
            return Err(PclabError::DimensionMismatch { expected: self.n, got: z.n() });
        }
        Ok(())
    }

    /// ρ(z).
    pub fn rho(&self, z: &CVec) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.rho_unchecked(z))
    }

    pub(crate) fn rho_unchecked(&self, z: &CVec) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let mut v = C64::new(t.coeff, 0.0);
            for p in 0..self.n {
                if t.alpha[p] > 0 {
                    v *= cpow(z[p], t.alpha[p]);
                }
                if t.beta[p] > 0 {
                    v *= cpow(z[p].conj(), t.beta[p]);
                }
            }
            acc += v.re;
        }
        if let Some(k) = self.flat {
            acc += exp_flat_g(z[k].norm_sqr());
        }
        acc
    }

    /// ∂^α ∂̄^β ρ(z).
    pub fn partial(&self, z: &CVec, alpha: &[u32], beta: &[u32]) -> Result<C64> {
        self.check_dim(z)?;
        if alpha.len() != self.n || beta.len() != self.n {
            return Err(PclabError::DimensionMismatch { expected: self.n, got: alpha.len() });
        }
        let order = (alpha.iter().sum::<u32>() + beta.iter().sum::<u32>()) as usize;
        if order > self.max_order {
            return Err(PclabError::OrderTooHigh { requested: order, max: self.max_order });
        }
        Ok(self.partial_unchecked(z, alpha, beta))
    }

    pub(crate) fn partial_unchecked(&self, z: &CVec, alpha: &[u32], beta: &[u32]) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        'terms: for t in &self.terms {
            let mut v = C64::new(t.coeff, 0.0);
            for p in 0..self.n {
                if alpha[p] > t.alpha[p] || beta[p] > t.beta[p] {
                    continue 'terms;
                }
                v *= falling(t.alpha[p], alpha[p]) * falling(t.beta[p], beta[p]);
                let (ea, eb) = (t.alpha[p] - alpha[p], t.beta[p] - beta[p]);
                if ea > 0 {
                    v *= cpow(z[p], ea);
                }
                if eb > 0 {
                    v *= cpow(z[p].conj(), eb);
                }
            }
            acc += v;
        }
        if let Some(k) = self.flat {
            let off_axis = (0..self.n).any(|p| p != k && (alpha[p] > 0 || beta[p] > 0));
            if !off_axis {
                acc += radial_exp_partial(z[k], alpha[k], beta[k]);
            }
        }
        acc
    }

    /// All mixed partials with |α|+|β| ≤ K.
    pub fn jet(&self, z: &CVec, order: usize) -> Result<Jet> {
        self.check_dim(z)?;
        if order > self.max_order {
            return Err(PclabError::OrderTooHigh { requested: order, max: self.max_order });
        }
        let mut coeffs = BTreeMap::new();
        for total in 0..=order {
            for idx in compositions(2 * self.n, total as u32) {
                let (a, b) = idx.split_at(self.n);
                coeffs.insert((a.to_vec(), b.to_vec()), self.partial_unchecked(z, a, b));
            }
        }
        Ok(Jet { base: z.clone(), order, coeffs })
    }

    /// (∂ρ/∂z_p)_p.
    pub fn grad_dz(&self, z: &CVec) -> CVec {
        let n = self.n;
        let zero = vec![0; n];
        CVec::from_vec(
            (0..n)
                .map(|p| {
                    let mut a = vec![0; n];
                    a[p] = 1;
                    self.partial_unchecked(z, &a, &zero)
                })
                .collect(),
        )
    }

    /// (∂ρ/∂z̄_p)_p, the complex normal direction.
    pub fn grad_dzbar(&self, z: &CVec) -> CVec {
        self.grad_dz(z).conj()
    }

    /// Real gradient of ρ on ℝ²ⁿ written as a complex vector: 2·∂ρ/∂z̄.
    pub fn grad_real(&self, z: &CVec) -> CVec {
        self.grad_dzbar(z).scale(2.0)
    }

    /// (A, B) with A_pq = ∂²ρ/∂z_p∂z_q and B_pq = ∂²ρ/∂z_p∂z̄_q.
    pub fn complex_hessians(&self, z: &CVec) -> (DMatrix<C64>, DMatrix<C64>) {
        let n = self.n;
        let mut a = DMatrix::zeros(n, n);
        let mut b = DMatrix::zeros(n, n);
        let zero = vec![0u32; n];
        for p in 0..n {
            for q in 0..n {
                let mut hol = vec![0u32; n];
                hol[p] += 1;
                hol[q] += 1;
                a[(p, q)] = self.partial_unchecked(z, &hol, &zero);
                let mut ap = vec![0u32; n];
                ap[p] = 1;
                let mut bq = vec![0u32; n];
                bq[q] = 1;
                b[(p, q)] = self.partial_unchecked(z, &ap, &bq);
            }
        }
        (a, b)
    }

    /// Real Hessian on ℝ²ⁿ with interleaved coordinates (x₁, y₁, …).
    pub fn real_hessian(&self, z: &CVec) -> DMatrix<f64> {
        let n = self.n;
        let (a, b) = self.complex_hessians(z);
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        for p in 0..n {
            for q in 0..n {
                let (apq, bpq) = (a[(p, q)], b[(p, q)]);
                h[(2 * p, 2 * q)] = 2.0 * (apq + bpq).re;
                h[(2 * p + 1, 2 * q + 1)] = 2.0 * (bpq - apq).re;
                h[(2 * p, 2 * q + 1)] = 2.0 * (bpq - apq).im;
                h[(2 * p + 1, 2 * q)] = 2.0 * (bpq.conj() - apq).im;
            }
        }
        h
    }

    /// Taylor coefficients c[a][b] of t ↦ ρ(z + t·L) in t and t̄, a + b ≤ K.
    pub fn line_taylor(&self, z: &CVec, l: &CVec, order: usize) -> Result<Vec<Vec<C64>>> {
        self.check_dim(z)?;
        self.check_dim(l)?;
        if order > self.max_order {
            return Err(PclabError::OrderTooHigh { requested: order, max: self.max_order });
        }
        let zero = C64::new(0.0, 0.0);
        let mut c = vec![vec![zero; order + 1]; order + 1];
        for t in &self.terms {
            let mut ph = vec![C64::new(t.coeff, 0.0)];
            let mut pa = vec![C64::new(1.0, 0.0)];
            for p in 0..self.n {
                if t.alpha[p] > 0 {
                    ph = poly_mul(&ph, &binomial_poly(z[p], l[p], t.alpha[p]), order);
                }
                if t.beta[p] > 0 {
                    pa = poly_mul(&pa, &binomial_poly(z[p].conj(), l[p].conj(), t.beta[p]), order);
                }
            }
            for (i, x) in ph.iter().enumerate() {
                for (j, y) in pa.iter().enumerate() {
                    if i + j <= order {
                        c[i][j] += x * y;
                    }
                }
            }
        }
        if let Some(k) = self.flat {
            let (lk, lkc) = (l[k], l[k].conj());
            if lk.norm_sqr() > 0.0 {
                for i in 0..=order {
                    for j in 0..=(order - i) {
                        let d = radial_exp_partial(z[k], i as u32, j as u32);
                        if d.norm_sqr() == 0.0 {
                            continue;
                        }
                        let w = cpow(lk, i as u32) * cpow(lkc, j as u32)
                            / (factorial(i as u32) * factorial(j as u32));
                        c[i][j] += w * d;
                    }
                }
            }
        }
        Ok(c)
    }
}

/// Coefficients of (z + t·l)^A as a polynomial in t.
fn binomial_poly(z: C64, l: C64, a: u32) -> Vec<C64> {
    (0..=a)
        .map(|k| binom(a, k) * cpow(z, a - k) * cpow(l, k))
        .collect()
}

/// ∂^a ∂̄^b g(|w|²) for g(s) = exp(1 − 1/s).
fn radial_exp_partial(w: C64, a: u32, b: u32) -> C64 {
    let s = w.norm_sqr();
    let derivs = exp_flat_derivatives(s, (a + b) as usize);
    if derivs.iter().all(|d| *d == 0.0) {
        return C64::new(0.0, 0.0);
    }
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..=a.min(b) {
        let coef = binom(a, i) * falling(b, i);
        acc += coef * cpow(w, b - i) * cpow(w.conj(), a - i) * derivs[(a + b - i) as usize];
    }
    acc
}

/// All vectors of `slots` non-negative integers summing to `total`.
fn compositions(slots: usize, total: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; slots];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for v in (0..=left).rev() {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
    }
    if slots > 0 {
        rec(0, total, &mut cur, &mut out);
    }
    out
}

/// Exact mixed partials of ρ at a base point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub base: CVec,
    pub order: usize,
    pub coeffs: BTreeMap<(Vec<u32>, Vec<u32>), C64>,
}

impl Jet {
    pub fn get(&self, alpha: &[u32], beta: &[u32]) -> Option<C64> {
        self.coeffs.get(&(alpha.to_vec(), beta.to_vec())).copied()
    }

    /// Largest |c(α,β) − conj(c(β,α))| over the jet.
    pub fn hermitian_defect(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|((a, b), v)| {
                let m = self.coeffs[&(b.clone(), a.clone())];
                (v - m.conj()).norm() / (1.0 + v.norm())
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eval_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        assert_eq!(ball.rho(&CVec::real(&[0.0, 0.0])).unwrap(), -1.0);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        assert_eq!(egg.rho(&CVec::real(&[1.0, 0.0])).unwrap(), 0.0);
        let ef = DomainSpec::exp_flat();
        assert_eq!(ef.rho(&CVec::real(&[0.0, 0.0])).unwrap(), -1.0);
        assert!(ball.rho(&CVec::real(&[0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn jet_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let z = CVec::from_vec(vec![c(0.3, -0.2), c(0.1, 0.4)]);
        assert_abs_diff_eq!(ball.partial(&z, &[1, 0], &[1, 0]).unwrap().re, 1.0);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let a = CVec::real(&[1.0, 0.0]);
        assert_eq!(egg.partial(&a, &[0, 1], &[0, 1]).unwrap(), c(0.0, 0.0));
        assert_abs_diff_eq!(egg.partial(&a, &[0, 2], &[0, 2]).unwrap().re, 4.0);
        assert!(egg.jet(&a, 17).is_err());
    }

    #[test]
    fn exp_derivative_recursion_matches_finite_differences() {
        for &s in &[0.3, 0.7, 1.2] {
            let d = exp_flat_derivatives(s, 3);
            let h = 1e-4;
            let fd1 = (exp_flat_g(s + h) - exp_flat_g(s - h)) / (2.0 * h);
            let fd2 = (exp_flat_g(s + h) - 2.0 * exp_flat_g(s) + exp_flat_g(s - h)) / (h * h);
            assert!((d[1] - fd1).abs() < 1e-6 * (1.0 + d[1].abs()));
            assert!((d[2] - fd2).abs() < 1e-4 * (1.0 + d[2].abs()));
        }
        assert!(exp_flat_derivatives(0.0, 5).iter().all(|v| *v == 0.0));
        assert!(exp_flat_derivatives(1e-3, 5).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn radial_partial_matches_wirtinger_finite_differences() {
        // ∂∂̄ g(|w|²) = g' + s g''
        let w = c(0.6, 0.3);
        let s = w.norm_sqr();
        let d = exp_flat_derivatives(s, 2);
        let v = radial_exp_partial(w, 1, 1);
        assert!((v.re - (d[1] + s * d[2])).abs() < 1e-14);
        assert!(v.im.abs() < 1e-15);
        // ∂̄ g = w g'
        let v = radial_exp_partial(w, 0, 1);
        assert!((v - w * d[1]).norm() < 1e-15);
    }

    #[test]
    fn real_hessian_matches_finite_differences() {
        let dom = DomainSpec::general_polynomial(
            2,
            vec![
                Term { alpha: vec![2, 0], beta: vec![1, 1], coeff: 0.7 },
                Term { alpha: vec![1, 1], beta: vec![2, 0], coeff: 0.7 },
                Term { alpha: vec![0, 2], beta: vec![0, 0], coeff: 0.3 },
                Term { alpha: vec![0, 0], beta: vec![0, 2], coeff: 0.3 },
                Term { alpha: vec![1, 0], beta: vec![1, 0], coeff: 1.0 },
                Term { alpha: vec![0, 0], beta: vec![0, 0], coeff: -1.0 },
            ],
        )
        .unwrap();
        for d in [dom, DomainSpec::exp_flat()] {
            let z = CVec::from_vec(vec![c(0.4, -0.3), c(0.5, 0.35)]);
            let h = d.real_hessian(&z);
            let x0 = z.to_reals();
            let f = |x: &[f64]| d.rho(&CVec::from_reals(x).unwrap()).unwrap();
            let e = 1e-4;
            for i in 0..4 {
                for j in 0..4 {
                    let mut pp = x0.clone();
                    pp[i] += e;
                    pp[j] += e;
                    let mut pm = x0.clone();
                    pm[i] += e;
                    pm[j] -= e;
                    let mut mp = x0.clone();
                    mp[i] -= e;
                    mp[j] += e;
                    let mut mm = x0.clone();
                    mm[i] -= e;
                    mm[j] -= e;
                    let fd = (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * e * e);
                    assert!((fd - h[(i, j)]).abs() < 1e-5, "{i}{j}: {fd} vs {}", h[(i, j)]);
                }
            }
            // gradient
            let g = d.grad_real(&z).to_reals();
            for i in 0..4 {
                let mut p = x0.clone();
                p[i] += e;
                let mut m = x0.clone();
                m[i] -= e;
                assert!(((f(&p) - f(&m)) / (2.0 * e) - g[i]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn line_taylor_matches_partials() {
        let dom = DomainSpec::egg(&[1, 3]).unwrap();
        let z = CVec::from_vec(vec![c(0.2, 0.1), c(0.5, -0.4)]);
        let l = CVec::from_vec(vec![c(0.3, 0.2), c(-0.6, 0.5)]);
        let tc = dom.line_taylor(&z, &l, 6).unwrap();
        // c[1][1] = Σ B_pq L_p conj(L_q)
        let (_, b) = dom.complex_hessians(&z);
        let mut lev = C64::new(0.0, 0.0);
        for p in 0..2 {
            for q in 0..2 {
                lev += b[(p, q)] * l[p] * l[q].conj();
            }
        }
        assert!((tc[1][1] - lev).norm() < 1e-13);
        assert!((tc[0][0].re - dom.rho(&z).unwrap()).abs() < 1e-14);
        // ExpFlat: exp part of the z₂ line through (0.2, 0.5)
        let ef = DomainSpec::exp_flat();
        let z = CVec::real(&[0.2, 0.5]);
        let l = CVec::axis(2, 1);
        let tc = ef.line_taylor(&z, &l, 4).unwrap();
        let d = ef.partial(&z, &[0, 2], &[0, 1]).unwrap();
        assert!((tc[2][1] - d / 2.0).norm() < 1e-14);
    }

    #[test]
    fn json_round_trip_preserves_coefficients() {
        let terms = vec![
            Term { alpha: vec![1, 0], beta: vec![1, 0], coeff: 0.1 + 0.2 },
            Term { alpha: vec![0, 1], beta: vec![0, 1], coeff: std::f64::consts::PI },
            Term { alpha: vec![0, 0], beta: vec![0, 0], coeff: -1.0 },
        ];
        let d = DomainSpec::general_polynomial(2, terms).unwrap();
        let back = DomainSpec::from_json(&d.to_json()).unwrap();
        assert_eq!(d, back);
        for d in [DomainSpec::egg(&[1, 2]).unwrap(), DomainSpec::exp_flat(), DomainSpec::unit_ball(3).unwrap()] {
            assert_eq!(DomainSpec::from_json(&d.to_json()).unwrap(), d);
        }
        assert!(DomainSpec::from_json("{not json").is_err());
        assert!(DomainSpec::from_json(r#"{"kind":"exp_flat","n":3}"#).is_err());
        let unpaired = r#"{"kind":"general_polynomial","n":2,"params":{"terms":[{"alpha":[2,0],"beta":[0,0],"coeff":1.0}]}}"#;
        assert!(DomainSpec::from_json(unpaired).is_err());
    }

    #[test]
    fn jet_is_hermitian() {
        let ef = DomainSpec::exp_flat();
        let j = ef.jet(&CVec::from_vec(vec![c(0.3, 0.1), c(0.4, -0.5)]), 6).unwrap();
        assert!(j.hermitian_defect() < 1e-12);
        assert_eq!(j.get(&[0, 0], &[0, 0]).unwrap().im, 0.0);
    }
}
