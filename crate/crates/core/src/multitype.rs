//! Contact orders of complex tangent lines, linear multitypes and the
//! weight lattice Γₙ.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

use crate::cvec::{gram_schmidt, CVec, C64};
use crate::domain::DomainSpec;
use crate::error::{PclabError, Result};
use crate::geometry::{tangent_frame, BoundaryFrame};

/// Relative size below which a Taylor coefficient counts as zero.
pub const CONTACT_TOL: f64 = 1e-10;

/// Weight vector (m₁, …, mₙ); `None` is ∞.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Weight(pub Vec<Option<u32>>);

impl Weight {
    pub fn finite(m: &[u32]) -> Self {
        Weight(m.iter().map(|&x| Some(x)).collect())
    }

    /// (1, 2, …, 2).
    pub fn minimal(n: usize) -> Self {
        let mut m = vec![Some(2); n];
        m[0] = Some(1);
        Weight(m)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[Option<u32>] {
        &self.0
    }

    /// m_j as a float (∞ for `None`).
    pub fn m(&self, j: usize) -> f64 {
        self.0[j].map(|v| v as f64).unwrap_or(f64::INFINITY)
    }

    /// μ = Σ_{j≥2} 1/m_j.
    pub fn mu(&self) -> f64 {
        (1..self.n()).map(|j| 1.0 / self.m(j)).sum()
    }

    /// μ_j = Σ_{k≠j} 1/m_k (0-based j).
    pub fn mu_j(&self, j: usize) -> f64 {
        (0..self.n()).filter(|&k| k != j).map(|k| 1.0 / self.m(k)).sum()
    }

    /// Bounds μ_j ≤ n/2 for j ≥ 2 and μ₁ ≤ (n−1)/2.
    pub fn mu_bounds_hold(&self) -> bool {
        let n = self.n() as f64;
        let eps = 1e-12;
        (0..self.n()).all(|j| {
            let bound = if j == 0 { (n - 1.0) / 2.0 } else { n / 2.0 };
            self.mu_j(j) <= bound + eps
        })
    }

    /// Condition (i): m₁ ≤ m₂ ≤ … ≤ mₙ.
    pub fn is_ordered(&self) -> bool {
        self.0.windows(2).all(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => a <= b,
            (None, Some(_)) => false,
            _ => true,
        })
    }

    /// Condition (ii): for each finite m_k there are integers 0 ≤ a_j ≤ m_j,
    /// a_k ≥ 1, with Σ_{j≤k} a_j/m_j = 1.
    pub fn lattice_condition(&self) -> bool {
        (0..self.n()).all(|k| match self.0[k] {
            None => true,
            Some(0) => false,
            Some(mk) => prefix_solvable(&self.0[..k], mk),
        })
    }

    pub fn max_finite(&self) -> Option<u32> {
        self.0.iter().flatten().copied().max()
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn prefix_solvable(prefix: &[Option<u32>], mk: u32) -> bool {
    let fin: Vec<u64> = prefix.iter().flatten().map(|&v| v as u64).filter(|&v| v > 0).collect();
    let mut l = mk as u64;
    for &m in &fin {
        l = l / gcd(l, m) * m;
        if l > 1 << 22 {
            return false;
        }
    }
    let l = l as usize;
    let mut reach = vec![false; l + 1];
    reach[0] = true;
    for &m in &fin {
        let w = l / m as usize;
        let mut next = reach.clone();
        for s in 0..=l {
            if !reach[s] {
                continue;
            }
            for a in 1..=m as usize {
                let t = s + a * w;
                if t > l {
                    break;
                }
                next[t] = true;
            }
        }
        reach = next;
    }
    let wk = l / mk as usize;
    (1..=mk as usize).any(|a| a * wk <= l && reach[l - a * wk])
}

/// Γₙ membership of a boundary weight: (i), (ii) and m₁ = 1.
pub fn weight_valid(w: &Weight) -> bool {
    !w.0.is_empty() && w.0[0] == Some(1) && w.is_ordered() && w.lattice_condition()
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|m| m.map(|v| v.to_string()).unwrap_or_else(|| "inf".into()))
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(untagged)]
        enum Entry {
            Finite(u32),
            Infinite(&'static str),
        }
        s.collect_seq(self.0.iter().map(|m| match m {
            Some(v) => Entry::Finite(*v),
            None => Entry::Infinite("inf"),
        }))
    }
}

impl std::str::FromStr for Weight {
    type Err = PclabError;
    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        let m = body
            .split(',')
            .map(|t| {
                let t = t.trim();
                if t.eq_ignore_ascii_case("inf") {
                    Ok(None)
                } else {
                    t.parse::<u32>()
                        .map(Some)
                        .map_err(|_| PclabError::InvalidInput(format!("bad weight entry '{t}'")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Weight(m))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ContactOrder {
    Finite(u32),
    Infinite,
}

/// Order of contact of the complex line α + t·L with ∂Ω.
pub fn contact_order(domain: &DomainSpec, alpha: &CVec, l: &CVec, kmax: usize) -> Result<ContactOrder> {
    domain.check_dim(alpha)?;
    let l = l.normalized().ok_or_else(|| PclabError::InvalidInput("zero direction".into()))?;
    let d = domain.grad_dz(alpha);
    let scale = d.norm().max(1e-300);
    let pairing = d.as_slice().iter().zip(l.iter()).map(|(a, b)| a * b).sum::<C64>().norm() / scale;
    if pairing > 1e-8 {
        return Err(PclabError::NotTangent { pairing });
    }
    let c = domain.line_taylor(alpha, &l, kmax)?;
    let tol = CONTACT_TOL * scale.max(1.0);
    for total in 1..=kmax {
        for a in 0..=total {
            if c[a][total - a].norm() > tol {
                return Ok(ContactOrder::Finite(total as u32));
            }
        }
    }
    Ok(ContactOrder::Infinite)
}

#[derive(Clone, Copy, Debug)]
pub struct MultitypeOptions {
    pub kmax: usize,
    pub directions: usize,
    pub seed: u64,
    pub repair_weights: bool,
}

impl Default for MultitypeOptions {
    fn default() -> Self {
        MultitypeOptions { kmax: 12, directions: 256, seed: 0, repair_weights: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiType {
    pub weight: Weight,
    pub frame: BoundaryFrame,
    pub kmax: usize,
    pub converged: bool,
    /// Direction sampling was needed (tangent dimension ≥ 2).
    pub heuristic: bool,
    pub gamma_valid: bool,
    /// Some contact order was odd (possible only for general polynomials).
    pub odd_orders: bool,
    pub repaired: bool,
}

#[derive(Clone, Debug, Serialize)]
pub enum MultitypeOutcome {
    Finite(MultiType),
    InfiniteType { alpha: CVec, direction: CVec, kmax: usize },
}

impl MultitypeOutcome {
    pub fn finite(self) -> Option<MultiType> {
        match self {
            MultitypeOutcome::Finite(m) => Some(m),
            _ => None,
        }
    }
}

enum Greedy {
    Finite { orders: Vec<u32>, dirs: Vec<CVec>, heuristic: bool },
    Infinite(CVec),
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn greedy(domain: &DomainSpec, frame: &BoundaryFrame, kmax: usize, opts: &MultitypeOptions) -> Result<Greedy> {
    let alpha = &frame.alpha;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut space: Vec<CVec> = frame.tangents().to_vec();
    let mut chosen: Vec<(u32, CVec)> = Vec::new();
    let mut heuristic = false;
    while !space.is_empty() {
        let mut cands = space.clone();
        if space.len() >= 2 {
            heuristic = true;
            while cands.len() < opts.directions.max(space.len()) {
                let mut v = CVec::zeros(domain.n());
                for b in &space {
                    let c = C64::new(gaussian(&mut rng), gaussian(&mut rng));
                    v = &v + &b.cscale(c);
                }
                if let Some(u) = v.normalized() {
                    cands.push(u);
                }
            }
        }
        let mut best: Option<(u32, CVec)> = None;
        for c in cands {
            match contact_order(domain, alpha, &c, kmax)? {
                ContactOrder::Infinite => return Ok(Greedy::Infinite(c)),
                ContactOrder::Finite(k) => {
                    if best.as_ref().is_none_or(|(b, _)| k > *b) {
                        best = Some((k, c));
                    }
                }
            }
        }
        let (k, e) = best.expect("nonempty candidate set");
        // orthocomplement of e inside the current subspace
        let overlaps: Vec<f64> = space.iter().map(|b| b.dot(&e).norm()).collect();
        let max = overlaps.iter().cloned().fold(0.0, f64::max);
        let drop = overlaps.iter().position(|&o| o >= max - 1e-12).unwrap_or(0);
        let rest: Vec<CVec> = space.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, b)| b.clone()).collect();
        space = gram_schmidt(std::slice::from_ref(&e), &rest);
        chosen.push((k, e));
    }
    chosen.sort_by_key(|(k, _)| *k);
    Ok(Greedy::Finite {
        orders: chosen.iter().map(|(k, _)| *k).collect(),
        dirs: chosen.into_iter().map(|(_, e)| e).collect(),
        heuristic,
    })
}

/// Greedy linear multitype at a boundary point: repeatedly pick the sampled
/// tangent direction of maximal contact order and pass to its orthocomplement.
pub fn linear_multitype(domain: &DomainSpec, alpha: &CVec, opts: MultitypeOptions) -> Result<MultitypeOutcome> {
    let frame = tangent_frame(domain, alpha)?;
    let (orders, dirs, heuristic) = match greedy(domain, &frame, opts.kmax, &opts)? {
        Greedy::Infinite(direction) => {
            return Ok(MultitypeOutcome::InfiniteType { alpha: alpha.clone(), direction, kmax: opts.kmax })
        }
        Greedy::Finite { orders, dirs, heuristic } => (orders, dirs, heuristic),
    };
    let converged = if opts.kmax + 2 <= domain.max_order() {
        match greedy(domain, &frame, opts.kmax + 2, &opts)? {
            Greedy::Finite { orders: o2, .. } => o2 == orders,
            Greedy::Infinite(_) => false,
        }
    } else {
        false
    };
    let mut m: Vec<Option<u32>> = vec![Some(1)];
    m.extend(orders.iter().map(|&k| Some(k)));
    let mut weight = Weight(m);
    let mut repaired = false;
    let odd_orders = orders.iter().any(|k| k % 2 == 1);
    if opts.repair_weights && odd_orders {
        weight = Weight(weight.0.iter().map(|m| m.map(|v| if v > 1 && v % 2 == 1 { v + 1 } else { v })).collect());
        repaired = true;
    }
    let gamma_valid = weight_valid(&weight);
    let mut basis = vec![frame.normal().clone()];
    basis.extend(dirs);
    Ok(MultitypeOutcome::Finite(MultiType {
        weight,
        frame: BoundaryFrame { alpha: alpha.clone(), basis },
        kmax: opts.kmax,
        converged,
        heuristic,
        gamma_valid,
        odd_orders,
        repaired,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_validity_examples() {
        assert!(weight_valid(&Weight::finite(&[1, 2, 2])));
        assert!(weight_valid(&Weight::finite(&[1, 4])));
        assert!(!weight_valid(&Weight::finite(&[2, 3])));
        assert!(!weight_valid(&Weight::finite(&[1, 4, 2])));
        assert!(weight_valid(&Weight::finite(&[1, 2, 6])));
        assert!(weight_valid(&Weight(vec![Some(1), None])));
    }

    #[test]
    fn mu_examples() {
        let w = Weight::minimal(2);
        assert_eq!(w.mu(), 0.5);
        let w = Weight::finite(&[1, 4]);
        assert_eq!(w.mu(), 0.25);
        assert_eq!(w.mu_j(0), 0.25);
        assert_eq!(w.mu_j(1), 1.0);
        assert!(w.mu_bounds_hold());
        for n in 2..6 {
            let w = Weight::minimal(n);
            assert_eq!(1.0 + 2.0 * w.mu(), n as f64);
            assert!(w.mu_bounds_hold());
        }
    }

    #[test]
    fn weight_parsing() {
        let w: Weight = "(1, 4)".parse().unwrap();
        assert_eq!(w, Weight::finite(&[1, 4]));
        assert_eq!(w.to_string(), "(1,4)");
        assert!("1,x".parse::<Weight>().is_err());
    }

    #[test]
    fn contact_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let a = CVec::real(&[1.0, 0.0]);
        let e2 = CVec::axis(2, 1);
        assert_eq!(contact_order(&ball, &a, &e2, 12).unwrap(), ContactOrder::Finite(2));
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        assert_eq!(contact_order(&egg, &a, &e2, 12).unwrap(), ContactOrder::Finite(4));
        let ef = DomainSpec::exp_flat();
        assert_eq!(contact_order(&ef, &a, &e2, 16).unwrap(), ContactOrder::Infinite);
        assert!(matches!(
            contact_order(&ball, &a, &CVec::axis(2, 0), 12),
            Err(PclabError::NotTangent { .. })
        ));
    }

    #[test]
    fn multitype_examples() {
        let b3 = DomainSpec::unit_ball(3).unwrap();
        let a = CVec::real(&[0.6, 0.0, 0.8]);
        let m = linear_multitype(&b3, &a, Default::default()).unwrap().finite().unwrap();
        assert_eq!(m.weight, Weight::finite(&[1, 2, 2]));
        assert!(m.converged && m.heuristic && m.gamma_valid);
        assert!(m.frame.unitarity_defect() < 1e-10);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let m = linear_multitype(&egg, &CVec::real(&[1.0, 0.0]), Default::default()).unwrap().finite().unwrap();
        assert_eq!(m.weight, Weight::finite(&[1, 4]));
        assert!(!m.heuristic);
        let m = linear_multitype(&egg, &CVec::real(&[0.0, 1.0]), Default::default()).unwrap().finite().unwrap();
        assert_eq!(m.weight, Weight::finite(&[1, 2]));
        let ef = DomainSpec::exp_flat();
        assert!(matches!(
            linear_multitype(&ef, &CVec::real(&[1.0, 0.0]), Default::default()).unwrap(),
            MultitypeOutcome::InfiniteType { .. }
        ));
    }

    #[test]
    fn odd_orders_are_flagged_or_repaired() {
        // ρ = |z₁|² + Re(z₂²z̄₂) + |z₂|⁴ − 1 has contact order 3 along z₂
        use crate::domain::Term;
        let terms = vec![
            Term { alpha: vec![1, 0], beta: vec![1, 0], coeff: 1.0 },
            Term { alpha: vec![0, 2], beta: vec![0, 1], coeff: 0.5 },
            Term { alpha: vec![0, 1], beta: vec![0, 2], coeff: 0.5 },
            Term { alpha: vec![0, 2], beta: vec![0, 2], coeff: 1.0 },
            Term { alpha: vec![0, 0], beta: vec![0, 0], coeff: -1.0 },
        ];
        let d = DomainSpec::general_polynomial(2, terms).unwrap();
        let a = CVec::real(&[1.0, 0.0]);
        let m = linear_multitype(&d, &a, Default::default()).unwrap().finite().unwrap();
        assert_eq!(m.weight, Weight::finite(&[1, 3]));
        assert!(m.odd_orders && !m.repaired);
        let opts = MultitypeOptions { repair_weights: true, ..Default::default() };
        let m = linear_multitype(&d, &a, opts).unwrap().finite().unwrap();
        assert_eq!(m.weight, Weight::finite(&[1, 4]));
        assert!(m.repaired);
    }
}
