//! Graph divisors X = {z_i = g(z_b)} in ℂ²: projection areas, the Wirtinger
//! lower bound, chart scaling of projection areas, and the Malliavin-type sum
//! over separated sequences packed on X.

use serde::{Deserialize, Serialize};

use crate::cvec::{CVec, C64};
use crate::domain::DomainSpec;
use crate::error::{PclabError, Result};
use crate::packing::{greedy_pack, PackingOptions, PackingTarget};
use crate::polydisc::{make_polydisc, GoodFamily};
use crate::quadrature::{adaptive_simpson, disc_integral, gauss_legendre};

/// Relative target of the area quadratures.
pub const AREA_REL_TOL: f64 = 1e-9;

/// X = {z_other = g(z_base)} with g a polynomial Σ c_k s^k.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DivisorGraph {
    pub coeffs: Vec<C64>,
    /// Index (0 or 1) of the coordinate g is a function of.
    #[serde(default = "default_base")]
    pub base_axis: usize,
}

fn default_base() -> usize {
    1
}

impl DivisorGraph {
    pub fn new(coeffs: Vec<C64>, base_axis: usize) -> Result<Self> {
        if base_axis > 1 {
            return Err(PclabError::InvalidInput("base_axis must be 0 or 1".into()));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(PclabError::InvalidInput("non-finite graph coefficient".into()));
        }
        Ok(DivisorGraph { coeffs, base_axis })
    }

    /// The flat disc {z_other = 0}.
    pub fn flat(base_axis: usize) -> Self {
        DivisorGraph { coeffs: vec![], base_axis }
    }

    /// Parse `{"coeffs": [[re, im], …], "base_axis": 1}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            coeffs: Vec<[f64; 2]>,
            #[serde(default = "default_base")]
            base_axis: usize,
        }
        let raw: Raw = serde_json::from_str(text).map_err(|e| PclabError::InvalidInput(format!("graph json: {e}")))?;
        DivisorGraph::new(raw.coeffs.iter().map(|c| C64::new(c[0], c[1])).collect(), raw.base_axis)
    }

    pub fn g(&self, s: C64) -> C64 {
        self.coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * s + c)
    }

    pub fn dg(&self, s: C64) -> C64 {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, (k, c)| acc * s + c * k as f64)
    }

    pub fn value_axis(&self) -> usize {
        1 - self.base_axis
    }

    /// The point of X over the base value s.
    pub fn point(&self, s: C64) -> CVec {
        let mut z = vec![C64::new(0.0, 0.0); 2];
        z[self.base_axis] = s;
        z[self.value_axis()] = self.g(s);
        CVec::from_vec(z)
    }

    /// Σ |c_k| R^k must be finite for the series to be usable on |s| < R.
    fn check_radius(&self, radius: f64) -> Result<()> {
        let bound: f64 = self.coeffs.iter().enumerate().map(|(k, c)| c.norm() * radius.powi(k as i32)).sum();
        if !bound.is_finite() || !(radius > 0.0) {
            return Err(PclabError::Numerical(format!("graph series unusable on radius {radius}")));
        }
        Ok(())
    }
}

/// A_j: area of the projection onto the coordinate line orthogonal to e_j,
/// counted with multiplicity.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct ProjectionAreas {
    pub a1: f64,
    pub a2: f64,
    pub total: f64,
}

impl ProjectionAreas {
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            self.a1
        } else {
            self.a2
        }
    }
}

/// ∫_{|s|<R} |g′(s)|² dm.
pub fn dirichlet_area(x: &DivisorGraph, radius: f64) -> f64 {
    if x.coeffs.len() <= 1 {
        return 0.0;
    }
    disc_integral(|s| x.dg(s).norm_sqr(), radius, AREA_REL_TOL)
}

pub fn graph_areas(x: &DivisorGraph, radius: f64) -> Result<ProjectionAreas> {
    x.check_radius(radius)?;
    let base = std::f64::consts::PI * radius * radius;
    let value = dirichlet_area(x, radius);
    let (a1, a2) = if x.base_axis == 1 { (base, value) } else { (value, base) };
    Ok(ProjectionAreas { a1, a2, total: a1 + a2 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WirtingerReport {
    pub total: f64,
    pub bound: f64,
    pub holds: bool,
    pub equality: bool,
}

/// Area of X over the unit disc against c₁ = π.
pub fn wirtinger_check(x: &DivisorGraph) -> Result<WirtingerReport> {
    let areas = graph_areas(x, 1.0)?;
    let bound = std::f64::consts::PI;
    Ok(WirtingerReport {
        total: areas.total,
        bound,
        holds: areas.total >= bound - 1e-6,
        equality: (areas.total - bound).abs() < 1e-6,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub j: usize,
    /// A_j(X_a) from ambient coordinates.
    pub direct: f64,
    /// δ² r(a)^{2μ_j} A_j(Y).
    pub predicted: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub r: f64,
    pub delta: f64,
    pub weight: String,
    pub rows: Vec<ScalingRow>,
    pub passes: bool,
}

/// Compare A_j(Φ_a(Y)) computed in ambient coordinates with the scaling rule.
/// Y is a graph in chart coordinates over the unit disc.
pub fn chart_scaling_check(family: &GoodFamily, a: &CVec, delta: f64, y: &DivisorGraph) -> Result<ScalingReport> {
    if family.domain.n() != 2 {
        return Err(PclabError::DimensionMismatch { expected: 2, got: family.domain.n() });
    }
    let p = make_polydisc(family, a, delta)?;
    if !(p.r > 0.0) || delta <= 0.0 {
        return Err(PclabError::Precondition("degenerate chart: r(a) = 0 or delta = 0".into()));
    }
    let ya = graph_areas(y, 1.0)?;
    // Φ_a(w) = a + Σ R_j w_j L_j, evaluated in ambient coordinates
    let ambient = |s: C64| -> CVec {
        let w = y.point(s);
        let mut z = a.clone();
        for j in 0..2 {
            z = &z + &p.frame.basis[j].cscale(w[j] * p.radii[j]);
        }
        z
    };
    let coord = |z: &CVec, k: usize| (z - a).dot(&p.frame.basis[k]);
    let nodes_r = gauss_legendre(40, 0.0, 1.0);
    let n_theta = 128;
    let h = 1e-5;
    let mut rows = Vec::new();
    for j in 0..2 {
        let k = 1 - j;
        let jac = |s: C64| {
            let dx = (coord(&ambient(s + C64::new(h, 0.0)), k) - coord(&ambient(s - C64::new(h, 0.0)), k)) / (2.0 * h);
            let dy = (coord(&ambient(s + C64::new(0.0, h)), k) - coord(&ambient(s - C64::new(0.0, h)), k)) / (2.0 * h);
            (dx.re * dy.im - dx.im * dy.re).abs()
        };
        let mut direct = 0.0;
        for &(s, w) in &nodes_r {
            let ring: f64 = (0..n_theta)
                .map(|t| jac(C64::from_polar(s, 2.0 * std::f64::consts::PI * t as f64 / n_theta as f64)))
                .sum::<f64>()
                / n_theta as f64;
            direct += w * 2.0 * std::f64::consts::PI * s * ring;
        }
        let predicted = delta * delta * p.r.powf(2.0 * p.weight.mu_j(j)) * ya.get(j);
        let rel_err = if predicted == 0.0 { direct.abs() } else { (direct - predicted).abs() / predicted };
        rows.push(ScalingRow { j, direct, predicted, rel_err });
    }
    Ok(ScalingReport {
        r: p.r,
        delta,
        weight: p.weight.to_string(),
        passes: rows.iter().all(|r| r.rel_err <= 1e-4),
        rows,
    })
}

/// First exit of the graph from Ω along the base ray s = t e^{iθ}.
pub fn exit_radius(domain: &DomainSpec, x: &DivisorGraph, theta: f64) -> Result<f64> {
    let dir = C64::from_polar(1.0, theta);
    let f = |t: f64| domain.rho_unchecked(&x.point(dir * t));
    if f(0.0) >= 0.0 {
        return Err(PclabError::Precondition("divisor graph does not meet the domain at base 0".into()));
    }
    let step = 1.0 / 64.0;
    let mut lo = 0.0;
    let mut hi = step;
    while f(hi) < 0.0 {
        lo = hi;
        hi += step;
        if hi > 1e3 {
            return Err(PclabError::Numerical("divisor graph does not leave the domain".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid
        } else {
            hi = mid
        }
    }
    Ok(lo)
}

/// Area(X ∩ Ω) = ∫ (1 + |g′|²) over the base region: the sum of both
/// projection areas of X inside the domain.
pub fn area_budget(domain: &DomainSpec, x: &DivisorGraph) -> Result<f64> {
    if domain.n() != 2 {
        return Err(PclabError::DimensionMismatch { expected: 2, got: domain.n() });
    }
    exit_radius(domain, x, 0.0)?;
    let radial = gauss_legendre(48, 0.0, 1.0);
    let per_angle = |th: f64| {
        let s_max = exit_radius(domain, x, th).unwrap_or(0.0);
        radial
            .iter()
            .map(|&(u, w)| {
                let s = u * s_max;
                w * s_max * s * (1.0 + x.dg(C64::from_polar(s, th)).norm_sqr())
            })
            .sum::<f64>()
    };
    Ok(adaptive_simpson(per_angle, 0.0, 2.0 * std::f64::consts::PI, 1e-9))
}

#[derive(Clone, Debug, Serialize)]
pub struct MalliavinReport {
    pub points: usize,
    pub candidates: usize,
    pub sum_r_n: f64,
    /// c₁ δ² Σ r(a)².
    pub lhs: f64,
    /// Area(X ∩ Ω).
    pub rhs: f64,
    pub holds: bool,
    /// Largest distance of a packed center to X.
    pub max_offset: f64,
}

/// c₁δ²Σ r(a)² over a separated sequence packed on X against the
/// projection-area budget of X in the domain (minimal family, n = 2).
pub fn malliavin_sum_check(domain: &DomainSpec, delta: f64, x: &DivisorGraph, budget: usize) -> Result<MalliavinReport> {
    let family = GoodFamily::minimal(domain.clone());
    let rhs = area_budget(domain, x)?;
    let opts = PackingOptions { budget, ..Default::default() };
    let packing = greedy_pack(&family, delta, &PackingTarget::OnDivisor(x.clone()), &opts)?;
    let max_offset = packing
        .points
        .iter()
        .map(|p| (p.a[x.value_axis()] - x.g(p.a[x.base_axis])).norm())
        .fold(0.0, f64::max);
    if max_offset > 1e-9 {
        return Err(PclabError::Precondition(format!("packed center off the divisor by {max_offset:e}")));
    }
    let sum_r_n: f64 = packing.points.iter().map(|p| p.r * p.r).sum();
    let lhs = std::f64::consts::PI * delta * delta * sum_r_n;
    Ok(MalliavinReport {
        points: packing.points.len(),
        candidates: packing.candidates,
        sum_r_n,
        lhs,
        rhs,
        holds: lhs <= rhs * 1.05,
        max_offset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn area_examples() {
        let flat = graph_areas(&DivisorGraph::flat(1), 1.0).unwrap();
        assert_eq!((flat.a1, flat.a2), (PI, 0.0));
        let sq = graph_areas(&DivisorGraph::new(vec![c(0.0), c(0.0), c(1.0)], 1).unwrap(), 1.0).unwrap();
        assert!((sq.a2 - 2.0 * PI).abs() < 1e-8 && (sq.total - 3.0 * PI).abs() < 1e-8);
        let lin = graph_areas(&DivisorGraph::new(vec![c(0.0), C64::new(0.3, 0.4)], 1).unwrap(), 1.0).unwrap();
        assert!((lin.total - 1.25 * PI).abs() < 1e-8);
    }

    #[test]
    fn wirtinger_examples() {
        let w = wirtinger_check(&DivisorGraph::flat(1)).unwrap();
        assert!(w.holds && w.equality);
        let w = wirtinger_check(&DivisorGraph::new(vec![c(0.0), c(0.1)], 1).unwrap()).unwrap();
        assert!(w.holds && !w.equality && (w.total - 1.01 * PI).abs() < 1e-8);
    }

    #[test]
    fn scaling_flat_normal_disc() {
        let fam = GoodFamily::minimal(DomainSpec::unit_ball(2).unwrap());
        let a = CVec::real(&[0.75, 0.0]);
        let rep = chart_scaling_check(&fam, &a, 0.1, &DivisorGraph::flat(0)).unwrap();
        assert!(rep.passes, "{rep:?}");
        assert!((rep.rows[1].predicted - 0.01 * 0.0625 * PI).abs() < 1e-12);
    }

    #[test]
    fn ball_budget_of_flat_slice() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let b = area_budget(&ball, &DivisorGraph::flat(1)).unwrap();
        assert!((b - PI).abs() < 1e-8);
        assert!((exit_radius(&ball, &DivisorGraph::flat(1), 0.3).unwrap() - 1.0).abs() < 1e-12);
    }
}
