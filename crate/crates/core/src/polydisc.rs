//! Anisotropic polydiscs P_a(δ) with radii δ·r(a)^{1/m_j}, containment
//! sampling and the search for the uniform constant δ₀.

use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{gram_schmidt, CVec, C64};
use crate::domain::DomainSpec;
use crate::error::{PclabError, Result};
use crate::geometry::{boundary_grid, outward_normal, project_to_boundary, tangent_frame, BoundaryFrame};
use crate::multitype::{linear_multitype, MultitypeOptions, MultitypeOutcome, Weight};

/// A boundary sample with its resolved multitype.
#[derive(Clone, Debug, Serialize)]
pub struct SampledType {
    pub alpha: CVec,
    pub weight: Weight,
    pub frame: BoundaryFrame,
}

#[derive(Clone, Debug, Serialize)]
pub enum TypeAssignment {
    /// (1, 2, …, 2) everywhere, standard tangent frames.
    Minimal,
    /// One weight everywhere, standard tangent frames.
    Fixed(Weight),
    /// Nearest-sample lookup.
    Sampled(Vec<SampledType>),
}

#[derive(Clone, Debug)]
pub struct GoodFamily {
    pub domain: DomainSpec,
    pub assignment: TypeAssignment,
    pub delta0: Option<f64>,
}

impl GoodFamily {
    pub fn minimal(domain: DomainSpec) -> Self {
        GoodFamily { domain, assignment: TypeAssignment::Minimal, delta0: None }
    }

    pub fn fixed(domain: DomainSpec, weight: Weight) -> Result<Self> {
        if weight.n() != domain.n() || weight.0[0] != Some(1) || weight.0.iter().any(|m| m.is_none()) {
            return Err(PclabError::InvalidInput(format!(
                "fixed weight {weight} must have {} finite entries with m1 = 1",
                domain.n()
            )));
        }
        Ok(GoodFamily { domain, assignment: TypeAssignment::Fixed(weight), delta0: None })
    }

    /// Multitypes computed at every sample; infinite type anywhere is an error.
    pub fn computed(domain: DomainSpec, samples: &[CVec], opts: MultitypeOptions) -> Result<Self> {
        let types: Vec<SampledType> = samples
            .par_iter()
            .map(|a| match linear_multitype(&domain, a, opts)? {
                MultitypeOutcome::Finite(m) => Ok(SampledType { alpha: a.clone(), weight: m.weight, frame: m.frame }),
                MultitypeOutcome::InfiniteType { .. } => Err(PclabError::Precondition(format!(
                    "infinite type at sample {:?}; no good family with bounded multitypes",
                    a.to_reals()
                ))),
            })
            .collect::<Result<_>>()?;
        if types.is_empty() {
            return Err(PclabError::EmptyParametrization);
        }
        Ok(GoodFamily { domain, assignment: TypeAssignment::Sampled(types), delta0: None })
    }

    /// Multitype and frame at a boundary point α.
    pub fn resolve(&self, alpha: &CVec) -> Result<(Weight, BoundaryFrame)> {
        match &self.assignment {
            TypeAssignment::Minimal => Ok((Weight::minimal(self.domain.n()), tangent_frame(&self.domain, alpha)?)),
            TypeAssignment::Fixed(w) => Ok((w.clone(), tangent_frame(&self.domain, alpha)?)),
            TypeAssignment::Sampled(s) => {
                let best = s
                    .iter()
                    .min_by(|p, q| alpha.dist(&p.alpha).total_cmp(&alpha.dist(&q.alpha)))
                    .expect("nonempty sample");
                if alpha.dist(&best.alpha) < 1e-12 {
                    return Ok((best.weight.clone(), best.frame.clone()));
                }
                // carry the sample's tangent directions over to T_α
                let local = tangent_frame(&self.domain, alpha)?;
                let l1 = local.normal().clone();
                let moved = gram_schmidt(std::slice::from_ref(&l1), best.frame.tangents());
                let frame = if moved.len() == self.domain.n() - 1 {
                    let mut basis = vec![l1];
                    basis.extend(moved);
                    BoundaryFrame { alpha: alpha.clone(), basis }
                } else {
                    local
                };
                Ok((best.weight.clone(), frame))
            }
        }
    }
}

/// P_a(δ) = a + Σ_j c_j L_j with |c_j| < radius_j.
#[derive(Clone, Debug, Serialize)]
pub struct Polydisc {
    pub center: CVec,
    pub frame: BoundaryFrame,
    pub radii: Vec<f64>,
    pub delta: f64,
    pub weight: Weight,
    /// r(a).
    pub r: f64,
}

impl Polydisc {
    pub fn point(&self, coords: &[C64]) -> CVec {
        let mut z = self.center.clone();
        for (c, l) in coords.iter().zip(&self.frame.basis) {
            z = &z + &l.cscale(*c);
        }
        z
    }

    /// Support radius max_{z∈P} Re⟨z − a, u⟩ for a real unit direction u.
    pub fn support(&self, u: &CVec) -> f64 {
        self.radii.iter().zip(&self.frame.basis).map(|(r, l)| r * u.dot(l).norm()).sum()
    }

    /// Euclidean volume π^n ∏ radius_j².
    pub fn volume(&self) -> f64 {
        self.radii.iter().map(|r| std::f64::consts::PI * r * r).product()
    }

    /// Same center and frame at another δ.
    pub fn rescaled(&self, delta: f64) -> Polydisc {
        let f = if self.delta > 0.0 { delta / self.delta } else { 0.0 };
        let mut p = self.clone();
        p.radii = self.radii.iter().map(|r| r * f).collect();
        p.delta = delta;
        p
    }
}

/// Radii δ·r^{1/m_j}.
pub fn radii_for(weight: &Weight, r: f64, delta: f64) -> Vec<f64> {
    (0..weight.n()).map(|j| delta * r.powf(1.0 / weight.m(j))).collect()
}

pub fn make_polydisc(family: &GoodFamily, a: &CVec, delta: f64) -> Result<Polydisc> {
    if !(delta >= 0.0) {
        return Err(PclabError::InvalidInput("delta must be non-negative".into()));
    }
    let rho = family.domain.rho(a)?;
    if rho >= 0.0 {
        return Err(PclabError::OutsideDomain { rho });
    }
    let alpha = project_to_boundary(&family.domain, a)?;
    let r = a.dist(&alpha);
    let (weight, frame) = family.resolve(&alpha)?;
    Ok(Polydisc { center: a.clone(), radii: radii_for(&weight, r, delta), frame, delta, weight, r })
}

fn face_samples(radius: f64, per_face: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0)];
    for &level in &[0.5, 1.0] {
        for k in 0..per_face {
            out.push(C64::from_polar(level * radius, 2.0 * std::f64::consts::PI * k as f64 / per_face as f64));
        }
    }
    out
}

/// ρ < 0 on the product of sampled closed discs (centers, half-radius
/// circles and the distinguished boundary).
pub fn polydisc_contains(domain: &DomainSpec, p: &Polydisc, samples_per_face: usize) -> bool {
    let per_face = samples_per_face.max(8);
    let sets: Vec<Vec<C64>> = p.radii.iter().map(|&r| face_samples(r, per_face)).collect();
    let mut idx = vec![0usize; sets.len()];
    let mut coords = vec![C64::new(0.0, 0.0); sets.len()];
    loop {
        for (j, s) in sets.iter().enumerate() {
            coords[j] = s[idx[j]];
        }
        if domain.rho_unchecked(&p.point(&coords)) >= 0.0 {
            return false;
        }
        let mut j = 0;
        loop {
            if j == idx.len() {
                return true;
            }
            idx[j] += 1;
            if idx[j] < sets[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Geometric depth ladder t₀, t₀q, t₀q², ….
pub fn depth_ladder(t0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| t0 * ratio.powi(k as i32)).collect()
}

/// Boundary samples of a res×res grid.
pub fn family_samples(domain: &DomainSpec, res: usize) -> Result<Vec<CVec>> {
    Ok(boundary_grid(domain, res)?.into_iter().map(|g| g.point).collect())
}

#[derive(Clone, Copy, Debug)]
pub struct Delta0Options {
    pub samples_per_face: usize,
    pub resolution: f64,
    /// Log-log slope of the per-depth threshold above which δ₀ is not uniform.
    pub max_decay_slope: f64,
}

impl Default for Delta0Options {
    fn default() -> Self {
        Delta0Options { samples_per_face: 16, resolution: 1e-3, max_decay_slope: 0.05 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Delta0Report {
    pub delta0: f64,
    pub depths: Vec<f64>,
    /// Smallest admissible δ over the samples at each depth.
    pub per_depth: Vec<f64>,
    /// Least-squares slope of log(per_depth) against log(depth).
    pub decay_slope: f64,
    /// The per-depth threshold does not decay toward the boundary.
    pub uniform: bool,
    pub polydiscs_checked: usize,
    /// Every sampled P_a(δ₀) passed containment.
    pub all_contained: bool,
    /// P_a(2) failed containment at every sampled center.
    pub double_overflows: bool,
    pub samples_per_face: usize,
}

fn threshold(domain: &DomainSpec, unit: &Polydisc, per_face: usize, res: f64) -> f64 {
    if polydisc_contains(domain, &unit.rescaled(2.0), per_face) {
        return 2.0;
    }
    let (mut lo, mut hi) = (0.0, 2.0);
    while hi - lo > res / 2.0 {
        let mid = 0.5 * (lo + hi);
        if polydisc_contains(domain, &unit.rescaled(mid), per_face) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Largest δ (to the given resolution, capped at 2) such that P_a(δ) passes
/// containment at every a = α − t·ν(α) over the samples and depths.
pub fn find_delta0(family: &GoodFamily, samples: &[CVec], depths: &[f64], opts: Delta0Options) -> Result<Delta0Report> {
    if samples.is_empty() || depths.is_empty() {
        return Err(PclabError::InvalidInput("find_delta0 needs samples and depths".into()));
    }
    let domain = &family.domain;
    let centers: Vec<(usize, CVec)> = samples
        .iter()
        .flat_map(|alpha| {
            let nu = outward_normal(domain, alpha);
            depths.iter().enumerate().map(move |(k, &t)| (k, nu.clone().map(|nu| alpha - &nu.scale(t))))
        })
        .map(|(k, a)| a.map(|a| (k, a)))
        .collect::<Result<_>>()?;
    let units: Vec<(usize, Polydisc)> = centers
        .par_iter()
        .map(|(k, a)| make_polydisc(family, a, 1.0).map(|p| (*k, p)))
        .collect::<Result<_>>()?;
    let thresholds: Vec<f64> = units
        .par_iter()
        .map(|(_, p)| threshold(domain, p, opts.samples_per_face, opts.resolution))
        .collect();
    let mut per_depth = vec![f64::INFINITY; depths.len()];
    for ((k, _), th) in units.iter().zip(&thresholds) {
        per_depth[*k] = per_depth[*k].min(*th);
    }
    let (worst_k, mut delta0) = per_depth
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    if delta0 < opts.resolution {
        return Err(PclabError::NoDelta0 { min: opts.resolution, depth: depths[worst_k] });
    }
    // sampling is not exactly monotone in δ: confirm and back off if needed
    let mut all_contained = false;
    for _ in 0..20 {
        all_contained = units
            .par_iter()
            .all(|(_, p)| polydisc_contains(domain, &p.rescaled(delta0), opts.samples_per_face));
        if all_contained {
            break;
        }
        delta0 -= opts.resolution;
        if delta0 < opts.resolution {
            return Err(PclabError::NoDelta0 { min: opts.resolution, depth: depths[worst_k] });
        }
    }
    let double_overflows = units
        .par_iter()
        .all(|(_, p)| !polydisc_contains(domain, &p.rescaled(2.0), opts.samples_per_face));
    let xs: Vec<f64> = depths.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = per_depth.iter().map(|d| d.ln()).collect();
    let decay_slope = if depths.len() >= 2 { ls_slope(&xs, &ys) } else { 0.0 };
    Ok(Delta0Report {
        delta0,
        depths: depths.to_vec(),
        per_depth,
        decay_slope,
        uniform: decay_slope <= opts.max_decay_slope,
        polydiscs_checked: units.len(),
        all_contained,
        double_overflows,
        samples_per_face: opts.samples_per_face.max(8),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let fam = GoodFamily::minimal(ball);
        let p = make_polydisc(&fam, &CVec::real(&[0.5, 0.0]), 0.1).unwrap();
        assert!((p.radii[0] - 0.05).abs() < 1e-12);
        assert!((p.radii[1] - 0.1 * 0.5f64.sqrt()).abs() < 1e-12);
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let fam = GoodFamily::fixed(egg, Weight::finite(&[1, 4])).unwrap();
        let p = make_polydisc(&fam, &CVec::real(&[0.9, 0.0]), 0.1).unwrap();
        assert!((p.radii[0] - 0.01).abs() < 1e-12);
        assert!((p.radii[1] - 0.1 * 0.1f64.powf(0.25)).abs() < 1e-12);
        let small = p.rescaled(1e-9);
        assert!(small.radii.iter().zip(&p.radii).all(|(a, b)| a < b));
    }

    #[test]
    fn containment_examples() {
        let ball = DomainSpec::unit_ball(2).unwrap();
        let fam = GoodFamily::minimal(ball.clone());
        let p = make_polydisc(&fam, &CVec::real(&[0.5, 0.0]), 0.05).unwrap();
        assert!(polydisc_contains(&ball, &p, 16));
        assert!(!polydisc_contains(&ball, &p.rescaled(2.0), 16));
        assert!(polydisc_contains(&ball, &p.rescaled(0.0), 16));
    }

    #[test]
    fn ball_delta0_matches_the_closed_form_threshold() {
        // At a = (1−t)e₁ the worst point is (1−t+δt, δ√t):
        // t(1−δ)² − 2(1−δ) + δ² = 0.
        let ball = DomainSpec::unit_ball(2).unwrap();
        let fam = GoodFamily::minimal(ball.clone());
        let depths = depth_ladder(0.2, 0.5, 6);
        let rep = find_delta0(&fam, &[CVec::real(&[1.0, 0.0])], &depths, Default::default()).unwrap();
        let exact = |t: f64| {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let d = 0.5 * (lo + hi);
                if t * (1.0 - d) * (1.0 - d) - 2.0 * (1.0 - d) + d * d < 0.0 {
                    lo = d
                } else {
                    hi = d
                }
            }
            lo
        };
        let oracle = depths.iter().map(|&t| exact(t)).fold(f64::INFINITY, f64::min);
        assert!((rep.delta0 - oracle).abs() < 2e-3, "{} vs {oracle}", rep.delta0);
        assert!(rep.uniform && rep.all_contained && rep.double_overflows);
    }

    #[test]
    fn overlarge_fixed_type_is_not_uniform() {
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let fam = GoodFamily::fixed(egg, Weight::finite(&[1, 8])).unwrap();
        let depths = depth_ladder(0.2, 0.5, 10);
        let rep = find_delta0(&fam, &[CVec::real(&[1.0, 0.0])], &depths, Default::default()).unwrap();
        assert!(!rep.uniform, "slope {}", rep.decay_slope);
    }
}
