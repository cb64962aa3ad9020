//! Greedy δ-separated sequences: centers of pairwise disjoint polydiscs
//! P_a(δ), layered lifts of the weak set, and the weighted sums over them.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rstar::primitives::{GeomWithData, Rectangle};
use rstar::{RTree, AABB};
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::divisor::{exit_radius, DivisorGraph};
use crate::error::{PclabError, Result};
use crate::geometry::{boundary_point_from_params, outward_normal};
use crate::levi::WeakSetSample;
use crate::lowdisc::halton;
use crate::polydisc::{ls_slope, make_polydisc, GoodFamily, Polydisc};

/// Relative slack of the touching test: polydiscs are open, so discs that
/// only touch count as disjoint.
pub const TOUCH_SLACK: f64 = 1e-9;

/// Real coordinates used by the spatial index (the first 8 reals; a
/// projection keeps the bounding-box filter conservative).
const INDEX_DIM: usize = 8;

#[derive(Clone, Debug)]
pub enum PackingTarget {
    /// Quasi-random points at depth < `depth` below the boundary.
    WholeCollar { depth: f64 },
    /// Normal lifts α − γ_k ν(α) of a weak-set sample, γ_k = ν^k γ₀.
    AboveWeakSet(WeakSetSample),
    /// Points of a graph divisor inside the domain (n = 2).
    OnDivisor(DivisorGraph),
}

#[derive(Clone, Copy, Debug)]
pub struct PackingOptions {
    /// Maximal number of candidates examined.
    pub budget: usize,
    pub seed: u64,
    /// First layer depth.
    pub gamma0: f64,
    /// O(N²) disjointness verification after packing.
    pub verify: bool,
}

impl Default for PackingOptions {
    fn default() -> Self {
        PackingOptions { budget: 10_000, seed: 0, gamma0: 0.25, verify: false }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PackedPoint {
    pub a: CVec,
    pub r: f64,
    pub mu: f64,
    pub layer: usize,
    #[serde(skip)]
    pub disc: Polydisc,
}

#[derive(Clone, Debug, Serialize)]
pub struct PackingResult {
    pub points: Vec<PackedPoint>,
    pub delta: f64,
    pub nu: f64,
    pub candidates: usize,
    pub layers: usize,
    pub family: String,
    /// Result of the pairwise verification pass, when requested.
    pub verified: Option<bool>,
}

/// ν = (1 − δ)/(1 + δ).
pub fn layer_ratio(delta: f64) -> f64 {
    (1.0 - delta) / (1.0 + delta)
}

/// Certified test along the center line: the gap between centers must
/// exceed the two support radii in that direction.
pub fn polydiscs_disjoint(p: &Polydisc, q: &Polydisc) -> bool {
    let d = &q.center - &p.center;
    let dist = d.norm();
    if dist == 0.0 {
        return false;
    }
    let bound: f64 = p.radii.iter().sum::<f64>() + q.radii.iter().sum::<f64>();
    if dist >= bound {
        return true;
    }
    let u = d.scale(1.0 / dist);
    dist >= (p.support(&u) + q.support(&u)) * (1.0 - TOUCH_SLACK)
}

fn envelope(p: &Polydisc) -> ([f64; INDEX_DIM], [f64; INDEX_DIM]) {
    let b: f64 = p.radii.iter().sum();
    let reals = p.center.to_reals();
    let mut lo = [0.0; INDEX_DIM];
    let mut hi = [0.0; INDEX_DIM];
    for (i, x) in reals.iter().take(INDEX_DIM).enumerate() {
        lo[i] = x - b;
        hi[i] = x + b;
    }
    (lo, hi)
}

/// Greedy acceptor backed by an R-tree of bounding boxes.
struct Packer {
    tree: RTree<GeomWithData<Rectangle<[f64; INDEX_DIM]>, usize>>,
    accepted: Vec<PackedPoint>,
}

impl Packer {
    fn new() -> Self {
        Packer { tree: RTree::new(), accepted: Vec::new() }
    }

    fn offer(&mut self, p: PackedPoint) -> bool {
        let (lo, hi) = envelope(&p.disc);
        let clash = self
            .tree
            .locate_in_envelope_intersecting(AABB::from_corners(lo, hi))
            .any(|g| !polydiscs_disjoint(&self.accepted[g.data].disc, &p.disc));
        if clash {
            return false;
        }
        self.tree.insert(GeomWithData::new(Rectangle::from_corners(lo, hi), self.accepted.len()));
        self.accepted.push(p);
        true
    }
}

fn build(family: &GoodFamily, delta: f64, centers: &[CVec], layer: usize) -> Vec<Result<PackedPoint>> {
    centers
        .par_iter()
        .map(|a| {
            let disc = make_polydisc(family, a, delta)?;
            Ok(PackedPoint { a: a.clone(), r: disc.r, mu: disc.weight.mu(), layer, disc })
        })
        .collect()
}

/// Stream layers of candidates through the acceptor until the budget or the
/// layer supply runs out. Candidates that fail to build (outside Ω, failed
/// projection) are skipped and still count against the budget.
fn run_layers<F>(family: &GoodFamily, delta: f64, budget: usize, max_layers: usize, mut layer: F) -> Result<(Packer, usize, usize)>
where
    F: FnMut(usize) -> Result<Option<Vec<CVec>>>,
{
    let mut packer = Packer::new();
    let mut seen = 0;
    let mut layers = 0;
    for k in 0..max_layers {
        if seen >= budget {
            break;
        }
        let Some(mut centers) = layer(k)? else { break };
        centers.truncate(budget - seen);
        seen += centers.len();
        layers = k + 1;
        for cand in build(family, delta, &centers, k).into_iter().flatten() {
            packer.offer(cand);
        }
    }
    Ok((packer, seen, layers))
}

fn finish(family: &GoodFamily, delta: f64, packer: Packer, candidates: usize, layers: usize, verify: bool) -> PackingResult {
    let mut res = PackingResult {
        points: packer.accepted,
        delta,
        nu: layer_ratio(delta),
        candidates,
        layers,
        family: family_name(family),
        verified: None,
    };
    if verify {
        res.verified = Some(verify_disjoint(&res));
    }
    res
}

fn family_name(family: &GoodFamily) -> String {
    use crate::polydisc::TypeAssignment::*;
    let kind = match &family.assignment {
        Minimal => "minimal".to_string(),
        Fixed(w) => format!("fixed{w}"),
        Sampled(s) => format!("computed({} samples)", s.len()),
    };
    format!("{}:{}", family.domain.name(), kind)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(PclabError::InvalidInput(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn weak_layer(family: &GoodFamily, w: &WeakSetSample, gamma: f64) -> Result<Vec<CVec>> {
    w.points
        .iter()
        .map(|alpha| Ok(alpha - &outward_normal(&family.domain, alpha)?.scale(gamma)))
        .collect()
}

/// Candidates on the divisor for layer k: base points at distance d_k inside
/// the exit radius along each ray, angular step about δ·d_k/2.
fn divisor_layer(family: &GoodFamily, x: &DivisorGraph, delta: f64, d: f64, k: usize) -> Result<Vec<CVec>> {
    let count = ((4.0 * std::f64::consts::PI / (delta * d)).ceil() as usize).max(8);
    let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
    let mut out = Vec::with_capacity(count + 1);
    if k == 0 {
        out.push(x.point(C64::new(0.0, 0.0)));
    }
    let pts: Vec<Option<CVec>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let th = 2.0 * std::f64::consts::PI * (i as f64 + shift) / count as f64;
            let s_max = exit_radius(&family.domain, x, th).ok()?;
            let s = s_max - d;
            (s > 0.0).then(|| x.point(C64::from_polar(s, th)))
        })
        .collect();
    out.extend(pts.into_iter().flatten());
    Ok(out)
}

pub fn greedy_pack(family: &GoodFamily, delta: f64, target: &PackingTarget, opts: &PackingOptions) -> Result<PackingResult> {
    check_delta(delta)?;
    let nu = layer_ratio(delta);
    let (packer, seen, layers) = match target {
        PackingTarget::WholeCollar { depth } => {
            let domain = &family.domain;
            let n = domain.n();
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let shift: Vec<f64> = (0..2 * n).map(|_| rng.gen()).collect();
            let centers: Vec<CVec> = (0..opts.budget as u64)
                .into_par_iter()
                .filter_map(|i| {
                    let h = halton(i, 2 * n, &shift);
                    // stick-breaking shares from the first n − 1 coordinates
                    let mut shares = vec![0.0; n];
                    let mut rem = 1.0;
                    for k in 0..n - 1 {
                        let left = (n - 1 - k) as f64;
                        shares[k] = rem * (1.0 - (1.0 - h[k]).powf(1.0 / left));
                        rem -= shares[k];
                    }
                    shares[n - 1] = rem;
                    let angles: Vec<f64> = (0..n).map(|k| 2.0 * std::f64::consts::PI * h[n - 1 + k]).collect();
                    let alpha = boundary_point_from_params(domain, &shares, &angles).ok().flatten()?;
                    let nu_a = outward_normal(domain, &alpha).ok()?;
                    let t = depth * (0.02 + 0.98 * h[2 * n - 1].max(1e-3));
                    Some(&alpha - &nu_a.scale(t))
                })
                .collect();
            if centers.is_empty() && opts.budget > 0 {
                return Err(PclabError::EmptyTarget);
            }
            let mut once = Some(centers);
            run_layers(family, delta, opts.budget, 1, |_| Ok(once.take()))?
        }
        PackingTarget::AboveWeakSet(w) => {
            if w.points.is_empty() {
                return Err(PclabError::EmptyTarget);
            }
            run_layers(family, delta, opts.budget, usize::MAX, |k| {
                let gamma = opts.gamma0 * nu.powi(k as i32);
                if gamma < 1e-12 {
                    return Ok(None);
                }
                weak_layer(family, w, gamma).map(Some)
            })?
        }
        PackingTarget::OnDivisor(x) => {
            if family.domain.n() != 2 {
                return Err(PclabError::DimensionMismatch { expected: 2, got: family.domain.n() });
            }
            exit_radius(&family.domain, x, 0.0).map_err(|_| PclabError::EmptyTarget)?;
            run_layers(family, delta, opts.budget, usize::MAX, |k| {
                let d = opts.gamma0 * nu.powi(k as i32);
                if d < 1e-9 {
                    return Ok(None);
                }
                divisor_layer(family, x, delta, d, k).map(Some)
            })?
        }
    };
    Ok(finish(family, delta, packer, seen, layers, opts.verify))
}

/// K full layers over the weak-set sample at depths γ_k = ν^k γ₀.
pub fn layered_pack(family: &GoodFamily, delta: f64, w: &WeakSetSample, gamma0: f64, layers: usize, verify: bool) -> Result<PackingResult> {
    check_delta(delta)?;
    if w.points.is_empty() {
        return Err(PclabError::EmptyTarget);
    }
    let nu = layer_ratio(delta);
    let (packer, seen, used) = run_layers(family, delta, usize::MAX, layers, |k| {
        weak_layer(family, w, gamma0 * nu.powi(k as i32)).map(Some)
    })?;
    Ok(finish(family, delta, packer, seen, used, verify))
}

/// Pairwise check of every accepted pair.
pub fn verify_disjoint(p: &PackingResult) -> bool {
    let pts = &p.points;
    (0..pts.len())
        .into_par_iter()
        .all(|i| (i + 1..pts.len()).all(|j| polydiscs_disjoint(&pts[i].disc, &pts[j].disc)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExponentRule {
    /// r(a)^{1 + 2μ(a)}.
    OnePlusTwoMu,
    /// r(a)^n.
    PowerN,
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremSum {
    pub rule: ExponentRule,
    pub layer_sums: Vec<f64>,
    /// Cumulative sums over layers 0..=k.
    pub partial: Vec<f64>,
    pub total: f64,
    /// exp of the least-squares slope of log(layer sum) against k.
    pub ratio_fit: Option<f64>,
}

pub fn theorem_sum(p: &PackingResult, rule: ExponentRule, n: usize) -> TheoremSum {
    let layers = p.points.iter().map(|q| q.layer + 1).max().unwrap_or(0).max(p.layers);
    let mut layer_sums = vec![0.0; layers];
    for q in &p.points {
        let e = match rule {
            ExponentRule::OnePlusTwoMu => 1.0 + 2.0 * q.mu,
            ExponentRule::PowerN => n as f64,
        };
        layer_sums[q.layer] += q.r.powf(e);
    }
    let partial: Vec<f64> = layer_sums
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect();
    let (ks, ls): (Vec<f64>, Vec<f64>) = layer_sums
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > 0.0)
        .map(|(k, s)| (k as f64, s.ln()))
        .unzip();
    let ratio_fit = (ks.len() >= 2).then(|| ls_slope(&ks, &ls).exp());
    TheoremSum { rule, total: partial.last().copied().unwrap_or(0.0), layer_sums, partial, ratio_fit }
}

/// Predicted per-layer decay ν^{β/mₙ}.
pub fn predicted_ratio(nu: f64, beta: f64, mn: f64) -> f64 {
    nu.powf(beta / mn)
}

#[derive(Clone, Debug, Serialize)]
pub struct PackingLemmaReport {
    pub r: Vec<f64>,
    pub counts: Vec<usize>,
    pub totals: Vec<f64>,
    /// Slope of log Σ Area against log r.
    pub slope: Option<f64>,
    pub alpha_prime: f64,
    pub passes: bool,
}

/// Σ π^n ∏ R_j² over axis-aligned polydiscs with radii R; errors if two of
/// them overlap.
pub fn lemma_area_sum(centers: &[CVec], radii: &[f64]) -> Result<f64> {
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if axis_overlap(&centers[i], &centers[j], radii) {
                return Err(PclabError::Precondition(format!("polydiscs {i} and {j} overlap")));
            }
        }
    }
    let area: f64 = radii.iter().map(|r| std::f64::consts::PI * r * r).product();
    Ok(area * centers.len() as f64)
}

fn axis_overlap(a: &CVec, b: &CVec, radii: &[f64]) -> bool {
    radii.iter().enumerate().all(|(j, r)| (a[j] - b[j]).norm() < 2.0 * r * (1.0 - TOUCH_SLACK))
}

/// Greedy disjoint axis-aligned polydiscs with radii (r, l₂r, …, lₙr)
/// centered on `w`, in the given order.
pub fn lemma_greedy(w: &[CVec], radii: &[f64]) -> Vec<CVec> {
    let cell = |z: &CVec| -> Vec<i64> {
        radii
            .iter()
            .enumerate()
            .flat_map(|(j, r)| [(z[j].re / (2.0 * r)).floor() as i64, (z[j].im / (2.0 * r)).floor() as i64])
            .collect()
    };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut chosen: Vec<CVec> = Vec::new();
    let d = 2 * radii.len();
    for z in w {
        let key = cell(z);
        let mut clash = false;
        'outer: for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let nb: Vec<i64> = key
                .iter()
                .map(|k| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    k + o
                })
                .collect();
            if let Some(ids) = grid.get(&nb) {
                for &i in ids {
                    if axis_overlap(&chosen[i], z, radii) {
                        clash = true;
                        break 'outer;
                    }
                }
            }
        }
        if !clash {
            grid.entry(key).or_default().push(chosen.len());
            chosen.push(z.clone());
        }
    }
    chosen
}

/// Σ Area(P_a) over greedy disjoint polydiscs centered on `w` across a ladder
/// of r, with the log-log slope compared against α′.
pub fn packing_lemma_check(w: &[CVec], l: &[f64], r_ladder: &[f64], alpha_prime: f64) -> Result<PackingLemmaReport> {
    let n = w.first().map(|z| z.n()).unwrap_or(l.len() + 1);
    if l.len() + 1 != n {
        return Err(PclabError::DimensionMismatch { expected: n - 1, got: l.len() });
    }
    let mut counts = Vec::new();
    let mut totals = Vec::new();
    for &r in r_ladder {
        let radii: Vec<f64> = std::iter::once(r).chain(l.iter().map(|lj| lj * r)).collect();
        let centers = lemma_greedy(w, &radii);
        let area: f64 = radii.iter().map(|x| std::f64::consts::PI * x * x).product();
        counts.push(centers.len());
        totals.push(area * centers.len() as f64);
    }
    let slope = if w.is_empty() || r_ladder.len() < 2 {
        None
    } else {
        let xs: Vec<f64> = r_ladder.iter().map(|r| r.ln()).collect();
        let ys: Vec<f64> = totals.iter().map(|t| t.ln()).collect();
        Some(ls_slope(&xs, &ys))
    };
    Ok(PackingLemmaReport {
        r: r_ladder.to_vec(),
        counts,
        totals,
        passes: slope.is_some_and(|s| s >= alpha_prime),
        slope,
        alpha_prime,
    })
}
