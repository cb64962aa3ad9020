//! Box counting, upper Minkowski dimension estimates, tangent slices of the
//! weak set and Hölder exponents of sampled functions.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::cvec::{CVec, C64};
use crate::domain::DomainSpec;
use crate::error::{PclabError, Result};
use crate::geometry::{project_to_boundary, tangent_frame};
use crate::levi::{classify_point, PointClass};
use crate::polydisc::ls_slope;

pub const MIN_RUNGS: usize = 6;
pub const MIN_ADMISSIBLE: usize = 4;

/// Occupied cells of the axis grid of pitch ε shifted by `offset`.
pub fn box_count_shifted(points: &[Vec<f64>], eps: f64, offset: f64) -> usize {
    let cells: HashSet<Vec<i64>> = points
        .iter()
        .map(|p| p.iter().map(|x| ((x + offset) / eps).floor() as i64).collect())
        .collect();
    cells.len()
}

pub fn box_count(points: &[Vec<f64>], eps: f64) -> usize {
    box_count_shifted(points, eps, 0.0)
}

/// Largest nearest-neighbour distance in the set (0 for fewer than two points).
pub fn sampling_pitch(points: &[Vec<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let d = points[0].len();
    let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
    for p in points {
        for i in 0..d {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    let extent = (0..d).map(|i| hi[i] - lo[i]).fold(0.0, f64::max).max(1e-300);
    let cell = extent / (points.len() as f64).powf(1.0 / d as f64).max(1.0);
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|x| (x / cell).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let nearest = |i: usize| -> f64 {
        let k = key(&points[i]);
        let mut best = f64::INFINITY;
        let mut ring: i64 = 1;
        loop {
            // all cells at Chebyshev distance ≤ ring
            let side = (2 * ring + 1) as usize;
            for code in 0..side.pow(d as u32) {
                let mut c = code;
                let mut nb = k.clone();
                let mut on_shell = false;
                for v in nb.iter_mut() {
                    let o = (c % side) as i64 - ring;
                    c /= side;
                    on_shell |= o.abs() == ring;
                    *v += o;
                }
                if ring > 1 && !on_shell {
                    continue;
                }
                if let Some(ids) = grid.get(&nb) {
                    for &j in ids {
                        if j != i {
                            let dist: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                            best = best.min(dist);
                        }
                    }
                }
            }
            if best <= ring as f64 * cell {
                return best;
            }
            ring += 1;
        }
    };
    (0..points.len()).into_par_iter().map(nearest).reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxCountReport {
    pub eps: Vec<f64>,
    pub counts: Vec<usize>,
    pub admissible: Vec<bool>,
    pub dimension: f64,
    /// Index range of the admissible rungs.
    pub window: (usize, usize),
    pub residual: f64,
    pub pitch: f64,
}

/// Geometric ε ladder from ε_max down to ε_min.
pub fn eps_ladder(eps_max: f64, eps_min: f64, rungs: usize) -> Vec<f64> {
    let q = (eps_min / eps_max).powf(1.0 / (rungs - 1) as f64);
    (0..rungs).map(|k| eps_max * q.powi(k as i32)).collect()
}

/// Slope of log N_ε against log(1/ε) over rungs with pitch < ε/4. `pitch`
/// overrides the measured nearest-neighbour pitch (for grid-sampled sets
/// where the grid spacing is known).
pub fn dim_estimate(points: &[Vec<f64>], eps_max: f64, eps_min: f64, rungs: usize, pitch: Option<f64>) -> Result<BoxCountReport> {
    if rungs < MIN_RUNGS {
        return Err(PclabError::InvalidInput(format!("need at least {MIN_RUNGS} rungs")));
    }
    if !(eps_min > 0.0 && eps_max > eps_min) {
        return Err(PclabError::InvalidInput("need 0 < eps_min < eps_max".into()));
    }
    let eps = eps_ladder(eps_max, eps_min, rungs);
    let pitch = pitch.unwrap_or_else(|| sampling_pitch(points));
    let counts: Vec<usize> = eps.par_iter().map(|&e| box_count(points, e)).collect();
    let admissible: Vec<bool> = eps.iter().map(|&e| pitch < e / 4.0).collect();
    let idx: Vec<usize> = (0..rungs).filter(|&i| admissible[i]).collect();
    if idx.len() < MIN_ADMISSIBLE {
        return Err(PclabError::InsufficientRungs { usable: idx.len(), needed: MIN_ADMISSIBLE });
    }
    let xs: Vec<f64> = idx.iter().map(|&i| (1.0 / eps[i]).ln()).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| (counts[i].max(1) as f64).ln()).collect();
    let slope = if points.is_empty() { 0.0 } else { ls_slope(&xs, &ys) };
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
    let ambient = points.first().map(|p| p.len() as f64).unwrap_or(0.0);
    Ok(BoxCountReport {
        dimension: slope.clamp(0.0, ambient.max(0.0)),
        window: (idx[0], *idx.last().unwrap()),
        eps,
        counts,
        admissible,
        residual,
        pitch,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SliceResult {
    /// Slice coordinates (Re, Im) of weak points.
    pub points: Vec<[f64; 2]>,
    pub sampled: usize,
    pub failures: usize,
    pub pitch: f64,
    pub direction: usize,
}

/// Weak points of the slice α + λL_j + Σ offsets_k L_k (|Re λ|, |Im λ| ≤
/// window) after normal projection back to ∂Ω. `direction` is a 0-based
/// tangent index (1..n); `offsets` gives the other tangent coordinates.
#[allow(clippy::too_many_arguments)]
pub fn slice_weak_set(
    domain: &DomainSpec,
    alpha: &CVec,
    direction: usize,
    offsets: &[C64],
    window: f64,
    res: usize,
    tol: f64,
) -> Result<SliceResult> {
    let n = domain.n();
    if direction == 0 || direction >= n {
        return Err(PclabError::InvalidInput(format!("slice direction must be a tangent index in 1..{n}")));
    }
    if res < 2 {
        return Err(PclabError::InvalidInput("slice resolution must be at least 2".into()));
    }
    let frame = tangent_frame(domain, alpha)?;
    let mut base = alpha.clone();
    let others: Vec<usize> = (1..n).filter(|&k| k != direction).collect();
    for (k, o) in others.iter().zip(offsets.iter()) {
        base = &base + &frame.basis[*k].cscale(*o);
    }
    let step = 2.0 * window / (res - 1) as f64;
    let cells: Vec<(f64, f64)> = (0..res * res)
        .map(|i| (-window + (i % res) as f64 * step, -window + (i / res) as f64 * step))
        .collect();
    let out: Vec<Option<Option<[f64; 2]>>> = cells
        .par_iter()
        .map(|&(x, y)| {
            let z = &base + &frame.basis[direction].cscale(C64::new(x, y));
            let b = project_to_boundary(domain, &z).ok()?;
            Some(matches!(classify_point(domain, &b, tol), Ok(PointClass::Weak)).then_some([x, y]))
        })
        .collect();
    let failures = out.iter().filter(|o| o.is_none()).count();
    Ok(SliceResult {
        points: out.into_iter().flatten().flatten().collect(),
        sampled: res * res,
        failures,
        pitch: step,
        direction,
    })
}

/// Dimension of a slice sample: 0 when it has at most one point.
pub fn slice_dimension(s: &SliceResult, eps_max: f64, eps_min: f64, rungs: usize) -> Result<f64> {
    if s.points.len() <= 1 {
        return Ok(0.0);
    }
    let pts: Vec<Vec<f64>> = s.points.iter().map(|p| p.to_vec()).collect();
    Ok(dim_estimate(&pts, eps_max, eps_min, rungs, Some(s.pitch))?.dimension)
}

/// β = 2 − (slice dimension), floored at 0.
pub fn beta_from_slice(dim: f64) -> f64 {
    (2.0 - dim).max(0.0)
}

/// Hölder exponent of f sampled on a uniform grid: slope of log ω(h) against
/// log h over even dyadic offsets 2, 4, 8, … grid steps, ω(h) = max
/// |f(x + h) − f(x)|. Single-step differences are skipped: when the worst
/// point sits on a grid node they cannot straddle it symmetrically, which
/// biases the first rung. Constant functions return 1.
pub fn holder_exponent(xs: &[f64], fs: &[f64]) -> Result<f64> {
    if xs.len() != fs.len() {
        return Err(PclabError::DimensionMismatch { expected: xs.len(), got: fs.len() });
    }
    if xs.len() < 1000 {
        return Err(PclabError::InvalidInput("need at least 1000 samples".into()));
    }
    let n = xs.len();
    let mut hs = Vec::new();
    let mut ws = Vec::new();
    let mut k = 2;
    while k <= n / 8 {
        let omega = (0..n - k).map(|i| (fs[i + k] - fs[i]).abs()).fold(0.0, f64::max);
        let h = (0..n - k).map(|i| (xs[i + k] - xs[i]).abs()).fold(0.0, f64::max);
        if omega > 0.0 {
            hs.push(h.ln());
            ws.push(omega.ln());
        }
        k *= 2;
    }
    if ws.len() < 2 {
        return Ok(1.0);
    }
    Ok(ls_slope(&hs, &ws))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(box_count(&[vec![0.3, 0.7]], 0.01), 1);
        let seg: Vec<Vec<f64>> = (0..=1000).map(|i| vec![i as f64 / 1000.0, 0.0]).collect();
        let c = box_count(&seg, 0.1);
        assert!(c == 10 || c == 11);
        let sq: Vec<Vec<f64>> = (0..200 * 200).map(|i| vec![(i % 200) as f64 / 200.0, (i / 200) as f64 / 200.0]).collect();
        assert_eq!(box_count(&sq, 0.1), 100);
        assert_eq!(box_count(&[], 0.1), 0);
    }

    #[test]
    fn segment_dimension() {
        let seg: Vec<Vec<f64>> = (0..=4000).map(|i| vec![i as f64 / 4000.0, 0.0]).collect();
        assert!((sampling_pitch(&seg) - 2.5e-4).abs() < 1e-12);
        let r = dim_estimate(&seg, 0.2, 0.002, 8, None).unwrap();
        assert!((r.dimension - 1.0).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn starved_rungs_error() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 / 10.0]).collect();
        assert!(matches!(dim_estimate(&pts, 0.5, 0.001, 8, None), Err(PclabError::InsufficientRungs { .. })));
    }

    #[test]
    fn holder_of_roots() {
        let xs: Vec<f64> = (0..4001).map(|i| -1.0 + 2.0 * i as f64 / 4000.0).collect();
        let fs: Vec<f64> = xs.iter().map(|x| x.cbrt()).collect();
        assert!((holder_exponent(&xs, &fs).unwrap() - 1.0 / 3.0).abs() < 0.05);
        let fs: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        assert!((holder_exponent(&xs, &fs).unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(holder_exponent(&xs, &vec![3.0; xs.len()]).unwrap(), 1.0);
    }

    #[test]
    fn egg_slice_is_a_point() {
        let egg = DomainSpec::egg(&[1, 2]).unwrap();
        let s = slice_weak_set(&egg, &CVec::real(&[1.0, 0.0]), 1, &[], 0.5, 17, 1e-6).unwrap();
        assert_eq!(s.points, vec![[0.0, 0.0]]);
        assert_eq!(slice_dimension(&s, 0.5, 0.13, 6).unwrap(), 0.0);
        let ball = DomainSpec::unit_ball(2).unwrap();
        let s = slice_weak_set(&ball, &CVec::real(&[1.0, 0.0]), 1, &[], 0.5, 9, 1e-6).unwrap();
        assert!(s.points.is_empty());
    }
}
