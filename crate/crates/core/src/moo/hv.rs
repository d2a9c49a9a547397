//! Exact hypervolume by recursive exclusive-contribution slicing (WFG).

use alloc::vec::Vec;

use super::pareto::dominates;
use crate::error::{dim_mismatch, invalid, Error, Result};

pub const MAX_OBJECTIVES: usize = 4;

fn check(points: &[Vec<f64>], reference: &[f64]) -> Result<()> {
    let m = reference.len();
    if m == 0 || m > MAX_OBJECTIVES {
        return Err(Error::ObjectiveCountUnsupported(m));
    }
    if reference.iter().any(|v| !v.is_finite()) {
        return Err(invalid("reference point must be finite"));
    }
    for p in points {
        if p.len() != m {
            return Err(dim_mismatch("hypervolume point", m, p.len()));
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(invalid("hypervolume point contains NaN"));
        }
    }
    Ok(())
}

pub(crate) fn strictly_above(p: &[f64], reference: &[f64]) -> bool {
    p.iter().zip(reference).all(|(a, r)| a > r)
}

/// Volume of the box `[reference, p]`.
fn inclusive(p: &[f64], reference: &[f64]) -> f64 {
    p.iter().zip(reference).map(|(a, r)| a - r).product()
}

/// Drops dominated points and later duplicates, keeping order.
pub(crate) fn non_dominated(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut keep: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if keep.iter().any(|q| dominates(q, &p) || *q == p) {
            continue;
        }
        keep.retain(|q| !dominates(&p, q));
        keep.push(p);
    }
    keep
}

// The recursion below works on row-major point buffers with stride `m`
// to keep allocation out of the inner loops.

/// Appends `p` to a non-dominated buffer, evicting points it dominates.
fn insert_non_dominated(keep: &mut Vec<f64>, p: &[f64]) {
    let m = p.len();
    if keep.chunks_exact(m).any(|q| q == p || dominates(q, p)) {
        return;
    }
    let mut w = 0;
    for i in 0..keep.len() / m {
        if !dominates(p, &keep[i * m..(i + 1) * m]) {
            keep.copy_within(i * m..(i + 1) * m, w * m);
            w += 1;
        }
    }
    keep.truncate(w * m);
    keep.extend_from_slice(p);
}

/// Componentwise minimum with `p`, i.e. the part of each point's box that
/// lies inside `p`'s box, reduced to its non-dominated subset.
fn limit_set<'a>(rest: impl Iterator<Item = &'a [f64]>, p: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut q = Vec::from(p);
    for r in rest {
        for ((qk, a), b) in q.iter_mut().zip(r).zip(p) {
            *qk = a.min(*b);
        }
        insert_non_dominated(&mut out, &q);
    }
    out
}

/// Rows of `pts` ordered by coordinate `k`, largest first.
fn sorted_desc(pts: &[f64], m: usize, k: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..pts.len() / m).collect();
    order.sort_by(|&a, &b| pts[b * m + k].total_cmp(&pts[a * m + k]));
    order.iter().flat_map(|&i| pts[i * m..(i + 1) * m].iter().copied()).collect()
}

fn sweep_2d(pts: &[f64], reference: &[f64]) -> f64 {
    let mut rows: Vec<(f64, f64)> = pts.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut top = reference[1];
    let mut area = 0.0;
    for &(x, y) in &rows {
        if y > top {
            area += (x - reference[0]) * (y - top);
            top = y;
        }
    }
    area
}

/// Slices along the last objective, accumulating 2-D areas top down.
fn slice_3d(pts: &[f64], reference: &[f64]) -> f64 {
    let pts = sorted_desc(pts, 3, 2);
    let n = pts.len() / 3;
    // Staircase of the points seen so far, sorted by x descending with y
    // strictly increasing.
    let mut stair: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut area = 0.0;
    let mut volume = 0.0;
    for i in 0..n {
        let (x, y, z) = (pts[3 * i], pts[3 * i + 1], pts[3 * i + 2]);
        let pos = stair.partition_point(|s| s.0 > x);
        let covered = stair[..pos].last().is_some_and(|s| s.1 >= y)
            || stair.get(pos).is_some_and(|s| s.0 == x && s.1 >= y);
        if !covered {
            let mut end = pos;
            while end < stair.len() && stair[end].1 <= y {
                end += 1;
            }
            stair.splice(pos..end, core::iter::once((x, y)));
            let mut top = reference[1];
            area = 0.0;
            for s in &stair {
                area += (s.0 - reference[0]) * (s.1 - top);
                top = s.1;
            }
        }
        let below = if i + 1 < n { pts[3 * i + 5] } else { reference[2] };
        volume += area * (z - below);
    }
    volume
}

/// Hypervolume of non-dominated points that all lie strictly above
/// `reference`.
fn wfg(pts: &[f64], reference: &[f64]) -> f64 {
    let m = reference.len();
    match (pts.len() / m, m) {
        (0, _) => 0.0,
        (1, _) => inclusive(pts, reference),
        (_, 1) => pts.iter().copied().fold(f64::NEG_INFINITY, f64::max) - reference[0],
        (_, 2) => sweep_2d(pts, reference),
        (_, 3) => slice_3d(pts, reference),
        (n, _) => {
            let pts = sorted_desc(pts, m, m - 1);
            (0..n)
                .map(|i| {
                    let p = &pts[i * m..(i + 1) * m];
                    inclusive(p, reference) - wfg(&limit_set(pts[(i + 1) * m..].chunks_exact(m), p), reference)
                })
                .sum()
        }
    }
}

/// Lebesgue measure of the union of boxes `[reference, y]`. Points that do
/// not strictly dominate `reference` contribute nothing.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    check(front, reference)?;
    let mut pts = Vec::new();
    for p in front.iter().filter(|p| strictly_above(p, reference)) {
        insert_non_dominated(&mut pts, p);
    }
    Ok(wfg(&pts, reference))
}

/// Hypervolume `p` adds to `set`; zero when `p` is weakly dominated.
pub(crate) fn exclusive_contribution(p: &[f64], set: &[Vec<f64>], reference: &[f64]) -> f64 {
    if !strictly_above(p, reference) || set.iter().any(|q| q.iter().zip(p).all(|(a, b)| a >= b)) {
        return 0.0;
    }
    let limited = limit_set(set.iter().map(Vec::as_slice), p);
    (inclusive(p, reference) - wfg(&limited, reference)).max(0.0)
}

/// Increase in hypervolume when `added` joins `front`.
pub fn hypervolume_improvement(front: &[Vec<f64>], added: &[Vec<f64>], reference: &[f64]) -> Result<f64> {
    check(front, reference)?;
    check(added, reference)?;
    let mut set: Vec<Vec<f64>> = non_dominated(
        front
            .iter()
            .filter(|p| strictly_above(p, reference))
            .cloned()
            .collect(),
    );
    let mut gain = 0.0;
    for p in added {
        let g = exclusive_contribution(p, &set, reference);
        if g > 0.0 {
            gain += g;
            set.retain(|q| !dominates(p, q));
            set.push(p.clone());
        }
    }
    Ok(gain)
}
