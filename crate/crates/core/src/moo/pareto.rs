//! Dominance, non-dominated filtering and the evaluation archive.
//! Every objective is maximized.

use alloc::vec::Vec;

use super::hv::hypervolume;
use crate::error::{dim_mismatch, invalid, Result};

/// `a` weakly better everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// Indices of non-dominated rows in ascending order. Of several identical
/// rows only the first survives.
pub fn pareto_front(ys: &[Vec<f64>]) -> Vec<usize> {
    let mut front: Vec<usize> = Vec::new();
    for (i, y) in ys.iter().enumerate() {
        if front.iter().any(|&j| dominates(&ys[j], y) || ys[j] == *y) {
            continue;
        }
        front.retain(|&j| !dominates(y, &ys[j]));
        front.push(i);
    }
    front.sort_unstable();
    front
}

/// All evaluated points together with their current non-dominated subset.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    n_obj: usize,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>,
    front: Vec<usize>,
}

impl ParetoArchive {
    pub fn new(n_obj: usize) -> Result<Self> {
        if n_obj == 0 {
            return Err(invalid("an archive needs at least one objective"));
        }
        Ok(Self {
            n_obj,
            xs: Vec::new(),
            ys: Vec::new(),
            front: Vec::new(),
        })
    }

    pub fn n_obj(&self) -> usize {
        self.n_obj
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn xs(&self) -> &[Vec<f64>] {
        &self.xs
    }

    pub fn ys(&self) -> &[Vec<f64>] {
        &self.ys
    }

    pub fn front_indices(&self) -> &[usize] {
        &self.front
    }

    pub fn front_ys(&self) -> Vec<Vec<f64>> {
        self.front.iter().map(|&i| self.ys[i].clone()).collect()
    }

    pub fn front_xs(&self) -> Vec<Vec<f64>> {
        self.front.iter().map(|&i| self.xs[i].clone()).collect()
    }

    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>) -> Result<()> {
        if y.len() != self.n_obj {
            return Err(dim_mismatch("objective vector", self.n_obj, y.len()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("objective values must be finite"));
        }
        let i = self.ys.len();
        let keep = !self
            .front
            .iter()
            .any(|&j| dominates(&self.ys[j], &y) || self.ys[j] == y);
        if keep {
            let ys = &self.ys;
            self.front.retain(|&j| !dominates(&y, &ys[j]));
            self.front.push(i);
        }
        self.xs.push(x);
        self.ys.push(y);
        Ok(())
    }

    /// Per-objective best value seen so far.
    pub fn best(&self) -> Option<Vec<f64>> {
        let first = self.ys.first()?.clone();
        Some(self.ys.iter().skip(1).fold(first, |mut acc, y| {
            for (a, v) in acc.iter_mut().zip(y) {
                *a = a.max(*v);
            }
            acc
        }))
    }

    /// Per-objective minimum minus a tenth of the observed range. A
    /// zero-range objective is offset by a tenth of `max(|min|, 1)`.
    pub fn ref_point(&self) -> Result<Vec<f64>> {
        if self.ys.is_empty() {
            return Err(invalid("reference point of an empty archive"));
        }
        Ok((0..self.n_obj)
            .map(|k| {
                let (lo, hi) = self
                    .ys
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y[k]), hi.max(y[k])));
                let range = hi - lo;
                let span = if range > 0.0 { range } else { lo.abs().max(1.0) };
                lo - 0.1 * span
            })
            .collect())
    }

    /// Hypervolume of the current front against `reference`.
    pub fn hypervolume(&self, reference: &[f64]) -> Result<f64> {
        hypervolume(&self.front_ys(), reference)
    }
}
