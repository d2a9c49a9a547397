//! Initial designs over the unit cube.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoeScheme {
    LatinHypercube,
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoeDesign {
    pub points: Vec<Vec<f64>>,
    pub scheme: DoeScheme,
}

/// Largest `v` in stratum `k` of `n`, i.e. with `floor(v·n) == k`.
fn clamp_to_stratum(mut v: f64, k: usize, n: usize) -> f64 {
    while (v * n as f64) as usize > k {
        v = f64::from_bits(v.to_bits() - 1);
    }
    while ((v * n as f64) as usize) < k {
        v = f64::from_bits(v.to_bits() + 1);
    }
    v
}

/// Latin hypercube sample: in every dimension each stratum `[i/n, (i+1)/n)`
/// holds exactly one point.
pub fn lhs_sample(n: usize, d: usize, rng: &mut RngStream) -> Result<DoeDesign> {
    if n == 0 || d == 0 {
        return Err(invalid("lhs_sample requires n >= 1 and d >= 1"));
    }
    let mut points = alloc::vec![alloc::vec![0.0; d]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for j in 0..d {
        rng.shuffle(&mut perm);
        for (i, &k) in perm.iter().enumerate() {
            let v = (k as f64 + rng.uniform()) / n as f64;
            points[i][j] = clamp_to_stratum(v.min(1.0 - f64::EPSILON / 2.0), k, n);
        }
    }
    Ok(DoeDesign {
        points,
        scheme: DoeScheme::LatinHypercube,
    })
}

pub fn uniform_sample(n: usize, d: usize, rng: &mut RngStream) -> Result<DoeDesign> {
    if n == 0 || d == 0 {
        return Err(invalid("uniform_sample requires n >= 1 and d >= 1"));
    }
    let points = (0..n)
        .map(|_| (0..d).map(|_| rng.uniform()).collect())
        .collect();
    Ok(DoeDesign {
        points,
        scheme: DoeScheme::UniformRandom,
    })
}
