//! Small optimizers shared by surrogate fitting.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Adam state for maximizing (or minimizing) a differentiable objective.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    b1t: f64,
    b2t: f64,
}

impl Adam {
    pub fn new(dim: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
            b1t: 1.0,
            b2t: 1.0,
        }
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    /// Moves `params` against `grad` (descent).
    pub fn descend(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        self.b1t *= self.beta1;
        self.b2t *= self.beta2;
        let c1 = 1.0 - self.b1t;
        let c2 = 1.0 - self.b2t;
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (sqrt(vh) + self.eps);
        }
    }

    /// Moves `params` along `grad` (ascent).
    pub fn ascend(&mut self, params: &mut [f64], grad: &[f64]) {
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        self.descend(params, &neg);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub initial_step: f64,
    pub min_step: f64,
    /// Cap on full coordinate sweeps per step size.
    pub max_sweeps: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            initial_step: 1.0,
            min_step: 1.0 / 32.0,
            max_sweeps: 8,
        }
    }
}

/// Box-constrained coordinate pattern ascent. Polls `±step` on each
/// coordinate, keeps any improvement, and halves the step once a sweep makes
/// no progress. Returns the best point and its value; never worse than `x0`.
pub fn coordinate_ascent<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: AscentOptions) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x: Vec<f64> = x0.iter().zip(lo).zip(hi).map(|((v, l), h)| v.clamp(*l, *h)).collect();
    let mut best = f(&x);
    let mut step = opts.initial_step;
    while step >= opts.min_step {
        for _ in 0..opts.max_sweeps {
            let mut improved = false;
            for i in 0..x.len() {
                let orig = x[i];
                for dir in [1.0, -1.0] {
                    let cand = (orig + dir * step).clamp(lo[i], hi[i]);
                    if cand == x[i] {
                        continue;
                    }
                    x[i] = cand;
                    let v = f(&x);
                    if v > best {
                        best = v;
                        improved = true;
                        break;
                    }
                    x[i] = orig;
                }
            }
            if !improved {
                break;
            }
        }
        step *= 0.5;
    }
    (x, best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascent_finds_quadratic_peak() {
        let f = |x: &[f64]| -((x[0] - 0.3) * (x[0] - 0.3) + (x[1] + 1.2) * (x[1] + 1.2));
        let (x, v) = coordinate_ascent(
            f,
            &[2.0, 2.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            AscentOptions {
                min_step: 1e-4,
                max_sweeps: 100,
                ..AscentOptions::default()
            },
        );
        assert!((x[0] - 0.3).abs() < 1e-3 && (x[1] + 1.2).abs() < 1e-3, "{x:?}");
        assert!(v > -1e-5);
    }

    #[test]
    fn ascent_respects_bounds() {
        let (x, _) = coordinate_ascent(|x| x[0], &[0.0], &[-1.0], &[0.75], AscentOptions::default());
        assert_eq!(x, vec![0.75]);
    }

    #[test]
    fn adam_minimizes_bowl() {
        let mut p = vec![3.0, -2.0];
        let mut opt = Adam::new(2, 0.1);
        for _ in 0..500 {
            let g = vec![2.0 * p[0], 2.0 * p[1]];
            opt.descend(&mut p, &g);
        }
        assert!(p[0].abs() < 1e-2 && p[1].abs() < 1e-2, "{p:?}");
    }
}
