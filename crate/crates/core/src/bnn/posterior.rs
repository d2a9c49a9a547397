//! Gaussian-likelihood BNN posterior with Gaussian priors.

use alloc::vec;
use alloc::vec::Vec;

use super::mlp::{backward, forward_tape, MlpSpec, Tape};
use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::math::{exp, ln, sqrt, LN_2PI};

/// Unnormalized log density with gradient, the target of HMC and NUTS.
pub trait LogDensity {
    fn dim(&self) -> usize;
    /// Writes `∇ log p(θ)` into `grad` and returns `log p(θ)`.
    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorSpec {
    pub weight_std_base: f64,
    pub bias_std: f64,
    /// Mean and std of the normal prior on the log observation-noise std.
    pub noise_log_std_prior: (f64, f64),
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self {
            weight_std_base: 1.0,
            bias_std: 1.0,
            noise_log_std_prior: (ln(0.1), 0.5),
        }
    }
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight_std_base > 0.0 && self.bias_std > 0.0 && self.noise_log_std_prior.1 > 0.0) {
            return Err(invalid("prior standard deviations must be positive"));
        }
        Ok(())
    }

    /// Prior std of every network parameter in layout order.
    pub fn param_stds(&self, spec: &MlpSpec) -> Vec<f64> {
        let mut s = vec![0.0; spec.n_params()];
        for layer in spec.layout() {
            let ws = self.weight_std_base / sqrt(layer.fan_in as f64);
            s[layer.weights..layer.bias].iter_mut().for_each(|v| *v = ws);
            s[layer.bias..layer.bias + layer.fan_out].iter_mut().for_each(|v| *v = self.bias_std);
        }
        s
    }
}

/// Training inputs with scalar targets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(dim_mismatch("dataset targets", x.len(), y.len()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Log noise std is an extra, last coordinate of the parameter vector.
    Inferred,
    /// Known observation-noise std.
    Fixed(f64),
}

/// `log N(y | f(x;w), σ²) + log p(w) [+ log p(log σ)]` over a dataset.
#[derive(Debug, Clone)]
pub struct BnnPosterior {
    spec: MlpSpec,
    prior: PriorSpec,
    data: Dataset,
    noise: NoiseModel,
    stds: Vec<f64>,
}

impl BnnPosterior {
    pub fn new(spec: MlpSpec, prior: PriorSpec, data: Dataset, noise: NoiseModel) -> Result<Self> {
        prior.validate()?;
        if let Some(x) = data.x.iter().find(|x| x.len() != spec.input_dim()) {
            return Err(Error::ShapeMismatch {
                expected: spec.input_dim(),
                actual: x.len(),
            });
        }
        if spec.output_dim() != 1 {
            return Err(invalid("BNN regression needs a single output"));
        }
        if let NoiseModel::Fixed(s) = noise {
            if !(s > 0.0) {
                return Err(invalid("fixed noise std must be positive"));
            }
        }
        let stds = prior.param_stds(&spec);
        Ok(Self {
            spec,
            prior,
            data,
            noise,
            stds,
        })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn infers_noise(&self) -> bool {
        self.noise == NoiseModel::Inferred
    }

    /// Prior means and stds of every coordinate (including log noise).
    pub fn prior_moments(&self) -> (Vec<f64>, Vec<f64>) {
        let mut mean = vec![0.0; self.stds.len()];
        let mut std = self.stds.clone();
        if self.infers_noise() {
            mean.push(self.prior.noise_log_std_prior.0);
            std.push(self.prior.noise_log_std_prior.1);
        }
        (mean, std)
    }

    fn noise_std(&self, theta: &[f64]) -> f64 {
        match self.noise {
            NoiseModel::Inferred => exp(theta[self.spec.n_params()]),
            NoiseModel::Fixed(s) => s,
        }
    }

    /// Gaussian log likelihood and its gradient (accumulated into `grad`).
    pub fn log_lik_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let np = self.spec.n_params();
        let w = &theta[..np];
        let sigma = self.noise_std(theta);
        let inv_var = 1.0 / (sigma * sigma);
        let mut tape = Tape::default();
        let mut ll = 0.0;
        let mut sq_sum = 0.0;
        for (x, &y) in self.data.x.iter().zip(&self.data.y) {
            if forward_tape(&self.spec, w, x, None, &mut tape).is_err() {
                return f64::NEG_INFINITY;
            }
            let r = y - tape.output()[0];
            sq_sum += r * r;
            backward(&self.spec, w, x, None, &tape, &[r * inv_var], &mut grad[..np]);
        }
        let n = self.data.len() as f64;
        ll += -0.5 * sq_sum * inv_var - n * ln(sigma) - 0.5 * n * LN_2PI;
        if self.infers_noise() {
            grad[np] += sq_sum * inv_var - n;
        }
        ll
    }

    /// Log prior density (up to a constant) and its gradient.
    pub fn log_prior_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut lp = 0.0;
        for (i, &s) in self.stds.iter().enumerate() {
            let z = theta[i] / s;
            lp -= 0.5 * z * z;
            grad[i] -= theta[i] / (s * s);
        }
        if self.infers_noise() {
            let k = self.spec.n_params();
            let (m, s) = self.prior.noise_log_std_prior;
            let z = (theta[k] - m) / s;
            lp -= 0.5 * z * z;
            grad[k] -= (theta[k] - m) / (s * s);
        }
        lp
    }
}

impl LogDensity for BnnPosterior {
    fn dim(&self) -> usize {
        self.spec.n_params() + usize::from(self.infers_noise())
    }

    fn logp_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let lp = self.log_prior_grad(theta, grad);
        lp + self.log_lik_grad(theta, grad)
    }
}

/// Gradient of the log posterior at `params` (network weights, plus the log
/// noise std as a trailing entry when noise is inferred).
pub fn grad_log_posterior(post: &BnnPosterior, params: &[f64]) -> Result<Vec<f64>> {
    if params.len() != post.dim() {
        return Err(Error::ShapeMismatch {
            expected: post.dim(),
            actual: params.len(),
        });
    }
    let mut g = vec![0.0; params.len()];
    post.logp_grad(params, &mut g);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::mlp::{Activation, ParamVector};
    use crate::rng::RngStream;

    fn random_problem(seed: u64) -> (BnnPosterior, Vec<f64>) {
        let mut rng = RngStream::new(seed, 77);
        let d = 1 + rng.below(3);
        let hidden: Vec<usize> = (0..1 + rng.below(2)).map(|_| 1 + rng.below(5)).collect();
        let act = if rng.below(2) == 0 { Activation::Tanh } else { Activation::Relu };
        let spec = MlpSpec::regression(d, &hidden, act, 0.0).unwrap();
        let n = 1 + rng.below(8);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.uniform()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let noise = if rng.below(2) == 0 { NoiseModel::Inferred } else { NoiseModel::Fixed(0.3) };
        let post = BnnPosterior::new(spec.clone(), PriorSpec::default(), Dataset::new(x, y).unwrap(), noise).unwrap();
        let mut theta = ParamVector::sample_prior(&spec, 1.0, 1.0, &mut rng).into_vec();
        if post.infers_noise() {
            theta.push(ln(0.2) + 0.3 * rng.normal());
        }
        (post, theta)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut g = Vec::new();
        for seed in 0..50 {
            let (post, theta) = random_problem(seed);
            let grad = grad_log_posterior(&post, &theta).unwrap();
            let h = 1e-5;
            for i in 0..theta.len() {
                let mut t = theta.clone();
                t[i] += h;
                let up = post.logp_grad(&t, &mut vec![0.0; t.len()]);
                t[i] -= 2.0 * h;
                let dn = post.logp_grad(&t, &mut vec![0.0; t.len()]);
                let fd = (up - dn) / (2.0 * h);
                let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1.0);
                g.push(rel);
                assert!(rel < 1e-4, "seed {seed} param {i}: fd {fd} vs {}", grad[i]);
            }
        }
        assert!(!g.is_empty());
    }

    #[test]
    fn symmetric_data_zero_first_layer_gradient() {
        let spec = MlpSpec::regression(1, &[3], Activation::Tanh, 0.0).unwrap();
        let x = vec![vec![0.5], vec![-0.5], vec![0.2], vec![-0.2]];
        let y = vec![1.0, -1.0, 0.3, -0.3];
        let post = BnnPosterior::new(spec.clone(), PriorSpec::default(), Dataset::new(x, y).unwrap(), NoiseModel::Fixed(0.5))
            .unwrap();
        let g = grad_log_posterior(&post, &vec![0.0; spec.n_params()]).unwrap();
        let first = spec.layout()[0];
        assert!(g[first.weights..first.bias].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn prior_only_gradient() {
        let spec = MlpSpec::regression(2, &[3], Activation::Relu, 0.0).unwrap();
        let prior = PriorSpec::default();
        let post = BnnPosterior::new(spec.clone(), prior, Dataset::default(), NoiseModel::Fixed(1.0)).unwrap();
        let theta = ParamVector::sample_prior(&spec, 1.0, 1.0, &mut RngStream::new(4, 4)).into_vec();
        let g = grad_log_posterior(&post, &theta).unwrap();
        for ((gi, ti), s) in g.iter().zip(&theta).zip(prior.param_stds(&spec)) {
            assert!((gi + ti / (s * s)).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let (post, theta) = random_problem(1);
        assert!(grad_log_posterior(&post, &theta[1..]).is_err());
    }
}
