//! Mean-field Gaussian variational inference.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::mlp::MlpSpec;
use super::posterior::BnnPosterior;
use super::predictive::{PosteriorEnsemble, Provenance};
use crate::error::{dim_mismatch, invalid, Error, Result};
use crate::math::{exp, ln};
use crate::optim::Adam;
use crate::rng::RngStream;

/// A model with a factorized Gaussian prior and a differentiable likelihood.
pub trait VariationalModel {
    fn dim(&self) -> usize;
    /// Per-coordinate prior means and standard deviations.
    fn prior_moments(&self) -> (Vec<f64>, Vec<f64>);
    /// Log likelihood; its gradient is accumulated into `grad`.
    fn log_lik_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64;
}

impl VariationalModel for BnnPosterior {
    fn dim(&self) -> usize {
        super::posterior::LogDensity::dim(self)
    }

    fn prior_moments(&self) -> (Vec<f64>, Vec<f64>) {
        BnnPosterior::prior_moments(self)
    }

    fn log_lik_grad(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        BnnPosterior::log_lik_grad(self, theta, grad)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalParams {
    pub mu: Vec<f64>,
    pub log_sigma: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SviOptions {
    pub n_steps: usize,
    pub learn_rate: f64,
    pub n_mc: usize,
    /// Initial `σ` as a fraction of the prior std.
    pub init_sigma_scale: f64,
}

impl Default for SviOptions {
    fn default() -> Self {
        Self {
            n_steps: 3000,
            learn_rate: 1e-2,
            n_mc: 8,
            init_sigma_scale: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SviFit {
    pub params: VariationalParams,
    /// Stochastic ELBO estimate at every step.
    pub elbo_trace: Vec<f64>,
}

/// `KL(N(μ, σ²) ‖ N(m, s²))` summed over coordinates.
fn kl_diag(mu: &[f64], log_sigma: &[f64], m: &[f64], s: &[f64]) -> f64 {
    let mut kl = 0.0;
    for i in 0..mu.len() {
        let sig = exp(log_sigma[i]);
        let r = sig / s[i];
        let d = (mu[i] - m[i]) / s[i];
        kl += -ln(r) + 0.5 * (r * r + d * d) - 0.5;
    }
    kl
}

/// Maximizes the reparameterized ELBO with Adam, starting from `init_mu`.
pub fn svi_fit<M: VariationalModel + ?Sized>(
    model: &M,
    init_mu: &[f64],
    opts: &SviOptions,
    rng: &mut RngStream,
) -> Result<SviFit> {
    let d = model.dim();
    if init_mu.len() != d {
        return Err(dim_mismatch("variational mean", d, init_mu.len()));
    }
    if opts.n_mc == 0 {
        return Err(invalid("n_mc must be >= 1"));
    }
    let (pm, ps) = model.prior_moments();
    // Packed as [μ…, log σ…].
    let mut phi: Vec<f64> = init_mu.to_vec();
    phi.extend(ps.iter().map(|s| ln(s * opts.init_sigma_scale)));
    let mut adam = Adam::new(2 * d, opts.learn_rate);
    let mut trace = Vec::with_capacity(opts.n_steps);
    let mut grad = vec![0.0; 2 * d];
    let mut g_ll = vec![0.0; d];
    let mut theta = vec![0.0; d];
    let mut eps = vec![0.0; d];
    for step in 0..opts.n_steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (mu, ls) = phi.split_at(d);
        let mut ll = 0.0;
        for _ in 0..opts.n_mc {
            for i in 0..d {
                eps[i] = rng.normal();
                theta[i] = mu[i] + exp(ls[i]) * eps[i];
            }
            g_ll.iter_mut().for_each(|g| *g = 0.0);
            ll += model.log_lik_grad(&theta, &mut g_ll);
            for i in 0..d {
                grad[i] += g_ll[i];
                grad[d + i] += g_ll[i] * eps[i] * exp(ls[i]);
            }
        }
        let inv = 1.0 / opts.n_mc as f64;
        ll *= inv;
        let kl = kl_diag(mu, ls, &pm, &ps);
        let elbo = ll - kl;
        if !elbo.is_finite() {
            return Err(Error::NonFiniteElbo {
                step,
                detail: format!("log-likelihood {ll}, KL {kl}"),
            });
        }
        trace.push(elbo);
        for i in 0..d {
            let sig2 = exp(2.0 * ls[i]);
            grad[i] = grad[i] * inv - (mu[i] - pm[i]) / (ps[i] * ps[i]);
            grad[d + i] = grad[d + i] * inv - (sig2 / (ps[i] * ps[i]) - 1.0);
        }
        adam.ascend(&mut phi, &grad);
    }
    let log_sigma = phi.split_off(d);
    Ok(SviFit {
        params: VariationalParams { mu: phi, log_sigma },
        elbo_trace: trace,
    })
}

/// Draws `n` flat parameter vectors `μ + σ⊙z`.
pub fn svi_draws(vp: &VariationalParams, n: usize, rng: &mut RngStream) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    if vp.mu.len() != vp.log_sigma.len() {
        return Err(dim_mismatch("variational log_sigma", vp.mu.len(), vp.log_sigma.len()));
    }
    Ok((0..n)
        .map(|_| {
            vp.mu
                .iter()
                .zip(&vp.log_sigma)
                .map(|(m, ls)| m + exp(*ls) * rng.normal())
                .collect()
        })
        .collect())
}

/// Ensemble of `n` members drawn from the fitted variational posterior.
pub fn svi_posterior_samples(
    spec: &MlpSpec,
    vp: &VariationalParams,
    with_noise: bool,
    n: usize,
    rng: &mut RngStream,
) -> Result<PosteriorEnsemble> {
    let draws = svi_draws(vp, n, rng)?;
    PosteriorEnsemble::from_draws(spec.clone(), &draws, with_noise, Provenance::Svi)
}
