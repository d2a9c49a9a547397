use alloc::vec;
use alloc::vec::Vec;

use super::kernel::KernelSpec;
use crate::error::{dim_mismatch, invalid, Result};
use crate::linalg::{cholesky_factor, CholeskyFactor, Matrix, DEFAULT_MAX_JITTER};
use crate::math::{dot, sqrt, LN_2PI};
use crate::rng::RngStream;

/// Smallest standard deviation treated as a non-constant target vector.
pub(crate) const Y_STD_FLOOR: f64 = 1e-12;

/// Exact GP regression model on standardized targets.
#[derive(Debug, Clone)]
pub struct GpModel {
    x_train: Vec<Vec<f64>>,
    features: Vec<Vec<f64>>,
    y_train: Vec<f64>,
    kernel: KernelSpec,
    chol: Option<CholeskyFactor>,
    alpha: Vec<f64>,
    y_mean: f64,
    y_std: f64,
}

/// Joint Gaussian posterior of the latent function at query points.
#[derive(Debug, Clone, PartialEq)]
pub struct GpPosterior {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
}

pub(crate) fn standardize(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, sqrt(var))
}

impl GpModel {
    /// Conditions a GP with a fixed kernel on raw targets, standardizing them
    /// first. Constant targets produce a constant-mean model with zero
    /// predictive variance.
    pub fn new(x: Vec<Vec<f64>>, y: &[f64], kernel: KernelSpec) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(dim_mismatch("training targets", x.len(), y.len()));
        }
        let (mean, std) = standardize(y);
        if std <= Y_STD_FLOOR * (1.0 + mean.abs()) {
            return Self::constant(x, mean, kernel);
        }
        let ys = y.iter().map(|v| (v - mean) / std).collect();
        Self::from_standardized(x, ys, kernel, mean, std)
    }

    /// Conditions on targets that are already standardized; `y_mean` and
    /// `y_std` map predictions back to original units.
    pub fn from_standardized(
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        kernel: KernelSpec,
        y_mean: f64,
        y_std: f64,
    ) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(dim_mismatch("training targets", x.len(), y.len()));
        }
        if !(y_std > 0.0) {
            return Err(invalid("y_std must be positive"));
        }
        kernel.validate()?;
        let d = x[0].len();
        if x.iter().any(|p| p.len() != d) {
            return Err(invalid("training inputs have inconsistent dimensions"));
        }
        let features = x.iter().map(|p| kernel.featurize(p)).collect::<Result<Vec<_>>>()?;
        let k = gram(&kernel, &features);
        let chol = cholesky_factor(&k, DEFAULT_MAX_JITTER)?;
        let alpha = chol.solve_vec(&y);
        Ok(Self {
            x_train: x,
            features,
            y_train: y,
            kernel,
            chol: Some(chol),
            alpha,
            y_mean,
            y_std,
        })
    }

    fn constant(x: Vec<Vec<f64>>, mean: f64, kernel: KernelSpec) -> Result<Self> {
        let n = x.len();
        Ok(Self {
            features: x.clone(),
            x_train: x,
            y_train: vec![0.0; n],
            kernel,
            chol: None,
            alpha: vec![0.0; n],
            y_mean: mean,
            y_std: 1.0,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.chol.is_none()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn x_train(&self) -> &[Vec<f64>] {
        &self.x_train
    }

    pub fn y_standardized(&self) -> &[f64] {
        &self.y_train
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn y_std(&self) -> f64 {
        self.y_std
    }

    pub fn chol(&self) -> Option<&CholeskyFactor> {
        self.chol.as_ref()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `−½ yᵀα − Σ log L_ii − (n/2) log 2π` on standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        match &self.chol {
            None => 0.0,
            Some(chol) => lml_from_factor(chol, &self.y_train, &self.alpha),
        }
    }

    /// Mean (standardized units) and cross-covariance vector for one query.
    pub(crate) fn query(&self, x: &[f64]) -> Result<QueryStats> {
        let f = self.kernel.featurize(x)?;
        let prior_var = self.kernel.cov_features(&f, &f);
        let kq: Vec<f64> = self.features.iter().map(|t| self.kernel.cov_features(&f, t)).collect();
        let (mean, v) = match &self.chol {
            None => (0.0, vec![0.0; kq.len()]),
            Some(chol) => (dot(&kq, &self.alpha), chol.solve_lower(&kq)),
        };
        Ok(QueryStats {
            feature: f,
            mean,
            prior_var,
            v,
        })
    }

    /// Posterior covariance (standardized units) between two queried points.
    pub(crate) fn posterior_cov(&self, a: &QueryStats, b: &QueryStats) -> f64 {
        if self.is_constant() {
            return 0.0;
        }
        self.kernel.cov_features(&a.feature, &b.feature) - dot(&a.v, &b.v)
    }

    pub(crate) fn posterior_var(&self, a: &QueryStats) -> f64 {
        if self.is_constant() {
            return 0.0;
        }
        (a.prior_var - dot(&a.v, &a.v)).max(0.0)
    }

    /// Exact conditional mean and covariance at `xq`, in original target units.
    pub fn posterior_predict(&self, xq: &[Vec<f64>]) -> Result<GpPosterior> {
        if xq.is_empty() {
            return Err(invalid("posterior_predict needs at least one query point"));
        }
        let d = self.x_train[0].len();
        if let Some(p) = xq.iter().find(|p| p.len() != d) {
            return Err(dim_mismatch("query dimension", d, p.len()));
        }
        let stats = xq.iter().map(|x| self.query(x)).collect::<Result<Vec<_>>>()?;
        let m = xq.len();
        let s2 = self.y_std * self.y_std;
        let mean = stats.iter().map(|s| self.y_mean + self.y_std * s.mean).collect();
        let mut cov = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let c = if i == j {
                    self.posterior_var(&stats[i])
                } else {
                    self.posterior_cov(&stats[i], &stats[j])
                };
                cov[(i, j)] = c * s2;
                cov[(j, i)] = c * s2;
            }
        }
        Ok(GpPosterior { mean, covariance: cov })
    }
}

pub(crate) struct QueryStats {
    pub feature: Vec<f64>,
    pub mean: f64,
    pub prior_var: f64,
    /// `L⁻¹·k(X, x)`
    pub v: Vec<f64>,
}

pub(crate) fn gram(kernel: &KernelSpec, features: &[Vec<f64>]) -> Matrix {
    let n = features.len();
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let c = kernel.cov_features(&features[i], &features[j]);
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
        k[(i, i)] = kernel.cov_features(&features[i], &features[i]) + kernel.noise_variance;
    }
    k
}

pub(crate) fn lml_from_factor(chol: &CholeskyFactor, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len() as f64;
    -0.5 * dot(y, alpha) - 0.5 * chol.log_det() - 0.5 * n * LN_2PI
}

/// Joint draws `mean + L·z` from a Gaussian posterior; one row per sample.
pub fn gp_joint_samples(post: &GpPosterior, n_samples: usize, rng: &mut RngStream) -> Result<Matrix> {
    if n_samples == 0 {
        return Err(invalid("gp_joint_samples requires n_samples >= 1"));
    }
    let m = post.mean.len();
    let scale = post.covariance.diag().into_iter().fold(0.0f64, f64::max);
    let mut out = Matrix::zeros(n_samples, m);
    if scale <= 0.0 {
        for r in 0..n_samples {
            out.row_mut(r).copy_from_slice(&post.mean);
        }
        return Ok(out);
    }
    // Factor the unit-scale covariance so the jitter ladder is scale-free.
    let mut cov = post.covariance.clone();
    cov.scale(1.0 / scale);
    let chol = cholesky_factor(&cov, DEFAULT_MAX_JITTER)?;
    let root = sqrt(scale);
    let mut z = vec![0.0; m];
    for r in 0..n_samples {
        z.iter_mut().for_each(|v| *v = rng.normal());
        let row = out.row_mut(r);
        for i in 0..m {
            row[i] = post.mean[i] + root * dot(&chol.l().row(i)[..=i], &z[..=i]);
        }
    }
    Ok(out)
}
