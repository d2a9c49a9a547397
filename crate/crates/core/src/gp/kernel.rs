use alloc::vec::Vec;

use crate::bnn::mlp::{mlp_forward, MlpSpec, ParamVector};
use crate::error::{dim_mismatch, invalid, Result};
use crate::math::{acos, dot, exp, sin, sqrt, PI};

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Matern52,
    Nngp,
    Dkl,
}

/// Learned feature map of a deep-kernel GP.
#[derive(Debug, Clone, PartialEq)]
pub struct DklFeatureMap {
    pub spec: MlpSpec,
    pub params: ParamVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// One per input (or embedding) dimension for ARD, or a single shared value.
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
    pub nngp_depth: usize,
    pub nngp_weight_var: f64,
    pub nngp_bias_var: f64,
    pub dkl: Option<DklFeatureMap>,
}

impl KernelSpec {
    pub fn matern52(lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Self {
        Self {
            family: KernelFamily::Matern52,
            lengthscales,
            signal_variance,
            noise_variance,
            nngp_depth: 1,
            nngp_weight_var: 1.0,
            nngp_bias_var: 0.0,
            dkl: None,
        }
    }

    pub fn nngp(depth: usize, weight_var: f64, bias_var: f64, signal_variance: f64, noise_variance: f64) -> Self {
        Self {
            family: KernelFamily::Nngp,
            lengthscales: Vec::new(),
            signal_variance,
            noise_variance,
            nngp_depth: depth,
            nngp_weight_var: weight_var,
            nngp_bias_var: bias_var,
            dkl: None,
        }
    }

    pub fn dkl(feature_map: DklFeatureMap, lengthscales: Vec<f64>, signal_variance: f64, noise_variance: f64) -> Self {
        Self {
            family: KernelFamily::Dkl,
            lengthscales,
            signal_variance,
            noise_variance,
            nngp_depth: 1,
            nngp_weight_var: 1.0,
            nngp_bias_var: 0.0,
            dkl: Some(feature_map),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance >= 0.0) || !(self.noise_variance >= 0.0) {
            return Err(invalid("kernel variances must be non-negative"));
        }
        match self.family {
            KernelFamily::Matern52 | KernelFamily::Dkl => {
                if self.lengthscales.is_empty() || self.lengthscales.iter().any(|&l| !(l > 0.0)) {
                    return Err(invalid("lengthscales must be positive"));
                }
                if self.family == KernelFamily::Dkl && self.dkl.is_none() {
                    return Err(invalid("deep kernel requires a feature map"));
                }
            }
            KernelFamily::Nngp => {
                if self.nngp_depth == 0 {
                    return Err(invalid("NNGP depth must be >= 1"));
                }
                if !(self.nngp_weight_var > 0.0) || !(self.nngp_bias_var >= 0.0) {
                    return Err(invalid("NNGP weight variance must be positive, bias variance non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Maps a unit-cube input to the representation the covariance acts on.
    pub(crate) fn featurize(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self.family {
            KernelFamily::Matern52 => Ok(x.to_vec()),
            // Centre the unit cube on the origin so inner products carry signal.
            KernelFamily::Nngp => Ok(x.iter().map(|v| 2.0 * v - 1.0).collect()),
            KernelFamily::Dkl => {
                let fm = self.dkl.as_ref().ok_or_else(|| invalid("deep kernel requires a feature map"))?;
                dkl_embed(fm, x)
            }
        }
    }

    /// Covariance between two featurized inputs (no noise term).
    pub(crate) fn cov_features(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Matern52 | KernelFamily::Dkl => {
                matern52_from_r(scaled_distance(a, b, &self.lengthscales), self.signal_variance)
            }
            KernelFamily::Nngp => {
                self.signal_variance
                    * nngp_recursion(a, b, self.nngp_depth, self.nngp_weight_var, self.nngp_bias_var)
            }
        }
    }
}

#[inline]
pub(crate) fn scaled_distance(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    let mut s = 0.0;
    if lengthscales.len() == 1 {
        let inv = 1.0 / lengthscales[0];
        for (x, y) in a.iter().zip(b) {
            let d = (x - y) * inv;
            s += d * d;
        }
    } else {
        for ((x, y), l) in a.iter().zip(b).zip(lengthscales) {
            let d = (x - y) / l;
            s += d * d;
        }
    }
    sqrt(s)
}

/// `σ²·(1 + √5 r + 5r²/3)·exp(−√5 r)`.
#[inline]
pub fn matern52_from_r(r: f64, signal_variance: f64) -> f64 {
    let sr = SQRT5 * r;
    signal_variance * (1.0 + sr + sr * sr / 3.0) * exp(-sr)
}

/// Matérn 5/2 covariance between two unit-cube inputs.
pub fn matern52(x1: &[f64], x2: &[f64], spec: &KernelSpec) -> Result<f64> {
    if spec.family != KernelFamily::Matern52 {
        return Err(invalid("matern52 called with a non-Matérn kernel spec"));
    }
    if x1.len() != x2.len() {
        return Err(dim_mismatch("matern52 input", x1.len(), x2.len()));
    }
    if spec.lengthscales.len() != 1 && spec.lengthscales.len() != x1.len() {
        return Err(dim_mismatch("lengthscale count", x1.len(), spec.lengthscales.len()));
    }
    Ok(matern52_from_r(
        scaled_distance(x1, x2, &spec.lengthscales),
        spec.signal_variance,
    ))
}

/// Order-1 arc-cosine map: `E[relu(u)·relu(v)]` for `(u, v)` centred Gaussian
/// with variances `kxx`, `kyy` and covariance `kxy`.
#[inline]
pub(crate) fn relu_expectation(kxy: f64, kxx: f64, kyy: f64) -> f64 {
    let norm = sqrt(kxx * kyy);
    if norm <= 0.0 {
        return 0.0;
    }
    let c = (kxy / norm).clamp(-1.0, 1.0);
    let theta = acos(c);
    norm / (2.0 * PI) * (sin(theta) + (PI - theta) * c)
}

pub(crate) fn nngp_recursion(a: &[f64], b: &[f64], depth: usize, weight_var: f64, bias_var: f64) -> f64 {
    let d_in = a.len() as f64;
    let mut kab = bias_var + weight_var * dot(a, b) / d_in;
    let mut kaa = bias_var + weight_var * dot(a, a) / d_in;
    let mut kbb = bias_var + weight_var * dot(b, b) / d_in;
    for _ in 0..depth {
        kab = bias_var + weight_var * relu_expectation(kab, kaa, kbb);
        kaa = bias_var + weight_var * kaa / 2.0;
        kbb = bias_var + weight_var * kbb / 2.0;
    }
    kab
}

/// Covariance of an infinitely wide ReLU network with `nngp_depth` hidden
/// layers, weight variance `σw²/fan_in` and bias variance `σb²`.
pub fn nngp_kernel(x1: &[f64], x2: &[f64], spec: &KernelSpec) -> Result<f64> {
    if spec.family != KernelFamily::Nngp {
        return Err(invalid("nngp_kernel called with a non-NNGP kernel spec"));
    }
    if x1.len() != x2.len() {
        return Err(dim_mismatch("nngp input", x1.len(), x2.len()));
    }
    if x1.is_empty() {
        return Err(invalid("nngp input must be non-empty"));
    }
    spec.validate()?;
    Ok(nngp_recursion(
        x1,
        x2,
        spec.nngp_depth,
        spec.nngp_weight_var,
        spec.nngp_bias_var,
    ))
}

/// Embedding of `x` under a deep-kernel feature map.
pub fn dkl_embed(feature_map: &DklFeatureMap, x: &[f64]) -> Result<Vec<f64>> {
    mlp_forward(&feature_map.spec, &feature_map.params, x, None)
}
