//! Marginal-likelihood fitting of GP hyperparameters.

use alloc::vec;
use alloc::vec::Vec;

use super::kernel::{matern52_from_r, DklFeatureMap, KernelFamily, KernelSpec};
use super::model::{standardize, GpModel, Y_STD_FLOOR};
use crate::bnn::mlp::{backward, forward_tape, Activation, MlpSpec, ParamVector, Tape};
use crate::error::{dim_mismatch, invalid, Result};
use crate::linalg::{cholesky_factor, Matrix, DEFAULT_MAX_JITTER};
use crate::math::{dot, exp, ln, sqrt, LN_2PI};
use crate::optim::{coordinate_ascent, Adam, AscentOptions};
use crate::rng::RngStream;

pub const LENGTHSCALE_BOUNDS: (f64, f64) = (0.005, 10.0);
pub const SIGNAL_BOUNDS: (f64, f64) = (0.01, 100.0);
pub const NOISE_BOUNDS: (f64, f64) = (1e-8, 1.0);
pub const NNGP_BIAS_BOUNDS: (f64, f64) = (1e-3, 10.0);

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, PartialEq)]
pub struct GpFitOptions {
    pub n_starts: usize,
    pub ascent: AscentOptions,
    /// Inputs with more dimensions than this share one lengthscale.
    pub ard_max_dim: usize,
    pub nngp_depth: usize,
    pub nngp_weight_var: f64,
    pub dkl_hidden: Vec<usize>,
    pub dkl_embed_dim: usize,
    pub dkl_steps: usize,
    pub dkl_learn_rate: f64,
}

impl Default for GpFitOptions {
    fn default() -> Self {
        Self {
            n_starts: 8,
            ascent: AscentOptions::default(),
            ard_max_dim: 20,
            nngp_depth: 3,
            nngp_weight_var: 2.0,
            dkl_hidden: vec![32, 32],
            dkl_embed_dim: 8,
            dkl_steps: 500,
            dkl_learn_rate: 0.01,
        }
    }
}

/// Fits a GP of the given family to raw targets by maximizing the log
/// marginal likelihood. Constant targets yield a constant-mean model.
pub fn fit_hyperparams(
    x: &[Vec<f64>],
    y: &[f64],
    family: KernelFamily,
    opts: &GpFitOptions,
    rng: &mut RngStream,
) -> Result<GpModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(dim_mismatch("training targets", x.len(), y.len()));
    }
    let d = x[0].len();
    if d == 0 || x.iter().any(|p| p.len() != d) {
        return Err(invalid("training inputs must share a positive dimension"));
    }
    if opts.n_starts == 0 {
        return Err(invalid("n_starts must be >= 1"));
    }
    let (mean, std) = standardize(y);
    let default_kernel = match family {
        KernelFamily::Matern52 => matern_default(d, opts),
        KernelFamily::Nngp => nngp_from_log(&[0.0, ln(0.1), ln(1e-2)], opts),
        KernelFamily::Dkl => {
            let fm = init_feature_map(d, opts, rng)?;
            KernelSpec::dkl(fm, vec![1.0; opts.dkl_embed_dim], 1.0, 1e-2)
        }
    };
    if std <= Y_STD_FLOOR * (1.0 + mean.abs()) {
        return GpModel::new(x.to_vec(), y, default_kernel);
    }
    let ys: Vec<f64> = y.iter().map(|v| (v - mean) / std).collect();
    if x.len() < 2 {
        return GpModel::from_standardized(x.to_vec(), ys, default_kernel, mean, std);
    }
    let kernel = match family {
        KernelFamily::Matern52 => fit_matern(x, &ys, opts, rng),
        KernelFamily::Nngp => fit_nngp(x, &ys, opts, rng),
        KernelFamily::Dkl => fit_dkl(x, &ys, default_kernel, opts, rng)?,
    };
    GpModel::from_standardized(x.to_vec(), ys, kernel, mean, std)
}

fn n_lengthscales(d: usize, opts: &GpFitOptions) -> usize {
    if d <= opts.ard_max_dim {
        d
    } else {
        1
    }
}

/// Lengthscale bounds; a shared lengthscale acts on distances that grow
/// like `√d`, so its range scales with it.
fn lengthscale_bounds(d: usize, opts: &GpFitOptions) -> (f64, f64) {
    if d <= opts.ard_max_dim {
        LENGTHSCALE_BOUNDS
    } else {
        let s = sqrt(d as f64);
        (LENGTHSCALE_BOUNDS.0 * s, LENGTHSCALE_BOUNDS.1 * s)
    }
}

fn matern_default(d: usize, opts: &GpFitOptions) -> KernelSpec {
    let scale = if d <= opts.ard_max_dim { 1.0 } else { sqrt(d as f64) };
    KernelSpec::matern52(vec![0.3 * scale; n_lengthscales(d, opts)], 1.0, 1e-2)
}

/// Pairwise geometry cached once per fit: per-dimension squared differences
/// for ARD, squared distances for a shared lengthscale.
struct PairCache {
    n: usize,
    width: usize,
    sq: Vec<f64>,
}

impl PairCache {
    fn new(x: &[Vec<f64>], ard: bool) -> Self {
        let n = x.len();
        let d = x[0].len();
        let width = if ard { d } else { 1 };
        let mut sq = Vec::with_capacity(n * (n - 1) / 2 * width);
        for i in 0..n {
            for j in 0..i {
                if ard {
                    sq.extend(x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)));
                } else {
                    sq.push(x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum());
                }
            }
        }
        Self { n, width, sq }
    }

    fn gram(&self, inv_l2: &[f64], signal: f64, noise: f64) -> Matrix {
        let n = self.n;
        let mut k = Matrix::zeros(n, n);
        let mut p = 0;
        for i in 0..n {
            for j in 0..i {
                let r2 = dot(&self.sq[p..p + self.width], inv_l2);
                p += self.width;
                let c = matern52_from_r(sqrt(r2), signal);
                k[(i, j)] = c;
                k[(j, i)] = c;
            }
            k[(i, i)] = signal + noise;
        }
        k
    }
}

/// LML of standardized targets under covariance `k`, or `-inf` if it cannot
/// be factored.
fn lml_of(k: &Matrix, y: &[f64]) -> f64 {
    match cholesky_factor(k, DEFAULT_MAX_JITTER) {
        Ok(chol) => {
            let alpha = chol.solve_vec(y);
            let v = -0.5 * dot(y, &alpha) - 0.5 * chol.log_det() - 0.5 * y.len() as f64 * LN_2PI;
            if v.is_finite() {
                v
            } else {
                f64::NEG_INFINITY
            }
        }
        Err(_) => f64::NEG_INFINITY,
    }
}

fn uniform_in(rng: &mut RngStream, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}

/// Runs coordinate ascent from the default start and `n_starts − 1` random
/// starts (drawn from a central sub-box), keeping the best optimum.
fn multi_start<F>(
    mut f: F,
    default: &[f64],
    lo: &[f64],
    hi: &[f64],
    start_lo: &[f64],
    start_hi: &[f64],
    opts: &GpFitOptions,
    rng: &mut RngStream,
) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut best = (default.to_vec(), f64::NEG_INFINITY);
    for s in 0..opts.n_starts {
        let start: Vec<f64> = if s == 0 {
            default.to_vec()
        } else {
            start_lo.iter().zip(start_hi).map(|(&a, &b)| uniform_in(rng, a, b)).collect()
        };
        let (p, v) = coordinate_ascent(&mut f, &start, lo, hi, opts.ascent);
        if v > best.1 {
            best = (p, v);
        }
    }
    best.0
}

fn fit_matern(x: &[Vec<f64>], y: &[f64], opts: &GpFitOptions, rng: &mut RngStream) -> KernelSpec {
    let d = x[0].len();
    let nl = n_lengthscales(d, opts);
    let cache = PairCache::new(x, nl > 1);
    let (llo, lhi) = lengthscale_bounds(d, opts);
    let mut lo = vec![ln(llo); nl];
    let mut hi = vec![ln(lhi); nl];
    lo.extend([ln(SIGNAL_BOUNDS.0), ln(NOISE_BOUNDS.0)]);
    hi.extend([ln(SIGNAL_BOUNDS.1), ln(NOISE_BOUNDS.1)]);
    let scale = if nl > 1 { 1.0 } else { sqrt(d as f64) };
    let mut start_lo = vec![ln(0.05 * scale); nl];
    let mut start_hi = vec![ln(2.0 * scale); nl];
    start_lo.extend([ln(0.1), ln(1e-6)]);
    start_hi.extend([ln(10.0), ln(0.1)]);
    let default = matern_default(d, opts);
    let mut x0: Vec<f64> = default.lengthscales.iter().map(|&l| ln(l)).collect();
    x0.extend([0.0, ln(default.noise_variance)]);

    let mut inv_l2 = vec![0.0; nl];
    let objective = |p: &[f64]| {
        for (v, &lg) in inv_l2.iter_mut().zip(&p[..nl]) {
            *v = exp(-2.0 * lg);
        }
        lml_of(&cache.gram(&inv_l2, exp(p[nl]), exp(p[nl + 1])), y)
    };
    let best = multi_start(objective, &x0, &lo, &hi, &start_lo, &start_hi, opts, rng);
    KernelSpec::matern52(
        best[..nl].iter().map(|&v| exp(v)).collect(),
        exp(best[nl]),
        exp(best[nl + 1]),
    )
}

/// Log-space NNGP parameters `[log σ², log σb², log noise]`.
fn nngp_from_log(p: &[f64], opts: &GpFitOptions) -> KernelSpec {
    KernelSpec::nngp(opts.nngp_depth, opts.nngp_weight_var, exp(p[1]), exp(p[0]), exp(p[2]))
}

fn fit_nngp(x: &[Vec<f64>], y: &[f64], opts: &GpFitOptions, rng: &mut RngStream) -> KernelSpec {
    let proto = nngp_from_log(&[0.0, 0.0, 0.0], opts);
    let features: Vec<Vec<f64>> = x.iter().map(|p| proto.featurize(p).unwrap_or_default()).collect();
    let n = x.len();
    // The recursion depends on σb², so only the inner products are cached.
    let gram_dots: Vec<f64> = (0..n)
        .flat_map(|i| (0..=i).map(move |j| (i, j)))
        .map(|(i, j)| dot(&features[i], &features[j]) / features[0].len() as f64)
        .collect();
    let lo = [ln(SIGNAL_BOUNDS.0), ln(NNGP_BIAS_BOUNDS.0), ln(NOISE_BOUNDS.0)];
    let hi = [ln(SIGNAL_BOUNDS.1), ln(NNGP_BIAS_BOUNDS.1), ln(NOISE_BOUNDS.1)];
    let start_lo = [ln(0.1), ln(1e-2), ln(1e-6)];
    let start_hi = [ln(10.0), ln(2.0), ln(0.1)];
    let x0 = [0.0, ln(0.1), ln(1e-2)];
    let wv = opts.nngp_weight_var;
    let depth = opts.nngp_depth;
    let objective = |p: &[f64]| {
        let (s2, b2, noise) = (exp(p[0]), exp(p[1]), exp(p[2]));
        let diag: Vec<f64> = (0..n).map(|i| gram_dots[i * (i + 1) / 2 + i]).collect();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let c = s2 * nngp_from_dots(gram_dots[i * (i + 1) / 2 + j], diag[i], diag[j], depth, wv, b2);
                k[(i, j)] = c;
                k[(j, i)] = c;
            }
            k[(i, i)] += noise;
        }
        lml_of(&k, y)
    };
    let best = multi_start(objective, &x0, &lo, &hi, &start_lo, &start_hi, opts, rng);
    nngp_from_log(&best, opts)
}

/// NNGP recursion from normalized inner products `⟨a,b⟩/d`, `⟨a,a⟩/d`, `⟨b,b⟩/d`.
fn nngp_from_dots(ab: f64, aa: f64, bb: f64, depth: usize, wv: f64, bv: f64) -> f64 {
    use super::kernel::relu_expectation;
    let mut kab = bv + wv * ab;
    let mut kaa = bv + wv * aa;
    let mut kbb = bv + wv * bb;
    for _ in 0..depth {
        kab = bv + wv * relu_expectation(kab, kaa, kbb);
        kaa = bv + wv * kaa / 2.0;
        kbb = bv + wv * kbb / 2.0;
    }
    kab
}

fn init_feature_map(d: usize, opts: &GpFitOptions, rng: &mut RngStream) -> Result<DklFeatureMap> {
    let mut widths = vec![d];
    widths.extend_from_slice(&opts.dkl_hidden);
    widths.push(opts.dkl_embed_dim);
    let spec = MlpSpec::new(widths, Activation::Tanh, 0.0)?;
    let params = ParamVector::sample_prior(&spec, 1.0, 0.1, rng);
    Ok(DklFeatureMap { spec, params })
}

/// LML and its gradient for a deep kernel. Parameter layout: feature-map
/// weights, then log lengthscales, log σ², log noise.
pub(crate) fn dkl_lml_grad(
    spec: &MlpSpec,
    theta: &[f64],
    x: &[Vec<f64>],
    y: &[f64],
    tapes: &mut [Tape],
) -> Option<(f64, Vec<f64>)> {
    let np = spec.n_params();
    let e = spec.output_dim();
    let n = x.len();
    let (wparams, hyper) = theta.split_at(np);
    let ls: Vec<f64> = hyper[..e].iter().map(|&v| exp(v)).collect();
    let s2 = exp(hyper[e]);
    let noise = exp(hyper[e + 1]);
    for (tape, xi) in tapes.iter_mut().zip(x) {
        forward_tape(spec, wparams, xi, None, tape).ok()?;
    }
    let z: Vec<&[f64]> = tapes.iter().map(Tape::output).collect();

    let mut k = Matrix::zeros(n, n);
    let mut rs = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let r = super::kernel::scaled_distance(z[i], z[j], &ls);
            rs[i * n + j] = r;
            let c = matern52_from_r(r, s2);
            k[(i, j)] = c;
            k[(j, i)] = c;
        }
        k[(i, i)] = s2 + noise;
    }
    let chol = cholesky_factor(&k, DEFAULT_MAX_JITTER).ok()?;
    let alpha = chol.solve_vec(y);
    let lml = -0.5 * dot(y, &alpha) - 0.5 * chol.log_det() - 0.5 * n as f64 * LN_2PI;
    if !lml.is_finite() {
        return None;
    }
    let kinv = chol.inverse();
    // W = ½(ααᵀ − K⁻¹); dLML/dθ = Σ_ij W_ij ∂K_ij/∂θ.
    let w = |i: usize, j: usize| 0.5 * (alpha[i] * alpha[j] - kinv[(i, j)]);

    let mut grad = vec![0.0; theta.len()];
    let mut gz = vec![vec![0.0; e]; n];
    let mut g_ls = vec![0.0; e];
    let mut g_s2 = 0.0;
    let mut g_noise = 0.0;
    for i in 0..n {
        g_s2 += w(i, i) * s2;
        g_noise += w(i, i) * noise;
        for j in 0..i {
            let wij = 2.0 * w(i, j);
            let r = rs[i * n + j];
            let sr = SQRT5 * r;
            let ex = exp(-sr);
            g_s2 += wij * (1.0 + sr + sr * sr / 3.0) * ex * s2;
            // ∂k/∂(Δ_k²/ℓ_k²) scaled: dk/dr · (1/r) = −σ²(5/3)(1+√5r)e^{−√5r}
            let a = s2 * (5.0 / 3.0) * (1.0 + sr) * ex;
            for kk in 0..e {
                let dlt = z[i][kk] - z[j][kk];
                let l2 = ls[kk] * ls[kk];
                g_ls[kk] += wij * a * dlt * dlt / l2;
                let dz = -a * dlt / l2;
                gz[i][kk] += wij * dz;
                gz[j][kk] -= wij * dz;
            }
        }
    }
    {
        let (gw, gh) = grad.split_at_mut(np);
        for i in 0..n {
            backward(spec, wparams, &x[i], None, &tapes[i], &gz[i], gw);
        }
        gh[..e].copy_from_slice(&g_ls);
        gh[e] = g_s2;
        gh[e + 1] = g_noise;
    }
    Some((lml, grad))
}

fn fit_dkl(
    x: &[Vec<f64>],
    y: &[f64],
    init: KernelSpec,
    opts: &GpFitOptions,
    rng: &mut RngStream,
) -> Result<KernelSpec> {
    let fm = init.dkl.clone().ok_or_else(|| invalid("deep kernel requires a feature map"))?;
    let e = fm.spec.output_dim();
    // Warm-start the kernel hyperparameters on the initial embeddings.
    let z: Vec<Vec<f64>> = x.iter().map(|p| init.featurize(p)).collect::<Result<_>>()?;
    let warm_opts = GpFitOptions {
        n_starts: 1,
        ard_max_dim: e,
        ..opts.clone()
    };
    let warm = fit_matern(&z, y, &warm_opts, rng);

    let mut theta = fm.params.as_slice().to_vec();
    theta.extend(warm.lengthscales.iter().map(|&l| ln(l)));
    theta.push(ln(warm.signal_variance));
    theta.push(ln(warm.noise_variance));
    let np = fm.spec.n_params();
    let lo = [ln(LENGTHSCALE_BOUNDS.0), ln(SIGNAL_BOUNDS.0), ln(NOISE_BOUNDS.0)];
    let hi = [ln(LENGTHSCALE_BOUNDS.1), ln(SIGNAL_BOUNDS.1), ln(NOISE_BOUNDS.1)];
    let clamp_hyper = |t: &mut [f64]| {
        for k in 0..e + 2 {
            let b = if k < e { 0 } else { k - e + 1 };
            t[np + k] = t[np + k].clamp(lo[b], hi[b]);
        }
    };

    let mut tapes = vec![Tape::default(); x.len()];
    let mut adam = Adam::new(theta.len(), opts.dkl_learn_rate);
    let mut best = (theta.clone(), f64::NEG_INFINITY);
    for _ in 0..opts.dkl_steps.max(1) {
        let Some((lml, grad)) = dkl_lml_grad(&fm.spec, &theta, x, y, &mut tapes) else {
            break;
        };
        if lml > best.1 {
            best = (theta.clone(), lml);
        }
        adam.ascend(&mut theta, &grad);
        clamp_hyper(&mut theta);
    }
    if let Some((lml, _)) = dkl_lml_grad(&fm.spec, &theta, x, y, &mut tapes) {
        if lml > best.1 {
            best = (theta, lml);
        }
    }
    let theta = best.0;
    let params = ParamVector::new(&fm.spec, theta[..np].to_vec())?;
    Ok(KernelSpec::dkl(
        DklFeatureMap { spec: fm.spec, params },
        theta[np..np + e].iter().map(|&v| exp(v)).collect(),
        exp(theta[np + e]),
        exp(theta[np + e + 1]),
    ))
}
