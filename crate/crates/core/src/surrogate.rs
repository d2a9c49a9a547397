//! One interface over every surrogate family: fit on raw data, then draw
//! coherent joint posterior samples at arbitrary points.

use alloc::vec;
use alloc::vec::Vec;

use crate::bnn::mlp::{Activation, DropoutMask, MlpSpec, Tape};
use crate::bnn::posterior::{BnnPosterior, Dataset, NoiseModel, PriorSpec};
use crate::bnn::predictive::{PosteriorEnsemble, Provenance};
use crate::bnn::sampler::{hmc_sample, nuts_sample, HmcOptions, NutsOptions};
use crate::bnn::svi::{svi_fit, svi_posterior_samples, SviOptions};
use crate::bnn::train::{dropout_train, ensemble_train, map_fit, DropoutNet, TrainOptions};
use crate::error::{invalid, Result};
use crate::gp::model::{standardize, QueryStats};
use crate::gp::{fit_hyperparams, GpFitOptions, GpModel, KernelFamily};
use crate::linalg::Matrix;
use crate::math::{dot, sqrt};
use crate::rng::{stratified_normal, RngStream};

/// The model roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurrogateKind {
    Gp,
    Svi,
    Mcmc,
    Nuts,
    Ibnn,
    Ensemble,
    Dropout,
    Dkl,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 8] = [
        SurrogateKind::Gp,
        SurrogateKind::Svi,
        SurrogateKind::Mcmc,
        SurrogateKind::Nuts,
        SurrogateKind::Ibnn,
        SurrogateKind::Ensemble,
        SurrogateKind::Dropout,
        SurrogateKind::Dkl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurrogateKind::Gp => "GP",
            SurrogateKind::Svi => "SVI",
            SurrogateKind::Mcmc => "MCMC",
            SurrogateKind::Nuts => "NUTS",
            SurrogateKind::Ibnn => "IBNN",
            SurrogateKind::Ensemble => "Ensemble",
            SurrogateKind::Dropout => "Dropout",
            SurrogateKind::Dkl => "DKL",
        }
    }

    /// Case-insensitive lookup by roster name.
    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }

    pub fn description(self) -> &'static str {
        match self {
            SurrogateKind::Gp => "Gaussian process, Matérn 5/2 kernel",
            SurrogateKind::Svi => "BNN, mean-field variational inference",
            SurrogateKind::Mcmc => "BNN, Hamiltonian Monte Carlo",
            SurrogateKind::Nuts => "BNN, No-U-Turn sampler",
            SurrogateKind::Ibnn => "infinite-width BNN (NNGP kernel GP)",
            SurrogateKind::Ensemble => "deep ensemble of point-estimate networks",
            SurrogateKind::Dropout => "MC dropout network",
            SurrogateKind::Dkl => "deep kernel learning GP",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateOptions {
    pub gp: GpFitOptions,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub prior: PriorSpec,
    pub infer_noise: bool,
    /// Fixed noise std (standardized units) when noise is not inferred.
    pub fixed_noise_std: f64,
    pub hmc: HmcOptions,
    pub nuts: NutsOptions,
    pub svi: SviOptions,
    pub svi_members: usize,
    /// Adam fit used to start the MCMC chains and the variational mean.
    pub init_fit: TrainOptions,
    pub dropout_rate: f64,
    pub dropout_fit: TrainOptions,
    pub ensemble_members: usize,
    pub ensemble_fit: TrainOptions,
}

impl Default for SurrogateOptions {
    fn default() -> Self {
        Self {
            gp: GpFitOptions::default(),
            hidden: vec![32, 32],
            activation: Activation::Tanh,
            prior: PriorSpec::default(),
            infer_noise: true,
            fixed_noise_std: 0.1,
            hmc: HmcOptions::default(),
            nuts: NutsOptions::default(),
            svi: SviOptions::default(),
            svi_members: 256,
            init_fit: TrainOptions {
                n_steps: 300,
                ..TrainOptions::default()
            },
            dropout_rate: 0.1,
            dropout_fit: TrainOptions::default(),
            ensemble_members: 8,
            ensemble_fit: TrainOptions::default(),
        }
    }
}

impl SurrogateOptions {
    /// Three hidden layers of width 100.
    pub fn wide() -> Self {
        Self {
            hidden: vec![100, 100, 100],
            ..Self::default()
        }
    }
}

/// A fitted surrogate for one scalar objective, in original target units.
#[derive(Debug, Clone)]
pub enum FittedSurrogate {
    Gp(GpModel),
    Ensemble {
        ensemble: PosteriorEnsemble,
        y_mean: f64,
        y_std: f64,
    },
    Dropout {
        net: DropoutNet,
        y_mean: f64,
        y_std: f64,
    },
}

/// Network inputs: unit-cube coordinates shifted and scaled to zero mean and
/// unit variance under the uniform distribution, so the default weight
/// prior spans functions that vary across the whole cube.
fn bnn_input(x: &[f64]) -> Vec<f64> {
    const SCALE: f64 = 3.464_101_615_137_754_6;
    x.iter().map(|v| SCALE * (v - 0.5)).collect()
}

fn bnn_standardize(y: &[f64]) -> (f64, f64, Vec<f64>) {
    let (m, s) = standardize(y);
    let s = if s > 1e-12 * (1.0 + m.abs()) { s } else { 1.0 };
    (m, s, y.iter().map(|v| (v - m) / s).collect())
}

/// Fits one surrogate of `kind` to raw targets. All randomness comes from
/// `rng` (children keyed by role, so the fit does not depend on call order
/// elsewhere).
pub fn fit_surrogate(
    kind: SurrogateKind,
    x: &[Vec<f64>],
    y: &[f64],
    opts: &SurrogateOptions,
    rng: &RngStream,
) -> Result<FittedSurrogate> {
    if x.is_empty() || x.len() != y.len() {
        return Err(crate::error::dim_mismatch("surrogate training targets", x.len(), y.len()));
    }
    let mut r = rng.child(0x5u64);
    match kind {
        SurrogateKind::Gp => Ok(FittedSurrogate::Gp(fit_hyperparams(
            x,
            y,
            KernelFamily::Matern52,
            &opts.gp,
            &mut r,
        )?)),
        SurrogateKind::Ibnn => Ok(FittedSurrogate::Gp(fit_hyperparams(x, y, KernelFamily::Nngp, &opts.gp, &mut r)?)),
        SurrogateKind::Dkl => Ok(FittedSurrogate::Gp(fit_hyperparams(x, y, KernelFamily::Dkl, &opts.gp, &mut r)?)),
        _ => fit_bnn(kind, x, y, opts, &mut r),
    }
}

fn fit_bnn(
    kind: SurrogateKind,
    x: &[Vec<f64>],
    y: &[f64],
    opts: &SurrogateOptions,
    rng: &mut RngStream,
) -> Result<FittedSurrogate> {
    let d = x[0].len();
    let (y_mean, y_std, ys) = bnn_standardize(y);
    let rate = if kind == SurrogateKind::Dropout { opts.dropout_rate } else { 0.0 };
    let spec = MlpSpec::regression(d, &opts.hidden, opts.activation, rate)?;
    let data = Dataset::new(x.iter().map(|p| bnn_input(p)).collect(), ys)?;
    if kind == SurrogateKind::Dropout {
        if !(opts.dropout_rate > 0.0) {
            return Err(invalid("MC dropout needs a positive dropout rate"));
        }
        let net = dropout_train(&spec, &opts.prior, &data, &opts.dropout_fit, rng)?;
        return Ok(FittedSurrogate::Dropout { net, y_mean, y_std });
    }
    if kind == SurrogateKind::Ensemble {
        let ensemble = ensemble_train(&spec, &opts.prior, &data, opts.ensemble_members, &opts.ensemble_fit, rng)?;
        return Ok(FittedSurrogate::Ensemble {
            ensemble,
            y_mean,
            y_std,
        });
    }
    let noise = if opts.infer_noise {
        NoiseModel::Inferred
    } else {
        NoiseModel::Fixed(opts.fixed_noise_std)
    };
    let post = BnnPosterior::new(spec.clone(), opts.prior, data.clone(), noise)?;
    let map = map_fit(&spec, &opts.prior, &data, &opts.init_fit, rng)?;
    let mut init = map.into_vec();
    if opts.infer_noise {
        let (m, _) = opts.prior.noise_log_std_prior;
        init.push(m);
    }
    let ensemble = match kind {
        SurrogateKind::Mcmc => {
            let chain = hmc_sample(&post, &init, &opts.hmc, rng)?;
            PosteriorEnsemble::from_draws(spec, &chain.draws, opts.infer_noise, Provenance::Hmc)?
        }
        SurrogateKind::Nuts => {
            let chain = nuts_sample(&post, &init, &opts.nuts, rng)?;
            PosteriorEnsemble::from_draws(spec, &chain.draws, opts.infer_noise, Provenance::Nuts)?
        }
        SurrogateKind::Svi => {
            let fit = svi_fit(&post, &init, &opts.svi, rng)?;
            svi_posterior_samples(&spec, &fit.params, opts.infer_noise, opts.svi_members.max(1), rng)?
        }
        _ => unreachable!("non-BNN kinds handled by the caller"),
    };
    Ok(FittedSurrogate::Ensemble {
        ensemble,
        y_mean,
        y_std,
    })
}

impl FittedSurrogate {
    /// Starts a batch of `n_rows` joint function draws. Randomness is fixed by
    /// `stream` alone, so the same points always receive the same draws.
    pub fn batch_sampler(&self, n_rows: usize, stream: &RngStream) -> Result<BatchSampler<'_>> {
        if n_rows == 0 {
            return Err(invalid("a batch sampler needs at least one row"));
        }
        let state = match self {
            FittedSurrogate::Gp(model) => SamplerState::Gp(GpBatch {
                model,
                committed: Vec::new(),
                l_rows: Vec::new(),
                z: Vec::new(),
                next_z: stratified_normal(n_rows, &mut stream.child(0)),
                stream: stream.clone(),
            }),
            FittedSurrogate::Ensemble { ensemble, .. } => {
                let rows: Vec<usize> = (0..n_rows).map(|r| ensemble.member_for_row(r, n_rows)).collect();
                SamplerState::Ensemble { ensemble, rows }
            }
            FittedSurrogate::Dropout { net, .. } => SamplerState::Dropout {
                net,
                masks: (0..n_rows).map(|r| net.row_mask(stream, r)).collect(),
            },
        };
        let (y_mean, y_std) = match self {
            FittedSurrogate::Gp(m) => (m.y_mean(), m.y_std()),
            FittedSurrogate::Ensemble { y_mean, y_std, .. } | FittedSurrogate::Dropout { y_mean, y_std, .. } => {
                (*y_mean, *y_std)
            }
        };
        Ok(BatchSampler {
            n_rows,
            y_mean,
            y_std,
            state,
        })
    }

    /// `n_samples × |xq|` coherent joint draws (no observation noise).
    pub fn predictive_samples(&self, xq: &[Vec<f64>], n_samples: usize, stream: &RngStream) -> Result<Matrix> {
        if xq.is_empty() {
            return Err(invalid("predictive_samples needs at least one query point"));
        }
        let mut s = self.batch_sampler(n_samples, stream)?;
        let mut out = Matrix::zeros(n_samples, xq.len());
        for (j, x) in xq.iter().enumerate() {
            let col = s.commit(x)?;
            for (r, v) in col.into_iter().enumerate() {
                out[(r, j)] = v;
            }
        }
        Ok(out)
    }

    /// Posterior predictive mean at `x`.
    pub fn mean(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedSurrogate::Gp(m) => Ok(m.posterior_predict(&[x.to_vec()])?.mean[0]),
            FittedSurrogate::Ensemble {
                ensemble,
                y_mean,
                y_std,
            } => Ok(y_mean + y_std * ensemble.predictive_mean(&bnn_input(x))?),
            FittedSurrogate::Dropout { net, y_mean, y_std } => {
                // Inverted dropout makes the deterministic pass the mean-field mean.
                Ok(y_mean + y_std * net.predict(&bnn_input(x), None, &mut Tape::default())?)
            }
        }
    }
}

struct GpBatch<'a> {
    model: &'a GpModel,
    committed: Vec<QueryStats>,
    /// Rows of the Cholesky factor of the posterior covariance among
    /// committed points.
    l_rows: Vec<Vec<f64>>,
    /// `z[r][k]`: base normal of row `r` for slot `k`.
    z: Vec<Vec<f64>>,
    /// Base normals reserved for the next slot, one per row.
    next_z: Vec<f64>,
    stream: RngStream,
}

impl GpBatch<'_> {
    /// Conditional factor row and residual std of `q` given committed points.
    fn extend(&self, q: &QueryStats) -> (Vec<f64>, f64) {
        let k = self.committed.len();
        let mut row = vec![0.0; k];
        for i in 0..k {
            let c = self.model.posterior_cov(q, &self.committed[i]);
            let s = c - dot(&self.l_rows[i][..i], &row[..i]);
            let lii = self.l_rows[i][i];
            row[i] = if lii > 1e-12 { s / lii } else { 0.0 };
        }
        let var = self.model.posterior_var(q);
        (row.clone(), sqrt((var - dot(&row, &row)).max(0.0)))
    }

    fn draws(&self, q: &QueryStats, row: &[f64], d: f64) -> Vec<f64> {
        self.next_z
            .iter()
            .enumerate()
            .map(|(r, zn)| {
                let zr = self.z.get(r).map_or(&[][..], Vec::as_slice);
                q.mean + dot(row, zr) + d * zn
            })
            .collect()
    }
}

enum SamplerState<'a> {
    Gp(GpBatch<'a>),
    Ensemble {
        ensemble: &'a PosteriorEnsemble,
        rows: Vec<usize>,
    },
    Dropout {
        net: &'a DropoutNet,
        masks: Vec<Option<DropoutMask>>,
    },
}

/// Incremental joint sampler: `trial` gives the draws at a point as if it
/// were appended to the batch; `commit` appends it.
pub struct BatchSampler<'a> {
    n_rows: usize,
    y_mean: f64,
    y_std: f64,
    state: SamplerState<'a>,
}

impl BatchSampler<'_> {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    fn destandardize(&self, mut v: Vec<f64>) -> Vec<f64> {
        for x in &mut v {
            *x = self.y_mean + self.y_std * *x;
        }
        v
    }

    /// Draws at `x` jointly with the committed points, one per row.
    pub fn trial(&self, x: &[f64]) -> Result<Vec<f64>> {
        let raw = match &self.state {
            SamplerState::Gp(g) => {
                let q = g.model.query(x)?;
                let (row, d) = g.extend(&q);
                g.draws(&q, &row, d)
            }
            SamplerState::Ensemble { ensemble, rows } => {
                let xi = bnn_input(x);
                let mut tape = Tape::default();
                let mut cache: Vec<Option<f64>> = vec![None; ensemble.len()];
                let mut out = Vec::with_capacity(rows.len());
                for &m in rows {
                    let v = match cache[m] {
                        Some(v) => v,
                        None => {
                            let v = ensemble.predict_member(m, &xi, &mut tape)?;
                            cache[m] = Some(v);
                            v
                        }
                    };
                    out.push(v);
                }
                out
            }
            SamplerState::Dropout { net, masks } => {
                let xi = bnn_input(x);
                let mut tape = Tape::default();
                masks
                    .iter()
                    .map(|m| net.predict(&xi, m.as_ref(), &mut tape))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(self.destandardize(raw))
    }

    /// Appends `x` to the batch and returns its draws.
    pub fn commit(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.trial(x)?;
        if let SamplerState::Gp(g) = &mut self.state {
            let q = g.model.query(x)?;
            let (mut row, d) = g.extend(&q);
            let slot = g.committed.len();
            for (r, zn) in g.next_z.iter().enumerate() {
                if g.z.len() <= r {
                    g.z.push(Vec::new());
                }
                g.z[r].push(*zn);
            }
            row.push(d);
            g.l_rows.push(row);
            g.committed.push(q);
            g.next_z = stratified_normal(self.n_rows, &mut g.stream.child(slot as u64 + 1));
        }
        Ok(out)
    }
}
