//! Point-estimate training: MC dropout networks and deep ensembles.

use alloc::vec;
use alloc::vec::Vec;

use super::mlp::{backward, forward_tape, DropoutMask, MlpSpec, ParamVector, Tape};
use super::posterior::{Dataset, PriorSpec};
use super::predictive::{Member, PosteriorEnsemble, Provenance};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::optim::Adam;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub n_steps: usize,
    pub learn_rate: f64,
    /// L2 penalty on all parameters, added to the mean squared error.
    pub weight_decay: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            n_steps: 2000,
            learn_rate: 1e-2,
            weight_decay: 1e-4,
        }
    }
}

fn check_data(spec: &MlpSpec, data: &Dataset) -> Result<()> {
    spec.require_hidden()?;
    if data.is_empty() {
        return Err(invalid("training needs at least one observation"));
    }
    if let Some(x) = data.x.iter().find(|x| x.len() != spec.input_dim()) {
        return Err(Error::ShapeMismatch {
            expected: spec.input_dim(),
            actual: x.len(),
        });
    }
    Ok(())
}

/// Full-batch Adam on `mean((f(x_i) − y_i)²) + λ|w|²` over the rows in
/// `idx`. With dropout enabled every row gets a fresh mask each step.
fn train_mse(
    spec: &MlpSpec,
    params: &mut [f64],
    data: &Dataset,
    idx: &[usize],
    opts: &TrainOptions,
    rng: &mut RngStream,
) {
    let dropout = spec.dropout_rate() > 0.0;
    let mut adam = Adam::new(params.len(), opts.learn_rate);
    let mut grad = vec![0.0; params.len()];
    let mut tape = Tape::default();
    let scale = 2.0 / idx.len() as f64;
    for _ in 0..opts.n_steps {
        for (g, p) in grad.iter_mut().zip(params.iter()) {
            *g = 2.0 * opts.weight_decay * p;
        }
        for &i in idx {
            let mask = dropout.then(|| DropoutMask::sample(spec, rng));
            if forward_tape(spec, params, &data.x[i], mask.as_ref(), &mut tape).is_err() {
                continue;
            }
            let r = tape.output()[0] - data.y[i];
            backward(spec, params, &data.x[i], mask.as_ref(), &tape, &[scale * r], &mut grad);
        }
        adam.descend(params, &grad);
    }
}

/// Network trained with dropout whose predictions keep dropout active.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutNet {
    pub spec: MlpSpec,
    pub params: ParamVector,
}

impl DropoutNet {
    /// Mask for prediction row `row`; fixed given `base`, so every query in a
    /// row sees the same network.
    pub fn row_mask(&self, base: &RngStream, row: usize) -> Option<DropoutMask> {
        (self.spec.dropout_rate() > 0.0).then(|| DropoutMask::sample(&self.spec, &mut base.child(row as u64)))
    }

    pub fn predict(&self, x: &[f64], mask: Option<&DropoutMask>, tape: &mut Tape) -> Result<f64> {
        forward_tape(&self.spec, self.params.as_slice(), x, mask, tape)?;
        Ok(tape.output()[0])
    }

    /// `n_passes × |xq|` stochastic forward passes; row `r` uses mask `r`.
    pub fn predict_samples(&self, xq: &[Vec<f64>], n_passes: usize, rng: &RngStream) -> Result<Matrix> {
        if n_passes == 0 || xq.is_empty() {
            return Err(invalid("predict_samples needs at least one pass and one query"));
        }
        let mut out = Matrix::zeros(n_passes, xq.len());
        let mut tape = Tape::default();
        for r in 0..n_passes {
            let mask = self.row_mask(rng, r);
            for (j, x) in xq.iter().enumerate() {
                out[(r, j)] = self.predict(x, mask.as_ref(), &mut tape)?;
            }
        }
        Ok(out)
    }
}

/// Trains one network with dropout active (`spec.dropout_rate()` may be 0,
/// which degenerates to a deterministic network).
pub fn dropout_train(
    spec: &MlpSpec,
    prior: &PriorSpec,
    data: &Dataset,
    opts: &TrainOptions,
    rng: &mut RngStream,
) -> Result<DropoutNet> {
    check_data(spec, data)?;
    let mut params = ParamVector::sample_prior(spec, prior.weight_std_base, prior.bias_std, rng);
    let idx: Vec<usize> = (0..data.len()).collect();
    train_mse(spec, params.as_mut_slice(), data, &idx, opts, rng);
    Ok(DropoutNet {
        spec: spec.clone(),
        params,
    })
}

/// Same-size resample with replacement.
pub(crate) fn bootstrap_indices(rng: &mut RngStream, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.below(n)).collect()
}

/// Independently initialized members, each fit to its own bootstrap
/// resample. Member `k` draws from `rng.child(k)`.
pub fn ensemble_train(
    spec: &MlpSpec,
    prior: &PriorSpec,
    data: &Dataset,
    n_members: usize,
    opts: &TrainOptions,
    rng: &RngStream,
) -> Result<PosteriorEnsemble> {
    if n_members < 2 {
        return Err(invalid("an ensemble needs at least two members"));
    }
    check_data(spec, data)?;
    let plain = spec.clone().with_dropout(0.0)?;
    let n = data.len();
    let members = (0..n_members)
        .map(|k| {
            let mut r = rng.child(k as u64);
            let idx = bootstrap_indices(&mut r, n);
            let mut params = ParamVector::sample_prior(&plain, prior.weight_std_base, prior.bias_std, &mut r);
            train_mse(&plain, params.as_mut_slice(), data, &idx, opts, &mut r);
            Member {
                params,
                noise_std: None,
            }
        })
        .collect();
    PosteriorEnsemble::uniform(plain, members, Provenance::Ensemble)
}

/// Plain MSE fit of a single network, used to initialize samplers.
pub fn map_fit(
    spec: &MlpSpec,
    prior: &PriorSpec,
    data: &Dataset,
    opts: &TrainOptions,
    rng: &mut RngStream,
) -> Result<ParamVector> {
    check_data(spec, data)?;
    let plain = spec.clone().with_dropout(0.0)?;
    let mut params = ParamVector::sample_prior(&plain, prior.weight_std_base, prior.bias_std, rng);
    let idx: Vec<usize> = (0..data.len()).collect();
    train_mse(&plain, params.as_mut_slice(), data, &idx, opts, rng);
    Ok(params)
}
