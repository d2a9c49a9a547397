//! Parameter-ensemble posteriors and coherent predictive draws.

use alloc::vec::Vec;

use super::mlp::{forward_tape, MlpSpec, ParamVector, Tape};
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::math::exp;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Hmc,
    Nuts,
    Svi,
    Dropout,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    pub params: ParamVector,
    /// Observation-noise std carried by this member, if inferred.
    pub noise_std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorEnsemble {
    spec: MlpSpec,
    members: Vec<Member>,
    weights: Vec<f64>,
    provenance: Provenance,
}

impl PosteriorEnsemble {
    pub fn new(spec: MlpSpec, members: Vec<Member>, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if members.is_empty() {
            return Err(invalid("a posterior ensemble needs at least one member"));
        }
        if weights.len() != members.len() {
            return Err(crate::error::dim_mismatch("ensemble weights", members.len(), weights.len()));
        }
        if let Some(m) = members.iter().find(|m| m.params.len() != spec.n_params()) {
            return Err(Error::ShapeMismatch {
                expected: spec.n_params(),
                actual: m.params.len(),
            });
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || !(total > 0.0) {
            return Err(invalid("ensemble weights must be non-negative with a positive sum"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            spec,
            members,
            weights,
            provenance,
        })
    }

    pub fn uniform(spec: MlpSpec, members: Vec<Member>, provenance: Provenance) -> Result<Self> {
        let w = alloc::vec![1.0; members.len()];
        Self::new(spec, members, w, provenance)
    }

    /// Builds an equally weighted ensemble from flat sampler draws; a trailing
    /// log noise std is split off when `with_noise` is set.
    pub fn from_draws(spec: MlpSpec, draws: &[Vec<f64>], with_noise: bool, provenance: Provenance) -> Result<Self> {
        let np = spec.n_params();
        let members = draws
            .iter()
            .map(|d| {
                Ok(Member {
                    params: ParamVector::new(&spec, d[..np].to_vec())?,
                    noise_std: with_noise.then(|| exp(d[np])),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::uniform(spec, members, provenance)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member drawn for row `row` of `n_rows` by systematic resampling on
    /// the cumulative weights (offset one half), so rows cover members in
    /// proportion to their weights without consuming randomness.
    pub fn member_for_row(&self, row: usize, n_rows: usize) -> usize {
        let u = (row as f64 + 0.5) / n_rows as f64;
        let mut acc = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i;
            }
        }
        self.members.len() - 1
    }

    pub fn predict_member(&self, member: usize, x: &[f64], tape: &mut Tape) -> Result<f64> {
        forward_tape(&self.spec, self.members[member].params.as_slice(), x, None, tape)?;
        Ok(tape.output()[0])
    }

    /// Weighted average of member predictions.
    pub fn predictive_mean(&self, x: &[f64]) -> Result<f64> {
        let mut tape = Tape::default();
        let mut m = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            m += w * self.predict_member(i, x, &mut tape)?;
        }
        Ok(m)
    }

    /// `n_samples × |xq|` draws; each row is one member's joint prediction.
    /// With `add_noise`, members' observation noise is added per entry.
    pub fn predictive_samples(
        &self,
        xq: &[Vec<f64>],
        n_samples: usize,
        add_noise: bool,
        rng: &mut RngStream,
    ) -> Result<Matrix> {
        if n_samples == 0 || xq.is_empty() {
            return Err(invalid("predictive_samples needs at least one row and one query"));
        }
        let mut out = Matrix::zeros(n_samples, xq.len());
        let mut tape = Tape::default();
        for r in 0..n_samples {
            let m = self.member_for_row(r, n_samples);
            for (j, x) in xq.iter().enumerate() {
                let mut v = self.predict_member(m, x, &mut tape)?;
                if add_noise {
                    v += self.members[m].noise_std.unwrap_or(0.0) * rng.normal();
                }
                out[(r, j)] = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bnn::mlp::Activation;
    use alloc::vec;

    fn ensemble(n: usize, seed: u64) -> PosteriorEnsemble {
        let spec = MlpSpec::regression(2, &[4], Activation::Tanh, 0.0).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let members = (0..n)
            .map(|_| Member {
                params: ParamVector::sample_prior(&spec, 1.0, 1.0, &mut rng),
                noise_std: Some(0.1),
            })
            .collect();
        PosteriorEnsemble::uniform(spec, members, Provenance::Ensemble).unwrap()
    }

    #[test]
    fn single_member_rows_identical() {
        let e = ensemble(1, 1);
        let q = vec![vec![0.1, 0.2], vec![0.7, 0.3]];
        let s = e.predictive_samples(&q, 6, false, &mut RngStream::new(0, 0)).unwrap();
        for r in 1..6 {
            assert_eq!(s.row(r), s.row(0));
        }
    }

    #[test]
    fn duplicated_columns_agree_within_rows() {
        let e = ensemble(5, 2);
        let q = vec![vec![0.4, 0.9], vec![0.1, 0.1], vec![0.4, 0.9]];
        let s = e.predictive_samples(&q, 10, false, &mut RngStream::new(0, 0)).unwrap();
        for r in 0..10 {
            assert_eq!(s[(r, 0)], s[(r, 2)]);
        }
    }

    #[test]
    fn mean_is_average_of_members() {
        let e = ensemble(4, 3);
        let x = [0.3, 0.6];
        let mut tape = Tape::default();
        let avg = (0..4).map(|i| e.predict_member(i, &x, &mut tape).unwrap()).sum::<f64>() / 4.0;
        assert!((e.predictive_mean(&x).unwrap() - avg).abs() < 1e-14);
    }

    #[test]
    fn mean_invariant_to_member_order() {
        let e = ensemble(5, 4);
        let mut rev = e.members().to_vec();
        rev.reverse();
        let r = PosteriorEnsemble::uniform(e.spec().clone(), rev, Provenance::Ensemble).unwrap();
        let x = [0.8, 0.2];
        assert!((e.predictive_mean(&x).unwrap() - r.predictive_mean(&x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn systematic_rows_cover_members() {
        let e = ensemble(4, 5);
        let mut counts = [0; 4];
        for r in 0..8 {
            counts[e.member_for_row(r, 8)] += 1;
        }
        assert_eq!(counts, [2, 2, 2, 2]);
    }
}
