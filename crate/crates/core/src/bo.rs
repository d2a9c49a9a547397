//! Seeded Bayesian-optimization trials and the matching random baseline.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use crate::ccs::{evaluate_case, AquiferSpec, Benchmark, CaseSpec, EconSpec};
use crate::doe::{lhs_sample, uniform_sample};
use crate::error::{dim_mismatch, invalid, Result};
use crate::moo::{propose_batch, AcqKind, AcqSpec, ParetoArchive};
use crate::rng::{stream_id, RngStream, StreamRole};
use crate::surrogate::{fit_surrogate, FittedSurrogate, SurrogateKind, SurrogateOptions};

/// A black-box objective on the unit cube; every output is maximized.
pub trait Problem {
    fn dim(&self) -> usize;
    fn n_obj(&self) -> usize;
    fn objective_names(&self) -> Vec<String>;
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Problem for Benchmark {
    fn dim(&self) -> usize {
        Benchmark::dim(*self)
    }

    fn n_obj(&self) -> usize {
        Benchmark::n_obj(*self)
    }

    fn objective_names(&self) -> Vec<String> {
        (1..=Benchmark::n_obj(*self)).map(|k| format!("f{k}")).collect()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.eval(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CcsProblem {
    pub case: CaseSpec,
    pub aquifer: AquiferSpec,
    pub econ: EconSpec,
}

impl Problem for CcsProblem {
    fn dim(&self) -> usize {
        self.case.dim()
    }

    fn n_obj(&self) -> usize {
        self.case.objectives.len()
    }

    fn objective_names(&self) -> Vec<String> {
        self.case.objectives.iter().map(|o| o.name().to_string()).collect()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(evaluate_case(x, &self.case, &self.aquifer, &self.econ)?.values)
    }
}

/// Wraps a problem and counts `evaluate` calls.
#[derive(Debug, Default)]
pub struct Counted<P> {
    pub inner: P,
    calls: AtomicUsize,
}

impl<P> Counted<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<P: Problem> Problem for Counted<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn n_obj(&self) -> usize {
        self.inner.n_obj()
    }

    fn objective_names(&self) -> Vec<String> {
        self.inner.objective_names()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoConfig {
    pub surrogate: SurrogateKind,
    pub surrogate_options: SurrogateOptions,
    pub n_init: usize,
    pub n_iterations: usize,
    pub q: usize,
    pub n_mc_samples: usize,
    pub raw_candidates: usize,
    pub n_restarts: usize,
    pub local_steps: usize,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            surrogate: SurrogateKind::Gp,
            surrogate_options: SurrogateOptions::default(),
            n_init: 15,
            n_iterations: 15,
            q: 4,
            n_mc_samples: 128,
            raw_candidates: 1024,
            n_restarts: 4,
            local_steps: 6,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_init < 2 {
            return Err(invalid("n_init must be >= 2"));
        }
        if self.q == 0 {
            return Err(invalid("q must be >= 1"));
        }
        if self.n_mc_samples < 16 {
            return Err(invalid("n_mc_samples must be >= 16"));
        }
        if self.raw_candidates == 0 || self.n_restarts == 0 {
            return Err(invalid("raw_candidates and n_restarts must be >= 1"));
        }
        Ok(())
    }

    pub fn total_evaluations(&self) -> usize {
        self.n_init + self.n_iterations * self.q
    }
}

/// One iteration of a trial; iteration 0 is the initial design.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub trial: u32,
    pub iteration: usize,
    pub evaluations_used: usize,
    pub chosen_x: Vec<Vec<f64>>,
    pub objective_vectors: Vec<Vec<f64>>,
    /// Single-objective problems only.
    pub best_so_far: Option<f64>,
    /// Multi-objective problems only, against the trial's fixed reference.
    pub hypervolume_so_far: Option<f64>,
    pub acq_value: Option<f64>,
    /// Set when the surrogate or acquisition failed and random points were
    /// used instead.
    pub fallback: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: u32,
    pub records: Vec<IterationRecord>,
    pub archive: ParetoArchive,
    /// Hypervolume reference fixed from the initial design.
    pub reference: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Surrogate,
    Random,
}

fn stream(seed: u64, trial: u32, role: StreamRole, iteration: usize, index: usize) -> RngStream {
    RngStream::new(seed, stream_id(trial, role, iteration as u32, index as u32))
}

fn record(
    trial: u32,
    iteration: usize,
    archive: &ParetoArchive,
    reference: Option<&[f64]>,
    chosen_x: Vec<Vec<f64>>,
    objective_vectors: Vec<Vec<f64>>,
) -> Result<IterationRecord> {
    let (best_so_far, hypervolume_so_far) = match reference {
        None => (archive.best().map(|b| b[0]), None),
        Some(r) => (None, Some(archive.hypervolume(r)?)),
    };
    Ok(IterationRecord {
        trial,
        iteration,
        evaluations_used: archive.len(),
        chosen_x,
        objective_vectors,
        best_so_far,
        hypervolume_so_far,
        acq_value: None,
        fallback: None,
    })
}

/// Fits one surrogate per objective and selects a batch.
fn propose(
    config: &BoConfig,
    archive: &ParetoArchive,
    dim: usize,
    seed: u64,
    trial: u32,
    iteration: usize,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let xs = archive.xs();
    let surrogates = (0..archive.n_obj())
        .map(|k| {
            let y: Vec<f64> = archive.ys().iter().map(|v| v[k]).collect();
            let rng = stream(seed, trial, StreamRole::Surrogate, iteration, k);
            fit_surrogate(config.surrogate, xs, &y, &config.surrogate_options, &rng)
        })
        .collect::<Result<Vec<FittedSurrogate>>>()?;
    let kind = if archive.n_obj() == 1 {
        AcqKind::McEi {
            f_best: archive.best().map_or(f64::NEG_INFINITY, |b| b[0]),
        }
    } else {
        AcqKind::McEhvi { ref_point: None }
    };
    let spec = AcqSpec {
        kind,
        n_mc_samples: config.n_mc_samples,
        q: config.q,
        raw_candidates: config.raw_candidates,
        n_restarts: config.n_restarts,
        local_steps: config.local_steps,
    };
    let acq_stream = stream(seed, trial, StreamRole::Acquisition, iteration, 0);
    let batch = propose_batch(&surrogates, dim, archive, &spec, &acq_stream)?;
    Ok((batch.points, batch.acq_value))
}

/// Runs one trial. `on_record` sees every record as soon as it exists.
pub fn run_trial<P: Problem + ?Sized>(
    problem: &P,
    config: &BoConfig,
    strategy: Strategy,
    seed: u64,
    trial: u32,
    on_record: &mut dyn FnMut(&IterationRecord),
) -> Result<TrialResult> {
    config.validate()?;
    let d = problem.dim();
    let mut archive = ParetoArchive::new(problem.n_obj())?;
    let evaluate = |x: &[f64]| -> Result<Vec<f64>> {
        let y = problem.evaluate(x)?;
        if y.len() != problem.n_obj() {
            return Err(dim_mismatch("objective vector", problem.n_obj(), y.len()));
        }
        Ok(y)
    };

    let design = lhs_sample(config.n_init, d, &mut stream(seed, trial, StreamRole::Design, 0, 0))?.points;
    let mut ys = Vec::with_capacity(design.len());
    for x in &design {
        let y = evaluate(x)?;
        archive.push(x.clone(), y.clone())?;
        ys.push(y);
    }
    let reference = (problem.n_obj() > 1).then(|| archive.ref_point()).transpose()?;
    let mut records = Vec::with_capacity(config.n_iterations + 1);
    let first = record(trial, 0, &archive, reference.as_deref(), design, ys)?;
    on_record(&first);
    records.push(first);

    for it in 1..=config.n_iterations {
        let random = |role: StreamRole, index: usize| -> Result<Vec<Vec<f64>>> {
            Ok(uniform_sample(config.q, d, &mut stream(seed, trial, role, it, index))?.points)
        };
        let (points, acq_value, fallback) = match strategy {
            Strategy::Random => (random(StreamRole::Baseline, 0)?, None, None),
            Strategy::Surrogate => match propose(config, &archive, d, seed, trial, it) {
                Ok((p, v)) => (p, Some(v), None),
                Err(e) => (random(StreamRole::Acquisition, 1)?, None, Some(e.to_string())),
            },
        };
        let mut ys = Vec::with_capacity(points.len());
        for x in &points {
            let y = evaluate(x)?;
            archive.push(x.clone(), y.clone())?;
            ys.push(y);
        }
        let mut r = record(trial, it, &archive, reference.as_deref(), points, ys)?;
        r.acq_value = acq_value;
        r.fallback = fallback;
        on_record(&r);
        records.push(r);
    }
    Ok(TrialResult {
        trial,
        records,
        archive,
        reference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccs::CaseId;

    fn quick(kind: SurrogateKind) -> BoConfig {
        let mut o = SurrogateOptions::default();
        o.gp.n_starts = 2;
        BoConfig {
            surrogate: kind,
            surrogate_options: o,
            n_init: 5,
            n_iterations: 3,
            q: 2,
            n_mc_samples: 32,
            raw_candidates: 128,
            n_restarts: 2,
            local_steps: 3,
        }
    }

    #[test]
    fn budget_identity_and_monotone_trace() {
        let p = Counted::new(Benchmark::Branin);
        let cfg = quick(SurrogateKind::Gp);
        let r = run_trial(&p, &cfg, Strategy::Surrogate, 1, 0, &mut |_| {}).unwrap();
        assert_eq!(p.calls(), cfg.total_evaluations());
        assert_eq!(r.archive.len(), cfg.total_evaluations());
        for (i, rec) in r.records.iter().enumerate() {
            assert_eq!(rec.evaluations_used, cfg.n_init + i * cfg.q);
            assert!(rec.fallback.is_none());
        }
        assert!(r.records.windows(2).all(|w| w[1].best_so_far >= w[0].best_so_far));
    }

    #[test]
    fn protocol_budget_arithmetic() {
        let cfg = BoConfig {
            n_init: 15,
            n_iterations: 15,
            q: 4,
            ..BoConfig::default()
        };
        assert_eq!(cfg.total_evaluations(), 75);
    }

    #[test]
    fn replay_is_identical_and_baseline_shares_design() {
        let p = Benchmark::Dtlz2 { dim: 4 };
        let cfg = quick(SurrogateKind::Gp);
        let a = run_trial(&p, &cfg, Strategy::Surrogate, 3, 1, &mut |_| {}).unwrap();
        let b = run_trial(&p, &cfg, Strategy::Surrogate, 3, 1, &mut |_| {}).unwrap();
        assert_eq!(a, b);
        let base = run_trial(&p, &cfg, Strategy::Random, 3, 1, &mut |_| {}).unwrap();
        assert_eq!(base.records[0], a.records[0]);
        assert_eq!(base.reference, a.reference);
        for r in [&a, &base] {
            let hv: Vec<f64> = r.records.iter().map(|x| x.hypervolume_so_far.unwrap()).collect();
            assert!(hv.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn ccs_case_runs() {
        let p = CcsProblem {
            case: CaseSpec::new(CaseId::C1v2),
            aquifer: AquiferSpec::default(),
            econ: EconSpec::default(),
        };
        let cfg = quick(SurrogateKind::Gp);
        let mut seen = 0;
        let r = run_trial(&p, &cfg, Strategy::Surrogate, 0, 0, &mut |_| seen += 1).unwrap();
        assert_eq!(seen, cfg.n_iterations + 1);
        assert_eq!(r.archive.n_obj(), 2);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = BoConfig {
            n_init: 1,
            ..BoConfig::default()
        };
        assert!(run_trial(&Benchmark::Branin, &cfg, Strategy::Random, 0, 0, &mut |_| {}).is_err());
    }
}
