use std::path::Path;
use std::time::Instant;

use ccsbo_core::bo::{run_trial, Problem, Strategy};
use rayon::prelude::*;

use crate::config::RunSpec;
use crate::trial_log::{strategy_name, FinalArchive, Header, Lineage, LogWriter, TrialLog};
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub log: TrialLog,
    /// Seconds since the trial started, per iteration.
    pub wall_time_s: Vec<f64>,
}

/// Surrogate-guided trials.
pub fn run_experiment(spec: &RunSpec) -> Result<Vec<TrialOutput>, Error> {
    run_trials(spec, Strategy::Surrogate)
}

/// Trials with the same budget and initial designs, but uniform-random
/// batches in place of the acquisition.
pub fn run_random_baseline(spec: &RunSpec) -> Result<Vec<TrialOutput>, Error> {
    run_trials(spec, Strategy::Random)
}

/// Trials run in parallel; each writes only its own files, so the logs do
/// not depend on scheduling.
pub fn run_trials(spec: &RunSpec, strategy: Strategy) -> Result<Vec<TrialOutput>, Error> {
    if let Some(dir) = &spec.output_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.toml"), spec.snapshot().to_toml())?;
    }
    (0..spec.n_trials as u32)
        .into_par_iter()
        .map(|t| run_one(spec, strategy, t, spec.output_dir.as_deref()))
        .collect()
}

pub fn run_one(spec: &RunSpec, strategy: Strategy, trial: u32, dir: Option<&Path>) -> Result<TrialOutput, Error> {
    let header = Header {
        trial,
        strategy: strategy_name(strategy).to_string(),
        objectives: spec.problem.objective_names(),
        lineage: Lineage::new(spec.seed, trial),
        config: spec.snapshot(),
    };
    let mut writer = dir.map(|d| LogWriter::create(d, &header)).transpose()?;
    let mut io_error = None;
    let mut wall = Vec::new();
    let start = Instant::now();
    let result = run_trial(&spec.problem, &spec.bo, strategy, spec.seed, trial, &mut |r| {
        let t = start.elapsed().as_secs_f64();
        wall.push(t);
        if let Some(w) = writer.as_mut() {
            if let Err(e) = w.record(r, t) {
                io_error.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let archive = FinalArchive {
        xs: result.archive.xs().to_vec(),
        ys: result.archive.ys().to_vec(),
        front: result.archive.front_indices().to_vec(),
        reference: result.reference,
    };
    if let Some(w) = writer {
        w.finish(&archive)?;
    }
    Ok(TrialOutput {
        log: TrialLog {
            header,
            records: result.records,
            archive: Some(archive),
        },
        wall_time_s: wall,
    })
}
