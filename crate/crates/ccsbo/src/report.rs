//! Cross-trial summaries: per-iteration mean/min/max of the trace, the
//! final non-dominated set and the best solution for each objective.

use std::path::Path;

use ccsbo_core::moo::pareto_front;

use crate::trial_log::TrialLog;
use crate::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub iteration: usize,
    pub evaluations: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub n_trials: usize,
}

/// Best value for single-objective logs, hypervolume otherwise. Trials
/// shorter than others contribute to the rows they reach.
pub fn summarize(logs: &[TrialLog]) -> Result<Vec<SummaryRow>, Error> {
    if logs.is_empty() {
        return Err(Error::EmptyInput("no trial logs".into()));
    }
    let traces: Vec<Vec<f64>> = logs.iter().map(TrialLog::trace).collect();
    let n = traces.iter().map(Vec::len).max().unwrap_or(0);
    Ok((0..n)
        .map(|i| {
            let vals: Vec<f64> = traces.iter().filter_map(|t| t.get(i).copied()).collect();
            let rec = logs.iter().find_map(|l| l.records.get(i)).expect("some trial reaches row i");
            SummaryRow {
                iteration: rec.iteration,
                evaluations: rec.evaluations_used,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                n_trials: vals.len(),
            }
        })
        .collect())
}

/// An evaluated point, located by trial and evaluation index.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub trial: u32,
    pub index: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

fn evaluated(logs: &[TrialLog]) -> Vec<Solution> {
    let mut out = Vec::new();
    for log in logs {
        let mut index = 0;
        for r in &log.records {
            for (x, y) in r.chosen_x.iter().zip(&r.objective_vectors) {
                out.push(Solution {
                    trial: log.header.trial,
                    index,
                    x: x.clone(),
                    y: y.clone(),
                });
                index += 1;
            }
        }
    }
    out
}

/// Non-dominated points over every evaluation of every trial.
pub fn final_front(logs: &[TrialLog]) -> Vec<Solution> {
    let all = evaluated(logs);
    let ys: Vec<Vec<f64>> = all.iter().map(|s| s.y.clone()).collect();
    pareto_front(&ys).into_iter().map(|i| all[i].clone()).collect()
}

/// For each objective, the evaluated point maximizing it; ties go to the
/// earliest trial and evaluation.
pub fn best_per_objective(logs: &[TrialLog]) -> Result<Vec<(String, Solution)>, Error> {
    let first = logs.first().ok_or_else(|| Error::EmptyInput("no trial logs".into()))?;
    let all = evaluated(logs);
    Ok(first
        .header
        .objectives
        .iter()
        .enumerate()
        .filter_map(|(k, name)| {
            let best = all.iter().fold(None::<&Solution>, |b, s| match b {
                Some(b) if b.y[k] >= s.y[k] => Some(b),
                _ => Some(s),
            })?;
            Some((name.clone(), best.clone()))
        })
        .collect())
}

/// Reads every `trial_<k>.jsonl` in `dir`, ordered by trial.
pub fn load_logs(dir: &Path) -> Result<Vec<TrialLog>, Error> {
    let mut logs = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("trial_") && name.ends_with(".jsonl") {
            logs.push(TrialLog::read(&path)?);
        }
    }
    if logs.is_empty() {
        return Err(Error::EmptyInput(format!("no trial_*.jsonl in {}", dir.display())));
    }
    logs.sort_by_key(|l| l.header.trial);
    Ok(logs)
}

/// Writes `summary.csv`, `front_final.csv` and `best_per_objective.csv`.
pub fn write_report(logs: &[TrialLog], out: &Path) -> Result<(), Error> {
    let rows = summarize(logs)?;
    std::fs::create_dir_all(out)?;
    let names = &logs[0].header.objectives;

    let mut w = csv::Writer::from_path(out.join("summary.csv"))?;
    w.write_record(["iteration", "evaluations", "mean", "min", "max", "n_trials"])?;
    for r in &rows {
        w.write_record([
            r.iteration.to_string(),
            r.evaluations.to_string(),
            r.mean.to_string(),
            r.min.to_string(),
            r.max.to_string(),
            r.n_trials.to_string(),
        ])?;
    }
    w.flush()?;

    let front = final_front(logs);
    let mut w = csv::Writer::from_path(out.join("front_final.csv"))?;
    let d = front.first().map_or(0, |s| s.x.len());
    let mut head = vec!["trial".to_string(), "index".to_string()];
    head.extend((0..d).map(|i| format!("x{i}")));
    head.extend(names.iter().cloned());
    w.write_record(&head)?;
    for s in &front {
        let mut row = vec![s.trial.to_string(), s.index.to_string()];
        row.extend(s.x.iter().chain(&s.y).map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("best_per_objective.csv"))?;
    let mut head = vec!["best_for".to_string(), "trial".to_string(), "index".to_string()];
    head.extend(names.iter().cloned());
    w.write_record(&head)?;
    for (name, s) in best_per_objective(logs)? {
        let mut row = vec![name, s.trial.to_string(), s.index.to_string()];
        row.extend(s.y.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
