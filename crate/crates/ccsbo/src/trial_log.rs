//! JSONL trial logs: a header line, one line per iteration, then the final
//! archive. Wall-clock times go to a separate CSV so that logs of a replayed
//! run are byte-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ccsbo_core::bo::{IterationRecord, Strategy};
use ccsbo_core::rng::{stream_id, StreamRole};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::Error;

/// Stream ids the trial draws from. Per-iteration ids follow
/// `base | iteration << 16 | index`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub seed: u64,
    pub design: u64,
    pub surrogate: u64,
    pub acquisition: u64,
    pub baseline: u64,
}

impl Lineage {
    pub fn new(seed: u64, trial: u32) -> Self {
        Self {
            seed,
            design: stream_id(trial, StreamRole::Design, 0, 0),
            surrogate: stream_id(trial, StreamRole::Surrogate, 0, 0),
            acquisition: stream_id(trial, StreamRole::Acquisition, 0, 0),
            baseline: stream_id(trial, StreamRole::Baseline, 0, 0),
        }
    }
}

pub fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::Surrogate => "bo",
        Strategy::Random => "random",
    }
}

pub fn strategy_from_name(s: &str) -> Option<Strategy> {
    match s {
        "bo" => Some(Strategy::Surrogate),
        "random" => Some(Strategy::Random),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub trial: u32,
    pub strategy: String,
    pub objectives: Vec<String>,
    pub lineage: Lineage,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalArchive {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub front: Vec<usize>,
    pub reference: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(Header),
    Iteration(IterationRecord),
    Archive(FinalArchive),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialLog {
    pub header: Header,
    pub records: Vec<IterationRecord>,
    /// Absent when the trial did not finish.
    pub archive: Option<FinalArchive>,
}

pub fn trial_path(dir: &Path, trial: u32) -> PathBuf {
    dir.join(format!("trial_{trial}.jsonl"))
}

pub fn timing_path(dir: &Path, trial: u32) -> PathBuf {
    dir.join(format!("trial_{trial}.timing.csv"))
}

fn line(l: &Line) -> String {
    let mut s = serde_json::to_string(l).expect("log lines serialize");
    s.push('\n');
    s
}

impl TrialLog {
    pub fn to_jsonl(&self) -> String {
        let mut out = line(&Line::Header(self.header.clone()));
        for r in &self.records {
            out += &line(&Line::Iteration(r.clone()));
        }
        if let Some(a) = &self.archive {
            out += &line(&Line::Archive(a.clone()));
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, String> {
        Self::from_lines(text.lines().map(|l| Ok(l.to_string())))
    }

    fn from_lines(lines: impl Iterator<Item = std::io::Result<String>>) -> Result<Self, String> {
        let mut header = None;
        let mut records = Vec::new();
        let mut archive = None;
        for (i, l) in lines.enumerate() {
            let l = l.map_err(|e| e.to_string())?;
            if l.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Line>(&l).map_err(|e| format!("line {}: {e}", i + 1))? {
                Line::Header(h) if header.is_none() => header = Some(h),
                Line::Header(_) => return Err(format!("line {}: second header", i + 1)),
                Line::Iteration(r) => records.push(r),
                Line::Archive(a) => archive = Some(a),
            }
        }
        Ok(Self {
            header: header.ok_or("missing header line")?,
            records,
            archive,
        })
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let f = File::open(path)?;
        Self::from_lines(BufReader::new(f).lines()).map_err(|message| Error::BadLog {
            path: path.to_path_buf(),
            message,
        })
    }

    pub fn n_obj(&self) -> usize {
        self.header.objectives.len()
    }

    /// Best value (one objective) or hypervolume per iteration.
    pub fn trace(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.best_so_far.or(r.hypervolume_so_far).unwrap_or(f64::NAN))
            .collect()
    }
}

/// Streams log lines to disk as a trial progresses.
pub struct LogWriter {
    out: BufWriter<File>,
    timing: BufWriter<File>,
}

impl LogWriter {
    pub fn create(dir: &Path, header: &Header) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(trial_path(dir, header.trial))?);
        out.write_all(line(&Line::Header(header.clone())).as_bytes())?;
        out.flush()?;
        let mut timing = BufWriter::new(File::create(timing_path(dir, header.trial))?);
        writeln!(timing, "iteration,wall_time_s")?;
        Ok(Self { out, timing })
    }

    pub fn record(&mut self, r: &IterationRecord, wall_time_s: f64) -> std::io::Result<()> {
        self.out.write_all(line(&Line::Iteration(r.clone())).as_bytes())?;
        self.out.flush()?;
        writeln!(self.timing, "{},{wall_time_s}", r.iteration)?;
        self.timing.flush()
    }

    pub fn finish(mut self, archive: &FinalArchive) -> std::io::Result<()> {
        self.out.write_all(line(&Line::Archive(archive.clone())).as_bytes())?;
        self.out.flush()
    }
}
