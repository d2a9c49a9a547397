use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ccsbo::config::ExperimentConfig;
use ccsbo::experiment::{run_trials, TrialOutput};
use ccsbo::problem::ProblemSpec;
use ccsbo::{report, sim_io, Error};
use ccsbo_core::bo::{BoConfig, Problem, Strategy};
use ccsbo_core::ccs::{decode_schedule, score, simulate, Benchmark, CaseId, CaseSpec};
use ccsbo_core::surrogate::SurrogateKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ccsbo", version, about = "Bayesian optimization of CO2 storage schedules")]
struct Cli {
    /// Print the surrogate roster and exit.
    #[arg(long)]
    list_surrogates: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Surrogate-guided trials; writes logs, config snapshot and report.
    Run(RunArgs),
    /// Uniform-random trials with the same budget.
    Baseline(RunArgs),
    /// Summarize the trial logs in a directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// One proxy evaluation of a decision vector.
    Simulate {
        #[arg(long)]
        case: String,
        /// CSV file holding the unit-cube decision vector.
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Optional config supplying [aquifer] and [econ].
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// BO on an analytic test function.
    Bench {
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value = "GP")]
        surrogate: String,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        n_init: usize,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        q: usize,
    },
}

fn load(args: &RunArgs) -> Result<ccsbo::RunSpec, Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.experiment.seed = Some(s);
    }
    if let Some(t) = args.trials {
        cfg.experiment.n_trials = Some(t);
    }
    if let Some(o) = &args.out {
        cfg.experiment.output_dir = Some(o.clone());
    }
    Ok(cfg.resolve()?)
}

fn print_final(outputs: &[TrialOutput]) {
    for o in outputs {
        let last = o.log.records.last();
        let (label, v) = match last.and_then(|r| r.best_so_far) {
            Some(b) => ("best", b),
            None => ("hypervolume", last.and_then(|r| r.hypervolume_so_far).unwrap_or(f64::NAN)),
        };
        let fallbacks = o.log.records.iter().filter(|r| r.fallback.is_some()).count();
        println!(
            "trial {}: {label} {v:.6} after {} evaluations ({fallbacks} fallback iterations, {:.1} s)",
            o.log.header.trial,
            last.map_or(0, |r| r.evaluations_used),
            o.wall_time_s.last().copied().unwrap_or(0.0)
        );
    }
}

fn run(args: &RunArgs, strategy: Strategy) -> Result<(), Error> {
    let spec = load(args)?;
    let outputs = run_trials(&spec, strategy)?;
    print_final(&outputs);
    if let Some(dir) = &spec.output_dir {
        let logs: Vec<_> = outputs.into_iter().map(|o| o.log).collect();
        report::write_report(&logs, dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn simulate_cmd(case: &str, x: &Path, out: &Path, config: Option<&Path>) -> Result<(), Error> {
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let id = CaseId::from_name(case).ok_or_else(|| {
        ccsbo::ConfigError::Invalid {
            field: "case",
            message: format!("unknown case {case:?}"),
        }
    })?;
    let case = CaseSpec::new(id);
    let x = sim_io::read_x(x)?;
    let schedule = decode_schedule(&x, &case)?;
    let outcome = simulate(&schedule, &cfg.aquifer, &case)?;
    let objectives = score(&outcome, &case, &cfg.econ);
    std::fs::create_dir_all(out)?;
    sim_io::write_outcome(&outcome, std::fs::File::create(out.join("sim_outcome.csv"))?)?;
    let named: serde_json::Map<String, serde_json::Value> = objectives
        .ids
        .iter()
        .zip(&objectives.values)
        .map(|(id, v)| (id.name().to_string(), serde_json::json!(v)))
        .collect();
    std::fs::write(out.join("objectives.json"), serde_json::to_string_pretty(&named)?)?;
    for (k, v) in &named {
        println!("{k} = {v}");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn bench_cmd(
    function: &str,
    surrogate: &str,
    seeds: u64,
    seed: u64,
    n_init: usize,
    iterations: usize,
    q: usize,
) -> Result<(), Error> {
    let bench = Benchmark::from_name(function).map_err(|e| ccsbo::ConfigError::Invalid {
        field: "fn",
        message: e.to_string(),
    })?;
    let kind = SurrogateKind::from_name(surrogate).ok_or_else(|| ccsbo::ConfigError::Invalid {
        field: "surrogate",
        message: format!("unknown surrogate {surrogate:?}; see --list-surrogates"),
    })?;
    let spec = ccsbo::RunSpec {
        problem: ProblemSpec::Bench(bench),
        bo: BoConfig {
            surrogate: kind,
            n_init,
            n_iterations: iterations,
            q,
            ..BoConfig::default()
        },
        n_trials: seeds as usize,
        seed,
        output_dir: None,
        aquifer: Default::default(),
        econ: Default::default(),
    };
    spec.bo.validate()?;
    let outputs = run_trials(&spec, Strategy::Surrogate)?;
    print_final(&outputs);
    if let (Some(opt), 1) = (bench.optimum(), spec.problem.n_obj()) {
        println!("known optimum {opt:.6}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_surrogates {
        for k in SurrogateKind::ALL {
            println!("{:<9} {}", k.name(), k.description());
        }
        return ExitCode::SUCCESS;
    }
    let result = match &cli.command {
        None => {
            eprintln!("no command given; see --help");
            return ExitCode::from(2);
        }
        Some(Command::Run(a)) => run(a, Strategy::Surrogate),
        Some(Command::Baseline(a)) => run(a, Strategy::Random),
        Some(Command::Report { input, out }) => {
            report::load_logs(input).and_then(|logs| report::write_report(&logs, out))
        }
        Some(Command::Simulate { case, x, out, config }) => simulate_cmd(case, x, out, config.as_deref()),
        Some(Command::Bench {
            function,
            surrogate,
            seeds,
            seed,
            n_init,
            iterations,
            q,
        }) => bench_cmd(function, surrogate, *seeds, *seed, *n_init, *iterations, *q),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
