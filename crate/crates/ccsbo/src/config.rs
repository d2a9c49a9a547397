//! Experiment configuration: a TOML file with `[experiment]`, `[surrogate]`,
//! `[aquifer]` and `[econ]` sections. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use ccsbo_core::bo::BoConfig;
use ccsbo_core::ccs::{AquiferSpec, EconSpec};
use ccsbo_core::surrogate::{SurrogateKind, SurrogateOptions};
use serde::{Deserialize, Serialize};

use crate::problem::ProblemSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
}

fn bad(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    /// `c1-protoA`, `c1-protoB`, `c2` or `c2-smoke`; explicit keys win.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// A proxy case (`c1v1`, `c1v2`, `c2`) or a benchmark name.
    pub case: Option<String>,
    pub surrogate: Option<String>,
    pub n_init: Option<usize>,
    pub n_iterations: Option<usize>,
    pub q: Option<usize>,
    pub n_trials: Option<usize>,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub n_mc_samples: Option<usize>,
    pub raw_candidates: Option<usize>,
    pub n_restarts: Option<usize>,
    pub local_steps: Option<usize>,
}

/// Overrides applied on top of the surrogate defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateSection {
    /// `desk` (default) or `wide` for the three-layer, width-100 networks.
    pub scale: Option<String>,
    pub hidden: Option<Vec<usize>>,
    pub infer_noise: Option<bool>,
    pub fixed_noise_std: Option<f64>,
    pub gp_restarts: Option<usize>,
    pub hmc_warmup: Option<usize>,
    pub hmc_samples: Option<usize>,
    pub hmc_leapfrog: Option<usize>,
    pub hmc_step_size: Option<f64>,
    pub nuts_warmup: Option<usize>,
    pub nuts_samples: Option<usize>,
    pub nuts_max_depth: Option<usize>,
    pub svi_steps: Option<usize>,
    pub svi_learn_rate: Option<f64>,
    pub svi_members: Option<usize>,
    /// Adam steps of the fit that starts the MCMC chains and the variational mean.
    pub fit_steps: Option<usize>,
    /// Learning rate shared by every network fit.
    pub fit_learn_rate: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub dropout_steps: Option<usize>,
    pub ensemble_members: Option<usize>,
    pub ensemble_steps: Option<usize>,
    pub dkl_steps: Option<usize>,
    pub dkl_hidden: Option<Vec<usize>>,
    pub dkl_embed_dim: Option<usize>,
}

impl SurrogateSection {
    /// Every key set from `o`, so a snapshot does not depend on defaults.
    pub fn from_options(o: &SurrogateOptions) -> Self {
        Self {
            scale: None,
            hidden: Some(o.hidden.clone()),
            infer_noise: Some(o.infer_noise),
            fixed_noise_std: Some(o.fixed_noise_std),
            gp_restarts: Some(o.gp.n_starts),
            hmc_warmup: Some(o.hmc.n_warmup),
            hmc_samples: Some(o.hmc.n_samples),
            hmc_leapfrog: Some(o.hmc.n_leapfrog),
            hmc_step_size: Some(o.hmc.step_size),
            nuts_warmup: Some(o.nuts.n_warmup),
            nuts_samples: Some(o.nuts.n_samples),
            nuts_max_depth: Some(o.nuts.max_depth),
            svi_steps: Some(o.svi.n_steps),
            svi_learn_rate: Some(o.svi.learn_rate),
            svi_members: Some(o.svi_members),
            fit_steps: Some(o.init_fit.n_steps),
            fit_learn_rate: Some(o.init_fit.learn_rate),
            dropout_rate: Some(o.dropout_rate),
            dropout_steps: Some(o.dropout_fit.n_steps),
            ensemble_members: Some(o.ensemble_members),
            ensemble_steps: Some(o.ensemble_fit.n_steps),
            dkl_steps: Some(o.gp.dkl_steps),
            dkl_hidden: Some(o.gp.dkl_hidden.clone()),
            dkl_embed_dim: Some(o.gp.dkl_embed_dim),
        }
    }

    pub fn options(&self) -> Result<SurrogateOptions, ConfigError> {
        let mut o = match self.scale.as_deref() {
            None | Some("desk") => SurrogateOptions::default(),
            Some("wide") => SurrogateOptions::wide(),
            Some(s) => return Err(bad("surrogate.scale", format!("expected desk or wide, got {s:?}"))),
        };
        macro_rules! set {
            ($field:ident => $($target:tt)+) => {
                if let Some(v) = &self.$field {
                    o.$($target)+ = v.clone();
                }
            };
        }
        set!(hidden => hidden);
        set!(infer_noise => infer_noise);
        set!(fixed_noise_std => fixed_noise_std);
        set!(gp_restarts => gp.n_starts);
        set!(hmc_warmup => hmc.n_warmup);
        set!(hmc_samples => hmc.n_samples);
        set!(hmc_leapfrog => hmc.n_leapfrog);
        set!(hmc_step_size => hmc.step_size);
        set!(nuts_warmup => nuts.n_warmup);
        set!(nuts_samples => nuts.n_samples);
        set!(nuts_max_depth => nuts.max_depth);
        set!(svi_steps => svi.n_steps);
        set!(svi_learn_rate => svi.learn_rate);
        set!(svi_members => svi_members);
        set!(fit_steps => init_fit.n_steps);
        set!(fit_learn_rate => init_fit.learn_rate);
        set!(dropout_rate => dropout_rate);
        set!(dropout_steps => dropout_fit.n_steps);
        set!(ensemble_members => ensemble_members);
        set!(ensemble_steps => ensemble_fit.n_steps);
        set!(dkl_steps => gp.dkl_steps);
        set!(dkl_hidden => gp.dkl_hidden);
        set!(dkl_embed_dim => gp.dkl_embed_dim);
        if let Some(lr) = self.fit_learn_rate {
            o.dropout_fit.learn_rate = lr;
            o.ensemble_fit.learn_rate = lr;
        }
        if o.gp.n_starts == 0 {
            return Err(bad("surrogate.gp_restarts", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&o.dropout_rate) {
            return Err(bad("surrogate.dropout_rate", "must lie in [0, 1)"));
        }
        if !(o.fixed_noise_std > 0.0) {
            return Err(bad("surrogate.fixed_noise_std", "must be positive"));
        }
        if o.ensemble_members == 0 || o.svi_members == 0 {
            return Err(bad("surrogate", "member counts must be >= 1"));
        }
        Ok(o)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub surrogate: SurrogateSection,
    pub aquifer: AquiferSpec,
    pub econ: EconSpec,
}

/// Budget defaults of the named protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub case: &'static str,
    pub n_init: usize,
    pub n_iterations: usize,
    pub q: usize,
    pub n_trials: usize,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "c1-protoA",
        case: "c1v1",
        n_init: 15,
        n_iterations: 15,
        q: 4,
        n_trials: 1,
    },
    Preset {
        name: "c1-protoB",
        case: "c1v1",
        n_init: 15,
        n_iterations: 12,
        q: 5,
        n_trials: 1,
    },
    Preset {
        name: "c2",
        case: "c2",
        n_init: 15,
        n_iterations: 120,
        q: 5,
        n_trials: 8,
    },
    Preset {
        name: "c2-smoke",
        case: "c2",
        n_init: 15,
        n_iterations: 20,
        q: 5,
        n_trials: 8,
    },
];

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().copied().find(|p| p.name.eq_ignore_ascii_case(name))
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub bo: BoConfig,
    pub n_trials: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub aquifer: AquiferSpec,
    pub econ: EconSpec,
}

impl RunSpec {
    /// Fully explicit config that resolves back to `self`.
    pub fn snapshot(&self) -> ExperimentConfig {
        ExperimentConfig {
            experiment: ExperimentSection {
                preset: None,
                case: Some(self.problem.name().to_string()),
                surrogate: Some(self.bo.surrogate.name().to_string()),
                n_init: Some(self.bo.n_init),
                n_iterations: Some(self.bo.n_iterations),
                q: Some(self.bo.q),
                n_trials: Some(self.n_trials),
                seed: Some(self.seed),
                output_dir: None,
                n_mc_samples: Some(self.bo.n_mc_samples),
                raw_candidates: Some(self.bo.raw_candidates),
                n_restarts: Some(self.bo.n_restarts),
                local_steps: Some(self.bo.local_steps),
            },
            surrogate: SurrogateSection::from_options(&self.bo.surrogate_options),
            aquifer: self.aquifer.clone(),
            econ: self.econ.clone(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<RunSpec, ConfigError> {
        let e = &self.experiment;
        let p = match &e.preset {
            Some(name) => Some(preset(name).ok_or_else(|| {
                let known: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
                bad("experiment.preset", format!("unknown preset {name:?}; known: {}", known.join(", ")))
            })?),
            None => None,
        };
        let case = e
            .case
            .as_deref()
            .or(p.map(|p| p.case))
            .ok_or_else(|| bad("experiment.case", "required unless a preset is given"))?;
        self.aquifer
            .validate()
            .map_err(|err| bad("aquifer", err.to_string()))?;
        self.econ.validate().map_err(|err| bad("econ", err.to_string()))?;
        let problem = ProblemSpec::from_name(case, &self.aquifer, &self.econ)
            .map_err(|err| bad("experiment.case", err.to_string()))?;
        let surrogate_name = e.surrogate.as_deref().unwrap_or("GP");
        let surrogate = SurrogateKind::from_name(surrogate_name).ok_or_else(|| {
            let roster: Vec<_> = SurrogateKind::ALL.iter().map(|k| k.name()).collect();
            bad(
                "experiment.surrogate",
                format!("unknown surrogate {surrogate_name:?}; roster: {}", roster.join(", ")),
            )
        })?;
        let d = BoConfig::default();
        let bo = BoConfig {
            surrogate,
            surrogate_options: self.surrogate.options()?,
            n_init: e.n_init.or(p.map(|p| p.n_init)).unwrap_or(d.n_init),
            n_iterations: e.n_iterations.or(p.map(|p| p.n_iterations)).unwrap_or(d.n_iterations),
            q: e.q.or(p.map(|p| p.q)).unwrap_or(d.q),
            n_mc_samples: e.n_mc_samples.unwrap_or(d.n_mc_samples),
            raw_candidates: e.raw_candidates.unwrap_or(d.raw_candidates),
            n_restarts: e.n_restarts.unwrap_or(d.n_restarts),
            local_steps: e.local_steps.unwrap_or(d.local_steps),
        };
        if bo.n_init < 2 {
            return Err(bad("experiment.n_init", "must be >= 2"));
        }
        if bo.q == 0 {
            return Err(bad("experiment.q", "must be >= 1"));
        }
        if bo.n_mc_samples < 16 {
            return Err(bad("experiment.n_mc_samples", "must be >= 16"));
        }
        if bo.raw_candidates == 0 {
            return Err(bad("experiment.raw_candidates", "must be >= 1"));
        }
        if bo.n_restarts == 0 {
            return Err(bad("experiment.n_restarts", "must be >= 1"));
        }
        let n_trials = e.n_trials.or(p.map(|p| p.n_trials)).unwrap_or(1);
        if n_trials == 0 || n_trials > 1 << 16 {
            return Err(bad("experiment.n_trials", "must lie in 1..=65536"));
        }
        Ok(RunSpec {
            problem,
            bo,
            n_trials,
            seed: e.seed.unwrap_or(0),
            output_dir: e.output_dir.clone(),
            aquifer: self.aquifer.clone(),
            econ: self.econ.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_budgets() {
        let c = ExperimentConfig::from_toml("[experiment]\npreset = \"c1-protoA\"\n").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.bo.total_evaluations(), 75);
        assert_eq!(r.problem.name(), "c1v1");
        let b = preset("c1-protoB").unwrap();
        assert_eq!((b.n_iterations, b.q), (12, 5));
        let c2 = preset("c2").unwrap();
        assert_eq!((c2.n_trials, c2.n_iterations, c2.q), (8, 120, 5));
        assert_eq!(preset("c2-smoke").unwrap().n_iterations, 20);
    }

    #[test]
    fn explicit_keys_override_preset() {
        let c = ExperimentConfig::from_toml("[experiment]\npreset = \"c2\"\nn_iterations = 3\n").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!((r.bo.n_iterations, r.n_trials), (3, 8));
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "[experiment]\ncase = \"c1v1\"\nbatch = 4\n",
            "[aquifer]\nporosty = 0.2\n",
            "[surrogate]\nwidth = 3\n",
            "[extra]\n",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(ConfigError::Parse(_))), "{text}");
        }
    }

    #[test]
    fn invalid_values_name_the_field() {
        for (text, field) in [
            ("[experiment]\ncase = \"c1v1\"\nn_init = 1\n", "experiment.n_init"),
            ("[experiment]\ncase = \"c1v1\"\nq = 0\n", "experiment.q"),
            ("[experiment]\ncase = \"c1v1\"\nsurrogate = \"RF\"\n", "experiment.surrogate"),
            ("[experiment]\ncase = \"c9\"\n", "experiment.case"),
            ("[experiment]\n", "experiment.case"),
            ("[experiment]\ncase = \"c2\"\n[aquifer]\nporosity = -1.0\n", "aquifer"),
        ] {
            match ExperimentConfig::from_toml(text).unwrap().resolve() {
                Err(ConfigError::Invalid { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let text = "[experiment]\npreset = \"c2-smoke\"\nsurrogate = \"SVI\"\nseed = 7\n\
                    [surrogate]\nhidden = [8]\nsvi_steps = 50\n[aquifer]\nporosity = 0.2\n";
        let r = ExperimentConfig::from_toml(text).unwrap().resolve().unwrap();
        let snap = r.snapshot();
        let back = ExperimentConfig::from_toml(&snap.to_toml()).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.resolve().unwrap(), r);
    }
}
