use ccsbo_core::bo::{CcsProblem, Problem};
use ccsbo_core::ccs::{AquiferSpec, Benchmark, CaseId, CaseSpec, EconSpec};
use ccsbo_core::Result;

/// A proxy case or an analytic benchmark.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Ccs(CcsProblem),
    Bench(Benchmark),
}

impl ProblemSpec {
    pub fn from_name(name: &str, aquifer: &AquiferSpec, econ: &EconSpec) -> Result<Self> {
        match CaseId::from_name(name) {
            Some(id) => Ok(ProblemSpec::Ccs(CcsProblem {
                case: CaseSpec::new(id),
                aquifer: aquifer.clone(),
                econ: econ.clone(),
            })),
            None => Ok(ProblemSpec::Bench(Benchmark::from_name(name)?)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Ccs(p) => p.case.id.name(),
            ProblemSpec::Bench(b) => b.name(),
        }
    }

    fn inner(&self) -> &dyn Problem {
        match self {
            ProblemSpec::Ccs(p) => p,
            ProblemSpec::Bench(b) => b,
        }
    }
}

impl Problem for ProblemSpec {
    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn n_obj(&self) -> usize {
        self.inner().n_obj()
    }

    fn objective_names(&self) -> Vec<String> {
        self.inner().objective_names()
    }

    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner().evaluate(x)
    }
}
