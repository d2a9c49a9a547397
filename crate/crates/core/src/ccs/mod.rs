//! Desk-scale CO2 storage scheduling proxy and analytic benchmarks.

pub mod bench;
pub mod objectives;
pub mod sim;
pub mod spec;

pub use bench::{benchmark_eval, Benchmark};
pub use objectives::{
    evaluate_case, objective_recycling, objective_f1, objective_f2, objective_f3, objective_f4_npv, objective_value, score,
    ObjectiveVector,
};
pub use sim::{simulate, SimOutcome, SimStep};
pub use spec::{decode_schedule, group_schedule, AquiferSpec, CaseId, CaseSpec, EconSpec, ObjectiveId, WellSchedule};
