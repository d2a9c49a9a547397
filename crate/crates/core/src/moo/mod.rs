pub mod acq;
pub mod hv;
pub mod pareto;

pub use acq::{
    mc_ehvi, mc_ei, optimize_acquisition, propose_batch, AcqKind, AcqSpec, BatchAcquisition, CandidateBatch,
    McAcquisition, SearchOptions,
};
pub use hv::{hypervolume, hypervolume_improvement};
pub use pareto::{dominates, pareto_front, ParetoArchive};
