pub mod fit;
pub mod kernel;
pub mod model;

pub use fit::{fit_hyperparams, GpFitOptions};
pub use kernel::{DklFeatureMap, KernelFamily, KernelSpec};
pub use model::{gp_joint_samples, GpModel, GpPosterior};
