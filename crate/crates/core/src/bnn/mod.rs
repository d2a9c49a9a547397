pub mod mlp;
pub mod posterior;
pub mod predictive;
pub mod sampler;
pub mod svi;
pub mod train;
