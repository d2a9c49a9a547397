#![no_std]
extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod bnn;
pub mod bo;
pub mod ccs;
pub mod doe;
pub mod error;
pub mod gp;
pub mod linalg;
pub mod math;
pub mod moo;
pub mod optim;
pub mod rng;
pub mod surrogate;

pub use error::{Error, Result};
