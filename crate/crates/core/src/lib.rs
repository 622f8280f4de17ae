pub mod error;
pub mod experiment;
pub mod instances;
pub mod jastrow;
pub mod observables;
pub mod oracles;
pub mod output;
pub mod sampler;
pub mod seed;
pub mod tvmc;

pub use error::{Error, Result};
