pub mod baselines;
pub mod cavi;
pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod lasso;
pub mod linalg;
pub mod model;
pub mod preprocess;
pub mod rng;
pub mod target;

pub use error::{Error, Result};
