pub mod bdmcmc;
pub mod cli;
pub mod copula;
pub mod error;
pub mod evalkit;
pub mod graph;
pub mod gwishart;
pub mod numkit;
pub mod simgen;

pub use error::{Error, Result};
