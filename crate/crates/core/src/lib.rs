pub mod error;
pub mod fit;
pub mod kernels;
pub mod noise_sim;
pub mod quad;
pub mod stats;
pub mod wiener;
pub mod decomp;
pub mod ito;
pub mod config;
pub mod runner;

pub use error::{ConfigIssue, Error, Result};
pub use config::{parse_config, ExperimentConfig, ExperimentKind, KernelConfig, Truncation};
pub use kernels::{CovModel, KernelSpec};
pub use noise_sim::{Noise, SigmaModel, SimGrid};
pub use runner::{run, run_to_dir, CheckRow, ExperimentReport};
