//! Driving noise, volatility paths and simulation of every process from a
//! shared noise realization.

pub mod exact;
pub mod grid;
pub mod noise;
pub mod simulate;
pub mod weights;

pub use exact::{circulant_eigenvalues, sample_with_eigenvalues, simulate_exact_gaussian};
pub use grid::SimGrid;
pub use noise::{make_brownian, make_sigma, replication_seed, sigma_from_increments, Noise, SigmaModel};
pub use simulate::{
    bss_depth, bss_grid, bss_parts, brownian_path, eval_future, fbm_grid, mvn_depth, mvn_parts,
    riemann_liouville_parts, simulate_bss, simulate_fbm, simulate_vmfbm, simulate_x_vmvp, vmfbm_at_rows, vmfbm_from_noise,
    DrivenPaths, ProcessKind, VmfbmPaths, DEFAULT_TOL_TRUNC,
};
pub use weights::{adjacent_factor, power_mean, KernelParts, WeightPlan};
