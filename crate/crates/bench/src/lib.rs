//! Fixtures shared by the throughput benchmarks.

use bsslab_core::noise_sim::{bss_grid, Noise, SigmaModel, SimGrid};
use bsslab_core::KernelSpec;

pub fn gamma_kernel(alpha: f64) -> KernelSpec {
    KernelSpec::gamma(alpha, 1.0).expect("valid kernel")
}

/// Certified grid on `[0, horizon]` with mesh `2^-log2_steps`.
pub fn grid(spec: &KernelSpec, log2_steps: u32, horizon: f64) -> SimGrid {
    bss_grid(spec, (-(log2_steps as f64)).exp2(), horizon, 1e-3).expect("grid")
}

pub fn unit_noise(grid: &SimGrid, seed: u64) -> Noise {
    Noise::generate(&SigmaModel::Constant(1.0), grid, seed).expect("noise")
}
