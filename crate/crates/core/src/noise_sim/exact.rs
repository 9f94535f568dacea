use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::noise::{rng_for, Stream};
use crate::error::{Error, Result};

/// Largest circulant size tried before giving up.
const MAX_EMBEDDING: usize = 1 << 22;
/// Negative eigenvalues above this (relative to `γ(0)`) are clipped to zero.
const EIGEN_FLOOR: f64 = -1e-8;

/// Nonnegative circulant eigenvalues for the covariance `cov(k·dt)`,
/// `k = 0..n`, padding the embedding until it is nonnegative definite.
pub fn circulant_eigenvalues(cov: &dyn Fn(f64) -> f64, n: usize, dt: f64) -> Result<Vec<f64>> {
    let mut m = (2 * n.max(1)).next_power_of_two();
    let c0 = cov(0.0);
    if !(c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("covariance at lag 0 must be positive (got {c0})")));
    }
    let mut planner = FftPlanner::<f64>::new();
    loop {
        let half = m / 2;
        let mut row = vec![Complex::new(0.0, 0.0); m];
        for k in 0..=half {
            let v = cov(k as f64 * dt);
            row[k].re = v;
            if k > 0 && k < half {
                row[m - k].re = v;
            }
        }
        planner.plan_fft_forward(m).process(&mut row);
        let min = row.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min >= EIGEN_FLOOR * c0 {
            return Ok(row.iter().map(|z| z.re.max(0.0)).collect());
        }
        if m >= MAX_EMBEDDING {
            return Err(Error::Embedding {
                min_eigenvalue: min,
                size: m,
            });
        }
        m *= 2;
    }
}

/// Stationary Gaussian values at `0, dt, ..., (n-1)·dt` with covariance
/// `cov`, by circulant embedding.
pub fn simulate_exact_gaussian(cov: &dyn Fn(f64) -> f64, n: usize, dt: f64, seed: u64) -> Result<Vec<f64>> {
    let eig = circulant_eigenvalues(cov, n, dt)?;
    Ok(sample_with_eigenvalues(&eig, n, seed))
}

/// One draw using precomputed eigenvalues from [`circulant_eigenvalues`].
pub fn sample_with_eigenvalues(eig: &[f64], n: usize, seed: u64) -> Vec<f64> {
    let m = eig.len();
    let mut rng = rng_for(seed, Stream::Exact);
    let mut buf: Vec<Complex<f64>> = eig
        .iter()
        .map(|l| {
            let s = (l / m as f64).sqrt();
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            Complex::new(s * a, s * b)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    buf[..n].iter().map(|z| z.re).collect()
}
