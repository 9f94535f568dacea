use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::grid::SimGrid;
use crate::error::{Error, Result};

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Brownian = 0,
    SigmaStart = 1,
    SigmaDriver = 2,
    Exact = 3,
}

pub fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Seed of replication `index` in a batch started from `seed`: the batch
/// seed is scrambled first, so nearby batch seeds do not share
/// replications.
pub fn replication_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed) ^ index
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Brownian increments over every cell of the grid; cell `k` has variance
/// equal to its width.
pub fn make_brownian(grid: &SimGrid, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, Stream::Brownian);
    let pts = grid.points();
    let sd = grid.dt().sqrt();
    let mut out = Vec::with_capacity(grid.n_cells());
    for k in 0..grid.n_cells() {
        let z: f64 = rng.sample(StandardNormal);
        if k < grid.n_far() {
            out.push((pts[k + 1] - pts[k]).sqrt() * z);
        } else {
            out.push(sd * z);
        }
    }
    out
}

/// Volatility model; the value used on cell `(t_k, t_{k+1}]` is `σ(t_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaModel {
    Constant(f64),
    /// `σ = exp(V)` with `dV = -θV dt + dW`, stationary. `W` is either an
    /// independent Brownian motion or the driving `B` itself.
    ExpOu { theta: f64, independent: bool },
    /// Deterministic `σ(t) = 1 + rate·max(t, 0)`; not stationary.
    Ramp { rate: f64 },
}

impl SigmaModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SigmaModel::Constant(c) if !c.is_finite() => {
                Err(Error::InvalidParameter(format!("constant sigma must be finite (got {c})")))
            }
            SigmaModel::ExpOu { theta, .. } if !(theta > 0.0) || !theta.is_finite() => {
                Err(Error::InvalidParameter(format!("theta must be positive (got {theta})")))
            }
            SigmaModel::Ramp { rate } if !rate.is_finite() => {
                Err(Error::InvalidParameter(format!("ramp rate must be finite (got {rate})")))
            }
            _ => Ok(()),
        }
    }

    /// `E σ₀²` for the stationary models.
    pub fn second_moment(&self) -> Option<f64> {
        match *self {
            SigmaModel::Constant(c) => Some(c * c),
            SigmaModel::ExpOu { theta, .. } => Some((1.0 / theta).exp()),
            SigmaModel::Ramp { .. } => None,
        }
    }

    pub fn is_unit(&self) -> bool {
        *self == SigmaModel::Constant(1.0)
    }

    /// Whether σ is built from the driving Brownian increments.
    pub fn uses_driving_noise(&self) -> bool {
        matches!(self, SigmaModel::ExpOu { independent: false, .. })
    }
}

/// σ at the left endpoint of every cell. The dependent variant reads the
/// increments of cells strictly before `k` only.
pub fn sigma_from_increments(model: &SigmaModel, grid: &SimGrid, increments: &[f64], seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    let n = grid.n_cells();
    let pts = grid.points();
    match *model {
        SigmaModel::Constant(c) => Ok(vec![c; n]),
        SigmaModel::Ramp { rate } => Ok((0..n).map(|k| 1.0 + rate * pts[k].max(0.0)).collect()),
        SigmaModel::ExpOu { theta, independent } => {
            let mut start = rng_for(seed, Stream::SigmaStart);
            let mut driver = rng_for(seed, Stream::SigmaDriver);
            let z0: f64 = start.sample(StandardNormal);
            let mut v = z0 / (2.0 * theta).sqrt();
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                out.push(v.exp());
                let w = pts[k + 1] - pts[k];
                let a = (-theta * w).exp();
                let b = (-(-2.0 * theta * w).exp_m1() / (2.0 * theta)).sqrt();
                let eta = if independent {
                    driver.sample(StandardNormal)
                } else {
                    increments[k] / w.sqrt()
                };
                v = a * v + b * eta;
            }
            Ok(out)
        }
    }
}

pub fn make_sigma(model: &SigmaModel, grid: &SimGrid, seed: u64) -> Result<Vec<f64>> {
    if model.uses_driving_noise() {
        let inc = make_brownian(grid, seed);
        sigma_from_increments(model, grid, &inc, seed)
    } else {
        sigma_from_increments(model, grid, &[], seed)
    }
}

/// Driving noise of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Noise {
    pub increments: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Noise {
    pub fn generate(model: &SigmaModel, grid: &SimGrid, seed: u64) -> Result<Self> {
        let increments = make_brownian(grid, seed);
        let sigma = sigma_from_increments(model, grid, &increments, seed)?;
        Ok(Self { increments, sigma })
    }

    /// The noise with every increment zero.
    pub fn zero(grid: &SimGrid) -> Self {
        Self {
            increments: vec![0.0; grid.n_cells()],
            sigma: vec![1.0; grid.n_cells()],
        }
    }

    /// `σ_k ΔB_k` per cell.
    pub fn modulated(&self) -> Vec<f64> {
        self.increments.iter().zip(&self.sigma).map(|(b, s)| b * s).collect()
    }

    /// Noise on the grid returned by [`SimGrid::coarsen`]: increments of
    /// merged cells are summed, σ is taken at the left endpoint.
    pub fn coarsen(&self, grid: &SimGrid) -> Result<Self> {
        let nf = grid.n_far();
        let rest = self.increments.len() - nf;
        if rest % 2 != 0 {
            return Err(Error::InvalidParameter("odd number of uniform cells".into()));
        }
        let mut increments = self.increments[..nf].to_vec();
        let mut sigma = self.sigma[..nf].to_vec();
        for k in (nf..self.increments.len()).step_by(2) {
            increments.push(self.increments[k] + self.increments[k + 1]);
            sigma.push(self.sigma[k]);
        }
        Ok(Self { increments, sigma })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_two_sample;

    #[test]
    fn nearby_batch_seeds_do_not_share_replications() {
        let a: std::collections::HashSet<u64> = (0..64).map(|i| replication_seed(1, i)).collect();
        assert!((0..64).all(|i| !a.contains(&replication_seed(2, i))));
    }

    #[test]
    fn increments_have_cell_variance() {
        let g = SimGrid::new(0.01, 500_000, 500_000).unwrap();
        let inc = make_brownian(&g, 7);
        let n = inc.len() as f64;
        let var = inc.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var / 0.01 - 1.0).abs() < 0.01);
        assert_eq!(inc, make_brownian(&g, 7));
        assert_ne!(inc, make_brownian(&g, 8));
        // disjoint windows
        let m = 100_000;
        let (a, b) = (&inc[..m], &inc[m..2 * m]);
        let rho = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (m as f64 * 0.01);
        assert!(rho.abs() < 3.0 / (m as f64).sqrt());
    }

    #[test]
    fn far_cells_scale_with_width() {
        let g = SimGrid::with_far_field(0.1, 10, 10, 1e6).unwrap();
        let mut acc = 0.0;
        let reps = 400;
        for seed in 0..reps {
            let inc = make_brownian(&g, seed);
            acc += inc[0] * inc[0] / g.width(0);
        }
        assert!((acc / reps as f64 - 1.0).abs() < 0.25);
    }

    #[test]
    fn constant_sigma() {
        let g = SimGrid::new(0.1, 10, 10).unwrap();
        assert!(make_sigma(&SigmaModel::Constant(1.0), &g, 3).unwrap().iter().all(|s| *s == 1.0));
    }

    #[test]
    fn exp_ou_second_moment() {
        let theta = 1.0;
        let g = SimGrid::new(0.05, 0, 200).unwrap();
        let model = SigmaModel::ExpOu { theta, independent: true };
        let mut vals = Vec::new();
        for seed in 0..2000 {
            let s = make_sigma(&model, &g, seed).unwrap();
            vals.push(s[0] * s[0]);
            vals.push(s[150] * s[150]);
        }
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let target = model.second_moment().unwrap();
        assert!((target - std::f64::consts::E).abs() < 1e-15);
        assert!((mean - target).abs() < 3.0 * sd / n.sqrt(), "{mean} vs {target}");
    }

    #[test]
    fn dependent_sigma_is_adapted_and_stationary() {
        let g = SimGrid::new(0.05, 0, 100).unwrap();
        let model = SigmaModel::ExpOu { theta: 1.0, independent: false };
        let mut inc = make_brownian(&g, 11);
        let s1 = sigma_from_increments(&model, &g, &inc, 11).unwrap();
        // changing the increment of cell 50 leaves σ on cells ≤ 50 unchanged
        inc[50] += 1.0;
        let s2 = sigma_from_increments(&model, &g, &inc, 11).unwrap();
        assert_eq!(s1[..=50], s2[..=50]);
        assert_ne!(s1[51], s2[51]);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        for seed in 0..1000 {
            let s = make_sigma(&model, &g, seed).unwrap();
            a.push(s[10]);
            b.push(s[80]);
        }
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
    }

    #[test]
    fn coarsened_noise_sums_pairs() {
        let g = SimGrid::with_far_field(0.1, 4, 4, 10.0).unwrap();
        let n = Noise::generate(&SigmaModel::Constant(2.0), &g, 1).unwrap();
        let c = n.coarsen(&g).unwrap();
        let cg = g.coarsen().unwrap();
        assert_eq!(c.increments.len(), cg.n_cells());
        assert_eq!(c.increments[cg.n_far()], n.increments[g.n_far()] + n.increments[g.n_far() + 1]);
    }
}
