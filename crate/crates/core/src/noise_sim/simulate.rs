use std::collections::BTreeMap;
use std::sync::Arc;

use super::grid::SimGrid;
use super::noise::{Noise, SigmaModel};
use super::weights::{power_mean, KernelParts, WeightPlan};
use crate::error::{Error, Result};
use crate::kernels::{c_alpha, certify_depth, mvn_tail_mass, phi_l2_mass, phi_tail_mass, KernelSpec};

/// Default relative L² truncation tolerance.
pub const DEFAULT_TOL_TRUNC: f64 = 1e-3;

/// Depths up to this are covered by uniform cells.
const UNIFORM_PAST_CAP: f64 = 64.0;
/// Uniform past kept in front of geometric far cells.
const UNIFORM_PAST_BEFORE_FAR: f64 = 16.0;

/// Kernel `φ_α(t-s)` of the semistationary process.
pub fn bss_parts(spec: &KernelSpec) -> KernelParts {
    let s = spec.clone();
    KernelParts::new(spec.alpha()).with_lag(Arc::new(move |x| s.phi(x)), None)
}

/// Mandelbrot–Van Ness kernel `(t-s)_+^α - (-s)_+^α` restricted to `s < t`.
pub fn mvn_parts(alpha: f64) -> KernelParts {
    KernelParts::new(alpha)
        .with_lag(
            Arc::new(move |x: f64| crate::kernels::pos_pow(x, alpha)),
            Some(Arc::new(move |x0, x1| power_mean(alpha, x0, x1))),
        )
        .with_past(
            Arc::new(move |s: f64| -crate::kernels::pos_pow(-s, alpha)),
            Some(Arc::new(move |a: f64, b: f64| -power_mean(alpha, -b, -a))),
        )
}

/// Kernel `(t-s)^α` on every `s < t`; combined with noise vanishing on
/// `s < 0` it yields `B̃^α`.
pub fn riemann_liouville_parts(alpha: f64) -> KernelParts {
    KernelParts::new(alpha).with_lag(
        Arc::new(move |x: f64| crate::kernels::pos_pow(x, alpha)),
        Some(Arc::new(move |x0, x1| power_mean(alpha, x0, x1))),
    )
}

/// Smallest depth at which the L² tail of `φ_α` is below `tol²` of its mass.
pub fn bss_depth(spec: &KernelSpec, tol: f64) -> Result<f64> {
    let total = phi_l2_mass(spec)?;
    certify_depth(|x| phi_tail_mass(spec, x), total, tol)
}

/// Depth certifying the Mandelbrot–Van Ness kernel up to time `horizon`.
pub fn mvn_depth(alpha: f64, horizon: f64, tol: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let total = c_alpha(alpha)? * horizon.powf(2.0 * alpha + 1.0);
    certify_depth(|x| mvn_tail_mass(alpha, horizon, x), total, tol)
}

fn grid_for_depth(dt: f64, horizon: f64, depth: f64) -> Result<SimGrid> {
    let n_future = (horizon / dt).round() as usize;
    if depth <= UNIFORM_PAST_CAP {
        let n_past = (depth / dt).ceil() as usize;
        SimGrid::new(dt, n_past, n_future)
    } else {
        let n_past = (UNIFORM_PAST_BEFORE_FAR / dt).round() as usize;
        SimGrid::with_far_field(dt, n_past, n_future, depth)
    }
}

/// Grid whose truncation certifies the semistationary kernel at `tol`.
pub fn bss_grid(spec: &KernelSpec, dt: f64, horizon: f64, tol: f64) -> Result<SimGrid> {
    grid_for_depth(dt, horizon, bss_depth(spec, tol)?)
}

/// Grid whose truncation certifies the fBm kernel up to `horizon` at `tol`.
pub fn fbm_grid(hurst: f64, dt: f64, horizon: f64, tol: f64) -> Result<SimGrid> {
    check_hurst(hurst)?;
    grid_for_depth(dt, horizon, mvn_depth(hurst - 0.5, horizon, tol)?)
}

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst index must lie in (0,1) (got {h})")));
    }
    Ok(())
}

fn check_bss_truncation(spec: &KernelSpec, grid: &SimGrid, tol: f64) -> Result<()> {
    let total = phi_l2_mass(spec)?;
    let tail = phi_tail_mass(spec, grid.depth())?;
    if tail > tol * tol * total {
        return Err(Error::Truncation {
            tail: tail / total,
            limit: tol * tol,
            depth: grid.depth(),
        });
    }
    Ok(())
}

fn check_mvn_truncation(alpha: f64, grid: &SimGrid, tol: f64) -> Result<()> {
    if alpha == 0.0 {
        return Ok(());
    }
    let t = grid.horizon();
    let total = c_alpha(alpha)? * t.powf(2.0 * alpha + 1.0);
    let tail = mvn_tail_mass(alpha, t, grid.depth())?;
    if tail > tol * tol * total {
        return Err(Error::Truncation {
            tail: tail / total,
            limit: tol * tol,
            depth: grid.depth(),
        });
    }
    Ok(())
}

/// Values of a kernel's process at `0, dt, ..., T` from one noise realization.
pub fn eval_future(parts: &KernelParts, grid: &SimGrid, noise: &Noise) -> Result<Vec<f64>> {
    let plan = WeightPlan::new(parts, grid, &WeightPlan::future_rows(grid))?;
    Ok(plan.apply(&noise.modulated()))
}

/// `Y` on `0, dt, ..., T`.
pub fn simulate_bss(spec: &KernelSpec, sigma: &SigmaModel, grid: &SimGrid, seed: u64) -> Result<Vec<f64>> {
    check_bss_truncation(spec, grid, DEFAULT_TOL_TRUNC)?;
    let noise = Noise::generate(sigma, grid, seed)?;
    eval_future(&bss_parts(spec), grid, &noise)
}

/// `X` on `0, dt, ..., T`.
pub fn simulate_x_vmvp(alpha: f64, sigma: &SigmaModel, grid: &SimGrid, seed: u64) -> Result<Vec<f64>> {
    crate::kernels::check_alpha(alpha)?;
    check_mvn_truncation(alpha, grid, DEFAULT_TOL_TRUNC)?;
    let noise = Noise::generate(sigma, grid, seed)?;
    eval_future(&mvn_parts(alpha), grid, &noise)
}

/// `B^H` on `0, dt, ..., T`.
pub fn simulate_fbm(hurst: f64, grid: &SimGrid, seed: u64) -> Result<Vec<f64>> {
    check_hurst(hurst)?;
    let alpha = hurst - 0.5;
    check_mvn_truncation(alpha, grid, DEFAULT_TOL_TRUNC)?;
    let noise = Noise::generate(&SigmaModel::Constant(1.0), grid, seed)?;
    let plan = WeightPlan::new(&mvn_parts(alpha), grid, &WeightPlan::future_rows(grid))?;
    // the half-integer case is summed cell by cell so that it reproduces B exactly
    Ok(if alpha == 0.0 {
        plan.apply_direct(&noise.modulated())
    } else {
        plan.apply(&noise.modulated())
    })
}

/// Brownian motion `B_t - B_0` at `0, dt, ..., T`, summed cell by cell.
pub fn brownian_path(grid: &SimGrid, increments: &[f64]) -> Vec<f64> {
    let z = grid.zero_index();
    let mut out = Vec::with_capacity(grid.n_future() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for inc in &increments[z..z + grid.n_future()] {
        acc += inc;
        out.push(acc);
    }
    out
}

/// Volatility-modulated fBm with its split `B^{H,σ} = X - A`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfbmPaths {
    /// Every uniform time from `-T_trunc` to `T`.
    pub times: Vec<f64>,
    /// Direct sum with the full Mandelbrot–Van Ness kernel.
    pub direct: Vec<f64>,
    /// The Volterra part `X_t`.
    pub x: Vec<f64>,
    /// `A_t = ∫_{t∧0}^0 (-s)^α σ_s dB_s`, zero for `t ≥ 0`.
    pub a: Vec<f64>,
}

pub fn vmfbm_from_noise(hurst: f64, grid: &SimGrid, noise: &Noise) -> Result<VmfbmPaths> {
    vmfbm_at_rows(hurst, grid, noise, &WeightPlan::uniform_rows(grid))
}

/// As [`vmfbm_from_noise`] at the given uniform grid rows only.
pub fn vmfbm_at_rows(hurst: f64, grid: &SimGrid, noise: &Noise, rows: &[usize]) -> Result<VmfbmPaths> {
    check_hurst(hurst)?;
    let alpha = hurst - 0.5;
    let parts = mvn_parts(alpha);
    let plan = WeightPlan::new(&parts, grid, rows)?;
    let xs = noise.modulated();
    let x = plan.apply_direct(&xs);
    let pts = grid.points();
    let zero = grid.zero_index();
    let rho = super::weights::adjacent_factor(alpha);
    let past_mean = |c: usize| {
        let m = power_mean(alpha, -pts[c + 1], -pts[c]);
        if c + 1 == zero {
            rho * m
        } else {
            m
        }
    };
    // suffix sums of the past part
    let mut a = vec![0.0; rows.len()];
    for (r, &j) in rows.iter().enumerate() {
        if j < zero {
            let mut acc = 0.0;
            for c in j..zero {
                acc += past_mean(c) * xs[c];
            }
            a[r] = acc;
        }
    }
    let direct = rows
        .iter()
        .enumerate()
        .map(|(r, &j)| {
            let w = plan.row_weights(r);
            let mut acc = 0.0;
            for c in 0..j.max(zero) {
                let wc = if c < j { w[c] } else { -past_mean(c) };
                acc += wc * xs[c];
            }
            acc
        })
        .collect();
    Ok(VmfbmPaths {
        times: plan.times().to_vec(),
        direct,
        x,
        a,
    })
}

pub fn simulate_vmfbm(hurst: f64, sigma: &SigmaModel, grid: &SimGrid, seed: u64) -> Result<VmfbmPaths> {
    check_hurst(hurst)?;
    check_mvn_truncation(hurst - 0.5, grid, DEFAULT_TOL_TRUNC)?;
    let noise = Noise::generate(sigma, grid, seed)?;
    vmfbm_from_noise(hurst, grid, &noise)
}

/// Named processes sharing one noise realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProcessKind {
    Y,
    X,
    Fbm,
    Vmfbm,
    BTildeAlpha,
    Brownian,
}

impl ProcessKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessKind::Y => "Y",
            ProcessKind::X => "X",
            ProcessKind::Fbm => "fBm",
            ProcessKind::Vmfbm => "vmfBm",
            ProcessKind::BTildeAlpha => "B_tilde_alpha",
            ProcessKind::Brownian => "B",
        }
    }
}

/// One replication: driving noise plus derived paths on `0, dt, ..., T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenPaths {
    pub seed: u64,
    pub times: Vec<f64>,
    pub noise: Noise,
    pub paths: BTreeMap<&'static str, Vec<f64>>,
}

impl DrivenPaths {
    pub fn generate(
        spec: &KernelSpec,
        sigma: &SigmaModel,
        grid: &SimGrid,
        seed: u64,
        kinds: &[ProcessKind],
    ) -> Result<Self> {
        let noise = Noise::generate(sigma, grid, seed)?;
        let alpha = spec.alpha();
        let mut paths = BTreeMap::new();
        for kind in kinds {
            let path = match kind {
                ProcessKind::Y => eval_future(&bss_parts(spec), grid, &noise)?,
                ProcessKind::X | ProcessKind::Vmfbm => eval_future(&mvn_parts(alpha), grid, &noise)?,
                ProcessKind::Fbm => {
                    let unit = Noise {
                        increments: noise.increments.clone(),
                        sigma: vec![1.0; noise.sigma.len()],
                    };
                    eval_future(&mvn_parts(alpha), grid, &unit)?
                }
                ProcessKind::BTildeAlpha => {
                    let mut n = noise.clone();
                    for v in &mut n.increments[..grid.zero_index()] {
                        *v = 0.0;
                    }
                    eval_future(&riemann_liouville_parts(alpha), grid, &n)?
                }
                ProcessKind::Brownian => brownian_path(grid, &noise.increments),
            };
            paths.insert(kind.name(), path);
        }
        Ok(Self {
            seed,
            times: grid.future_times(),
            noise,
            paths,
        })
    }

    pub fn path(&self, kind: ProcessKind) -> Option<&[f64]> {
        self.paths.get(kind.name()).map(|v| v.as_slice())
    }

    /// Wide CSV `t,<name>,...` in the order of the map.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for name in self.paths.keys() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t}"));
            for p in self.paths.values() {
                out.push_str(&format!(",{}", p[i]));
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{whittle_matern, CovModel};

    fn mc_check(samples: &[f64], target: f64) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let _ = target;
        (mean, (var / n).sqrt())
    }

    #[test]
    fn discrete_isometry_holds_for_weights() {
        let spec = KernelSpec::gamma(-0.3, 1.0).unwrap();
        let g = SimGrid::uniform(1.0 / 64.0, 8.0, 1.0).unwrap();
        let plan = WeightPlan::new(&bss_parts(&spec), &g, &[g.zero_index()]).unwrap();
        let w = plan.row_weights(0);
        let var: f64 = w.iter().map(|x| x * x * g.dt()).sum();
        let exact = phi_l2_mass(&spec).unwrap();
        // the adjacent cell is variance matched, the rest are cell means
        assert!((var / exact - 1.0).abs() < 0.02, "{var} vs {exact}");
    }

    #[test]
    fn zero_volatility_gives_zero_path() {
        let spec = KernelSpec::gamma(0.25, 1.0).unwrap();
        let g = bss_grid(&spec, 1.0 / 32.0, 1.0, 1e-3).unwrap();
        let y = simulate_bss(&spec, &SigmaModel::Constant(0.0), &g, 1).unwrap();
        assert!(y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn bss_variance_and_lag_covariance() {
        let spec = KernelSpec::gamma(0.25, 1.0).unwrap();
        let dt = 1.0 / 64.0;
        let g = bss_grid(&spec, dt, 1.0, 1e-3).unwrap();
        let rows = [g.zero_index(), g.zero_index() + 64];
        let plan = WeightPlan::new(&bss_parts(&spec), &g, &rows).unwrap();
        let (mut v0, mut c1) = (Vec::new(), Vec::new());
        for seed in 0..4000 {
            let n = Noise::generate(&SigmaModel::Constant(1.0), &g, seed).unwrap();
            let y = plan.apply(&n.modulated());
            v0.push(y[0] * y[0]);
            c1.push(y[0] * y[1]);
        }
        let m = CovModel::for_gamma_kernel(&spec, 1.0).unwrap();
        let (mean, se) = mc_check(&v0, 0.0);
        assert!((mean - whittle_matern(&m, 0.0)).abs() < 3.0 * se + 0.01);
        let (mean, se) = mc_check(&c1, 0.0);
        assert!((mean - whittle_matern(&m, 1.0)).abs() < 3.0 * se + 0.01);
    }

    #[test]
    fn x_starts_at_zero_and_matches_btilde_without_past() {
        let g = SimGrid::uniform(1.0 / 32.0, 4.0, 1.0).unwrap();
        for alpha in [-0.3, 0.25] {
            let spec = KernelSpec::gamma(alpha, 1.0).unwrap();
            let d = DrivenPaths::generate(
                &spec,
                &SigmaModel::Constant(1.0),
                &g,
                5,
                &[ProcessKind::X, ProcessKind::BTildeAlpha],
            )
            .unwrap();
            assert_eq!(d.path(ProcessKind::X).unwrap()[0], 0.0);
            let mut n = d.noise.clone();
            for v in &mut n.increments[..g.zero_index()] {
                *v = 0.0;
            }
            let x0 = eval_future(&mvn_parts(alpha), &g, &n).unwrap();
            let bt = d.path(ProcessKind::BTildeAlpha).unwrap();
            for (a, b) in x0.iter().zip(bt) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn x_variance_matches_c_alpha() {
        let alpha = 0.25;
        let g = fbm_grid(0.75, 1.0 / 32.0, 1.0, 1e-3).unwrap();
        let plan = WeightPlan::new(&mvn_parts(alpha), &g, &[g.zero_index() + 32]).unwrap();
        let mut v = Vec::new();
        for seed in 0..4000 {
            let n = Noise::generate(&SigmaModel::Constant(1.0), &g, seed).unwrap();
            v.push(plan.apply(&n.modulated())[0].powi(2));
        }
        let (mean, se) = mc_check(&v, 0.0);
        let c = c_alpha(alpha).unwrap();
        assert!((mean - c).abs() < 3.0 * se, "{mean} vs {c} ± {se}");
    }

    #[test]
    fn half_hurst_reproduces_brownian_motion() {
        let g = fbm_grid(0.5, 1.0 / 64.0, 1.0, 1e-3).unwrap();
        let b = simulate_fbm(0.5, &g, 9).unwrap();
        let n = Noise::generate(&SigmaModel::Constant(1.0), &g, 9).unwrap();
        assert_eq!(b, brownian_path(&g, &n.increments));
    }

    #[test]
    fn vmfbm_split_identity() {
        let g = SimGrid::with_far_field(1.0 / 16.0, 32, 16, 500.0).unwrap();
        let model = SigmaModel::ExpOu { theta: 1.0, independent: false };
        let noise = Noise::generate(&model, &g, 3).unwrap();
        let p = vmfbm_from_noise(0.7, &g, &noise).unwrap();
        for i in 0..p.times.len() {
            assert!((p.x[i] - p.a[i] - p.direct[i]).abs() < 1e-12);
            if p.times[i] >= 0.0 {
                assert_eq!(p.a[i], 0.0);
            }
        }
        // unit volatility collapses to fBm
        let unit = Noise { increments: noise.increments.clone(), sigma: vec![1.0; noise.sigma.len()] };
        let v = vmfbm_from_noise(0.7, &g, &unit).unwrap();
        let f = eval_future(&mvn_parts(0.2), &g, &unit).unwrap();
        let z = v.times.iter().position(|t| *t == 0.0).unwrap();
        for (a, b) in v.direct[z..].iter().zip(&f) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn truncation_is_certified() {
        let spec = KernelSpec::power(0.25, 1.0).unwrap();
        let shallow = SimGrid::uniform(0.1, 2.0, 1.0).unwrap();
        assert!(matches!(
            simulate_bss(&spec, &SigmaModel::Constant(1.0), &shallow, 1),
            Err(Error::Truncation { .. })
        ));
        let g = bss_grid(&spec, 0.1, 1.0, 1e-3).unwrap();
        assert!(simulate_bss(&spec, &SigmaModel::Constant(1.0), &g, 1).is_ok());
    }

    #[test]
    fn seeds_are_deterministic() {
        let spec = KernelSpec::gamma(0.1, 2.0).unwrap();
        let g = bss_grid(&spec, 1.0 / 32.0, 1.0, 1e-3).unwrap();
        let model = SigmaModel::ExpOu { theta: 2.0, independent: true };
        let a = DrivenPaths::generate(&spec, &model, &g, 42, &[ProcessKind::Y, ProcessKind::X]).unwrap();
        let b = DrivenPaths::generate(&spec, &model, &g, 42, &[ProcessKind::Y, ProcessKind::X]).unwrap();
        assert_eq!(a, b);
        assert!(a.to_csv().starts_with("t,X,Y\n"));
    }
}
