//! Splitting of the semistationary process into a Volterra part and an
//! absolutely continuous part.
//!
//! With `Y^X_t = ∫ L(t-s) dX_s` and `V = Y^X - Y`:
//!
//! * `U¹_t = ∫ [L(0)-L(t-s)] K(t,s) σ dB`
//! * `U²_t = Y^X_t - L(0) X_t`
//! * `U³_t = -∫_{s<0} L(t-s)(-s)^α σ dB`
//!
//! so that `V = U¹ + U² + U³`, and `Y = L(0) B^{H,σ} + U + A` with
//! `U = -(U¹ + U³)`. The rates `uⁱ = dUⁱ/dt` are computed from their own
//! kernels so the fundamental theorem of calculus becomes a check.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::{check_assumption1, pos_pow, KernelSpec, RealFn};
use crate::noise_sim::{bss_parts, mvn_parts, vmfbm_at_rows, KernelParts, Noise, SimGrid, WeightPlan};
use crate::quad::{integrate_to_infinity, tanh_sinh, QuadratureSpec};
use crate::wiener::translation_parts;

/// Every path of the decomposition on `0, dt, ..., T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    pub yx: Vec<f64>,
    pub v: Vec<f64>,
    pub x: Vec<f64>,
    /// `U¹, U², U³`.
    pub u_level: [Vec<f64>; 3],
    /// `u¹, u², u³`; `u²` from its Riemann-sum form.
    pub u_rate: [Vec<f64>; 3],
    /// `u²` as the Wiener integral `∫ L'(t-s) dX_s`.
    pub u2_dual: Vec<f64>,
    /// `U = -(U¹ + U³)`.
    pub u: Vec<f64>,
    pub b_h: Vec<f64>,
    /// `L(0)·A`, zero for `t ≥ 0`.
    pub a: Vec<f64>,
    /// `max_t |V - U¹ - U² - U³|`.
    pub identity_residual: f64,
    /// `max_t |Y - L(0)B^{H,σ} - U - A|`.
    pub reconstruction_residual: f64,
    /// `max_t max(|Y|, |Y^X|)`, the scale of the two residuals.
    pub scale: f64,
}

impl DecompositionResult {
    /// `t,Y,YX,V,u1,u2,u3`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,Y,YX,V,u1,u2,u3\n");
        for k in 0..self.times.len() {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.times[k], self.y[k], self.yx[k], self.v[k], self.u_rate[0][k], self.u_rate[1][k], self.u_rate[2][k]
            ));
        }
        s
    }
}

/// Weight plans for every process of the decomposition on one grid.
pub struct DecompositionPlans {
    spec: KernelSpec,
    grid: SimGrid,
    y: WeightPlan,
    yx: WeightPlan,
    x_uniform: WeightPlan,
    u1: WeightPlan,
    u3: WeightPlan,
    u1_rate: WeightPlan,
    u3_rate: WeightPlan,
    u2_dual: WeightPlan,
    /// `L''(m·dt)` for `m = 0, 1, ...`.
    l2_lags: Vec<f64>,
}

fn require_assumption(spec: &KernelSpec) -> Result<()> {
    let r = check_assumption1(spec);
    if !r.passes {
        return Err(Error::Assumption(r.detail));
    }
    Ok(())
}

/// Uniform grid on `[-t_trunc, horizon]`; the Riemann form of `u²` needs
/// `X` at every grid point, so geometric far cells are not used here.
pub fn decomposition_grid(dt: f64, horizon: f64, t_trunc: f64) -> Result<SimGrid> {
    SimGrid::uniform(dt, t_trunc, horizon)
}

impl DecompositionPlans {
    pub fn new(spec: &KernelSpec, grid: &SimGrid) -> Result<Self> {
        require_assumption(spec)?;
        if grid.n_far() > 0 {
            return Err(Error::InvalidParameter("decomposition needs a uniform grid".into()));
        }
        let alpha = spec.alpha();
        let rows = WeightPlan::future_rows(grid);
        let s = spec.clone();
        let l: RealFn = Arc::new(move |x| s.l(x));
        let s = spec.clone();
        let dl: RealFn = Arc::new(move |x| s.dl(x));
        let s = spec.clone();
        let d2l: RealFn = Arc::new(move |x| s.d2l(x));

        let (s1, s2) = (spec.clone(), spec.clone());
        let u1 = KernelParts::new(alpha)
            .with_lag(Arc::new(move |x: f64| s1.l0_minus_l(x) * pos_pow(x, alpha)), None)
            .with_past_general(Arc::new(move |t: f64, s: f64| -s2.l0_minus_l(t - s) * pos_pow(-s, alpha)));
        let s3 = spec.clone();
        let u3 = KernelParts::new(alpha)
            .with_past_general(Arc::new(move |t: f64, s: f64| -s3.l(t - s) * pos_pow(-s, alpha)));
        // ∂_t K_L(t,s) = -L'(x)x^α + α[L(0)-L(x)]x^{α-1} + L'(t-s)(-s)_+^α, x = t-s
        let (s4, s5) = (spec.clone(), spec.clone());
        let u1_rate = KernelParts::new(alpha)
            .with_lag(
                Arc::new(move |x: f64| {
                    if x <= 0.0 {
                        return 0.0;
                    }
                    -s4.dl(x) * x.powf(alpha) + alpha * s4.l0_minus_l(x) * x.powf(alpha - 1.0)
                }),
                None,
            )
            .with_past_general(Arc::new(move |t: f64, s: f64| s5.dl(t - s) * pos_pow(-s, alpha)));
        let s6 = spec.clone();
        let u3_rate = KernelParts::new(alpha)
            .with_past_general(Arc::new(move |t: f64, s: f64| -s6.dl(t - s) * pos_pow(-s, alpha)));

        let n = grid.n_cells();
        let l2_lags = (0..=n).map(|m| spec.d2l(m as f64 * grid.dt())).collect();
        Ok(Self {
            spec: spec.clone(),
            grid: grid.clone(),
            y: WeightPlan::new(&bss_parts(spec), grid, &rows)?,
            yx: WeightPlan::new(&translation_parts(l, dl.clone(), alpha), grid, &rows)?,
            x_uniform: WeightPlan::new(&mvn_parts(alpha), grid, &WeightPlan::uniform_rows(grid))?,
            u1: WeightPlan::new(&u1, grid, &rows)?,
            u3: WeightPlan::new(&u3, grid, &rows)?,
            u1_rate: WeightPlan::new(&u1_rate, grid, &rows)?,
            u3_rate: WeightPlan::new(&u3_rate, grid, &rows)?,
            u2_dual: WeightPlan::new(&translation_parts(dl, d2l, alpha), grid, &rows)?,
            l2_lags,
        })
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn evaluate(&self, noise: &Noise) -> Result<DecompositionResult> {
        let grid = &self.grid;
        if noise.increments.len() != grid.n_cells() {
            return Err(Error::InvalidParameter("noise does not match the grid".into()));
        }
        let xs = noise.modulated();
        let l0 = self.spec.l(0.0);
        let dl0 = self.spec.dl(0.0);
        let y = self.y.apply(&xs);
        let yx = self.yx.apply(&xs);
        let x_all = self.x_uniform.apply(&xs);
        let zero = grid.n_past();
        let x: Vec<f64> = x_all[zero..].to_vec();
        let u1 = self.u1.apply(&xs);
        let u3 = self.u3.apply(&xs);
        let u2: Vec<f64> = yx.iter().zip(&x).map(|(a, b)| a - l0 * b).collect();
        let v: Vec<f64> = yx.iter().zip(&y).map(|(a, b)| a - b).collect();
        let r1 = self.u1_rate.apply(&xs);
        let r3 = self.u3_rate.apply(&xs);
        let dt = grid.dt();
        // u²_t = L'(0)X_t + Σ_{t_k<t} L''(t-t_k) X_{t_k} dt
        let r2: Vec<f64> = (0..x.len())
            .map(|k| {
                let j = zero + k;
                let mut acc = 0.0;
                for m in 1..=j {
                    acc += self.l2_lags[m] * x_all[j - m];
                }
                dl0 * x[k] + acc * dt
            })
            .collect();
        let u2_dual = self.u2_dual.apply(&xs);
        let vm = vmfbm_at_rows(self.spec.hurst(), grid, noise, &WeightPlan::future_rows(grid))?;
        let b_h = vm.direct;
        let a: Vec<f64> = vm.a.iter().map(|v| l0 * v).collect();
        let u: Vec<f64> = u1.iter().zip(&u3).map(|(p, q)| -(p + q)).collect();
        let mut identity_residual: f64 = 0.0;
        let mut reconstruction_residual: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in 0..y.len() {
            identity_residual = identity_residual.max((v[k] - u1[k] - u2[k] - u3[k]).abs());
            reconstruction_residual = reconstruction_residual.max((y[k] - l0 * b_h[k] - u[k] - a[k]).abs());
            scale = scale.max(y[k].abs()).max(yx[k].abs());
        }
        Ok(DecompositionResult {
            times: grid.future_times(),
            y,
            yx,
            v,
            x,
            u_level: [u1, u2, u3],
            u_rate: [r1, r2, r3],
            u2_dual,
            u,
            b_h,
            a,
            identity_residual,
            reconstruction_residual,
            scale,
        })
    }
}

/// `Y^X` on `0, dt, ..., T`.
pub fn compute_yx(spec: &KernelSpec, noise: &Noise, grid: &SimGrid) -> Result<Vec<f64>> {
    require_assumption(spec)?;
    let s = spec.clone();
    let l: RealFn = Arc::new(move |x| s.l(x));
    let s = spec.clone();
    let dl: RealFn = Arc::new(move |x| s.dl(x));
    let plan = WeightPlan::new(&translation_parts(l, dl, spec.alpha()), grid, &WeightPlan::future_rows(grid))?;
    Ok(plan.apply(&noise.modulated()))
}

/// Full decomposition of one replication.
pub fn compute_u_processes(spec: &KernelSpec, noise: &Noise, grid: &SimGrid) -> Result<DecompositionResult> {
    DecompositionPlans::new(spec, grid)?.evaluate(noise)
}

/// `(B^{H,σ}, U, A)` with `Y = L(0)B^{H,σ} + U + A`, and the reconstruction residual.
pub fn corollary_split(spec: &KernelSpec, noise: &Noise, grid: &SimGrid) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
    let r = compute_u_processes(spec, noise, grid)?;
    Ok((r.b_h, r.u, r.a, r.reconstruction_residual))
}

/// `max_t |∫_0^t uⁱ - (Uⁱ_t - Uⁱ_0)|` with the trapezoid rule, for each `i`.
pub fn ftc_residuals(result: &DecompositionResult) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let (rate, level) = (&result.u_rate[i], &result.u_level[i]);
        let mut integral = 0.0;
        let mut worst: f64 = 0.0;
        for k in 1..rate.len() {
            let d = result.times[k] - result.times[k - 1];
            integral += 0.5 * d * (rate[k] + rate[k - 1]);
            worst = worst.max((integral - (level[k] - level[0])).abs());
        }
        out[i] = worst;
    }
    out
}

/// FTC residuals on a mesh and its coarsening, with the observed orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FtcReport {
    pub fine: [f64; 3],
    pub coarse: [f64; 3],
    /// `log₂(coarse / fine)`.
    pub order: [f64; 3],
}

impl FtcReport {
    pub fn from_residuals(fine: [f64; 3], coarse: [f64; 3]) -> Self {
        let mut order = [0.0; 3];
        for i in 0..3 {
            order[i] = if fine[i] == 0.0 && coarse[i] == 0.0 {
                f64::INFINITY
            } else {
                (coarse[i] / fine[i]).log2()
            };
        }
        Self { fine, coarse, order }
    }
}

/// FTC check for one replication on `grid` and on `grid.coarsen()`.
pub fn verify_ftc(spec: &KernelSpec, noise: &Noise, grid: &SimGrid) -> Result<FtcReport> {
    let fine = ftc_residuals(&compute_u_processes(spec, noise, grid)?);
    let cg = grid.coarsen()?;
    let coarse = ftc_residuals(&compute_u_processes(spec, &noise.coarsen(grid)?, &cg)?);
    Ok(FtcReport::from_residuals(fine, coarse))
}

/// `∫_0^∞ ([L(0)-L(r)] r^{α-1})² dr`, the squared mass of the singular part
/// of `∂_t K_L`.
pub fn rate_kernel_l2_mass(spec: &KernelSpec) -> Result<f64> {
    let alpha = spec.alpha();
    let g = |r: f64| (spec.l0_minus_l(r) * r.powf(alpha - 1.0)).powi(2);
    let head = tanh_sinh(g, 0.0, 1.0, 1e-10)?;
    let tail = integrate_to_infinity(g, 1.0, 1.0, 1e-9, &QuadratureSpec::default())?;
    Ok(head + tail.value)
}
