//! The operator `𝒦_K f`, Wiener-type integrals `∫ f dX` against the
//! Mandelbrot–Van Ness Volterra process, and the integrability checks around
//! them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fit::{log_space, loglog_fit};
use crate::kernels::{check_assumption1, eval_mvn_kernel, pos_pow, KernelSpec, LFamily, RealFn};
use crate::noise_sim::{mvn_parts, KernelParts, Noise, SimGrid, WeightPlan};
use crate::stats::ExactSum;
use crate::quad::{integrate, integrate_to_infinity, tanh_sinh, QuadratureSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrandFamily {
    /// `f(s) = e^{-λ(t-s)}`
    Exp { lambda: f64 },
    /// `f(s) = (1+t-s)^{-(α+β)}`
    PowerTail { beta: f64, alpha: f64 },
    /// `f(s) = L(t-s)`
    ShiftedL,
    /// `f(s) = L'(t-s)`
    ShiftedLPrime,
    Constant(f64),
    Custom(String),
}

/// A deterministic integrand `f` on `(-∞, t]` with its derivative.
///
/// Translation families `f(s) = h(t-s)` also carry `h` and `h'`, which
/// makes the integral available as a process in `t`.
#[derive(Clone)]
pub struct IntegrandSpec {
    pub family: IntegrandFamily,
    pub t: f64,
    f: RealFn,
    df: RealFn,
    shape: Option<(RealFn, RealFn)>,
    /// Decay exponent `p` of `|f(s)| = O(|s|^{-p})` as `s → -∞`.
    pub tail_exponent: f64,
}

impl std::fmt::Debug for IntegrandSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IntegrandSpec")
            .field("family", &self.family)
            .field("t", &self.t)
            .field("tail_exponent", &self.tail_exponent)
            .finish_non_exhaustive()
    }
}

impl IntegrandSpec {
    /// `f(s) = h(t-s)`.
    pub fn translation(family: IntegrandFamily, t: f64, h: RealFn, dh: RealFn, tail_exponent: f64) -> Self {
        let (h1, dh1) = (h.clone(), dh.clone());
        Self {
            family,
            t,
            f: Arc::new(move |s| h1(t - s)),
            df: Arc::new(move |s| -dh1(t - s)),
            shape: Some((h, dh)),
            tail_exponent,
        }
    }

    pub fn exp(lambda: f64, t: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive (got {lambda})")));
        }
        Ok(Self::translation(
            IntegrandFamily::Exp { lambda },
            t,
            Arc::new(move |x: f64| (-lambda * x).exp()),
            Arc::new(move |x: f64| -lambda * (-lambda * x).exp()),
            f64::INFINITY,
        ))
    }

    pub fn power_tail(beta: f64, alpha: f64, t: f64) -> Result<Self> {
        let g = alpha + beta;
        if !(g > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha + beta must be positive (got {g})")));
        }
        Ok(Self::translation(
            IntegrandFamily::PowerTail { beta, alpha },
            t,
            Arc::new(move |x: f64| (-g * x.ln_1p()).exp()),
            Arc::new(move |x: f64| -g * (-(g + 1.0) * x.ln_1p()).exp()),
            g,
        ))
    }

    pub fn shifted_l(spec: &KernelSpec, t: f64) -> Self {
        let (a, b) = (spec.clone(), spec.clone());
        Self::translation(
            IntegrandFamily::ShiftedL,
            t,
            Arc::new(move |x| a.l(x)),
            Arc::new(move |x| b.dl(x)),
            l_tail(spec),
        )
    }

    pub fn shifted_l_prime(spec: &KernelSpec, t: f64) -> Self {
        let (a, b) = (spec.clone(), spec.clone());
        Self::translation(
            IntegrandFamily::ShiftedLPrime,
            t,
            Arc::new(move |x| a.dl(x)),
            Arc::new(move |x| b.d2l(x)),
            l_tail(spec) + 1.0,
        )
    }

    pub fn constant(c: f64, t: f64) -> Self {
        Self::translation(
            IntegrandFamily::Constant(c),
            t,
            Arc::new(move |_| c),
            Arc::new(|_| 0.0),
            if c == 0.0 { f64::INFINITY } else { 0.0 },
        )
    }

    pub fn custom(name: &str, t: f64, f: RealFn, df: RealFn, tail_exponent: f64) -> Self {
        Self {
            family: IntegrandFamily::Custom(name.to_string()),
            t,
            f,
            df,
            shape: None,
            tail_exponent,
        }
    }

    /// `a·f + b·g`; both must share the same `t`.
    pub fn combine(a: f64, f: &IntegrandSpec, b: f64, g: &IntegrandSpec) -> Result<Self> {
        if f.t != g.t {
            return Err(Error::InvalidParameter("combined integrands must share t".into()));
        }
        let tail = f.tail_exponent.min(g.tail_exponent);
        let name = IntegrandFamily::Custom("combination".into());
        match (&f.shape, &g.shape) {
            (Some((h1, d1)), Some((h2, d2))) => {
                let (h1, h2, d1, d2) = (h1.clone(), h2.clone(), d1.clone(), d2.clone());
                Ok(Self::translation(
                    name,
                    f.t,
                    Arc::new(move |x| a * h1(x) + b * h2(x)),
                    Arc::new(move |x| a * d1(x) + b * d2(x)),
                    tail,
                ))
            }
            _ => {
                let (f1, f2, d1, d2) = (f.f.clone(), g.f.clone(), f.df.clone(), g.df.clone());
                Ok(Self::custom(
                    "combination",
                    f.t,
                    Arc::new(move |s| a * f1(s) + b * f2(s)),
                    Arc::new(move |s| a * d1(s) + b * d2(s)),
                    tail,
                ))
            }
        }
    }

    /// Same translation family evaluated at another time.
    pub fn at_time(&self, t: f64) -> Result<Self> {
        match &self.shape {
            Some((h, dh)) => Ok(Self::translation(self.family.clone(), t, h.clone(), dh.clone(), self.tail_exponent)),
            None => Err(Error::InvalidParameter("only translation integrands can be moved in time".into())),
        }
    }

    pub fn f(&self, s: f64) -> f64 {
        (self.f)(s)
    }

    pub fn df(&self, s: f64) -> f64 {
        (self.df)(s)
    }

    pub fn shape(&self) -> Option<(&RealFn, &RealFn)> {
        self.shape.as_ref().map(|(h, d)| (h, d))
    }
}

fn l_tail(spec: &KernelSpec) -> f64 {
    match spec.family() {
        LFamily::Gamma { .. } => f64::INFINITY,
        LFamily::Power { beta } => spec.alpha() + beta,
        LFamily::Custom(c) => c.zeta0 - 1.0,
    }
}

fn quad_spec(q: &QuadratureSpec) -> QuadratureSpec {
    *q
}

/// `∫_s^{s+δ} g(u) (u-s)^α du` via `u = s + v^{1/(α+1)}`.
fn singular_head(g: impl Fn(f64) -> f64, s: f64, delta: f64, alpha: f64, q: &QuadratureSpec) -> Result<f64> {
    let p = alpha + 1.0;
    let vmax = delta.powf(p);
    let inner = integrate(|v: f64| g(s + v.powf(1.0 / p)), 0.0, vmax, &quad_spec(q))?;
    Ok(inner / p)
}

/// Adaptive integral over `[a, b]` split at `0` when it lies inside.
fn split_at_zero(g: impl Fn(f64) -> f64, a: f64, b: f64, q: &QuadratureSpec) -> Result<f64> {
    if a < 0.0 && b > 0.0 {
        Ok(integrate(&g, a, 0.0, q)? + integrate(&g, 0.0, b, q)?)
    } else {
        integrate(&g, a, b, q)
    }
}

/// Both forms of `𝒦_K f(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KkForms {
    /// `f(s)K(t,s) + ∫_s^t [f(u)-f(s)] ∂_u K(u,s) du`
    pub derivative: f64,
    /// `f(t)K(t,s) - ∫_s^t K(r,s) df(r)`
    pub stieltjes: f64,
}

pub fn kk_operator_forms(f: &IntegrandSpec, alpha: f64, t: f64, s: f64, quad: &QuadratureSpec) -> Result<KkForms> {
    if !(s < t) {
        return Err(Error::Domain(format!("operator needs s < t (got s = {s}, t = {t})")));
    }
    let fs = f.f(s);
    let k = eval_mvn_kernel(alpha, t, s);
    let delta = (t - s).min(1.0);
    // derivative form
    let quotient = |u: f64| {
        let d = u - s;
        if d <= 0.0 {
            0.0
        } else {
            (f.f(u) - fs) / d
        }
    };
    let head = if alpha == 0.0 {
        0.0
    } else {
        // ∫ [f(u)-f(s)] α (u-s)^{α-1} du = α ∫ quotient(u) (u-s)^α du
        alpha * singular_head(quotient, s, delta, alpha, quad)?
    };
    let tail = if s + delta < t && alpha != 0.0 {
        split_at_zero(|u: f64| (f.f(u) - fs) * alpha * (u - s).powf(alpha - 1.0), s + delta, t, quad)?
    } else {
        0.0
    };
    let derivative = fs * k + head + tail;
    // Stieltjes form with the (-s)_+^α part integrated exactly
    let head = singular_head(|r| f.df(r), s, delta, alpha, quad)?;
    let tail = if s + delta < t {
        split_at_zero(|r: f64| pos_pow(r - s, alpha) * f.df(r), s + delta, t, quad)?
    } else {
        0.0
    };
    let stieltjes = f.f(t) * k - (head + tail) + pos_pow(-s, alpha) * (f.f(t) - fs);
    Ok(KkForms { derivative, stieltjes })
}

/// `𝒦_K f(t, s)`; fails when the two forms disagree beyond `10⁻⁷`.
pub fn kk_operator(f: &IntegrandSpec, alpha: f64, t: f64, s: f64, quad: &QuadratureSpec) -> Result<f64> {
    let forms = kk_operator_forms(f, alpha, t, s, quad)?;
    let scale = 1.0 + forms.derivative.abs();
    if (forms.derivative - forms.stieltjes).abs() > 1e-7 * scale {
        return Err(Error::Domain(format!(
            "derivative form {} and Stieltjes form {} disagree at (t, s) = ({t}, {s})",
            forms.derivative, forms.stieltjes
        )));
    }
    Ok(forms.derivative)
}

/// `G_h(x) = h(0)x^α + ∫_0^x (x-y)^α h'(y) dy`, the lag part of
/// `𝒦_K[h(t-·)](t, s) = G_h(t-s) - h(t-s)(-s)_+^α`.
pub fn translation_lag(h0: f64, dh: &dyn Fn(f64) -> f64, alpha: f64, x: f64, quad: &QuadratureSpec) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    let delta = x.min(1.0);
    // near y = x the weight (x-y)^α is singular; substitute there
    // y = x - v puts the singular end at v = 0
    let head = singular_head(|v: f64| dh(x - v), 0.0, delta, alpha, quad)?;
    let rest = if x > delta {
        integrate(|y: f64| (x - y).powf(alpha) * dh(y), 0.0, x - delta, quad)?
    } else {
        0.0
    };
    Ok(h0 * pos_pow(x, alpha) + head + rest)
}

/// `(b + w)^p - b^p` for `b ≥ 0`, `w > 0`.
#[inline]
fn shifted_pow_gap(b: f64, w: f64, p: f64) -> f64 {
    if b <= 0.0 {
        return w.powf(p);
    }
    b.powf(p) * (p * (w / b).ln_1p()).exp_m1()
}

/// Exact mean of `G_h` over `[x0, x1]`.
pub fn translation_lag_mean(h0: f64, dh: &dyn Fn(f64) -> f64, alpha: f64, x0: f64, x1: f64, quad: &QuadratureSpec) -> Result<f64> {
    let p = alpha + 1.0;
    let w = x1 - x0;
    let head = h0 * shifted_pow_gap(x0, w, p) / p;
    let a = if x0 > 0.0 {
        integrate(|y: f64| dh(y) * shifted_pow_gap(x0 - y, w, p), 0.0, x0, quad)?
    } else {
        0.0
    };
    let b = integrate(|y: f64| dh(y) * (x1 - y).powf(p), x0, x1, quad)?;
    Ok((head + (a + b) / p) / w)
}

fn default_quad() -> QuadratureSpec {
    QuadratureSpec::default().with_rel_tol(1e-13)
}

/// Kernel parts of `t ↦ ∫ h(t-s) dX_s`: lag `G_h` with exact cell means and
/// the past part `-h(t-s)(-s)^α`.
pub fn translation_parts(h: RealFn, dh: RealFn, alpha: f64) -> KernelParts {
    let h0 = h(0.0);
    let (d1, d2) = (dh.clone(), dh);
    let q = default_quad();
    let hp = h.clone();
    KernelParts::new(alpha)
        .with_lag(
            Arc::new(move |x| translation_lag(h0, &*d1, alpha, x, &q).unwrap_or(f64::NAN)),
            Some(Arc::new(move |x0, x1| {
                translation_lag_mean(h0, &*d2, alpha, x0, x1, &q).unwrap_or(f64::NAN)
            })),
        )
        .with_past_general(Arc::new(move |t: f64, s: f64| -hp(t - s) * pos_pow(-s, alpha)))
}

/// How the Wiener integral is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WienerScheme {
    /// Exact cell means of `𝒦_K f` for translation integrands.
    Translation,
    /// Cell means of `𝒦_K f` by quadrature of its Stieltjes form.
    CellQuadrature,
    /// `f(t)X_t - Σ f'(p_i) Δ_i X_{p_i}` on the grid's own `X` path.
    GridRiemann,
}

/// Cell mean over `[a, b]`, `b ≤ t`, of the lag piece
/// `f(t)(t-s)^α - ∫_s^t (r-s)^α f'(r) dr` of `𝒦_K f(t, s)`. The remaining
/// piece is `-f(s)(-s)_+^α`.
pub fn kk_cell_mean(f: &IntegrandSpec, alpha: f64, t: f64, a: f64, b: f64, quad: &QuadratureSpec) -> Result<f64> {
    let p = alpha + 1.0;
    let w = b - a;
    // ∫_a^{min(b,r)} (r-s)^α ds
    let j = |r: f64| {
        let c = b.min(r);
        (pos_pow(r - a, p) - pos_pow(r - c, p)) / p
    };
    let kt = j(t);
    let mut inner = integrate(|r: f64| f.df(r) * j(r), a, b, quad)?;
    if t > b {
        inner += split_at_zero(|r: f64| f.df(r) * j(r), b, t, quad)?;
    }
    Ok((f.f(t) * kt - inner) / w)
}

/// Membership of an integrand in the domain of the Wiener integral.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub in_h: bool,
    /// Fitted exponent of `(𝒦_K f(t, s))²` as `s → -∞`.
    pub tail_exponent_fit: f64,
    pub r_squared: f64,
    pub confident: bool,
    /// Sufficient condition on `L` for shifted-`L` integrands.
    pub analytic_condition: Option<bool>,
}

/// Margin below `-1` required of a fitted tail exponent.
const TAIL_MARGIN: f64 = 0.05;

/// Fit the decay of `g` over `|s| ∈ [10⁴, 10⁵]` on the negative axis.
fn tail_fit(g: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let xs = log_space(1e4, 1e5, 9);
    let vals: Vec<f64> = xs.iter().map(|&x| g(-x).map(f64::abs)).collect::<Result<_>>()?;
    if vals.iter().all(|v| *v == 0.0) {
        return Ok((f64::NEG_INFINITY, 1.0));
    }
    let fit = loglog_fit(&xs, &vals)?;
    Ok((fit.slope, fit.r_squared))
}

pub fn membership_check(f: &IntegrandSpec, alpha: f64, t: f64, spec: Option<&KernelSpec>) -> Result<MembershipReport> {
    let q = QuadratureSpec::default().with_rel_tol(1e-10);
    let (exp, r2) = tail_fit(|s| kk_operator_forms(f, alpha, t, s, &q).map(|v| v.derivative.powi(2)))?;
    let analytic_condition = match (&f.family, spec) {
        (IntegrandFamily::ShiftedL | IntegrandFamily::ShiftedLPrime, Some(k)) => Some(check_assumption1(k).passes),
        _ => None,
    };
    let confident = r2 >= 0.99 || exp == f64::NEG_INFINITY;
    let in_h = exp < -1.0 - TAIL_MARGIN && analytic_condition.unwrap_or(true);
    Ok(MembershipReport {
        in_h,
        tail_exponent_fit: exp,
        r_squared: r2,
        confident,
        analytic_condition,
    })
}

/// Total-variation condition `∫ |s|^{α+1/2} |f'(s)| ds < ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsConditionReport {
    pub converges: bool,
    pub tail_exponent_fit: f64,
    pub r_squared: f64,
    /// `(W, ∫_{-W}^{0} |s|^{α+1/2}|f'(s)| ds)` for growing windows.
    pub windows: Vec<(f64, f64)>,
}

pub fn check_ls_conditions(f: &IntegrandSpec, alpha: f64, t: f64) -> Result<LsConditionReport> {
    let _ = t;
    let g = |s: f64| pos_pow(-s, alpha + 0.5) * f.df(s).abs();
    let (exp, r2) = tail_fit(|s| Ok(g(s)))?;
    let q = QuadratureSpec::default().with_rel_tol(1e-10);
    let mut windows = Vec::new();
    let mut acc = 0.0;
    let mut lo = 0.0;
    for k in 0..5 {
        let w = 10f64.powi(k);
        acc += integrate(|x: f64| g(-x), lo, w, &q)?;
        windows.push((w, acc));
        lo = w;
    }
    Ok(LsConditionReport {
        converges: exp < -1.0 - TAIL_MARGIN,
        tail_exponent_fit: exp,
        r_squared: r2,
        windows,
    })
}

/// `X` at every uniform point of the grid, `-T_trunc` to `T`. The kernel
/// carries the indicator of `s < t`, so for `t < 0` only noise before `t`
/// enters.
pub fn x_at_uniform_points(alpha: f64, noise: &Noise, grid: &SimGrid) -> Result<Vec<f64>> {
    let plan = WeightPlan::new(&mvn_parts(alpha), grid, &WeightPlan::uniform_rows(grid))?;
    Ok(plan.apply(&noise.modulated()))
}

/// `f(t)X_t - Σ X_{t_k}(f(t_{k+1}) - f(t_k))` over uniform points `t_k < t`.
/// `x_path` holds `X` at every uniform point as from [`x_at_uniform_points`];
/// `X` vanishes before the first noise cell, so nothing is lost to the left.
pub fn lebesgue_stieltjes(f: &IntegrandSpec, x_path: &[f64], grid: &SimGrid, t: f64) -> Result<f64> {
    let j = grid.index_of_time(t)? - grid.first_uniform();
    let pts = &grid.points()[grid.first_uniform()..];
    if x_path.len() != pts.len() {
        return Err(Error::InvalidParameter("X path must cover every uniform grid point".into()));
    }
    if grid.n_far() > 0 {
        return Err(Error::InvalidParameter("the Stieltjes form needs a grid without far-field cells".into()));
    }
    let mut acc = ExactSum::new();
    for k in 0..j {
        acc.add(x_path[k] * (f.f(pts[k + 1]) - f.f(pts[k])));
    }
    Ok(f.f(t) * x_path[j] - acc.value())
}

/// `∫ f dX` at time `t = f.t`.
pub fn wiener_integral(f: &IntegrandSpec, alpha: f64, noise: &Noise, grid: &SimGrid, scheme: WienerScheme) -> Result<f64> {
    let t = f.t;
    let j = grid.index_of_time(t)?;
    match scheme {
        WienerScheme::Translation => {
            let (h, dh) = f
                .shape()
                .ok_or_else(|| Error::InvalidParameter("translation scheme needs a translation integrand".into()))?;
            let plan = WeightPlan::new(&translation_parts(h.clone(), dh.clone(), alpha), grid, &[j])?;
            Ok(plan.apply_direct(&noise.modulated())[0])
        }
        WienerScheme::CellQuadrature => {
            let q = QuadratureSpec::default().with_rel_tol(1e-11);
            let (ff, fp) = (f.clone(), f.clone());
            let parts = KernelParts::new(alpha)
                .with_cells(Arc::new(move |t, a, b| {
                    kk_cell_mean(&ff, alpha, t, a, b, &q).unwrap_or(f64::NAN)
                }))
                .with_past_general(Arc::new(move |_t: f64, s: f64| -fp.f(s) * pos_pow(-s, alpha)));
            let plan = WeightPlan::new(&parts, grid, &[j])?;
            let v = plan.apply_direct(&noise.modulated())[0];
            if !v.is_finite() {
                return Err(Error::Quadrature {
                    a: grid.points()[0],
                    b: t,
                    estimate: v,
                    error: f64::NAN,
                    panels: 0,
                });
            }
            Ok(v)
        }
        WienerScheme::GridRiemann => {
            let x = x_at_uniform_points(alpha, noise, grid)?;
            let pts = &grid.points()[grid.first_uniform()..];
            let jj = j - grid.first_uniform();
            let mut acc = 0.0;
            for i in 0..jj {
                acc += f.df(pts[i]) * (pts[i + 1] - pts[i]) * x[i];
            }
            Ok(f.f(t) * x[jj] - acc)
        }
    }
}

/// `∫ f dX` after confirming membership of `f`.
pub fn wiener_integral_checked(f: &IntegrandSpec, alpha: f64, noise: &Noise, grid: &SimGrid) -> Result<f64> {
    let m = membership_check(f, alpha, f.t, None)?;
    if !m.in_h {
        return Err(Error::Membership(format!(
            "fitted tail exponent {:.3} of (𝒦f)² is not below -1",
            m.tail_exponent_fit
        )));
    }
    let scheme = if f.shape().is_some() {
        WienerScheme::Translation
    } else {
        WienerScheme::CellQuadrature
    };
    wiener_integral(f, alpha, noise, grid, scheme)
}

/// `t ↦ ∫ h(t-s) dX_s` at `0, dt, ..., T`.
pub fn wiener_path(h: RealFn, dh: RealFn, alpha: f64, noise: &Noise, grid: &SimGrid) -> Result<Vec<f64>> {
    let plan = WeightPlan::new(&translation_parts(h, dh, alpha), grid, &WeightPlan::future_rows(grid))?;
    Ok(plan.apply(&noise.modulated()))
}

/// `∫_{-∞}^t ∫_s^t ... ` second moment `∫ (𝒦_K f(t, s))² ds` by quadrature.
pub fn kk_l2_norm(f: &IntegrandSpec, alpha: f64, t: f64) -> Result<f64> {
    let q = QuadratureSpec::default().with_rel_tol(1e-10);
    let g = |y: f64| {
        kk_operator_forms(f, alpha, t, t - y, &q)
            .map(|v| v.derivative.powi(2))
            .unwrap_or(f64::NAN)
    };
    let head = tanh_sinh(g, 0.0, t.abs().max(1.0), 1e-9)?;
    let tail = integrate_to_infinity(g, t.abs().max(1.0), 1.0, 1e-8, &q)?;
    Ok(head + tail.value)
}

/// Solution of the Langevin equation driven by `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct LangevinPath {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    /// Initial condition `ξ = Z_0`.
    pub xi: f64,
}

/// `Z_t = X_t - λ Σ_{t_k < t} e^{-λ(t-t_k)} X_{t_k} Δt` on `0, dt, ..., T`.
pub fn langevin_solve(lambda: f64, alpha: f64, noise: &Noise, grid: &SimGrid) -> Result<LangevinPath> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive (got {lambda})")));
    }
    let x = x_at_uniform_points(alpha, noise, grid)?;
    Ok(langevin_from_x(lambda, &x, grid))
}

/// As [`langevin_solve`] from a precomputed `X` at every uniform point.
pub fn langevin_from_x(lambda: f64, x: &[f64], grid: &SimGrid) -> LangevinPath {
    let pts = &grid.points()[grid.first_uniform()..];
    let zero = grid.n_past();
    let mut r = 0.0;
    let mut z = Vec::with_capacity(grid.n_future() + 1);
    for k in 0..pts.len() {
        if k > 0 {
            let d = pts[k] - pts[k - 1];
            r = (-lambda * d).exp() * (r + x[k - 1] * d);
        }
        if k >= zero {
            z.push(x[k] - lambda * r);
        }
    }
    LangevinPath {
        times: grid.future_times(),
        xi: z[0],
        z,
    }
}

/// `max_t |Z_t - ξ - X_t + λ ∫_0^t Z|` with the trapezoid rule.
pub fn langevin_residual(lambda: f64, path: &LangevinPath, x_future: &[f64]) -> f64 {
    let mut integral = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..path.z.len() {
        if k > 0 {
            let d = path.times[k] - path.times[k - 1];
            integral += 0.5 * d * (path.z[k] + path.z[k - 1]);
        }
        worst = worst.max((path.z[k] - path.xi - x_future[k] + lambda * integral).abs());
    }
    worst
}

/// Fractional Ornstein–Uhlenbeck process and its absolutely continuous part.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalOu {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    /// `U_t = ∫_{s<0} e^{-λ(t-s)} (-s)^α σ_s dB_s`.
    pub u: Vec<f64>,
}

pub fn fractional_ou(lambda: f64, hurst: f64, noise: &Noise, grid: &SimGrid) -> Result<FractionalOu> {
    if !(lambda > 0.0) || !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter("need lambda > 0 and H in (0,1)".into()));
    }
    let alpha = hurst - 0.5;
    // the weight ∫ e^{-2λ(t-s)} (-s)_+^{2α} ds is finite for every t
    let mass = integrate_to_infinity(
        |y: f64| (-2.0 * lambda * y).exp() * pos_pow(y, 2.0 * alpha),
        0.0,
        1.0,
        1e-10,
        &QuadratureSpec::default(),
    );
    if let Err(e) = mass {
        return Err(e);
    }
    let h: RealFn = Arc::new(move |x: f64| (-lambda * x).exp());
    let dh: RealFn = Arc::new(move |x: f64| -lambda * (-lambda * x).exp());
    let xs = noise.modulated();
    let rows = WeightPlan::future_rows(grid);
    let w = WeightPlan::new(&translation_parts(h.clone(), dh, alpha), grid, &rows)?.apply(&xs);
    let u_parts = KernelParts::new(alpha)
        .with_past_general(Arc::new(move |t: f64, s: f64| (-lambda * (t - s)).exp() * pos_pow(-s, alpha)));
    let u = WeightPlan::new(&u_parts, grid, &rows)?.apply(&xs);
    let z = w.iter().zip(&u).map(|(a, b)| a + b).collect();
    Ok(FractionalOu {
        times: grid.future_times(),
        z,
        u,
    })
}

/// `ℓ_t(s) = ∫_s^t K(r, s) f(r) dr`.
pub fn compute_ell(f: &dyn Fn(f64) -> f64, alpha: f64, t: f64, s: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(s < t) {
        return Ok(0.0);
    }
    let delta = (t - s).min(1.0);
    // K(r, s) = (r-s)^α - (-s)_+^α; the first piece is singular at r = s
    let head = singular_head(f, s, delta, alpha, quad)? - pos_pow(-s, alpha) * integrate(f, s, s + delta, quad)?;
    let tail = if s + delta < t {
        split_at_zero(|r: f64| eval_mvn_kernel(alpha, r, s) * f(r), s + delta, t, quad)?
    } else {
        0.0
    };
    Ok(head + tail)
}

/// `|s|^{α+1} ∫_0^1 [(1-v)^α - 1] f(sv) dv`, the leading part of `ℓ_t(s)`.
pub fn ell_leading_term(f: &dyn Fn(f64) -> f64, alpha: f64, s: f64) -> Result<f64> {
    let a = s.abs();
    let v = tanh_sinh(|v: f64| (alpha * (-v).ln_1p()).exp_m1() * f(s * v), 0.0, 1.0, 1e-13)?;
    Ok(a.powf(alpha + 1.0) * v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllFit {
    /// Fitted exponent of `|ℓ_t(s) - leading term|` in `|s|`.
    pub remainder_exponent: f64,
    /// Fitted exponent of `ℓ_t(s)²` in `|s|`.
    pub square_exponent: f64,
    pub r_squared: f64,
}

/// Regression of the remainder and of `ℓ_t²` over `s ∈ -[10², 10⁴]`.
pub fn ell_asymptotic_fit(f: &dyn Fn(f64) -> f64, alpha: f64, t: f64) -> Result<EllFit> {
    let q = QuadratureSpec::default().with_rel_tol(1e-14);
    let xs = log_space(1e2, 1e4, 13);
    let mut rem = Vec::new();
    let mut sq = Vec::new();
    for &x in &xs {
        let ell = compute_ell(f, alpha, t, -x, &q)?;
        rem.push((ell - ell_leading_term(f, alpha, -x)?).abs());
        sq.push(ell * ell);
    }
    let r = loglog_fit(&xs, &rem)?;
    let s = loglog_fit(&xs, &sq)?;
    Ok(EllFit {
        remainder_exponent: r.slope,
        square_exponent: s.slope,
        r_squared: r.r_squared,
    })
}

pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Integrability conditions for exchanging the order of integration.
#[derive(Clone)]
pub enum FubiniField {
    /// `∫_outer (∫_{-∞}^{upper(u)} ψ(u, s)² ds)^{1/2} du`
    Stochastic {
        psi: Field2,
        outer: (f64, f64),
        inner_upper: RealFn,
    },
    /// `∫_outer ∫_{-∞}^{upper(x)} |f(x, s)| m(s) ds dx` with `m(s) = ‖K(·, s)‖`.
    Deterministic {
        f: Field2,
        outer: (f64, f64),
        inner_upper: RealFn,
        mass: RealFn,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FubiniReport {
    pub value: f64,
    /// Outer integral with the inner one truncated at depth `W`.
    pub windows: Vec<(f64, f64)>,
    pub converges: bool,
}

pub fn check_fubini_conditions(field: &FubiniField) -> Result<FubiniReport> {
    let q = QuadratureSpec::default().with_rel_tol(1e-11);
    let (outer, inner_upper) = match field {
        FubiniField::Stochastic { outer, inner_upper, .. } | FubiniField::Deterministic { outer, inner_upper, .. } => {
            (*outer, inner_upper.clone())
        }
    };
    let integrand = |u: f64, y: f64| -> f64 {
        let s = inner_upper(u) - y;
        match field {
            FubiniField::Stochastic { psi, .. } => psi(u, s).powi(2),
            FubiniField::Deterministic { f, mass, .. } => f(u, s).abs() * mass(s),
        }
    };
    let finish = |v: f64| match field {
        FubiniField::Stochastic { .. } => v.sqrt(),
        FubiniField::Deterministic { .. } => v,
    };
    // inner integral over y = upper(u) - s ∈ [0, w], w = ∞ for the full one
    let inner = |u: f64, w: f64| -> f64 {
        let head = integrate(|y| integrand(u, y), 0.0, 1.0, &q);
        let rest = if w.is_finite() {
            integrate(|y| integrand(u, y), 1.0, w, &q)
        } else {
            integrate_to_infinity(|y| integrand(u, y), 1.0, 1.0, 1e-10, &q).map(|t| t.value)
        };
        match (head, rest) {
            (Ok(h), Ok(r)) => finish(h + r),
            _ => f64::INFINITY,
        }
    };
    let outer_spec = QuadratureSpec::default().with_rel_tol(1e-9);
    let mut windows = Vec::new();
    for k in 1..5 {
        let w = 10f64.powi(k);
        windows.push((w, integrate(|u| inner(u, w), outer.0, outer.1, &outer_spec)?));
    }
    let full = integrate(|u| inner(u, f64::INFINITY), outer.0, outer.1, &outer_spec);
    let (value, converges) = match full {
        Ok(v) if v.is_finite() => (v, true),
        Ok(v) => (v, false),
        Err(Error::Quadrature { estimate, .. }) if estimate.is_finite() => (estimate, false),
        Err(_) => (f64::INFINITY, false),
    };
    Ok(FubiniReport {
        value,
        windows,
        converges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise_sim::SigmaModel;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default().with_rel_tol(1e-12)
    }

    #[test]
    fn constant_integrand_collapses_to_kernel() {
        let f = IntegrandSpec::constant(2.5, 1.0);
        for (a, s) in [(0.25, -3.0), (-0.3, 0.2), (0.25, 0.7)] {
            let v = kk_operator(&f, a, 1.0, s, &q()).unwrap();
            assert!((v - 2.5 * eval_mvn_kernel(a, 1.0, s)).abs() < 1e-13);
        }
    }

    #[test]
    fn exponential_integrand_closed_form() {
        // f(s) = e^{λs}: 𝒦f(t,s) = e^{λt}K(t,s) - λ∫_s^t e^{λu}K(u,s) du
        let lambda = 0.7;
        let f = IntegrandSpec::custom(
            "exp",
            1.0,
            Arc::new(move |s: f64| (lambda * s).exp()),
            Arc::new(move |s: f64| lambda * (lambda * s).exp()),
            f64::INFINITY,
        );
        for alpha in [-0.3, 0.25] {
            for s in [-2.0, -0.1, 0.4] {
                let t = 1.0;
                let oracle = (lambda * t).exp() * eval_mvn_kernel(alpha, t, s)
                    - lambda
                        * tanh_sinh(|u: f64| (lambda * u).exp() * eval_mvn_kernel(alpha, u, s), s, t, 1e-13).unwrap();
                let v = kk_operator(&f, alpha, t, s, &q()).unwrap();
                assert!((v - oracle).abs() < 1e-9, "alpha {alpha} s {s}: {v} vs {oracle}");
            }
        }
    }

    #[test]
    fn dual_forms_agree_on_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let t: f64 = rng.random_range(0.0..3.0);
            let s: f64 = t - rng.random_range(0.01..20.0);
            let f = IntegrandSpec::power_tail(1.0, 0.25, t).unwrap();
            let k = kk_operator_forms(&f, 0.25, t, s, &q()).unwrap();
            assert!((k.derivative - k.stieltjes).abs() < 1e-8, "{k:?} at ({t},{s})");
        }
    }

    #[test]
    fn translation_lag_matches_operator() {
        for alpha in [-0.3, 0.25] {
            let f = IntegrandSpec::exp(1.3, 0.5).unwrap();
            let (h, dh) = f.shape().unwrap();
            for s in [-4.0, -0.2, 0.3] {
                let direct = kk_operator(&f, alpha, 0.5, s, &q()).unwrap();
                let g = translation_lag(h(0.0), &**dh, alpha, 0.5 - s, &q()).unwrap() - h(0.5 - s) * pos_pow(-s, alpha);
                assert!((direct - g).abs() < 1e-10, "{direct} vs {g}");
            }
            // cell mean against a fine quadrature of G_h
            let (x0, x1) = (0.0, 0.1);
            let mean = translation_lag_mean(h(0.0), &**dh, alpha, x0, x1, &q()).unwrap();
            let oracle = tanh_sinh(|x| translation_lag(h(0.0), &**dh, alpha, x, &q()).unwrap(), x0, x1, 1e-12).unwrap() / 0.1;
            assert!((mean - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn cell_quadrature_matches_translation_cells() {
        let alpha = -0.3;
        let f = IntegrandSpec::power_tail(1.0, alpha, 1.0).unwrap();
        let (h, dh) = f.shape().unwrap();
        for (a, b) in [(-3.0, -2.9), (-0.1, 0.0), (0.5, 0.6), (0.9, 1.0)] {
            let cq = kk_cell_mean(&f, alpha, 1.0, a, b, &q()).unwrap();
            let lag = translation_lag_mean(h(0.0), &**dh, alpha, 1.0 - b, 1.0 - a, &q()).unwrap();
            assert!((cq - lag).abs() < 1e-9, "[{a},{b}]: {cq} vs {lag}");
        }
    }

    #[test]
    fn membership_examples() {
        for alpha in [-0.3, 0.25] {
            let e = membership_check(&IntegrandSpec::exp(1.0, 1.0).unwrap(), alpha, 1.0, None).unwrap();
            assert!(e.in_h, "{e:?}");
            let p = membership_check(&IntegrandSpec::power_tail(0.6, alpha, 1.0).unwrap(), alpha, 1.0, None).unwrap();
            assert!(p.in_h, "{p:?}");
        }
        let grow = IntegrandSpec::custom(
            "abs^0.4",
            1.0,
            Arc::new(|s: f64| s.abs().powf(0.4)),
            Arc::new(|s: f64| 0.4 * s.abs().powf(-0.6) * s.signum()),
            -0.4,
        );
        let g = membership_check(&grow, 0.25, 1.0, None).unwrap();
        assert!(!g.in_h && g.tail_exponent_fit > -1.0, "{g:?}");
    }

    #[test]
    fn ls_condition_examples() {
        let alpha = 0.25;
        assert!(check_ls_conditions(&IntegrandSpec::exp(1.0, 1.0).unwrap(), alpha, 1.0).unwrap().converges);
        assert!(check_ls_conditions(&IntegrandSpec::power_tail(0.6, alpha, 1.0).unwrap(), alpha, 1.0).unwrap().converges);
        let p = alpha + 1.5;
        let boundary = IntegrandSpec::custom(
            "boundary",
            1.0,
            Arc::new(move |s: f64| (1.0 - s).powf(1.0 - p) / (p - 1.0)),
            Arc::new(move |s: f64| (1.0 - s).powf(-p)),
            p - 1.0,
        );
        let r = check_ls_conditions(&boundary, alpha, 1.0).unwrap();
        assert!(!r.converges, "{r:?}");
        // partial integrals keep growing like log W
        let w = &r.windows;
        assert!(w[4].1 - w[3].1 > 0.5 * (w[3].1 - w[2].1));
    }

    #[test]
    fn wiener_integral_schemes() {
        let g = SimGrid::uniform(1.0 / 32.0, 8.0, 1.0).unwrap();
        let noise = Noise::generate(&SigmaModel::Constant(1.0), &g, 4).unwrap();
        let alpha = 0.25;
        // f ≡ 1 gives X
        let one = IntegrandSpec::constant(1.0, 1.0);
        let x = x_at_uniform_points(alpha, &noise, &g).unwrap();
        let xt = *x.last().unwrap();
        for scheme in [WienerScheme::Translation, WienerScheme::GridRiemann] {
            let v = wiener_integral(&one, alpha, &noise, &g, scheme).unwrap();
            assert!((v - xt).abs() < 1e-10, "{scheme:?}: {v} vs {xt}");
        }
        let cq = wiener_integral(&one, alpha, &noise, &g, WienerScheme::CellQuadrature).unwrap();
        assert!((cq - xt).abs() < 1e-9);
        // linearity
        let f1 = IntegrandSpec::exp(1.0, 1.0).unwrap();
        let f2 = IntegrandSpec::power_tail(1.0, alpha, 1.0).unwrap();
        let c = IntegrandSpec::combine(2.0, &f1, -0.5, &f2).unwrap();
        let w = |f: &IntegrandSpec| wiener_integral(f, alpha, &noise, &g, WienerScheme::Translation).unwrap();
        assert!((w(&c) - (2.0 * w(&f1) - 0.5 * w(&f2))).abs() < 1e-10);
        // checked entry point refuses a growing integrand
        let grow = IntegrandSpec::custom(
            "grow",
            1.0,
            Arc::new(|s: f64| s.abs().powf(0.4)),
            Arc::new(|s: f64| 0.4 * s.abs().powf(-0.6) * s.signum()),
            -0.4,
        );
        assert!(matches!(wiener_integral_checked(&grow, alpha, &noise, &g), Err(Error::Membership(_))));
    }

    #[test]
    fn stieltjes_form_converges_to_wiener_integral() {
        // with α = 0, X is B after 0 and vanishes before
        let g = SimGrid::uniform(1.0 / 64.0, 4.0, 1.0).unwrap();
        let noise = Noise::generate(&SigmaModel::Constant(1.0), &g, 3).unwrap();
        let x = x_at_uniform_points(0.0, &noise, &g).unwrap();
        let b = crate::noise_sim::brownian_path(&g, &noise.increments);
        assert!(x[..=g.n_past()].iter().all(|v| v.abs() < 1e-12));
        assert!((x[g.n_past() + 64] - b[64]).abs() < 1e-12);
        for (alpha, f) in [
            (0.25, IntegrandSpec::exp(1.0, 1.0).unwrap()),
            (-0.3, IntegrandSpec::power_tail(1.0, -0.3, 1.0).unwrap()),
        ] {
            let fine = SimGrid::uniform(1.0 / 256.0, 16.0, 1.0).unwrap();
            let mut err = Vec::new();
            let mut gs = vec![fine.clone()];
            for _ in 0..2 {
                let c = gs.last().unwrap().coarsen().unwrap();
                gs.push(c);
            }
            for gg in &gs {
                let mut m = 0.0;
                for seed in 0..10 {
                    let n = Noise::generate(&SigmaModel::Constant(1.0), &fine, seed).unwrap();
                    let mut nn = n.clone();
                    let mut gprev = fine.clone();
                    while gprev.dt() < gg.dt() {
                        let gc = gprev.coarsen().unwrap();
                        nn = nn.coarsen(&gprev).unwrap();
                        gprev = gc;
                    }
                    let w = wiener_integral(&f, alpha, &nn, gg, WienerScheme::Translation).unwrap();
                    let xp = x_at_uniform_points(alpha, &nn, gg).unwrap();
                    let ls = lebesgue_stieltjes(&f, &xp, gg, 1.0).unwrap();
                    m += (w - ls).powi(2);
                }
                err.push((m / 10.0).sqrt());
            }
            let order = (err[2] / err[0]).log2() / 2.0;
            assert!(order >= (alpha + 0.5f64).min(1.0), "{alpha}: {err:?}");
        }
    }

    #[test]
    fn langevin_matches_grid_wiener_integral() {
        let g = SimGrid::uniform(1.0 / 64.0, 12.0, 1.0).unwrap();
        let noise = Noise::generate(&SigmaModel::Constant(1.0), &g, 8).unwrap();
        let lambda = 1.5;
        let alpha = -0.3;
        let z = langevin_solve(lambda, alpha, &noise, &g).unwrap();
        for (k, t) in [(0usize, 0.0), (32, 0.5), (64, 1.0)] {
            let f = IntegrandSpec::exp(lambda, t).unwrap();
            let w = wiener_integral(&f, alpha, &noise, &g, WienerScheme::GridRiemann).unwrap();
            assert!((w - z.z[k]).abs() < 1e-10, "t {t}: {w} vs {}", z.z[k]);
        }
        let zero = Noise::zero(&g);
        let z0 = langevin_solve(lambda, alpha, &zero, &g).unwrap();
        assert!(z0.z.iter().all(|v| *v == 0.0) && z0.xi == 0.0);
    }

    #[test]
    fn langevin_residual_is_first_order() {
        let lambda = 1.0;
        let alpha = 0.25;
        let fine = SimGrid::uniform(1.0 / 256.0, 12.0, 1.0).unwrap();
        let noise = Noise::generate(&SigmaModel::Constant(1.0), &fine, 2).unwrap();
        let coarse = fine.coarsen().unwrap();
        let cnoise = noise.coarsen(&fine).unwrap();
        let res = |g: &SimGrid, n: &Noise| {
            let x = x_at_uniform_points(alpha, n, g).unwrap();
            let p = langevin_from_x(lambda, &x, g);
            langevin_residual(lambda, &p, &x[g.n_past()..])
        };
        let (rf, rc) = (res(&fine, &noise), res(&coarse, &cnoise));
        assert!(rf < 1.0 / 256.0 * 20.0);
        assert!(rc / rf > 1.5, "{rc} vs {rf}");
    }

    #[test]
    fn fractional_ou_at_half_is_classical() {
        let lambda = 2.0;
        let g = SimGrid::uniform(1.0 / 32.0, 8.0, 1.0).unwrap();
        let mut m = crate::stats::Moments::new();
        for seed in 0..3000 {
            let n = Noise::generate(&SigmaModel::Constant(1.0), &g, seed).unwrap();
            let z = fractional_ou(lambda, 0.5, &n, &g).unwrap();
            m.push(z.z[16].powi(2));
        }
        let target = 1.0 / (2.0 * lambda);
        assert!((m.mean() - target).abs() < 3.0 * m.std_error() + 0.01 * target);
    }

    #[test]
    fn fractional_ou_u_part() {
        let (lambda, hurst) = (1.0, 0.7);
        let alpha = hurst - 0.5;
        let g = SimGrid::uniform(1.0 / 64.0, 10.0, 1.0).unwrap();
        let n = Noise::generate(&SigmaModel::Constant(1.0), &g, 5).unwrap();
        let z = fractional_ou(lambda, hurst, &n, &g).unwrap();
        // U_0 by direct summation of the same cell means
        let pts = g.points();
        let xs = n.modulated();
        let mut u0 = 0.0;
        for c in 0..g.zero_index() {
            let (a, b) = (pts[c], pts[c + 1]);
            let sing = if c + 1 == g.zero_index() { crate::quad::Singular::Right } else { crate::quad::Singular::None };
            let rho = if c + 1 == g.zero_index() { crate::noise_sim::adjacent_factor(alpha) } else { 1.0 };
            u0 += rho * crate::quad::cell_mean(|s| (lambda * s).exp() * (-s).powf(alpha), a, b, sing, alpha) * xs[c];
        }
        assert!((z.u[0] - u0).abs() < 1e-12);
        // U_t = e^{-λt} U_0: smooth in t
        for (k, t) in z.times.iter().enumerate() {
            assert!((z.u[k] - (-lambda * t).exp() * u0).abs() < 1e-12);
        }
    }

    #[test]
    fn ell_is_square_integrable() {
        let f = |r: f64| (1.0 + r.abs()).powi(-2);
        let zero = |_: f64| 0.0;
        assert_eq!(compute_ell(&zero, 0.25, 1.0, -10.0, &q()).unwrap(), 0.0);
        let fit = ell_asymptotic_fit(&f, 0.25, 1.0).unwrap();
        assert!(fit.remainder_exponent <= 0.25 - 1.0 + 0.05, "{fit:?}");
        assert!(fit.square_exponent < -1.0, "{fit:?}");
    }

    #[test]
    fn fubini_examples() {
        let (hurst, t) = (0.7, 1.3);
        let psi: Field2 = Arc::new(move |u: f64, s: f64| if s < 0.0 && u > 0.0 { (u - s).powf(hurst - 1.5) } else { 0.0 });
        let r = check_fubini_conditions(&FubiniField::Stochastic {
            psi,
            outer: (0.0, t),
            inner_upper: Arc::new(|_| 0.0),
        })
        .unwrap();
        let exact = t.powf(hurst) / (hurst * (2.0 - 2.0 * hurst).sqrt());
        assert!(r.converges && (r.value / exact - 1.0).abs() < 1e-6, "{r:?} vs {exact}");
        let compact: Field2 = Arc::new(|_, s: f64| if s > -1.0 { 1.0 } else { 0.0 });
        let c = check_fubini_conditions(&FubiniField::Deterministic {
            f: compact,
            outer: (0.0, 1.0),
            inner_upper: Arc::new(|_| 0.0),
            mass: Arc::new(|s: f64| s.abs().sqrt()),
        })
        .unwrap();
        assert!(c.converges);
        let spec = KernelSpec::gamma(0.25, 1.0).unwrap();
        let sp = spec.clone();
        let second: Field2 = Arc::new(move |u: f64, s: f64| sp.d2l(u - s));
        let l = check_fubini_conditions(&FubiniField::Deterministic {
            f: second,
            outer: (0.0, 1.0),
            inner_upper: Arc::new(|_| 0.0),
            mass: Arc::new(|s: f64| s.abs().powf(0.75)),
        })
        .unwrap();
        assert!(l.converges && l.value.is_finite());
        let _ = spec;
    }
}
