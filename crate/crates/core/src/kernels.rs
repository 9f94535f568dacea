//! Kernels `φ_α(x) = L(x)·x^α`, the Mandelbrot–Van Ness kernel, kernel masses,
//! the Whittle–Matérn covariance and the regularity conditions on `L`.

use std::fmt;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::fit::{log_space, loglog_fit};
use crate::quad::{integrate_to_infinity, tanh_sinh, QuadratureSpec};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied slowly varying factor with its first two derivatives.
#[derive(Clone)]
pub struct CustomL {
    pub name: String,
    pub l: RealFn,
    pub dl: RealFn,
    pub d2l: RealFn,
    /// Declared decay exponent of `L'`.
    pub zeta0: f64,
}

impl fmt::Debug for CustomL {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomL")
            .field("name", &self.name)
            .field("zeta0", &self.zeta0)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub enum LFamily {
    /// `L(x) = λ^{α+1}/Γ(α+1)·e^{-λx}`
    Gamma { lambda: f64 },
    /// `L(x) = (1+x)^{-(α+β)}`
    Power { beta: f64 },
    Custom(CustomL),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LDerivatives {
    pub l: f64,
    pub dl: f64,
    pub d2l: f64,
}

#[derive(Clone, Debug)]
pub struct KernelSpec {
    alpha: f64,
    family: LFamily,
    zeta0: f64,
    norm: f64,
}

pub const ALPHA_RANGE_MSG: &str = "alpha must lie in (−1/2,0)∪(0,1/2)";

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha == 0.0 || alpha.abs() >= 0.5 {
        return Err(Error::InvalidParameter(format!("{ALPHA_RANGE_MSG} (got {alpha})")));
    }
    Ok(())
}

impl KernelSpec {
    pub fn gamma(alpha: f64, lambda: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be positive (got {lambda})")));
        }
        Ok(Self {
            alpha,
            family: LFamily::Gamma { lambda },
            zeta0: f64::INFINITY,
            norm: lambda.powf(alpha + 1.0) / gamma(alpha + 1.0),
        })
    }

    /// Power family with `ζ₀` at the midpoint of its admissible window
    /// `(α+3/2, α+β+1)`.
    pub fn power(alpha: f64, beta: f64) -> Result<Self> {
        Self::power_with_zeta(alpha, beta, alpha + 1.25 + 0.5 * beta)
    }

    pub fn power_with_zeta(alpha: f64, beta: f64, zeta0: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(beta > 0.5) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must exceed 1/2 (got {beta})")));
        }
        check_zeta(alpha, zeta0)?;
        Ok(Self {
            alpha,
            family: LFamily::Power { beta },
            zeta0,
            norm: 1.0,
        })
    }

    pub fn custom(alpha: f64, l: CustomL) -> Result<Self> {
        check_alpha(alpha)?;
        let l0 = (l.l)(0.0);
        if l0 == 0.0 || !l0.is_finite() {
            return Err(Error::InvalidParameter(format!("L(0) must be finite and nonzero (got {l0})")));
        }
        check_zeta(alpha, l.zeta0)?;
        let zeta0 = l.zeta0;
        Ok(Self {
            alpha,
            family: LFamily::Custom(l),
            zeta0,
            norm: 1.0,
        })
    }

    /// `L ≡ c`; decay conditions on `L'` hold vacuously.
    pub fn constant_l(alpha: f64, c: f64) -> Result<Self> {
        Self::custom(
            alpha,
            CustomL {
                name: format!("constant {c}"),
                l: Arc::new(move |_| c),
                dl: Arc::new(|_| 0.0),
                d2l: Arc::new(|_| 0.0),
                zeta0: f64::INFINITY,
            },
        )
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn hurst(&self) -> f64 {
        self.alpha + 0.5
    }

    pub fn family(&self) -> &LFamily {
        &self.family
    }

    pub fn zeta0(&self) -> f64 {
        self.zeta0
    }

    pub fn family_name(&self) -> String {
        match &self.family {
            LFamily::Gamma { lambda } => format!("gamma(lambda={lambda})"),
            LFamily::Power { beta } => format!("power(beta={beta})"),
            LFamily::Custom(c) => format!("custom({})", c.name),
        }
    }

    #[inline]
    pub fn l(&self, x: f64) -> f64 {
        match &self.family {
            LFamily::Gamma { lambda } => self.norm * (-lambda * x).exp(),
            LFamily::Power { beta } => (-(self.alpha + beta) * x.ln_1p()).exp(),
            LFamily::Custom(c) => (c.l)(x),
        }
    }

    #[inline]
    pub fn dl(&self, x: f64) -> f64 {
        match &self.family {
            LFamily::Gamma { lambda } => -lambda * self.l(x),
            LFamily::Power { beta } => {
                let g = self.alpha + beta;
                -g * (-(g + 1.0) * x.ln_1p()).exp()
            }
            LFamily::Custom(c) => (c.dl)(x),
        }
    }

    #[inline]
    pub fn d2l(&self, x: f64) -> f64 {
        match &self.family {
            LFamily::Gamma { lambda } => lambda * lambda * self.l(x),
            LFamily::Power { beta } => {
                let g = self.alpha + beta;
                g * (g + 1.0) * (-(g + 2.0) * x.ln_1p()).exp()
            }
            LFamily::Custom(c) => (c.d2l)(x),
        }
    }

    /// `L(0) − L(x)` without cancellation for small `x`.
    #[inline]
    pub fn l0_minus_l(&self, x: f64) -> f64 {
        match &self.family {
            LFamily::Gamma { lambda } => -self.norm * (-lambda * x).exp_m1(),
            LFamily::Power { beta } => -(-(self.alpha + beta) * x.ln_1p()).exp_m1(),
            LFamily::Custom(c) => (c.l)(0.0) - (c.l)(x),
        }
    }

    /// `φ_α(x)` for `x > 0` without argument checks.
    #[inline]
    pub fn phi(&self, x: f64) -> f64 {
        self.l(x) * x.powf(self.alpha)
    }

    /// Exponent `p` with `L'(x) = O(x^{-p})` known from the family itself.
    pub fn analytic_tail_exponent(&self) -> f64 {
        match &self.family {
            LFamily::Gamma { .. } => f64::INFINITY,
            LFamily::Power { beta } => self.alpha + beta + 1.0,
            LFamily::Custom(c) => c.zeta0,
        }
    }
}

fn check_zeta(alpha: f64, zeta0: f64) -> Result<()> {
    if !(zeta0 > alpha + 1.5) {
        return Err(Error::InvalidParameter(format!(
            "zeta0 must exceed alpha + 3/2 = {} (got {zeta0})",
            alpha + 1.5
        )));
    }
    Ok(())
}

pub fn eval_phi(spec: &KernelSpec, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("phi requires x > 0 (got {x})")));
    }
    Ok(spec.phi(x))
}

pub fn eval_l_derivatives(spec: &KernelSpec, x: f64) -> Result<LDerivatives> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("L requires x >= 0 (got {x})")));
    }
    Ok(LDerivatives {
        l: spec.l(x),
        dl: spec.dl(x),
        d2l: spec.d2l(x),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assumption1Report {
    pub passes: bool,
    /// Fitted decay exponent of `|L'|` on the last decade of the fit grid.
    pub fitted_zeta: f64,
    /// Fitted decay exponent of `|L''|`, same window.
    pub fitted_zeta_second: f64,
    /// Open interval of admissible `ζ₀`: `(α+3/2, min(ζ̂', ζ̂''−1))`.
    pub window: (f64, f64),
    pub zeta0: f64,
    /// `R²` of the fit of `|L'|` over the whole grid `[10, 10⁴]`.
    pub r_squared: f64,
    pub detail: String,
}

/// Decay exponent of `|g|` over `[10, 10⁴]`: the slope on the last decade,
/// or `+∞` when the decay is faster than any power.
fn fitted_decay(g: impl Fn(f64) -> f64) -> (f64, f64) {
    let full = log_space(10.0, 1e4, 40);
    let vals: Vec<f64> = full.iter().map(|&s| g(s).abs()).collect();
    let r2 = loglog_fit(&full, &vals).map(|f| f.r_squared).unwrap_or(f64::NAN);
    let top = log_space(1e3, 1e4, 13);
    let top_vals: Vec<f64> = top.iter().map(|&s| g(s).abs()).collect();
    if top_vals.iter().all(|v| *v == 0.0) {
        return (f64::INFINITY, r2);
    }
    if top_vals.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return (f64::INFINITY, r2);
    }
    let lower = loglog_fit(&top[..7], &top_vals[..7]);
    let upper = loglog_fit(&top[6..], &top_vals[6..]);
    if let (Ok(lo), Ok(up)) = (lower, upper) {
        // local slope still steepening across the decade: faster than any power
        if up.slope < lo.slope - 0.1 && up.slope < 1.25 * lo.slope {
            return (f64::INFINITY, r2);
        }
    }
    match loglog_fit(&top, &top_vals) {
        Ok(f) => (-f.slope, r2),
        Err(_) => (f64::NAN, r2),
    }
}

/// Numerical check of the decay conditions on `L'` and `L''`.
pub fn check_assumption1(spec: &KernelSpec) -> Assumption1Report {
    let alpha = spec.alpha;
    let (z1, r2) = fitted_decay(|s| spec.dl(s));
    let (z2, _) = fitted_decay(|s| spec.d2l(s));
    let lo = alpha + 1.5;
    let hi = z1.min(z2 - 1.0);
    let l0 = spec.l(0.0);
    let mut problems = Vec::new();
    if l0 == 0.0 {
        problems.push("L(0) = 0".to_string());
    }
    if !(hi > lo) {
        problems.push(format!("no admissible zeta0: fitted window ({lo:.4}, {hi:.4}) is empty"));
    } else if spec.zeta0.is_finite() && !(spec.zeta0 > lo && spec.zeta0 <= hi) {
        problems.push(format!(
            "zeta0 = {} outside fitted window ({lo:.4}, {hi:.4}]",
            spec.zeta0
        ));
    }
    let passes = problems.is_empty();
    let detail = if passes {
        format!("admissible zeta0 in ({lo:.4}, {hi:.4}]")
    } else {
        problems.join("; ")
    };
    Assumption1Report {
        passes,
        fitted_zeta: z1,
        fitted_zeta_second: z2,
        window: (lo, hi),
        zeta0: spec.zeta0,
        r_squared: r2,
        detail,
    }
}

/// `(x)_+^α` with `(x)_+^0 = 1{x > 0}`.
#[inline]
pub fn pos_pow(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        if alpha == 0.0 {
            1.0
        } else {
            x.powf(alpha)
        }
    } else {
        0.0
    }
}

/// `a^p − b^p` for `a, b > 0` without cancellation when `a ≈ b`.
#[inline]
pub fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    if b <= 0.0 {
        return pos_pow(a, p);
    }
    if a <= 0.0 {
        return -pos_pow(b, p);
    }
    b.powf(p) * (p * ((a - b) / b).ln_1p()).exp_m1()
}

/// Mandelbrot–Van Ness kernel `K(t,s) = (t−s)_+^α − (−s)_+^α` for `s < t`, zero otherwise.
#[inline]
pub fn eval_mvn_kernel(alpha: f64, t: f64, s: f64) -> f64 {
    if s >= t {
        return 0.0;
    }
    if s >= 0.0 {
        pos_pow(t - s, alpha)
    } else {
        pow_diff(t - s, -s, alpha)
    }
}

/// `∂K/∂t = α(t−s)^{α−1}` for `s < t`.
pub fn eval_mvn_dt(alpha: f64, t: f64, s: f64) -> Result<f64> {
    if s == t {
        return Err(Error::Singularity(t));
    }
    if s > t {
        return Ok(0.0);
    }
    Ok(alpha * (t - s).powf(alpha - 1.0))
}

/// `(t+y)^α − y^α` for `y > 0`, accurate when `t ≪ y`.
#[inline]
fn mvn_gap(alpha: f64, t: f64, y: f64) -> f64 {
    y.powf(alpha) * (alpha * (t / y).ln_1p()).exp_m1()
}

fn default_quad() -> QuadratureSpec {
    QuadratureSpec::default().with_rel_tol(1e-13)
}

/// `∫_x^∞ ((t+y)^α − y^α)² dy`: mass of `K(t,·)` to the left of `−x`.
pub fn mvn_tail_mass(alpha: f64, t: f64, x: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let g = move |y: f64| mvn_gap(alpha, t, y).powi(2);
    let scale = x.max(t).max(1e-12);
    Ok(integrate_to_infinity(g, x, scale, 1e-12, &default_quad())?.value)
}

/// `∫_{−∞}^t K(t,s)² ds` by quadrature.
pub fn mvn_l2_mass(alpha: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("kernel mass requires t > 0 (got {t})")));
    }
    let recent = t.powf(2.0 * alpha + 1.0) / (2.0 * alpha + 1.0);
    let g = move |y: f64| mvn_gap(alpha, t, y).powi(2);
    let head = tanh_sinh(g, 0.0, t, 1e-14)?;
    Ok(recent + head + mvn_tail_mass(alpha, t, t)?)
}

/// `c_α = ∫_0^∞ ((1+x)^α − x^α)² dx + 1/(2α+1)`, so that `∫K(t,s)²ds = c_α t^{2α+1}`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > -0.5 && alpha < 0.5) {
        return Err(Error::InvalidParameter(format!("c_alpha needs |alpha| < 1/2 (got {alpha})")));
    }
    let g = move |x: f64| mvn_gap(alpha, 1.0, x).powi(2);
    let head = tanh_sinh(g, 0.0, 1.0, 1e-14)?;
    let tail = if alpha == 0.0 {
        0.0
    } else {
        integrate_to_infinity(g, 1.0, 1.0, 1e-12, &default_quad())?.value
    };
    Ok(head + tail + 1.0 / (2.0 * alpha + 1.0))
}

/// Fractional Brownian motion normalisation `c_H = c_{H−1/2}`.
pub fn c_hurst(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("Hurst index must lie in (0,1) (got {h})")));
    }
    c_alpha(h - 0.5)
}

/// Modified Bessel function of the second kind `K_ν(u)`, `u > 0`, from
/// `∫_0^∞ e^{−u cosh t} cosh(νt) dt`. The integrand decays doubly
/// exponentially, so the trapezoidal rule converges geometrically in the
/// number of halvings.
pub fn bessel_k(nu: f64, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::Domain(format!("bessel_k requires u > 0 (got {u})")));
    }
    let nu = nu.abs();
    let log_term = |t: f64| -> f64 {
        // e^{−u cosh t}·cosh(νt) in log form to avoid overflow of cosh(νt)
        let e = -u * t.cosh() + nu * t;
        0.5 * e.exp() * (1.0 + (-2.0 * nu * t).exp())
    };
    // beyond t_max the integrand is below e^{-745}
    let t_max = ((745.0 + nu * 40.0) / u).max(1.0).acosh() + 1.0;
    let mut h = 0.5;
    let mut sum = 0.5 * log_term(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        sum += log_term(k as f64 * h);
        k += 1;
    }
    let mut est = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        let mut add = 0.0;
        while k as f64 * h <= t_max {
            add += log_term(k as f64 * h);
            k += 2;
        }
        sum += add;
        let next = sum * h;
        let done = (next - est).abs() <= 1e-15 * next.abs();
        est = next;
        if done {
            return Ok(est);
        }
    }
    Ok(est)
}

/// `K̄_ν(u) = u^ν K_ν(u)` including the limit `2^{ν−1}Γ(ν)` at `u = 0` (ν > 0).
pub fn bessel_kbar(nu: f64, u: f64) -> Result<f64> {
    if u < 0.0 {
        return Err(Error::Domain(format!("bessel_kbar requires u >= 0 (got {u})")));
    }
    if u == 0.0 {
        if !(nu > 0.0) {
            return Err(Error::Domain("K̄_ν(0) is finite only for ν > 0".into()));
        }
        return Ok(2f64.powf(nu - 1.0) * gamma(nu));
    }
    Ok(u.powf(nu) * bessel_k(nu, u)?)
}

/// Whittle–Matérn covariance `scale·2^{−ν+1/2}/Γ(ν+1/2)·K̄_ν(λ|h|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovModel {
    nu: f64,
    lambda: f64,
    scale: f64,
}

impl CovModel {
    pub fn new(nu: f64, lambda: f64, scale: f64) -> Result<Self> {
        for (name, v) in [("nu", nu), ("lambda", lambda), ("scale", scale)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive (got {v})")));
            }
        }
        Ok(Self { nu, lambda, scale })
    }

    /// Covariance of the gamma-kernel process with `E σ² = var_sigma`.
    pub fn for_gamma_kernel(spec: &KernelSpec, var_sigma: f64) -> Result<Self> {
        match spec.family() {
            LFamily::Gamma { lambda } => Self::new(
                spec.alpha() + 0.5,
                *lambda,
                var_sigma * lambda / (2.0 * std::f64::consts::PI).sqrt(),
            ),
            _ => Err(Error::InvalidParameter(
                "the Whittle–Matérn form applies to the gamma family only".into(),
            )),
        }
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

pub fn whittle_matern(model: &CovModel, h: f64) -> f64 {
    let kbar = bessel_kbar(model.nu, model.lambda * h.abs()).unwrap_or(f64::NAN);
    model.scale * 2f64.powf(0.5 - model.nu) / gamma(model.nu + 0.5) * kbar
}

/// `E(σ₀²)·∫_0^∞ φ(s)φ(s+h) ds`.
pub fn autocov_bss(spec: &KernelSpec, h: f64, var_sigma: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::Domain(format!("lag must be nonnegative (got {h})")));
    }
    let g = |s: f64| spec.phi(s) * spec.phi(s + h);
    let head = tanh_sinh(g, 0.0, 1.0, 1e-14)?;
    let tail = integrate_to_infinity(g, 1.0, 1.0, 1e-11, &default_quad())?;
    Ok(var_sigma * (head + tail.value))
}

/// `∫_0^∞ φ²`.
pub fn phi_l2_mass(spec: &KernelSpec) -> Result<f64> {
    autocov_bss(spec, 0.0, 1.0)
}

/// `∫_x^∞ φ²`.
pub fn phi_tail_mass(spec: &KernelSpec, x: f64) -> Result<f64> {
    let g = |s: f64| spec.phi(s).powi(2);
    if x <= 0.0 {
        return phi_l2_mass(spec);
    }
    Ok(integrate_to_infinity(g, x, x, 1e-10, &default_quad())?.value)
}

/// Smallest depth `x` (to within 1%) with `tail(x) ≤ tol²·total`.
pub fn certify_depth(tail: impl Fn(f64) -> Result<f64>, total: f64, tol: f64) -> Result<f64> {
    let limit = tol * tol * total;
    let mut hi = 1.0;
    let mut t_hi = tail(hi)?;
    let mut lo = 0.0;
    while t_hi > limit {
        lo = hi;
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Truncation {
                tail: t_hi / total,
                limit: tol * tol,
                depth: hi,
            });
        }
        t_hi = tail(hi)?;
    }
    while hi - lo > 0.01 * hi {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > limit {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn phi_examples() {
        let g = KernelSpec::gamma(0.25, 1.0).unwrap();
        assert!(rel(eval_phi(&g, 1.0).unwrap(), (-1f64).exp() / gamma(1.25)) < 1e-15);
        let p = KernelSpec::power(0.25, 1.0).unwrap();
        assert!(rel(eval_phi(&p, 1.0).unwrap(), 2f64.powf(-1.25)) < 1e-15);
        let g2 = KernelSpec::gamma(-0.3, 2.0).unwrap();
        let direct = 2f64.powf(0.7) / gamma(0.7) * (-1f64).exp() * 0.5f64.powf(-0.3);
        let split = eval_l_derivatives(&g2, 0.5).unwrap().l * 0.5f64.powf(-0.3);
        assert!(rel(eval_phi(&g2, 0.5).unwrap(), direct) < 1e-14);
        assert!(rel(split, direct) < 1e-14);
        assert!(eval_phi(&g, 0.0).is_err());
        assert!(eval_phi(&g, -1.0).is_err());
    }

    #[test]
    fn alpha_range_is_enforced() {
        for a in [0.0, 0.5, -0.5, 0.7, f64::NAN] {
            let e = KernelSpec::gamma(a, 1.0).unwrap_err().to_string();
            assert!(e.contains(ALPHA_RANGE_MSG), "{e}");
        }
        assert!(KernelSpec::power(0.2, 0.5).is_err());
        assert!(KernelSpec::gamma(0.2, 0.0).is_err());
        let zero_l0 = CustomL {
            name: "x".into(),
            l: Arc::new(|x| x),
            dl: Arc::new(|_| 1.0),
            d2l: Arc::new(|_| 0.0),
            zeta0: 5.0,
        };
        assert!(KernelSpec::custom(0.2, zero_l0).is_err());
    }

    #[test]
    fn l_derivative_identities() {
        let g = KernelSpec::gamma(0.1, 1.0).unwrap();
        for x in [0.0, 0.3, 2.0, 9.0] {
            let d = eval_l_derivatives(&g, x).unwrap();
            assert!(rel(d.dl / d.l, -1.0) < 1e-15);
        }
        let p = KernelSpec::power(0.25, 1.0).unwrap();
        assert!(rel(eval_l_derivatives(&p, 0.0).unwrap().dl, -1.25) < 1e-15);
        // central differences
        let s = KernelSpec::gamma(0.2, 1.5).unwrap();
        let (x, h) = (0.7, 1e-4);
        let fd1 = (s.l(x + h) - s.l(x - h)) / (2.0 * h);
        let fd2 = (s.l(x + h) - 2.0 * s.l(x) + s.l(x - h)) / (h * h);
        assert!(rel(fd1, s.dl(x)) < 1e-6);
        assert!(rel(fd2, s.d2l(x)) < 1e-6);
        for x in [1e-9, 1e-3, 0.5, 40.0] {
            assert!(rel(p.l0_minus_l(x), 1.0 - (1.0 + x).powf(-1.25)) < 1e-6);
            assert!((s.l0_minus_l(x) - (s.l(0.0) - s.l(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn assumption_windows() {
        let g = check_assumption1(&KernelSpec::gamma(0.25, 1.0).unwrap());
        assert!(g.passes, "{g:?}");
        assert!(g.fitted_zeta.is_infinite());
        let slow = check_assumption1(&KernelSpec::gamma(0.25, 1e-4).unwrap());
        assert!(slow.passes, "{slow:?}");
        let p = check_assumption1(&KernelSpec::power_with_zeta(0.25, 1.0, 2.0).unwrap());
        assert!(p.passes, "{p:?}");
        assert!((p.fitted_zeta - 2.25).abs() < 0.01);
        let narrow = check_assumption1(&KernelSpec::power(0.49, 0.51).unwrap());
        assert!(narrow.passes, "{narrow:?}");
        assert!((narrow.window.0 - 1.99).abs() < 1e-12);
        assert!(narrow.window.1 > 1.99 && narrow.window.1 <= 2.0 + 1e-9);
        // declared zeta0 outside the window
        let bad = check_assumption1(&KernelSpec::power_with_zeta(0.25, 1.0, 2.4).unwrap());
        assert!(!bad.passes);
    }

    #[test]
    fn mvn_kernel_properties() {
        for a in [-0.3, 0.25] {
            for s in [-3.0, -0.1, 0.0, 0.2] {
                assert_eq!(eval_mvn_kernel(a, 0.0, s), 0.0);
            }
            assert_eq!(eval_mvn_kernel(a, 2.0, 0.5), 1.5f64.powf(a));
            assert!(eval_mvn_dt(a, 1.0, 1.0).is_err());
        }
        assert_eq!(eval_mvn_kernel(0.0, 1.0, -5.0), 0.0);
        assert_eq!(eval_mvn_kernel(0.0, 1.0, 0.5), 1.0);
    }

    #[test]
    fn c_alpha_matches_gamma_function_identity() {
        // ∫((1−s)_+^α − (−s)_+^α)² ds = Γ(α+1)² / (Γ(2α+2) sin(π(α+1/2)))
        for a in [-0.4, -0.3, -0.2, 0.1, 0.25, 0.45] {
            let exact = gamma(a + 1.0).powi(2)
                / (gamma(2.0 * a + 2.0) * (std::f64::consts::PI * (a + 0.5)).sin());
            assert!(rel(c_alpha(a).unwrap(), exact) < 1e-9, "alpha {a}");
        }
        assert!(rel(c_alpha(0.0).unwrap(), 1.0) < 1e-14);
    }

    #[test]
    fn mvn_mass_scaling() {
        let c = c_alpha(0.25).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let ratio = mvn_l2_mass(0.25, t).unwrap() / t.powf(1.5);
            assert!(rel(ratio, c) < 1e-4);
        }
    }

    #[test]
    fn bessel_half_order_closed_form() {
        for u in [1e-6, 0.01, 0.3, 1.0, 4.0, 25.0, 300.0] {
            let exact = (std::f64::consts::PI / (2.0 * u)).sqrt() * (-u as f64).exp();
            assert!(rel(bessel_k(0.5, u).unwrap(), exact) < 1e-12, "u {u}");
        }
        let m = CovModel::new(0.5, 1.3, 2.0).unwrap();
        for h in [0.0, 0.4, 3.0] {
            let ratio = whittle_matern(&m, h) / whittle_matern(&m, 0.0);
            assert!(rel(ratio, (-1.3 * h as f64).exp()) < 1e-12);
        }
    }

    #[test]
    fn whittle_matern_limit_at_zero() {
        let m = CovModel::new(0.75, 1.0, 1.7).unwrap();
        let expect = 1.7 * 2f64.powf(-0.25) * gamma(0.75) * 2f64.powf(-0.25) / gamma(1.25);
        assert!(rel(whittle_matern(&m, 0.0), expect) < 1e-14);
        assert!(rel(whittle_matern(&m, 1e-9), expect) < 1e-6);
        assert_eq!(whittle_matern(&m, -0.7), whittle_matern(&m, 0.7));
    }

    #[test]
    fn causal_covariance_equation() {
        let spec = KernelSpec::gamma(0.25, 1.0).unwrap();
        let m = CovModel::for_gamma_kernel(&spec, 1.0).unwrap();
        // direct quadrature oracle for lag 1
        let direct = tanh_sinh(|x: f64| spec.phi(x) * spec.phi(x + 1.0), 0.0, 40.0, 1e-14).unwrap();
        assert!(rel(whittle_matern(&m, 1.0), direct) < 1e-6);
        for a in [-0.3, 0.25] {
            let s = KernelSpec::gamma(a, 1.0).unwrap();
            let m = CovModel::for_gamma_kernel(&s, 1.0).unwrap();
            let c0 = autocov_bss(&s, 0.0, 1.0).unwrap();
            assert!(rel(whittle_matern(&m, 0.0), c0) < 1e-9);
            for h in [0.1, 1.0, 5.0] {
                let lhs = autocov_bss(&s, h, 1.0).unwrap() / c0;
                let rhs = whittle_matern(&m, h) / whittle_matern(&m, 0.0);
                assert!(rel(lhs, rhs) < 1e-6, "alpha {a} h {h}");
            }
        }
    }

    #[test]
    fn gamma_autocov_is_monotone_and_psd() {
        let s = KernelSpec::gamma(-0.3, 1.0).unwrap();
        let lags: Vec<f64> = (0..64).map(|k| autocov_bss(&s, 0.1 * k as f64, 1.0).unwrap()).collect();
        for w in lags.windows(2) {
            assert!(w[1] <= w[0]);
        }
        // smallest eigenvalue of the Toeplitz matrix via Cholesky with a tiny shift
        let n = 64;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = lags[i.abs_diff(j)];
            }
            a[i * n + i] += 1e-8;
        }
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k].powi(2);
            }
            assert!(d > 0.0, "Toeplitz matrix not PSD at pivot {j}");
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = v / d;
            }
        }
    }

    #[test]
    fn power_autocov_long_memory_slope() {
        let s = KernelSpec::power(0.2, 0.8).unwrap();
        let h = log_space(50.0, 5000.0, 12);
        let c: Vec<f64> = h.iter().map(|&h| autocov_bss(&s, h, 1.0).unwrap()).collect();
        let f = loglog_fit(&h, &c).unwrap();
        assert!((f.slope + 0.6).abs() < 0.1, "slope {}", f.slope);
    }

    #[test]
    fn kernel_continuity_in_l2() {
        // ‖K(t,·) − K(u,·)‖² = c_α |t−u|^{2α+1} by stationary increments
        for a in [-0.3, 0.25] {
            let c = c_alpha(a).unwrap();
            let (t, dt) = (1.0, 1e-3);
            let g = |s: f64| (eval_mvn_kernel(a, t + dt, s) - eval_mvn_kernel(a, t, s)).powi(2);
            let d2 = tanh_sinh(g, -50.0, 0.0, 1e-12).unwrap()
                + tanh_sinh(|u: f64| ((u + dt).powf(a) - u.powf(a)).powi(2), 0.0, t, 1e-12).unwrap()
                + dt.powf(2.0 * a + 1.0) / (2.0 * a + 1.0);
            let bound = 1.1 * c * dt.powf(2.0 * a + 1.0);
            assert!(d2 <= bound, "alpha {a}: {d2} vs {bound}");
            assert!(d2.sqrt() <= 2.0 * dt.powf((a + 0.5f64).min(1.0)));
        }
    }

    #[test]
    fn truncation_depth_certificate() {
        let s = KernelSpec::gamma(-0.3, 1.0).unwrap();
        let total = phi_l2_mass(&s).unwrap();
        let x = certify_depth(|x| phi_tail_mass(&s, x), total, 1e-3).unwrap();
        assert!(phi_tail_mass(&s, x).unwrap() <= 1e-6 * total);
        assert!(phi_tail_mass(&s, 0.95 * x).unwrap() > 1e-6 * total);
    }
}
