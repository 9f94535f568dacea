//! Itô formulas for the semistationary process: pathwise Young sums for
//! `α > 0`, and the Malliavin trace term for the Riemann–Liouville part.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::RealFn;
use crate::noise_sim::{riemann_liouville_parts, Noise, SimGrid, WeightPlan};
use crate::stats::ExactSum;

/// A `C²` test function with its derivatives and a growth certificate
/// `max(|f|, |f'|, |f''|)(x) ≤ c·e^{ζx²}`.
#[derive(Clone)]
pub struct SmoothFn {
    pub name: String,
    pub f: RealFn,
    pub df: RealFn,
    pub d2f: RealFn,
    pub c: f64,
    pub zeta: f64,
    /// Hölder order of `f'`.
    pub holder: f64,
}

impl std::fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothFn")
            .field("name", &self.name)
            .field("c", &self.c)
            .field("zeta", &self.zeta)
            .finish_non_exhaustive()
    }
}

impl SmoothFn {
    /// `x` with certificate `|x| ≤ e^{ζx²}/√(2eζ)`.
    pub fn identity(zeta: f64) -> Self {
        Self {
            name: "x".into(),
            f: Arc::new(|x| x),
            df: Arc::new(|_| 1.0),
            d2f: Arc::new(|_| 0.0),
            c: (1.0 / (2.0 * std::f64::consts::E * zeta).sqrt()).max(1.0),
            zeta,
            holder: 1.0,
        }
    }

    /// `x²` with certificate `x² ≤ e^{ζx²}/ζ` and `2|x| ≤ 1 + x²`.
    pub fn square(zeta: f64) -> Self {
        Self {
            name: "x^2".into(),
            f: Arc::new(|x| x * x),
            df: Arc::new(|x| 2.0 * x),
            d2f: Arc::new(|_| 2.0),
            c: 2.0 + 2.0 / zeta,
            zeta,
            holder: 1.0,
        }
    }

    pub fn cosine() -> Self {
        Self {
            name: "cos".into(),
            f: Arc::new(f64::cos),
            df: Arc::new(|x: f64| -x.sin()),
            d2f: Arc::new(|x: f64| -x.cos()),
            c: 1.0,
            zeta: 0.0,
            holder: 1.0,
        }
    }

    /// Checks `ζ < 1/(4·∫φ²)` and the bound on a grid covering `[-r, r]`.
    pub fn check_growth(&self, sample_range: f64, phi_l2: f64) -> Result<()> {
        if phi_l2 > 0.0 && !(self.zeta < 1.0 / (4.0 * phi_l2)) {
            return Err(Error::InvalidParameter(format!(
                "growth exponent {} is not below 1/(4∫φ²) = {}",
                self.zeta,
                1.0 / (4.0 * phi_l2)
            )));
        }
        let n = 2001;
        for k in 0..n {
            let x = -sample_range + 2.0 * sample_range * k as f64 / (n - 1) as f64;
            let m = (self.f)(x).abs().max((self.df)(x).abs()).max((self.d2f)(x).abs());
            if m > self.c * (self.zeta * x * x).exp() * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "growth bound for {} fails at x = {x}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Stride of dyadic `level` on a path with `2^M + 1` samples.
fn stride(len: usize, level: usize) -> Result<usize> {
    let n = len.checked_sub(1).filter(|n| n.is_power_of_two()).ok_or_else(|| {
        Error::InvalidParameter(format!("path length {len} is not 2^M + 1"))
    })?;
    let m = n.trailing_zeros() as usize;
    if level > m {
        return Err(Error::InvalidParameter(format!("level {level} exceeds the path resolution 2^{m}")));
    }
    Ok(1 << (m - level))
}

/// Left-point sum `Σ Z_{t_i}(Y_{t_{i+1}} - Y_{t_i})` on the dyadic partition
/// with `2^level` intervals.
pub fn young_integral(z: &[f64], y: &[f64], level: usize) -> Result<f64> {
    if z.len() != y.len() {
        return Err(Error::InvalidParameter("paths differ in length".into()));
    }
    let h = stride(y.len(), level)?;
    // exact summation of Z_i·Y_{i+1} - Z_i·Y_i keeps telescoping sums exact
    let mut acc = ExactSum::new();
    let mut i = 0;
    while i + h < y.len() {
        acc.add(z[i] * y[i + h]);
        acc.add(-(z[i] * y[i]));
        i += h;
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoungLadder {
    pub levels: Vec<usize>,
    /// `|f(Y_T) - f(Y_0) - Σ f'(Y)ΔY|` per level.
    pub residuals: Vec<f64>,
}

impl YoungLadder {
    /// Ratios of consecutive residuals, coarse over fine.
    pub fn decay_factors(&self) -> Vec<f64> {
        self.residuals.windows(2).map(|w| w[0] / w[1]).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.residuals.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Smallest Hölder order of `f'` admitted for a given `α`.
pub fn young_holder_threshold(alpha: f64) -> f64 {
    1.0 / (alpha + 0.5) - 1.0
}

pub fn ito_young_verify(f: &SmoothFn, y: &[f64], alpha: f64, levels: &[usize]) -> Result<YoungLadder> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("the Young formula needs alpha > 0 (got {alpha})")));
    }
    if !(f.holder > young_holder_threshold(alpha)) {
        return Err(Error::Domain(format!(
            "f' has Hölder order {} but {} is required",
            f.holder,
            young_holder_threshold(alpha)
        )));
    }
    let range = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    f.check_growth(range, 0.0)?;
    let z: Vec<f64> = y.iter().map(|v| (f.df)(*v)).collect();
    let lhs = (f.f)(y[y.len() - 1]) - (f.f)(y[0]);
    let residuals = levels
        .iter()
        .map(|&l| young_integral(&z, y, l).map(|s| (lhs - s).abs()))
        .collect::<Result<_>>()?;
    Ok(YoungLadder {
        levels: levels.to_vec(),
        residuals,
    })
}

/// `B̃^α_t = ∫_0^t (t-s)^α dB_s` on `0, dt, ..., T` from the noise on `t ≥ 0`.
pub fn btilde_path(alpha: f64, grid: &SimGrid, noise: &Noise) -> Result<Vec<f64>> {
    let mut n = noise.clone();
    for v in &mut n.increments[..grid.zero_index()] {
        *v = 0.0;
    }
    for v in &mut n.sigma {
        *v = 1.0;
    }
    let plan = WeightPlan::new(&riemann_liouville_parts(alpha), grid, &WeightPlan::future_rows(grid))?;
    Ok(plan.apply(&n.modulated()))
}

/// `α∫_0^T∫_s^T f''(Y_u)(u-s)^{2α-1} du ds = ½∫_0^T f''(Y_u) u^{2α} du`,
/// with `f''(Y)` linear between samples and `u^{2α}` integrated exactly.
pub fn trace_term(f: &SmoothFn, y: &[f64], alpha: f64, horizon: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "the trace term is only available for alpha > 0 (got {alpha})"
        )));
    }
    let n = y.len().checked_sub(1).filter(|n| *n > 0).ok_or_else(|| Error::InvalidParameter("empty path".into()))?;
    let dt = horizon / n as f64;
    let p = 2.0 * alpha;
    // ∫ u^p and ∫ u^{p+1} over each cell, in closed form
    let m0 = |a: f64, b: f64| (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0);
    let m1 = |a: f64, b: f64| (b.powf(p + 2.0) - a.powf(p + 2.0)) / (p + 2.0);
    let mut acc = 0.0;
    for k in 0..n {
        let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
        let (ga, gb) = ((f.d2f)(y[k]), (f.d2f)(y[k + 1]));
        let slope = (gb - ga) / dt;
        acc += ga * m0(a, b) + slope * (m1(a, b) - a * m0(a, b));
    }
    Ok(0.5 * acc)
}

/// `f(Y_T) - f(Y_0) - trace term`, the value of `∫ f'(Y) δY` implied by the
/// Malliavin Itô formula.
pub fn skorohod_via_residual(f: &SmoothFn, y: &[f64], alpha: f64, horizon: f64) -> Result<f64> {
    let tr = trace_term(f, y, alpha, horizon)?;
    Ok((f.f)(y[y.len() - 1]) - (f.f)(y[0]) - tr)
}
