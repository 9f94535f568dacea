//! Cell weights of a Volterra kernel on a [`SimGrid`] and their application
//! to modulated noise `σ_k ΔB_k`.
//!
//! The weight of cell `[a, b]` for evaluation time `t` is the mean of
//! `k(t, ·)` over the cell. Means of parts singular at their end of a cell
//! are scaled by `ρ = (1+α)/√(1+2α)`, the ratio between the root mean square
//! and the mean of `x^α` on `[0, dt]`, so that the variance contribution is
//! matched: lag and cell parts on the cell ending at `t`, past parts on the
//! cell ending at `0`. The past scaling does not depend on `t`, which keeps
//! past-only kernels continuous in `t`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::grid::SimGrid;
use crate::error::{Error, Result};
use crate::kernels::RealFn;
use crate::quad::{cell_mean, Singular};

/// Exact mean of a function of one variable over `[x0, x1]`.
pub type MeanFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `g(t, s)`.
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Mean of `k(t, ·)` over the cell `[a, b]`, called as `(t, a, b)`.
pub type CellFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// A kernel `k(t, s)` written as a sum of parts with cheap cell means.
///
/// * `lag`: `h(t - s)` on every cell with `s < t`; singular at lag 0.
/// * `past`: `q(s)` on cells with `b ≤ min(t, 0)`; singular at `s = 0`.
/// * `past_general`: `g(t, s)` on the same cells.
/// * `cells`: arbitrary cell means on every cell with `b ≤ t`.
#[derive(Clone, Default)]
pub struct KernelParts {
    pub alpha: f64,
    pub lag: Option<(RealFn, Option<MeanFn>)>,
    pub past: Option<(RealFn, Option<MeanFn>)>,
    pub past_general: Option<KernelFn>,
    pub cells: Option<CellFn>,
}

impl std::fmt::Debug for KernelParts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelParts")
            .field("alpha", &self.alpha)
            .field("lag", &self.lag.is_some())
            .field("past", &self.past.is_some())
            .field("past_general", &self.past_general.is_some())
            .field("cells", &self.cells.is_some())
            .finish()
    }
}

impl KernelParts {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }
    pub fn with_lag(mut self, h: RealFn, exact: Option<MeanFn>) -> Self {
        self.lag = Some((h, exact));
        self
    }
    pub fn with_past(mut self, q: RealFn, exact: Option<MeanFn>) -> Self {
        self.past = Some((q, exact));
        self
    }
    pub fn with_past_general(mut self, g: KernelFn) -> Self {
        self.past_general = Some(g);
        self
    }
    pub fn with_cells(mut self, c: CellFn) -> Self {
        self.cells = Some(c);
        self
    }

    /// Pointwise value of the kernel, for tests and diagnostics.
    pub fn eval(&self, t: f64, s: f64) -> f64 {
        if s >= t {
            return 0.0;
        }
        let mut v = 0.0;
        if let Some((h, _)) = &self.lag {
            v += h(t - s);
        }
        if s < t.min(0.0) {
            if let Some((q, _)) = &self.past {
                v += q(s);
            }
            if let Some(g) = &self.past_general {
                v += g(t, s);
            }
        }
        v
    }
}

/// `ρ = (1+α)/√(1+2α)`.
pub fn adjacent_factor(alpha: f64) -> f64 {
    (1.0 + alpha) / (1.0 + 2.0 * alpha).sqrt()
}

/// Mean of `x^α` over `[x0, x1]`, `0 ≤ x0 < x1`.
pub fn power_mean(alpha: f64, x0: f64, x1: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let p = alpha + 1.0;
    crate::kernels::pow_diff(x1, x0, p) / (p * (x1 - x0))
}

/// Rows above which application switches to FFT convolution.
const FFT_MIN_ROWS: usize = 48;

pub struct WeightPlan {
    rows: Vec<usize>,
    times: Vec<f64>,
    n_cells: usize,
    n_far: usize,
    zero: usize,
    rho: f64,
    /// Lag means over `[m·dt, (m+1)·dt]`.
    lag_uniform: Vec<f64>,
    /// Lag means over far cells, per row.
    lag_far: Vec<Vec<f64>>,
    /// Means of `q` over past cells.
    past: Vec<f64>,
    /// Means of `g(t, ·)` over the admissible past cells, per row.
    general: Vec<Vec<f64>>,
    /// Arbitrary cell means, per row.
    cells: Vec<Vec<f64>>,
    has_lag: bool,
    fft: Option<FftConv>,
}

struct FftConv {
    first_row: usize,
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

impl std::fmt::Debug for WeightPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightPlan")
            .field("rows", &self.rows.len())
            .field("n_cells", &self.n_cells)
            .field("fft", &self.fft.is_some())
            .finish()
    }
}

impl WeightPlan {
    /// Partition indices of the times `0, dt, ..., T`.
    pub fn future_rows(grid: &SimGrid) -> Vec<usize> {
        (grid.zero_index()..=grid.zero_index() + grid.n_future()).collect()
    }

    /// Partition indices of every uniform point after the first.
    pub fn uniform_rows(grid: &SimGrid) -> Vec<usize> {
        (grid.first_uniform()..grid.points().len()).collect()
    }

    pub fn new(parts: &KernelParts, grid: &SimGrid, rows: &[usize]) -> Result<Self> {
        let pts = grid.points();
        let n_far = grid.n_far();
        let zero = grid.zero_index();
        for &j in rows {
            if j < grid.first_uniform() || j >= pts.len() {
                return Err(Error::Domain(format!("row {j} is not a uniform grid point")));
            }
        }
        let alpha = parts.alpha;
        let dt = grid.dt();
        let max_row = rows.iter().copied().max().unwrap_or(0);
        let n_lag = max_row.saturating_sub(n_far);
        let mut lag_uniform = Vec::new();
        let mut lag_far = Vec::new();
        if let Some((h, exact)) = &parts.lag {
            lag_uniform = (0..n_lag)
                .map(|m| {
                    let (x0, x1) = (m as f64 * dt, (m + 1) as f64 * dt);
                    match exact {
                        Some(e) => e(x0, x1),
                        None => {
                            let sing = if m == 0 { Singular::Left } else { Singular::None };
                            cell_mean(|x| h(x), x0, x1, sing, alpha)
                        }
                    }
                })
                .collect();
            for &j in rows {
                let t = pts[j];
                let row: Vec<f64> = (0..n_far)
                    .map(|c| {
                        let (x0, x1) = (t - pts[c + 1], t - pts[c]);
                        match exact {
                            Some(e) => e(x0, x1),
                            None => cell_mean(|x| h(x), x0, x1, Singular::None, alpha),
                        }
                    })
                    .collect();
                lag_far.push(row);
            }
        }
        let mut past = Vec::new();
        if let Some((q, exact)) = &parts.past {
            past = (0..zero)
                .map(|c| {
                    let (a, b) = (pts[c], pts[c + 1]);
                    match exact {
                        Some(e) => e(a, b),
                        None => {
                            let sing = if c + 1 == zero { Singular::Right } else { Singular::None };
                            cell_mean(|s| q(s), a, b, sing, alpha)
                        }
                    }
                })
                .collect();
        }
        let mut general = Vec::new();
        if let Some(g) = &parts.past_general {
            for &j in rows {
                let t = pts[j];
                let last = j.min(zero);
                let row: Vec<f64> = (0..last)
                    .map(|c| {
                        let (a, b) = (pts[c], pts[c + 1]);
                        let sing = if c + 1 == zero { Singular::Right } else { Singular::None };
                        cell_mean(|s| g(t, s), a, b, sing, alpha)
                    })
                    .collect();
                general.push(row);
            }
        }
        let mut cells = Vec::new();
        if let Some(f) = &parts.cells {
            for &j in rows {
                let t = pts[j];
                cells.push((0..j).map(|c| f(t, pts[c], pts[c + 1])).collect());
            }
        }
        let rho = adjacent_factor(alpha);
        if zero > 0 {
            if let Some(p) = past.get_mut(zero - 1) {
                *p *= rho;
            }
            for row in general.iter_mut() {
                if let Some(p) = row.get_mut(zero - 1) {
                    *p *= rho;
                }
            }
        }
        let mut plan = Self {
            rows: rows.to_vec(),
            times: rows.iter().map(|&j| pts[j]).collect(),
            n_cells: grid.n_cells(),
            n_far,
            zero,
            rho,
            lag_uniform,
            lag_far,
            past,
            general,
            cells,
            has_lag: parts.lag.is_some(),
            fft: None,
        };
        let contiguous = rows.windows(2).all(|w| w[1] == w[0] + 1);
        if plan.has_lag && contiguous && rows.len() >= FFT_MIN_ROWS && alpha != 0.0 {
            plan.fft = Some(plan.build_fft());
        }
        Ok(plan)
    }

    fn build_fft(&self) -> FftConv {
        let n = self.lag_uniform.len().max(1);
        let size = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut spectrum = vec![Complex::new(0.0, 0.0); size];
        for (m, w) in self.lag_uniform.iter().enumerate() {
            let v = if m == 0 { self.rho * w } else { *w };
            spectrum[m] = Complex::new(v, 0.0);
        }
        forward.process(&mut spectrum);
        FftConv {
            first_row: self.rows[0],
            size,
            forward,
            inverse,
            spectrum,
        }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    /// Combined weight of every cell `c < J` for row `r`.
    pub fn row_weights(&self, r: usize) -> Vec<f64> {
        let j = self.rows[r];
        (0..j).map(|c| self.weight(r, j, c)).collect()
    }

    #[inline]
    fn weight(&self, r: usize, j: usize, c: usize) -> f64 {
        let mut w = 0.0;
        if self.has_lag {
            w += if c < self.n_far {
                self.lag_far[r][c]
            } else {
                self.lag_uniform[j - 1 - c]
            };
        }
        if !self.cells.is_empty() {
            w += self.cells[r][c];
        }
        if c + 1 == j {
            w *= self.rho;
        }
        if c < j.min(self.zero) {
            if !self.past.is_empty() {
                w += self.past[c];
            }
            if !self.general.is_empty() {
                w += self.general[r][c];
            }
        }
        w
    }

    /// Values `Σ_c w_c x_c` for every row, picking the faster method.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.fft {
            Some(f) => self.apply_fft(f, x),
            None => self.apply_direct(x),
        }
    }

    /// Per-cell summation in increasing cell order.
    pub fn apply_direct(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cells, "noise length does not match the grid");
        (0..self.rows.len())
            .map(|r| {
                let j = self.rows[r];
                let mut acc = 0.0;
                for (c, xc) in x[..j].iter().enumerate() {
                    acc += self.weight(r, j, c) * xc;
                }
                acc
            })
            .collect()
    }

    fn apply_fft(&self, f: &FftConv, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cells, "noise length does not match the grid");
        let u = &x[self.n_far..];
        let n = self.lag_uniform.len().min(u.len());
        let mut buf = vec![Complex::new(0.0, 0.0); f.size];
        for (b, v) in buf.iter_mut().zip(&u[..n]) {
            b.re = *v;
        }
        f.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&f.spectrum) {
            *b *= s;
        }
        f.inverse.process(&mut buf);
        let scale = 1.0 / f.size as f64;
        // prefix sums of the past part
        let mut prefix = Vec::new();
        if !self.past.is_empty() {
            prefix.reserve(self.zero + 1);
            let mut acc = 0.0;
            prefix.push(0.0);
            for c in 0..self.zero {
                acc += self.past[c] * x[c];
                prefix.push(acc);
            }
        }
        (0..self.rows.len())
            .map(|r| {
                let j = f.first_row + r;
                let mut v = if j > self.n_far { buf[j - 1 - self.n_far].re * scale } else { 0.0 };
                for c in 0..self.n_far.min(j) {
                    let mut w = self.lag_far[r][c];
                    if c + 1 == j {
                        w *= self.rho;
                    }
                    v += w * x[c];
                }
                let last = j.min(self.zero);
                if !prefix.is_empty() {
                    v += prefix[last];
                }
                if !self.general.is_empty() {
                    let g = &self.general[r];
                    for c in 0..last {
                        v += g[c] * x[c];
                    }
                }
                if !self.cells.is_empty() {
                    let row = &self.cells[r];
                    for c in 0..j {
                        let w = if c + 1 == j { self.rho * row[c] } else { row[c] };
                        v += w * x[c];
                    }
                }
                v
            })
            .collect()
    }
}
