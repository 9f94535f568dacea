//! Estimators and tests for simulated ensembles: exact mergeable sums,
//! autocovariance, two-sample stationarity tests, variogram roughness,
//! memory-tail slopes and p-variation ladders.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fit::{linear_fit, log_space, loglog_fit, LinearFit};
use crate::kernels::{autocov_bss, KernelSpec};

/// Correctly rounded floating-point sum (Shewchuk partials). The value does
/// not depend on the order in which terms are added or accumulators merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactSum {
    partials: Vec<f64>,
    special: f64,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, mut x: f64) {
        if !x.is_finite() {
            self.special += x;
            return;
        }
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
        self.special += other.special;
    }

    pub fn value(&self) -> f64 {
        if self.special != 0.0 || self.special.is_nan() {
            return self.special;
        }
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Count, sum and sum of squares with exact summation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moments {
    n: u64,
    sum: ExactSum,
    sum_sq: ExactSum,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }
    pub fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sum.merge(&o.sum);
        self.sum_sq.merge(&o.sum_sq);
    }
    pub fn count(&self) -> u64 {
        self.n
    }
    pub fn mean(&self) -> f64 {
        self.sum.value() / self.n as f64
    }
    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        if self.n < 2 {
            return f64::NAN;
        }
        let m = self.mean();
        ((self.sum_sq.value() - n * m * m) / (n - 1.0)).max(0.0)
    }
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Fixed-time values of a stationary process over many paths.
///
/// Each path contributes its values at base times `t_b` and at `t_b + h`
/// for every lag `h`; the product averaged over base times is one sample
/// per path and lag.
#[derive(Debug, Clone, PartialEq)]
pub struct MCEnsemble {
    lags: Vec<f64>,
    products: Vec<Moments>,
    level: Moments,
}

impl MCEnsemble {
    pub fn new(lags: &[f64]) -> Self {
        Self {
            lags: lags.to_vec(),
            products: vec![Moments::new(); lags.len()],
            level: Moments::new(),
        }
    }

    /// `base[b]` is the value at base time `b`; `shifted[l][b]` the value
    /// at base time `b` plus lag `l`.
    pub fn push_path(&mut self, base: &[f64], shifted: &[Vec<f64>]) {
        assert_eq!(shifted.len(), self.lags.len());
        let nb = base.len() as f64;
        for (l, row) in shifted.iter().enumerate() {
            let mut acc = 0.0;
            for (a, b) in base.iter().zip(row) {
                acc += a * b;
            }
            self.products[l].push(acc / nb);
        }
        let mean = base.iter().sum::<f64>() / nb;
        self.level.push(mean);
    }

    pub fn merge(&mut self, other: &MCEnsemble) {
        assert_eq!(self.lags, other.lags);
        for (a, b) in self.products.iter_mut().zip(&other.products) {
            a.merge(b);
        }
        self.level.merge(&other.level);
    }

    pub fn n_paths(&self) -> u64 {
        self.level.count()
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }
}

/// Ensemble autocovariance at `lag` with its Monte Carlo standard error.
pub fn empirical_autocov(ensemble: &MCEnsemble, lag: f64) -> Result<(f64, f64)> {
    let l = ensemble
        .lags
        .iter()
        .position(|x| (x - lag).abs() <= 1e-12 * (1.0 + lag.abs()))
        .ok_or_else(|| Error::Domain(format!("lag {lag} was not accumulated")))?;
    let p = &ensemble.products[l];
    if p.count() < 30 {
        return Err(Error::InvalidParameter(format!(
            "standard errors need at least 30 paths (got {})",
            p.count()
        )));
    }
    let m = ensemble.level.mean();
    Ok((p.mean() - m * m, p.std_error()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `P(K > λ)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p_value(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, ne),
    }
}

pub fn ks_one_sample_normal(a: &[f64], mean: f64, sd: f64) -> KsResult {
    let dist = Normal::new(mean, sd).expect("valid normal parameters");
    let mut x = a.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, v) in x.iter().enumerate() {
        let f = dist.cdf(*v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: ks_p_value(d, n),
    }
}

fn two_sided_normal_p(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * n.cdf(-z.abs())).min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// Two-sample KS p-value per probe time.
    pub ks_p_values: Vec<f64>,
    /// Bonferroni-adjusted p-value of the largest second-moment difference.
    pub covariance_p_value: f64,
    /// Largest absolute entry of the difference of second-moment matrices.
    pub covariance_distance: f64,
    pub passes: bool,
}

/// Compare the joint law at probe times `t_i` (rows of `at_0`) with the
/// law at `t_i + h` (rows of `at_h`). Each row is one path.
pub fn stationarity_test(at_0: &[Vec<f64>], at_h: &[Vec<f64>], level: f64) -> Result<StationarityReport> {
    let k = at_0.first().map(|r| r.len()).unwrap_or(0);
    if k == 0 || at_h.iter().chain(at_0).any(|r| r.len() != k) {
        return Err(Error::InvalidParameter("ensembles need equal, nonzero probe counts".into()));
    }
    let ks_p_values: Vec<f64> = (0..k)
        .map(|i| {
            let a: Vec<f64> = at_0.iter().map(|r| r[i]).collect();
            let b: Vec<f64> = at_h.iter().map(|r| r[i]).collect();
            ks_two_sample(&a, &b).p_value
        })
        .collect();
    let mut worst_p: f64 = 1.0;
    let mut distance: f64 = 0.0;
    let mut tests = 0usize;
    for i in 0..k {
        for j in i..k {
            let mut ma = Moments::new();
            let mut mb = Moments::new();
            for r in at_0 {
                ma.push(r[i] * r[j]);
            }
            for r in at_h {
                mb.push(r[i] * r[j]);
            }
            let diff = ma.mean() - mb.mean();
            distance = distance.max(diff.abs());
            let se = (ma.std_error().powi(2) + mb.std_error().powi(2)).sqrt();
            let p = if diff == 0.0 { 1.0 } else { two_sided_normal_p(diff / se) };
            worst_p = worst_p.min(p);
            tests += 1;
        }
    }
    let covariance_p_value = (worst_p * tests as f64).min(1.0);
    let passes = ks_p_values.iter().all(|p| *p >= level) && covariance_p_value >= level;
    Ok(StationarityReport {
        ks_p_values,
        covariance_p_value,
        covariance_distance: distance,
        passes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoughnessEstimate {
    pub alpha_hat: f64,
    /// Half-width of the 95% interval.
    pub ci: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub inconclusive: bool,
    pub scales: Vec<f64>,
    pub moments: Vec<f64>,
}

/// Mean squared increments at lags `stride·dt` for the given strides.
pub fn variogram(path: &[f64], strides: &[usize]) -> Vec<f64> {
    strides
        .iter()
        .map(|&s| {
            let n = path.len().saturating_sub(s);
            let mut acc = 0.0;
            for i in 0..n {
                acc += (path[i + s] - path[i]).powi(2);
            }
            acc / n as f64
        })
        .collect()
}

/// Strides `first, 2·first, 4·first, ...` (`count` of them).
pub fn dyadic_strides(first: usize, count: usize) -> Vec<usize> {
    (0..count).map(|k| first << k).collect()
}

fn roughness_from(scales: &[f64], moments: &[f64], batch_slopes: &[f64]) -> Result<RoughnessEstimate> {
    if scales.len() < 6 {
        return Err(Error::InvalidParameter(format!(
            "roughness needs at least 6 scales (got {})",
            scales.len()
        )));
    }
    let fit = loglog_fit(scales, moments)?;
    let ci_slope = if batch_slopes.len() >= 2 {
        let b = batch_slopes.len() as f64;
        let m = batch_slopes.iter().sum::<f64>() / b;
        let sd = (batch_slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (b - 1.0)).sqrt();
        1.96 * sd / b.sqrt()
    } else {
        1.96 * fit.slope_se
    };
    Ok(RoughnessEstimate {
        alpha_hat: (fit.slope - 1.0) / 2.0,
        ci: ci_slope / 2.0,
        slope: fit.slope,
        r_squared: fit.r_squared,
        inconclusive: fit.r_squared < 0.95,
        scales: scales.to_vec(),
        moments: moments.to_vec(),
    })
}

/// Variogram estimate of `α` from one path sampled with step `dt`.
pub fn roughness_estimate(path: &[f64], dt: f64, strides: &[usize]) -> Result<RoughnessEstimate> {
    let scales: Vec<f64> = strides.iter().map(|s| *s as f64 * dt).collect();
    roughness_from(&scales, &variogram(path, strides), &[])
}

/// Variogram estimate pooled over paths, with a batch-means interval.
pub fn roughness_estimate_ensemble(paths: &[Vec<f64>], dt: f64, strides: &[usize]) -> Result<RoughnessEstimate> {
    let scales: Vec<f64> = strides.iter().map(|s| *s as f64 * dt).collect();
    let per_path: Vec<Vec<f64>> = paths.iter().map(|p| variogram(p, strides)).collect();
    let pooled = mean_rows(&per_path);
    let mut batch_slopes = Vec::new();
    if paths.len() >= 30 {
        let nb = 10;
        let size = paths.len() / nb;
        for b in 0..nb {
            let m = mean_rows(&per_path[b * size..(b + 1) * size]);
            batch_slopes.push(loglog_fit(&scales, &m)?.slope);
        }
    }
    roughness_from(&scales, &pooled, &batch_slopes)
}

fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows[0].len();
    let n = rows.len() as f64;
    (0..k).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryFit {
    pub slope: f64,
    pub ci: f64,
    /// Slopes fitted on each decade of lags.
    pub decade_slopes: Vec<f64>,
    pub short_memory: bool,
    pub lags: Vec<f64>,
    pub autocov: Vec<f64>,
}

/// Log–log slope of the exact autocovariance over `lags`.
pub fn memory_tail_fit(spec: &KernelSpec, lags: &[f64]) -> Result<MemoryFit> {
    let lo = lags.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lags.iter().copied().fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 100.0 {
        return Err(Error::InvalidParameter("lags must span at least two decades".into()));
    }
    let autocov: Vec<f64> = lags.iter().map(|&h| autocov_bss(spec, h, 1.0)).collect::<Result<_>>()?;
    let positive = autocov.iter().filter(|v| **v > 0.0).count();
    let mut decade_slopes = Vec::new();
    let mut start = lo;
    while start * 10.0 <= hi * (1.0 + 1e-12) {
        let pts = log_space(start, start * 10.0, 6);
        let vals: Vec<f64> = pts.iter().map(|&h| autocov_bss(spec, h, 1.0)).collect::<Result<_>>()?;
        if vals.iter().all(|v| *v > 0.0) {
            decade_slopes.push(loglog_fit(&pts, &vals)?.slope);
        } else {
            decade_slopes.push(f64::NEG_INFINITY);
        }
        start *= 10.0;
    }
    let (slope, ci) = if positive >= 3 {
        let f: LinearFit = loglog_fit(lags, &autocov)?;
        (f.slope, 1.96 * f.slope_se)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    let drifting = decade_slopes.windows(2).any(|w| w[1] < w[0] - 0.5) || positive < lags.len();
    let short_memory = drifting;
    Ok(MemoryFit {
        slope,
        ci,
        decade_slopes,
        short_memory,
        lags: lags.to_vec(),
        autocov,
    })
}

/// `Σ|ΔY|^p` over the dyadic sub-meshes of a path, coarsest first. Level
/// `levels - 1` uses every point.
pub fn p_variation_ladder(path: &[f64], p: f64, levels: usize) -> Result<Vec<f64>> {
    let n = path.len().saturating_sub(1);
    if levels == 0 || n == 0 || (1usize << (levels - 1)) > n {
        return Err(Error::InvalidParameter(format!(
            "{levels} levels need at least 2^(levels-1) steps (path has {n})"
        )));
    }
    Ok((0..levels)
        .map(|l| {
            let stride = 1usize << (levels - 1 - l);
            let mut acc = 0.0;
            let mut i = 0;
            while i + stride <= n {
                acc += (path[i + stride] - path[i]).abs().powf(p);
                i += stride;
            }
            acc
        })
        .collect())
}

/// `sup Σ|Y_{t_{i+1}} - Y_{t_i}|^p` over partitions drawn from the sample
/// points.
///
/// For `p ≤ 1` the finest partition attains the supremum. For `p > 1` an
/// optimal partition uses only the endpoints and turning points of the
/// path, over which the supremum is found by dynamic programming.
pub fn p_variation(path: &[f64], p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be positive (got {p})")));
    }
    if path.len() < 2 {
        return Ok(0.0);
    }
    if p <= 1.0 {
        return Ok(path.windows(2).map(|w| (w[1] - w[0]).abs().powf(p)).sum());
    }
    let mut z = vec![path[0]];
    for k in 1..path.len() - 1 {
        let (a, b, c) = (path[k - 1], path[k], path[k + 1]);
        if (b - a) * (c - b) < 0.0 || (b != a && c == b) {
            z.push(b);
        }
    }
    z.push(path[path.len() - 1]);
    let mut best = vec![0.0f64; z.len()];
    for j in 1..z.len() {
        let mut m: f64 = 0.0;
        for i in 0..j {
            m = m.max(best[i] + (z[j] - z[i]).abs().powf(p));
        }
        best[j] = m;
    }
    Ok(best[z.len() - 1])
}

/// [`p_variation`] of the dyadic sub-samples of a path, coarsest first;
/// level `levels - 1` uses every point.
pub fn p_variation_sup_ladder(path: &[f64], p: f64, levels: usize) -> Result<Vec<f64>> {
    let n = path.len().saturating_sub(1);
    if levels == 0 || n == 0 || (1usize << (levels - 1)) > n {
        return Err(Error::InvalidParameter(format!(
            "{levels} levels need at least 2^(levels-1) steps (path has {n})"
        )));
    }
    (0..levels)
        .map(|l| {
            let stride = 1usize << (levels - 1 - l);
            let sub: Vec<f64> = path.iter().step_by(stride).copied().collect();
            p_variation(&sub, p)
        })
        .collect()
}

/// Slope of `log Σ|ΔY|²` against `log mesh` from a ladder of quadratic
/// variations with the finest mesh `dt`.
pub fn qv_slope(ladder: &[f64], dt: f64) -> Result<LinearFit> {
    let k = ladder.len();
    let mesh: Vec<f64> = (0..k).map(|l| dt * (1u64 << (k - 1 - l)) as f64).collect();
    loglog_fit(&mesh, ladder)
}

/// Least-squares line through `(x, y)`, re-exported for report code.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    linear_fit(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| r.sample(StandardNormal)).collect()
    }

    #[test]
    fn exact_sum_cancellation() {
        let mut s = ExactSum::new();
        for x in [1e100, 1.0, -1e100, 1e-30] {
            s.add(x);
        }
        assert_eq!(s.value(), 1.0 + 1e-30);
        let mut t = ExactSum::new();
        for x in [0.1; 10] {
            t.add(x);
        }
        assert_eq!(t.value(), 1.0);
    }

    proptest! {
        #[test]
        fn merge_order_is_irrelevant(xs in proptest::collection::vec(-1e6f64..1e6, 1..200), split in 0usize..200) {
            let k = split.min(xs.len());
            let mut whole = ExactSum::new();
            for x in &xs { whole.add(*x); }
            let mut a = ExactSum::new();
            let mut b = ExactSum::new();
            for x in &xs[..k] { a.add(*x); }
            for x in xs[k..].iter().rev() { b.add(*x); }
            let mut ab = a.clone();
            ab.merge(&b);
            let mut ba = b.clone();
            ba.merge(&a);
            prop_assert_eq!(ab.value().to_bits(), whole.value().to_bits());
            prop_assert_eq!(ba.value().to_bits(), whole.value().to_bits());
        }

        #[test]
        fn moments_merge_matches_single_pass(xs in proptest::collection::vec(-10f64..10.0, 2..100), split in 0usize..100) {
            let k = split.min(xs.len());
            let mut whole = Moments::new();
            for x in &xs { whole.push(*x); }
            let mut a = Moments::new();
            let mut b = Moments::new();
            for x in &xs[..k] { a.push(*x); }
            for x in &xs[k..] { b.push(*x); }
            b.merge(&a);
            prop_assert_eq!(b.mean().to_bits(), whole.mean().to_bits());
            prop_assert_eq!(b.variance().to_bits(), whole.variance().to_bits());
        }
    }

    #[test]
    fn white_noise_autocov() {
        let mut e = MCEnsemble::new(&[0.0, 1.0]);
        for p in 0..2000 {
            let z = normals(p, 4);
            e.push_path(&z[..2], &[z[..2].to_vec(), z[2..4].to_vec()]);
        }
        let (c0, s0) = empirical_autocov(&e, 0.0).unwrap();
        assert!((c0 - 1.0).abs() < 3.0 * s0);
        let (c1, s1) = empirical_autocov(&e, 1.0).unwrap();
        assert!(c1.abs() < 3.0 * s1);
        assert!(empirical_autocov(&e, 2.0).is_err());
    }

    #[test]
    fn ks_tests() {
        let a = normals(1, 3000);
        let b = normals(2, 3000);
        assert!(ks_two_sample(&a, &b).p_value > 0.01);
        assert_eq!(ks_two_sample(&a, &a).p_value, 1.0);
        let shifted: Vec<f64> = b.iter().map(|x| x + 0.3).collect();
        assert!(ks_two_sample(&a, &shifted).p_value < 0.01);
        assert!(ks_one_sample_normal(&a, 0.0, 1.0).p_value > 0.01);
        assert!(ks_one_sample_normal(&a, 0.0, 1.3).p_value < 0.01);
    }

    #[test]
    fn stationarity_identical_and_shifted() {
        let rows: Vec<Vec<f64>> = (0..500).map(|p| normals(p, 5)).collect();
        let r = stationarity_test(&rows, &rows, 0.01).unwrap();
        assert!(r.passes);
        assert_eq!(r.covariance_distance, 0.0);
        assert!(r.ks_p_values.iter().all(|p| *p == 1.0));
        let scaled: Vec<Vec<f64>> = (500..1000).map(|p| normals(p, 5).iter().map(|x| 1.5 * x).collect()).collect();
        assert!(!stationarity_test(&rows, &scaled, 0.01).unwrap().passes);
    }

    #[test]
    fn brownian_roughness_and_qv() {
        let n = 1 << 14;
        let mut paths = Vec::new();
        let dt = 1.0 / n as f64;
        for p in 0..40 {
            let z = normals(100 + p, n);
            let mut b = vec![0.0];
            for v in z {
                b.push(b.last().unwrap() + v * dt.sqrt());
            }
            paths.push(b);
        }
        let r = roughness_estimate_ensemble(&paths, dt, &dyadic_strides(1, 8)).unwrap();
        assert!(r.alpha_hat.abs() < 0.05, "{r:?}");
        let ladder = p_variation_ladder(&paths[0], 2.0, 6).unwrap();
        for v in &ladder[2..] {
            assert!((v - 1.0).abs() < 0.1);
        }
        assert!(p_variation_ladder(&vec![3.0; 65], 2.0, 6).unwrap().iter().all(|v| *v == 0.0));
        assert!(p_variation_ladder(&paths[0][..10], 2.0, 6).is_err());
    }

    fn brute_p_variation(y: &[f64], p: f64) -> f64 {
        // every subset of interior points
        let n = y.len();
        let mut best: f64 = 0.0;
        for mask in 0u32..(1 << (n - 2)) {
            let mut prev = y[0];
            let mut acc = 0.0;
            for k in 1..n {
                if k == n - 1 || mask & (1 << (k - 1)) != 0 {
                    acc += (y[k] - prev).abs().powf(p);
                    prev = y[k];
                }
            }
            best = best.max(acc);
        }
        best
    }

    proptest! {
        #[test]
        fn p_variation_is_the_supremum(y in proptest::collection::vec(-3.0f64..3.0, 2..11), p in 0.5f64..4.0) {
            let v = p_variation(&y, p).unwrap();
            let b = brute_p_variation(&y, p);
            prop_assert!((v - b).abs() <= 1e-9 * (1.0 + b), "{} vs {}", v, b);
        }
    }

    #[test]
    fn p_variation_ladder_increases() {
        let z = normals(5, 1 << 10);
        let mut b = vec![0.0];
        for v in z {
            b.push(b.last().unwrap() + v / 32.0);
        }
        let l = p_variation_sup_ladder(&b, 3.0, 5).unwrap();
        assert!(l.windows(2).all(|w| w[1] >= w[0]), "{l:?}");
        assert_eq!(p_variation(&[0.0, 1.0, 2.0, 3.0], 2.0).unwrap(), 9.0);
        assert_eq!(p_variation(&[0.0, 1.0, 2.0, 3.0], 0.5).unwrap(), 3.0);
    }

    #[test]
    fn memory_tail_slopes() {
        let lags = log_space(50.0, 5000.0, 12);
        let p = memory_tail_fit(&KernelSpec::power(0.2, 0.8).unwrap(), &lags).unwrap();
        assert!((p.slope + 0.6).abs() < 0.1);
        assert!(!p.short_memory);
        let g = memory_tail_fit(&KernelSpec::gamma(0.25, 1.0).unwrap(), &log_space(1.0, 100.0, 12)).unwrap();
        assert!(g.short_memory, "{g:?}");
    }
}
