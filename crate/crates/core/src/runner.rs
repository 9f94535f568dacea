//! Experiment orchestration: replication fan-out, checks and report files.
//!
//! Replication `i` draws its noise from `replication_seed(seed, i)`. Workers return
//! per-replication values which are merged in index order, so reports do not
//! depend on the number of threads.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, KernelConfig, Truncation};
use crate::decomp::{decomposition_grid, ftc_residuals, DecompositionPlans};
use crate::error::{Error, Result};
use crate::fit::{log_space, loglog_fit};
use crate::ito::{ito_young_verify, skorohod_via_residual, trace_term, SmoothFn};
use crate::kernels::{
    bessel_k, c_hurst, check_assumption1, phi_l2_mass, phi_tail_mass, whittle_matern, CovModel, KernelSpec,
};
use crate::noise_sim::{
    bss_depth, bss_grid, bss_parts, fbm_grid, mvn_parts, replication_seed, riemann_liouville_parts, Noise,
    SigmaModel, SimGrid, WeightPlan,
};
use crate::stats::{
    empirical_autocov, memory_tail_fit, p_variation_ladder, p_variation_sup_ladder, qv_slope, stationarity_test,
    variogram, MCEnsemble, Moments,
};
use crate::wiener::{
    ell_asymptotic_fit, langevin_from_x, langevin_residual, lebesgue_stieltjes, membership_check, wiener_integral,
    x_at_uniform_points, IntegrandSpec, WienerScheme,
};

/// Deepest past covered by uniform cells when a tolerance is given for an
/// experiment that needs a uniform grid.
const UNIFORM_DEPTH_CAP: f64 = 64.0;

/// One row of `report.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check_id: String,
    pub estimate: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    /// `|estimate - target| ≤ tolerance`.
    pub fn within(id: impl Into<String>, estimate: f64, target: f64, tolerance: f64) -> Self {
        Self {
            check_id: id.into(),
            estimate,
            target,
            tolerance,
            pass: (estimate - target).abs() <= tolerance,
        }
    }

    /// `estimate ≥ target`.
    pub fn at_least(id: impl Into<String>, estimate: f64, target: f64) -> Self {
        Self {
            check_id: id.into(),
            estimate,
            target,
            tolerance: 0.0,
            pass: estimate >= target,
        }
    }

    /// `estimate ≤ target`.
    pub fn at_most(id: impl Into<String>, estimate: f64, target: f64) -> Self {
        Self {
            check_id: id.into(),
            estimate,
            target,
            tolerance: 0.0,
            pass: estimate <= target,
        }
    }

    pub fn flag(id: impl Into<String>, estimate: f64, target: f64, pass: bool) -> Self {
        Self {
            check_id: id.into(),
            estimate,
            target,
            tolerance: 0.0,
            pass,
        }
    }
}

/// Check rows plus an experiment-specific data table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub rows: Vec<CheckRow>,
    /// Contents of `data.csv`, header included.
    pub data: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub threads: usize,
    pub rows: Vec<CheckRow>,
    pub data: String,
    /// Set when the experiment stopped with an error.
    pub failure: Option<String>,
    pub wall_clock: Duration,
    pub config_echo: String,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.failure.is_none() && self.rows.iter().all(|r| r.pass)
    }

    /// 0 when every check passes, 1 when one fails, 2 after an error.
    pub fn exit_code(&self) -> i32 {
        if self.failure.is_some() {
            2
        } else if self.all_pass() {
            0
        } else {
            1
        }
    }

    pub fn report_csv(&self) -> String {
        let mut out = String::from("check_id,estimate,target,tolerance,pass\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{}",
                r.check_id, r.estimate, r.target, r.tolerance, r.pass
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "experiment: {}", self.experiment.name());
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out, "threads: {}", self.threads);
        let _ = writeln!(out, "wall_clock_s: {:.3}", self.wall_clock.as_secs_f64());
        let status = match (&self.failure, self.all_pass()) {
            (Some(_), _) => "ERROR",
            (None, true) => "PASS",
            (None, false) => "FAIL",
        };
        let _ = writeln!(out, "status: {status}");
        if let Some(f) = &self.failure {
            let _ = writeln!(out, "error: {f}");
        }
        for r in &self.rows {
            let _ = writeln!(
                out,
                "  [{}] {}: estimate {:.6e}, target {:.6e}, tolerance {:.3e}",
                if r.pass { "pass" } else { "FAIL" },
                r.check_id,
                r.estimate,
                r.target,
                r.tolerance
            );
        }
        out.push_str("\nconfig:\n");
        out.push_str(&self.config_echo);
        out
    }
}

/// Run an experiment on a pool of `threads` workers. Errors raised by the
/// experiment itself end up in the report; only pool creation fails here.
pub fn run(config: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    let threads = threads.max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {threads} worker threads: {e}")))?;
    let start = Instant::now();
    let outcome = pool.install(|| run_experiment(config));
    let wall_clock = start.elapsed();
    let (rows, data, failure) = match outcome {
        Ok(o) => (o.rows, o.data, None),
        Err(e) => {
            let msg = e.to_string().replace('\n', "; ");
            let row = CheckRow::flag(format!("error: {}", msg.replace(',', ";")), f64::NAN, f64::NAN, false);
            (vec![row], String::new(), Some(msg))
        }
    };
    Ok(ExperimentReport {
        experiment: config.experiment,
        seed: config.seed,
        threads,
        rows,
        data,
        failure,
        wall_clock,
        config_echo: config.echo(),
    })
}

/// Run and write `report.csv`, `data.csv` and `summary.txt` into
/// `config.out_dir`.
pub fn run_to_dir(config: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    let report = run(config, threads)?;
    write_report(&report, &config.out_dir)?;
    Ok(report)
}

/// Dispatch without a dedicated pool; replications use the current rayon
/// context.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Outcome> {
    match config.experiment {
        ExperimentKind::Covariance => covariance(config),
        ExperimentKind::Stationarity => stationarity(config),
        ExperimentKind::Decomposition => decomposition(config),
        ExperimentKind::Langevin => langevin(config),
        ExperimentKind::WienerEquiv => wiener_equiv(config),
        ExperimentKind::Roughness => roughness(config),
        ExperimentKind::Pvariation => pvariation(config),
        ExperimentKind::ItoYoung => ito_young(config),
        ExperimentKind::ItoMalliavin => ito_malliavin(config),
        ExperimentKind::MemoryTail => memory_tail(config),
    }
}

pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    write_atomic(&dir.join("report.csv"), &report.report_csv())?;
    write_atomic(&dir.join("data.csv"), &report.data)?;
    write_atomic(&dir.join("summary.txt"), &report.summary())?;
    Ok(())
}

/// Write to a sibling temporary file, then rename over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = path.with_file_name(format!(".{name}.tmp"));
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Io { path: p, source }
    };
    let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
    f.write_all(contents.as_bytes()).map_err(io(&tmp))?;
    f.sync_all().map_err(io(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io(path))
}

/// `f(i, seed ^ i)` for every replication, in index order.
fn replicate<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(i, replication_seed(seed, i as u64)))
        .collect()
}

/// Grid for a semistationary kernel on `[0, horizon]`.
fn kernel_grid(cfg: &ExperimentConfig, spec: &KernelSpec, horizon: f64) -> Result<SimGrid> {
    match cfg.grid.truncation {
        Truncation::Depth(d) => SimGrid::uniform(cfg.grid.dt, d, horizon),
        Truncation::Tolerance(tol) => bss_grid(spec, cfg.grid.dt, horizon, tol),
    }
}

/// Uniform past depth for experiments whose discretization needs `X` at
/// every grid point.
fn uniform_depth(cfg: &ExperimentConfig, certified: impl FnOnce(f64) -> Result<f64>) -> Result<f64> {
    match cfg.grid.truncation {
        Truncation::Depth(d) => Ok(d),
        Truncation::Tolerance(tol) => {
            let d = certified(tol)?;
            if d > UNIFORM_DEPTH_CAP {
                return Err(Error::InvalidParameter(format!(
                    "{} needs a uniform past but the certified depth is {d:.3e}; set grid.T_trunc",
                    cfg.experiment.name()
                )));
            }
            Ok(d)
        }
    }
}

/// Partition indices of `times`, sorted and deduplicated, and the position
/// of each time among them.
fn rows_for(grid: &SimGrid, times: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    let idx: Vec<usize> = times.iter().map(|&t| grid.index_of_time(t)).collect::<Result<_>>()?;
    for (&t, &i) in times.iter().zip(&idx) {
        if (grid.points()[i] - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(Error::InvalidParameter(format!(
                "time {t} is not a multiple of grid.dt = {}",
                grid.dt()
            )));
        }
    }
    let mut rows = idx.clone();
    rows.sort_unstable();
    rows.dedup();
    let pos = idx.iter().map(|i| rows.binary_search(i).expect("present")).collect();
    Ok((rows, pos))
}

fn dyadic_steps(grid: &SimGrid) -> Result<usize> {
    let n = grid.n_future();
    if !n.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "grid.T / grid.dt = {n} must be a power of two for dyadic ladders"
        )));
    }
    Ok(n.trailing_zeros() as usize)
}

fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    (0..rows[0].len()).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() / n).collect()
}

fn scales(strides: &[usize], dt: f64) -> Vec<f64> {
    strides.iter().map(|s| *s as f64 * dt).collect()
}

fn covariance(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let var_sigma = cfg
        .sigma
        .second_moment()
        .ok_or_else(|| Error::InvalidParameter("covariance needs a stationary volatility model".into()))?;
    let model = CovModel::for_gamma_kernel(&spec, var_sigma)?;
    let p = &cfg.params;
    let max_lag = p.lags.iter().copied().fold(0.0, f64::max);
    let bases: Vec<f64> = (0..p.n_bases).map(|b| b as f64 * p.base_spacing).collect();
    let horizon = bases[bases.len() - 1] + max_lag;
    let grid = kernel_grid(cfg, &spec, horizon.max(cfg.grid.dt))?;
    let mut times = bases.clone();
    for l in &p.lags {
        times.extend(bases.iter().map(|b| b + l));
    }
    let (rows, pos) = rows_for(&grid, &times)?;
    let plan = WeightPlan::new(&bss_parts(&spec), &grid, &rows)?;
    let nb = bases.len();
    let samples = replicate(cfg.n_paths, cfg.seed, |_, seed| {
        let noise = Noise::generate(&cfg.sigma, &grid, seed)?;
        let v = plan.apply(&noise.modulated());
        let base: Vec<f64> = pos[..nb].iter().map(|&i| v[i]).collect();
        let shifted: Vec<Vec<f64>> = pos[nb..].chunks(nb).map(|c| c.iter().map(|&i| v[i]).collect()).collect();
        Ok((base, shifted))
    })?;
    let mut ens = MCEnsemble::new(&p.lags);
    for (b, s) in &samples {
        ens.push_path(b, s);
    }
    let k = cfg.tolerances.se_multiplier;
    let mut out = Outcome {
        data: String::from("lag,estimate,std_error,closed_form\n"),
        ..Outcome::default()
    };
    for &lag in &p.lags {
        let (est, se) = empirical_autocov(&ens, lag)?;
        let exact = whittle_matern(&model, lag);
        out.rows.push(CheckRow::within(format!("autocov_lag_{lag}"), est, exact, k * se));
        let _ = writeln!(out.data, "{lag:?},{est:?},{se:?},{exact:?}");
    }
    // K_{1/2}(u) = √(π/2u)·e^{-u}
    let mut worst: f64 = 0.0;
    for u in log_space(1e-3, 30.0, 40) {
        let exact = (std::f64::consts::PI / (2.0 * u)).sqrt() * (-u).exp();
        worst = worst.max((bessel_k(0.5, u)? / exact - 1.0).abs());
    }
    out.rows.push(CheckRow::at_most("bessel_half_rel_error", worst, cfg.tolerances.bessel_rel));
    let total = phi_l2_mass(&spec)?;
    let tail = phi_tail_mass(&spec, grid.depth())? / total;
    let limit = match cfg.grid.truncation {
        Truncation::Tolerance(t) => t * t,
        Truncation::Depth(_) => f64::INFINITY,
    };
    out.rows.push(CheckRow::at_most("truncated_l2_fraction", tail, limit));
    Ok(out)
}

struct StationaritySample {
    at_0: Vec<f64>,
    at_h: Vec<f64>,
}

fn stationarity_samples(cfg: &ExperimentConfig, spec: &KernelSpec, sigma: &SigmaModel, seed: u64) -> Result<Vec<StationaritySample>> {
    let p = &cfg.params;
    let horizon = p.probes.iter().copied().fold(0.0, f64::max) + p.shift;
    let grid = kernel_grid(cfg, spec, horizon)?;
    let mut times = p.probes.clone();
    times.extend(p.probes.iter().map(|t| t + p.shift));
    let (rows, pos) = rows_for(&grid, &times)?;
    let plan = WeightPlan::new(&bss_parts(spec), &grid, &rows)?;
    let k = p.probes.len();
    replicate(cfg.n_paths, seed, |_, s| {
        let noise = Noise::generate(sigma, &grid, s)?;
        let v = plan.apply(&noise.modulated());
        Ok(StationaritySample {
            at_0: pos[..k].iter().map(|&i| v[i]).collect(),
            at_h: pos[k..].iter().map(|&i| v[i]).collect(),
        })
    })
}

/// Even replications are read at the probe times, odd ones at the shifted
/// times, so the two samples are independent.
fn split_samples(s: Vec<StationaritySample>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, x) in s.into_iter().enumerate() {
        if i % 2 == 0 {
            a.push(x.at_0);
        } else {
            b.push(x.at_h);
        }
    }
    (a, b)
}

fn stationarity(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let level = cfg.tolerances.ks_level;
    let (a, b) = split_samples(stationarity_samples(cfg, &spec, &cfg.sigma, cfg.seed)?);
    let rep = stationarity_test(&a, &b, level)?;
    let mut out = Outcome {
        data: String::from("probe,shift,ks_p_value\n"),
        ..Outcome::default()
    };
    for (t, pv) in cfg.params.probes.iter().zip(&rep.ks_p_values) {
        out.rows.push(CheckRow::at_least(format!("ks_p_t_{t}"), *pv, level));
        let _ = writeln!(out.data, "{t:?},{:?},{pv:?}", cfg.params.shift);
    }
    out.rows.push(CheckRow::at_least("second_moment_p", rep.covariance_p_value, level));
    if cfg.params.ramp_rate != 0.0 {
        let ramp = SigmaModel::Ramp {
            rate: cfg.params.ramp_rate,
        };
        // separate seeds from the main run
        let (a, b) = split_samples(stationarity_samples(cfg, &spec, &ramp, !cfg.seed)?);
        let c = stationarity_test(&a, &b, level)?;
        let worst = c.ks_p_values.iter().copied().fold(c.covariance_p_value, f64::min);
        out.rows.push(CheckRow::flag("ramp_control_rejected", worst, level, !c.passes));
    }
    Ok(out)
}

fn decomposition(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let tol = &cfg.tolerances;
    let a1 = check_assumption1(&spec);
    let mut out = Outcome::default();
    // estimate: upper end of the admissible ζ₀ window; target: its lower end
    out.rows.push(CheckRow::flag("assumption1_window", a1.window.1, a1.window.0, a1.passes));
    if !a1.passes {
        out.data = format!("assumption1\n{}\n", a1.detail.replace(',', ";"));
        return Ok(out);
    }
    let depth = uniform_depth(cfg, |t| bss_depth(&spec, t))?;
    let grid = decomposition_grid(cfg.grid.dt, cfg.grid.horizon, depth)?;
    let coarse_grid = grid.coarsen()?;
    let fine = DecompositionPlans::new(&spec, &grid)?;
    let ftc_paths = cfg.params.ftc_paths.min(cfg.n_paths);
    let coarse = if ftc_paths > 0 {
        Some(DecompositionPlans::new(&spec, &coarse_grid)?)
    } else {
        None
    };
    let strides = &cfg.params.strides;
    let per_path = replicate(cfg.n_paths, cfg.seed, |i, seed| {
        let noise = Noise::generate(&cfg.sigma, &grid, seed)?;
        let r = fine.evaluate(&noise)?;
        let ftc = match &coarse {
            Some(c) if i < ftc_paths => {
                let rc = c.evaluate(&noise.coarsen(&grid)?)?;
                Some((ftc_residuals(&r), ftc_residuals(&rc)))
            }
            _ => None,
        };
        let csv = (i == 0).then(|| r.to_csv());
        let rel_identity = r.identity_residual / r.scale.max(f64::MIN_POSITIVE);
        Ok((variogram(&r.y, strides), variogram(&r.v, strides), ftc, csv, rel_identity))
    })?;
    let sc = scales(strides, cfg.grid.dt);
    let vy = mean_rows(&per_path.iter().map(|p| p.0.clone()).collect::<Vec<_>>());
    let vv = mean_rows(&per_path.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    let alpha = spec.alpha();
    let y_slope = loglog_fit(&sc, &vy)?.slope;
    let v_slope = loglog_fit(&sc, &vv)?.slope;
    out.rows.push(CheckRow::at_least("v_increment_exponent", v_slope, tol.v_exponent_min));
    out.rows.push(CheckRow::within("y_increment_exponent", y_slope, 2.0 * alpha + 1.0, tol.exponent));
    let ftc: Vec<_> = per_path.iter().filter_map(|p| p.2).collect();
    if !ftc.is_empty() {
        for i in 0..3 {
            let f: f64 = ftc.iter().map(|x| x.0[i]).sum();
            let c: f64 = ftc.iter().map(|x| x.1[i]).sum();
            let order = if f == 0.0 && c == 0.0 { f64::INFINITY } else { (c / f).log2() };
            out.rows.push(CheckRow::at_least(format!("ftc_order_u{}", i + 1), order, tol.ftc_order_min));
        }
    }
    let worst_identity = per_path.iter().map(|p| p.4).fold(0.0, f64::max);
    out.rows.push(CheckRow::at_most("identity_rel_residual", worst_identity, 1e-9));
    out.data = per_path[0].3.clone().unwrap_or_default();
    Ok(out)
}

fn langevin(cfg: &ExperimentConfig) -> Result<Outcome> {
    let alpha = cfg.kernel.alpha();
    let lambda = cfg.params.lambda;
    let tol = &cfg.tolerances;
    // the closed form weights X_s by e^{-λ(t-s)}
    let depth = uniform_depth(cfg, |t| Ok(-t.ln() / lambda))?;
    let grid = SimGrid::uniform(cfg.grid.dt, depth, cfg.grid.horizon)?;
    let coarse = grid.coarsen()?;
    let probe_steps = [0, grid.n_future() / 2, grid.n_future()];
    let per_seed = replicate(cfg.n_paths, cfg.seed, |_, seed| {
        let noise = Noise::generate(&cfg.sigma, &grid, seed)?;
        let x = x_at_uniform_points(alpha, &noise, &grid)?;
        let path = langevin_from_x(lambda, &x, &grid);
        let rf = langevin_residual(lambda, &path, &x[grid.n_past()..]);
        let cn = noise.coarsen(&grid)?;
        let xc = x_at_uniform_points(alpha, &cn, &coarse)?;
        let pc = langevin_from_x(lambda, &xc, &coarse);
        let rc = langevin_residual(lambda, &pc, &xc[coarse.n_past()..]);
        let mut agree: f64 = 0.0;
        for &k in &probe_steps {
            let t = k as f64 * grid.dt();
            let f = IntegrandSpec::exp(lambda, t)?;
            let w = wiener_integral(&f, alpha, &noise, &grid, WienerScheme::GridRiemann)?;
            agree = agree.max((w - path.z[k]).abs());
        }
        Ok((rf, rc, agree))
    })?;
    let dt = grid.dt();
    let cs: Vec<f64> = per_seed.iter().map(|r| r.0 / dt).collect();
    let cmax = cs.iter().copied().fold(0.0, f64::max);
    let cmin = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let agree = per_seed.iter().map(|r| r.2).fold(0.0, f64::max);
    let mut out = Outcome {
        data: String::from("replication,residual_fine,residual_coarse,c_fine,c_coarse\n"),
        ..Outcome::default()
    };
    for (i, r) in per_seed.iter().enumerate() {
        let _ = writeln!(out.data, "{i},{:?},{:?},{:?},{:?}", r.0, r.1, r.0 / dt, r.1 / (2.0 * dt));
    }
    out.rows.push(CheckRow::at_most("closed_form_vs_wiener", agree, tol.langevin_agree));
    out.rows.push(CheckRow::at_most("residual_constant_spread", cmax / cmin, tol.langevin_c_spread));
    // halving dt should not raise C = residual/dt: the residual is O(dt)
    let fine_total: f64 = per_seed.iter().map(|r| r.0).sum();
    let coarse_total: f64 = per_seed.iter().map(|r| r.1).sum();
    let order = (coarse_total / fine_total).log2();
    out.rows.push(CheckRow::at_least("residual_order", order, 1.0 - tol.exponent));
    Ok(out)
}

fn stieltjes_errors(cfg: &ExperimentConfig, f: &IntegrandSpec, alpha: f64, grids: &[SimGrid]) -> Result<Vec<f64>> {
    let t = f.t;
    let per_seed = replicate(cfg.n_paths, cfg.seed, |_, seed| {
        let mut noise = Noise::generate(&cfg.sigma, &grids[0], seed)?;
        let mut errs = Vec::with_capacity(grids.len());
        for (k, g) in grids.iter().enumerate() {
            if k > 0 {
                noise = noise.coarsen(&grids[k - 1])?;
            }
            let w = wiener_integral(f, alpha, &noise, g, WienerScheme::Translation)?;
            let x = x_at_uniform_points(alpha, &noise, g)?;
            let ls = lebesgue_stieltjes(f, &x, g, t)?;
            errs.push((w - ls).powi(2));
        }
        Ok(errs)
    })?;
    Ok(mean_rows(&per_seed).into_iter().map(f64::sqrt).collect())
}

fn wiener_equiv(cfg: &ExperimentConfig) -> Result<Outcome> {
    let alpha = cfg.kernel.alpha();
    let t = cfg.grid.horizon;
    let tol = &cfg.tolerances;
    let depth = uniform_depth(cfg, |_| {
        Err(Error::InvalidParameter("wiener_equiv needs grid.T_trunc".into()))
    })?;
    let mut grids = vec![SimGrid::uniform(cfg.grid.dt, depth, t)?];
    for _ in 0..2 {
        let c = grids[grids.len() - 1].coarsen()?;
        grids.push(c);
    }
    let target = (alpha + 0.5).min(1.0);
    let mut out = Outcome {
        data: String::from("integrand,dt,rms_difference\n"),
        ..Outcome::default()
    };
    let integrands = [
        ("exp", IntegrandSpec::exp(cfg.params.lambda, t)?),
        ("power", IntegrandSpec::power_tail(cfg.params.beta, alpha, t)?),
    ];
    for (name, f) in &integrands {
        let m = membership_check(f, alpha, t, None)?;
        out.rows.push(CheckRow::flag(format!("membership_{name}"), m.tail_exponent_fit, -1.0, m.in_h));
        let e = stieltjes_errors(cfg, f, alpha, &grids)?;
        for (g, v) in grids.iter().zip(&e) {
            let _ = writeln!(out.data, "{name},{:?},{v:?}", g.dt());
        }
        let order = (e[2] / e[0]).log2() / 2.0;
        out.rows.push(CheckRow::at_least(format!("stieltjes_order_{name}"), order, target));
    }
    // ℓ_t(s) = ∫_s^t K(r,s) f(r) dr for f(r) = (1+|r|)^{-2}
    let f = |r: f64| (1.0 + r.abs()).powi(-2);
    let fit = ell_asymptotic_fit(&f, alpha, t)?;
    out.rows.push(CheckRow::at_most("ell_remainder_exponent", fit.remainder_exponent, alpha - 1.0 + tol.ell_margin));
    let sq = fit.square_exponent;
    out.rows.push(CheckRow::flag("ell_square_exponent", sq, -1.0, sq < -1.0));
    Ok(out)
}

fn roughness(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let alpha = spec.alpha();
    let hurst = alpha + 0.5;
    let tol = &cfg.tolerances;
    let horizon = cfg.grid.horizon;
    let fgrid = match cfg.grid.truncation {
        Truncation::Depth(d) => SimGrid::uniform(cfg.grid.dt, d, horizon)?,
        Truncation::Tolerance(t) => fbm_grid(hurst, cfg.grid.dt, horizon, t)?,
    };
    let ygrid = kernel_grid(cfg, &spec, horizon)?;
    let future = WeightPlan::future_rows(&fgrid);
    let fplan = WeightPlan::new(&mvn_parts(alpha), &fgrid, &future)?;
    let yplan = WeightPlan::new(&bss_parts(&spec), &ygrid, &WeightPlan::future_rows(&ygrid))?;
    let strides = &cfg.params.strides;
    let unit = SigmaModel::Constant(1.0);
    let per_path = replicate(cfg.n_paths, cfg.seed, |_, seed| {
        let b = fplan.apply(&Noise::generate(&unit, &fgrid, seed)?.modulated());
        let y = yplan.apply(&Noise::generate(&cfg.sigma, &ygrid, seed)?.modulated());
        Ok((b[b.len() - 1], variogram(&b, strides), variogram(&y, strides)))
    })?;
    let mut m = Moments::new();
    for p in &per_path {
        m.push(p.0 * p.0);
    }
    let exact = c_hurst(hurst)? * horizon.powf(2.0 * hurst);
    let sc = scales(strides, cfg.grid.dt);
    let vb = mean_rows(&per_path.iter().map(|p| p.1.clone()).collect::<Vec<_>>());
    let vy = mean_rows(&per_path.iter().map(|p| p.2.clone()).collect::<Vec<_>>());
    let fb = loglog_fit(&sc, &vb)?;
    let fy = loglog_fit(&sc, &vy)?;
    let mut out = Outcome {
        data: String::from("scale,fbm_variogram,y_variogram\n"),
        ..Outcome::default()
    };
    for i in 0..sc.len() {
        let _ = writeln!(out.data, "{:?},{:?},{:?}", sc[i], vb[i], vy[i]);
    }
    out.rows.push(CheckRow::within(
        "fbm_variance",
        m.mean(),
        exact,
        tol.se_multiplier * m.std_error(),
    ));
    out.rows.push(CheckRow::within("fbm_increment_slope", fb.slope, 2.0 * hurst, tol.fbm_slope));
    out.rows.push(CheckRow::within("y_alpha_hat", (fy.slope - 1.0) / 2.0, alpha, tol.exponent));
    Ok(out)
}

fn future_paths(cfg: &ExperimentConfig, spec: &KernelSpec) -> Result<(SimGrid, Vec<Vec<f64>>)> {
    let grid = kernel_grid(cfg, spec, cfg.grid.horizon)?;
    let plan = WeightPlan::new(&bss_parts(spec), &grid, &WeightPlan::future_rows(&grid))?;
    let paths = replicate(cfg.n_paths, cfg.seed, |_, seed| {
        Ok(plan.apply(&Noise::generate(&cfg.sigma, &grid, seed)?.modulated()))
    })?;
    Ok((grid, paths))
}

fn pvariation(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let alpha = spec.alpha();
    let tol = &cfg.tolerances;
    let levels = cfg.params.levels;
    let (grid, paths) = future_paths(cfg, &spec)?;
    dyadic_steps(&grid)?;
    let critical = 1.0 / (alpha + 0.5);
    let (p_hi, p_lo) = (critical + 0.5, critical - 0.5);
    let ladders = paths
        .par_iter()
        .map(|y| {
            Ok((
                p_variation_ladder(y, 2.0, levels)?,
                p_variation_sup_ladder(y, p_hi, levels)?,
                p_variation_sup_ladder(y, p_lo, levels)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let qv = mean_rows(&ladders.iter().map(|l| l.0.clone()).collect::<Vec<_>>());
    let hi = mean_rows(&ladders.iter().map(|l| l.1.clone()).collect::<Vec<_>>());
    let lo = mean_rows(&ladders.iter().map(|l| l.2.clone()).collect::<Vec<_>>());
    let ratios = |v: &[f64]| v.windows(2).map(|w| w[1] / w[0]).collect::<Vec<f64>>();
    let (rh, rl) = (ratios(&hi), ratios(&lo));
    let mut out = Outcome {
        data: String::from("mesh,quadratic_variation,p_above,p_below\n"),
        ..Outcome::default()
    };
    for l in 0..levels {
        let mesh = grid.dt() * (1u64 << (levels - 1 - l)) as f64;
        let _ = writeln!(out.data, "{mesh:?},{:?},{:?},{:?}", qv[l], hi[l], lo[l]);
    }
    let slope = qv_slope(&qv, grid.dt())?.slope;
    out.rows.push(CheckRow::within("qv_slope", slope, 2.0 * alpha, tol.exponent));
    let rmin = rh.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = rh.iter().copied().fold(0.0, f64::max);
    out.rows.push(CheckRow::at_least(format!("pvar_p{p_hi:.3}_ratio_min"), rmin, tol.pvar_stable_lo));
    out.rows.push(CheckRow::at_most(format!("pvar_p{p_hi:.3}_ratio_max"), rmax, tol.pvar_stable_hi));
    let gmin = rl.iter().copied().fold(f64::INFINITY, f64::min);
    out.rows.push(CheckRow::at_least(format!("pvar_p{p_lo:.3}_growth_min"), gmin, tol.pvar_growth));
    Ok(out)
}

/// Growth parameter `ζ` of the exponential bound on the test functions.
const TEST_FN_ZETA: f64 = 0.1;

fn ito_young(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let alpha = spec.alpha();
    let tol = &cfg.tolerances;
    let (grid, paths) = future_paths(cfg, &spec)?;
    let m = dyadic_steps(&grid)?;
    let levels = cfg.params.levels;
    if levels > m + 1 {
        return Err(Error::InvalidParameter(format!("{levels} levels need grid.T / grid.dt ≥ 2^{}", levels - 1)));
    }
    let lv: Vec<usize> = (m + 1 - levels..=m).collect();
    let sq = SmoothFn::square(TEST_FN_ZETA);
    let id = SmoothFn::identity(TEST_FN_ZETA);
    let per_path = paths
        .par_iter()
        .map(|y| {
            let a = ito_young_verify(&sq, y, alpha, &lv)?;
            let b = ito_young_verify(&id, y, alpha, &lv)?;
            let worst_id = b.residuals.iter().copied().fold(0.0, f64::max);
            Ok((a.residuals, worst_id, y[y.len() - 1].powi(2)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = mean_rows(&per_path.iter().map(|p| p.0.clone()).collect::<Vec<_>>());
    let mut fy = Moments::new();
    for p in &per_path {
        fy.push(p.2);
    }
    let sd = fy.variance().sqrt();
    let decay = mean.windows(2).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    let final_frac = mean[mean.len() - 1] / sd;
    let id_res = per_path.iter().map(|p| p.1).fold(0.0, f64::max);
    let mut out = Outcome {
        data: String::from("level,mean_residual\n"),
        ..Outcome::default()
    };
    for (l, r) in lv.iter().zip(&mean) {
        let _ = writeln!(out.data, "{l},{r:?}");
    }
    out.rows.push(CheckRow::at_least("young_decay_min", decay, tol.young_decay));
    out.rows.push(CheckRow::at_most("young_final_fraction", final_frac, tol.young_final_frac));
    out.rows.push(CheckRow::flag("young_identity_residual", id_res, 0.0, id_res == 0.0));
    Ok(out)
}

fn ito_malliavin(cfg: &ExperimentConfig) -> Result<Outcome> {
    let alpha = cfg.kernel.alpha();
    let horizon = cfg.grid.horizon;
    let tol = &cfg.tolerances;
    let f = SmoothFn::square(TEST_FN_ZETA);
    let exact = horizon.powf(2.0 * alpha + 1.0) / (2.0 * alpha + 1.0);
    // B̃^α only sees noise after 0, so the grid has no past
    let n = (horizon / cfg.grid.dt).round() as usize;
    let grid = SimGrid::new(cfg.grid.dt, 0, n)?;
    let plan = WeightPlan::new(&riemann_liouville_parts(alpha), &grid, &WeightPlan::future_rows(&grid))?;
    let unit = SigmaModel::Constant(1.0);
    let first = plan.apply(&Noise::generate(&unit, &grid, replication_seed(cfg.seed, 0))?.modulated());
    let tr = trace_term(&f, &first, alpha, horizon)?;
    let vals = replicate(cfg.n_paths, cfg.seed, |_, seed| {
        let y = plan.apply(&Noise::generate(&unit, &grid, seed)?.modulated());
        skorohod_via_residual(&f, &y, alpha, horizon)
    })?;
    let mut m = Moments::new();
    for v in &vals {
        m.push(*v);
    }
    let mut out = Outcome {
        data: format!("trace_term,closed_form,divergence_mean,std_error\n{tr:?},{exact:?},{:?},{:?}\n", m.mean(), m.std_error()),
        ..Outcome::default()
    };
    out.rows.push(CheckRow::within("trace_term", tr, exact, tol.trace_abs));
    out.rows.push(CheckRow::within(
        "divergence_mean",
        m.mean(),
        0.0,
        tol.se_multiplier * m.std_error(),
    ));
    Ok(out)
}

/// Tail exponent of the autocovariance of a power kernel with `L'` decay
/// `β`: `1 - 2β` for `β < 1`, `-β` beyond.
pub fn power_memory_exponent(beta: f64) -> f64 {
    if beta < 1.0 {
        1.0 - 2.0 * beta
    } else {
        -beta
    }
}

fn memory_tail(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.spec()?;
    let lags = log_space(cfg.params.lag_min, cfg.params.lag_max, 13);
    let fit = memory_tail_fit(&spec, &lags)?;
    let mut out = Outcome {
        data: String::from("lag,autocovariance\n"),
        ..Outcome::default()
    };
    for (h, c) in fit.lags.iter().zip(&fit.autocov) {
        let _ = writeln!(out.data, "{h:?},{c:?}");
    }
    match cfg.kernel {
        KernelConfig::Power { beta, .. } => {
            out.rows.push(CheckRow::within(
                "memory_tail_slope",
                fit.slope,
                power_memory_exponent(beta),
                cfg.tolerances.exponent,
            ));
            out.rows.push(CheckRow::flag("power_law_tail", fit.short_memory as u8 as f64, 0.0, !fit.short_memory));
        }
        KernelConfig::Gamma { .. } => {
            out.rows.push(CheckRow::flag("short_memory", fit.short_memory as u8 as f64, 1.0, fit.short_memory));
        }
    }
    Ok(out)
}
