//! Line-oriented experiment configuration.
//!
//! One `key = value` pair per line, dotted keys for sections, `#` starts a
//! comment. Every problem in a file is reported, each with its line number.
//!
//! ```text
//! experiment = covariance
//! seed = 42
//! n_paths = 10000
//! kernel.family = gamma
//! kernel.alpha = 0.25
//! kernel.lambda = 1
//! grid.dt = 0.001953125
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{ConfigIssue, Error, Result};
use crate::kernels::{KernelSpec, ALPHA_RANGE_MSG};
use crate::noise_sim::{SigmaModel, DEFAULT_TOL_TRUNC};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExperimentKind {
    Covariance,
    Stationarity,
    Decomposition,
    Langevin,
    WienerEquiv,
    Roughness,
    Pvariation,
    ItoYoung,
    ItoMalliavin,
    MemoryTail,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Covariance,
        ExperimentKind::Stationarity,
        ExperimentKind::Decomposition,
        ExperimentKind::Langevin,
        ExperimentKind::WienerEquiv,
        ExperimentKind::Roughness,
        ExperimentKind::Pvariation,
        ExperimentKind::ItoYoung,
        ExperimentKind::ItoMalliavin,
        ExperimentKind::MemoryTail,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Covariance => "covariance",
            ExperimentKind::Stationarity => "stationarity",
            ExperimentKind::Decomposition => "decomposition",
            ExperimentKind::Langevin => "langevin",
            ExperimentKind::WienerEquiv => "wiener_equiv",
            ExperimentKind::Roughness => "roughness",
            ExperimentKind::Pvariation => "pvariation",
            ExperimentKind::ItoYoung => "ito_young",
            ExperimentKind::ItoMalliavin => "ito_malliavin",
            ExperimentKind::MemoryTail => "memory_tail",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == s)
    }

    pub fn description(&self) -> &'static str {
        match self {
            ExperimentKind::Covariance => "sample autocovariance of a gamma-kernel process against the Whittle-Matern form",
            ExperimentKind::Stationarity => "two-sample KS tests of the law at t and t+h, with a ramp-volatility control",
            ExperimentKind::Decomposition => "V = Y^X - Y: increment exponents and FTC checks of u1, u2, u3",
            ExperimentKind::Langevin => "closed-form Langevin solution: equation residual and agreement with the Wiener integral",
            ExperimentKind::WienerEquiv => "Wiener integral against the Stieltjes form, and asymptotics of l_t",
            ExperimentKind::Roughness => "fBm variance and increment slope, variogram roughness of Y",
            ExperimentKind::Pvariation => "realized quadratic variation slope and the p-variation dichotomy",
            ExperimentKind::ItoYoung => "pathwise Ito formula with Young sums on dyadic meshes",
            ExperimentKind::ItoMalliavin => "trace term of the Malliavin Ito formula and the zero mean of the divergence",
            ExperimentKind::MemoryTail => "log-log tail slope of the exact autocovariance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelConfig {
    Gamma { alpha: f64, lambda: f64 },
    Power { alpha: f64, beta: f64 },
}

impl KernelConfig {
    pub fn alpha(&self) -> f64 {
        match *self {
            KernelConfig::Gamma { alpha, .. } | KernelConfig::Power { alpha, .. } => alpha,
        }
    }

    pub fn build(&self) -> Result<KernelSpec> {
        match *self {
            KernelConfig::Gamma { alpha, lambda } => KernelSpec::gamma(alpha, lambda),
            KernelConfig::Power { alpha, beta } => KernelSpec::power(alpha, beta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Fixed uniform past `[-T_trunc, 0]`.
    Depth(f64),
    /// Depth certified so that the discarded L² mass is below `tol²`.
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub dt: f64,
    pub horizon: f64,
    pub truncation: Truncation,
}

/// Acceptance thresholds. Every field is a `tol.<name>` key.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    /// Monte Carlo checks pass within this many standard errors.
    pub se_multiplier: f64,
    /// Relative error of the Bessel evaluator at `ν = 1/2`.
    pub bessel_rel: f64,
    /// Absolute error of the fBm increment slope against `2H`.
    pub fbm_slope: f64,
    /// Absolute error of fitted scaling exponents.
    pub exponent: f64,
    /// Smallest admissible increment exponent of `V`.
    pub v_exponent_min: f64,
    /// Smallest admissible FTC residual order.
    pub ftc_order_min: f64,
    pub pvar_stable_lo: f64,
    pub pvar_stable_hi: f64,
    /// Smallest growth factor per halving below the critical `p`.
    pub pvar_growth: f64,
    /// Agreement of the two Langevin computations.
    pub langevin_agree: f64,
    /// Largest ratio between the residual constants of two seeds.
    pub langevin_c_spread: f64,
    pub ks_level: f64,
    /// Smallest residual decay factor per dyadic level.
    pub young_decay: f64,
    /// Largest final residual as a fraction of `sd(f(Y_T))`.
    pub young_final_frac: f64,
    pub trace_abs: f64,
    /// Slack on the remainder exponent `α - 1` of `ℓ_t`.
    pub ell_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            se_multiplier: 3.0,
            bessel_rel: 1e-6,
            fbm_slope: 0.05,
            exponent: 0.1,
            v_exponent_min: 1.8,
            ftc_order_min: 0.9,
            pvar_stable_lo: 0.8,
            pvar_stable_hi: 1.25,
            pvar_growth: 1.5,
            langevin_agree: 1e-10,
            langevin_c_spread: 10.0,
            ks_level: 0.01,
            young_decay: 1.3,
            young_final_frac: 0.05,
            trace_abs: 1e-6,
            ell_margin: 0.05,
        }
    }
}

/// Experiment-specific settings. Every field is a `params.<name>` key.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Covariance lags.
    pub lags: Vec<f64>,
    /// Base times per path for the covariance products.
    pub n_bases: usize,
    pub base_spacing: f64,
    /// Stationarity shift `h` and probe times.
    pub shift: f64,
    pub probes: Vec<f64>,
    /// Volatility growth rate of the non-stationary control; 0 disables it.
    pub ramp_rate: f64,
    /// Rate of the Langevin equation and of the exponential integrand.
    pub lambda: f64,
    /// Exponent of the power integrand.
    pub beta: f64,
    /// Dyadic levels of the Young and p-variation ladders.
    pub levels: usize,
    /// Paths on which FTC residuals are computed.
    pub ftc_paths: usize,
    /// Variogram strides, in grid steps.
    pub strides: Vec<usize>,
    /// Lag window of the memory fit.
    pub lag_min: f64,
    pub lag_max: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lags: vec![0.0, 0.25, 1.0, 2.0],
            n_bases: 4,
            base_spacing: 2.5,
            shift: 0.7,
            probes: vec![0.0, 0.5, 1.0],
            ramp_rate: 1.0,
            lambda: 1.0,
            beta: 1.0,
            levels: 6,
            ftc_paths: 20,
            strides: vec![1, 2, 4, 8],
            lag_min: 100.0,
            lag_max: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub kernel: KernelConfig,
    pub sigma: SigmaModel,
    pub grid: GridConfig,
    pub n_paths: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub tolerances: Tolerances,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn spec(&self) -> Result<KernelSpec> {
        self.kernel.build()
    }

    /// Canonical `key = value` listing; parsing it gives the same config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("experiment", self.experiment.name().into());
        kv("seed", self.seed.to_string());
        kv("n_paths", self.n_paths.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        match self.kernel {
            KernelConfig::Gamma { alpha, lambda } => {
                kv("kernel.family", "gamma".into());
                kv("kernel.alpha", num(alpha));
                kv("kernel.lambda", num(lambda));
            }
            KernelConfig::Power { alpha, beta } => {
                kv("kernel.family", "power".into());
                kv("kernel.alpha", num(alpha));
                kv("kernel.beta", num(beta));
            }
        }
        match self.sigma {
            SigmaModel::Constant(c) => {
                kv("sigma.model", "constant".into());
                kv("sigma.value", num(c));
            }
            SigmaModel::ExpOu { theta, independent } => {
                kv("sigma.model", "exp_ou".into());
                kv("sigma.theta", num(theta));
                kv("sigma.independent", independent.to_string());
            }
            SigmaModel::Ramp { rate } => {
                kv("sigma.model", "ramp".into());
                kv("sigma.rate", num(rate));
            }
        }
        kv("grid.dt", num(self.grid.dt));
        kv("grid.T", num(self.grid.horizon));
        match self.grid.truncation {
            Truncation::Depth(d) => kv("grid.T_trunc", num(d)),
            Truncation::Tolerance(t) => kv("grid.tol_trunc", num(t)),
        }
        let p = &self.params;
        kv("params.lags", list(&p.lags));
        kv("params.n_bases", p.n_bases.to_string());
        kv("params.base_spacing", num(p.base_spacing));
        kv("params.shift", num(p.shift));
        kv("params.probes", list(&p.probes));
        kv("params.ramp_rate", num(p.ramp_rate));
        kv("params.lambda", num(p.lambda));
        kv("params.beta", num(p.beta));
        kv("params.levels", p.levels.to_string());
        kv("params.ftc_paths", p.ftc_paths.to_string());
        kv(
            "params.strides",
            p.strides.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "),
        );
        kv("params.lag_min", num(p.lag_min));
        kv("params.lag_max", num(p.lag_max));
        for (name, v) in tolerance_fields(&self.tolerances) {
            kv(&format!("tol.{name}"), num(v));
        }
        out
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
}

fn tolerance_fields(t: &Tolerances) -> [(&'static str, f64); 16] {
    [
        ("se_multiplier", t.se_multiplier),
        ("bessel_rel", t.bessel_rel),
        ("fbm_slope", t.fbm_slope),
        ("exponent", t.exponent),
        ("v_exponent_min", t.v_exponent_min),
        ("ftc_order_min", t.ftc_order_min),
        ("pvar_stable_lo", t.pvar_stable_lo),
        ("pvar_stable_hi", t.pvar_stable_hi),
        ("pvar_growth", t.pvar_growth),
        ("langevin_agree", t.langevin_agree),
        ("langevin_c_spread", t.langevin_c_spread),
        ("ks_level", t.ks_level),
        ("young_decay", t.young_decay),
        ("young_final_frac", t.young_final_frac),
        ("trace_abs", t.trace_abs),
        ("ell_margin", t.ell_margin),
    ]
}

fn tolerance_slot<'a>(t: &'a mut Tolerances, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "se_multiplier" => &mut t.se_multiplier,
        "bessel_rel" => &mut t.bessel_rel,
        "fbm_slope" => &mut t.fbm_slope,
        "exponent" => &mut t.exponent,
        "v_exponent_min" => &mut t.v_exponent_min,
        "ftc_order_min" => &mut t.ftc_order_min,
        "pvar_stable_lo" => &mut t.pvar_stable_lo,
        "pvar_stable_hi" => &mut t.pvar_stable_hi,
        "pvar_growth" => &mut t.pvar_growth,
        "langevin_agree" => &mut t.langevin_agree,
        "langevin_c_spread" => &mut t.langevin_c_spread,
        "ks_level" => &mut t.ks_level,
        "young_decay" => &mut t.young_decay,
        "young_final_frac" => &mut t.young_final_frac,
        "trace_abs" => &mut t.trace_abs,
        "ell_margin" => &mut t.ell_margin,
        _ => return None,
    })
}

const KEYS: &[&str] = &[
    "experiment",
    "seed",
    "n_paths",
    "out_dir",
    "kernel.family",
    "kernel.alpha",
    "kernel.lambda",
    "kernel.beta",
    "sigma.model",
    "sigma.value",
    "sigma.theta",
    "sigma.independent",
    "sigma.rate",
    "grid.dt",
    "grid.T",
    "grid.T_trunc",
    "grid.tol_trunc",
    "params.lags",
    "params.n_bases",
    "params.base_spacing",
    "params.shift",
    "params.probes",
    "params.ramp_rate",
    "params.lambda",
    "params.beta",
    "params.levels",
    "params.ftc_paths",
    "params.strides",
    "params.lag_min",
    "params.lag_max",
];

fn known_key(key: &str) -> bool {
    if KEYS.contains(&key) {
        return true;
    }
    key.strip_prefix("tol.")
        .is_some_and(|n| tolerance_slot(&mut Tolerances::default(), n).is_some())
}

/// Raw entries with their line numbers plus the issues collected so far.
struct Reader {
    entries: BTreeMap<String, (usize, String)>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, line: usize, message: String) {
        self.issues.push(ConfigIssue { line, message });
    }

    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Option<(usize, T)> {
        let (line, v) = self.raw(key)?;
        let v = v.to_string();
        match v.parse::<T>() {
            Ok(x) => Some((line, x)),
            Err(_) => {
                self.issue(line, format!("{key}: expected {what} (got '{v}')"));
                None
            }
        }
    }

    fn real(&mut self, key: &str) -> Option<(usize, f64)> {
        let r = self.parsed::<f64>(key, "a number")?;
        if !r.1.is_finite() {
            self.issue(r.0, format!("{key}: must be finite"));
            return None;
        }
        Some(r)
    }

    fn positive(&mut self, key: &str) -> Option<(usize, f64)> {
        let r = self.real(key)?;
        if !(r.1 > 0.0) {
            self.issue(r.0, format!("{key}: must be positive (got {})", r.1));
            return None;
        }
        Some(r)
    }

    fn count(&mut self, key: &str) -> Option<(usize, usize)> {
        let r = self.parsed::<usize>(key, "a nonnegative integer")?;
        if r.1 == 0 {
            self.issue(r.0, format!("{key}: must be at least 1"));
            return None;
        }
        Some(r)
    }

    fn reals(&mut self, key: &str) -> Option<(usize, Vec<f64>)> {
        let (line, v) = self.raw(key)?;
        let v = v.to_string();
        let mut out = Vec::new();
        for item in v.split(',') {
            match item.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    self.issue(line, format!("{key}: expected a comma-separated list of numbers (got '{v}')"));
                    return None;
                }
            }
        }
        Some((line, out))
    }

    fn required(&mut self, key: &str, why: &str) {
        if self.raw(key).is_none() {
            self.issue(0, format!("missing key '{key}'{why}"));
        }
    }

    fn forbid(&mut self, key: &str, why: &str) {
        if let Some((line, _)) = self.raw(key) {
            self.issue(line, format!("{key}: {why}"));
        }
    }
}

/// Parse and validate a configuration; the error lists every problem.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut r = Reader {
        entries: BTreeMap::new(),
        issues: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            r.issue(line, format!("expected 'key = value' (got '{content}')"));
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !known_key(k) {
            r.issue(line, format!("unknown key '{k}'"));
            continue;
        }
        if v.is_empty() {
            r.issue(line, format!("{k}: missing value"));
            continue;
        }
        if let Some((first, _)) = r.entries.get(k) {
            let first = *first;
            r.issue(line, format!("duplicate key '{k}' (first set on line {first})"));
            continue;
        }
        r.entries.insert(k.to_string(), (line, v.to_string()));
    }

    r.required("experiment", "");
    let experiment = match r.raw("experiment") {
        Some((line, v)) => {
            let v = v.to_string();
            let k = ExperimentKind::from_name(&v);
            if k.is_none() {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                r.issue(line, format!("unknown experiment '{v}' (expected one of {})", names.join(", ")));
            }
            k
        }
        None => None,
    };
    let seed = r.parsed::<u64>("seed", "a nonnegative integer").map_or(0, |x| x.1);
    let n_paths = r.count("n_paths").map_or(100, |x| x.1);
    let out_dir = r.raw("out_dir").map_or_else(|| PathBuf::from("bsslab-out"), |(_, v)| PathBuf::from(v));

    let kernel = parse_kernel(&mut r);
    let sigma = parse_sigma(&mut r);
    let grid = parse_grid(&mut r);
    let params = parse_params(&mut r);

    let mut tolerances = Tolerances::default();
    let tol_keys: Vec<String> = r.entries.keys().filter(|k| k.starts_with("tol.")).cloned().collect();
    for key in tol_keys {
        if let Some((_, v)) = r.positive(&key) {
            if let Some(slot) = tolerance_slot(&mut tolerances, &key["tol.".len()..]) {
                *slot = v;
            }
        }
    }
    if tolerances.pvar_stable_lo >= tolerances.pvar_stable_hi {
        let line = r.raw("tol.pvar_stable_lo").map_or(0, |x| x.0);
        r.issue(line, "tol.pvar_stable_lo must be below tol.pvar_stable_hi".into());
    }
    if tolerances.ks_level >= 1.0 {
        let line = r.raw("tol.ks_level").map_or(0, |x| x.0);
        r.issue(line, "tol.ks_level must lie in (0,1)".into());
    }

    if !r.issues.is_empty() {
        r.issues.sort_by_key(|i| i.line);
        return Err(Error::Config(r.issues));
    }
    Ok(ExperimentConfig {
        experiment: experiment.expect("checked above"),
        kernel: kernel.expect("checked above"),
        sigma: sigma.expect("checked above"),
        grid: grid.expect("checked above"),
        n_paths,
        seed,
        out_dir,
        tolerances,
        params: params.expect("checked above"),
    })
}

fn parse_kernel(r: &mut Reader) -> Option<KernelConfig> {
    r.required("kernel.family", "");
    r.required("kernel.alpha", "");
    let alpha = r.real("kernel.alpha").and_then(|(line, a)| {
        if a == 0.0 || a.abs() >= 0.5 {
            r.issue(line, format!("{ALPHA_RANGE_MSG} (got {a})"));
            None
        } else {
            Some(a)
        }
    });
    let (line, family) = r.raw("kernel.family").map(|(l, v)| (l, v.to_string()))?;
    match family.as_str() {
        "gamma" => {
            r.required("kernel.lambda", " (required for kernel.family = gamma)");
            r.forbid("kernel.beta", "only used with kernel.family = power");
            let lambda = r.positive("kernel.lambda");
            Some(KernelConfig::Gamma {
                alpha: alpha?,
                lambda: lambda?.1,
            })
        }
        "power" => {
            r.required("kernel.beta", " (required for kernel.family = power)");
            r.forbid("kernel.lambda", "only used with kernel.family = gamma");
            let beta = r.real("kernel.beta").and_then(|(l, b)| {
                if b > 0.5 {
                    Some(b)
                } else {
                    r.issue(l, format!("kernel.beta: must exceed 1/2 (got {b})"));
                    None
                }
            });
            Some(KernelConfig::Power {
                alpha: alpha?,
                beta: beta?,
            })
        }
        other => {
            r.issue(line, format!("kernel.family: expected gamma or power (got '{other}')"));
            None
        }
    }
}

fn parse_sigma(r: &mut Reader) -> Option<SigmaModel> {
    let (line, model) = r
        .raw("sigma.model")
        .map_or((0, "constant".to_string()), |(l, v)| (l, v.to_string()));
    let unused = |r: &mut Reader, keys: &[&str]| {
        for k in keys {
            r.forbid(k, &format!("not used with sigma.model = {model}"));
        }
    };
    match model.as_str() {
        "constant" => {
            unused(r, &["sigma.theta", "sigma.independent", "sigma.rate"]);
            let v = match r.raw("sigma.value") {
                Some(_) => r.real("sigma.value")?.1,
                None => 1.0,
            };
            Some(SigmaModel::Constant(v))
        }
        "exp_ou" => {
            unused(r, &["sigma.value", "sigma.rate"]);
            let theta = match r.raw("sigma.theta") {
                Some(_) => r.positive("sigma.theta").map(|x| x.1),
                None => Some(1.0),
            };
            let independent = match r.raw("sigma.independent") {
                Some(_) => r.parsed::<bool>("sigma.independent", "true or false").map(|x| x.1),
                None => Some(false),
            };
            Some(SigmaModel::ExpOu {
                theta: theta?,
                independent: independent?,
            })
        }
        "ramp" => {
            unused(r, &["sigma.value", "sigma.theta", "sigma.independent"]);
            let rate = match r.raw("sigma.rate") {
                Some(_) => r.real("sigma.rate")?.1,
                None => 1.0,
            };
            Some(SigmaModel::Ramp { rate })
        }
        other => {
            r.issue(line, format!("sigma.model: expected constant, exp_ou or ramp (got '{other}')"));
            None
        }
    }
}

fn parse_grid(r: &mut Reader) -> Option<GridConfig> {
    let dt = match r.raw("grid.dt") {
        Some(_) => r.positive("grid.dt").map(|x| x.1),
        None => Some(1.0 / 256.0),
    };
    let horizon = match r.raw("grid.T") {
        Some(_) => r.positive("grid.T").map(|x| x.1),
        None => Some(1.0),
    };
    let truncation = match (r.raw("grid.T_trunc").is_some(), r.raw("grid.tol_trunc").is_some()) {
        (true, true) => {
            let line = r.raw("grid.tol_trunc").map_or(0, |x| x.0);
            r.issue(line, "grid.T_trunc and grid.tol_trunc are mutually exclusive".into());
            None
        }
        (true, false) => r.real("grid.T_trunc").and_then(|(l, d)| {
            if d >= 0.0 {
                Some(Truncation::Depth(d))
            } else {
                r.issue(l, format!("grid.T_trunc: must be nonnegative (got {d})"));
                None
            }
        }),
        (false, true) => r.real("grid.tol_trunc").and_then(|(l, t)| {
            if t > 0.0 && t < 1.0 {
                Some(Truncation::Tolerance(t))
            } else {
                r.issue(l, format!("grid.tol_trunc: must lie in (0,1) (got {t})"));
                None
            }
        }),
        (false, false) => Some(Truncation::Tolerance(DEFAULT_TOL_TRUNC)),
    };
    if let (Some(dt), Some(h)) = (dt, horizon) {
        if dt > h {
            let line = r.raw("grid.dt").map_or(0, |x| x.0);
            r.issue(line, format!("grid.dt = {dt} exceeds grid.T = {h}"));
            return None;
        }
    }
    Some(GridConfig {
        dt: dt?,
        horizon: horizon?,
        truncation: truncation?,
    })
}

fn parse_params(r: &mut Reader) -> Option<Params> {
    let mut p = Params::default();
    let mut ok = true;
    macro_rules! set {
        ($field:ident, $key:literal, $getter:ident) => {
            if r.raw($key).is_some() {
                match r.$getter($key) {
                    Some((_, v)) => p.$field = v,
                    None => ok = false,
                }
            }
        };
    }
    set!(lags, "params.lags", reals);
    set!(probes, "params.probes", reals);
    set!(n_bases, "params.n_bases", count);
    set!(base_spacing, "params.base_spacing", positive);
    set!(shift, "params.shift", positive);
    set!(lambda, "params.lambda", positive);
    set!(beta, "params.beta", positive);
    set!(levels, "params.levels", count);
    set!(ftc_paths, "params.ftc_paths", count);
    set!(lag_min, "params.lag_min", positive);
    set!(lag_max, "params.lag_max", positive);
    if r.raw("params.ramp_rate").is_some() {
        match r.real("params.ramp_rate") {
            Some((_, v)) => p.ramp_rate = v,
            None => ok = false,
        }
    }
    if let Some((line, v)) = r.raw("params.strides") {
        let v = v.to_string();
        let parsed: std::result::Result<Vec<usize>, _> = v.split(',').map(|s| s.trim().parse::<usize>()).collect();
        match parsed {
            Ok(s) if !s.is_empty() && s.iter().all(|x| *x > 0) => p.strides = s,
            _ => {
                r.issue(line, format!("params.strides: expected positive integers (got '{v}')"));
                ok = false;
            }
        }
    }
    for (key, vals) in [("params.lags", &p.lags), ("params.probes", &p.probes)] {
        if vals.iter().any(|x| *x < 0.0) {
            let line = r.raw(key).map_or(0, |x| x.0);
            r.issue(line, format!("{key}: entries must be nonnegative"));
            ok = false;
        }
    }
    if p.lag_max < 100.0 * p.lag_min {
        let line = r.raw("params.lag_max").or(r.raw("params.lag_min")).map_or(0, |x| x.0);
        r.issue(line, "params.lag_max must be at least 100 times params.lag_min".into());
        ok = false;
    }
    ok.then_some(p)
}
