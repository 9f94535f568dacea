use std::path::PathBuf;

use thiserror::Error;

/// One problem found while reading a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line number, or 0 when the problem is a missing key.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "quadrature did not converge on [{a}, {b}]: estimate {estimate:e}, error {error:e} after {panels} panels"
    )]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
        panels: usize,
    },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("truncation not certified: tail fraction {tail:e} exceeds {limit:e} at depth {depth}")]
    Truncation { tail: f64, limit: f64, depth: f64 },

    #[error("kernel derivative is singular at t = s = {0}")]
    Singularity(f64),

    #[error("circulant embedding failed: minimum eigenvalue {min_eigenvalue:e} at size {size}")]
    Embedding { min_eigenvalue: f64, size: usize },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("integrand not admissible: {0}")]
    Membership(String),

    #[error("{}", format_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_issues(issues: &[ConfigIssue]) -> String {
    let mut out = format!("{} configuration error(s)", issues.len());
    for issue in issues {
        out.push_str("\n  ");
        out.push_str(&issue.to_string());
    }
    out
}

pub type Result<T> = std::result::Result<T, Error>;
