//! Run configuration and its line-oriented `key = value` file format.
//!
//! ```text
//! # tp2 replica
//! grid.a = 0
//! grid.b = 4*pi
//! grid.nx = 100
//! time.t_end = 5
//! time.nt = 5000
//! initial = sin(x^2)
//! velocity = x + t
//! scheme = forward
//! boundary = one_sided
//! sign = paper
//! snapshot_every = 50      # optional, default max(nt / 100, 1)
//! rk_dt_divisor = 10       # optional, default 10
//! ```
//!
//! `grid.a`, `grid.b` and `time.t_end` accept constant expressions such as
//! `-pi/2`. Unknown or repeated keys are errors.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{Grid1D, InitialCondition, TimeGrid};
use crate::expr::{DependenceClass, VelocityExpr};
use crate::schemes::{BoundaryPolicy, SchemeId, SignConvention};

pub const DEFAULT_RK_DT_DIVISOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// A stepping scheme, or exact translation for constant velocity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Exact,
    Scheme(SchemeId),
}

impl Method {
    pub fn token(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Scheme(id) => id.token(),
        }
    }
}

impl FromStr for Method {
    type Err = crate::schemes::TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            Ok(Method::Exact)
        } else {
            s.parse().map(Method::Scheme)
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub a: f64,
    pub b: f64,
    pub nx: usize,
    pub t_end: f64,
    pub nt: usize,
    pub initial: String,
    pub velocity: String,
    pub method: Method,
    pub boundary: BoundaryPolicy,
    pub sign: SignConvention,
    pub snapshot_every: usize,
    pub rk_dt_divisor: usize,
}

/// A validated configuration with its expressions parsed.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub grid: Grid1D,
    pub time: TimeGrid,
    pub initial: InitialCondition,
    pub velocity: VelocityExpr,
}

pub fn default_snapshot_every(nt: usize) -> usize {
    (nt / 100).max(1)
}

impl RunConfig {
    /// Configuration with default `snapshot_every` and `rk_dt_divisor`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        (a, b, nx): (f64, f64, usize),
        (t_end, nt): (f64, usize),
        initial: &str,
        velocity: &str,
        method: Method,
        boundary: BoundaryPolicy,
        sign: SignConvention,
    ) -> Self {
        Self {
            a,
            b,
            nx,
            t_end,
            nt,
            initial: initial.to_string(),
            velocity: velocity.to_string(),
            method,
            boundary,
            sign,
            snapshot_every: default_snapshot_every(nt),
            rk_dt_divisor: DEFAULT_RK_DT_DIVISOR,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut seen: Vec<(&'static str, String, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let known = KEYS
                .iter()
                .copied()
                .find(|k| *k == key)
                .ok_or_else(|| ConfigError::Syntax {
                    line,
                    message: format!("unknown key '{key}'"),
                })?;
            if seen.iter().any(|(k, ..)| *k == known) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("empty value for '{key}'"),
                });
            }
            seen.push((known, value.to_string(), line));
        }

        let get = |key: &'static str| seen.iter().find(|(k, ..)| *k == key).map(|(_, v, l)| (v.as_str(), *l));
        let required = |key: &'static str| get(key).ok_or(ConfigError::Missing(key));
        let syntax = |line: usize, message: String| ConfigError::Syntax { line, message };

        let constant = |key: &'static str| -> Result<f64, ConfigError> {
            let (v, line) = required(key)?;
            let expr = VelocityExpr::parse(v).map_err(|e| syntax(line, format!("{key}: {e}")))?;
            if expr.classify() != DependenceClass::Constant {
                return Err(syntax(line, format!("{key} must be a constant expression")));
            }
            expr.eval(0.0, 0.0, 0.0)
                .map_err(|e| syntax(line, format!("{key}: {e}")))
        };
        let count = |key: &'static str, value: Option<(&str, usize)>| -> Result<Option<usize>, ConfigError> {
            value
                .map(|(v, line)| {
                    v.parse::<usize>()
                        .map_err(|_| syntax(line, format!("{key} must be a non-negative integer, got '{v}'")))
                })
                .transpose()
        };
        let token = |key: &'static str| -> Result<(&str, usize), ConfigError> { required(key) };

        let nt = count("time.nt", Some(required("time.nt")?))?.expect("present");
        let (scheme, scheme_line) = token("scheme")?;
        let (boundary, boundary_line) = token("boundary")?;
        let (sign, sign_line) = token("sign")?;

        let config = RunConfig {
            a: constant("grid.a")?,
            b: constant("grid.b")?,
            nx: count("grid.nx", Some(required("grid.nx")?))?.expect("present"),
            t_end: constant("time.t_end")?,
            nt,
            initial: required("initial")?.0.to_string(),
            velocity: required("velocity")?.0.to_string(),
            method: scheme
                .parse()
                .map_err(|e: crate::schemes::TokenError| syntax(scheme_line, e.to_string()))?,
            boundary: boundary
                .parse()
                .map_err(|e: crate::schemes::TokenError| syntax(boundary_line, e.to_string()))?,
            sign: sign
                .parse()
                .map_err(|e: crate::schemes::TokenError| syntax(sign_line, e.to_string()))?,
            snapshot_every: count("snapshot_every", get("snapshot_every"))?
                .unwrap_or_else(|| default_snapshot_every(nt)),
            rk_dt_divisor: count("rk_dt_divisor", get("rk_dt_divisor"))?.unwrap_or(DEFAULT_RK_DT_DIVISOR),
        };
        config.prepare()?;
        Ok(config)
    }

    /// Checks every invariant and parses the expressions.
    pub fn prepare(&self) -> Result<Prepared, ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        let grid = Grid1D::new(self.a, self.b, self.nx).map_err(|e| invalid(e.to_string()))?;
        let time = TimeGrid::new(self.t_end, self.nt).map_err(|e| invalid(e.to_string()))?;
        if self.snapshot_every == 0 || self.snapshot_every > self.nt {
            return Err(invalid(format!(
                "snapshot_every must lie in 1..={}, got {}",
                self.nt, self.snapshot_every
            )));
        }
        if self.rk_dt_divisor == 0 {
            return Err(invalid("rk_dt_divisor must be positive".to_string()));
        }
        let initial = InitialCondition::parse(&self.initial).map_err(|e| invalid(format!("initial: {e}")))?;
        let velocity = VelocityExpr::parse(&self.velocity).map_err(|e| invalid(format!("velocity: {e}")))?;
        if self.method == Method::Exact && velocity.classify() != DependenceClass::Constant {
            return Err(invalid("scheme 'exact' needs a constant velocity".to_string()));
        }
        Ok(Prepared {
            grid,
            time,
            initial,
            velocity,
        })
    }

    /// Key/value pairs in canonical order, as written by [`fmt::Display`].
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("grid.a", crate::output::format_number(self.a)),
            ("grid.b", crate::output::format_number(self.b)),
            ("grid.nx", self.nx.to_string()),
            ("time.t_end", crate::output::format_number(self.t_end)),
            ("time.nt", self.nt.to_string()),
            ("initial", self.initial.clone()),
            ("velocity", self.velocity.clone()),
            ("scheme", self.method.token().to_string()),
            ("boundary", self.boundary.token()),
            ("sign", self.sign.token().to_string()),
            ("snapshot_every", self.snapshot_every.to_string()),
            ("rk_dt_divisor", self.rk_dt_divisor.to_string()),
        ]
    }

    /// True when both configurations describe the same problem (grid, time,
    /// data and velocity), whatever their schemes.
    pub fn same_problem(&self, other: &RunConfig) -> bool {
        self.a == other.a
            && self.b == other.b
            && self.nx == other.nx
            && self.t_end == other.t_end
            && self.nt == other.nt
            && self.initial.trim() == other.initial.trim()
            && self.velocity.trim() == other.velocity.trim()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RunConfig::parse(s)
    }
}

const KEYS: [&str; 12] = [
    "grid.a",
    "grid.b",
    "grid.nx",
    "time.t_end",
    "time.nt",
    "initial",
    "velocity",
    "scheme",
    "boundary",
    "sign",
    "snapshot_every",
    "rk_dt_divisor",
];
