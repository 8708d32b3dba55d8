//! Run configuration, read from TOML.

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("`{slot}`: {source}")]
    Expr { slot: String, source: ExprError },
    #[error("{0}")]
    Invalid(String),
}

/// A number or an expression string.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum ExprSpec {
    Number(f64),
    Text(String),
}

impl ExprSpec {
    pub fn source(&self) -> String {
        match self {
            ExprSpec::Number(v) => format!("{v:?}"),
            ExprSpec::Text(s) => s.clone(),
        }
    }
}

impl From<&str> for ExprSpec {
    fn from(s: &str) -> Self {
        ExprSpec::Text(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum AppKind {
    Sublinear,
    ConcaveConvex,
    Logistic,
    Custom,
}

impl std::str::FromStr for AppKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sublinear" => Ok(AppKind::Sublinear),
            "concave-convex" => Ok(AppKind::ConcaveConvex),
            "logistic" => Ok(AppKind::Logistic),
            "custom" => Ok(AppKind::Custom),
            _ => Err(format!("unknown application `{s}` (sublinear, concave-convex, logistic, custom)")),
        }
    }
}

impl AppKind {
    pub fn name(self) -> &'static str {
        match self {
            AppKind::Sublinear => "sublinear",
            AppKind::ConcaveConvex => "concave-convex",
            AppKind::Logistic => "logistic",
            AppKind::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
pub enum Case {
    #[default]
    A1,
    A2,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    #[default]
    Picard,
    FrozenNorms,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum StartName {
    #[default]
    Sub,
    Sup,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: DomainConfig,
    pub exponents: ExponentConfig,
    #[serde(default)]
    pub coefficients: CoefficientConfig,
    pub app: AppConfig,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub extents: Vec<[f64; 2]>,
    pub n: Vec<usize>,
}

fn two() -> ExprSpec {
    ExprSpec::Number(2.0)
}

fn zero() -> ExprSpec {
    ExprSpec::Number(0.0)
}

fn one() -> ExprSpec {
    ExprSpec::Number(1.0)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentConfig {
    pub p: ExprSpec,
    #[serde(default = "two")]
    pub q: ExprSpec,
    #[serde(default = "two")]
    pub r: ExprSpec,
    #[serde(default = "two")]
    pub s: ExprSpec,
    #[serde(default = "zero")]
    pub alpha: ExprSpec,
    #[serde(default = "zero")]
    pub beta: ExprSpec,
    #[serde(default = "zero")]
    pub gamma: ExprSpec,
    #[serde(default = "zero")]
    pub eta: ExprSpec,
}

/// `A(x, t)`, `f(x, t)` and `g(x, t)`. The logistic application reads `f`
/// as a function of `t` only.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(rename = "A", default = "one")]
    pub a: ExprSpec,
    #[serde(default = "zero")]
    pub f: ExprSpec,
    #[serde(default = "zero")]
    pub g: ExprSpec,
}

impl Default for CoefficientConfig {
    fn default() -> Self {
        CoefficientConfig { a: one(), f: zero(), g: zero() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    pub kind: AppKind,
    #[serde(default)]
    pub case: Case,
    /// Subsolution for the custom application.
    pub sub: Option<ExprSpec>,
    /// Supersolution for the custom application.
    pub sup: Option<ExprSpec>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub a0: Option<f64>,
    pub a_inf: Option<f64>,
    pub a1: Option<f64>,
    pub b0: Option<f64>,
    #[serde(rename = "K_knob")]
    pub k_knob: Option<f64>,
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub theta_start: Option<f64>,
    pub theta_tries: Option<usize>,
    pub lambda_tilde: Option<f64>,
    pub delta: Option<f64>,
    pub k_max: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol_fp: f64,
    pub max_outer: usize,
    pub eps_reg: f64,
    /// Defaults to `tol_fp / 10`.
    pub inner_tol: Option<f64>,
    pub max_iter: usize,
    pub scheme: Option<SchemeName>,
    pub start: StartName,
    pub probe_count: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_fp: 1e-6,
            max_outer: 200,
            eps_reg: 1e-8,
            inner_tol: None,
            max_iter: 500,
            scheme: None,
            start: StartName::Sub,
            probe_count: 8,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        RunConfig::from_toml(&text)
    }
}
