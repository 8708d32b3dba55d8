//! One configured run: build the problem, solve, and write artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use varexp_core::apps::{
    build_concave, build_logistic, build_sublinear, solve_built, Built, ConcaveSetup, LogisticSetup, Outcome,
    SelectedParams, SublinearCase, SublinearSetup,
};
use varexp_core::constructions::ScalarFn;
use varexp_core::subsuper::{nodal_fn, FixedPointOptions, NodalFn, NonlocalProblem, Scheme, Start, SubSuperPair};
use varexp_core::{
    check_h0, distance_field, luxemburg_norm, Error as CoreError, ExponentSet, Grid, ScalarField, SolverOptions,
};

use crate::config::{AppKind, Case, ConfigError, ExprSpec, RunConfig, SchemeName, StartName};
use crate::expr::{parse_scoped, Env, Expr, Var};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Overrides `[app] kind`.
    pub app: Option<AppKind>,
    pub quiet: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct VerifySummary {
    pub passes: bool,
    pub sub_violation: f64,
    pub sup_violation: f64,
    pub worst_t_sub: f64,
    pub worst_t_sup: f64,
    pub samples: usize,
}

/// Contents of `summary.toml`.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub app: String,
    /// `ok`, `not-converged`, `solver-failed` or `config-error`.
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub converged: bool,
    pub ordering_ok: bool,
    pub iterations: usize,
    pub fp_residual: f64,
    pub map_residual: f64,
    pub k0: f64,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub norms: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySummary>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Summary,
    pub out_dir: PathBuf,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    fn exit_code(&self) -> i32 {
        match self {
            RunError::Core(CoreError::SolverFailed(_)) => EXIT_NOT_CONVERGED,
            _ => EXIT_CONFIG,
        }
    }

    fn status(&self) -> &'static str {
        match self.exit_code() {
            EXIT_NOT_CONVERGED => "solver-failed",
            _ => "config-error",
        }
    }
}

fn space_vars(dim: usize) -> &'static [Var] {
    if dim == 1 {
        &[Var::X1]
    } else {
        &[Var::X1, Var::X2]
    }
}

fn with_t(dim: usize) -> &'static [Var] {
    if dim == 1 {
        &[Var::X1, Var::T]
    } else {
        &[Var::X1, Var::X2, Var::T]
    }
}

fn parse(spec: &ExprSpec, slot: &str, allowed: &[Var]) -> Result<Expr, ConfigError> {
    parse_scoped(&spec.source(), allowed).map_err(|source| ConfigError::Expr { slot: slot.to_string(), source })
}

fn nodal_field(grid: Grid, spec: &ExprSpec, slot: &str) -> Result<ScalarField, ConfigError> {
    let e = parse(spec, slot, space_vars(grid.dim()))?;
    let values = grid
        .nodes()
        .map(|n| e.eval(&Env::at(n.x, 0.0)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| ConfigError::Expr { slot: slot.to_string(), source })?;
    ScalarField::from_values(grid, values).map_err(|e| ConfigError::Invalid(format!("`{slot}`: {e}")))
}

fn coefficient(spec: &ExprSpec, slot: &str, dim: usize) -> Result<NodalFn, ConfigError> {
    let e = parse(spec, slot, with_t(dim))?;
    Ok(nodal_fn(move |n, t| e.eval_or_nan(&Env::at(n.x, t))))
}

fn grid_of(cfg: &RunConfig) -> Result<Grid, ConfigError> {
    let d = &cfg.domain;
    let extents: Vec<(f64, f64)> = d.extents.iter().map(|e| (e[0], e[1])).collect();
    Grid::new(extents.len(), &extents, &d.n).map_err(|e| ConfigError::Invalid(e.to_string()))
}

fn exponents_of(cfg: &RunConfig, grid: Grid) -> Result<ExponentSet, ConfigError> {
    let x = &cfg.exponents;
    let mut e = ExponentSet::new(nodal_field(grid, &x.p, "exponents.p")?);
    e.q = nodal_field(grid, &x.q, "exponents.q")?;
    e.r = nodal_field(grid, &x.r, "exponents.r")?;
    e.s = nodal_field(grid, &x.s, "exponents.s")?;
    e.alpha = nodal_field(grid, &x.alpha, "exponents.alpha")?;
    e.beta = nodal_field(grid, &x.beta, "exponents.beta")?;
    e.gamma = nodal_field(grid, &x.gamma, "exponents.gamma")?;
    e.eta = nodal_field(grid, &x.eta, "exponents.eta")?;
    Ok(e)
}

fn require(v: Option<f64>, name: &str, app: AppKind) -> Result<f64, ConfigError> {
    v.ok_or_else(|| ConfigError::Invalid(format!("[params] {name} is required for the {} application", app.name())))
}

fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions { eps_reg: cfg.solver.eps_reg, tol: 1e-10, max_iter: cfg.solver.max_iter }
}

fn fixed_point_options(cfg: &RunConfig, app: AppKind) -> FixedPointOptions {
    let s = &cfg.solver;
    let default_scheme = if app == AppKind::Logistic { SchemeName::FrozenNorms } else { SchemeName::Picard };
    let mut fp = FixedPointOptions::new(s.tol_fp).with_max_outer(s.max_outer).with_scheme(
        match s.scheme.unwrap_or(default_scheme) {
            SchemeName::Picard => Scheme::Picard,
            SchemeName::FrozenNorms => Scheme::FrozenNorms,
        },
    );
    fp.start = match s.start {
        StartName::Sub => Start::Sub,
        StartName::Sup => Start::Sup,
    };
    fp.inner.eps_reg = s.eps_reg;
    fp.inner.max_iter = s.max_iter;
    if let Some(t) = s.inner_tol {
        fp.inner.tol = t;
    }
    fp
}

fn build(cfg: &RunConfig, app: AppKind, exps: ExponentSet) -> Result<Built, RunError> {
    let dim = exps.p.grid().dim();
    let c = &cfg.coefficients;
    let prm = &cfg.params;
    let a = coefficient(&c.a, "coefficients.A", dim)?;
    let solver = solver_options(cfg);
    let k_knob = prm.k_knob.unwrap_or(1.1);
    let k_max = prm.k_max.unwrap_or(65536.0);
    Ok(match app {
        AppKind::Sublinear => {
            let case = match cfg.app.case {
                Case::A1 => SublinearCase::A1 { a0: require(prm.a0, "a0", app)? },
                Case::A2 => SublinearCase::A2 {
                    a0: require(prm.a0, "a0", app)?,
                    a_inf: require(prm.a_inf, "a_inf", app)?,
                    a1: require(prm.a1, "a1", app)?,
                },
            };
            build_sublinear(&SublinearSetup {
                exponents: exps,
                coefficient: a,
                case,
                k_knob,
                delta: prm.delta,
                k_max,
                solver,
            })?
        }
        AppKind::ConcaveConvex => build_concave(&ConcaveSetup {
            exponents: exps,
            coefficient: a,
            lambda: require(prm.lambda, "lambda", app)?,
            theta_start: prm.theta_start.or(prm.theta).unwrap_or(1.0),
            theta_tries: prm.theta_tries.unwrap_or(if prm.theta.is_some() && prm.theta_start.is_none() {
                1
            } else {
                12
            }),
            a0: require(prm.a0, "a0", app)?,
            b0: require(prm.b0, "b0", app)?,
            a1: prm.a1.unwrap_or(1.0),
            k_knob,
            delta: prm.delta,
            k_max,
            solver,
        })?,
        AppKind::Logistic => {
            let e = parse(&c.f, "coefficients.f", &[Var::T])?;
            let f: ScalarFn = Arc::new(move |t| e.eval_or_nan(&Env { t, ..Env::default() }));
            build_logistic(&LogisticSetup {
                exponents: exps,
                coefficient: a,
                f,
                theta: prm.theta.unwrap_or(1.0),
                lambda_tilde: prm.lambda_tilde,
                lambda: prm.lambda,
                solver,
            })?
        }
        AppKind::Custom => {
            let grid = *exps.p.grid();
            let f = coefficient(&c.f, "coefficients.f", dim)?;
            let g = coefficient(&c.g, "coefficients.g", dim)?;
            let missing = || ConfigError::Invalid("the custom application needs [app] sub and sup".into());
            let sub = nodal_field(grid, cfg.app.sub.as_ref().ok_or_else(missing)?, "app.sub")?;
            let sup = nodal_field(grid, cfg.app.sup.as_ref().ok_or_else(missing)?, "app.sup")?;
            let sub = snap_boundary(sub);
            let problem =
                NonlocalProblem::new(exps, a, f, g).with_scales(prm.lambda.unwrap_or(1.0), prm.theta.unwrap_or(1.0));
            let pair = SubSuperPair::new(sub, sup)?;
            Built { problem, pair, params: SelectedParams::default() }
        }
    })
}

/// Rounds boundary values of an expression-defined subsolution that are zero
/// up to floating-point noise (e.g. `sin(pi*x1)` at `x1 = 1`).
fn snap_boundary(sub: ScalarField) -> ScalarField {
    let grid = *sub.grid();
    let noisy = (0..grid.len()).all(|k| !grid.is_boundary(k) || sub.get(k).abs() <= 1e-12);
    if noisy {
        sub.with_zero_boundary()
    } else {
        sub
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_solution(dir: &Path, out: &Outcome) -> Result<(), RunError> {
    let pair = &out.built.pair;
    let grid = *pair.grid();
    let dist = distance_field(&grid);
    let mut w = csv::Writer::from_path(dir.join("solution.csv"))?;
    let mut header = vec!["x1"];
    if grid.dim() == 2 {
        header.push("x2");
    }
    header.extend(["u", "sub", "sup", "distance"]);
    w.write_record(&header)?;
    for node in grid.nodes() {
        let k = node.index;
        let mut row = vec![num(node.x[0])];
        if grid.dim() == 2 {
            row.push(num(node.x[1]));
        }
        row.extend([out.solve.solution.get(k), pair.sub.get(k), pair.sup.get(k), dist.get(k)].map(num));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_trace(dir: &Path, out: &Outcome) -> Result<(), RunError> {
    let s = &out.solve;
    let mut w = csv::Writer::from_path(dir.join("trace.csv"))?;
    w.write_record(["iter", "fp_residual", "inner_iters", "K0"])?;
    for i in 0..s.iterations {
        w.write_record([
            (i + 1).to_string(),
            num(s.residual_trace[i]),
            s.inner_iterations[i].to_string(),
            num(s.k0_trace[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary(dir: &Path, summary: &Summary) -> std::io::Result<()> {
    let text = toml::to_string(summary).map_err(std::io::Error::other)?;
    std::fs::write(dir.join("summary.toml"), text)
}

fn norms(out: &Outcome) -> Result<BTreeMap<String, f64>, CoreError> {
    let u = &out.solve.solution;
    let e = &out.built.problem.exponents;
    Ok(BTreeMap::from([
        ("u_sup".to_string(), u.sup_norm()),
        ("u_q".to_string(), luxemburg_norm(u, &e.q)?),
        ("u_r".to_string(), luxemburg_norm(u, &e.r)?),
        ("u_s".to_string(), luxemburg_norm(u, &e.s)?),
    ]))
}

fn execute(cfg: &RunConfig, opts: &RunOptions, summary: &mut Summary) -> Result<i32, RunError> {
    let app = opts.app.unwrap_or(cfg.app.kind);
    summary.app = app.name().to_string();
    let grid = grid_of(cfg)?;
    let exps = exponents_of(cfg, grid)?;
    let warnings = check_h0(&exps, grid.dim())?.into_result()?;
    summary.warnings = warnings.iter().map(|w| w.to_string()).collect();
    if !opts.quiet {
        for w in &summary.warnings {
            eprintln!("warning: {w}");
        }
    }
    let built = build(cfg, app, exps)?;
    summary.params = built.params.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    let fp = fixed_point_options(cfg, app);
    let out = solve_built(built, &fp, cfg.solver.probe_count)?;

    summary.converged = out.solve.converged;
    summary.ordering_ok = out.solve.ordering_ok;
    summary.iterations = out.solve.iterations;
    summary.fp_residual = out.solve.final_residual();
    summary.map_residual = out.solve.map_residual;
    summary.k0 = out.solve.k0;
    summary.norms = norms(&out)?;
    let v = &out.verify;
    summary.verify = Some(VerifySummary {
        passes: v.passes(1e-8),
        sub_violation: v.sub_violation,
        sup_violation: v.sup_violation,
        worst_t_sub: v.worst_t_sub,
        worst_t_sup: v.worst_t_sup,
        samples: v.samples,
    });
    write_solution(&opts.out_dir, &out)?;
    write_trace(&opts.out_dir, &out)?;
    Ok(if out.solve.converged && out.solve.ordering_ok { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// Runs one configuration and writes `solution.csv`, `trace.csv` and
/// `summary.toml` into `opts.out_dir`.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> RunOutcome {
    let start = Instant::now();
    let mut summary = Summary::default();
    let result =
        std::fs::create_dir_all(&opts.out_dir).map_err(RunError::from).and_then(|_| execute(cfg, opts, &mut summary));
    let exit_code = match result {
        Ok(code) => {
            summary.status = if code == EXIT_OK { "ok" } else { "not-converged" }.to_string();
            code
        }
        Err(e) => {
            summary.status = e.status().to_string();
            summary.message = Some(e.to_string());
            e.exit_code()
        }
    };
    summary.exit_code = exit_code;
    summary.wall_time_s = start.elapsed().as_secs_f64();
    if let Err(e) = write_summary(&opts.out_dir, &summary) {
        summary.message = Some(format!("writing summary: {e}"));
        summary.exit_code = EXIT_CONFIG;
    }
    RunOutcome { exit_code: summary.exit_code, summary, out_dir: opts.out_dir.clone() }
}
