//! Truncation onto an order interval, the nonlocal right-hand side, the
//! solution operator `S` and its fixed-point iteration, and a verifier for
//! the discrete sub/supersolution inequalities.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, Node, ScalarField};
use crate::modular::{luxemburg_norm, ExponentSet};
use crate::plaplace::{compare_weak, minimize, Forcing, LinearForcing, OrderingReport, PLaplacian, SolverOptions};
use crate::quad::adaptive_simpson;

/// A coefficient or nonlinearity evaluated at a node and a real argument.
pub type NodalFn = Arc<dyn Fn(Node, f64) -> f64 + Send + Sync>;

pub fn nodal_fn(f: impl Fn(Node, f64) -> f64 + Send + Sync + 'static) -> NodalFn {
    Arc::new(f)
}

/// Number of sample points used to approximate max/min over a compact
/// `t`-bracket.
pub const BRACKET_SAMPLES: usize = 1024;

/// The nonlocal problem
/// `-A(x, |u|_r) Δ_{p(x)} u = λ f(x,u) |u|_q^{α(x)} + θ g(x,u) |u|_s^{γ(x)}`.
#[derive(Clone)]
pub struct NonlocalProblem {
    pub exponents: ExponentSet,
    /// `A(x, t)`, evaluated at `t = |w|_{L^{r(x)}}`.
    pub coefficient: NodalFn,
    pub f: NodalFn,
    pub g: NodalFn,
    pub lambda_scale: f64,
    pub theta_scale: f64,
}

impl fmt::Debug for NonlocalProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlocalProblem")
            .field("grid", self.grid())
            .field("lambda_scale", &self.lambda_scale)
            .field("theta_scale", &self.theta_scale)
            .finish_non_exhaustive()
    }
}

impl NonlocalProblem {
    pub fn new(exponents: ExponentSet, coefficient: NodalFn, f: NodalFn, g: NodalFn) -> NonlocalProblem {
        NonlocalProblem { exponents, coefficient, f, g, lambda_scale: 1.0, theta_scale: 1.0 }
    }

    pub fn with_scales(mut self, lambda: f64, theta: f64) -> NonlocalProblem {
        self.lambda_scale = lambda;
        self.theta_scale = theta;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.exponents.p.grid()
    }

    fn coefficient_at(&self, node: Node, t: f64) -> Result<f64> {
        let value = (self.coefficient)(node, t);
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Error::NonPositiveCoefficient { node: node.index, t, value })
        }
    }

    /// `min`/`max` of `A(x, t)` over all nodes and `t` sampled on
    /// [`BRACKET_SAMPLES`] points of `[t_lo, t_hi]`.
    pub fn coefficient_extrema(&self, t_lo: f64, t_hi: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for node in self.grid().nodes() {
            for t in sample_bracket(t_lo, t_hi) {
                let v = (self.coefficient)(node, t);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }
}

pub(crate) fn sample_bracket(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let n = if hi > lo { BRACKET_SAMPLES } else { 1 };
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
}

/// An ordered pair `sub <= sup` with `sub = 0 <= sup` on ∂Ω and `sub > 0`
/// inside.
#[derive(Clone, Debug)]
pub struct SubSuperPair {
    pub sub: ScalarField,
    pub sup: ScalarField,
}

impl SubSuperPair {
    pub fn new(sub: ScalarField, sup: ScalarField) -> Result<SubSuperPair> {
        sub.check_same_grid(&sup)?;
        let grid = *sub.grid();
        for k in 0..grid.len() {
            let (a, b) = (sub.get(k), sup.get(k));
            if a > b {
                return Err(Error::Construction(format!("pair not ordered at node {k}: sub {a} > sup {b}")));
            }
            if grid.is_boundary(k) {
                if a != 0.0 || b < 0.0 {
                    return Err(Error::Construction(format!(
                        "boundary node {k} needs sub = 0 <= sup, got sub {a}, sup {b}"
                    )));
                }
            } else if a <= 0.0 {
                return Err(Error::Construction(format!("sub must be positive inside, node {k} has {a}")));
            }
        }
        Ok(SubSuperPair { sub, sup })
    }

    pub fn grid(&self) -> &Grid {
        self.sub.grid()
    }
}

/// Nodewise clamp of `u` into `[sub, sup]`.
pub fn truncate(u: &ScalarField, pair: &SubSuperPair) -> Result<ScalarField> {
    u.check_same_grid(&pair.sub)?;
    let values = (0..u.grid().len()).map(|k| u.get(k).clamp(pair.sub.get(k), pair.sup.get(k))).collect();
    ScalarField::from_values(*u.grid(), values)
}

/// The three global norms the right-hand side depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub q: f64,
    pub s: f64,
    pub r: f64,
}

pub fn nonlocal_norms(v: &ScalarField, prob: &NonlocalProblem) -> Result<Norms> {
    let e = &prob.exponents;
    Ok(Norms { q: luxemburg_norm(v, &e.q)?, s: luxemburg_norm(v, &e.s)?, r: luxemburg_norm(v, &e.r)? })
}

/// Nodewise weights `(λ |v|_q^{α}/A, θ |v|_s^{γ}/A)` multiplying `f` and
/// `g`, with `A` evaluated at `t = a_arg`.
fn nonlocal_weights(prob: &NonlocalProblem, norms: &Norms, a_arg: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let e = &prob.exponents;
    let grid = prob.grid();
    let mut cf = Vec::with_capacity(grid.len());
    let mut cg = Vec::with_capacity(grid.len());
    for node in grid.nodes() {
        let a = prob.coefficient_at(node, a_arg)?;
        cf.push(prob.lambda_scale * norms.q.powf(e.alpha.get(node.index)) / a);
        cg.push(prob.theta_scale * norms.s.powf(e.gamma.get(node.index)) / a);
    }
    Ok((cf, cg))
}

fn rhs_from(prob: &NonlocalProblem, v: &ScalarField, cf: &[f64], cg: &[f64]) -> Result<ScalarField> {
    let grid = prob.grid();
    let values = grid
        .nodes()
        .map(|node| {
            let t = v.get(node.index);
            let mut h = 0.0;
            if cf[node.index] != 0.0 {
                h += cf[node.index] * (prob.f)(node, t);
            }
            if cg[node.index] != 0.0 {
                h += cg[node.index] * (prob.g)(node, t);
            }
            h
        })
        .collect();
    ScalarField::from_values(*grid, values)
}

/// `H(v)(x) = [λ f(x,v) |v|_q^{α(x)} + θ g(x,v) |v|_s^{γ(x)}] / A(x, |v|_r)`.
pub fn nonlocal_rhs(v: &ScalarField, prob: &NonlocalProblem) -> Result<ScalarField> {
    v.check_same_grid(&prob.exponents.p)?;
    let norms = nonlocal_norms(v, prob)?;
    let (cf, cg) = nonlocal_weights(prob, &norms, norms.r)?;
    rhs_from(prob, v, &cf, &cg)
}

fn interior_sup(field: &ScalarField) -> f64 {
    let grid = field.grid();
    grid.interior().fold(0.0, |m, k| m.max(field.get(k).abs()))
}

/// One application of the solution operator.
#[derive(Clone, Debug)]
pub struct SStep {
    pub u: ScalarField,
    /// `sup |H(T v)|` over interior nodes.
    pub k0: f64,
    pub inner_iterations: usize,
}

/// `S(v)`: the solution of `-Δ_{p(x)} u = H(T v)`, `u = 0` on ∂Ω.
pub fn solve_s(
    v: &ScalarField,
    prob: &NonlocalProblem,
    pair: &SubSuperPair,
    opts: &SolverOptions,
    warm: Option<&ScalarField>,
) -> Result<SStep> {
    let op = PLaplacian::new(&prob.exponents.p, opts.eps_reg)?;
    solve_s_with(&op, v, prob, pair, opts, warm)
}

/// The inner tolerance is a strong-form residual relative to
/// `min(1, sup |H|)`; the minimiser works with the weak residual, so it is
/// converted by the smallest nodal weight.
fn scaled_inner(op: &PLaplacian, opts: &SolverOptions, k0: f64) -> SolverOptions {
    let wmin = op.grid().interior().map(|k| op.weights()[k]).fold(f64::INFINITY, f64::min);
    SolverOptions { tol: opts.tol * wmin * k0.min(1.0).max(1e-12), ..*opts }
}

fn solve_s_with(
    op: &PLaplacian,
    v: &ScalarField,
    prob: &NonlocalProblem,
    pair: &SubSuperPair,
    opts: &SolverOptions,
    warm: Option<&ScalarField>,
) -> Result<SStep> {
    let rhs = nonlocal_rhs(&truncate(v, pair)?, prob)?;
    let k0 = interior_sup(&rhs);
    if !k0.is_finite() {
        return Err(Error::SolverFailed("right-hand side bound K0 is not finite".into()));
    }
    let zero = ScalarField::zeros(*prob.grid());
    let inner = scaled_inner(op, opts, k0);
    let report = minimize(op, &LinearForcing(rhs.values()), warm.unwrap_or(&zero), &inner)?;
    if !report.converged {
        return Err(Error::SolverFailed(format!(
            "S(v): weak residual {:.3e} after {} iterations",
            report.grad_norm, report.iterations
        )));
    }
    Ok(SStep { u: report.minimizer, k0, inner_iterations: report.iterations })
}

/// Right-hand side `F_i(u) = c_f,i f(x_i, T_i u) + c_g,i g(x_i, T_i u)` with
/// frozen nonlocal weights and the clamp `T_i` onto `[sub_i, sup_i]`.
struct TruncatedForcing<'a> {
    prob: &'a NonlocalProblem,
    nodes: Vec<Node>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cf: Vec<f64>,
    cg: Vec<f64>,
    full: Vec<f64>,
    at_zero: Vec<f64>,
}

impl<'a> TruncatedForcing<'a> {
    fn new(prob: &'a NonlocalProblem, pair: &SubSuperPair, cf: Vec<f64>, cg: Vec<f64>) -> Self {
        let grid = prob.grid();
        let mut tf = TruncatedForcing {
            prob,
            nodes: grid.nodes().collect(),
            lo: pair.sub.values().to_vec(),
            hi: pair.sup.values().to_vec(),
            cf,
            cg,
            full: vec![0.0; grid.len()],
            at_zero: vec![0.0; grid.len()],
        };
        for k in grid.interior() {
            tf.full[k] = tf.integral(k, tf.lo[k], tf.hi[k]);
            tf.at_zero[k] = tf.antiderivative(k, 0.0);
        }
        tf
    }

    fn raw(&self, k: usize, t: f64) -> f64 {
        let node = self.nodes[k];
        let mut v = 0.0;
        if self.cf[k] != 0.0 {
            v += self.cf[k] * (self.prob.f)(node, t);
        }
        if self.cg[k] != 0.0 {
            v += self.cg[k] * (self.prob.g)(node, t);
        }
        v
    }

    fn integral(&self, k: usize, a: f64, b: f64) -> f64 {
        let scale = (self.raw(k, a).abs() + self.raw(k, b).abs()) * (b - a).abs();
        adaptive_simpson(&|t| self.raw(k, t), a, b, 1e-15 * scale.max(1e-300))
    }

    /// Antiderivative of `t ↦ F_k(T_k t)` vanishing at `t = lo`.
    fn antiderivative(&self, k: usize, x: f64) -> f64 {
        let (lo, hi) = (self.lo[k], self.hi[k]);
        if x <= lo {
            (x - lo) * self.raw(k, lo)
        } else if x <= hi {
            self.integral(k, lo, x)
        } else {
            self.full[k] + (x - hi) * self.raw(k, hi)
        }
    }
}

impl Forcing for TruncatedForcing<'_> {
    fn potential(&self, node: usize, u: f64) -> f64 {
        self.antiderivative(node, u) - self.at_zero[node]
    }

    fn force(&self, node: usize, u: f64) -> f64 {
        self.raw(node, u.clamp(self.lo[node], self.hi[node]))
    }

    fn force_derivative(&self, node: usize, u: f64) -> f64 {
        let (lo, hi) = (self.lo[node], self.hi[node]);
        if u <= lo || u >= hi {
            return 0.0;
        }
        let d = 1e-6 * (hi - lo);
        let a = (u - d).max(lo);
        let b = (u + d).min(hi);
        (self.raw(node, b) - self.raw(node, a)) / (b - a)
    }
}

/// How the fixed point `u = S(u)` is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// `u_{k+1} = S(u_k)`.
    Picard,
    /// Freeze the three nonlocal norms at `T u_k`, then solve the local
    /// truncated problem `-Δ_{p(x)} u = c(x) f(x, T u)` by energy descent.
    /// A fixed point of this iteration is a fixed point of `S`. Useful when
    /// the pointwise nonlinearity is too steep for plain Picard.
    FrozenNorms,
}

#[derive(Clone, Debug)]
pub enum Start {
    Sub,
    Sup,
    Field(ScalarField),
}

#[derive(Clone, Debug)]
pub struct FixedPointOptions {
    /// Stop once `sup |u_{k+1} - u_k| <= tol_fp · min(1, sup |u_{k+1}|)`.
    pub tol_fp: f64,
    pub max_outer: usize,
    pub start: Start,
    pub scheme: Scheme,
    /// Inner solves stop once the strong-form residual drops below
    /// `inner.tol · min(1, sup |H|)`.
    pub inner: SolverOptions,
}

impl FixedPointOptions {
    /// Inner tolerance is set to `tol_fp / 10`.
    pub fn new(tol_fp: f64) -> FixedPointOptions {
        FixedPointOptions {
            tol_fp,
            max_outer: 200,
            start: Start::Sub,
            scheme: Scheme::Picard,
            inner: SolverOptions { tol: tol_fp / 10.0, ..SolverOptions::default() },
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_max_outer(mut self, max_outer: usize) -> Self {
        self.max_outer = max_outer;
        self
    }
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions::new(1e-6)
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub solution: ScalarField,
    pub iterations: usize,
    /// `sup |u_{k+1} - u_k|` per outer iteration.
    pub residual_trace: Vec<f64>,
    pub inner_iterations: Vec<usize>,
    pub k0_trace: Vec<f64>,
    /// Largest `sup |H(T u_k)|` seen.
    pub k0: f64,
    pub converged: bool,
    /// `sub - 1e-8 <= solution <= sup + 1e-8` at every node.
    pub ordering_ok: bool,
    /// `sup |u - S(u)|` for the returned field.
    pub map_residual: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_trace.last().copied().unwrap_or(f64::INFINITY)
    }
}

const ORDER_TOL: f64 = 1e-8;

/// Iterates the solution operator from `opts.start` until successive
/// iterates agree to `tol_fp`, relative to the solution size when it is
/// below one (subsolutions can be many orders of magnitude small).
///
/// Existence of a fixed point in `[sub, sup]` does not imply convergence
/// of the iteration; exceeding `max_outer` yields `converged = false`.
pub fn fixed_point(prob: &NonlocalProblem, pair: &SubSuperPair, opts: &FixedPointOptions) -> Result<SolveReport> {
    pair.sub.check_same_grid(&prob.exponents.p)?;
    let op = PLaplacian::new(&prob.exponents.p, opts.inner.eps_reg)?;
    let mut u = match &opts.start {
        Start::Sub => pair.sub.clone(),
        Start::Sup => pair.sup.clone(),
        Start::Field(f) => {
            f.check_same_grid(&pair.sub)?;
            f.clone()
        }
    };
    let mut residual_trace = Vec::new();
    let mut inner_iterations = Vec::new();
    let mut k0_trace = Vec::new();
    let mut converged = false;

    for _ in 0..opts.max_outer {
        let warm = u.with_zero_boundary();
        let step = match opts.scheme {
            Scheme::Picard => solve_s_with(&op, &u, prob, pair, &opts.inner, Some(&warm))?,
            Scheme::FrozenNorms => frozen_norm_step(&op, &u, prob, pair, &opts.inner, &warm)?,
        };
        let res = step.u.sup_distance(&u)?;
        residual_trace.push(res);
        inner_iterations.push(step.inner_iterations);
        k0_trace.push(step.k0);
        u = step.u;
        if res <= opts.tol_fp * u.sup_norm().min(1.0) {
            converged = true;
            break;
        }
    }

    let lower = compare_weak(&pair.sub, &u, ORDER_TOL)?;
    let upper = compare_weak(&u, &pair.sup, ORDER_TOL)?;
    let ordering_ok = lower.ordered() && upper.ordered();
    let check = solve_s_with(&op, &u, prob, pair, &opts.inner, Some(&u))?;
    let map_residual = check.u.sup_distance(&u)?;
    Ok(SolveReport {
        solution: u,
        iterations: residual_trace.len(),
        k0: k0_trace.iter().copied().fold(0.0, f64::max),
        residual_trace,
        inner_iterations,
        k0_trace,
        converged,
        ordering_ok,
        map_residual,
    })
}

fn frozen_norm_step(
    op: &PLaplacian,
    u: &ScalarField,
    prob: &NonlocalProblem,
    pair: &SubSuperPair,
    opts: &SolverOptions,
    warm: &ScalarField,
) -> Result<SStep> {
    let w = truncate(u, pair)?;
    let norms = nonlocal_norms(&w, prob)?;
    let (cf, cg) = nonlocal_weights(prob, &norms, norms.r)?;
    let forcing = TruncatedForcing::new(prob, pair, cf, cg);
    let k_start = op.grid().interior().map(|k| forcing.force(k, warm.get(k)).abs()).fold(0.0, f64::max);
    let report = minimize(op, &forcing, warm, &scaled_inner(op, opts, k_start))?;
    if !report.converged {
        return Err(Error::SolverFailed(format!(
            "frozen-norm step: weak residual {:.3e} after {} iterations",
            report.grad_norm, report.iterations
        )));
    }
    let k0 = op.grid().interior().map(|k| forcing.force(k, report.minimizer.get(k)).abs()).fold(0.0, f64::max);
    Ok(SStep { u: report.minimizer, k0, inner_iterations: report.iterations })
}

/// Worst discrete violations of the sub- and supersolution inequalities.
#[derive(Clone, Debug)]
pub struct PairReport {
    /// `max_i max_w (⟨-Δ_p sub, φ_i⟩ - ⟨H_w(sub), φ_i⟩)`; `<= 0` means the
    /// subsolution inequality holds.
    pub sub_violation: f64,
    /// `max_i max_w (⟨H_w(sup), φ_i⟩ - ⟨-Δ_p sup, φ_i⟩)`.
    pub sup_violation: f64,
    /// Convex-combination parameter `t` of the worst `w = (1-t) sub + t sup`.
    pub worst_t_sub: f64,
    pub worst_t_sup: f64,
    pub ordering: OrderingReport,
    pub sub_positive: bool,
    pub samples: usize,
}

impl PairReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.sub_violation <= tol && self.sup_violation <= tol && self.ordering.ordered() && self.sub_positive
    }
}

/// Checks the weak sub/supersolution inequalities against every nodal hat
/// function (any nonnegative discrete test function is a nonnegative
/// combination of these), for `w` ranging over `sub`, `sup` and
/// `probe_count` interior convex combinations.
pub fn verify_pair(
    pair: &SubSuperPair,
    prob: &NonlocalProblem,
    probe_count: usize,
    eps_reg: f64,
) -> Result<PairReport> {
    pair.sub.check_same_grid(&prob.exponents.p)?;
    let grid = *prob.grid();
    let op = PLaplacian::new(&prob.exponents.p, eps_reg)?;
    let weights = grid.weights();
    let lap_sub = op.operator(&pair.sub);
    let lap_sup = op.operator(&pair.sup);
    let norms_sub = nonlocal_norms(&pair.sub, prob)?;
    let norms_sup = nonlocal_norms(&pair.sup, prob)?;

    let mut ts = vec![0.0, 1.0];
    ts.extend((1..=probe_count).map(|j| j as f64 / (probe_count + 1) as f64));

    let mut report = PairReport {
        sub_violation: f64::NEG_INFINITY,
        sup_violation: f64::NEG_INFINITY,
        worst_t_sub: 0.0,
        worst_t_sup: 0.0,
        ordering: compare_weak(&pair.sub, &pair.sup, 0.0)?,
        sub_positive: grid.interior().all(|k| pair.sub.get(k) > 0.0),
        samples: ts.len(),
    };
    for &t in &ts {
        let w = pair.sub.zip_map(&pair.sup, |a, b| (1.0 - t) * a + t * b)?;
        let r_norm = luxemburg_norm(&w, &prob.exponents.r)?;

        let (cf, cg) = nonlocal_weights(prob, &norms_sub, r_norm)?;
        let h_sub = rhs_from(prob, &pair.sub, &cf, &cg)?;
        let (cf, cg) = nonlocal_weights(prob, &norms_sup, r_norm)?;
        let h_sup = rhs_from(prob, &pair.sup, &cf, &cg)?;

        for k in grid.interior() {
            let v_sub = lap_sub.get(k) - weights[k] * h_sub.get(k);
            if v_sub > report.sub_violation {
                report.sub_violation = v_sub;
                report.worst_t_sub = t;
            }
            let v_sup = weights[k] * h_sup.get(k) - lap_sup.get(k);
            if v_sup > report.sup_violation {
                report.sup_violation = v_sup;
                report.worst_t_sup = t;
            }
        }
    }
    Ok(report)
}

/// Upper bound `K0` for `sup |H(w)|` over all `w` in `[sub, sup]`.
///
/// Uses monotonicity of the Luxemburg norm on the order interval and dense
/// sampling of `f`, `g`, `A` over the resulting compact brackets.
pub fn rhs_bound(prob: &NonlocalProblem, pair: &SubSuperPair) -> Result<f64> {
    let e = &prob.exponents;
    let lo = nonlocal_norms(&pair.sub, prob)?;
    let hi = nonlocal_norms(&pair.sup, prob)?;
    let grid = *prob.grid();
    let mut bound: f64 = 0.0;
    for k in grid.interior() {
        let node = grid.node(k);
        let (a, b) = (pair.sub.get(k), pair.sup.get(k));
        let fmax = sample_bracket(a, b).map(|t| (prob.f)(node, t).abs()).fold(0.0, f64::max);
        let gmax = sample_bracket(a, b).map(|t| (prob.g)(node, t).abs()).fold(0.0, f64::max);
        let alpha = e.alpha.get(k);
        let gamma = e.gamma.get(k);
        let qpow = lo.q.powf(alpha).max(hi.q.powf(alpha));
        let spow = lo.s.powf(gamma).max(hi.s.powf(gamma));
        let mut amin = f64::INFINITY;
        for t in sample_bracket(lo.r, hi.r) {
            amin = amin.min(prob.coefficient_at(node, t)?);
        }
        let v = (prob.lambda_scale.abs() * fmax * qpow + prob.theta_scale.abs() * gmax * spow) / amin;
        bound = bound.max(v);
    }
    Ok(bound)
}
