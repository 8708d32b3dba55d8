//! End-to-end pipelines for the three model problems: select parameters,
//! build the sub/supersolution pair, check it, and solve.

use crate::constructions::{
    bounded_torsion, build_logistic_z0, cbar, concave_exponents, logistic_probe_threshold, select_k_sublinear,
    select_lambda0_logistic, select_lambda_sublinear, select_m_concave, BoundedTorsion, KSearch, KSelection, ScalarFn,
    MAX_K_RAISES,
};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::modular::{luxemburg_norm, ExponentSet};
use crate::plaplace::SolverOptions;
use crate::subsuper::{
    fixed_point, nodal_fn, verify_pair, FixedPointOptions, NodalFn, NonlocalProblem, PairReport, SolveReport,
    SubSuperPair,
};

/// Parameters chosen along the way; unset entries do not apply to the
/// application that produced them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectedParams {
    pub k: Option<f64>,
    pub sigma: Option<f64>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub m: Option<f64>,
    pub psi_at_m: Option<f64>,
    pub k_knob: Option<f64>,
    /// `A_λ`, `A_k` or `A₀`, depending on the application.
    pub bracket_coefficient: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub lambda0: Option<f64>,
    pub mu0: Option<f64>,
    pub j_z0: Option<f64>,
}

impl SelectedParams {
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        [
            ("k", self.k),
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("delta", self.delta),
            ("lambda", self.lambda),
            ("theta", self.theta),
            ("M", self.m),
            ("psi_at_M", self.psi_at_m),
            ("K_knob", self.k_knob),
            ("bracket_coefficient", self.bracket_coefficient),
            ("lambda_tilde", self.lambda_tilde),
            ("lambda0", self.lambda0),
            ("mu0", self.mu0),
            ("J_z0", self.j_z0),
        ]
        .into_iter()
        .filter_map(|(name, v)| v.map(|v| (name, v)))
        .collect()
    }

    fn with_phi(mut self, sel: &KSelection) -> Self {
        self.k = Some(sel.params.k);
        self.sigma = Some(sel.params.sigma);
        self.mu = Some(sel.params.mu);
        self.delta = Some(sel.params.delta);
        self
    }
}

/// A problem together with a validated pair.
#[derive(Clone, Debug)]
pub struct Built {
    pub problem: NonlocalProblem,
    pub pair: SubSuperPair,
    pub params: SelectedParams,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub built: Built,
    pub verify: PairReport,
    pub solve: SolveReport,
}

/// Checks the pair, then runs the fixed-point iteration.
pub fn solve_built(built: Built, fp: &FixedPointOptions, probe_count: usize) -> Result<Outcome> {
    let verify = verify_pair(&built.pair, &built.problem, probe_count, fp.inner.eps_reg)?;
    let solve = fixed_point(&built.problem, &built.pair, fp)?;
    Ok(Outcome { built, verify, solve })
}

fn power(exponent: &ScalarField) -> NodalFn {
    let e = exponent.clone();
    nodal_fn(move |node, t| t.max(0.0).powf(e.get(node.index)))
}

fn zero() -> NodalFn {
    nodal_fn(|_, _| 0.0)
}

fn k_exhausted(k_knob: f64, what: &str) -> Error {
    Error::Construction(format!("torsion bound z <= K λ^(1/(p⁻-1)) still fails for {what} after raising K to {k_knob}"))
}

/// Hypotheses on `A` for the sublinear problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SublinearCase {
    /// `A >= a0` on `Ω × [0, ∞)`.
    A1 { a0: f64 },
    /// `0 < A <= a0`, `A → a_inf` as `t → ∞`, and `A >= a_inf/2` for `t > a1`.
    A2 { a0: f64, a_inf: f64, a1: f64 },
}

#[derive(Clone)]
pub struct SublinearSetup {
    pub exponents: ExponentSet,
    pub coefficient: NodalFn,
    pub case: SublinearCase,
    pub k_knob: f64,
    pub delta: Option<f64>,
    pub k_max: f64,
    pub solver: SolverOptions,
}

/// `-A(x,|u|_r) Δ_{p(x)} u = u^{β(x)} |u|_q^{α(x)}`.
pub fn sublinear_problem(exponents: ExponentSet, coefficient: NodalFn) -> NonlocalProblem {
    let f = power(&exponents.beta);
    NonlocalProblem::new(exponents, coefficient, f, zero()).with_scales(1.0, 0.0)
}

fn k_search(coeff: f64, delta: Option<f64>, k_max: f64, solver: &SolverOptions) -> KSearch {
    let mut s = KSearch::new(coeff, 1.0, solver.eps_reg);
    s.delta = delta;
    s.k_max = k_max;
    s
}

/// Torsion supersolution for the smallest admissible `λ`, raising `K` until
/// `z_λ <= K λ^{1/(p⁻-1)}` holds.
fn sublinear_supersolution(
    exps: &ExponentSet,
    inv_a: f64,
    k_knob: f64,
    solver: &SolverOptions,
) -> Result<BoundedTorsion> {
    let mut k_knob = k_knob;
    for _ in 0..MAX_K_RAISES {
        let lambda = select_lambda_sublinear(exps, inv_a, k_knob)?;
        if let Some(bt) = bounded_torsion(lambda, k_knob, &exps.p, solver)? {
            return Ok(bt);
        }
        k_knob *= 2.0;
    }
    Err(k_exhausted(k_knob, "the sublinear supersolution"))
}

pub fn build_sublinear(setup: &SublinearSetup) -> Result<Built> {
    let problem = sublinear_problem(setup.exponents.clone(), setup.coefficient.clone());
    let exps = &setup.exponents;
    let r = &exps.r;
    match setup.case {
        SublinearCase::A1 { a0 } => {
            let sup = sublinear_supersolution(exps, 1.0 / a0, setup.k_knob, &setup.solver)?;
            let zr = luxemburg_norm(&sup.z, r)?;
            let (amin, a_lambda) = problem.coefficient_extrema(0.0, zr);
            if amin < a0 {
                return Err(Error::Construction(format!("case A1 needs A >= a0 = {a0} on [0, {zr}], found {amin}")));
            }
            let sel = select_k_sublinear(exps, &k_search(1.0 / a_lambda, setup.delta, setup.k_max, &setup.solver))?;
            let params = SelectedParams {
                lambda: Some(sup.lambda),
                k_knob: Some(sup.k_knob),
                bracket_coefficient: Some(a_lambda),
                ..Default::default()
            }
            .with_phi(&sel);
            let pair = SubSuperPair::new(sel.sub, sup.z)?;
            Ok(Built { problem, pair, params })
        }
        SublinearCase::A2 { a0, a_inf, a1 } => {
            let sel = select_k_sublinear(exps, &k_search(1.0 / a0, setup.delta, setup.k_max, &setup.solver))?;
            let lo = luxemburg_norm(&sel.sub, r)?;
            let (m_k, amax) = problem.coefficient_extrema(lo, a1.max(lo));
            if amax > a0 {
                return Err(Error::Construction(format!("case A2 needs A <= a0 = {a0}, found {amax}")));
            }
            let a_k = m_k.min(0.5 * a_inf);
            if !(a_k > 0.0) {
                return Err(Error::Construction(format!("bracket constant A_k = {a_k} is not positive")));
            }
            let sup = sublinear_supersolution(exps, 1.0 / a_k, setup.k_knob, &setup.solver)?;
            let params = SelectedParams {
                lambda: Some(sup.lambda),
                k_knob: Some(sup.k_knob),
                bracket_coefficient: Some(a_k),
                ..Default::default()
            }
            .with_phi(&sel);
            let pair = SubSuperPair::new(sel.sub, sup.z)?;
            Ok(Built { problem, pair, params })
        }
    }
}

/// Concave-convex problem with `0 < A <= a0` and `A → b0` as `t → ∞`.
#[derive(Clone)]
pub struct ConcaveSetup {
    pub exponents: ExponentSet,
    pub coefficient: NodalFn,
    pub lambda: f64,
    /// First `θ` tried; later candidates divide by ten.
    pub theta_start: f64,
    pub theta_tries: usize,
    pub a0: f64,
    pub b0: f64,
    /// `A >= b0/2` for `t > a1`.
    pub a1: f64,
    pub k_knob: f64,
    pub delta: Option<f64>,
    pub k_max: f64,
    pub solver: SolverOptions,
}

/// `-A Δ_{p(x)} u = λ u^{β} |u|_q^{α} + θ u^{η} |u|_s^{γ}`.
pub fn concave_problem(exponents: ExponentSet, coefficient: NodalFn, lambda: f64, theta: f64) -> NonlocalProblem {
    let f = power(&exponents.beta);
    let g = power(&exponents.eta);
    NonlocalProblem::new(exponents, coefficient, f, g).with_scales(lambda, theta)
}

/// Picks the largest `θ = θ_start 10^{-j}` with `Ψ(M) <= 1` and `M >= 1`,
/// then builds `(μφ, z_M)`.
pub fn build_concave(setup: &ConcaveSetup) -> Result<Built> {
    let exps = &setup.exponents;
    let ce = concave_exponents(exps)?;
    let lambda = setup.lambda;
    let base = concave_problem(exps.clone(), setup.coefficient.clone(), lambda, setup.theta_start);

    let sel = select_k_sublinear(exps, &k_search(lambda / setup.a0, setup.delta, setup.k_max, &setup.solver))?;
    let lo = luxemburg_norm(&sel.sub, &exps.r)?;
    let (m_lambda, amax) = base.coefficient_extrema(lo, setup.a1.max(lo));
    if amax > setup.a0 {
        return Err(Error::Construction(format!("need A <= a0 = {}, found {amax}", setup.a0)));
    }
    let a_lambda = m_lambda.min(0.5 * setup.b0);
    if !(a_lambda > 0.0) {
        return Err(Error::Construction(format!("bracket constant A_λ = {a_lambda} is not positive")));
    }

    let mut k_knob = setup.k_knob;
    for _ in 0..MAX_K_RAISES {
        let cb = cbar(exps, k_knob)?;
        let mut theta = setup.theta_start;
        let mut chosen = None;
        for _ in 0..setup.theta_tries.max(1) {
            let m = select_m_concave(lambda, theta, &ce, a_lambda, cb)?;
            if m.admissible && m.m >= 1.0 {
                chosen = Some((theta, m));
                break;
            }
            theta /= 10.0;
        }
        let Some((theta, m)) = chosen else {
            return Err(Error::Construction(format!(
                "no θ in {} tries from {} gives Ψ(M) <= 1 with M >= 1",
                setup.theta_tries, setup.theta_start
            )));
        };
        let Some(sup) = bounded_torsion(m.m, k_knob, &exps.p, &setup.solver)? else {
            k_knob *= 2.0;
            continue;
        };
        let problem = concave_problem(exps.clone(), setup.coefficient.clone(), lambda, theta);
        let params = SelectedParams {
            lambda: Some(lambda),
            theta: Some(theta),
            m: Some(m.m),
            psi_at_m: Some(m.psi_at_m),
            k_knob: Some(k_knob),
            bracket_coefficient: Some(a_lambda),
            ..Default::default()
        }
        .with_phi(&sel);
        let pair = SubSuperPair::new(sel.sub, sup.z)?;
        return Ok(Built { problem, pair, params });
    }
    Err(k_exhausted(k_knob, "z_M"))
}

#[derive(Clone)]
pub struct LogisticSetup {
    pub exponents: ExponentSet,
    pub coefficient: NodalFn,
    pub f: ScalarFn,
    pub theta: f64,
    /// Defaults to the smallest power of two above the probe threshold.
    pub lambda_tilde: Option<f64>,
    /// Defaults to `λ₀`.
    pub lambda: Option<f64>,
    pub solver: SolverOptions,
}

/// `-A(x,|u|_r) Δ_{p(x)} u = λ f(u) |u|_q^{α(x)}`.
pub fn logistic_problem(exponents: ExponentSet, coefficient: NodalFn, f: ScalarFn, lambda: f64) -> NonlocalProblem {
    let f = nodal_fn(move |_, t| f(t));
    NonlocalProblem::new(exponents, coefficient, f, zero()).with_scales(lambda, 0.0)
}

/// Builds `(z₀, θ)` and sets `λ` (default `λ₀`).
pub fn build_logistic(setup: &LogisticSetup) -> Result<Built> {
    let exps = &setup.exponents;
    let f = setup.f.clone();
    let lambda_tilde = match setup.lambda_tilde {
        Some(l) => l,
        None => {
            let threshold = logistic_probe_threshold(&exps.p, &*f, setup.theta, setup.solver.eps_reg)?;
            let mut l: f64 = 1.0;
            while l <= threshold {
                l *= 2.0;
            }
            l
        }
    };
    let z0 = build_logistic_z0(&exps.p, &*f, setup.theta, lambda_tilde, &setup.solver)?;
    let base = logistic_problem(exps.clone(), setup.coefficient.clone(), f.clone(), 1.0);
    let l0 = select_lambda0_logistic(&z0, &base, setup.theta)?;
    let lambda = setup.lambda.unwrap_or(l0.lambda0);
    let problem = base.with_scales(lambda, 0.0);
    let sup = ScalarField::constant(*exps.p.grid(), setup.theta);
    let params = SelectedParams {
        lambda: Some(lambda),
        theta: Some(setup.theta),
        lambda_tilde: Some(lambda_tilde),
        lambda0: Some(l0.lambda0),
        mu0: Some(l0.mu0),
        bracket_coefficient: Some(l0.a0),
        j_z0: Some(z0.energy),
        ..Default::default()
    };
    let pair = SubSuperPair::new(z0.z0, sup)?;
    Ok(Built { problem, pair, params })
}
