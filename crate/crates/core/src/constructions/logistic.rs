//! The subsolution `z₀` and threshold `λ₀` for the logistic-type problem
//! `-A(x,|u|_r) Δ_{p(x)} u = λ f(u) |u|_q^{α(x)}`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{distance_field, ScalarField};
use crate::modular::luxemburg_norm;
use crate::plaplace::{minimize, Forcing, PLaplacian, SolverOptions};
use crate::quad::adaptive_simpson;
use crate::subsuper::{sample_bracket, NonlocalProblem};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `f(0) = f(θ) = 0` and `f > 0` on sampled points of `(0, θ)`.
pub fn check_logistic_hypothesis(f: &dyn Fn(f64) -> f64, theta: f64) -> Result<()> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("θ must be positive, got {theta}")));
    }
    let scale = sample_bracket(0.0, theta).map(|t| f(t).abs()).fold(0.0, f64::max).max(1.0);
    for (t, name) in [(0.0, "f(0)"), (theta, "f(θ)")] {
        if f(t).abs() > 1e-12 * scale {
            return Err(Error::Construction(format!("{name} = {} must vanish", f(t))));
        }
    }
    let n = 1024;
    for i in 1..n {
        let t = theta * i as f64 / n as f64;
        if !(f(t) > 0.0) {
            return Err(Error::Construction(format!("f must be positive on (0, θ), f({t}) = {}", f(t))));
        }
    }
    Ok(())
}

/// `λ̃ f̃` where `f̃ = f` on `[0, θ]` and zero elsewhere.
struct LogisticForcing<'a> {
    f: &'a dyn Fn(f64) -> f64,
    theta: f64,
    lambda: f64,
    total: f64,
}

impl<'a> LogisticForcing<'a> {
    fn new(f: &'a dyn Fn(f64) -> f64, theta: f64, lambda: f64) -> Self {
        let mut lf = LogisticForcing { f, theta, lambda, total: 0.0 };
        lf.total = lf.primitive(theta);
        lf
    }

    fn primitive(&self, t: f64) -> f64 {
        let scale =
            self.theta * sample_bracket(0.0, self.theta).step_by(64).map(|s| (self.f)(s).abs()).fold(0.0, f64::max);
        adaptive_simpson(self.f, 0.0, t, 1e-15 * scale.max(1e-300))
    }

    /// `F̃(t) = ∫_0^t f̃`.
    fn antiderivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t >= self.theta {
            self.total
        } else {
            self.primitive(t)
        }
    }
}

impl Forcing for LogisticForcing<'_> {
    fn potential(&self, _node: usize, u: f64) -> f64 {
        self.lambda * self.antiderivative(u)
    }

    fn force(&self, _node: usize, u: f64) -> f64 {
        if u <= 0.0 || u >= self.theta {
            0.0
        } else {
            self.lambda * (self.f)(u)
        }
    }

    fn force_derivative(&self, _node: usize, u: f64) -> f64 {
        if u <= 0.0 || u >= self.theta {
            return 0.0;
        }
        let h = 1e-6 * self.theta;
        let a = (u - h).max(0.0);
        let b = (u + h).min(self.theta);
        self.lambda * ((self.f)(b) - (self.f)(a)) / (b - a)
    }
}

/// Probe `φ₀ = (θ/2) d/max d`, with `F̃(φ₀) > 0` inside.
pub fn logistic_probe(p: &ScalarField, theta: f64) -> ScalarField {
    let d = distance_field(p.grid());
    let dmax = d.max();
    d.map(|v| 0.5 * theta * v / dmax)
}

#[derive(Clone, Debug)]
pub struct LogisticZ0 {
    pub z0: ScalarField,
    /// `J_{λ̃}(z₀)`.
    pub energy: f64,
    /// `J_{λ̃}(φ₀)`.
    pub probe_energy: f64,
    /// `∫ |∇φ₀|^{p}/p / ∫ F̃(φ₀)`; `J(φ₀) < 0` iff `λ̃` exceeds it.
    pub probe_threshold: f64,
    pub lambda_tilde: f64,
    pub iterations: usize,
}

/// `∫ |∇φ₀|^{p}/p / ∫ F̃(φ₀)` for the probe `φ₀`; any `λ̃` above this
/// value gives `J_{λ̃}(φ₀) < 0`.
pub fn logistic_probe_threshold(p: &ScalarField, f: &dyn Fn(f64) -> f64, theta: f64, eps_reg: f64) -> Result<f64> {
    let op = PLaplacian::new(p, eps_reg)?;
    let forcing = LogisticForcing::new(f, theta, 1.0);
    let probe = logistic_probe(p, theta);
    let (dirichlet, potential) = probe_parts(&op, &forcing, &probe);
    Ok(dirichlet / potential)
}

fn probe_parts(op: &PLaplacian, forcing: &LogisticForcing<'_>, probe: &ScalarField) -> (f64, f64) {
    let weights = op.weights();
    let potential = op.grid().interior().map(|k| weights[k] * forcing.antiderivative(probe.get(k))).sum();
    (op.dirichlet_energy(probe), potential)
}

/// Minimises `J(u) = ∫ |∇u|^{p(x)}/p(x) - λ̃ ∫ F̃(u)` starting from the probe.
pub fn build_logistic_z0(
    p: &ScalarField,
    f: &dyn Fn(f64) -> f64,
    theta: f64,
    lambda_tilde: f64,
    opts: &SolverOptions,
) -> Result<LogisticZ0> {
    check_logistic_hypothesis(f, theta)?;
    let op = PLaplacian::new(p, opts.eps_reg)?;
    let forcing = LogisticForcing::new(f, theta, lambda_tilde);
    let probe = logistic_probe(p, theta);
    let (probe_dirichlet, probe_potential) = probe_parts(&op, &forcing, &probe);
    let probe_energy = probe_dirichlet - lambda_tilde * probe_potential;
    let probe_threshold = probe_dirichlet / probe_potential;

    let report = minimize(&op, &forcing, &probe, opts)?;
    if !report.converged {
        return Err(Error::SolverFailed(format!(
            "minimising J: weak residual {:.3e} after {} iterations",
            report.grad_norm, report.iterations
        )));
    }
    if !(report.energy < 0.0) {
        return Err(Error::Construction(format!(
            "λ̃ = {lambda_tilde} too small: J(z₀) = {:.6e}, J(φ₀) = {probe_energy:.6e}, probe needs λ̃ > {probe_threshold:.6e}",
            report.energy
        )));
    }
    Ok(LogisticZ0 {
        z0: report.minimizer,
        energy: report.energy,
        probe_energy,
        probe_threshold,
        lambda_tilde,
        iterations: report.iterations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lambda0 {
    pub lambda0: f64,
    pub mu0: f64,
    /// `min_x |z₀|_q^{α(x)}`.
    pub c: f64,
    /// `max A` over `Ω × [|z₀|_r, |θ|_r]`.
    pub a0: f64,
}

/// `λ₀ = λ̃ μ₀` with `μ₀ = A₀/C`.
pub fn select_lambda0_logistic(z0: &LogisticZ0, prob: &NonlocalProblem, theta: f64) -> Result<Lambda0> {
    let e = &prob.exponents;
    let grid = *e.p.grid();
    let nq = luxemburg_norm(&z0.z0, &e.q)?;
    let c = e.alpha.values().iter().map(|&a| nq.powf(a)).fold(f64::INFINITY, f64::min);
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Construction(format!("degenerate z₀: min |z₀|_q^α = {c}")));
    }
    let lo = luxemburg_norm(&z0.z0, &e.r)?;
    let hi = luxemburg_norm(&ScalarField::constant(grid, theta), &e.r)?;
    let (amin, a0) = prob.coefficient_extrema(lo, hi);
    if !(amin > 0.0) {
        return Err(Error::Construction(format!(
            "A must be positive on [|z₀|_r, |θ|_r] = [{lo}, {hi}], found min {amin}"
        )));
    }
    let mu0 = a0 / c;
    Ok(Lambda0 { lambda0: z0.lambda_tilde * mu0, mu0, c, a0 })
}
