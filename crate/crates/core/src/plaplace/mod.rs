//! Discrete p(x)-Laplacian on linear elements.
//!
//! The Dirichlet energy is
//! `E(u) = Σ_e |e| / p_e ((|∇u_e|² + ε²)^{p_e/2} - ε^{p_e}) - Σ_i w_i G_i(u_i)`
//! where `p_e` is the mean of `p` over the element vertices, `w_i` are the
//! trapezoid weights and `G_i` is the potential of the forcing. Its
//! derivative with respect to an interior nodal value is the weak residual
//! tested against the hat function of that node, so `energy_gradient` is
//! both the descent direction source and the residual used for stopping.

mod banded;
mod mesh;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

use banded::BandedMatrix;
use mesh::Mesh;

/// Default gradient regularisation.
pub const DEFAULT_EPS_REG: f64 = 1e-8;

/// Tolerances for the energy minimiser.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub eps_reg: f64,
    /// Stop once the sup-norm of the interior weak residual is below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { eps_reg: DEFAULT_EPS_REG, tol: 1e-10, max_iter: 500 }
    }
}

/// The discrete operator `u ↦ -Δ_{p(x)} u` in weak form, for a fixed
/// exponent field and regularisation.
#[derive(Clone, Debug)]
pub struct PLaplacian {
    grid: Grid,
    mesh: Mesh,
    p_elem: Vec<f64>,
    weights: Vec<f64>,
    eps: f64,
}

impl PLaplacian {
    pub fn new(p: &ScalarField, eps_reg: f64) -> Result<PLaplacian> {
        if p.min() <= 1.0 {
            return Err(Error::InvalidParameter(format!("p- must exceed 1 for the p(x)-Laplacian, got {}", p.min())));
        }
        if !(eps_reg >= 0.0 && eps_reg.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps_reg must be >= 0, got {eps_reg}")));
        }
        let grid = *p.grid();
        let mesh = Mesh::new(&grid);
        let p_elem = mesh
            .elements
            .iter()
            .map(|e| e.vertices().iter().map(|&v| p.get(v)).sum::<f64>() / e.n_vertices as f64)
            .collect();
        Ok(PLaplacian { weights: grid.weights(), grid, mesh, p_elem, eps: eps_reg })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eps_reg(&self) -> f64 {
        self.eps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of interior unknowns.
    pub fn unknowns(&self) -> usize {
        self.mesh.nodes.len()
    }

    /// `Σ_e |e|/p_e ((|g|²+ε²)^{p/2} - ε^p)` together with the sum of
    /// absolute element contributions (a rounding scale).
    fn dirichlet_energy_scaled(&self, u: &[f64]) -> (f64, f64) {
        let eps2 = self.eps * self.eps;
        let mut total = 0.0;
        let mut scale = 0.0;
        for (e, &p) in self.mesh.elements.iter().zip(&self.p_elem) {
            let g2: f64 = e.comps().iter().map(|c| c.eval(u).powi(2)).sum();
            let v = e.measure / p * ((g2 + eps2).powf(0.5 * p) - self.eps.powf(p));
            total += v;
            scale += v.abs();
        }
        (total, scale)
    }

    pub fn dirichlet_energy(&self, u: &ScalarField) -> f64 {
        self.dirichlet_energy_scaled(u.values()).0
    }

    /// Weak operator: entry `i` is `∫ |∇u|^{p-2} ∇u · ∇φ_i` (regularised),
    /// zero on boundary nodes.
    fn operator_raw(&self, u: &[f64]) -> Vec<f64> {
        let eps2 = self.eps * self.eps;
        let mut out = vec![0.0; u.len()];
        for (e, &p) in self.mesh.elements.iter().zip(&self.p_elem) {
            let mut g = [0.0; 2];
            for (c, d) in e.comps().iter().enumerate() {
                g[c] = d.eval(u);
            }
            let r2 = g[0] * g[0] + g[1] * g[1] + eps2;
            let s = if r2 > 0.0 { r2.powf(0.5 * p - 1.0) } else { 0.0 };
            for (c, d) in e.comps().iter().enumerate() {
                let flux = e.measure * s * g[c] * d.inv_h;
                out[d.plus] += flux;
                out[d.minus] -= flux;
            }
        }
        for (k, v) in out.iter_mut().enumerate() {
            if self.mesh.dof_of[k].is_none() {
                *v = 0.0;
            }
        }
        out
    }

    pub fn operator(&self, u: &ScalarField) -> ScalarField {
        ScalarField::from_values(self.grid, self.operator_raw(u.values()))
            .expect("operator of a finite field is finite")
    }

    /// Hessian of the Dirichlet energy restricted to interior unknowns.
    fn hessian(&self, u: &[f64]) -> BandedMatrix {
        let eps2 = self.eps * self.eps;
        let mut h = BandedMatrix::zeros(self.unknowns(), self.mesh.bandwidth);
        for (e, &p) in self.mesh.elements.iter().zip(&self.p_elem) {
            let comps = e.comps();
            let mut g = [0.0; 2];
            for (c, d) in comps.iter().enumerate() {
                g[c] = d.eval(u);
            }
            let r2 = (g[0] * g[0] + g[1] * g[1] + eps2).max(1e-200);
            let s = r2.powf(0.5 * p - 1.0);
            let t = (p - 2.0) * r2.powf(0.5 * p - 2.0);
            let mut dmat = [[0.0; 2]; 2];
            for a in 0..comps.len() {
                for b in 0..comps.len() {
                    dmat[a][b] = t * g[a] * g[b] + if a == b { s } else { 0.0 };
                }
            }
            self.assemble(&mut h, e, &dmat);
        }
        h
    }

    /// Stiffness matrix of the plain Laplacian (`p = 2`), used as a shift.
    fn laplacian_stiffness(&self) -> BandedMatrix {
        let mut h = BandedMatrix::zeros(self.unknowns(), self.mesh.bandwidth);
        let id = [[1.0, 0.0], [0.0, 1.0]];
        for e in &self.mesh.elements {
            self.assemble(&mut h, e, &id);
        }
        h
    }

    fn assemble(&self, h: &mut BandedMatrix, e: &mesh::Element, dmat: &[[f64; 2]; 2]) {
        let comps = e.comps();
        for (a, da) in comps.iter().enumerate() {
            for (b, db) in comps.iter().enumerate() {
                let c = e.measure * dmat[a][b];
                if c == 0.0 {
                    continue;
                }
                for (ni, ci) in [(da.plus, da.inv_h), (da.minus, -da.inv_h)] {
                    let Some(i) = self.mesh.dof_of[ni] else { continue };
                    for (nj, cj) in [(db.plus, db.inv_h), (db.minus, -db.inv_h)] {
                        let Some(j) = self.mesh.dof_of[nj] else { continue };
                        if j <= i {
                            h.add(i, j, c * ci * cj);
                        }
                    }
                }
            }
        }
    }
}

/// Right-hand side of a semilinear problem `-Δ_{p(x)} u = F_i(u)`, given
/// through its potential `G_i` with `G_i' = F_i`.
pub trait Forcing {
    fn potential(&self, node: usize, u: f64) -> f64;
    fn force(&self, node: usize, u: f64) -> f64;
    /// `∂F_i/∂u`; only its negative part is used, to keep the Newton model
    /// convex.
    fn force_derivative(&self, _node: usize, _u: f64) -> f64 {
        0.0
    }
}

/// `F_i(u) = rhs_i`.
pub struct LinearForcing<'a>(pub &'a [f64]);

impl Forcing for LinearForcing<'_> {
    fn potential(&self, node: usize, u: f64) -> f64 {
        self.0[node] * u
    }
    fn force(&self, node: usize, _u: f64) -> f64 {
        self.0[node]
    }
}

/// Outcome of an energy minimisation.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub minimizer: ScalarField,
    pub energy: f64,
    /// Sup-norm of the weak residual over interior nodes.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after every accepted step, starting with the initial value.
    pub energy_trace: Vec<f64>,
}

fn total_energy(op: &PLaplacian, forcing: &dyn Forcing, u: &[f64]) -> (f64, f64) {
    let (mut e, mut scale) = op.dirichlet_energy_scaled(u);
    for &k in &op.mesh.nodes {
        let v = op.weights[k] * forcing.potential(k, u[k]);
        e -= v;
        scale += v.abs();
    }
    (e, scale)
}

fn total_gradient(op: &PLaplacian, forcing: &dyn Forcing, u: &[f64]) -> Vec<f64> {
    let mut g = op.operator_raw(u);
    for &k in &op.mesh.nodes {
        g[k] -= op.weights[k] * forcing.force(k, u[k]);
    }
    g
}

fn interior_sup(op: &PLaplacian, g: &[f64]) -> f64 {
    op.mesh.nodes.iter().fold(0.0, |m, &k| m.max(g[k].abs()))
}

/// Minimises `E(u) = dirichlet_energy(u) - Σ w_i G_i(u_i)` over fields that
/// vanish on the boundary.
///
/// Each step solves `(H + D + τ K) d = -∇E`, where `H` is the Hessian of the
/// Dirichlet part, `D` the convex part of the forcing curvature, `K` the
/// Laplacian stiffness and `τ ≥ 0` an adaptive shift; the step length comes
/// from Armijo backtracking on `E`. Every accepted step decreases the energy
/// (up to rounding near convergence).
pub fn minimize(
    op: &PLaplacian,
    forcing: &dyn Forcing,
    init: &ScalarField,
    opts: &SolverOptions,
) -> Result<EnergyReport> {
    if *init.grid() != op.grid {
        return Err(Error::GridMismatch);
    }
    let mut u = init.with_zero_boundary().into_values();
    let (mut energy, mut scale) = total_energy(op, forcing, &u);
    let mut grad = total_gradient(op, forcing, &u);
    let mut gnorm = interior_sup(op, &grad);
    let stiffness = op.laplacian_stiffness();
    let mut tau: f64 = 1e-2;
    let mut trace = vec![energy];
    let mut iterations = 0;
    let mut stalled = false;

    while gnorm > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let base = {
            let mut h = op.hessian(&u);
            for (i, &k) in op.mesh.nodes.iter().enumerate() {
                let c = -forcing.force_derivative(k, u[k]);
                if c > 0.0 {
                    h.add(i, i, op.weights[k] * c);
                }
            }
            h
        };
        let rhs: Vec<f64> = op.mesh.nodes.iter().map(|&k| -grad[k]).collect();

        let mut accepted = None;
        for _attempt in 0..12 {
            let mut m = base.clone();
            if tau > 0.0 {
                m.add_scaled(&stiffness, tau);
            }
            let Some(factor) = m.cholesky() else {
                tau = (tau * 10.0).max(1e-6);
                continue;
            };
            let d = factor.solve(&rhs);
            let slope: f64 = d.iter().zip(&rhs).map(|(a, b)| -a * b).sum();
            if !(slope < 0.0) {
                tau = (tau * 10.0).max(1e-6);
                continue;
            }
            let mut t = 1.0;
            for _ in 0..40 {
                let mut trial = u.clone();
                for (i, &k) in op.mesh.nodes.iter().enumerate() {
                    trial[k] += t * d[i];
                }
                let (e_new, s_new) = total_energy(op, forcing, &trial);
                let noise = 1e-13 * (scale + s_new).max(f64::MIN_POSITIVE);
                let armijo = e_new <= energy + 1e-4 * t * slope;
                let flat = (e_new - energy).abs() <= noise;
                if armijo || flat {
                    let g_new = total_gradient(op, forcing, &trial);
                    let gn_new = interior_sup(op, &g_new);
                    if armijo || gn_new < gnorm {
                        accepted = Some((trial, e_new, s_new, g_new, gn_new, t));
                        break;
                    }
                }
                t *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            tau = (tau * 10.0).max(1e-6);
        }

        let Some((trial, e_new, s_new, g_new, gn_new, t)) = accepted else {
            stalled = true;
            break;
        };
        u = trial;
        energy = e_new;
        scale = s_new;
        grad = g_new;
        gnorm = gn_new;
        trace.push(energy);
        if t == 1.0 {
            tau *= 0.25;
            if tau < 1e-10 {
                tau = 0.0;
            }
        } else if t < 0.25 {
            tau = (tau * 4.0).max(1e-6);
        }
    }

    let converged = !stalled && gnorm <= opts.tol;
    Ok(EnergyReport {
        minimizer: ScalarField::from_values(op.grid, u)?,
        energy,
        grad_norm: gnorm,
        iterations,
        converged,
        energy_trace: trace,
    })
}

/// `-Δ_{p(x)} u = rhs` in Ω, `u = 0` on ∂Ω.
#[derive(Clone, Debug)]
pub struct DirichletProblem {
    pub p: ScalarField,
    pub rhs: ScalarField,
    pub eps_reg: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl DirichletProblem {
    pub fn new(p: ScalarField, rhs: ScalarField) -> DirichletProblem {
        let d = SolverOptions::default();
        DirichletProblem { p, rhs, eps_reg: d.eps_reg, tol: d.tol, max_iter: d.max_iter }
    }

    pub fn with_options(mut self, opts: &SolverOptions) -> DirichletProblem {
        self.eps_reg = opts.eps_reg;
        self.tol = opts.tol;
        self.max_iter = opts.max_iter;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.p.grid()
    }

    fn options(&self) -> SolverOptions {
        SolverOptions { eps_reg: self.eps_reg, tol: self.tol, max_iter: self.max_iter }
    }
}

/// Energy `∫ (1/p)|∇u|^p - ∫ rhs·u` (regularised by `eps_reg`).
pub fn energy(u: &ScalarField, p: &ScalarField, rhs: &ScalarField, eps_reg: f64) -> Result<f64> {
    u.check_same_grid(p)?;
    u.check_same_grid(rhs)?;
    let op = PLaplacian::new(p, eps_reg)?;
    Ok(total_energy(&op, &LinearForcing(rhs.values()), u.values()).0)
}

/// Nodal derivative of [`energy`]: the weak residual
/// `∫ |∇u|^{p-2}∇u·∇φ_i - ∫ rhs φ_i` for every interior hat function `φ_i`.
pub fn energy_gradient(u: &ScalarField, p: &ScalarField, rhs: &ScalarField, eps_reg: f64) -> Result<ScalarField> {
    u.check_same_grid(p)?;
    u.check_same_grid(rhs)?;
    let op = PLaplacian::new(p, eps_reg)?;
    ScalarField::from_values(*u.grid(), total_gradient(&op, &LinearForcing(rhs.values()), u.values()))
}

/// Solves the Dirichlet problem by convex energy minimisation from `init`
/// (zero when `None`; boundary values of `init` are reset to zero).
///
/// Non-convergence is reported through `converged = false`.
pub fn solve_dirichlet(prob: &DirichletProblem, init: Option<&ScalarField>) -> Result<EnergyReport> {
    prob.p.check_same_grid(&prob.rhs)?;
    let op = PLaplacian::new(&prob.p, prob.eps_reg)?;
    let zero = ScalarField::zeros(*prob.grid());
    minimize(&op, &LinearForcing(prob.rhs.values()), init.unwrap_or(&zero), &prob.options())
}

/// Torsion function: `-Δ_{p(x)} z = λ`, `z = 0` on ∂Ω.
pub fn torsion(lambda: f64, p: &ScalarField, opts: &SolverOptions) -> Result<ScalarField> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("torsion needs lambda > 0, got {lambda}")));
    }
    let prob = DirichletProblem::new(p.clone(), ScalarField::constant(*p.grid(), lambda)).with_options(opts);
    let report = solve_dirichlet(&prob, None)?;
    if !report.converged {
        return Err(Error::SolverFailed(format!(
            "torsion lambda = {lambda}: residual {:.3e} after {} iterations",
            report.grad_norm, report.iterations
        )));
    }
    Ok(report.minimizer)
}

/// Result of a pointwise order check `u <= v`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderingReport {
    /// `max_i (u_i - v_i)`.
    pub max_gap: f64,
    /// Nodes with `u_i > v_i + tol`.
    pub violations: Vec<usize>,
}

impl OrderingReport {
    pub fn ordered(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Post-hoc verifier for the weak comparison principle: reports where
/// `u > v + tol`.
pub fn compare_weak(u: &ScalarField, v: &ScalarField, tol: f64) -> Result<OrderingReport> {
    u.check_same_grid(v)?;
    let mut max_gap = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for (k, (a, b)) in u.values().iter().zip(v.values()).enumerate() {
        let gap = a - b;
        max_gap = max_gap.max(gap);
        if gap > tol {
            violations.push(k);
        }
    }
    Ok(OrderingReport { max_gap, violations })
}
