//! The boundary-layer profile `φ` and its parameters.

use crate::error::{Error, Result};
use crate::grid::{distance_field, max_gradient_norm, Grid, ScalarField};

/// Parameters of `μφ`.
///
/// Only `k` and `delta` are free; `sigma = ln(2^{1/p⁺})/k`, `mu = e^{-ak}`
/// and `a = (p⁻-1)/(max|∇p| + 1)` are derived from the exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiParams {
    pub k: f64,
    pub delta: f64,
    pub sigma: f64,
    pub mu: f64,
    pub a: f64,
}

/// `δ = inradius / 4`.
pub fn default_delta(grid: &Grid) -> f64 {
    0.25 * grid.inradius()
}

impl PhiParams {
    pub fn new(k: f64, delta: f64, p: &ScalarField) -> Result<PhiParams> {
        let p_minus = p.min();
        let p_plus = p.max();
        if !(p_minus > 1.0) {
            return Err(Error::ExponentBelowOne { name: "p", min: p_minus });
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
        }
        let inradius = p.grid().inradius();
        if !(delta > 0.0) || 3.0 * delta >= inradius {
            return Err(Error::InvalidParameter(format!(
                "boundary strip needs 0 < 3δ < inradius = {inradius}, got δ = {delta}"
            )));
        }
        let a = (p_minus - 1.0) / (max_gradient_norm(p) + 1.0);
        let sigma = std::f64::consts::LN_2 / (p_plus * k);
        Ok(PhiParams { k, delta, sigma, mu: (-a * k).exp(), a })
    }

    /// `σ < δ`, `kμ <= 1` and `μ` is a normal float.
    pub fn is_admissible(&self) -> bool {
        self.sigma < self.delta && self.k * self.mu <= 1.0 && self.mu >= f64::MIN_POSITIVE
    }
}

/// `φ` as a function of the distance `d` to the boundary. The middle branch
/// uses the closed form of
/// `∫_σ^d k e^{kσ} ((2δ-t)/(2δ-σ))^{2/(p⁻-1)} dt`.
pub fn phi_profile(params: &PhiParams, p_minus: f64, d: f64) -> f64 {
    let PhiParams { k, delta, sigma, .. } = *params;
    if d < sigma {
        return (k * d).exp_m1();
    }
    let base = (k * sigma).exp();
    let m = 2.0 / (p_minus - 1.0);
    let width = 2.0 * delta - sigma;
    let rest = ((2.0 * delta - d.min(2.0 * delta)) / width).powf(m + 1.0);
    base - 1.0 + k * base * width / (m + 1.0) * (1.0 - rest)
}

/// Nodal values of `φ` on the grid of `p`.
pub fn build_phi(params: &PhiParams, p: &ScalarField) -> Result<ScalarField> {
    let grid = *p.grid();
    if 3.0 * params.delta >= grid.inradius() {
        return Err(Error::InvalidParameter(format!(
            "boundary strip needs 3δ < inradius = {}, got δ = {}",
            grid.inradius(),
            params.delta
        )));
    }
    let p_minus = p.min();
    Ok(distance_field(&grid).map(|d| phi_profile(params, p_minus, d)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;

    fn p_field(n: usize) -> ScalarField {
        let grid = Grid::interval(0.0, 1.0, n).unwrap();
        ScalarField::from_fn(grid, |x| 1.8 + 0.1 * (std::f64::consts::PI * x[0]).sin())
    }

    #[test]
    fn derived_fields() {
        let p = p_field(129);
        let params = PhiParams::new(10.0, 0.125, &p).unwrap();
        assert!(((params.k * params.sigma).exp() - 2f64.powf(1.0 / p.max())).abs() < 1e-12);
        assert!((params.mu - (-params.a * params.k).exp()).abs() == 0.0);
        assert!(params.sigma < params.delta);
        assert!(PhiParams::new(10.0, 0.2, &p).is_err());
    }

    #[test]
    fn value_at_sigma_for_p_plus_two() {
        let grid = Grid::interval(0.0, 1.0, 33).unwrap();
        let p = ScalarField::constant(grid, 2.0);
        let params = PhiParams::new(7.0, 0.1, &p).unwrap();
        assert_eq!(phi_profile(&params, 2.0, 0.0), 0.0);
        assert!((phi_profile(&params, 2.0, params.sigma) - 0.414_213_562_373_095).abs() < 1e-12);
    }

    #[test]
    fn middle_branch_matches_quadrature() {
        let p = p_field(65);
        let params = PhiParams::new(12.0, 0.1, &p).unwrap();
        let m = 2.0 / (p.min() - 1.0);
        let PhiParams { k, delta, sigma, .. } = params;
        let integrand = |t: f64| k * (k * sigma).exp() * ((2.0 * delta - t) / (2.0 * delta - sigma)).powf(m);
        for d in [sigma, 0.05, 0.1, 0.15, 0.199, 2.0 * delta, 0.4] {
            let upper = d.min(2.0 * delta);
            let direct = (k * sigma).exp() - 1.0 + adaptive_simpson(&integrand, sigma, upper, 1e-13);
            assert!((phi_profile(&params, p.min(), d) - direct).abs() < 1e-10, "d = {d}");
        }
    }

    #[test]
    fn continuous_at_breakpoints() {
        let p = p_field(65);
        let params = PhiParams::new(20.0, 0.1, &p).unwrap();
        let pm = p.min();
        for b in [params.sigma, 2.0 * params.delta] {
            let l = phi_profile(&params, pm, b - 1e-12);
            let r = phi_profile(&params, pm, b + 1e-12);
            assert!((l - r).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_zero_and_monotone() {
        let p = p_field(257);
        let params = PhiParams::new(16.0, 0.125, &p).unwrap();
        let phi = build_phi(&params, &p).unwrap();
        let d = distance_field(p.grid());
        let grid = *p.grid();
        for k in 0..grid.len() {
            if grid.is_boundary(k) {
                assert_eq!(phi.get(k), 0.0);
            }
            for j in 0..grid.len() {
                if d.get(k) <= d.get(j) {
                    assert!(phi.get(k) <= phi.get(j) + 1e-12);
                }
            }
        }
    }
}
