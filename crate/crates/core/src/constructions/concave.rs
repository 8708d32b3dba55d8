//! The minimiser `M_{λ,θ}` of `Ψ` for the concave-convex problem
//! `-A Δ_{p(x)} u = λ u^{β} |u|_q^{α} + θ u^{η} |u|_s^{γ}`.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::modular::{luxemburg_norm, ExponentKind, ExponentSet};

/// `e1 = (α⁺+β⁺)/(p⁻-1) < 1 < e2 = (η⁺+γ⁺)/(p⁻-1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcaveExponents {
    pub concave_sum: f64,
    pub convex_sum: f64,
    pub p_minus: f64,
}

impl ConcaveExponents {
    pub fn new(concave_sum: f64, convex_sum: f64, p_minus: f64) -> Result<ConcaveExponents> {
        let e = p_minus - 1.0;
        if !(concave_sum < e && e < convex_sum) {
            return Err(Error::InvalidParameter(format!(
                "concave-convex case needs α⁺+β⁺ < p⁻-1 < η⁺+γ⁺, got {concave_sum} < {e} < {convex_sum}"
            )));
        }
        Ok(ConcaveExponents { concave_sum, convex_sum, p_minus })
    }

    pub fn e1(&self) -> f64 {
        self.concave_sum / (self.p_minus - 1.0)
    }

    pub fn e2(&self) -> f64 {
        self.convex_sum / (self.p_minus - 1.0)
    }

    /// `L = (((p⁻-1) - (α⁺+β⁺)) / ((η⁺+γ⁺) - (p⁻-1)))^{(p⁻-1)/((η⁺+γ⁺)-(α⁺+β⁺))}`.
    pub fn l_const(&self) -> f64 {
        let e = self.p_minus - 1.0;
        ((e - self.concave_sum) / (self.convex_sum - e)).powf(self.exponent())
    }

    fn exponent(&self) -> f64 {
        (self.p_minus - 1.0) / (self.convex_sum - self.concave_sum)
    }
}

pub fn concave_exponents(exps: &ExponentSet) -> Result<ConcaveExponents> {
    let s1 = exps.bounds(ExponentKind::Alpha).max + exps.bounds(ExponentKind::Beta).max;
    let s2 = exps.bounds(ExponentKind::Eta).max + exps.bounds(ExponentKind::Gamma).max;
    ConcaveExponents::new(s1, s2, exps.p_minus())
}

/// `Ψ(t) = c (λ t^{e1-1} + θ t^{e2-1})` where `c = C̄/A_λ`.
pub fn psi(t: f64, lambda: f64, theta: f64, ce: &ConcaveExponents, c: f64) -> f64 {
    c * (lambda * t.powf(ce.e1() - 1.0) + theta * t.powf(ce.e2() - 1.0))
}

/// `C̄ = max{K^{β⁺} K̄, K^{η⁺} K̄}` with
/// `K̄ = max{|K|_q^{α⁺}, |K|_q^{α⁻}, |K|_s^{γ⁺}, |K|_s^{γ⁻}}`.
pub fn cbar(exps: &ExponentSet, k_knob: f64) -> Result<f64> {
    let grid = *exps.p.grid();
    let kf = ScalarField::constant(grid, k_knob);
    let kq = luxemburg_norm(&kf, &exps.q)?;
    let ks = luxemburg_norm(&kf, &exps.s)?;
    let a = exps.bounds(ExponentKind::Alpha);
    let g = exps.bounds(ExponentKind::Gamma);
    let kbar =
        [kq.powf(a.max), kq.powf(a.min), ks.powf(g.max), ks.powf(g.min)].into_iter().fold(f64::NEG_INFINITY, f64::max);
    let b = exps.bounds(ExponentKind::Beta).max;
    let e = exps.bounds(ExponentKind::Eta).max;
    Ok(k_knob.powf(b).max(k_knob.powf(e)) * kbar)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MSelection {
    pub m: f64,
    pub l: f64,
    pub psi_at_m: f64,
    /// `Ψ(M) <= 1`.
    pub admissible: bool,
}

/// `M_{λ,θ} = L (λ/θ)^{(p⁻-1)/((η⁺+γ⁺)-(α⁺+β⁺))}`, the global minimiser of `Ψ`.
pub fn select_m_concave(
    lambda: f64,
    theta: f64,
    ce: &ConcaveExponents,
    a_lambda: f64,
    cbar: f64,
) -> Result<MSelection> {
    if !(lambda > 0.0 && theta > 0.0 && a_lambda > 0.0 && cbar > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "λ, θ, A_λ and C̄ must be positive, got {lambda}, {theta}, {a_lambda}, {cbar}"
        )));
    }
    let l = ce.l_const();
    let m = l * (lambda / theta).powf(ce.exponent());
    let psi_at_m = psi(m, lambda, theta, ce, cbar / a_lambda);
    Ok(MSelection { m, l, psi_at_m, admissible: psi_at_m <= 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> ConcaveExponents {
        ConcaveExponents::new(0.5, 2.0, 1.8).unwrap()
    }

    #[test]
    fn l_constant() {
        let ce = example();
        assert!((ce.l_const() - 0.25f64.powf(0.8 / 1.5)).abs() < 1e-15);
        assert!((ce.l_const() - 0.4774).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_ordering() {
        assert!(ConcaveExponents::new(0.9, 2.0, 1.8).is_err());
        assert!(ConcaveExponents::new(0.5, 0.7, 1.8).is_err());
    }

    #[test]
    fn stationary_point() {
        let ce = example();
        for theta in [1.0, 0.1, 0.01] {
            let sel = select_m_concave(1.0, theta, &ce, 1.0, 1.0).unwrap();
            let h = 1e-5 * sel.m;
            let d = (psi(sel.m + h, 1.0, theta, &ce, 1.0) - psi(sel.m - h, 1.0, theta, &ce, 1.0)) / (2.0 * h);
            assert!(d.abs() < 1e-8, "θ = {theta}: Ψ' = {d}");
        }
    }

    #[test]
    fn psi_at_m_decreases_with_theta() {
        let ce = example();
        let vals: Vec<f64> =
            [1.0, 0.1, 0.01].iter().map(|&t| select_m_concave(1.0, t, &ce, 1.0, 1.0).unwrap().psi_at_m).collect();
        assert!(vals[0] > 1.0 && vals[1] > vals[2] && vals[2] < 1.0, "{vals:?}");
    }
}
