//! Parameter selection for the sublinear problem
//! `-A(x,|u|_r) Δ_{p(x)} u = u^{β(x)} |u|_q^{α(x)}`.

use crate::error::{Error, Result};
use crate::grid::{distance_field, ScalarField};
use crate::modular::{luxemburg_norm, ExponentKind, ExponentSet};
use crate::plaplace::PLaplacian;

use super::phi::{build_phi, default_delta, PhiParams};

/// `k^{p⁻-1} e^{-ak(p⁻-1-s)} |ln(k e^{-ak})|` with `s = α⁺+β⁺`; tends to
/// zero as `k → ∞` whenever `s < p⁻-1`.
pub fn subsolution_ratio(k: f64, a: f64, p_minus: f64, s: f64) -> f64 {
    let e = p_minus - 1.0;
    k.powf(e) / (a * k * (e - s)).exp() * (k.ln() - a * k).abs()
}

/// Smallest `2^j`, `j >= 1`, with `c λ^s <= λ`.
pub fn smallest_power_of_two(c: f64, s: f64) -> f64 {
    assert!(s < 1.0, "exponent must be below one");
    let mut lambda: f64 = 2.0;
    while c * lambda.powf(s) > lambda {
        lambda *= 2.0;
    }
    lambda
}

/// `λ = 2^j > 1` with
/// `c_A K^{β⁺} λ^{(α⁺+β⁺)/(p⁻-1)} max{|K|_q^{α⁻}, |K|_q^{α⁺}} <= λ`.
///
/// `inv_a` is the reciprocal lower bound for `A` on the relevant range
/// (`1/a₀` in case A1, `1/A_k` in case A2).
pub fn select_lambda_sublinear(exps: &ExponentSet, inv_a: f64, k_knob: f64) -> Result<f64> {
    let pm = exps.p_minus();
    let alpha = exps.bounds(ExponentKind::Alpha);
    let beta = exps.bounds(ExponentKind::Beta);
    let s = (alpha.max + beta.max) / (pm - 1.0);
    if !(s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "sublinear case needs α⁺+β⁺ < p⁻-1, got {} >= {}",
            alpha.max + beta.max,
            pm - 1.0
        )));
    }
    let grid = *exps.p.grid();
    let kq = luxemburg_norm(&ScalarField::constant(grid, k_knob), &exps.q)?;
    let c = inv_a * k_knob.powf(beta.max) * kq.powf(alpha.min).max(kq.powf(alpha.max));
    Ok(smallest_power_of_two(c, s))
}

/// Which inequalities the doubling search enforces on `μφ`.
#[derive(Clone, Copy, Debug)]
pub struct KSearch {
    /// Coefficient `c` in `-Δ_p(μφ) <= c (μφ)^{β} |μφ|_q^{α}`.
    pub coeff: f64,
    /// Upper bound for `-Δ_p(μφ)`.
    pub cap: f64,
    pub delta: Option<f64>,
    pub k_start: f64,
    pub k_max: f64,
    pub eps_reg: f64,
}

impl KSearch {
    pub fn new(coeff: f64, cap: f64, eps_reg: f64) -> KSearch {
        KSearch { coeff, cap, delta: None, k_start: 1.0, k_max: 65536.0, eps_reg }
    }
}

/// Outcome of the inequalities at one trial `k`. Gaps are
/// `max_i (lhs_i - rhs_i)` in weak form; nonpositive means satisfied.
#[derive(Clone, Debug)]
pub struct KAttempt {
    pub k: f64,
    pub admissible: bool,
    pub main_gap: f64,
    pub cap_gap: f64,
    /// `max μφ` over nodes with `σ < d < δ`.
    pub strip_max: f64,
}

impl KAttempt {
    pub fn accepted(&self) -> bool {
        self.admissible && self.main_gap <= 0.0 && self.cap_gap <= 0.0 && self.strip_max <= 1.0
    }

    fn blocker(&self) -> &'static str {
        if !self.admissible {
            "parameter admissibility (σ < δ, kμ <= 1, μ representable)"
        } else if self.main_gap > 0.0 {
            "-Δ(μφ) <= c (μφ)^β |μφ|^α"
        } else if self.cap_gap > 0.0 {
            "-Δ(μφ) <= cap"
        } else {
            "μφ <= 1 in the strip σ < d < δ"
        }
    }
}

#[derive(Clone, Debug)]
pub struct KSelection {
    pub params: PhiParams,
    /// `μφ`.
    pub sub: ScalarField,
    pub attempts: Vec<KAttempt>,
}

/// Doubles `k` until `μφ` satisfies the discrete subsolution inequalities
/// against every nodal hat function.
pub fn select_k_sublinear(exps: &ExponentSet, search: &KSearch) -> Result<KSelection> {
    let p = &exps.p;
    let grid = *p.grid();
    let delta = search.delta.unwrap_or_else(|| default_delta(&grid));
    let op = PLaplacian::new(p, search.eps_reg)?;
    let weights = grid.weights();
    let dist = distance_field(&grid);

    let mut attempts = Vec::new();
    let mut k = search.k_start;
    while k <= search.k_max {
        let params = PhiParams::new(k, delta, p)?;
        let mut attempt = KAttempt {
            k,
            admissible: params.is_admissible(),
            main_gap: f64::INFINITY,
            cap_gap: f64::INFINITY,
            strip_max: f64::INFINITY,
        };
        if attempt.admissible {
            let sub = build_phi(&params, p)?.scale(params.mu);
            let lap = op.operator(&sub);
            let nq = luxemburg_norm(&sub, &exps.q)?;
            let mut main_gap = f64::NEG_INFINITY;
            let mut cap_gap = f64::NEG_INFINITY;
            for i in grid.interior() {
                let rhs = search.coeff * sub.get(i).powf(exps.beta.get(i)) * nq.powf(exps.alpha.get(i));
                main_gap = main_gap.max(lap.get(i) - weights[i] * rhs);
                cap_gap = cap_gap.max(lap.get(i) - weights[i] * search.cap);
            }
            attempt.main_gap = main_gap;
            attempt.cap_gap = cap_gap;
            attempt.strip_max = grid
                .interior()
                .filter(|&i| dist.get(i) > params.sigma && dist.get(i) < params.delta)
                .map(|i| sub.get(i))
                .fold(0.0, f64::max);
            if attempt.accepted() {
                attempts.push(attempt);
                return Ok(KSelection { params, sub, attempts });
            }
        }
        attempts.push(attempt);
        k *= 2.0;
    }
    let last = attempts.last().map(|a| {
        format!("at k = {}: blocked by {} (main gap {:.3e}, cap gap {:.3e})", a.k, a.blocker(), a.main_gap, a.cap_gap)
    });
    Err(Error::Construction(format!("no k <= {} makes μφ a subsolution; {}", search.k_max, last.unwrap_or_default())))
}
