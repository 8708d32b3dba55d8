//! Explicit sub/supersolutions and parameter selectors for the sublinear,
//! concave-convex and logistic model problems.

pub mod concave;
pub mod logistic;
pub mod phi;
pub mod sublinear;

pub use concave::{cbar, concave_exponents, psi, select_m_concave, ConcaveExponents, MSelection};
pub use logistic::{
    build_logistic_z0, check_logistic_hypothesis, logistic_probe, logistic_probe_threshold, select_lambda0_logistic,
    Lambda0, LogisticZ0, ScalarFn,
};
pub use phi::{build_phi, default_delta, phi_profile, PhiParams};
pub use sublinear::{
    select_k_sublinear, select_lambda_sublinear, smallest_power_of_two, subsolution_ratio, KAttempt, KSearch,
    KSelection,
};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::plaplace::{torsion, SolverOptions};

/// Torsion supersolution `z_λ` together with the knob `K` for which
/// `0 < z_λ <= K λ^{1/(p⁻-1)}` was verified.
#[derive(Clone, Debug)]
pub struct BoundedTorsion {
    pub z: ScalarField,
    pub lambda: f64,
    pub k_knob: f64,
}

/// Solves `-Δ_{p(x)} z = λ` and checks `max z <= K λ^{1/(p⁻-1)}`.
/// Returns `Ok(None)` when the bound fails so the caller can raise `K`.
pub fn bounded_torsion(
    lambda: f64,
    k_knob: f64,
    p: &ScalarField,
    opts: &SolverOptions,
) -> Result<Option<BoundedTorsion>> {
    let z = torsion(lambda, p, opts)?;
    let grid = *p.grid();
    if grid.interior().any(|k| z.get(k) <= 0.0) {
        return Err(Error::Construction(format!("torsion function for λ = {lambda} is not positive inside")));
    }
    let bound = k_knob * lambda.powf(1.0 / (p.min() - 1.0));
    if z.max() <= bound {
        Ok(Some(BoundedTorsion { z, lambda, k_knob }))
    } else {
        Ok(None)
    }
}

/// Cap on the number of times `K` is doubled.
pub const MAX_K_RAISES: usize = 40;
