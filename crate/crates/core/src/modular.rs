//! Variable-exponent Lebesgue machinery: the modular `ρ_m(u) = ∫ |u|^{m(x)}`,
//! the Luxemburg norm, validation of the exponent hypotheses and a Hölder
//! inequality check.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{integrate, ScalarField};

/// Discrete inf/sup of a sampled function (over all grid nodes).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn of(field: &ScalarField) -> Bounds {
        Bounds { min: field.min(), max: field.max() }
    }
}

/// The exponent functions of the problem, sampled on a common grid.
///
/// `p` drives the operator; `q`, `s`, `r` are the Lebesgue exponents of the
/// three nonlocal norms; `alpha`, `gamma` are the powers those norms are
/// raised to; `beta`, `eta` are the pointwise powers used by the
/// applications.
#[derive(Clone, Debug)]
pub struct ExponentSet {
    pub p: ScalarField,
    pub r: ScalarField,
    pub q: ScalarField,
    pub s: ScalarField,
    pub alpha: ScalarField,
    pub beta: ScalarField,
    pub gamma: ScalarField,
    pub eta: ScalarField,
}

impl ExponentSet {
    /// `r = q = s = 2`, all power exponents zero.
    pub fn new(p: ScalarField) -> ExponentSet {
        let grid = *p.grid();
        let two = ScalarField::constant(grid, 2.0);
        let zero = ScalarField::zeros(grid);
        ExponentSet {
            p,
            r: two.clone(),
            q: two.clone(),
            s: two,
            alpha: zero.clone(),
            beta: zero.clone(),
            gamma: zero.clone(),
            eta: zero,
        }
    }

    pub fn p_minus(&self) -> f64 {
        self.p.min()
    }

    pub fn p_plus(&self) -> f64 {
        self.p.max()
    }

    pub fn bounds(&self, kind: ExponentKind) -> Bounds {
        Bounds::of(self.field(kind))
    }

    pub fn field(&self, kind: ExponentKind) -> &ScalarField {
        match kind {
            ExponentKind::P => &self.p,
            ExponentKind::R => &self.r,
            ExponentKind::Q => &self.q,
            ExponentKind::S => &self.s,
            ExponentKind::Alpha => &self.alpha,
            ExponentKind::Beta => &self.beta,
            ExponentKind::Gamma => &self.gamma,
            ExponentKind::Eta => &self.eta,
        }
    }

    fn check_grids(&self) -> Result<()> {
        for kind in ExponentKind::ALL {
            self.p.check_same_grid(self.field(kind))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExponentKind {
    P,
    R,
    Q,
    S,
    Alpha,
    Beta,
    Gamma,
    Eta,
}

impl ExponentKind {
    pub const ALL: [ExponentKind; 8] = [
        ExponentKind::P,
        ExponentKind::R,
        ExponentKind::Q,
        ExponentKind::S,
        ExponentKind::Alpha,
        ExponentKind::Beta,
        ExponentKind::Gamma,
        ExponentKind::Eta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExponentKind::P => "p",
            ExponentKind::R => "r",
            ExponentKind::Q => "q",
            ExponentKind::S => "s",
            ExponentKind::Alpha => "alpha",
            ExponentKind::Beta => "beta",
            ExponentKind::Gamma => "gamma",
            ExponentKind::Eta => "eta",
        }
    }
}

/// A hard failure of hypothesis H0.
#[derive(Clone, Debug, PartialEq)]
pub enum H0Violation {
    PMinusNotAboveOne { p_minus: f64 },
    LebesgueExponentBelowOne { name: &'static str, min: f64 },
    NegativePower { name: &'static str, min: f64 },
}

impl fmt::Display for H0Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            H0Violation::PMinusNotAboveOne { p_minus } => {
                write!(f, "H0 requires 1 < p-, found p- = {p_minus}")
            }
            H0Violation::LebesgueExponentBelowOne { name, min } => {
                write!(f, "H0 requires {name} >= 1, found min {name} = {min}")
            }
            H0Violation::NegativePower { name, min } => {
                write!(f, "H0 requires {name} >= 0, found min {name} = {min}")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum H0Warning {
    /// `p+ < N` fails. The discrete problem is still well posed.
    PPlusNotBelowDimension { p_plus: f64, dim: usize },
}

impl fmt::Display for H0Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            H0Warning::PPlusNotBelowDimension { p_plus, dim } => {
                write!(f, "p+ >= N (p+ = {p_plus}, N = {dim}); Sobolev embedding not guaranteed")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct H0Report {
    pub violations: Vec<H0Violation>,
    pub warnings: Vec<H0Warning>,
}

impl H0Report {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<Vec<H0Warning>> {
        if self.violations.is_empty() {
            Ok(self.warnings)
        } else {
            Err(Error::H0(self.violations))
        }
    }
}

/// Checks hypothesis H0 (plus nonnegativity of `beta`, `eta`).
///
/// `p+ >= N` is reported as a warning only.
pub fn check_h0(e: &ExponentSet, dim: usize) -> Result<H0Report> {
    e.check_grids()?;
    let mut report = H0Report::default();
    let p = e.bounds(ExponentKind::P);
    if p.min <= 1.0 {
        report.violations.push(H0Violation::PMinusNotAboveOne { p_minus: p.min });
    }
    for kind in [ExponentKind::R, ExponentKind::Q, ExponentKind::S] {
        let b = e.bounds(kind);
        if b.min < 1.0 {
            report.violations.push(H0Violation::LebesgueExponentBelowOne { name: kind.name(), min: b.min });
        }
    }
    for kind in [ExponentKind::Alpha, ExponentKind::Gamma, ExponentKind::Beta, ExponentKind::Eta] {
        let b = e.bounds(kind);
        if b.min < 0.0 {
            report.violations.push(H0Violation::NegativePower { name: kind.name(), min: b.min });
        }
    }
    if p.max >= dim as f64 {
        report.warnings.push(H0Warning::PPlusNotBelowDimension { p_plus: p.max, dim });
    }
    Ok(report)
}

fn check_exponent(m: &ScalarField, name: &'static str) -> Result<()> {
    let min = m.min();
    if min < 1.0 {
        Err(Error::ExponentBelowOne { name, min })
    } else {
        Ok(())
    }
}

fn modular_unchecked(u: &[f64], m: &[f64], weights: &[f64], scale: f64) -> f64 {
    u.iter().zip(m).zip(weights).map(|((&v, &e), &w)| if v == 0.0 { 0.0 } else { w * (v.abs() * scale).powf(e) }).sum()
}

/// `ρ_m(u) = ∫_Ω |u|^{m(x)} dx` by trapezoidal quadrature.
pub fn modular(u: &ScalarField, m: &ScalarField) -> Result<f64> {
    u.check_same_grid(m)?;
    check_exponent(m, "m")?;
    Ok(integrate(&u.zip_map(m, |v, e| v.abs().powf(e))?))
}

/// Luxemburg norm `inf{λ > 0 : ρ_m(u/λ) <= 1}`.
///
/// The modular of `u/λ` is strictly decreasing in `λ`, so the norm is the
/// unique root of `ρ_m(u/λ) = 1`; it is located by bracketing and bisection
/// to relative tolerance `1e-12`.
pub fn luxemburg_norm(u: &ScalarField, m: &ScalarField) -> Result<f64> {
    u.check_same_grid(m)?;
    check_exponent(m, "m")?;
    if u.values().iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let w = u.grid().weights();
    let rho = |lambda: f64| modular_unchecked(u.values(), m.values(), &w, 1.0 / lambda);

    let mut hi = 1.0;
    let mut lo = 1.0;
    if rho(1.0) > 1.0 {
        while rho(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while rho(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
        }
    }
    // invariant: rho(lo) > 1 >= rho(hi)
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(1/m- + 1/m'-) |u|_m |v|_{m'} - |∫ uv|`; negative values would indicate
/// a violated Hölder inequality.
pub fn holder_gap(u: &ScalarField, v: &ScalarField, m: &ScalarField, m_conj: &ScalarField) -> Result<f64> {
    u.check_same_grid(v)?;
    u.check_same_grid(m)?;
    u.check_same_grid(m_conj)?;
    for (node, (&a, &b)) in m.values().iter().zip(m_conj.values()).enumerate() {
        let sum = 1.0 / a + 1.0 / b;
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::NotConjugate { node, sum });
        }
    }
    if m.min() <= 1.0 {
        return Err(Error::ExponentBelowOne { name: "m", min: m.min() });
    }
    let lhs = integrate(&u.zip_map(v, |a, b| a * b)?).abs();
    let rhs = (1.0 / m.min() + 1.0 / m_conj.min()) * luxemburg_norm(u, m)? * luxemburg_norm(v, m_conj)?;
    Ok(rhs - lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize) -> Grid {
        Grid::interval(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn modular_examples() {
        let g = unit(65);
        let one = ScalarField::constant(g, 1.0);
        let m = ScalarField::from_fn(g, |x| 1.0 + x[0] * 3.0);
        assert_abs_diff_eq!(modular(&one, &m).unwrap(), 1.0, epsilon = 1e-14);
        let two = ScalarField::constant(g, 2.0);
        let m2 = ScalarField::constant(g, 2.0);
        assert_abs_diff_eq!(modular(&two, &m2).unwrap(), 4.0, epsilon = 1e-13);
        let g = unit(1025);
        let x = ScalarField::from_fn(g, |x| x[0]);
        assert_abs_diff_eq!(modular(&x, &ScalarField::constant(g, 2.0)).unwrap(), 1.0 / 3.0, epsilon = 1e-6);
    }

    #[test]
    fn modular_rejects_small_exponent() {
        let g = unit(5);
        let u = ScalarField::constant(g, 1.0);
        assert!(modular(&u, &ScalarField::constant(g, 0.5)).is_err());
        assert!(luxemburg_norm(&u, &ScalarField::constant(g, 0.99)).is_err());
    }

    #[test]
    fn norm_examples() {
        let g = unit(65);
        let m3 = ScalarField::constant(g, 3.0);
        assert_eq!(luxemburg_norm(&ScalarField::zeros(g), &m3).unwrap(), 0.0);
        let n = luxemburg_norm(&ScalarField::constant(g, 2.0), &m3).unwrap();
        assert_abs_diff_eq!(n, 2.0, epsilon = 1e-11);

        // ∫(x/λ)^2 = 1  =>  λ = sqrt(∫x^2); the trapezoid value of ∫x^2 is 1/3 + h^2/6
        let g = unit(1025);
        let x = ScalarField::from_fn(g, |x| x[0]);
        let h = 1.0 / 1024.0;
        let closed = (1.0 / 3.0 + h * h / 6.0f64).sqrt();
        let n = luxemburg_norm(&x, &ScalarField::constant(g, 2.0)).unwrap();
        assert_abs_diff_eq!(n, closed, epsilon = 1e-11);
        assert_abs_diff_eq!(n, 1.0 / 3f64.sqrt(), epsilon = 1e-6);
    }

    #[test]
    fn h0_examples() {
        let g = unit(9);
        let e = ExponentSet::new(ScalarField::constant(g, 1.5));
        let r = check_h0(&e, 2).unwrap();
        assert!(r.is_ok() && r.warnings.is_empty());

        let e = ExponentSet::new(ScalarField::constant(g, 2.5));
        let r = check_h0(&e, 2).unwrap();
        assert!(r.is_ok());
        assert_eq!(r.warnings.len(), 1);

        let e = ExponentSet::new(ScalarField::constant(g, 0.9));
        let r = check_h0(&e, 2).unwrap();
        assert_eq!(r.violations, vec![H0Violation::PMinusNotAboveOne { p_minus: 0.9 }]);
        assert!(r.into_result().is_err());

        let mut e = ExponentSet::new(ScalarField::constant(g, 1.5));
        e.alpha = ScalarField::constant(g, -0.1);
        e.q = ScalarField::constant(g, 0.5);
        let r = check_h0(&e, 3).unwrap();
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn holder_examples() {
        let g = unit(33);
        let one = ScalarField::constant(g, 1.0);
        let two = ScalarField::constant(g, 2.0);
        assert_abs_diff_eq!(holder_gap(&one, &one, &two, &two).unwrap(), 0.0, epsilon = 1e-11);
        let v = ScalarField::from_fn(g, |x| x[0].sin());
        let gap = holder_gap(&ScalarField::zeros(g), &v, &two, &two).unwrap();
        assert_eq!(gap, 0.0);
        let gap = holder_gap(&one, &v, &ScalarField::constant(g, 3.0), &ScalarField::constant(g, 1.5)).unwrap();
        assert!(gap >= 0.0);
        assert!(holder_gap(&one, &v, &two, &ScalarField::constant(g, 3.0)).is_err());
    }
}
