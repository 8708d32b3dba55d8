//! Numerical sub-supersolution method for nonlocal Dirichlet problems
//!
//! ```text
//! -A(x, |u|_{L^{r(x)}}) Δ_{p(x)} u = f(x,u) |u|_{L^{q(x)}}^{α(x)} + g(x,u) |u|_{L^{s(x)}}^{γ(x)}  in Ω
//!                                u = 0                                                       on ∂Ω
//! ```
//!
//! on intervals and rectangles: variable-exponent norms, a discrete
//! p(x)-Laplacian solver, the truncation/fixed-point machinery, and the
//! explicit sub/supersolution builders for the sublinear, concave-convex and
//! logistic model problems.

pub mod apps;
pub mod constructions;
pub mod error;
pub mod grid;
pub mod modular;
pub mod plaplace;
pub mod quad;
pub mod subsuper;

pub use error::{Error, Result};
pub use grid::{distance_field, gradient, integrate, Grid, Node, ScalarField};
pub use modular::{check_h0, holder_gap, luxemburg_norm, modular, ExponentSet, H0Report};
pub use plaplace::{
    compare_weak, energy, energy_gradient, solve_dirichlet, torsion, DirichletProblem, EnergyReport, PLaplacian,
    SolverOptions,
};
pub use subsuper::{
    fixed_point, nonlocal_rhs, rhs_bound, solve_s, truncate, verify_pair, FixedPointOptions, NodalFn, NonlocalProblem,
    PairReport, Scheme, SolveReport, Start, SubSuperPair,
};
