//! One-dimensional adaptive quadrature for antiderivatives of nonlinearities.

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Returns `0.0` for an empty interval and a negated integral when `b < a`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    if b < a {
        return -adaptive_simpson(f, b, a, tol);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        assert!((adaptive_simpson(&|x| x * x, 0.0, 1.0, 1e-12) - 1.0 / 3.0).abs() < 1e-14);
        assert!((adaptive_simpson(&f64::exp, 0.0, 2.0, 1e-12) - (2f64.exp() - 1.0)).abs() < 1e-11);
        assert!((adaptive_simpson(&|x| x, 1.0, 0.0, 1e-12) + 0.5).abs() < 1e-15);
        // integrable singular derivative at 0
        let v = adaptive_simpson(&|x: f64| x.powf(0.2), 0.0, 1.0, 1e-12);
        assert!((v - 1.0 / 1.2).abs() < 1e-9);
    }
}
