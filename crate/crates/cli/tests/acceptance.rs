//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varexp_core::apps::{
    build_concave, build_logistic, build_sublinear, solve_built, ConcaveSetup, LogisticSetup, Outcome, SublinearCase,
    SublinearSetup,
};
use varexp_core::constructions::{cbar, concave_exponents, psi, select_m_concave, ConcaveExponents};
use varexp_core::subsuper::{nodal_fn, FixedPointOptions, Scheme};
use varexp_core::{
    energy, energy_gradient, holder_gap, luxemburg_norm, modular, solve_dirichlet, torsion, DirichletProblem,
    ExponentSet, Grid, ScalarField, SolverOptions,
};

// Tolerances.
const MODULAR_TOL: f64 = 1e-9;
const HOLDER_TOL: f64 = 1e-9;
const P2_ERR: f64 = 1e-3;
const P4_ERR: f64 = 5e-3;
const SLOPE_TOL_P2: f64 = 0.02;
const SLOPE_TOL_P3: f64 = 0.05;
const GRAD_REL: f64 = 1e-5;
const PAIR_TOL: f64 = 1e-8;
const FP_TOL: f64 = 1e-6;
const SANDWICH_TOL: f64 = 1e-8;
const ARGMIN_REL: f64 = 1e-8;
const ORDER_TOL: f64 = 1e-8;

// Runtime limits.
const LIMIT_MODULAR: Duration = Duration::from_secs(5);
const LIMIT_ANALYTIC: Duration = Duration::from_secs(30);
const LIMIT_SUBLINEAR: Duration = Duration::from_secs(120);

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {:.2} s, limit {} s", t.as_secs_f64(), limit.as_secs()))
}

fn unit(n: usize) -> Grid {
    Grid::interval(0.0, 1.0, n).unwrap()
}

fn random_field(grid: Grid, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> ScalarField {
    ScalarField::from_values(grid, (0..grid.len()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn modular_suite() -> Check {
    let start = Instant::now();
    let grid = unit(256);
    let m = ScalarField::from_fn(grid, |x| 1.8 + 0.15 * (2.0 * PI * x[0]).sin());
    let (pm, pp) = (m.min(), m.max());
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let scale = 10f64.powf(rng.gen_range(-2.0..2.0));
        let u = random_field(grid, &mut rng, -1.0, 1.0).scale(scale);
        let n = luxemburg_norm(&u, &m).map_err(|e| e.to_string())?;
        let rho = modular(&u, &m).map_err(|e| e.to_string())?;
        // (i)
        let unit_rho = modular(&u.scale(1.0 / n), &m).map_err(|e| e.to_string())?;
        worst = worst.max((unit_rho - 1.0).abs());
        ensure((unit_rho - 1.0).abs() <= MODULAR_TOL, || format!("field {i}: ρ(u/|u|) = {unit_rho}"))?;
        // (ii)
        let tol = MODULAR_TOL * rho.max(1.0);
        if n > 1.0 {
            ensure(rho > 1.0 - tol, || format!("field {i}: |u| = {n} > 1 but ρ = {rho}"))?;
            // (iii)
            ensure(n.powf(pm) <= rho + tol && rho <= n.powf(pp) + tol, || format!("field {i}: (iii) fails"))?;
        } else {
            ensure(rho < 1.0 + tol, || format!("field {i}: |u| = {n} < 1 but ρ = {rho}"))?;
            // (iv)
            ensure(n.powf(pp) <= rho + tol && rho <= n.powf(pm) + tol, || format!("field {i}: (iv) fails"))?;
        }
    }
    let mut min_gap = f64::INFINITY;
    for i in 0..100 {
        let lo = rng.gen_range(1.1..3.0);
        let amp = rng.gen_range(0.0..1.5);
        let phase = rng.gen_range(0.0..2.0 * PI);
        let mm = ScalarField::from_fn(grid, |x| lo + amp * (0.5 + 0.5 * (2.0 * PI * x[0] + phase).sin()));
        let mc = mm.map(|e| e / (e - 1.0));
        let u = random_field(grid, &mut rng, -3.0, 3.0);
        let v = random_field(grid, &mut rng, -3.0, 3.0);
        let gap = holder_gap(&u, &v, &mm, &mc).map_err(|e| e.to_string())?;
        min_gap = min_gap.min(gap);
        ensure(gap >= -HOLDER_TOL, || format!("pair {i}: Hölder gap {gap}"))?;
    }
    within(LIMIT_MODULAR, start)?;
    Ok(format!("max |ρ(u/|u|)-1| = {worst:.1e}, min Hölder gap = {min_gap:.3e}"))
}

fn analytic_regression() -> Check {
    let start = Instant::now();
    let grid = unit(257);
    let solve = |p: f64, rhs: f64| -> Result<ScalarField, String> {
        let prob = DirichletProblem::new(ScalarField::constant(grid, p), ScalarField::constant(grid, rhs));
        let r = solve_dirichlet(&prob, None).map_err(|e| e.to_string())?;
        ensure(r.converged, || format!("p = {p} solve did not converge"))?;
        Ok(r.minimizer)
    };
    let u2 = solve(2.0, 8.0)?;
    let exact2 = ScalarField::from_fn(grid, |x| 4.0 * x[0] * (1.0 - x[0]));
    let e2 = u2.sup_distance(&exact2).unwrap();
    let u4 = solve(4.0, 1.0)?;
    let exact4 = ScalarField::from_fn(grid, |x| 0.75 * (0.5f64.powf(4.0 / 3.0) - (x[0] - 0.5).abs().powf(4.0 / 3.0)));
    let e4 = u4.sup_distance(&exact4).unwrap();
    ensure(e2 < P2_ERR, || format!("p = 2 error {e2:.3e}"))?;
    ensure(e4 < P4_ERR, || format!("p = 4 error {e4:.3e}"))?;
    within(LIMIT_ANALYTIC, start)?;
    Ok(format!("p=2 error {e2:.2e}, p=4 error {e4:.2e}"))
}

fn fitted_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn torsion_scaling() -> Check {
    let grid = unit(129);
    let opts = SolverOptions::default();
    let mut out = Vec::new();
    for (p, tol) in [(2.0, SLOPE_TOL_P2), (3.0, SLOPE_TOL_P3)] {
        let pf = ScalarField::constant(grid, p);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for j in 0..=6 {
            let lambda = 2f64.powi(j);
            let z = torsion(lambda, &pf, &opts).map_err(|e| e.to_string())?;
            xs.push(lambda.ln());
            ys.push(z.sup_norm().ln());
        }
        let slope = fitted_slope(&xs, &ys);
        let expected = 1.0 / (p - 1.0);
        ensure((slope - expected).abs() <= tol, || format!("p = {p}: slope {slope:.5}, expected {expected}"))?;
        out.push(format!("p={p} slope {slope:.5}"));
    }
    Ok(out.join(", "))
}

fn gradient_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    let cases = 24;
    for case in 0..cases {
        let grid = if case % 4 == 3 { Grid::rectangle((0.0, 1.0), (0.0, 1.0), (8, 7)).unwrap() } else { unit(33) };
        let base = rng.gen_range(1.3..3.5);
        let amp = rng.gen_range(0.0..0.4);
        let p = ScalarField::from_fn(grid, |x| base + amp * (PI * x[0] + 2.0 * x[1]).sin());
        let u = random_field(grid, &mut rng, -1.0, 1.0).with_zero_boundary();
        let rhs = random_field(grid, &mut rng, -2.0, 2.0);
        let g = energy_gradient(&u, &p, &rhs, eps).map_err(|e| e.to_string())?;
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for k in grid.interior() {
            let h = 1e-6;
            let bump = |d: f64| {
                let mut v = u.values().to_vec();
                v[k] += d;
                energy(&ScalarField::from_values(grid, v).unwrap(), &p, &rhs, eps).unwrap()
            };
            let fd = (bump(h) - bump(-h)) / (2.0 * h);
            diff = diff.max((fd - g.get(k)).abs());
            scale = scale.max(g.get(k).abs());
        }
        let rel = diff / scale;
        worst = worst.max(rel);
        ensure(rel < GRAD_REL, || format!("case {case}: relative error {rel:.3e}"))?;
    }
    Ok(format!("{cases} instances, worst relative error {worst:.2e}"))
}

fn sublinear_end_to_end() -> Check {
    let start = Instant::now();
    let grid = unit(129);
    let mut e = ExponentSet::new(ScalarField::from_fn(grid, |x| 1.8 + 0.1 * (PI * x[0]).sin()));
    e.alpha = ScalarField::constant(grid, 0.1);
    e.beta = ScalarField::constant(grid, 0.2);
    let setup = SublinearSetup {
        exponents: e,
        coefficient: nodal_fn(|_, t| 1.0 + t),
        case: SublinearCase::A1 { a0: 1.0 },
        k_knob: 1.1,
        delta: None,
        k_max: 65536.0,
        solver: SolverOptions::default(),
    };
    let built = build_sublinear(&setup).map_err(|e| e.to_string())?;
    let out = solve_built(built, &FixedPointOptions::new(FP_TOL), 8).map_err(|e| e.to_string())?;
    check_solution(&out, 200)?;
    let u = &out.solve.solution;
    ensure(grid.interior().all(|k| u.get(k) > 0.0), || "solution not positive inside".into())?;
    within(LIMIT_SUBLINEAR, start)?;
    let p = &out.built.params;
    Ok(format!(
        "k = {}, λ = {}, {} iterations, fp residual {:.1e}",
        p.k.unwrap(),
        p.lambda.unwrap(),
        out.solve.iterations,
        out.solve.final_residual()
    ))
}

/// Pair check, convergence, ordering and `sub <= u <= sup`.
fn check_solution(out: &Outcome, max_outer: usize) -> Result<(), String> {
    let v = &out.verify;
    ensure(v.passes(PAIR_TOL), || format!("pair violations sub {:.3e}, sup {:.3e}", v.sub_violation, v.sup_violation))?;
    let s = &out.solve;
    ensure(s.converged && s.iterations <= max_outer, || format!("no convergence in {} iterations", s.iterations))?;
    ensure(s.final_residual() <= FP_TOL && s.map_residual <= FP_TOL, || {
        format!("residuals {:.3e} / {:.3e}", s.final_residual(), s.map_residual)
    })?;
    ensure(s.ordering_ok, || "ordering check failed".into())?;
    let pair = &out.built.pair;
    for k in 0..s.solution.values().len() {
        let u = s.solution.get(k);
        ensure(pair.sub.get(k) - SANDWICH_TOL <= u && u <= pair.sup.get(k) + SANDWICH_TOL, || {
            format!("node {k}: {u} outside [{}, {}]", pair.sub.get(k), pair.sup.get(k))
        })?;
    }
    Ok(())
}

/// Minimiser of a unimodal `f` on `[a, b]`, to bracket width `width`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, width: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

fn concave_convex() -> Check {
    // Golden section on s = ln t: a bracket width w in s is a relative
    // width of about w in t. Ψ itself is too flat at its minimum to locate
    // it below ~1e-8, so the search runs on |Ψ'|, which has a simple root
    // there. Ψ is checked to be no larger at the root than nearby.
    let ce = ConcaveExponents::new(0.5, 2.0, 1.8).map_err(|e| e.to_string())?;
    let (e1, e2) = (0.5 / 0.8, 2.0 / 0.8);
    for (lambda, theta) in [(1.0, 1.0), (1.0, 0.1), (1.0, 0.01), (3.0, 0.5)] {
        let sel = select_m_concave(lambda, theta, &ce, 1.0, 1.0).map_err(|e| e.to_string())?;
        let dpsi = |t: f64| lambda * (e1 - 1.0) * t.powf(e1 - 2.0) + theta * (e2 - 1.0) * t.powf(e2 - 2.0);
        let s = golden_section(|s| dpsi(s.exp()).abs(), -20.0, 20.0, 1e-13);
        let at = |t: f64| psi(t, lambda, theta, &ce, 1.0);
        let t = s.exp();
        ensure(at(t) <= at(t * 1.01) && at(t) <= at(t / 1.01), || {
            format!("λ={lambda}, θ={theta}: root of Ψ' at {t} is not a minimum")
        })?;
        let argmin = s.exp();
        let rel = (sel.m - argmin).abs() / argmin;
        ensure(rel <= ARGMIN_REL, || format!("λ={lambda}, θ={theta}: M = {} vs argmin {argmin}", sel.m))?;
    }

    let grid = unit(129);
    let mut e = ExponentSet::new(ScalarField::constant(grid, 1.8));
    e.alpha = ScalarField::constant(grid, 0.1);
    e.beta = ScalarField::constant(grid, 0.4);
    e.gamma = ScalarField::constant(grid, 0.5);
    e.eta = ScalarField::constant(grid, 1.5);
    let setup = ConcaveSetup {
        exponents: e.clone(),
        coefficient: nodal_fn(|_, t| 8.0 + 4.0 / (1.0 + t)),
        lambda: 1.0,
        theta_start: 1.0,
        theta_tries: 8,
        a0: 12.0,
        b0: 8.0,
        a1: 1.0,
        k_knob: 1.1,
        delta: None,
        k_max: 65536.0,
        solver: SolverOptions::default(),
    };
    let built = build_concave(&setup).map_err(|e| e.to_string())?;
    let params = built.params.clone();
    let a_lambda = params.bracket_coefficient.unwrap();
    let cb = cbar(&e, params.k_knob.unwrap()).map_err(|e| e.to_string())?;
    let ce = concave_exponents(&e).map_err(|e| e.to_string())?;
    let mut psis = Vec::new();
    for theta in [1e-1, 1e-2] {
        let m = select_m_concave(1.0, theta, &ce, a_lambda, cb).map_err(|e| e.to_string())?;
        ensure(m.psi_at_m <= 1.0, || format!("θ = {theta}: Ψ(M) = {}", m.psi_at_m))?;
        psis.push(format!("Ψ(M)|θ={theta} = {:.3}", m.psi_at_m));
    }
    let out = solve_built(built, &FixedPointOptions::new(FP_TOL), 8).map_err(|e| e.to_string())?;
    check_solution(&out, 200)?;
    Ok(format!("accepted θ = {}, {}", params.theta.unwrap(), psis.join(", ")))
}

fn logistic_case(p: ScalarField) -> Result<String, String> {
    let grid = *p.grid();
    let mut e = ExponentSet::new(p);
    e.alpha = ScalarField::constant(grid, 0.5);
    let setup = LogisticSetup {
        exponents: e,
        coefficient: nodal_fn(|_, t| 1.0 + t),
        f: Arc::new(|t: f64| t * (1.0 - t)),
        theta: 1.0,
        lambda_tilde: None,
        lambda: None,
        solver: SolverOptions::default(),
    };
    let built = build_logistic(&setup).map_err(|e| e.to_string())?;
    let j = built.params.j_z0.unwrap();
    ensure(j < 0.0, || format!("J(z₀) = {j}"))?;
    let z0 = &built.pair.sub;
    ensure(grid.interior().all(|k| z0.get(k) > 0.0) && z0.max() <= 1.0 + 1e-8, || {
        format!("z₀ range [{}, {}]", z0.min(), z0.max())
    })?;
    let lambda0 = built.params.lambda0.unwrap();
    let fp = FixedPointOptions::new(FP_TOL).with_scheme(Scheme::FrozenNorms);
    let out = solve_built(built, &fp, 8).map_err(|e| e.to_string())?;
    check_solution(&out, 200)?;
    let u = &out.solve.solution;
    ensure(grid.interior().all(|k| u.get(k) > 0.0 && u.get(k) <= 1.0), || {
        format!("u range [{}, {}]", u.min(), u.max())
    })?;
    Ok(format!("λ₀ = {lambda0:.4}, J(z₀) = {j:.4}, max u = {:.4}", u.max()))
}

fn logistic() -> Check {
    let grid = unit(129);
    let a = logistic_case(ScalarField::constant(grid, 2.0)).map_err(|e| format!("p = 2: {e}"))?;
    let b = logistic_case(ScalarField::from_fn(grid, |x| 1.9 + 0.05 * (2.0 * PI * x[0]).sin()))
        .map_err(|e| format!("variable p: {e}"))?;
    Ok(format!("p=2: {a}; variable p: {b}"))
}

fn comparison() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..20 {
        let grid = if i % 5 == 4 { Grid::rectangle((0.0, 1.0), (0.0, 1.0), (17, 17)).unwrap() } else { unit(65) };
        let base = rng.gen_range(1.5..3.0);
        let amp = rng.gen_range(0.0..0.3);
        let p = ScalarField::from_fn(grid, |x| base + amp * (2.0 * PI * x[0]).sin() * (1.0 + x[1]));
        let f1 = random_field(grid, &mut rng, -1.0, 2.0);
        let f2 = f1.zip_map(&random_field(grid, &mut rng, 0.0, 1.0), |a, b| a + b).unwrap();
        let u1 = solve_dirichlet(&DirichletProblem::new(p.clone(), f1), None).map_err(|e| e.to_string())?;
        let u2 = solve_dirichlet(&DirichletProblem::new(p, f2), None).map_err(|e| e.to_string())?;
        ensure(u1.converged && u2.converged, || format!("pair {i}: solve did not converge"))?;
        let gap = u1.minimizer.zip_map(&u2.minimizer, |a, b| a - b).unwrap().max();
        worst = worst.max(gap);
        ensure(gap <= ORDER_TOL, || format!("pair {i}: max(u1-u2) = {gap:.3e}"))?;
    }
    Ok(format!("20 pairs, max(u1-u2) = {worst:.2e}"))
}

fn cli(cfg: &Path, out: &Path) -> Result<i32, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_varexp"))
        .arg("--quiet")
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .status()
        .map_err(|e| e.to_string())?;
    status.code().ok_or_else(|| "killed by signal".into())
}

fn cli_determinism() -> Check {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in ["sublinear", "concave_convex", "logistic"] {
        let cfg = configs.join(format!("{name}.toml"));
        let dirs: Vec<PathBuf> = ["a", "b"].iter().map(|s| tmp.path().join(format!("{name}-{s}"))).collect();
        for d in &dirs {
            let code = cli(&cfg, d)?;
            ensure(code == 0, || format!("{name}: exit {code}"))?;
        }
        for file in ["solution.csv", "trace.csv"] {
            let a = std::fs::read(dirs[0].join(file)).map_err(|e| e.to_string())?;
            let b = std::fs::read(dirs[1].join(file)).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{name}/{file} differs between runs"))?;
        }
    }

    let base = std::fs::read_to_string(configs.join("sublinear.toml")).map_err(|e| e.to_string())?;
    let variants = [
        ("bad-p", base.replace("p = \"1.8 + 0.1*sin(pi*x1)\"", "p = 0.9"), 1),
        ("one-step", base.replace("max_outer = 200", "max_outer = 1"), 2),
    ];
    for (name, text, expected) in variants {
        ensure(text != base, || format!("{name}: bundled config changed shape"))?;
        let path = tmp.path().join(format!("{name}.toml"));
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
        let code = cli(&path, &tmp.path().join(name))?;
        ensure(code == expected, || format!("{name}: exit {code}, expected {expected}"))?;
    }
    Ok("bundled CSVs identical across runs; exit codes 0/1/2".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("luxemburg/modular suite", modular_suite),
        ("analytic regression", analytic_regression),
        ("torsion scaling", torsion_scaling),
        ("energy gradient", gradient_check),
        ("sublinear end-to-end", sublinear_end_to_end),
        ("concave-convex", concave_convex),
        ("logistic", logistic),
        ("comparison", comparison),
        ("cli determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} ({secs:.2} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.2} s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
