use std::f64::consts::PI;

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use varexp_core::apps::{build_sublinear, solve_built, SublinearCase, SublinearSetup};
use varexp_core::subsuper::{nodal_fn, FixedPointOptions};
use varexp_core::{luxemburg_norm, solve_dirichlet, DirichletProblem, ExponentSet, Grid, ScalarField, SolverOptions};

fn wavy(grid: Grid) -> ScalarField {
    ScalarField::from_fn(grid, |x| 1.8 + 0.1 * (PI * x[0]).sin() * (1.0 + x[1]))
}

fn norms(c: &mut Criterion) {
    let mut g = c.benchmark_group("luxemburg_norm");
    for n in [256, 4096] {
        let grid = Grid::interval(0.0, 1.0, n).unwrap();
        let m = wavy(grid);
        let u = ScalarField::from_fn(grid, |x| (7.0 * x[0]).sin() * 3.0);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| luxemburg_norm(black_box(&u), &m).unwrap())
        });
    }
    g.finish();
}

fn dirichlet(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_dirichlet");
    let cases = [
        ("1d-257", Grid::interval(0.0, 1.0, 257).unwrap()),
        ("2d-33x33", Grid::rectangle((0.0, 1.0), (0.0, 1.0), (33, 33)).unwrap()),
    ];
    for (name, grid) in cases {
        let prob = DirichletProblem::new(wavy(grid), ScalarField::constant(grid, 1.0));
        g.bench_function(name, |b| b.iter(|| solve_dirichlet(black_box(&prob), None).unwrap()));
    }
    g.finish();
}

fn sublinear(c: &mut Criterion) {
    let grid = Grid::interval(0.0, 1.0, 129).unwrap();
    let mut e = ExponentSet::new(wavy(grid));
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
    let fp = FixedPointOptions::new(1e-6);
    c.bench_function("sublinear_pipeline", |b| {
        b.iter(|| solve_built(build_sublinear(&setup).unwrap(), &fp, 8).unwrap())
    });
}

criterion_group!(benches, norms, dirichlet, sublinear);
criterion_main!(benches);
