use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use extlab_core::elliptic::newtonian_potential;
use extlab_core::expansion::fit_expansion;
use extlab_core::grid::{build_grid, ScalarField, Spacing};
use extlab_core::nonlinear::{default_initial_guess, monge_ampere_spec, newton_solve, radial_ma_field, NewtonOptions};

fn newton(c: &mut Criterion) {
    let mut group = c.benchmark_group("newton_monge_ampere");
    group.sample_size(10);
    for n in [33usize, 65] {
        let g = build_grid(1.0, 16.0, n, n - 1, Spacing::LogRadial).unwrap();
        let exact = radial_ma_field(&g, 1.0);
        let (gi, go) = (exact.ring(0).to_vec(), exact.ring(n - 1).to_vec());
        let u0 = default_initial_guess(&g, &gi, &go).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                newton_solve(&monge_ampere_spec(), &gi, &go, black_box(&u0), None, &NewtonOptions::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn potential(c: &mut Criterion) {
    let mut group = c.benchmark_group("newtonian_potential");
    group.sample_size(10);
    for n in [32usize, 64] {
        let g = build_grid(1.0, 8.0, n, n, Spacing::LogRadial).unwrap();
        let f = ScalarField::from_polar_fn(g, |r, _| r.powi(-4)).unwrap();
        let targets: Vec<[f64; 2]> = (0..64).map(|k| [2.0 + 0.05 * k as f64, 1.0]).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| newtonian_potential(black_box(&f), &targets).unwrap())
        });
    }
    group.finish();
}

fn expansion(c: &mut Criterion) {
    let g = build_grid(1.0, 64.0, 256, 128, Spacing::LogRadial).unwrap();
    let u = radial_ma_field(&g, 2.0);
    let windows = [(8.0, 16.0), (16.0, 32.0), (32.0, 64.0)];
    c.bench_function("fit_expansion_256x128", |b| b.iter(|| fit_expansion(black_box(&u), &windows).unwrap()));
}

criterion_group!(benches, newton, potential, expansion);
criterion_main!(benches);
