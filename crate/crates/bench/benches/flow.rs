use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};

use cone_mcf::homog::{run_sandwich_with, SandwichConfig};
use cone_mcf::pde::{evolve, AdmissibleInitial, AngleFunction, Scheme, SolverConfig};
use cone_mcf::profile::{default_eps_schedule, solve_profile, ProfileTolerances};
use cone_mcf::SelfSimilarSolution;

fn bench_flow(c: &mut Criterion) {
    let prof = Arc::new(
        solve_profile(
            2,
            0.5,
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap(),
    );
    let sol = SelfSimilarSolution::new(prof, 1.0).unwrap();
    let angle = AngleFunction::constant(0.5).unwrap();
    let initial = AdmissibleInitial::from_self_similar(&sol, &angle, 0.0, 2000).unwrap();
    let mut g = c.benchmark_group("evolve N=2 k=0.5 t in [1, 2]");
    for scheme in [Scheme::Transformed, Scheme::Direct] {
        let config = SolverConfig {
            scheme,
            ..SolverConfig::default()
        };
        g.bench_function(format!("{scheme:?} M=200 adaptive"), |b| {
            b.iter(|| evolve(black_box(&initial), &angle, 2, &config, 1.0, &[]).unwrap())
        });
    }
    g.finish();

    let line = Arc::new(
        solve_profile(
            1,
            0.3,
            &default_eps_schedule(),
            &ProfileTolerances::default(),
        )
        .unwrap(),
    );
    let wavy = AngleFunction::sinusoid(0.3, 0.6, 0.1).unwrap();
    let config = SandwichConfig {
        cap: 20.0,
        ..SandwichConfig::default()
    };
    let mut g = c.benchmark_group("sandwich");
    g.sample_size(10);
    g.bench_function("N=1 eps=0.1 T=20", |b| {
        b.iter(|| run_sandwich_with(line.clone(), black_box(&wavy), 1.0, 1.5, &config).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bench_flow);
criterion_main!(benches);
