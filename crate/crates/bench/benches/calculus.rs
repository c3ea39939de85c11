use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use optkit::format::parse_theory;
use optkit::ncsearch::{search_nc_model, NcProblem};
use optkit::quotient::quotient_theory;
use optkit::random::{random_test, trial_rng, DEFAULT_DENOMINATOR};
use optkit::{compose_par, compose_seq, GptFragment, Theory};

fn composition(c: &mut Criterion) {
    let mut group = c.benchmark_group("compose");
    for n in [2usize, 4, 8] {
        let th = Theory::classical(&[("A", n), ("B", n)]).unwrap();
        let (a, b) = (th.system("A").unwrap(), th.system("B").unwrap());
        let mut rng = trial_rng(1, n as u64);
        let t = random_test(&mut rng, "T", &a, &b, 3, DEFAULT_DENOMINATOR);
        let u = random_test(&mut rng, "U", &b, &a, 3, DEFAULT_DENOMINATOR);
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |bch, _| {
            bch.iter(|| compose_seq(black_box(&t), black_box(&u)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("par", n), &n, |bch, _| {
            bch.iter(|| compose_par(black_box(&t), black_box(&u)).unwrap())
        });
    }
    group.finish();
}

fn quotient(c: &mut Criterion) {
    let th = parse_theory(include_str!("../../../fixtures/labeled.theory")).unwrap();
    c.bench_function("quotient/labeled", |bch| bch.iter(|| quotient_theory(black_box(&th)).unwrap()));
}

fn nc_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("nc_search");
    group.sample_size(10);
    for n in [2usize, 3, 4] {
        let prob = NcProblem::new(GptFragment::simplex(n).unwrap(), n).unwrap().with_starts(4);
        group.bench_with_input(BenchmarkId::new("simplex", n), &prob, |bch, p| {
            bch.iter(|| search_nc_model(black_box(p), 0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, composition, quotient, nc_search);
criterion_main!(benches);
