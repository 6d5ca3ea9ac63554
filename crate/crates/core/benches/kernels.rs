//! Hot kernels under the `parallel` feature and without it.
//!
//! Benchmark ids do not depend on the feature, so running
//!
//! ```text
//! cargo bench -p fblab-core
//! cargo bench -p fblab-core --no-default-features
//! ```
//!
//! makes criterion report the sequential build against the parallel
//! baseline. With rayon enabled, each kernel is also timed inside a
//! one-thread pool for a same-run comparison.

#[cfg(feature = "parallel")]
use criterion::BenchmarkId;
use criterion::{black_box, criterion_group, criterion_main, Criterion};
use fblab_core::free_boundary::pullback;
use fblab_core::geometry::{Chart, DomainSpec, FieldSpec, OrbitOptions};
use fblab_core::grid::GridField;
use fblab_core::operator::NFunctionSpec;
use fblab_core::solver::{
    discrete_a_laplacian, face_coefficients, pcg, Coefficient, FaceOperator, Preconditioner,
};

type Kernel = Box<dyn Fn() + Send + Sync>;

fn kernels() -> Vec<(&'static str, Kernel)> {
    let d = DomainSpec::unit_square(257);
    let spec = NFunctionSpec::power(3.0);
    let u = GridField::from_fn(d, |x| {
        (0.4 - x[1]).max(0.0) + 0.01 * (7.0 * x[0]).sin() * x[1] * (1.0 - x[1])
    });
    let op = FaceOperator::new(&face_coefficients(&spec, 1e-8, &u, Coefficient::Secant));
    let b: Vec<f64> = (0..d.len())
        .map(|k| {
            let (i, j) = d.ij(k);
            if d.is_boundary(i, j) {
                0.0
            } else {
                ((k % 13) as f64 - 6.0) * 1e-2
            }
        })
        .collect();
    let field = FieldSpec::tilted();
    let chart_domain = DomainSpec::unit_square(129);
    let chart = Chart::uniform(
        &field,
        &chart_domain,
        0.2,
        128,
        &OrbitOptions::for_domain(&chart_domain),
    )
    .unwrap();
    let coarse = GridField::from_fn(chart_domain, |x| (0.5 - x[1]).max(0.0));

    let (u1, u2, spec1, spec2, op1) = (u.clone(), u, spec.clone(), spec, op.clone());
    let b1 = b.clone();
    let field1 = field;
    let chart_domain1 = chart_domain;
    vec![
        (
            "a_laplacian",
            Box::new(move || {
                black_box(discrete_a_laplacian(&spec1, &u1));
            }),
        ),
        (
            "face_coefficients",
            Box::new(move || {
                black_box(face_coefficients(&spec2, 1e-8, &u2, Coefficient::Tangent));
            }),
        ),
        (
            "operator_apply",
            Box::new(move || {
                let mut out = vec![0.0; b1.len()];
                op1.apply(&b1, &mut out);
                black_box(out);
            }),
        ),
        (
            "pcg_column_lines",
            Box::new(move || {
                black_box(pcg(&op, &b, 1e-8, 5000, Preconditioner::ColumnLines).unwrap());
            }),
        ),
        (
            "chart_build",
            Box::new(move || {
                black_box(
                    Chart::uniform(
                        &field1,
                        &chart_domain1,
                        0.2,
                        128,
                        &OrbitOptions::for_domain(&chart_domain1),
                    )
                    .unwrap(),
                );
            }),
        ),
        (
            "pullback",
            Box::new(move || {
                black_box(pullback(&coarse, &chart, 0.004).unwrap());
            }),
        ),
    ]
}

fn bench(c: &mut Criterion) {
    let mode = if fblab_core::par::is_parallel() {
        "parallel"
    } else {
        "sequential"
    };
    println!(
        "kernels built {mode}, {} worker(s)",
        fblab_core::par::workers()
    );
    let mut group = c.benchmark_group("kernels");
    group.sample_size(20);
    for (name, f) in kernels() {
        group.bench_function(name, |bch| bch.iter(&f));
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap();
            group.bench_with_input(BenchmarkId::new("one_thread", name), &name, |bch, _| {
                pool.install(|| bch.iter(&f));
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
