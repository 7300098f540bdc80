//! Compares the parallel (rayon, per-cone) and sequential lanes of the
//! compatibility solver on batches of random split bundles.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tvb_core::fixtures;
use tvb_core::plmap::{compatibility_solve, compatibility_solve_seq, RayFiltrationData};
use tvb_core::Fan;

fn instances(fan: &Fan, rank: usize, count: usize) -> Vec<RayFiltrationData> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xbe5e);
    (0..count)
        .map(|_| {
            fixtures::random_split_bundle(fan, rank, &mut rng)
                .expect("split bundles are valid")
                .ray_filtrations()
                .expect("split bundles are integral")
        })
        .collect()
}

fn bench_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("compatibility_solve");
    for (name, fan) in [("p2", fixtures::fan_p2()), ("p1xp1", fixtures::fan_p1xp1())] {
        for rank in [2usize, 4] {
            let batch = instances(&fan, rank, 8);
            group.bench_with_input(
                BenchmarkId::new(format!("parallel/{name}"), rank),
                &batch,
                |b, batch| {
                    b.iter(|| {
                        for data in batch {
                            compatibility_solve(&fan, data).unwrap();
                        }
                    })
                },
            );
            group.bench_with_input(
                BenchmarkId::new(format!("sequential/{name}"), rank),
                &batch,
                |b, batch| {
                    b.iter(|| {
                        for data in batch {
                            compatibility_solve_seq(&fan, data).unwrap();
                        }
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, bench_solver);
criterion_main!(benches);
