//! Seeded fixtures shared by the benchmarks.

use chaintrunc_core::{
    chain_from_io, ChainModel, InitialState, IoModel, OrthogonalMap, RandomFamily,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random bath of `n` modes with its chain and a bath-only initial state.
pub struct Fixture {
    pub io: IoModel,
    pub chain: ChainModel,
    pub map: OrthogonalMap,
    pub init: InitialState,
}

pub fn fixture(n: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let io = RandomFamily::default()
        .sample(n, &mut rng)
        .expect("random family draw");
    let (chain, map) = chain_from_io(&io).expect("chain mapping");
    let q0 = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let qd = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let init = InitialState::new(q0, qd, 0.0, 0.0).expect("initial state");
    Fixture {
        io,
        chain,
        map,
        init,
    }
}

/// `i + 1` frequencies spread over [0.7, 4.5].
pub fn kernel_frequencies(i: usize) -> Vec<f64> {
    (0..=i)
        .map(|k| 0.7 + 3.8 * k as f64 / (i.max(1)) as f64)
        .collect()
}
