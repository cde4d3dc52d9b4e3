use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NucleationParams, PhaseState};
use crate::seed::derive_seed;

// Distinct key spaces for the two random processes of a run.
const NUCLEATION_KEY: u64 = 0x6e75_636c_6561_7465;
const PLACEMENT_KEY: u64 = 0x7365_6564_6e75_636c;

/// Stochastic nucleation on amorphous cells.
///
/// Each cell with `φ < 0.5` becomes crystal with probability
/// `min(1, rate(T)·dt·dx²)`. Every cell consumes exactly one uniform draw
/// from a ChaCha stream keyed by `(seed, step, row)`, so the outcome does
/// not depend on evaluation order.
pub fn nucleate(state: &mut PhaseState, params: &NucleationParams, dt: f64, dx: f64) {
    if params.n0 <= 0.0 {
        return;
    }
    let tm = params.melting_point(state.tc);
    let scale = dt * dx * dx;
    let seed = derive_seed(params.rng_seed, NUCLEATION_KEY, state.step);
    let cols = state.phi.ncols();
    for (i, (mut phi_row, temp_row)) in state
        .phi
        .rows_mut()
        .into_iter()
        .zip(state.temp.rows())
        .enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for j in 0..cols {
            let u: f64 = rng.random();
            if phi_row[j] >= 0.5 {
                continue;
            }
            let p = (params.rate(temp_row[j], tm) * scale).min(1.0);
            if u < p {
                phi_row[j] = 1.0;
            }
        }
    }
}

/// Distinct, uniformly random single-cell seed positions for a grid.
pub fn place_initial_nuclei(rows: usize, cols: usize, params: &NucleationParams) -> Vec<(usize, usize)> {
    let count = params.initial_nuclei.min(rows * cols);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(params.rng_seed, PLACEMENT_KEY, 0));
    let mut picked = rand::seq::index::sample(&mut rng, rows * cols, count).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|k| (k / cols, k % cols)).collect()
}
