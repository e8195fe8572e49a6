//! Data-parallel helpers.
//!
//! Every grid sweep and Monte Carlo loop in the crate goes through these
//! functions. With the `parallel` feature (default) they run on the rayon
//! pool; without it, or with [`Exec::Sequential`], they run on the calling
//! thread. Results are always assembled in index order, so the output does
//! not depend on the execution mode or the number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Uses the rayon pool when the `parallel` feature is enabled; otherwise
    /// identical to `Sequential`.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Evaluates `f(0..len)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Exec, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => (0..len).into_par_iter().map(f).collect(),
        _ => (0..len).map(f).collect(),
    }
}

pub fn map_slice<A, T, F>(exec: Exec, items: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

/// Like [`map_indexed`] for fallible work; the first error in index order wins.
pub fn try_map_indexed<T, E, F>(exec: Exec, len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indexed(exec, len, f).into_iter().collect()
}

/// Draws per chunk in seeded Monte Carlo loops.
pub const MC_CHUNK: usize = 4096;

/// Independent random stream for chunk `chunk` of a run seeded by `seed`.
pub fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Runs `draws` Monte Carlo replications in fixed-size chunks. `f` receives
/// the chunk's RNG and the number of draws it owns, and returns a partial
/// accumulator; the partials are returned in chunk order.
pub fn mc_chunks<T, F>(exec: Exec, seed: u64, draws: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
{
    let chunks = draws.div_ceil(MC_CHUNK);
    map_indexed(exec, chunks, |c| {
        let mut rng = chunk_rng(seed, c);
        let count = MC_CHUNK.min(draws - c * MC_CHUNK);
        f(&mut rng, count)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn modes_agree_bitwise() {
        let run = |exec| mc_chunks(exec, 7, 10_000, |rng, k| (0..k).map(|_| rng.random::<f64>()).sum::<f64>());
        assert_eq!(run(Exec::Sequential), run(Exec::Parallel));
        let seq = map_indexed(Exec::Sequential, 100, |i| (i as f64).sqrt());
        let par = map_indexed(Exec::Parallel, 100, |i| (i as f64).sqrt());
        assert_eq!(seq, par);
    }

    #[test]
    fn chunk_sizes_cover_draws() {
        let counts = mc_chunks(Exec::default(), 1, 2 * MC_CHUNK + 5, |_, k| k);
        assert_eq!(counts, vec![MC_CHUNK, MC_CHUNK, 5]);
    }
}
