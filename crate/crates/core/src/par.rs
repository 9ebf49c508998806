//! Seeded batch parallelism. Work is cut into fixed-size batches, each with
//! its own ChaCha stream derived from `(seed, tag, batch index)`, so results
//! do not depend on how many threads run them.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const BATCH: usize = 64;

/// Distinct tags keep estimators that share a seed on disjoint streams.
pub mod tag {
    pub const LYAPUNOV: u64 = 1;
    pub const STATIONARY: u64 = 2;
    pub const STOPPING: u64 = 3;
    pub const RENEWAL: u64 = 4;
    pub const LARGE_DEVIATION: u64 = 5;
    pub const CONSISTENCY: u64 = 6;
    pub const CHECKS: u64 = 7;
    pub const DETAIL_PROBE: u64 = 8;
}

pub fn stream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((tag << 40) ^ index);
    rng
}

/// Calls `f(rng, range)` on consecutive ranges of `0..n` and concatenates
/// the results in order.
pub fn batched<T, F>(n: usize, seed: u64, tag: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, Range<usize>) -> Vec<T> + Sync,
{
    let batches = n.div_ceil(BATCH);
    let parts: Vec<Vec<T>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, tag, b as u64);
            f(&mut rng, b * BATCH..((b + 1) * BATCH).min(n))
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// One stream per item, for items that are expensive on their own.
pub fn per_item<T, F>(n: usize, seed: u64, tag: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, tag, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads (0 means rayon's default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn independent_of_worker_count() {
        let run = || batched(1000, 9, 1, |rng, r| r.map(|_| rng.random::<u64>()).collect());
        let a = with_workers(1, run);
        let b = with_workers(4, run);
        assert_eq!(a, b);
        assert_eq!(a.len(), 1000);
        let c = with_workers(3, || batched(1000, 10, 1, |rng, r| r.map(|_| rng.random::<u64>()).collect()));
        assert_ne!(a, c);
    }
}
