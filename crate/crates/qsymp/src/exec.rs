//! Parallel/sequential execution shim.
//!
//! All data-parallel work in the crate flows through these helpers so that a
//! `--no-default-features` build runs the identical algorithms sequentially.
//! Determinism contract: work is split into fixed index ranges up front,
//! results are collected in index order, and reductions run as an
//! index-ordered pairwise tree, so outputs are bit-identical regardless of
//! thread count or backend.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..count`, collecting results in index order.
pub fn map_indexed<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Pairwise tree fold with a fixed association order (split at the midpoint),
/// so floating-point accumulation does not depend on chunking or thread count.
pub fn tree_fold<T, F>(items: &[T], combine: &F, empty: T) -> T
where
    T: Clone,
    F: Fn(&T, &T) -> T,
{
    match items.len() {
        0 => empty,
        1 => items[0].clone(),
        n => {
            let (lo, hi) = items.split_at(n / 2);
            let a = tree_fold(lo, combine, empty.clone());
            let b = tree_fold(hi, combine, empty);
            combine(&a, &b)
        }
    }
}

/// Independent generator for one work shard: a fixed base seed plus the
/// shard index selects a dedicated ChaCha stream, so shard results do not
/// depend on how shards are scheduled across threads.
pub fn stream_rng(seed: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shard);
    rng
}

/// Pin the global thread pool size (no-op in a sequential build; returns
/// whether the request took effect). Call once, before any parallel work.
pub fn configure_threads(threads: Option<usize>) -> bool {
    #[cfg(feature = "parallel")]
    {
        match threads {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .is_ok(),
            None => true,
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        true
    }
}

/// Whether this build executes shards on a thread pool.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_fold_matches_sequential_sum_for_integers() {
        let items: Vec<i64> = (0..1000).collect();
        let total = tree_fold(&items, &|a, b| a + b, 0);
        assert_eq!(total, 499_500);
    }

    #[test]
    fn tree_fold_association_is_fixed() {
        // Floating-point sums depend on association order; the tree must pick
        // one order and stick to it.
        let items: Vec<f64> = (0..100).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = tree_fold(&items, &|x, y| x + y, 0.0);
        let b = tree_fold(&items, &|x, y| x + y, 0.0);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn stream_rng_is_reproducible_and_stream_separated() {
        use rand::RngCore;
        let mut a = stream_rng(7, 0);
        let mut b = stream_rng(7, 0);
        let mut c = stream_rng(7, 1);
        let (xa, xb, xc) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn map_indexed_preserves_order() {
        let out = map_indexed(257, |i| i * i);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i * i);
        }
    }
}
