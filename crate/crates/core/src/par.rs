//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper maps an index range to values and collects them in index
//! order, so callers see the same output whether or not the `parallel`
//! feature is enabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(i)` for `i in 0..n` and collect in order.
#[cfg(feature = "parallel")]
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Split `0..n` into consecutive blocks of `block` indices and evaluate
/// `f(block_index, range)` for each block.
pub fn map_blocks<T, F>(n: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, std::ops::Range<usize>) -> T + Sync + Send,
{
    assert!(block > 0);
    let n_blocks = n.div_ceil(block);
    map_indices(n_blocks, |b| {
        let start = b * block;
        f(b, start..(start + block).min(n))
    })
}

/// Number of worker threads available to the helpers.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_range_in_order() {
        let out = map_blocks(10, 4, |b, r| (b, r.start, r.end));
        assert_eq!(out, vec![(0, 0, 4), (1, 4, 8), (2, 8, 10)]);
    }

    #[test]
    fn map_preserves_order() {
        let out = map_indices(100, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
    }
}
