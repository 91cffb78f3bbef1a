//! Data-parallel map over index ranges.
//!
//! Results are always returned in index order. With the `parallel` feature
//! disabled, or when the caller asks for sequential execution, the map runs
//! on the current thread.

/// Whether parallel execution is compiled in.
pub const PARALLEL_AVAILABLE: bool = cfg!(feature = "parallel");

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indices<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = parallel;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_both_modes() {
        let seq = map_indices(1000, false, |i| i * i);
        let par = map_indices(1000, true, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq[31], 961);
    }
}
