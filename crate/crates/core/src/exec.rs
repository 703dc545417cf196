//! Index-keyed data parallelism.
//!
//! All Monte Carlo loops in the crate go through [`map_indexed`], which
//! returns results ordered by index. Reductions are then done sequentially
//! (see [`crate::stats::pairwise_sum`]) so outputs do not depend on the
//! number of worker threads. With the `parallel` feature disabled the same
//! entry points run on the calling thread.

/// Evaluate `f(0), …, f(count - 1)` and collect the results in index order.
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        parallel::map_indexed(count, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::map_indexed(count, f)
    }
}

/// Run `op` with at most `threads` workers. Sequential builds ignore the cap.
pub fn with_threads<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
            Ok(pool) => pool.install(op),
            Err(_) => op(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        op()
    }
}

/// Size the global pool from `DEVROYE_LAB_THREADS`, if set. Returns the cap applied.
pub fn init_from_env() -> Option<usize> {
    let threads = std::env::var("DEVROYE_LAB_THREADS").ok()?.trim().parse::<usize>().ok()?;
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build_global();
    }
    Some(threads)
}

pub mod sequential {
    pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
    where
        F: Fn(usize) -> T,
    {
        (0..count).map(f).collect()
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..count).into_par_iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_are_index_ordered() {
        let out = map_indexed(1000, |i| i * i);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * i));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let one = with_threads(1, || map_indexed(5000, f));
        let many = with_threads(8, || map_indexed(5000, f));
        assert_eq!(one, many);
    }
}
