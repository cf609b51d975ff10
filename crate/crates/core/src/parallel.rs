//! Worker pool for per-path work with results in path-index order.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "MAPFLUX_WORKERS";

/// Worker count from `MAPFLUX_WORKERS`, falling back to the available parallelism.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Run `f(i)` for `i in 0..n` on `workers` threads and collect the results in
/// index order. The first error (lowest index) wins.
pub fn map_indexed<R, F>(n: u64, workers: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync + Send,
{
    if workers <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::validation(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        let out: Vec<Result<R>> = (0..n).into_par_iter().map(&f).collect();
        out.into_iter().collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_independent_of_workers() {
        let one = map_indexed(100, 1, |i| Ok(i * i)).unwrap();
        let four = map_indexed(100, 4, |i| Ok(i * i)).unwrap();
        assert_eq!(one, four);
        assert_eq!(one[7], 49);
    }

    #[test]
    fn first_error_propagates() {
        let r = map_indexed(10, 3, |i| {
            if i == 4 {
                Err(Error::validation("four"))
            } else {
                Ok(i)
            }
        });
        assert!(r.is_err());
    }
}
