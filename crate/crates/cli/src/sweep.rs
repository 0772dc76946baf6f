//! Parallel evaluation over `(B, l)` grids with deterministic ordering.

use crate::{UsageError, THREADS_ENV};
use anyhow::Context;
use rayon::prelude::*;

/// Worker count: available parallelism, capped by `QFI_BANDLIMIT_THREADS`.
pub fn worker_count() -> Result<usize, UsageError> {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(avail),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n.min(avail)),
            _ => Err(UsageError::field(
                THREADS_ENV,
                format!("expected a positive integer, got `{s}`"),
            )),
        },
    }
}

pub fn pool() -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()?)
}

/// Cartesian grid ordered by `l`, then `B`.
pub fn grid(bandwidths: &[f64], distances: &[f64]) -> Vec<(f64, f64)> {
    let mut g: Vec<(f64, f64)> = distances
        .iter()
        .flat_map(|&l| bandwidths.iter().map(move |&b| (b, l)))
        .collect();
    g.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    g
}

/// Evaluates `f` at every point on `pool`, labelling failures with
/// `describe`. Results keep input order whatever the completion order.
pub fn evaluate_points<P, T, D, F>(
    pool: &rayon::ThreadPool,
    points: &[P],
    describe: D,
    f: F,
) -> anyhow::Result<Vec<T>>
where
    P: Sync,
    T: Send,
    D: Fn(&P) -> String + Sync,
    F: Fn(&P) -> anyhow::Result<T> + Sync,
{
    pool.install(|| {
        points
            .par_iter()
            .map(|p| f(p).with_context(|| describe(p)))
            .collect()
    })
}

/// [`evaluate_points`] over `(B, l)` pairs.
pub fn evaluate<T, F>(
    pool: &rayon::ThreadPool,
    points: &[(f64, f64)],
    f: F,
) -> anyhow::Result<Vec<T>>
where
    T: Send,
    F: Fn(f64, f64) -> anyhow::Result<T> + Sync,
{
    evaluate_points(
        pool,
        points,
        |&(b, l)| format!("at B = {b}, l = {l}"),
        |&(b, l)| f(b, l),
    )
}
