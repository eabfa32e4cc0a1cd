//! Parallel map over fixed-size chunks followed by an ordered fold.
//!
//! Chunk boundaries depend only on the problem size, never on the worker
//! count, so floating-point totals are bit-identical for any thread pool.

use rayon::prelude::*;
use std::ops::Range;

/// Default number of items per chunk.
pub const CHUNK: u64 = 1 << 14;

/// Splits `0..len` into chunks of `chunk` items, maps each chunk in
/// parallel, and folds the per-chunk results left to right.
pub fn chunked<T, M, C>(len: u64, chunk: u64, identity: T, map: M, combine: C) -> T
where
    T: Send,
    M: Fn(Range<u64>) -> T + Sync,
    C: Fn(T, T) -> T,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let parts: Vec<T> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            map(lo..(lo + chunk).min(len))
        })
        .collect();
    parts.into_iter().fold(identity, combine)
}

/// Like [`chunked`] but short-circuits on the first error in chunk order.
pub fn try_chunked<T, E, M, C>(
    len: u64,
    chunk: u64,
    identity: T,
    map: M,
    combine: C,
) -> Result<T, E>
where
    T: Send,
    E: Send,
    M: Fn(Range<u64>) -> Result<T, E> + Sync,
    C: Fn(T, T) -> T,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let parts: Vec<Result<T, E>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            map(lo..(lo + chunk).min(len))
        })
        .collect();
    let mut acc = identity;
    for p in parts {
        acc = combine(acc, p?);
    }
    Ok(acc)
}
