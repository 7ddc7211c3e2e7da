//! Deterministic parallel sample generation.
//!
//! A batch of `total` draws is split across `substreams` independent random
//! streams; substream s gets stream id `base_stream + s` and a contiguous
//! share of the batch. The merged batch is ordered by (stream, within-stream
//! index), so the result is a pure function of (seed, base_stream,
//! substreams, total) no matter how many threads execute it.

use rayon::prelude::*;

use crate::rng::RngStream;

/// Number of draws substream `s` contributes.
pub fn share(total: usize, substreams: u32, s: u32) -> usize {
    let base = total / substreams as usize;
    let rem = total % substreams as usize;
    base + usize::from((s as usize) < rem)
}

/// Generate `total` values with `draw`, split deterministically over
/// substreams.
pub fn parallel_values<D>(
    total: usize,
    substreams: u32,
    seed: u64,
    base_stream: u64,
    draw: D,
) -> Vec<f64>
where
    D: Fn(&mut RngStream) -> f64 + Sync,
{
    assert!(substreams >= 1, "need at least one substream");
    let chunks: Vec<Vec<f64>> = (0..substreams)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::new(seed, base_stream + s as u64);
            let count = share(total, substreams, s);
            (0..count).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    let mut out = Vec::with_capacity(total);
    for c in chunks {
        out.extend_from_slice(&c);
    }
    out
}

/// Fold each substream with `fold` and combine the per-stream results in
/// stream order. Used for tail counting where materializing samples is waste.
pub fn parallel_fold<T, F>(
    total: usize,
    substreams: u32,
    seed: u64,
    base_stream: u64,
    fold: F,
) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream, usize) -> T + Sync,
{
    assert!(substreams >= 1, "need at least one substream");
    (0..substreams)
        .into_par_iter()
        .map(|s| {
            let mut rng = RngStream::new(seed, base_stream + s as u64);
            fold(&mut rng, share(total, substreams, s))
        })
        .collect()
}
