//! Data-parallel helpers. With the `parallel` feature off every helper runs
//! sequentially, which is also what single-thread benchmarks compare against.
//!
//! None of these helpers reduce floating-point values across threads, so the
//! results are bit-identical between the parallel and sequential builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for grid-point loops.
pub const CHUNK: usize = 256;

/// Calls `f(offset, chunk)` for every `CHUNK`-sized piece of `data`.
pub fn for_each_chunk<T, F>(data: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if data.len() > CHUNK {
            data.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(i, c)| f(i * CHUNK, c));
            return;
        }
    }
    data.chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(i, c)| f(i * CHUNK, c));
}

/// Order-preserving map over a slice.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
