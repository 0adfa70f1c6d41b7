//! Data-parallel building blocks.
//!
//! With the `parallel` feature (default) these dispatch to the rayon pool that
//! is current at the call site; without it they are plain sequential loops.
//! Reductions split their input into fixed-size chunks and combine the
//! partial sums pairwise in index order, so the result is bit-identical for
//! every pool size, including the sequential build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of elements summed sequentially before partials are combined.
pub const CHUNK: usize = 4096;

/// Pairwise sum of a slice of partials. Order-fixed.
fn pairwise(parts: &[f64]) -> f64 {
    match parts.len() {
        0 => 0.0,
        1 => parts[0],
        2 => parts[0] + parts[1],
        len => {
            let mid = len / 2;
            pairwise(&parts[..mid]) + pairwise(&parts[mid..])
        }
    }
}

fn chunk_sum<F: Fn(usize) -> f64>(start: usize, end: usize, f: &F) -> f64 {
    let mut acc = 0.0;
    for i in start..end {
        acc += f(i);
    }
    acc
}

/// Deterministic `sum_{i < len} f(i)`.
pub fn sum_by<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let parts = map_range(chunks, |c| {
        let start = c * CHUNK;
        chunk_sum(start, (start + CHUNK).min(len), &f)
    });
    pairwise(&parts)
}

/// `(0..len).map(f).collect()`, in parallel when enabled. Output order is the
/// index order regardless of scheduling.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Maps a slice element-wise.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
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

/// Runs `f(chunk_index, chunk)` on consecutive mutable chunks of `data`.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(chunk_len)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
    }
}

/// Fills `out[i] = f(i)`.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    for_each_chunk_mut(out, CHUNK, |c, chunk| {
        let base = c * CHUNK;
        for (k, v) in chunk.iter_mut().enumerate() {
            *v = f(base + k);
        }
    });
}

/// Runs `f` on a worker pool of the given size (0 = rayon default). In the
/// sequential build the size is ignored.
pub fn with_workers<R, F>(workers: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if workers == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        f()
    }
}

/// Number of worker threads available to the data-parallel helpers.
pub fn current_workers() -> usize {
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
    fn sum_is_independent_of_pool_size() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let len = 3 * CHUNK + 17;
        let one = with_workers(1, || sum_by(len, f));
        let four = with_workers(4, || sum_by(len, f));
        assert_eq!(one.to_bits(), four.to_bits());
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(sum_by(0, |_| 1.0), 0.0);
    }

    #[test]
    fn fill_indexed_covers_every_slot() {
        let mut v = vec![0usize; 2 * CHUNK + 5];
        fill_indexed(&mut v, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
