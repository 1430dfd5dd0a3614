//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (on by default) the hot loops (multistart restarts,
//! reference-grid scans, per-line projections) run on the rayon pool. Without it,
//! or when a caller asks for [`Execution::Sequential`], they run in order on the
//! calling thread. Results are identical either way: every helper returns values in
//! index order and reductions happen sequentially afterwards.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `(0..n).map(f).collect()`, possibly in parallel.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to consecutive chunks of `data`, passing the chunk index.
    pub fn for_each_chunk_mut<T, F>(self, data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    /// Like [`Execution::for_each_chunk_mut`] over two equally long slices in lockstep.
    pub fn for_each_chunk_pair_mut<T, U, F>(self, a: &mut [T], b: &mut [U], chunk: usize, f: F)
    where
        T: Send,
        U: Send,
        F: Fn(&mut [T], &mut [U]) + Sync + Send,
    {
        assert_eq!(a.len(), b.len());
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            a.par_chunks_mut(chunk)
                .zip(b.par_chunks_mut(chunk))
                .for_each(|(x, y)| f(x, y));
            return;
        }
        a.chunks_mut(chunk)
            .zip(b.chunks_mut(chunk))
            .for_each(|(x, y)| f(x, y));
    }
}
