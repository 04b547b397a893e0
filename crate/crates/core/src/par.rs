//! Data-parallel helpers with a sequential fallback.
//!
//! Every hot loop in the crate goes through these functions. With the
//! `parallel` feature they dispatch to rayon when the caller asks for
//! [`Exec::Parallel`]; without the feature, or with [`Exec::Sequential`],
//! they run as plain iterators. Parallel reductions combine fixed-size
//! blocks in index order, so their results do not depend on the thread
//! count or on scheduling; they may differ from the sequential result in
//! the last bits.

use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution mode for data-parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this mode actually runs on the thread pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// `out[i] = f(i)` for every chunk of `chunk` elements.
pub fn for_each_chunk_mut<T, F>(exec: Exec, out: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Collects `f(i)` for `i in 0..n`, preserving order.
pub fn map_collect<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Block size of the parallel reductions.
#[cfg(feature = "parallel")]
const BLOCK: usize = 1024;

/// Sum of `f(i)` over `i in 0..n`.
pub fn sum<F>(exec: Exec, n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        let blocks: Vec<f64> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(n)).map(&f).sum())
            .collect();
        return blocks.iter().sum();
    }
    let _ = exec;
    (0..n).map(f).sum()
}

/// Element-wise sum of fixed-size arrays produced by `f(i)`.
pub fn sum_arrays<const K: usize, F>(exec: Exec, n: usize, f: F) -> [f64; K]
where
    F: Fn(usize) -> [f64; K] + Sync + Send,
{
    fn add<const K: usize>(mut a: [f64; K], b: [f64; K]) -> [f64; K] {
        for (x, y) in a.iter_mut().zip(b) {
            *x += y;
        }
        a
    }
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        let blocks: Vec<[f64; K]> = (0..n.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| (b * BLOCK..((b + 1) * BLOCK).min(n)).map(&f).fold([0.0; K], add::<K>))
            .collect();
        return blocks.into_iter().fold([0.0; K], add::<K>);
    }
    let _ = exec;
    (0..n).map(f).fold([0.0; K], add::<K>)
}

/// Dot product of two equally sized slices.
pub fn dot(exec: Exec, a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && a.len() > 1 << 14 {
        let blocks: Vec<f64> = a
            .par_chunks(4096)
            .zip(b.par_chunks(4096))
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        return blocks.iter().sum();
    }
    let _ = exec;
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `y += alpha * x`.
pub fn axpy(exec: Exec, alpha: f64, x: &[f64], y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && x.len() > 1 << 14 {
        y.par_chunks_mut(4096)
            .zip(x.par_chunks(4096))
            .for_each(|(yc, xc)| {
                for (yi, xi) in yc.iter_mut().zip(xc) {
                    *yi += alpha * xi;
                }
            });
        return;
    }
    let _ = exec;
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
