//! Execution policy for the data-parallel loops (batch density evaluation,
//! sampling blocks, verification sweeps).
//!
//! With the `parallel` feature (on by default) `Execution::Parallel` fans work
//! out over the rayon pool. Without it, both variants run sequentially. Either
//! way results come back in index order, so output never depends on the
//! policy.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    /// Evaluates `f(0), ..., f(n-1)` and returns the results in order.
    pub fn map_range<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Maps `f` over a slice, preserving order.
    pub fn map_slice<'a, S, T, F>(self, items: &'a [S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&'a S) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Sums `f(i)` over `0..n` in fixed-size chunks so the floating-point
    /// result is identical for both policies.
    pub fn sum_range<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        const CHUNK: usize = 4096;
        let chunks = n.div_ceil(CHUNK);
        self.map_range(chunks, |c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum::<f64>())
            .into_iter()
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = Execution::Sequential.map_range(1000, f);
        let b = Execution::Parallel.map_range(1000, f);
        assert_eq!(a, b);
        let s1 = Execution::Sequential.sum_range(10_000, f);
        let s2 = Execution::Parallel.sum_range(10_000, f);
        assert_eq!(s1.to_bits(), s2.to_bits());
        let v: Vec<u32> = (0..50).collect();
        assert_eq!(
            Execution::Sequential.map_slice(&v, |x| x * 2),
            Execution::Parallel.map_slice(&v, |x| x * 2)
        );
    }
}
