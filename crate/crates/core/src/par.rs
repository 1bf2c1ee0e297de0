//! Data-parallel helpers. With the `parallel` feature these run on the
//! rayon global pool; without it they fall back to plain iterators. Both
//! paths produce identical results: `fold_merge` requires `merge` to be
//! associative and commutative, and `map` preserves input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Order-preserving map over a slice.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
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

/// Folds shards of `items` into accumulators and merges them.
pub fn fold_merge<T, A, I, F, M>(items: &[T], init: I, fold: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(A, &T) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().fold(&init, &fold).reduce(&init, &merge)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = &merge;
        items.iter().fold(init(), fold)
    }
}

/// Whether this build uses the rayon path.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
