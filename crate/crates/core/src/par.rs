//! Data-parallel helpers that fall back to sequential loops when the
//! `parallel` feature is disabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub(crate) fn map_range<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
