//! Switches between rayon and plain iteration depending on the `parallel`
//! feature. Results always come back in index order, so callers behave
//! identically either way.

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
pub(crate) fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
