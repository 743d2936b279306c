//! Column-indexed map helpers.
//!
//! All heavy per-column work (measurement synthesis, coefficient solves,
//! gradient contributions, Monte-Carlo replicates) goes through these maps.
//! With the `parallel` feature the map runs on the rayon pool; without it,
//! or via the `*_seq` twins, it runs on the calling thread. Results are
//! always collected in index order, and any cross-column reduction in the
//! crate folds that ordered `Vec` sequentially, so parallel and sequential
//! execution produce bitwise-identical numbers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..len`, collecting in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..len).into_par_iter().map(f).collect()
}

/// Map `f` over `0..len`, collecting in index order.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T: Send>(len: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    map_indexed_seq(len, f)
}

/// Sequential twin of [`map_indexed`], always compiled; used by the
/// benchmark suite as the single-thread baseline.
pub fn map_indexed_seq<T>(len: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..len).map(f).collect()
}

/// Fallible map; returns the first error in index order.
#[cfg(feature = "parallel")]
pub fn try_map_indexed<T: Send, E: Send>(
    len: usize,
    f: impl Fn(usize) -> Result<T, E> + Sync + Send,
) -> Result<Vec<T>, E> {
    // `collect` into Result short-circuits, but which error wins a race is
    // unspecified; map first, then scan in order so diagnostics (e.g. the
    // failing column index) are deterministic.
    let items: Vec<Result<T, E>> = (0..len).into_par_iter().map(f).collect();
    items.into_iter().collect()
}

/// Fallible map; returns the first error in index order.
#[cfg(not(feature = "parallel"))]
pub fn try_map_indexed<T: Send, E: Send>(
    len: usize,
    f: impl Fn(usize) -> Result<T, E> + Sync + Send,
) -> Result<Vec<T>, E> {
    try_map_indexed_seq(len, f)
}

/// Sequential twin of [`try_map_indexed`].
pub fn try_map_indexed_seq<T, E>(
    len: usize,
    f: impl Fn(usize) -> Result<T, E>,
) -> Result<Vec<T>, E> {
    (0..len).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let v = map_indexed(100, |i| i * i);
        assert_eq!(v, map_indexed_seq(100, |i| i * i));
        assert_eq!(v[7], 49);
    }

    #[test]
    fn first_error_in_index_order_wins() {
        let r = try_map_indexed(10, |i| if i >= 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
        let r = try_map_indexed_seq(10, |i| if i >= 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}
