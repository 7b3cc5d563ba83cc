//! Index-addressed parallel map. Results land in slot order, so the output
//! is identical for any worker count.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
pub(crate) fn map_range<T, S>(
    count: usize,
    workers: Option<usize>,
    init: impl Fn() -> S + Send + Sync,
    f: impl Fn(&mut S, usize) -> T + Send + Sync,
) -> Vec<T>
where
    T: Send,
{
    use rayon::prelude::*;

    let run = || (0..count).into_par_iter().map_init(&init, |s, i| f(s, i)).collect();
    match workers {
        Some(0) | Some(1) => sequential(count, &init, &f),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(run),
            Err(_) => sequential(count, &init, &f),
        },
        None => run(),
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<T, S>(
    count: usize,
    _workers: Option<usize>,
    init: impl Fn() -> S,
    f: impl Fn(&mut S, usize) -> T,
) -> Vec<T> {
    sequential(count, &init, &f)
}

fn sequential<T, S>(count: usize, init: &impl Fn() -> S, f: &impl Fn(&mut S, usize) -> T) -> Vec<T> {
    let mut state = init();
    (0..count).map(|i| f(&mut state, i)).collect()
}
