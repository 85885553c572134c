//! Data-parallel helpers. With the `parallel` feature these run on the rayon
//! pool; without it they are plain sequential loops. Results never depend on
//! the number of workers: each output element is computed independently and
//! reductions happen in index order.

/// Environment variable that caps the worker count.
pub const THREADS_ENV: &str = "BIROT_THREADS";

/// Maps `f` over `items`, giving each worker its own scratch state from `init`.
#[cfg(feature = "parallel")]
pub fn map_init<T, R, S, I, F>(items: &[T], init: I, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map_init(init, f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_init<T, R, S, I, F>(items: &[T], init: I, f: F) -> Vec<R>
where
    I: Fn() -> S,
    F: Fn(&mut S, &T) -> R,
{
    let mut state = init();
    items.iter().map(|t| f(&mut state, t)).collect()
}

/// `out[i] = f(i)` for every index.
#[cfg(feature = "parallel")]
pub fn fill_indexed<R, F>(out: &mut [R], f: F)
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

#[cfg(not(feature = "parallel"))]
pub fn fill_indexed<R, F>(out: &mut [R], f: F)
where
    F: Fn(usize) -> R,
{
    out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
}

/// Sizes the global pool from `BIROT_THREADS` if set. Returns the worker
/// count in effect. Safe to call more than once.
pub fn configure_threads() -> usize {
    let requested = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    configure(requested)
}

#[cfg(feature = "parallel")]
fn configure(requested: Option<usize>) -> usize {
    if let Some(n) = requested {
        // fails only if the pool already exists
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn configure(_requested: Option<usize>) -> usize {
    1
}
