//! Thread-count control for the rayon-backed parallel paths.

/// Environment variable capping worker threads for CLI runs.
pub const THREADS_ENV: &str = "QLAN_BENCH_THREADS";

/// Reads the thread cap from the environment. Unset, empty, zero or
/// unparsable values mean "no cap".
pub fn thread_cap_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` inside a rayon pool limited to `threads` workers, or on the
/// global pool when `threads` is `None`.
///
/// Results never depend on the thread count: every parallel path in this
/// crate merges in a fixed order.
pub fn with_thread_cap<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
