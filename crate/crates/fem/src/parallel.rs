//! Thread pool for cell-parallel work, capped by `ELASTOCAP_THREADS`.

use std::sync::OnceLock;

pub const THREADS_ENV: &str = "ELASTOCAP_THREADS";

static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new().num_threads(thread_count()).build().expect("thread pool")
    })
}
