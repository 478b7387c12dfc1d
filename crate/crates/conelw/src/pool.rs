//! Thread-pool selection. `CONELW_THREADS=n` pins the rayon pool used for
//! the residual scan to n threads; unset, zero, or unparseable values fall
//! back to rayon's global default. Results are identical either way — the
//! scan collects by index — so the knob only trades wall time.

use std::sync::OnceLock;

use rayon::ThreadPool;

static POOL: OnceLock<Option<ThreadPool>> = OnceLock::new();

fn pool() -> &'static Option<ThreadPool> {
    POOL.get_or_init(|| {
        let spec = std::env::var("CONELW_THREADS").ok()?;
        let n: usize = spec.trim().parse().ok()?;
        if n == 0 {
            return None;
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()
    })
}

/// Run `op` inside the configured pool (or inline on the default pool).
pub fn install<R: Send>(op: impl FnOnce() -> R + Send) -> R {
    match pool() {
        Some(p) => p.install(op),
        None => op(),
    }
}
