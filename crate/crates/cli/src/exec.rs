use excitonwit_core::protocol::Executor;
use rayon::prelude::*;

use crate::error::CliError;

/// Runs tasks on a dedicated rayon pool. Results come back in index order, so
/// the output does not depend on the thread count.
pub struct Parallel {
    pool: rayon::ThreadPool,
}

impl Parallel {
    /// `threads = None` uses every core.
    pub fn new(threads: Option<usize>) -> Result<Parallel, CliError> {
        if threads == Some(0) {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        Ok(Parallel { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Parallel {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let f = &f;
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
