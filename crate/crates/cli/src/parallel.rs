use polya_core::simulate::BlockExecutor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// Runs ensemble blocks on a dedicated rayon pool. Results come back in
/// block order, so the merged statistics do not depend on the pool size.
#[derive(Debug)]
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    pub fn new(workers: usize) -> Result<Self, ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()?;
        Ok(RayonExecutor { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl BlockExecutor for RayonExecutor {
    fn map_blocks<T, F>(&self, blocks: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..blocks).into_par_iter().map(job).collect())
    }
}
