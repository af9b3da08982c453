use alloc::boxed::Box;
use alloc::vec::Vec;

use super::path::simulate_path;
use super::stats::EnsembleStats;
use crate::model::ScenarioConfig;
use crate::{Error, Result};

/// Trajectories per work unit. Blocks are always merged in index order, so
/// results do not depend on how blocks are scheduled.
pub const BLOCK_SIZE: u64 = 256;

/// Runs independent block jobs, possibly in parallel, returning results in
/// block order.
pub trait BlockExecutor {
    fn map_blocks<T, F>(&self, blocks: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs blocks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BlockExecutor for Sequential {
    fn map_blocks<T, F>(&self, blocks: u64, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..blocks).map(job).collect()
    }
}

struct BlockOutcome<T> {
    value: T,
    failed: usize,
    first_error: Option<Error>,
}

fn block_range(config: &ScenarioConfig, b: u64) -> core::ops::Range<u64> {
    let start = b * BLOCK_SIZE;
    start..(start + BLOCK_SIZE).min(config.ensemble_size)
}

fn collect<T>(
    config: &ScenarioConfig,
    outcomes: Vec<BlockOutcome<T>>,
    mut fold: impl FnMut(T),
) -> Result<()> {
    let mut failed = 0;
    let mut first = None;
    for o in outcomes {
        failed += o.failed;
        if first.is_none() {
            first = o.first_error;
        }
        fold(o.value);
    }
    match first {
        None => Ok(()),
        Some(e) => Err(Error::Ensemble {
            failed,
            total: config.ensemble_size,
            first: Box::new(e),
        }),
    }
}

/// Simulates `config.ensemble_size` trajectories (indices `0..ensemble_size`)
/// and returns merged checkpoint statistics. Any failing trajectory fails the
/// run; the error reports how many failed and the lowest-index failure.
pub fn run_ensemble<E: BlockExecutor>(
    config: &ScenarioConfig,
    executor: &E,
) -> Result<EnsembleStats> {
    let dim = config.dim();
    let blocks = config.ensemble_size.div_ceil(BLOCK_SIZE);
    let outcomes = executor.map_blocks(blocks, |b| {
        let mut stats = EnsembleStats::new(&config.checkpoints, dim);
        let mut failed = 0;
        let mut first_error = None;
        for idx in block_range(config, b) {
            match simulate_path(config, idx) {
                Ok(tr) => stats.push(&tr),
                Err(e) => {
                    failed += 1;
                    first_error.get_or_insert(e);
                }
            }
        }
        BlockOutcome {
            value: stats,
            failed,
            first_error,
        }
    });
    let mut total = EnsembleStats::new(&config.checkpoints, dim);
    collect(config, outcomes, |s| total.merge(&s))?;
    Ok(total)
}

/// Raw checkpoint values of an ensemble, stored checkpoint-major:
/// `values(c, i)` holds coordinate `i` at checkpoint `c` for every
/// trajectory in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSamples {
    checkpoints: Vec<f64>,
    dim: usize,
    n: usize,
    data: Vec<f64>,
}

impl EnsembleSamples {
    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn values(&self, c: usize, i: usize) -> &[f64] {
        let start = (c * self.dim + i) * self.n;
        &self.data[start..start + self.n]
    }

    /// State vector of trajectory `k` at checkpoint `c`.
    pub fn state(&self, c: usize, k: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.values(c, i)[k]).collect()
    }

    /// Statistics accumulated in trajectory order; equal to what
    /// [`run_ensemble`] returns for the same config up to merge rounding.
    pub fn stats(&self) -> EnsembleStats {
        let mut s = EnsembleStats::new(&self.checkpoints, self.dim);
        let mut buf = Vec::with_capacity(self.dim);
        for c in 0..self.checkpoints.len() {
            for k in 0..self.n {
                buf.clear();
                buf.extend((0..self.dim).map(|i| self.values(c, i)[k]));
                s.push_values(c, &buf);
            }
        }
        s
    }
}

/// Like [`run_ensemble`] but keeps every checkpoint value, for statistics
/// that need the full sample (empirical transforms, distribution checks).
pub fn run_ensemble_samples<E: BlockExecutor>(
    config: &ScenarioConfig,
    executor: &E,
) -> Result<EnsembleSamples> {
    let dim = config.dim();
    let ncp = config.checkpoints.len();
    let n = config.ensemble_size as usize;
    let blocks = config.ensemble_size.div_ceil(BLOCK_SIZE);
    let outcomes = executor.map_blocks(blocks, |b| {
        let mut paths = Vec::with_capacity(BLOCK_SIZE as usize);
        let mut failed = 0;
        let mut first_error = None;
        for idx in block_range(config, b) {
            match simulate_path(config, idx) {
                Ok(tr) => paths.push(tr.checkpoint_values),
                Err(e) => {
                    failed += 1;
                    first_error.get_or_insert(e);
                }
            }
        }
        BlockOutcome {
            value: paths,
            failed,
            first_error,
        }
    });
    let mut all = Vec::with_capacity(n);
    collect(config, outcomes, |p| all.extend(p))?;
    let mut data = alloc::vec![0.0; ncp * dim * n];
    for (k, path) in all.iter().enumerate() {
        for (c, state) in path.iter().enumerate() {
            for (i, &x) in state.iter().enumerate() {
                data[(c * dim + i) * n + k] = x;
            }
        }
    }
    Ok(EnsembleSamples {
        checkpoints: config.checkpoints.clone(),
        dim,
        n,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{InitialState, NavigationMatrix, Scheme};
    use crate::simulate::simulate_path;

    fn config(scheme: Scheme, init: &[f64], t: f64, n: u64) -> ScenarioConfig {
        ScenarioConfig::new(
            scheme.canonical_matrix().unwrap(),
            InitialState::new(init.to_vec()).unwrap(),
            t,
            alloc::vec![t / 2.0, t],
            n,
            99,
        )
        .unwrap()
    }

    /// Executor that runs blocks in reverse to exercise order independence.
    struct Reversed;
    impl BlockExecutor for Reversed {
        fn map_blocks<T: Send, F: Fn(u64) -> T + Sync + Send>(
            &self,
            blocks: u64,
            job: F,
        ) -> Vec<T> {
            let mut out: Vec<(u64, T)> = (0..blocks).rev().map(|b| (b, job(b))).collect();
            out.sort_by_key(|p| p.0);
            out.into_iter().map(|p| p.1).collect()
        }
    }

    #[test]
    fn single_trajectory() {
        let cfg = config(Scheme::Hill { gamma: 1.0 }, &[1.0, 3.0], 1.0, 1);
        let s = run_ensemble(&cfg, &Sequential).unwrap();
        let tr = simulate_path(&cfg, 0).unwrap();
        assert_eq!(s.count(), 1);
        for c in 0..2 {
            for i in 0..2 {
                assert_eq!(s.mean(c, i), tr.checkpoint_values[c][i]);
                assert_eq!(s.variance(c, i), 0.0);
            }
            assert_eq!(s.covariance(c, 0, 1), 0.0);
        }
    }

    #[test]
    fn schedule_independent() {
        let cfg = config(Scheme::Ehrenfest { gamma: 1.0 }, &[3.0, 5.0], 1.0, 1000);
        let a = run_ensemble(&cfg, &Sequential).unwrap();
        let b = run_ensemble(&cfg, &Reversed).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.count(), 1000);
    }

    #[test]
    fn samples_agree_with_stats() {
        let cfg = config(
            Scheme::DiagonalConstant {
                alphas: alloc::vec![1.0],
            },
            &[1.0],
            1.0,
            700,
        );
        let s = run_ensemble(&cfg, &Sequential).unwrap();
        let samples = run_ensemble_samples(&cfg, &Sequential).unwrap();
        let t = samples.stats();
        assert_eq!(samples.len(), 700);
        for c in 0..2 {
            assert!((s.mean(c, 0) - t.mean(c, 0)).abs() < 1e-12 * s.mean(c, 0));
            assert!((s.variance(c, 0) - t.variance(c, 0)).abs() < 1e-10 * s.variance(c, 0));
        }
        let tr = simulate_path(&cfg, 513).unwrap();
        assert_eq!(samples.state(1, 513), tr.checkpoint_values[1]);
    }

    #[test]
    fn failures_are_aggregated() {
        let m = NavigationMatrix::from_constants(&[[-1.0, 0.0], [0.0, -1.0]]).unwrap();
        let cfg = ScenarioConfig::new(
            m,
            InitialState::new(alloc::vec![0.5, 0.5]).unwrap(),
            10.0,
            alloc::vec![10.0],
            300,
            1,
        )
        .unwrap();
        match run_ensemble(&cfg, &Sequential).unwrap_err() {
            Error::Ensemble {
                failed,
                total,
                first,
            } => {
                assert_eq!(total, 300);
                assert_eq!(failed, 300);
                assert!(matches!(*first, Error::Trajectory { index: 0, .. }));
            }
            e => panic!("{e:?}"),
        }
    }
}
