//! Monte Carlo harness: seeded substreams, worker-count-invariant
//! partitioning, statistics, scenario configuration and result emitters.
//!
//! Rounds are cut into fixed-size blocks. Block `i` always draws from the
//! ChaCha stream `(seed, i)`, and block results are folded in block order,
//! so the number of worker threads never changes a single counter.

mod config;
mod report;
mod run;
mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{
    BrightnessMode, DetectorSetup, Mode, OutputFormat, Protocol, RawConfig, ScenarioConfig,
    SweepParam, SweepSpec,
};
pub use report::{write_csv, write_json, CSV_HEADER};
pub use run::{run, sweep, Extra, RunOutcome, RunRecord};
pub use stats::{
    agreement, binomial_sigma, qber_estimate, wilson_interval, Agreement, AttackStats,
    ControlCounter, Diagnostics, QberEstimate, Z95,
};

pub type SimRng = ChaCha8Rng;

/// Rounds (or frames, or pairs) per partition block.
pub const BLOCK_ROUNDS: u64 = 4096;

/// Independent random stream for partition `partition` of a run seeded
/// with `seed`.
pub fn derive_stream(seed: u64, partition: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(partition);
    rng
}

/// Associative accumulation of per-block results.
pub trait Merge {
    fn merge(&mut self, other: Self);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    pub seed: u64,
    pub workers: usize,
}

impl RunSettings {
    pub fn new(seed: u64, workers: usize) -> Self {
        Self {
            seed,
            workers: workers.max(1),
        }
    }

    /// Seeded run on every available core.
    pub fn seeded(seed: u64) -> Self {
        let workers = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1);
        Self::new(seed, workers)
    }
}

/// Runs `rounds` trials through `block`, which receives a block's stream and
/// its trial count.
pub fn run_partitioned<S, F>(rounds: u64, settings: &RunSettings, block: F) -> S
where
    S: Merge + Default + Send,
    F: Fn(&mut SimRng, u64) -> S + Sync,
{
    let blocks = rounds.div_ceil(BLOCK_ROUNDS);
    let seed = settings.seed;
    let run_block = |i: u64| {
        let n = BLOCK_ROUNDS.min(rounds - i * BLOCK_ROUNDS);
        block(&mut derive_stream(seed, i), n)
    };
    let results: Vec<S> = if settings.workers <= 1 || blocks <= 1 {
        (0..blocks).map(run_block).collect()
    } else {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(settings.workers)
            .build()
        {
            Ok(pool) => pool.install(|| (0..blocks).into_par_iter().map(run_block).collect()),
            Err(_) => (0..blocks).map(run_block).collect(),
        }
    };
    let mut acc = S::default();
    for r in results {
        acc.merge(r);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[derive(Default, Debug, PartialEq)]
    struct Tally {
        n: u64,
        hits: u64,
        xor: u64,
    }

    impl Merge for Tally {
        fn merge(&mut self, o: Self) {
            self.n += o.n;
            self.hits += o.hits;
            self.xor ^= o.xor;
        }
    }

    fn tally(rounds: u64, workers: usize) -> Tally {
        run_partitioned(rounds, &RunSettings::new(42, workers), |rng, n| {
            let mut t = Tally::default();
            for _ in 0..n {
                let v: u64 = rng.random();
                t.n += 1;
                t.hits += u64::from(v % 3 == 0);
                t.xor ^= v;
            }
            t
        })
    }

    #[test]
    fn same_seed_and_partition_reproduce() {
        let a: Vec<u64> = (0..8).map(|_| 0).scan(derive_stream(42, 0), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0).scan(derive_stream(42, 0), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..8).map(|_| 0).scan(derive_stream(42, 1), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn aggregate_is_invariant_to_worker_count() {
        let one = tally(1_000_000, 1);
        let eight = tally(1_000_000, 8);
        assert_eq!(one.n, 1_000_000);
        assert_eq!(one, eight);
    }

    #[test]
    fn zero_rounds_is_empty() {
        assert_eq!(tally(0, 4), Tally::default());
    }
}
