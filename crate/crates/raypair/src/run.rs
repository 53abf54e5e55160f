//! Timed build and compute phases. Compute can fan out over a rayon pool;
//! targets are independent and results are written by index, so the output
//! does not depend on the thread count.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use rayon::ThreadPool;
use raypair_core::{Accumulators, Engine, Kernel, Method, ProblemSpec};

use crate::Result;

/// One build plus one compute.
#[derive(Debug, Clone)]
pub struct NeighborResult {
    pub accumulators: Accumulators,
    pub build_time: Duration,
    pub compute_time: Duration,
    /// Accepted interactions summed over targets; every unordered pair is
    /// seen from both ends.
    pub pair_visits: u64,
}

/// Mean and median of a set of durations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    pub mean: Duration,
    pub median: Duration,
}

impl Timing {
    /// Panics on an empty slice.
    pub fn from_samples(samples: &[Duration]) -> Self {
        assert!(!samples.is_empty(), "no timing samples");
        let mut sorted = samples.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            (sorted[n / 2 - 1] + sorted[n / 2]) / 2
        };
        let total: Duration = sorted.iter().sum();
        Self {
            mean: total / n as u32,
            median,
        }
    }
}

pub fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs engines on a fixed thread count. One thread means the plain serial
/// loop with no pool at all.
pub struct Runner {
    pool: Option<ThreadPool>,
}

impl Runner {
    /// `threads == 0` picks rayon's default (one per logical CPU).
    pub fn new(threads: usize) -> Result<Self> {
        let pool = if threads == 1 {
            None
        } else {
            Some(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
        };
        Ok(Self { pool })
    }

    pub fn serial() -> Self {
        Self { pool: None }
    }

    pub fn threads(&self) -> usize {
        self.pool.as_ref().map_or(1, ThreadPool::current_num_threads)
    }

    pub fn compute(&self, engine: &Engine, kernel: Kernel) -> Accumulators {
        match &self.pool {
            None => engine.compute(kernel),
            Some(pool) => {
                let values = pool.install(|| {
                    (0..engine.len())
                        .into_par_iter()
                        .map(|t| engine.compute_target(kernel, t))
                        .collect()
                });
                engine.assemble(kernel, values)
            }
        }
    }

    pub fn run(&self, method: Method, spec: &ProblemSpec, kernel: Kernel) -> Result<NeighborResult> {
        let start = Instant::now();
        let engine = Engine::build(method, spec)?;
        let build_time = start.elapsed();
        let start = Instant::now();
        let accumulators = self.compute(&engine, kernel);
        let compute_time = start.elapsed();
        let pair_visits = accumulators.pair_visits();
        Ok(NeighborResult {
            accumulators,
            build_time,
            compute_time,
            pair_visits,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use raypair_core::gen::{gen_uniform, UniformConfig};

    #[test]
    fn timing_statistics() {
        let ms = Duration::from_millis;
        let t = Timing::from_samples(&[ms(5), ms(1), ms(3)]);
        assert_eq!(t.median, ms(3));
        assert_eq!(t.mean, ms(3));
        let t = Timing::from_samples(&[ms(1), ms(2), ms(3), ms(10)]);
        assert_eq!(t.median, Duration::from_micros(2500));
        assert_eq!(t.mean, ms(4));
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = gen_uniform(&UniformConfig { beta: 4, p: 4, seed: 3 }).unwrap().to_spec();
        for kernel in [Kernel::Count, Kernel::Record, Kernel::Potential] {
            for method in [Method::Sphere, Method::Grid, Method::CustomAabb] {
                let serial = Runner::serial().run(method, &spec, kernel).unwrap();
                let parallel = Runner::new(3).unwrap().run(method, &spec, kernel).unwrap();
                assert_eq!(serial.accumulators, parallel.accumulators, "{method} {kernel}");
                assert_eq!(serial.pair_visits, parallel.pair_visits);
            }
        }
    }

    #[test]
    fn thread_counts() {
        assert_eq!(Runner::new(1).unwrap().threads(), 1);
        assert_eq!(Runner::new(2).unwrap().threads(), 2);
        assert!(Runner::new(0).unwrap().threads() >= 1);
    }
}
