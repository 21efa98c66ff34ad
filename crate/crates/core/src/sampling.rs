//! Seeded, reproducible sampling. Every batch of work draws from its own
//! ChaCha stream derived from `(seed, batch index)`, so results do not depend
//! on how batches are scheduled across threads.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::group::GroupElement;
use crate::measure::FinMeasure;
use crate::rational::to_f64;

pub const DEFAULT_BATCH_SIZE: usize = 10_000;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

enum Thresholds {
    /// Cumulative integer numerators over a common denominator: exact sampling.
    Exact { cumulative: Vec<u64>, total: u64 },
    Float(Vec<f64>),
}

/// Draws atoms of a probability measure.
pub struct MeasureSampler {
    atoms: Vec<GroupElement>,
    thresholds: Thresholds,
}

impl MeasureSampler {
    pub fn new(mu: &FinMeasure) -> Self {
        let sorted = mu.sorted_atoms();
        let atoms: Vec<GroupElement> = sorted.iter().map(|(g, _)| (*g).clone()).collect();
        let lcm = sorted.iter().fold(BigInt::one(), |acc, (_, w)| acc.lcm(w.denom()));
        let exact = (|| {
            let total = lcm.to_u64()?;
            let mut acc = 0u64;
            let mut cumulative = Vec::with_capacity(atoms.len());
            for (_, w) in &sorted {
                let k = (w.numer() * (&lcm / w.denom())).to_u64()?;
                acc = acc.checked_add(k)?;
                cumulative.push(acc);
            }
            debug_assert_eq!(acc, total);
            Some(Thresholds::Exact { cumulative, total: acc })
        })();
        let thresholds = exact.unwrap_or_else(|| {
            let mut acc = 0.0;
            Thresholds::Float(
                sorted
                    .iter()
                    .map(|(_, w)| {
                        acc += to_f64(w);
                        acc
                    })
                    .collect(),
            )
        });
        MeasureSampler { atoms, thresholds }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.thresholds, Thresholds::Exact { .. })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &GroupElement {
        let idx = match &self.thresholds {
            Thresholds::Exact { cumulative, total } => {
                let u = rng.random_range(0..*total);
                cumulative.partition_point(|&c| c <= u)
            }
            Thresholds::Float(cumulative) => {
                let u = rng.random::<f64>() * cumulative.last().copied().unwrap_or(1.0);
                cumulative.partition_point(|&c| c <= u).min(self.atoms.len() - 1)
            }
        };
        &self.atoms[idx]
    }
}

/// Runs `samples` trials in fixed-size batches in parallel; batch `i` uses
/// stream `i`. Per-batch outputs are returned in batch order.
pub fn run_batched<T, F>(seed: u64, samples: usize, batch_size: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    let batch_size = batch_size.max(1);
    let batches = samples.div_ceil(batch_size);
    (0..batches)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let count = batch_size.min(samples - i * batch_size);
            f(&mut rng, count)
        })
        .collect()
}

/// Mean and standard error (sample standard deviation over `√n`).
pub fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
