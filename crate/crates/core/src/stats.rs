//! Monte Carlo bookkeeping: deterministic parallel trials and estimates.

use serde::{Deserialize, Serialize};

use crate::group::FiniteAbelianGroup;
use crate::rng::SeedSpec;

/// Trials are reduced in fixed-size chunks, in order, so the floating
/// point result does not depend on how many threads ran them.
const CHUNK: u64 = 1024;

/// Running sums over one chunk of trials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Tally {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Tally) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Sample standard deviation over `sqrt(count)`.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Evaluate `f(trial)` for `trial in 0..trials`, returning the per-trial
/// values in order.
pub fn map_trials<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

/// Sum `f(trial)` over `trial in 0..trials` into a tally whose value is
/// independent of scheduling.
pub fn tally_trials<F>(trials: u64, f: F) -> Tally
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    let partial = map_trials(chunks, |c| {
        let mut t = Tally::default();
        for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            t.push(f(i));
        }
        t
    });
    let mut total = Tally::default();
    for p in &partial {
        total.merge(p);
    }
    total
}

/// Like [`tally_trials`] for `width` statistics per trial; the first error
/// in trial order is returned.
pub fn try_tally_trials_multi<E, F>(trials: u64, width: usize, f: F) -> Result<Vec<Tally>, E>
where
    E: Send,
    F: Fn(u64) -> Result<Vec<f64>, E> + Sync + Send,
{
    let chunks = trials.div_ceil(CHUNK);
    let partial = map_trials(chunks, |c| {
        let mut t = vec![Tally::default(); width];
        for i in c * CHUNK..((c + 1) * CHUNK).min(trials) {
            for (slot, x) in t.iter_mut().zip(f(i)?) {
                slot.push(x);
            }
        }
        Ok(t)
    });
    let mut total = vec![Tally::default(); width];
    for p in partial {
        for (slot, t) in total.iter_mut().zip(p?) {
            slot.merge(&t);
        }
    }
    Ok(total)
}

/// Monte Carlo estimate of an expectation, with everything needed to
/// replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
    pub seed: SeedSpec,
    pub target_group: FiniteAbelianGroup,
    pub model: String,
}

impl MomentEstimate {
    pub fn from_tally(tally: &Tally, seed: SeedSpec, target_group: FiniteAbelianGroup, model: String) -> Self {
        Self {
            mean: tally.mean(),
            stderr: tally.stderr(),
            trials: tally.count,
            seed,
            target_group,
            model,
        }
    }

    /// Whether `target` lies within `sigmas` standard errors of the mean.
    pub fn agrees_with(&self, target: f64, sigmas: f64) -> bool {
        (self.mean - target).abs() <= sigmas * self.stderr
    }
}
