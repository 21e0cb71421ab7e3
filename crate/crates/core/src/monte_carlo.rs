//! Stochastic companion to the deterministic revision forecast.
//!
//! Each trial builds the model, injecting `Binomial(units, dir)` defects, then
//! repeats review-and-fix cycles: every remaining defect is detected with
//! probability `dre`, and every fix re-injects a defect with probability
//! `dir`. A trial signs off when no defects remain. Revisions are the build
//! plus the cycles that changed something.
//!
//! Trial `i` draws from ChaCha8 stream `i` under the caller's seed, so the
//! outcome does not depend on how trials are scheduled across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::revision::ProcessParams;

/// Review cycles simulated per trial before it is recorded as censored.
pub const CYCLE_CAP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub revisions: usize,
    pub censored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McOutcome {
    pub trials: u64,
    pub seed: u64,
    pub mean_revisions: f64,
    /// Revision count → number of trials. Censored trials are included at the
    /// count they had reached when the cap was hit.
    pub histogram: BTreeMap<usize, u64>,
    pub censored: u64,
}

pub fn run_trial(params: &ProcessParams, rng: &mut impl Rng) -> TrialOutcome {
    let injected = Binomial::new(params.units, params.dir)
        .expect("dir validated as a fraction")
        .sample(rng);
    let mut remaining = injected;
    let mut revisions = 1;
    let mut cycles = 0;
    while remaining > 0 {
        if cycles == CYCLE_CAP {
            return TrialOutcome {
                revisions,
                censored: true,
            };
        }
        cycles += 1;
        let found = (0..remaining)
            .filter(|_| rng.random_bool(params.dre))
            .count() as u64;
        if found == 0 {
            continue;
        }
        let reinjected = (0..found).filter(|_| rng.random_bool(params.dir)).count() as u64;
        remaining = remaining - found + reinjected;
        revisions += 1;
    }
    TrialOutcome {
        revisions,
        censored: false,
    }
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn simulate_monte_carlo(params: &ProcessParams, trials: u64, seed: u64) -> Result<McOutcome> {
    simulate_monte_carlo_with(params, trials, seed, Execution::default())
}

pub fn simulate_monte_carlo_with(
    params: &ProcessParams,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<McOutcome> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let n = usize::try_from(trials).map_err(|_| Error::invalid("too many trials"))?;
    let outcomes = map_indexed(exec, n, |i| {
        run_trial(params, &mut trial_rng(seed, i as u64))
    });

    let mut histogram = BTreeMap::new();
    let mut censored = 0;
    let mut total = 0u64;
    for o in &outcomes {
        *histogram.entry(o.revisions).or_insert(0) += 1;
        censored += u64::from(o.censored);
        total += o.revisions as u64;
    }
    Ok(McOutcome {
        trials,
        seed,
        mean_revisions: total as f64 / trials as f64,
        histogram,
        censored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_injection_is_one_revision_everywhere() {
        let p = ProcessParams::with_defaults(100, 0.0, 1.0).unwrap();
        let out = simulate_monte_carlo(&p, 500, 7).unwrap();
        assert_eq!(out.histogram.len(), 1);
        assert_eq!(out.histogram[&1], 500);
        assert_eq!(out.mean_revisions, 1.0);
    }

    #[test]
    fn same_seed_same_histogram() {
        let p = ProcessParams::with_defaults(2182, 0.07, 0.75).unwrap();
        let a = simulate_monte_carlo(&p, 300, 42).unwrap();
        let b = simulate_monte_carlo(&p, 300, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_monte_carlo(&p, 300, 43).unwrap();
        assert_ne!(a.histogram, c.histogram);
    }

    #[test]
    fn schedule_does_not_change_results() {
        let p = ProcessParams::with_defaults(500, 0.1, 0.6).unwrap();
        let seq = simulate_monte_carlo_with(&p, 200, 9, Execution::Sequential).unwrap();
        let par = simulate_monte_carlo_with(&p, 200, 9, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn histogram_accounts_for_every_trial() {
        let p = ProcessParams::with_defaults(300, 0.2, 0.5).unwrap();
        let out = simulate_monte_carlo(&p, 1000, 1).unwrap();
        assert_eq!(out.histogram.values().sum::<u64>(), 1000);
        let mean = out
            .histogram
            .iter()
            .map(|(r, n)| *r as f64 * *n as f64)
            .sum::<f64>()
            / 1000.0;
        assert!((mean - out.mean_revisions).abs() < 1e-12);
    }

    #[test]
    fn dre_zero_hits_the_cap() {
        let p = ProcessParams::with_defaults(100, 0.5, 0.0).unwrap();
        let out = simulate_monte_carlo(&p, 3, 1).unwrap();
        assert_eq!(out.censored, 3);
        assert_eq!(out.histogram[&1], 3);
    }

    #[test]
    fn rejects_zero_trials() {
        let p = ProcessParams::with_defaults(100, 0.1, 0.5).unwrap();
        assert!(simulate_monte_carlo(&p, 0, 1).is_err());
    }
}
