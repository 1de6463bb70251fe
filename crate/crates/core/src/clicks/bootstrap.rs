use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use super::{g2_noise_corrected, g2_raw, TrialPattern, TrialTable};
use crate::error::{Error, Result};

pub const MIN_RESAMPLES: usize = 100;
pub const MIN_TRIALS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Raw,
    NoiseCorrected,
}

impl Estimator {
    pub fn eval(self, table: &TrialTable) -> Result<f64> {
        let c = table.counts();
        match self {
            Estimator::Raw => g2_raw(&c),
            Estimator::NoiseCorrected => g2_noise_corrected(&c),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub std_error: f64,
    pub mean: f64,
    /// Resamples on which the estimator was defined.
    pub resamples_used: usize,
}

/// Trial-level bootstrap: each resample draws `N` trials with replacement,
/// done as a multinomial draw over the pattern histogram. Resamples where the
/// estimator is undefined (no singles, noise above signal) are dropped; more
/// than half dropped is an error.
pub fn bootstrap_error(table: &TrialTable, estimator: Estimator, resamples: usize, seed: u64) -> Result<BootstrapResult> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InsufficientResamples(resamples));
    }
    if table.trials() < MIN_TRIALS {
        return Err(Error::InsufficientTrials(table.trials()));
    }
    let patterns: Vec<(TrialPattern, u64)> = table.patterns().map(|(p, &c)| (*p, c)).collect();
    let n = table.trials();

    let values: Vec<Option<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let counts = multinomial(&mut rng, n, &patterns);
            let c = table.counts_with(patterns.iter().zip(counts).map(|((p, _), k)| (p, k)));
            match estimator {
                Estimator::Raw => g2_raw(&c),
                Estimator::NoiseCorrected => g2_noise_corrected(&c),
            }
            .ok()
            .filter(|v| v.is_finite())
        })
        .collect();

    let ok: Vec<f64> = values.into_iter().flatten().collect();
    if ok.len() * 2 < resamples {
        return Err(Error::InsufficientResamples(ok.len()));
    }
    let m = ok.len() as f64;
    let mean = ok.iter().sum::<f64>() / m;
    let std_error = if ok.iter().all(|&v| v == ok[0]) {
        0.0
    } else {
        (ok.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    };
    Ok(BootstrapResult { std_error, mean, resamples_used: ok.len() })
}

/// Multinomial draw of `n` over categories weighted by `weights` (which sum
/// to `n`), as a chain of conditional binomials.
fn multinomial(rng: &mut ChaCha8Rng, n: u64, weights: &[(TrialPattern, u64)]) -> Vec<u64> {
    let mut left = n;
    let mut mass_left = weights.iter().map(|(_, c)| c).sum::<u64>();
    let mut out = Vec::with_capacity(weights.len());
    for &(_, c) in weights {
        let k = if left == 0 || c == 0 {
            0
        } else if c >= mass_left {
            left
        } else {
            Binomial::new(left, c as f64 / mass_left as f64).expect("probability in (0,1)").sample(rng)
        };
        out.push(k);
        left -= k;
        mass_left -= c;
    }
    out
}
