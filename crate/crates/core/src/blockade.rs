//! One-dimensional hard-sphere model of a partially blockaded cloud.
//!
//! For an input Fock state `|n⟩`, `n` positions are drawn uniformly over the
//! cloud length and visited in draw (arrival) order. A polariton survives
//! unless it lies within the blockade radius of an earlier *surviving*
//! polariton; scattered ones do not block. The survivor-count histogram over
//! many trials is column `n` of the blockade transfer matrix.
//!
//! Reproducibility: trials of column `n` are split into contiguous batches of
//! [`BATCH_SIZE`]; batch `b` draws from a ChaCha8 stream seeded with
//! `rng_seed` at stream `(n << 32) | b`. Histograms are summed, so the result
//! only depends on `(rng_seed, trials_per_fock)` and never on thread count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::transfer::TransferMatrix;
use crate::DEFAULT_N_MAX;

pub const BATCH_SIZE: u64 = 4096;

/// Cloud FWHM in μm.
pub const DEFAULT_CLOUD_LENGTH: f64 = 15.0;
/// Blockade radius in μm.
pub const DEFAULT_BLOCKADE_RADIUS: f64 = 10.5;
pub const DEFAULT_TRIALS: u64 = 100_000;
/// Effective medium enlargement for propagation without storage.
pub const DEFAULT_SLOW_LIGHT_SCALE: f64 = 2.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockadeConfig {
    pub cloud_length: f64,
    pub blockade_radius: f64,
    pub trials_per_fock: u64,
    pub rng_seed: u64,
    pub n_max: usize,
}

impl Default for BlockadeConfig {
    fn default() -> Self {
        Self {
            cloud_length: DEFAULT_CLOUD_LENGTH,
            blockade_radius: DEFAULT_BLOCKADE_RADIUS,
            trials_per_fock: DEFAULT_TRIALS,
            rng_seed: 0,
            n_max: DEFAULT_N_MAX,
        }
    }
}

impl BlockadeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cloud_length > 0.0) || !self.cloud_length.is_finite() {
            return Err(Error::NonpositiveLength(self.cloud_length));
        }
        if !(self.blockade_radius >= 0.0) || !self.blockade_radius.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "blockade_radius must be >= 0, got {}",
                self.blockade_radius
            )));
        }
        if self.trials_per_fock == 0 {
            return Err(Error::InvalidConfig("trials_per_fock must be >= 1".into()));
        }
        Ok(())
    }
}

/// Survivor-count histogram for one input photon number.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SurvivalDistribution {
    pub input_n: usize,
    pub trials: u64,
    /// `counts[k]` = trials ending with `k` survivors, `k = 0..=input_n`.
    pub counts: Vec<u64>,
}

impl SurvivalDistribution {
    fn exact(input_n: usize, survivors: usize, trials: u64) -> Self {
        let mut counts = vec![0; input_n + 1];
        counts[survivors] = trials;
        Self { input_n, trials, counts }
    }

    pub fn probs<T: Scalar>(&self) -> Vec<T> {
        let trials = T::lit(self.trials as f64);
        self.counts.iter().map(|&c| T::lit(c as f64) / trials).collect()
    }

    /// Binomial standard error of each entry.
    pub fn std_errors(&self) -> Vec<f64> {
        let n = self.trials as f64;
        self.probs::<f64>().into_iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect()
    }
}

/// Monte Carlo survivor distribution for input `|n⟩`.
pub fn simulate_fock(cfg: &BlockadeConfig, n: usize) -> Result<SurvivalDistribution> {
    cfg.validate()?;
    if n > cfg.n_max {
        return Err(Error::NOutOfRange { n, n_max: cfg.n_max });
    }
    let trials = cfg.trials_per_fock;
    match n {
        0 => return Ok(SurvivalDistribution::exact(0, 0, trials)),
        1 => return Ok(SurvivalDistribution::exact(1, 1, trials)),
        _ => {}
    }
    if cfg.blockade_radius == 0.0 {
        return Ok(SurvivalDistribution::exact(n, n, trials));
    }
    if cfg.blockade_radius >= cfg.cloud_length {
        return Ok(SurvivalDistribution::exact(n, 1, trials));
    }

    let batches = trials.div_ceil(BATCH_SIZE);
    let counts = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(((n as u64) << 32) | b);
            let len = BATCH_SIZE.min(trials - b * BATCH_SIZE);
            let mut hist = vec![0u64; n + 1];
            let mut survivors = Vec::with_capacity(n);
            for _ in 0..len {
                let k = run_trial(&mut rng, n, cfg.cloud_length, cfg.blockade_radius, &mut survivors);
                hist[k] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; n + 1],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(SurvivalDistribution { input_n: n, trials, counts })
}

/// One arrival sequence; returns the number of survivors.
fn run_trial(rng: &mut ChaCha8Rng, n: usize, length: f64, radius: f64, survivors: &mut Vec<f64>) -> usize {
    survivors.clear();
    for _ in 0..n {
        let x = rng.random::<f64>() * length;
        // survivors is kept sorted; only the nearest neighbours can block
        let idx = survivors.partition_point(|&s| s < x);
        let blocked = (idx > 0 && x - survivors[idx - 1] <= radius)
            || (idx < survivors.len() && survivors[idx] - x <= radius);
        if !blocked {
            survivors.insert(idx, x);
            if covers(survivors, length, radius) {
                // every later arrival is within reach of a survivor
                break;
            }
        }
    }
    survivors.len()
}

fn covers(sorted: &[f64], length: f64, radius: f64) -> bool {
    let (Some(&first), Some(&last)) = (sorted.first(), sorted.last()) else {
        return false;
    };
    first - radius <= 0.0
        && last + radius >= length
        && sorted.windows(2).all(|w| w[1] - w[0] <= 2.0 * radius)
}

/// Survivor distributions for every input `n = 0..=n_max`.
pub fn simulate_columns(cfg: &BlockadeConfig) -> Result<Vec<SurvivalDistribution>> {
    cfg.validate()?;
    (0..=cfg.n_max).into_par_iter().map(|n| simulate_fock(cfg, n)).collect()
}

/// Pads survivor distributions into a square transfer matrix.
pub fn matrix_from_columns<T: Scalar>(columns: &[SurvivalDistribution]) -> Result<TransferMatrix<T>> {
    let dim = columns.len();
    let cols: Vec<Vec<T>> = columns
        .iter()
        .map(|c| {
            let mut v = c.probs::<T>();
            v.resize(dim, T::zero());
            v
        })
        .collect();
    TransferMatrix::from_columns(&cols)
}

pub fn blockade_matrix<T: Scalar>(cfg: &BlockadeConfig) -> Result<TransferMatrix<T>> {
    matrix_from_columns(&simulate_columns(cfg)?)
}

/// Blockade matrix of a medium stretched by `medium_scale`, an effective
/// model of the weaker nonlinearity seen by propagating (unstored) pulses.
pub fn slow_light_matrix<T: Scalar>(cfg: &BlockadeConfig, medium_scale: f64) -> Result<TransferMatrix<T>> {
    blockade_matrix(&scaled_config(cfg, medium_scale)?)
}

pub fn scaled_config(cfg: &BlockadeConfig, medium_scale: f64) -> Result<BlockadeConfig> {
    if !(medium_scale >= 1.0) || !medium_scale.is_finite() {
        return Err(Error::ScaleOutOfRange(medium_scale));
    }
    Ok(BlockadeConfig { cloud_length: cfg.cloud_length * medium_scale, ..cfg.clone() })
}

/// Probability that both of two uniformly placed polaritons survive,
/// `(1 − r_b/L)²` for `r_b ≤ L`.
pub fn exact_pair_survival<T: Scalar>(blockade_radius: T, cloud_length: T) -> Result<T> {
    if !(cloud_length > T::zero()) {
        return Err(Error::NonpositiveLength(cloud_length.to_f64_lossy()));
    }
    if blockade_radius >= cloud_length {
        return Ok(T::zero());
    }
    let free = T::one() - blockade_radius / cloud_length;
    Ok(free * free)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rb: f64, trials: u64, n_max: usize) -> BlockadeConfig {
        BlockadeConfig { blockade_radius: rb, trials_per_fock: trials, n_max, rng_seed: 11, ..Default::default() }
    }

    #[test]
    fn trivial_columns() {
        let c = cfg(10.5, 1000, 5);
        assert_eq!(simulate_fock(&c, 0).unwrap().counts, vec![1000]);
        assert_eq!(simulate_fock(&c, 1).unwrap().counts, vec![0, 1000]);
        assert!(matches!(simulate_fock(&c, 6), Err(Error::NOutOfRange { .. })));
    }

    #[test]
    fn pair_oracle_values() {
        assert_eq!(exact_pair_survival(0.0, 15.0).unwrap(), 1.0);
        assert_eq!(exact_pair_survival(15.0, 15.0).unwrap(), 0.0);
        assert_eq!(exact_pair_survival(20.0, 15.0).unwrap(), 0.0);
        assert!((exact_pair_survival(10.5, 15.0).unwrap() - 0.09f64).abs() < 1e-12);
        assert!(matches!(exact_pair_survival(1.0, 0.0), Err(Error::NonpositiveLength(_))));
    }

    #[test]
    fn two_photon_column_matches_oracle() {
        let s = simulate_fock(&cfg(10.5, 100_000, 2), 2).unwrap();
        let p2 = s.probs::<f64>()[2];
        let sigma = (0.09f64 * 0.91 / 1e5).sqrt();
        assert!((p2 - 0.09).abs() < 3.0 * sigma, "p2 = {p2}");
        assert_eq!(s.counts[0], 0);
    }

    #[test]
    fn full_and_no_blockade() {
        let m: TransferMatrix<f64> = blockade_matrix(&cfg(0.0, 100, 8)).unwrap();
        assert_eq!(m, TransferMatrix::identity(8));
        let m: TransferMatrix<f64> = blockade_matrix(&cfg(15.0, 100, 8)).unwrap();
        assert_eq!(m, TransferMatrix::perfect_filter(8));
        let m: TransferMatrix<f64> = blockade_matrix(&cfg(40.0, 100, 8)).unwrap();
        assert_eq!(m, TransferMatrix::perfect_filter(8));
    }

    #[test]
    fn survivors_bounded() {
        let cols = simulate_columns(&cfg(3.0, 2000, 12)).unwrap();
        for c in &cols[1..] {
            assert_eq!(c.counts[0], 0);
            assert_eq!(c.counts.iter().sum::<u64>(), 2000);
            assert_eq!(c.counts.len(), c.input_n + 1);
        }
        // at most 1 + floor(L / r_b) polaritons fit
        assert!(cols[12].counts[7..].iter().all(|&c| c == 0));
    }

    #[test]
    fn deterministic_and_batch_independent_of_threads() {
        let c = cfg(6.0, 10_000, 6);
        let a = simulate_columns(&c).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| simulate_columns(&c).unwrap());
        assert_eq!(a, b);
        let other = simulate_columns(&BlockadeConfig { rng_seed: 12, ..c }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn slow_light_scaling() {
        let c = cfg(10.5, 50_000, 2);
        let base: TransferMatrix<f64> = blockade_matrix(&c).unwrap();
        assert_eq!(slow_light_matrix::<f64>(&c, 1.0).unwrap(), base);
        assert!(matches!(slow_light_matrix::<f64>(&c, 0.5), Err(Error::ScaleOutOfRange(_))));
        let stretched: TransferMatrix<f64> = slow_light_matrix(&c, 2.5).unwrap();
        let sigma = (0.5184f64 * 0.4816 / 5e4).sqrt();
        assert!((stretched.get(2, 2) - 0.5184).abs() < 3.0 * sigma);
        assert!(stretched.get(2, 2) > base.get(2, 2));
    }
}
