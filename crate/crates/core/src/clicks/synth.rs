//! Synthetic click streams for closed-loop tests of the estimators.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Geometric, Poisson};
use rayon::prelude::*;

use super::{Arms, ClickRecord, ClickStream, Detector, Window, WindowSpec};
use crate::error::{Error, Result};
use crate::fock::FockDistribution;

const BATCH: u64 = 8192;

/// HBT experiment: photon number drawn from `dist`, each photon detected with
/// `detection_efficiency`, then split 50/50 between the two arms.
/// `noise_hz[d]` is a Poissonian background rate on detector `d`.
#[derive(Clone, Debug)]
pub struct SynthModel {
    pub dist: FockDistribution<f64>,
    pub detection_efficiency: f64,
    pub noise_hz: [f64; 3],
    pub windows: WindowSpec,
    pub arms: Arms,
}

impl SynthModel {
    pub fn new(dist: FockDistribution<f64>) -> Self {
        Self {
            dist,
            detection_efficiency: 1.0,
            noise_hz: [0.0; 3],
            windows: WindowSpec::default(),
            arms: Arms::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.detection_efficiency) {
            return Err(Error::TransmissionOutOfRange(self.detection_efficiency));
        }
        if self.noise_hz.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidConfig("noise rates must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Generates `n_trials` trials; deterministic in `seed` (fixed batches, one
/// ChaCha8 stream per batch).
pub fn synthesize(model: &SynthModel, n_trials: u64, seed: u64) -> Result<ClickStream> {
    model.validate()?;
    let photons = WeightedIndex::new(model.dist.probs()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    let noise: Vec<(Detector, Option<Poisson<f64>>, Option<Poisson<f64>>)> = Detector::ALL
        .iter()
        .map(|&d| {
            let rate = model.noise_hz[d.index()] * 1e-9;
            let sig = poisson(rate * model.windows.signal(d).len_ns() as f64);
            let noi = poisson(rate * model.windows.noise().len_ns() as f64);
            (d, sig, noi)
        })
        .collect();

    let records = batched(n_trials, seed, |rng, trial, out| {
        let n = photons.sample(rng) as u64;
        let detected = binomial(rng, n, model.detection_efficiency);
        let first = binomial(rng, detected, 0.5);
        for (arm, k) in [(model.arms.first, first), (model.arms.second, detected - first)] {
            if k > 0 {
                out.push(click(rng, trial, arm, model.windows.signal(arm)));
            }
        }
        for (d, sig, noi) in &noise {
            for (dist, window) in [(sig, model.windows.signal(*d)), (noi, model.windows.noise())] {
                if let Some(dist) = dist {
                    for _ in 0..dist.sample(rng) as u64 {
                        out.push(click(rng, trial, *d, window));
                    }
                }
            }
        }
    });
    Ok(ClickStream { trials: n_trials, records })
}

/// Write/read pair experiment on the two-mode squeezed state with excitation
/// probability `p`: the write mode goes to D1 with transmission `t_w`, the
/// read mode to D2 with transmission `t_r`. `noise_w`, `noise_r` are per-trial
/// probabilities of a background click in the respective signal window.
#[derive(Clone, Copy, Debug)]
pub struct PairSynthModel {
    pub p: f64,
    pub t_w: f64,
    pub t_r: f64,
    pub noise_w: f64,
    pub noise_r: f64,
}

pub fn synthesize_pairs(model: &PairSynthModel, windows: &WindowSpec, n_trials: u64, seed: u64) -> Result<ClickStream> {
    for (name, v) in [("t_w", model.t_w), ("t_r", model.t_r), ("noise_w", model.noise_w), ("noise_r", model.noise_r)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidProbability { name, value: v });
        }
    }
    if !(0.0..1.0).contains(&model.p) {
        return Err(Error::POutOfRange(model.p));
    }
    let pairs = Geometric::new(1.0 - model.p).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let records = batched(n_trials, seed, |rng, trial, out| {
        let n = pairs.sample(rng);
        let w = binomial(rng, n, model.t_w) > 0 || rng.random_bool(model.noise_w);
        let r = binomial(rng, n, model.t_r) > 0 || rng.random_bool(model.noise_r);
        if w {
            out.push(click(rng, trial, Detector::D1, windows.signal(Detector::D1)));
        }
        if r {
            out.push(click(rng, trial, Detector::D2, windows.signal(Detector::D2)));
        }
    });
    Ok(ClickStream { trials: n_trials, records })
}

fn batched<F>(n_trials: u64, seed: u64, trial_fn: F) -> Vec<ClickRecord>
where
    F: Fn(&mut ChaCha8Rng, u64, &mut Vec<ClickRecord>) + Sync,
{
    let batches = n_trials.div_ceil(BATCH);
    let chunks: Vec<Vec<ClickRecord>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut out = Vec::new();
            let mut trial_buf = Vec::new();
            for trial in b * BATCH..((b + 1) * BATCH).min(n_trials) {
                trial_buf.clear();
                trial_fn(&mut rng, trial, &mut trial_buf);
                trial_buf.sort_by_key(|r| (r.time_ns, r.detector));
                out.extend_from_slice(&trial_buf);
            }
            out
        })
        .collect();
    chunks.concat()
}

fn poisson(mean: f64) -> Option<Poisson<f64>> {
    (mean > 0.0).then(|| Poisson::new(mean).expect("positive finite mean"))
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

fn click(rng: &mut ChaCha8Rng, trial_id: u64, detector: Detector, window: Window) -> ClickRecord {
    ClickRecord { trial_id, detector, time_ns: rng.random_range(window.start_ns..window.end_ns) }
}
