//! Click records from single-photon detectors and the correlation estimators
//! built on them.
//!
//! Detectors are non-number-resolving: any number of clicks of one detector
//! inside its signal window counts as one detection for that trial. Noise is
//! estimated from a separate window after the signal (coupling light still on,
//! no photons) and rescaled to the signal-window length, assuming stationary
//! noise uncorrelated with the photons.

mod bootstrap;
mod io;
mod synth;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use bootstrap::{bootstrap_error, BootstrapResult, Estimator};
pub use io::{ingest, ingest_pairs, ingest_table, read_click_file, write_click_file, CLICK_HEADER};
pub use synth::{synthesize, synthesize_pairs, PairSynthModel, SynthModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Detector {
    D1,
    D2,
    D3,
}

impl Detector {
    pub const ALL: [Detector; 3] = [Detector::D1, Detector::D2, Detector::D3];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Accepts `D1`, `d1` or `1`.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().trim_start_matches(['D', 'd']) {
            "1" => Some(Detector::D1),
            "2" => Some(Detector::D2),
            "3" => Some(Detector::D3),
            _ => None,
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.index() + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClickRecord {
    pub trial_id: u64,
    pub detector: Detector,
    /// Time since the start of the trial.
    pub time_ns: u64,
}

/// Half-open time window `[start_ns, end_ns)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub start_ns: u64,
    pub end_ns: u64,
}

impl Window {
    pub fn new(start_ns: u64, end_ns: u64) -> Result<Self> {
        if end_ns <= start_ns {
            return Err(Error::InvalidWindow(start_ns, end_ns));
        }
        Ok(Self { start_ns, end_ns })
    }

    pub fn len_ns(&self) -> u64 {
        self.end_ns - self.start_ns
    }

    pub fn contains(&self, t: u64) -> bool {
        t >= self.start_ns && t < self.end_ns
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start_ns < other.end_ns && other.start_ns < self.end_ns
    }
}

/// Signal window per detector plus a shared noise window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WindowSpec {
    signal: [Window; 3],
    noise: Window,
}

impl WindowSpec {
    /// Same signal window for every detector.
    pub fn new(signal: Window, noise: Window) -> Result<Self> {
        let spec = Self { signal: [signal; 3], noise };
        spec.check(signal)?;
        Ok(spec)
    }

    pub fn with_signal(mut self, detector: Detector, window: Window) -> Result<Self> {
        self.check(window)?;
        self.signal[detector.index()] = window;
        Ok(self)
    }

    fn check(&self, signal: Window) -> Result<()> {
        if signal.overlaps(&self.noise) {
            return Err(Error::OverlappingWindows {
                signal: (signal.start_ns, signal.end_ns),
                noise: (self.noise.start_ns, self.noise.end_ns),
            });
        }
        Ok(())
    }

    pub fn signal(&self, detector: Detector) -> Window {
        self.signal[detector.index()]
    }

    pub fn noise(&self) -> Window {
        self.noise
    }

    /// Converts a noise-window click total into a per-trial mean in the
    /// signal window of `detector`.
    pub fn noise_scale(&self, detector: Detector) -> f64 {
        self.signal(detector).len_ns() as f64 / self.noise.len_ns() as f64
    }
}

impl Default for WindowSpec {
    /// 300 ns signal window at the start of the trial, 600 ns noise window after it.
    fn default() -> Self {
        Self::new(Window { start_ns: 0, end_ns: 300 }, Window { start_ns: 400, end_ns: 1000 })
            .expect("disjoint")
    }
}

/// The two detectors behind the beam splitter of the HBT setup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Arms {
    pub first: Detector,
    pub second: Detector,
}

impl Default for Arms {
    fn default() -> Self {
        Self { first: Detector::D2, second: Detector::D3 }
    }
}

/// In-memory click stream: a trial count and the clicks of those trials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClickStream {
    pub trials: u64,
    pub records: Vec<ClickRecord>,
}

/// Aggregated HBT counts.
///
/// `n1`, `n2` are per-trial detection probabilities in the signal window,
/// `n12` the total number of coincidence trials, `nn1`, `nn2` per-trial mean
/// noise clicks rescaled to the signal window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialCounts {
    #[serde(rename = "N")]
    pub trials: u64,
    pub n1: f64,
    pub n2: f64,
    pub n12: u64,
    pub nn1: f64,
    pub nn2: f64,
}

/// What one trial looked like to the two HBT arms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TrialPattern {
    pub signal1: bool,
    pub signal2: bool,
    pub noise1: u32,
    pub noise2: u32,
}

/// Histogram of per-trial patterns, the sufficient statistic for g²
/// estimation and for trial-level bootstrap resampling.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialTable {
    trials: u64,
    patterns: BTreeMap<TrialPattern, u64>,
    noise_scale: [f64; 2],
}

impl TrialTable {
    pub fn from_records<'a>(
        trials: u64,
        records: impl IntoIterator<Item = &'a ClickRecord>,
        windows: &WindowSpec,
        arms: Arms,
    ) -> Result<Self> {
        let mut per_trial: HashMap<u64, TrialPattern> = HashMap::new();
        for r in records {
            if r.trial_id >= trials {
                return Err(Error::InvalidConfig(format!(
                    "trial id {} outside 0..{trials}",
                    r.trial_id
                )));
            }
            let arm = if r.detector == arms.first {
                0
            } else if r.detector == arms.second {
                1
            } else {
                continue;
            };
            let in_signal = windows.signal(r.detector).contains(r.time_ns);
            let in_noise = windows.noise().contains(r.time_ns);
            if !in_signal && !in_noise {
                continue;
            }
            let pat = per_trial.entry(r.trial_id).or_default();
            match (arm, in_signal) {
                (0, true) => pat.signal1 = true,
                (1, true) => pat.signal2 = true,
                (0, false) => pat.noise1 += 1,
                _ => pat.noise2 += 1,
            }
        }
        Self::from_patterns(trials, per_trial.into_values(), windows, arms)
    }

    fn from_patterns(
        trials: u64,
        patterns: impl IntoIterator<Item = TrialPattern>,
        windows: &WindowSpec,
        arms: Arms,
    ) -> Result<Self> {
        let mut hist = BTreeMap::new();
        let mut seen = 0u64;
        for p in patterns {
            if p != TrialPattern::default() {
                *hist.entry(p).or_insert(0) += 1;
                seen += 1;
            }
        }
        if seen > trials {
            return Err(Error::InvalidConfig(format!("{seen} active trials but only {trials} trials")));
        }
        if trials > seen {
            hist.insert(TrialPattern::default(), trials - seen);
        }
        Ok(Self {
            trials,
            patterns: hist,
            noise_scale: [windows.noise_scale(arms.first), windows.noise_scale(arms.second)],
        })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn patterns(&self) -> impl Iterator<Item = (&TrialPattern, &u64)> {
        self.patterns.iter()
    }

    /// Same patterns with every count multiplied by `times`.
    pub fn repeated(&self, times: u64) -> Self {
        Self {
            trials: self.trials * times,
            patterns: self.patterns.iter().map(|(p, c)| (*p, c * times)).collect(),
            noise_scale: self.noise_scale,
        }
    }

    pub fn counts(&self) -> TrialCounts {
        self.counts_with(self.patterns.iter().map(|(p, &c)| (p, c)))
    }

    pub(crate) fn counts_with<'a>(&self, weighted: impl Iterator<Item = (&'a TrialPattern, u64)>) -> TrialCounts {
        let (mut s1, mut s2, mut s12, mut z1, mut z2, mut total) = (0u64, 0u64, 0u64, 0u64, 0u64, 0u64);
        for (p, c) in weighted {
            total += c;
            if p.signal1 {
                s1 += c;
            }
            if p.signal2 {
                s2 += c;
            }
            if p.signal1 && p.signal2 {
                s12 += c;
            }
            z1 += c * p.noise1 as u64;
            z2 += c * p.noise2 as u64;
        }
        let n = total as f64;
        TrialCounts {
            trials: total,
            n1: s1 as f64 / n,
            n2: s2 as f64 / n,
            n12: s12,
            nn1: z1 as f64 / n * self.noise_scale[0],
            nn2: z2 as f64 / n * self.noise_scale[1],
        }
    }
}

/// Write/read counts for the cross-correlation: totals of trials with a
/// herald click, a read click, and both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairCounts {
    pub trials: u64,
    pub n_w: u64,
    pub n_r: u64,
    pub n_wr: u64,
}

/// Uncorrected autocorrelation `n12 / (N n1 n2)` (`n1`, `n2` per-trial means,
/// `n12` total coincidences).
pub fn g2_raw(c: &TrialCounts) -> Result<f64> {
    if c.trials == 0 || !(c.n1 > 0.0) || !(c.n2 > 0.0) {
        return Err(Error::ZeroSingles);
    }
    Ok(c.n12 as f64 / (c.trials as f64 * c.n1 * c.n2))
}

/// Noise-corrected autocorrelation for noise uncorrelated with the signal:
///
/// ```text
/// g² = g²_n − (1 − g²_n) [ nn1/(n1−nn1) + nn2/(n2−nn2) + nn1 nn2/((n1−nn1)(n2−nn2)) ]
/// ```
pub fn g2_noise_corrected(c: &TrialCounts) -> Result<f64> {
    let raw = g2_raw(c)?;
    let s1 = c.n1 - c.nn1;
    let s2 = c.n2 - c.nn2;
    if !(s1 > 0.0) {
        return Err(Error::NoiseExceedsSignal { noise: c.nn1, signal: c.n1 });
    }
    if !(s2 > 0.0) {
        return Err(Error::NoiseExceedsSignal { noise: c.nn2, signal: c.n2 });
    }
    let bracket = c.nn1 / s1 + c.nn2 / s2 + c.nn1 * c.nn2 / (s1 * s2);
    Ok(raw - (1.0 - raw) * bracket)
}

/// `p_wr / (p_w p_r)` estimated from counts.
pub fn cross_correlation(c: &PairCounts) -> Result<f64> {
    if c.trials == 0 || c.n_w == 0 || c.n_r == 0 {
        return Err(Error::ZeroSingles);
    }
    Ok(c.n_wr as f64 * c.trials as f64 / (c.n_w as f64 * c.n_r as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(trial_id: u64, detector: Detector, time_ns: u64) -> ClickRecord {
        ClickRecord { trial_id, detector, time_ns }
    }

    #[test]
    fn detector_parsing() {
        assert_eq!(Detector::parse("D2"), Some(Detector::D2));
        assert_eq!(Detector::parse("3"), Some(Detector::D3));
        assert_eq!(Detector::parse("d1"), Some(Detector::D1));
        assert_eq!(Detector::parse("D4"), None);
        assert_eq!(Detector::D3.to_string(), "D3");
    }

    #[test]
    fn windows_validate() {
        assert!(matches!(Window::new(5, 5), Err(Error::InvalidWindow(5, 5))));
        let s = Window::new(0, 300).unwrap();
        let n = Window::new(200, 800).unwrap();
        assert!(matches!(WindowSpec::new(s, n), Err(Error::OverlappingWindows { .. })));
        let adjacent = Window::new(300, 900).unwrap();
        assert!(WindowSpec::new(s, adjacent).is_ok());
    }

    #[test]
    fn single_coincidence() {
        let recs = [rec(0, Detector::D2, 10), rec(0, Detector::D3, 20)];
        let c = TrialTable::from_records(1, &recs, &WindowSpec::default(), Arms::default()).unwrap().counts();
        assert_eq!(c.n12, 1);
        assert_eq!((c.n1, c.n2), (1.0, 1.0));
    }

    #[test]
    fn empty_stream_has_zero_counts() {
        let c = TrialTable::from_records(50, &[], &WindowSpec::default(), Arms::default()).unwrap().counts();
        assert_eq!(c, TrialCounts { trials: 50, n1: 0.0, n2: 0.0, n12: 0, nn1: 0.0, nn2: 0.0 });
        assert!(matches!(g2_raw(&c), Err(Error::ZeroSingles)));
    }

    #[test]
    fn multiple_clicks_count_once_and_outside_ignored() {
        let recs = [
            rec(3, Detector::D2, 10),
            rec(3, Detector::D2, 20),
            rec(3, Detector::D2, 350),
            rec(3, Detector::D1, 10),
        ];
        let c = TrialTable::from_records(4, &recs, &WindowSpec::default(), Arms::default()).unwrap().counts();
        assert_eq!(c.n1, 0.25);
        assert_eq!(c.n2, 0.0);
        assert_eq!(c.nn1, 0.0);
    }

    #[test]
    fn noise_rescaling() {
        let windows = WindowSpec::new(Window::new(0, 300).unwrap(), Window::new(400, 1000).unwrap()).unwrap();
        let recs = [rec(1, Detector::D2, 500), rec(77, Detector::D2, 999), rec(5000, Detector::D2, 400)];
        let c = TrialTable::from_records(10_000, &recs, &windows, Arms::default()).unwrap().counts();
        assert!((c.nn1 - 1.5e-4).abs() < 1e-18);
        assert_eq!(c.nn2, 0.0);
    }

    #[test]
    fn trial_id_out_of_range() {
        let recs = [rec(10, Detector::D2, 1)];
        assert!(TrialTable::from_records(10, &recs, &WindowSpec::default(), Arms::default()).is_err());
    }

    #[test]
    fn raw_estimator() {
        let c = TrialCounts { trials: 100, n1: 0.1, n2: 0.2, n12: 0, nn1: 0.0, nn2: 0.0 };
        assert_eq!(g2_raw(&c).unwrap(), 0.0);
        let c = TrialCounts { n12: 2, ..c };
        assert!((g2_raw(&c).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn corrected_estimator() {
        let c = TrialCounts { trials: 1000, n1: 0.1, n2: 0.2, n12: 3, nn1: 0.0, nn2: 0.0 };
        assert_eq!(g2_noise_corrected(&c).unwrap().to_bits(), g2_raw(&c).unwrap().to_bits());

        // anti-bunched: correction pulls down; bunched: pushes up
        let anti = TrialCounts { nn1: 0.01, nn2: 0.02, ..c };
        assert!(g2_noise_corrected(&anti).unwrap() < g2_raw(&anti).unwrap());
        let bunched = TrialCounts { n12: 40, ..anti };
        assert!(g2_raw(&bunched).unwrap() > 1.0);
        assert!(g2_noise_corrected(&bunched).unwrap() > g2_raw(&bunched).unwrap());

        let noisy = TrialCounts { nn1: 0.1, ..c };
        assert!(matches!(g2_noise_corrected(&noisy), Err(Error::NoiseExceedsSignal { .. })));
    }

    #[test]
    fn corrected_formula_value() {
        let c = TrialCounts { trials: 1000, n1: 0.1, n2: 0.2, n12: 1, nn1: 0.01, nn2: 0.02 };
        let raw = 1.0 / (1000.0 * 0.1 * 0.2);
        let bracket = 0.01 / 0.09 + 0.02 / 0.18 + 0.01 * 0.02 / (0.09 * 0.18);
        assert!((g2_noise_corrected(&c).unwrap() - (raw - (1.0 - raw) * bracket)).abs() < 1e-14);
    }

    #[test]
    fn lab_noise_rates_per_trial() {
        // 50/s and 300/s over a 300 ns window
        assert!((50.0 * 300e-9 - 1.5e-5f64).abs() < 1e-18);
        assert!((300.0 * 300e-9 - 9e-5f64).abs() < 1e-18);
    }

    #[test]
    fn cross_correlation_limits() {
        let q = 0.04;
        let trials = 10_000;
        let pairs = (q * trials as f64) as u64;
        let c = PairCounts { trials, n_w: pairs, n_r: pairs, n_wr: pairs };
        assert!((cross_correlation(&c).unwrap() - 1.0 / q).abs() < 1e-9);
        assert_eq!(cross_correlation(&PairCounts { n_wr: 0, ..c }).unwrap(), 0.0);
        assert!(cross_correlation(&PairCounts { n_w: 0, ..c }).is_err());
    }
}
