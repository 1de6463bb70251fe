//! Full storage experiment: source → linear losses → blockade → retrieval.
//!
//! ```text
//! p' = M_blockade · M_√η_EIT · M_compression · M_losses · p
//! ```
//!
//! For coherent (WCS) inputs the state is specified directly in front of the
//! cloud, so `M_losses` is the identity. The second half of the EIT loss and
//! the retrieval efficiency act after the blockade; they scale the mean photon
//! number but leave g² unchanged, so they only enter [`Pipeline::efficiency`].
//!
//! With `medium_scale > 1` the blockade matrix is that of a stretched cloud,
//! an effective description of pulses that propagate without being stored.
//! It is a qualitative model only: the real pulse dynamics is not simulated.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::blockade::{self, BlockadeConfig};
use crate::error::{Error, Result};
use crate::fock::{self, FockDistribution};
use crate::roots;
use crate::scalar::Scalar;
use crate::source::{self, SourceModel};
use crate::transfer::TransferMatrix;
use crate::{MAX_AUTO_N_MAX, TAIL_TOL};

pub const DEFAULT_T_LOSSES: f64 = 0.15;
pub const DEFAULT_ETA_COMPRESSION: f64 = 0.6;
/// Bounds of the compression-efficiency uncertainty band.
pub const COMPRESSION_BAND: (f64, f64) = (0.45, 0.75);
pub const DEFAULT_ETA_EIT: f64 = 0.6;
pub const DEFAULT_ETA_R: f64 = 0.41;
/// Largest mean photon number searched when inverting ζ for coherent inputs.
pub const MU_MAX: f64 = 50.0;
/// Points of the monotonicity scan run before each inversion.
const MONOTONE_SCAN: usize = 64;

pub const SWEEP_HEADER: &str = "zeta,param,g2_in,g2_out,eta,g2_out_lo,g2_out_hi";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum InputKind {
    /// Heralded read photons with write transmission `t_w`.
    Dlcz { t_w: f64 },
    /// Weak coherent state.
    Wcs,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig<T> {
    pub t_losses: T,
    pub eta_compression: T,
    pub eta_eit: T,
    pub eta_r: T,
    pub blockade: BlockadeConfig,
    pub input_kind: InputKind,
    /// Cloud stretch factor of the blockade model, 1 for stored light.
    pub medium_scale: f64,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            t_losses: T::lit(DEFAULT_T_LOSSES),
            eta_compression: T::lit(DEFAULT_ETA_COMPRESSION),
            eta_eit: T::lit(DEFAULT_ETA_EIT),
            eta_r: T::lit(DEFAULT_ETA_R),
            blockade: BlockadeConfig::default(),
            input_kind: InputKind::Dlcz { t_w: source::DEFAULT_T_W },
            medium_scale: 1.0,
        }
    }
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_losses", self.t_losses),
            ("eta_compression", self.eta_compression),
            ("eta_eit", self.eta_eit),
            ("eta_r", self.eta_r),
        ] {
            if !(v > T::zero() && v <= T::one()) {
                return Err(Error::InvalidProbability { name, value: v.to_f64_lossy() });
            }
        }
        if let InputKind::Dlcz { t_w } = self.input_kind {
            if !(t_w > 0.0 && t_w <= 1.0) {
                return Err(Error::TransmissionOutOfRange(t_w));
            }
        }
        if !(self.medium_scale >= 1.0) || !self.medium_scale.is_finite() {
            return Err(Error::ScaleOutOfRange(self.medium_scale));
        }
        self.blockade.validate()
    }

    /// Transmission in front of the cloud: `t_losses` for DLCZ, 1 for WCS.
    pub fn source_transmission(&self) -> T {
        match self.input_kind {
            InputKind::Dlcz { .. } => self.t_losses,
            InputKind::Wcs => T::one(),
        }
    }

    /// Total linear transmission applied before the blockade.
    pub fn pre_blockade_transmission(&self) -> T {
        self.source_transmission() * self.eta_compression * self.eta_eit.sqrt()
    }

    /// State at the cloud input, `M_losses · p`.
    pub fn cloud_input(&self, input: &FockDistribution<T>) -> Result<FockDistribution<T>> {
        TransferMatrix::loss(self.source_transmission(), input.n_max())?.apply(input)
    }

    fn t_w(&self) -> Result<T> {
        match self.input_kind {
            InputKind::Dlcz { t_w } => Ok(T::lit(t_w)),
            InputKind::Wcs => Err(Error::InvalidConfig("input kind has no t_w".into())),
        }
    }
}

/// One sweep point. `param` is `p` for DLCZ and `μ` for WCS inputs; the
/// `_lo`/`_hi` columns come from the compression-efficiency band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow<T> {
    pub zeta: T,
    pub param: T,
    pub g2_in: T,
    pub g2_out: T,
    pub eta: T,
    pub g2_out_lo: T,
    pub g2_out_hi: T,
    pub eta_lo: T,
    pub eta_hi: T,
}

pub fn write_sweep_csv<T: Scalar, W: Write>(rows: &[SweepRow<T>], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.zeta, r.param, r.g2_in, r.g2_out, r.eta, r.g2_out_lo, r.g2_out_hi
        )?;
    }
    Ok(())
}

/// A configuration together with its blockade matrix.
#[derive(Clone, Debug)]
pub struct Pipeline<T> {
    cfg: PipelineConfig<T>,
    blockade: TransferMatrix<T>,
}

impl<T: Scalar> Pipeline<T> {
    /// Runs the blockade Monte Carlo for `cfg`.
    pub fn new(cfg: PipelineConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let blockade = if cfg.medium_scale == 1.0 {
            blockade::blockade_matrix(&cfg.blockade)?
        } else {
            blockade::slow_light_matrix(&cfg.blockade, cfg.medium_scale)?
        };
        Ok(Self { cfg, blockade })
    }

    /// Uses a precomputed blockade matrix.
    pub fn with_matrix(cfg: PipelineConfig<T>, blockade: TransferMatrix<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, blockade })
    }

    pub fn config(&self) -> &PipelineConfig<T> {
        &self.cfg
    }

    pub fn blockade_matrix(&self) -> &TransferMatrix<T> {
        &self.blockade
    }

    /// Same blockade matrix, different compression efficiency.
    pub fn with_compression(&self, eta_compression: T) -> Result<Self> {
        let cfg = PipelineConfig { eta_compression, ..self.cfg.clone() };
        Self::with_matrix(cfg, self.blockade.clone())
    }

    pub fn cloud_input(&self, input: &FockDistribution<T>) -> Result<FockDistribution<T>> {
        self.cfg.cloud_input(input)
    }

    /// ζ as seen at the cloud input.
    pub fn zeta_of_input(&self, input: &FockDistribution<T>) -> Result<T> {
        self.cloud_input(input)?.zeta()
    }

    /// `M_√EIT · M_compression · M_losses · p`, truncated to the blockade dimension.
    pub fn pre_blockade(&self, input: &FockDistribution<T>) -> Result<FockDistribution<T>> {
        let n = input.n_max();
        let mut d = self.cloud_input(input)?;
        d = TransferMatrix::loss(self.cfg.eta_compression, n)?.apply(&d)?;
        d = TransferMatrix::loss(self.cfg.eta_eit.sqrt(), n)?.apply(&d)?;
        d.resized(self.blockade.n_max())
    }

    pub fn post_blockade_distribution(&self, input: &FockDistribution<T>) -> Result<FockDistribution<T>> {
        self.blockade.apply(&self.pre_blockade(input)?)
    }

    pub fn g2_after_storage(&self, input: &FockDistribution<T>) -> Result<T> {
        self.post_blockade_distribution(input)?.g2()
    }

    /// `η = η_r √η_EIT ⟨n'⟩ / (t ⟨n⟩)` with `t = t_losses` for DLCZ and 1 for WCS.
    pub fn efficiency(&self, input: &FockDistribution<T>) -> Result<T> {
        let mu_in = input.mean_photons();
        if !(mu_in > T::zero()) {
            return Err(Error::ZeroMean);
        }
        let mu_out = self.post_blockade_distribution(input)?.mean_photons();
        Ok(self.cfg.eta_r * self.cfg.eta_eit.sqrt() * mu_out / (self.cfg.source_transmission() * mu_in))
    }

    /// Inverts ζ for the source parameter (`p` or `μ`) and builds the input state.
    pub fn input_for_zeta(&self, zeta: T) -> Result<(T, FockDistribution<T>)> {
        input_for_zeta(&self.cfg, zeta)
    }

    /// Evaluates every ζ point in parallel, sharing this blockade matrix.
    pub fn sweep(&self, zetas: &[T]) -> Result<Vec<SweepRow<T>>> {
        let lo = self.with_compression(T::lit(COMPRESSION_BAND.0))?;
        let hi = self.with_compression(T::lit(COMPRESSION_BAND.1))?;
        zetas
            .par_iter()
            .map(|&zeta| {
                let (param, input) = self.input_for_zeta(zeta)?;
                let (g_a, g_b) = (lo.g2_after_storage(&input)?, hi.g2_after_storage(&input)?);
                let (e_a, e_b) = (lo.efficiency(&input)?, hi.efficiency(&input)?);
                Ok(SweepRow {
                    zeta,
                    param,
                    g2_in: input.g2()?,
                    g2_out: self.g2_after_storage(&input)?,
                    eta: self.efficiency(&input)?,
                    g2_out_lo: g_a.min(g_b),
                    g2_out_hi: g_a.max(g_b),
                    eta_lo: e_a.min(e_b),
                    eta_hi: e_a.max(e_b),
                })
            })
            .collect()
    }
}

/// Sweep with a blockade truncation large enough for every point.
///
/// The blockade matrix is computed once, at the larger of
/// `cfg.blockade.n_max` and the smallest truncation that holds all
/// pre-blockade states (within [`TAIL_TOL`]).
pub fn sweep<T: Scalar>(cfg: &PipelineConfig<T>, zetas: &[T]) -> Result<Vec<SweepRow<T>>> {
    cfg.validate()?;
    let widest = PipelineConfig {
        eta_compression: cfg.eta_compression.max(T::lit(COMPRESSION_BAND.1)),
        ..cfg.clone()
    };
    let mut n_max = cfg.blockade.n_max;
    for &zeta in zetas {
        let (_, input) = input_for_zeta(cfg, zeta)?;
        let t = widest.pre_blockade_transmission();
        let d = TransferMatrix::loss(t, input.n_max())?.apply(&input)?;
        let needed = (0..=d.n_max()).find(|&k| d.tail_mass(k + 1) < T::lit(TAIL_TOL)).unwrap_or(d.n_max());
        n_max = n_max.max(needed);
    }
    let cfg = PipelineConfig { blockade: BlockadeConfig { n_max, ..cfg.blockade.clone() }, ..cfg.clone() };
    Pipeline::new(cfg)?.sweep(zetas)
}

/// ζ at the cloud input of a DLCZ read state with excitation probability `p`
/// after transmission `t`.
///
/// The read state is `∝ p^n − (pq)^n` with `q = 1 − t_w`, a signed mixture of
/// two geometric distributions. Loss maps a geometric with ratio `a` onto one
/// with ratio `a t / (1 − a + a t)`, and a geometric has `P(n ≥ k) = a^k`.
pub fn dlcz_zeta<T: Scalar>(p: T, t_w: T, t: T) -> T {
    let one = T::one();
    let q = one - t_w;
    let thin = |a: T| a * t / (one - a + a * t);
    let (a1, a2) = (thin(p), thin(p * q));
    let (w1, w2) = ((one - p).recip(), (one - p * q).recip());
    (w1 * a1 * a1 - w2 * a2 * a2) / (w1 * a1 - w2 * a2)
}

/// ζ of a coherent state with mean `μ`.
pub fn coherent_zeta<T: Scalar>(mu: T) -> T {
    let at_least_one = -(-mu).exp_m1();
    let at_least_two = at_least_one - mu * (-mu).exp();
    at_least_two / at_least_one
}

/// Source parameter (`p` or `μ`) whose state has multiphoton strength `zeta`
/// at the cloud input, and that state before any loss.
pub fn input_for_zeta<T: Scalar>(cfg: &PipelineConfig<T>, zeta: T) -> Result<(T, FockDistribution<T>)> {
    if !(zeta > T::zero() && zeta < T::one()) {
        return Err(Error::ZetaUnattainable(zeta.to_f64_lossy()));
    }
    match cfg.input_kind {
        InputKind::Wcs => {
            let mu = invert_monotone(coherent_zeta, T::lit(source::P_MIN), T::lit(MU_MAX), zeta)?;
            Ok((mu, FockDistribution::coherent(mu, fock::coherent_required_n_max(mu)?)?))
        }
        InputKind::Dlcz { .. } => {
            let t_w = cfg.t_w()?;
            let t = cfg.t_losses;
            let p_hi = roots::last_true(
                |p| SourceModel::new(p, t_w).is_ok_and(|s| s.read_state_tail(MAX_AUTO_N_MAX) < T::lit(TAIL_TOL)),
                T::lit(source::P_MIN),
                T::one() - T::lit(source::P_MIN),
                100,
            );
            let p = invert_monotone(|p| dlcz_zeta(p, t_w, t), T::lit(source::P_MIN), p_hi, zeta)?;
            Ok((p, SourceModel::new(p, t_w)?.conditional_read_state_auto()?))
        }
    }
}

/// Bisection for `f(x) = target` on `[lo, hi]` after checking on a scan that
/// `f` does not decrease there.
fn invert_monotone<T: Scalar>(f: impl Fn(T) -> T, lo: T, hi: T, target: T) -> Result<T> {
    let n = T::lit(MONOTONE_SCAN as f64);
    let scan: Vec<T> = (0..=MONOTONE_SCAN).map(|i| f(lo + (hi - lo) * T::lit(i as f64) / n)).collect();
    if scan.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidConfig("ζ is not monotone in the source parameter".into()));
    }
    let (f_lo, f_hi) = (scan[0], scan[MONOTONE_SCAN]);
    if !(target >= f_lo && target <= f_hi) {
        return Err(Error::ZetaUnattainable(target.to_f64_lossy()));
    }
    roots::bisect(|x| Ok(f(x) - target), lo, hi, T::root_tol(), roots::MAX_BISECTION_ITERS)
}
