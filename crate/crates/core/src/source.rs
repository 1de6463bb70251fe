//! Heralded DLCZ photon source.
//!
//! The write/read modes are modeled as a two-mode squeezed state with
//! excitation probability `p`. A non-number-resolving write detection with
//! transmission `t_w` heralds the read mode into
//!
//! ```text
//! p_n ∝ p^(n−1) [1 − (1 − t_w)^n],   n ≥ 1,   p_0 = 0
//! ```
//!
//! with normalization `(1 − p) [1 − p(1 − t_w)] / t_w`.

use crate::error::{Error, Result};
use crate::fock::FockDistribution;
use crate::roots;
use crate::scalar::Scalar;
use crate::{DEFAULT_N_MAX, MAX_AUTO_N_MAX, TAIL_TOL};

/// Measured write-path transmission including detection.
pub const DEFAULT_T_W: f64 = 0.21;

/// Smallest `p` considered by [`infer_p_from_g2`].
pub const P_MIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SourceModel<T> {
    p: T,
    t_w: T,
}

impl<T: Scalar> SourceModel<T> {
    pub fn new(p: T, t_w: T) -> Result<Self> {
        if !(p >= T::zero() && p < T::one()) {
            return Err(Error::POutOfRange(p.to_f64_lossy()));
        }
        if !(t_w > T::zero() && t_w <= T::one()) {
            return Err(Error::TransmissionOutOfRange(t_w.to_f64_lossy()));
        }
        Ok(Self { p, t_w })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn t_w(&self) -> T {
        self.t_w
    }

    /// Joint photon-number distribution of the two-mode squeezed state.
    pub fn two_mode_joint(&self, n_max: usize) -> Result<JointDistribution<T>> {
        let tail = self.p.powi(n_max as i32 + 1);
        if tail >= T::lit(TAIL_TOL) {
            return Err(Error::TruncationTooSmall { n_max, tail: tail.to_f64_lossy() });
        }
        let norm = T::one() - tail;
        let diag = (0..=n_max)
            .map(|n| (T::one() - self.p) * self.p.powi(n as i32) / norm)
            .collect();
        Ok(JointDistribution { diag })
    }

    /// Read-mode distribution conditioned on a write click.
    pub fn conditional_read_state(&self, n_max: usize) -> Result<FockDistribution<T>> {
        let tail = self.read_state_tail(n_max);
        if tail >= T::lit(TAIL_TOL) {
            return Err(Error::TruncationTooSmall { n_max, tail: tail.to_f64_lossy() });
        }
        let (p, t) = (self.p, self.t_w);
        let miss = T::one() - t;
        let prefactor = (T::one() - p) * (T::one() - p * miss) / t;
        let mut weights = Vec::with_capacity(n_max + 1);
        weights.push(T::zero());
        for n in 1..=n_max {
            let n = n as i32;
            weights.push(prefactor * p.powi(n - 1) * (T::one() - miss.powi(n)));
        }
        FockDistribution::from_weights(weights)
    }

    /// [`conditional_read_state`](Self::conditional_read_state) at the smallest adequate truncation.
    pub fn conditional_read_state_auto(&self) -> Result<FockDistribution<T>> {
        self.conditional_read_state(self.required_n_max()?)
    }

    /// Normalized read-state mass above `n_max`, in closed form.
    pub fn read_state_tail(&self, n_max: usize) -> T {
        let (p, t) = (self.p, self.t_w);
        let miss = T::one() - t;
        let n = n_max as i32;
        let v = p.powi(n) * ((T::one() - p * miss) - miss.powi(n + 1) * (T::one() - p)) / t;
        v.max(T::zero())
    }

    pub fn required_n_max(&self) -> Result<usize> {
        (DEFAULT_N_MAX..=MAX_AUTO_N_MAX)
            .find(|&n| self.read_state_tail(n) < T::lit(TAIL_TOL))
            .ok_or(Error::TruncationTooSmall {
                n_max: MAX_AUTO_N_MAX,
                tail: self.read_state_tail(MAX_AUTO_N_MAX).to_f64_lossy(),
            })
    }
}

/// Diagonal joint distribution `P(n_w = n, n_r = n)`; off-diagonal entries vanish.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution<T> {
    diag: Vec<T>,
}

impl<T: Scalar> JointDistribution<T> {
    pub fn n_max(&self) -> usize {
        self.diag.len() - 1
    }

    pub fn get(&self, n_w: usize, n_r: usize) -> T {
        if n_w == n_r {
            self.diag.get(n_w).copied().unwrap_or_else(T::zero)
        } else {
            T::zero()
        }
    }

    pub fn read_marginal(&self) -> FockDistribution<T> {
        FockDistribution::from_weights(self.diag.clone()).expect("diagonal is a distribution")
    }

    pub fn write_marginal(&self) -> FockDistribution<T> {
        self.read_marginal()
    }
}

/// Finds `p` such that the heralded read state at write transmission `t_w`
/// has the given g²(0).
///
/// g² of the read state is monotone in `p`, so a bisection over
/// `p ∈ [P_MIN, p_max]` suffices, where `p_max` is the largest `p` whose
/// state still fits in `n_max`.
pub fn infer_p_from_g2<T: Scalar>(g2_target: T, t_w: T, n_max: usize) -> Result<T> {
    SourceModel::new(T::zero(), t_w)?;
    let g2_at = |p: T| -> Result<T> { SourceModel::new(p, t_w)?.conditional_read_state(n_max)?.g2() };
    let p_lo = T::lit(P_MIN);
    let p_hi = roots::last_true(
        |p| SourceModel { p, t_w }.read_state_tail(n_max) < T::lit(TAIL_TOL),
        p_lo,
        T::one() - T::lit(P_MIN),
        100,
    );
    let (g_lo, g_hi) = (g2_at(p_lo)?, g2_at(p_hi)?);
    if !(g2_target >= g_lo && g2_target <= g_hi) {
        return Err(Error::TargetOutOfRange {
            target: g2_target.to_f64_lossy(),
            lo: g_lo.to_f64_lossy(),
            hi: g_hi.to_f64_lossy(),
        });
    }
    roots::bisect(
        |p| Ok(g2_at(p)? - g2_target),
        p_lo,
        p_hi,
        T::root_tol(),
        roots::MAX_BISECTION_ITERS,
    )
}

/// Ideal write/read cross-correlation of the two-mode squeezed state:
/// `1 + 1/p`, or `1/p` when the read mode is fully blockaded to one photon.
pub fn ideal_cross_correlation<T: Scalar>(p: T, blockaded: bool) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::POutOfRange(p.to_f64_lossy()));
    }
    let base = p.recip();
    Ok(if blockaded { base } else { T::one() + base })
}

/// Literature reference curve `2p(2 + p)/(1 + p)²` for the heralded g²(0).
pub fn reference_g2_scaling<T: Scalar>(p: T) -> T {
    let two = T::lit(2.0);
    two * p * (two + p) / ((T::one() + p) * (T::one() + p))
}
