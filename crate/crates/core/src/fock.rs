//! Truncated photon-number distributions and their scalar statistics.

use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::{DEFAULT_N_MAX, MAX_AUTO_N_MAX, TAIL_TOL};

/// Diagonal of a single-mode density matrix in the Fock basis, `p_0..=p_{n_max}`.
///
/// Always normalized: constructors either validate the sum or divide by it.
#[derive(Clone, Debug, PartialEq)]
pub struct FockDistribution<T> {
    probs: Vec<T>,
}

impl<T: Scalar> FockDistribution<T> {
    /// Builds a distribution from probabilities that already sum to one
    /// (within [`Scalar::norm_tol`]). The small residual is divided out.
    pub fn new(probs: Vec<T>) -> Result<Self> {
        let sum = check_entries(&probs)?;
        if (sum - T::one()).abs() > T::norm_tol() {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self::scaled(probs, sum))
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(weights: Vec<T>) -> Result<Self> {
        let sum = check_entries(&weights)?;
        if sum <= T::zero() {
            return Err(Error::InvalidDistribution("weights sum to zero".into()));
        }
        Ok(Self::scaled(weights, sum))
    }

    fn scaled(mut probs: Vec<T>, sum: T) -> Self {
        if sum != T::one() {
            probs.iter_mut().for_each(|p| *p = *p / sum);
        }
        Self { probs }
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::number_state(0, n_max).expect("0 <= n_max")
    }

    /// Fock state `|n⟩`.
    pub fn number_state(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::NOutOfRange { n, n_max });
        }
        let mut probs = vec![T::zero(); n_max + 1];
        probs[n] = T::one();
        Ok(Self { probs })
    }

    /// Poisson distribution of mean `mu`, renormalized over `0..=n_max`.
    ///
    /// Fails if more than [`TAIL_TOL`] of the Poisson mass lies beyond `n_max`.
    pub fn coherent(mu: T, n_max: usize) -> Result<Self> {
        if !(mu >= T::zero()) {
            return Err(Error::NegativeMean(mu.to_f64_lossy()));
        }
        let tail = poisson_tail(mu, n_max);
        if tail >= T::lit(TAIL_TOL) {
            return Err(Error::TruncationTooSmall { n_max, tail: tail.to_f64_lossy() });
        }
        let mut probs = Vec::with_capacity(n_max + 1);
        let mut term = (-mu).exp();
        probs.push(term);
        for k in 1..=n_max {
            term = term * mu / T::lit(k as f64);
            probs.push(term);
        }
        Self::from_weights(probs)
    }

    /// [`coherent`](Self::coherent) at the smallest adequate truncation `>= DEFAULT_N_MAX`.
    pub fn coherent_auto(mu: T) -> Result<Self> {
        Self::coherent(mu, coherent_required_n_max(mu)?)
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    pub fn prob(&self, k: usize) -> T {
        self.probs.get(k).copied().unwrap_or_else(T::zero)
    }

    pub fn into_probs(self) -> Vec<T> {
        self.probs
    }

    /// Copy truncated or zero-padded to a different `n_max`.
    ///
    /// Shrinking is only allowed when the discarded mass is below [`TAIL_TOL`].
    pub fn resized(&self, n_max: usize) -> Result<Self> {
        let mut probs = self.probs.clone();
        if n_max < self.n_max() {
            let tail = self.tail_mass(n_max + 1);
            if tail >= T::lit(TAIL_TOL) {
                return Err(Error::TruncationTooSmall { n_max, tail: tail.to_f64_lossy() });
            }
            probs.truncate(n_max + 1);
            return Self::from_weights(probs);
        }
        probs.resize(n_max + 1, T::zero());
        Ok(Self { probs })
    }

    /// Σ k p_k.
    pub fn mean_photons(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, &p)| T::lit(k as f64) * p)
            .sum()
    }

    /// Σ k(k−1) p_k.
    pub fn second_factorial_moment(&self) -> T {
        self.probs
            .iter()
            .enumerate()
            .skip(2)
            .map(|(k, &p)| T::lit((k * (k - 1)) as f64) * p)
            .sum()
    }

    /// Zero-delay autocorrelation Σ k(k−1)p_k / (Σ k p_k)².
    pub fn g2(&self) -> Result<T> {
        let mean = self.mean_photons();
        if mean <= T::zero() {
            return Err(Error::ZeroMean);
        }
        Ok(self.second_factorial_moment() / (mean * mean))
    }

    /// Multiphoton strength: P(n ≥ 2) / P(n ≥ 1).
    pub fn zeta(&self) -> Result<T> {
        let at_least_one = self.tail_mass(1);
        if at_least_one <= T::zero() {
            return Err(Error::VacuumOnly);
        }
        Ok(self.tail_mass(2) / at_least_one)
    }

    /// Σ_{k ≥ from} p_k, summed from the top for accuracy.
    pub fn tail_mass(&self, from: usize) -> T {
        self.probs.iter().skip(from).rev().copied().sum()
    }

    pub fn total(&self) -> T {
        self.probs.iter().copied().sum()
    }

    /// Writes `k,prob` rows for `k = 0..=n_max`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,prob")?;
        for (k, p) in self.probs.iter().enumerate() {
            writeln!(out, "{k},{p}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }
}

impl<T: Scalar> std::ops::Index<usize> for FockDistribution<T> {
    type Output = T;

    fn index(&self, k: usize) -> &T {
        &self.probs[k]
    }
}

fn check_entries<T: Scalar>(probs: &[T]) -> Result<T> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty probability vector".into()));
    }
    for (k, &p) in probs.iter().enumerate() {
        if !(p >= T::zero()) || !p.is_finite() {
            return Err(Error::InvalidDistribution(format!("p_{k} = {p} is not a probability")));
        }
    }
    Ok(probs.iter().copied().sum())
}

/// Poisson mass strictly above `n_max`.
pub fn poisson_tail<T: Scalar>(mu: T, n_max: usize) -> T {
    if mu <= T::zero() {
        return T::zero();
    }
    // log of the first omitted term, then sum the rapidly decaying series
    let first = n_max + 1;
    let log_term = T::lit(first as f64) * mu.ln() - mu - ln_factorial::<T>(first);
    let mut term = log_term.exp();
    let mut sum = T::zero();
    let mut k = first;
    while term > sum * T::epsilon() && k < first + 100_000 {
        sum = sum + term;
        k += 1;
        term = term * mu / T::lit(k as f64);
        if term == T::zero() {
            break;
        }
    }
    sum
}

fn ln_factorial<T: Scalar>(n: usize) -> T {
    (2..=n).map(|k| T::lit(k as f64).ln()).sum()
}

/// Smallest `n_max >= DEFAULT_N_MAX` whose Poisson tail is below [`TAIL_TOL`].
pub fn coherent_required_n_max<T: Scalar>(mu: T) -> Result<usize> {
    if !(mu >= T::zero()) {
        return Err(Error::NegativeMean(mu.to_f64_lossy()));
    }
    (DEFAULT_N_MAX..=MAX_AUTO_N_MAX)
        .find(|&n| poisson_tail(mu, n) < T::lit(TAIL_TOL))
        .ok_or(Error::TruncationTooSmall {
            n_max: MAX_AUTO_N_MAX,
            tail: poisson_tail(mu, MAX_AUTO_N_MAX).to_f64_lossy(),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    type Fd = FockDistribution<f64>;

    #[test]
    fn vacuum_coherent() {
        let d = Fd::coherent(0.0, 20).unwrap();
        assert_eq!(d.prob(0), 1.0);
        assert_eq!(d.tail_mass(1), 0.0);
        assert_eq!(d.mean_photons(), 0.0);
    }

    #[test]
    fn coherent_values() {
        let d = Fd::coherent(1.0, 20).unwrap();
        assert_abs_diff_eq!(d.prob(1), (-1.0f64).exp(), epsilon = 1e-9);
        assert_abs_diff_eq!(Fd::coherent(0.5, 20).unwrap().g2().unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(Fd::coherent(0.3, 20).unwrap().g2().unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(Fd::coherent(0.7, 20).unwrap().mean_photons(), 0.7, epsilon = 1e-9);
    }

    #[test]
    fn coherent_errors() {
        assert!(matches!(Fd::coherent(-0.1, 20), Err(Error::NegativeMean(_))));
        assert!(matches!(Fd::coherent(8.0, 20), Err(Error::TruncationTooSmall { .. })));
        let d = Fd::coherent_auto(8.0).unwrap();
        assert!(d.n_max() > 20);
        assert!(poisson_tail(8.0, d.n_max()) < TAIL_TOL);
    }

    #[test]
    fn number_state_statistics() {
        let one = Fd::number_state(1, 5).unwrap();
        assert_eq!(one.g2().unwrap(), 0.0);
        assert_eq!(one.zeta().unwrap(), 0.0);
        let two = Fd::number_state(2, 5).unwrap();
        assert_eq!(two.g2().unwrap(), 0.5);
        assert_eq!(two.zeta().unwrap(), 1.0);
    }

    #[test]
    fn zeta_of_weak_coherent() {
        let mu: f64 = 0.1;
        let expect = (1.0 - (-mu).exp() - mu * (-mu).exp()) / (1.0 - (-mu).exp());
        let z = Fd::coherent(mu, 20).unwrap().zeta().unwrap();
        assert_abs_diff_eq!(z, expect, epsilon = 1e-12);
        assert_abs_diff_eq!(z, 0.049171, epsilon = 1e-5);
    }

    #[test]
    fn degenerate_statistics() {
        let vac = Fd::vacuum(4);
        assert!(matches!(vac.g2(), Err(Error::ZeroMean)));
        assert!(matches!(vac.zeta(), Err(Error::VacuumOnly)));
        let half = Fd::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(half.mean_photons(), 0.5);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(Fd::new(vec![0.5, 0.6]).is_err());
        assert!(Fd::new(vec![1.1, -0.1]).is_err());
        assert!(Fd::from_weights(vec![0.0, 0.0]).is_err());
        assert!(Fd::new(vec![]).is_err());
        assert!(Fd::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn resize_respects_tail() {
        let d = Fd::coherent(0.2, 30).unwrap();
        assert_eq!(d.resized(20).unwrap().n_max(), 20);
        assert_eq!(d.resized(40).unwrap().prob(40), 0.0);
        assert!(Fd::number_state(5, 10).unwrap().resized(3).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = Fd::new(vec![0.25, 0.75]).unwrap().to_csv_string();
        assert_eq!(s, "k,prob\n0,0.25\n1,0.75\n");
    }

    #[test]
    fn f32_works() {
        let d = FockDistribution::<f32>::coherent(0.5, 20).unwrap();
        assert!((d.g2().unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn zeta_increasing_for_coherent() {
        let mut prev = 0.0;
        for i in 1..=300 {
            let mu = i as f64 * 0.01;
            let z = Fd::coherent(mu, 30).unwrap().zeta().unwrap();
            assert!(z > prev, "zeta not increasing at mu = {mu}");
            prev = z;
        }
    }
}
