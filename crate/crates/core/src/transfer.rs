//! Column-stochastic transfer matrices acting on Fock distributions.
//!
//! `M[k][l]` is the probability that `l` input photons leave as `k` photons,
//! so a distribution transforms as `p'_k = Σ_l M_kl p_l`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fock::FockDistribution;
use crate::scalar::Scalar;

/// Condition numbers above this are rejected by [`TransferMatrix::invert`].
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix<T> {
    n_max: usize,
    /// Row-major, `(n_max + 1)²` entries.
    data: Vec<T>,
    /// False for back-propagation matrices, which may hold negative entries.
    physical: bool,
}

impl<T: Scalar> TransferMatrix<T> {
    pub fn identity(n_max: usize) -> Self {
        let dim = n_max + 1;
        let mut data = vec![T::zero(); dim * dim];
        for k in 0..dim {
            data[k * dim + k] = T::one();
        }
        Self { n_max, data, physical: true }
    }

    /// Binomial loss with transmission `t`: `M_kl = C(l,k) t^k (1−t)^(l−k)`.
    pub fn loss(t: T, n_max: usize) -> Result<Self> {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::TransmissionOutOfRange(t.to_f64_lossy()));
        }
        let dim = n_max + 1;
        let r = T::one() - t;
        let mut data = vec![T::zero(); dim * dim];
        // Pascal recurrence on the pmf column by column: B(l,k) = t B(l−1,k−1) + r B(l−1,k)
        let mut col = vec![T::zero(); dim];
        col[0] = T::one();
        for l in 0..dim {
            if l > 0 {
                for k in (1..=l).rev() {
                    col[k] = t * col[k - 1] + r * col[k];
                }
                col[0] = r * col[0];
            }
            for k in 0..=l {
                data[k * dim + l] = col[k];
            }
        }
        Ok(Self { n_max, data, physical: true })
    }

    /// Ideal single-photon filter: `|0⟩ → |0⟩`, every `|l ≥ 1⟩ → |1⟩`.
    pub fn perfect_filter(n_max: usize) -> Self {
        assert!(n_max >= 1, "perfect filter needs n_max >= 1");
        let dim = n_max + 1;
        let mut data = vec![T::zero(); dim * dim];
        data[0] = T::one();
        for l in 1..dim {
            data[dim + l] = T::one();
        }
        Self { n_max, data, physical: true }
    }

    /// Builds a physical matrix from its columns.
    ///
    /// Each column must be non-negative and sum to one within
    /// [`Scalar::norm_tol`]; the residual is divided out.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let dim = columns.len();
        if dim == 0 {
            return Err(Error::InvalidDistribution("no columns".into()));
        }
        let mut data = vec![T::zero(); dim * dim];
        for (l, col) in columns.iter().enumerate() {
            if col.len() != dim {
                return Err(Error::DimensionMismatch { left: dim - 1, right: col.len().saturating_sub(1) });
            }
            let sum: T = col.iter().copied().sum();
            if col.iter().any(|&x| !(x >= T::zero())) || (sum - T::one()).abs() > T::norm_tol() {
                return Err(Error::InvalidDistribution(format!(
                    "column {l} is not a probability vector (sum {sum})"
                )));
            }
            for (k, &x) in col.iter().enumerate() {
                data[k * dim + l] = x / sum;
            }
        }
        Ok(Self { n_max: dim - 1, data, physical: true })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn is_physical(&self) -> bool {
        self.physical
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> T {
        self.data[k * self.dim() + l]
    }

    pub fn column(&self, l: usize) -> Vec<T> {
        (0..self.dim()).map(|k| self.get(k, l)).collect()
    }

    pub fn column_sums(&self) -> Vec<T> {
        (0..self.dim()).map(|l| (0..self.dim()).map(|k| self.get(k, l)).sum()).collect()
    }

    /// No entry below the diagonal, i.e. the element never adds photons.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.dim()).all(|k| (0..k).all(|l| self.get(k, l) == T::zero()))
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_dim(other.n_max)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }

    fn check_dim(&self, n_max: usize) -> Result<()> {
        if self.n_max != n_max {
            return Err(Error::DimensionMismatch { left: self.n_max, right: n_max });
        }
        Ok(())
    }

    /// Matrix–vector product on raw weights, without any validation.
    pub fn apply_weights(&self, p: &[T]) -> Result<Vec<T>> {
        self.check_dim(p.len().wrapping_sub(1))?;
        let dim = self.dim();
        Ok((0..dim)
            .map(|k| {
                let row = &self.data[k * dim..(k + 1) * dim];
                row.iter().zip(p).map(|(&m, &x)| m * x).sum()
            })
            .collect())
    }

    /// `p' = M p`.
    ///
    /// For non-physical (inverted) matrices, round-off negatives down to
    /// `−norm_tol` are clipped to zero; anything more negative is an error.
    pub fn apply(&self, d: &FockDistribution<T>) -> Result<FockDistribution<T>> {
        let mut out = self.apply_weights(d.probs())?;
        if !self.physical {
            for (index, x) in out.iter_mut().enumerate() {
                if *x < -T::norm_tol() {
                    return Err(Error::NonPhysical { index, value: x.to_f64_lossy() });
                }
                if *x < T::zero() {
                    *x = T::zero();
                }
            }
        }
        FockDistribution::new(out)
    }

    /// `self · first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Self) -> Result<Self> {
        self.check_dim(first.n_max)?;
        let dim = self.dim();
        let mut data = vec![T::zero(); dim * dim];
        for k in 0..dim {
            for j in 0..dim {
                let a = self.get(k, j);
                if a == T::zero() {
                    continue;
                }
                for l in 0..dim {
                    data[k * dim + l] = data[k * dim + l] + a * first.get(j, l);
                }
            }
        }
        Ok(Self { n_max: self.n_max, data, physical: self.physical && first.physical })
    }

    /// Inverse for back-propagation, via LU with partial pivoting.
    ///
    /// The result is flagged non-physical. Fails on (numerically) singular
    /// matrices and when the 1-norm condition number exceeds [`MAX_CONDITION`].
    pub fn invert(&self) -> Result<Self> {
        let dim = self.dim();
        let mut lu = self.data.clone();
        let mut perm: Vec<usize> = (0..dim).collect();
        let scale = self.norm_inf();
        let tiny = T::epsilon() * scale * T::lit(dim as f64);

        for c in 0..dim {
            let (pivot_row, pivot) = (c..dim)
                .map(|r| (r, lu[r * dim + c].abs()))
                .fold((c, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= tiny {
                return Err(Error::SingularMatrix);
            }
            if pivot_row != c {
                for j in 0..dim {
                    lu.swap(c * dim + j, pivot_row * dim + j);
                }
                perm.swap(c, pivot_row);
            }
            let diag = lu[c * dim + c];
            for r in c + 1..dim {
                let f = lu[r * dim + c] / diag;
                lu[r * dim + c] = f;
                if f != T::zero() {
                    for j in c + 1..dim {
                        lu[r * dim + j] = lu[r * dim + j] - f * lu[c * dim + j];
                    }
                }
            }
        }

        // Solve A x = e_perm for each unit column.
        let mut inv = vec![T::zero(); dim * dim];
        let mut x = vec![T::zero(); dim];
        for col in 0..dim {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = if perm[i] == col { T::one() } else { T::zero() };
            }
            for i in 0..dim {
                let mut s = x[i];
                for j in 0..i {
                    s = s - lu[i * dim + j] * x[j];
                }
                x[i] = s;
            }
            for i in (0..dim).rev() {
                let mut s = x[i];
                for j in i + 1..dim {
                    s = s - lu[i * dim + j] * x[j];
                }
                x[i] = s / lu[i * dim + i];
            }
            for i in 0..dim {
                inv[i * dim + col] = x[i];
            }
        }

        let inverse = Self { n_max: self.n_max, data: inv, physical: false };
        let cond = self.norm_one() * inverse.norm_one();
        if !cond.is_finite() || cond > T::lit(MAX_CONDITION) {
            return Err(Error::IllConditioned(cond.to_f64_lossy()));
        }
        Ok(inverse)
    }

    fn norm_one(&self) -> T {
        (0..self.dim())
            .map(|l| (0..self.dim()).map(|k| self.get(k, l).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    fn norm_inf(&self) -> T {
        (0..self.dim())
            .map(|k| (0..self.dim()).map(|l| self.get(k, l).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Row-major CSV with header `k\l,0,1,...`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "k\\l")?;
        for l in 0..self.dim() {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
        for k in 0..self.dim() {
            write!(out, "{k}")?;
            for l in 0..self.dim() {
                write!(out, ",{}", self.get(k, l))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }
}

/// `m2 · m1`.
pub fn compose<T: Scalar>(m2: &TransferMatrix<T>, m1: &TransferMatrix<T>) -> Result<TransferMatrix<T>> {
    m2.compose(m1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    type Tm = TransferMatrix<f64>;
    type Fd = FockDistribution<f64>;

    #[test]
    fn loss_endpoints() {
        assert_eq!(Tm::loss(1.0, 6).unwrap(), Tm::identity(6));
        let dead = Tm::loss(0.0, 6).unwrap();
        for l in 0..=6 {
            let mut e0 = vec![0.0; 7];
            e0[0] = 1.0;
            assert_eq!(dead.column(l), e0);
        }
        assert!(matches!(Tm::loss(1.5, 3), Err(Error::TransmissionOutOfRange(_))));
        assert!(matches!(Tm::loss(-0.1, 3), Err(Error::TransmissionOutOfRange(_))));
    }

    #[test]
    fn loss_column_is_binomial() {
        let m = Tm::loss(0.5, 5).unwrap();
        assert_eq!(&m.column(2)[..4], &[0.25, 0.5, 0.25, 0.0]);
        assert!(m.is_upper_triangular());
        assert_eq!(m.get(0, 0), 1.0);
        // C(5,2) 0.3^2 0.7^3
        let m = Tm::loss(0.3, 5).unwrap();
        assert_abs_diff_eq!(m.get(2, 5), 10.0 * 0.09 * 0.343, epsilon = 1e-15);
    }

    #[test]
    fn large_truncation_has_no_overflow() {
        let m = Tm::loss(0.5, 1200).unwrap();
        assert!(m.column_sums().iter().all(|s| (s - 1.0).abs() < 1e-11));
        let m = TransferMatrix::<f32>::loss(0.4, 300).unwrap();
        assert!(m.column_sums().iter().all(|s| (s - 1.0).abs() < 1e-4));
    }

    #[test]
    fn perfect_filter_action() {
        let f = Tm::perfect_filter(2);
        let out = f.apply(&Fd::number_state(2, 2).unwrap()).unwrap();
        assert_eq!(out.probs(), &[0.0, 1.0, 0.0]);
        assert_eq!(f.apply(&Fd::vacuum(2)).unwrap(), Fd::vacuum(2));
        let out = f.apply(&Fd::new(vec![0.5, 0.3, 0.2]).unwrap()).unwrap();
        assert_abs_diff_eq!(out.prob(0), 0.5);
        assert_abs_diff_eq!(out.prob(1), 0.5);
        assert_eq!(out.prob(2), 0.0);
    }

    #[test]
    fn apply_identity_and_total_loss() {
        let d = Fd::coherent(0.8, 20).unwrap();
        assert_eq!(Tm::identity(20).apply(&d).unwrap(), d);
        assert_eq!(Tm::loss(0.0, 20).unwrap().apply(&d).unwrap(), Fd::vacuum(20));
        assert!(matches!(
            Tm::identity(5).apply(&d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn poisson_thinning() {
        let out = Tm::loss(0.3, 20).unwrap().apply(&Fd::coherent(1.0, 20).unwrap()).unwrap();
        let expect = Fd::coherent(0.3, 20).unwrap();
        for k in 0..=20 {
            assert_abs_diff_eq!(out.prob(k), expect.prob(k), epsilon = 1e-9);
        }
    }

    #[test]
    fn compose_laws() {
        let a = Tm::loss(0.3, 10).unwrap();
        let b = Tm::loss(0.6, 10).unwrap();
        let ab = compose(&a, &b).unwrap();
        assert!(ab.max_abs_diff(&Tm::loss(0.18, 10).unwrap()).unwrap() < 1e-12);
        assert_eq!(compose(&Tm::identity(10), &a).unwrap(), a);
        let f = Tm::perfect_filter(10);
        assert_eq!(compose(&f, &f).unwrap(), f);
        assert!(compose(&f, &Tm::identity(3)).is_err());
    }

    #[test]
    fn invert_identity_and_singular() {
        assert_eq!(Tm::identity(7).invert().unwrap().data, Tm::identity(7).data);
        assert!(!Tm::identity(7).invert().unwrap().is_physical());
        assert!(matches!(Tm::perfect_filter(5).invert(), Err(Error::SingularMatrix)));
        assert!(matches!(Tm::loss(0.0, 5).unwrap().invert(), Err(Error::SingularMatrix)));
        assert!(matches!(Tm::loss(0.3, 20).unwrap().invert(), Err(Error::IllConditioned(_))));
        assert!(matches!(Tm::loss(0.05, 20).unwrap().invert(), Err(Error::SingularMatrix)));
    }

    #[test]
    fn back_propagate_coherent() {
        let inv = Tm::loss(0.5, 20).unwrap().invert().unwrap();
        let back = inv.apply(&Fd::coherent(0.25, 20).unwrap()).unwrap();
        let expect = Fd::coherent(0.5, 20).unwrap();
        for k in 0..=20 {
            assert_abs_diff_eq!(back.prob(k), expect.prob(k), epsilon = 1e-7);
        }
        let m = Tm::loss(0.5, 20).unwrap();
        let id = inv.compose(&m).unwrap();
        assert!(id.max_abs_diff(&Tm::identity(20)).unwrap() < 1e-8);
    }

    #[test]
    fn csv_layout() {
        let s = Tm::identity(1).to_csv_string();
        assert_eq!(s, "k\\l,0,1\n0,1,0\n1,0,1\n");
    }

    fn distribution(n_max: usize) -> impl Strategy<Value = Fd> {
        prop::collection::vec(0.0f64..1.0, n_max + 1)
            .prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| Fd::from_weights(w).unwrap())
    }

    proptest! {
        #[test]
        fn loss_semigroup(t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
            let lhs = Tm::loss(t1, 20).unwrap().compose(&Tm::loss(t2, 20).unwrap()).unwrap();
            let rhs = Tm::loss(t1 * t2, 20).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-12);
        }

        #[test]
        fn columns_stay_stochastic(t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
            let m = Tm::perfect_filter(15).compose(&Tm::loss(t1, 15).unwrap()).unwrap()
                .compose(&Tm::loss(t2, 15).unwrap()).unwrap();
            for s in m.column_sums() {
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn loss_invariants(d in distribution(12), t in 0.01f64..=1.0) {
            let out = Tm::loss(t, 12).unwrap().apply(&d).unwrap();
            prop_assert!((out.total() - 1.0).abs() < 1e-9);
            prop_assert!((out.mean_photons() - t * d.mean_photons()).abs() < 1e-9);
            if d.mean_photons() > 1e-3 {
                prop_assert!((out.g2().unwrap() - d.g2().unwrap()).abs() < 1e-7);
            }
        }

        #[test]
        fn invert_round_trip(d in distribution(6), t in 0.1f64..=1.0) {
            let m = Tm::loss(t, 6).unwrap();
            let back = m.invert().unwrap().apply(&m.apply(&d).unwrap()).unwrap();
            for k in 0..=6 {
                prop_assert!((back.prob(k) - d.prob(k)).abs() < 1e-7);
            }
        }
    }
}
