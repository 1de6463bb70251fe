//! Detection-probability model of the heralded source.
//!
//! ```text
//! p_w  = p t_w + p_nw
//! p_r  = p η_a t_r + p (1 − η_a) p_eg t_r + p_nr
//! p_wr = p_w η_a t_r + p_w p (1 − η_a) p_eg t_r + p_w p_nr
//! ```
//!
//! and the write/read cross-correlation `g²_wr ≈ p_wr / (p_w p_r)`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::roots;
use crate::scalar::Scalar;

/// Transmission between the source and the read detectors without storage.
pub const READ_TRANSMISSION: f64 = 0.09;
/// Read noise probability after storage (temporal/frequency filtering).
pub const STORED_P_NR: f64 = 1.3e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateModelParams<T> {
    pub p: T,
    pub t_w: T,
    pub t_r: T,
    pub eta_a: T,
    pub p_eg: T,
    pub p_nw: T,
    pub p_nr: T,
}

impl<T: Scalar> RateModelParams<T> {
    /// Measured source parameters (`t_w = 0.21, t_r = 0.09, η_a = 0.32,
    /// p_nw = 1e-4, p_nr = 1.5e-3`) with the fitted `p_eg = 0.20`.
    pub fn measured(p: T) -> Self {
        Self {
            p,
            t_w: T::lit(0.21),
            t_r: T::lit(READ_TRANSMISSION),
            eta_a: T::lit(0.32),
            p_eg: T::lit(0.20),
            p_nw: T::lit(1e-4),
            p_nr: T::lit(1.5e-3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields: [(&'static str, T); 7] = [
            ("p", self.p),
            ("t_w", self.t_w),
            ("t_r", self.t_r),
            ("eta_a", self.eta_a),
            ("p_eg", self.p_eg),
            ("p_nw", self.p_nw),
            ("p_nr", self.p_nr),
        ];
        for (name, value) in fields {
            if !(value >= T::zero() && value <= T::one()) {
                return Err(Error::InvalidProbability { name, value: value.to_f64_lossy() });
            }
        }
        if self.p >= T::one() {
            return Err(Error::InvalidProbability { name: "p", value: self.p.to_f64_lossy() });
        }
        Ok(())
    }

    pub fn with_p(self, p: T) -> Self {
        Self { p, ..self }
    }

    /// Same parameters with the read noise `p_nr` set to zero.
    pub fn without_read_noise(self) -> Self {
        Self { p_nr: T::zero(), ..self }
    }

    /// Excitation probability that produces a given detected write probability.
    pub fn p_for_write_probability(&self, p_w: T) -> T {
        ((p_w - self.p_nw) / self.t_w).max(T::zero())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probabilities<T> {
    pub p_w: T,
    pub p_r: T,
    pub p_wr: T,
    pub p_r_given_w: T,
}

pub fn predict_probabilities<T: Scalar>(params: &RateModelParams<T>) -> Result<Probabilities<T>> {
    params.validate()?;
    let RateModelParams { p, t_w, t_r, eta_a, p_eg, p_nw, p_nr } = *params;
    let spont = p * (T::one() - eta_a) * p_eg * t_r;
    let p_w = p * t_w + p_nw;
    let p_r = p * eta_a * t_r + spont + p_nr;
    let p_wr = p_w * eta_a * t_r + p_w * spont + p_w * p_nr;
    if p_w <= T::zero() {
        return Err(Error::DivisionDegenerate("p_w = 0"));
    }
    Ok(Probabilities { p_w, p_r, p_wr, p_r_given_w: p_wr / p_w })
}

pub fn predict_cross_correlation<T: Scalar>(params: &RateModelParams<T>) -> Result<T> {
    let pr = predict_probabilities(params)?;
    if pr.p_r <= T::zero() {
        return Err(Error::DivisionDegenerate("p_r = 0"));
    }
    Ok(pr.p_wr / (pr.p_w * pr.p_r))
}

/// Storage efficiency η as a function of detected write probability,
/// piecewise linear with clamped ends.
#[derive(Clone, Debug, PartialEq)]
pub struct EfficiencyTable<T> {
    points: Vec<(T, T)>,
}

impl<T: Scalar> EfficiencyTable<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyTable);
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidTable("p_w must be strictly increasing".into()));
            }
        }
        if let Some(&(_, eta)) = points.iter().find(|(_, eta)| !(*eta >= T::zero() && *eta <= T::one())) {
            return Err(Error::InvalidTable(format!("efficiency {eta} outside [0, 1]")));
        }
        Ok(Self { points })
    }

    pub fn constant(eta: T) -> Result<Self> {
        Self::new(vec![(T::zero(), eta)])
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn eval(&self, p_w: T) -> T {
        let pts = &self.points;
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        if p_w <= first.0 {
            return first.1;
        }
        if p_w >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|&(x, _)| x <= p_w);
        let ((x0, y0), (x1, y1)) = (pts[i - 1], pts[i]);
        y0 + (y1 - y0) * (p_w - x0) / (x1 - x0)
    }

    /// Reads a CSV with header `p_w,eta`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let headers = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["p_w", "eta"] {
            return Err(Error::Parse { line: 1, msg: "expected header `p_w,eta`".into() });
        }
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let num = |i: usize| -> Result<T> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .map(T::lit)
                    .ok_or_else(|| Error::Parse { line, msg: format!("bad number in column {}", i + 1) })
            };
            points.push((num(0)?, num(1)?));
        }
        Self::new(points)
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Parse { line, msg: format!("{kind:?}") },
    }
}

/// Parameters for read photons that were stored in the Rydberg memory:
/// `t_r = η(p_w) · 0.09` and the reduced read noise.
pub fn with_storage<T: Scalar>(params: &RateModelParams<T>, eff: &EfficiencyTable<T>, p_w_point: T) -> RateModelParams<T> {
    RateModelParams {
        t_r: eff.eval(p_w_point) * T::lit(READ_TRANSMISSION),
        p_nr: T::lit(STORED_P_NR),
        ..*params
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PegFit<T> {
    pub p_eg: T,
    pub residual_norm: T,
    /// The optimum sits on a bound of `[0, 1]`.
    pub at_boundary: bool,
}

/// Least-squares fit of the branching ratio `p_eg` to measured
/// `(p_w, p_r|w)` pairs, all other parameters held fixed.
pub fn fit_p_eg<T: Scalar>(params: &RateModelParams<T>, data: &[(T, T)]) -> Result<PegFit<T>> {
    if data.len() < 3 {
        return Err(Error::InsufficientData { need: 3, got: data.len() });
    }
    let residual_sq = |p_eg: T| -> T {
        data.iter()
            .map(|&(p_w, measured)| {
                let p = params.p_for_write_probability(p_w).min(T::one() - T::epsilon());
                let model = RateModelParams { p, p_eg, ..*params };
                let predicted = predict_probabilities(&model).map(|x| x.p_r_given_w).unwrap_or_else(|_| T::nan());
                (predicted - measured) * (predicted - measured)
            })
            .sum()
    };
    let (p_eg, r2) = roots::golden_section_min(residual_sq, T::zero(), T::one(), T::lit(1e-8));
    let edge = T::lit(1e-6);
    Ok(PegFit { p_eg, residual_norm: r2.sqrt(), at_boundary: p_eg < edge || p_eg > T::one() - edge })
}
