//! Separable regularizers over occupancy vectors.
//!
//! `LrNorm { p }` is `psi_p(q) = p (-1 + sum q^(1 + 1/p))`. It interpolates
//! between the squared Euclidean norm (`p = 1`) and negative entropy
//! (`p -> inf`), and unlike entropy its gradient `(p + 1) q^(1/p)` stays finite
//! at the boundary. `NegativeEntropy` is `sum q (log q - 1)`.
//!
//! Conventions: `0^(1/p) = 0` and `0 log 0 = 0`. The entropy gradient at 0 is
//! `-inf`; callers working near the boundary use the multiplicative update
//! and never need it.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SspError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    LrNorm { p: f64 },
    NegativeEntropy,
}

fn check_domain(q: &[f64]) -> Result<()> {
    match q.iter().position(|&x| !(x >= 0.0) || !x.is_finite()) {
        Some(i) => Err(SspError::Domain(format!("entry {i} is {}", q[i]))),
        None => Ok(()),
    }
}

impl Regularizer {
    /// `p >= 1` is accepted here so that the Euclidean end of the family can be
    /// evaluated; the tuned learners require `p > 1`.
    pub fn lr_norm(p: f64) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(SspError::BadParam(format!("l_r-norm parameter p = {p} must be >= 1")));
        }
        Ok(Regularizer::LrNorm { p })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::LrNorm { .. } => "lr_norm",
            Regularizer::NegativeEntropy => "neg_entropy",
        }
    }

    pub fn value(&self, q: &[f64]) -> Result<f64> {
        check_domain(q)?;
        Ok(match *self {
            Regularizer::LrNorm { p } => {
                let e = 1.0 + 1.0 / p;
                p * (-1.0 + q.iter().map(|&x| x.powf(e)).sum::<f64>())
            }
            Regularizer::NegativeEntropy => q
                .iter()
                .map(|&x| if x > 0.0 { x * (x.ln() - 1.0) } else { 0.0 })
                .sum(),
        })
    }

    #[inline]
    pub fn gradient_at(&self, x: f64) -> f64 {
        match *self {
            Regularizer::LrNorm { p } => (p + 1.0) * x.powf(1.0 / p),
            Regularizer::NegativeEntropy => {
                if x > 0.0 {
                    x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Diagonal of the inverse Hessian at a single coordinate.
    #[inline]
    pub fn hessian_inv_at(&self, x: f64) -> f64 {
        match *self {
            Regularizer::LrNorm { p } => {
                if x > 0.0 {
                    p / (p + 1.0) * x.powf(1.0 - 1.0 / p)
                } else {
                    0.0
                }
            }
            Regularizer::NegativeEntropy => x,
        }
    }

    pub fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_domain(q)?;
        Ok(q.iter().map(|&x| self.gradient_at(x)).collect())
    }

    pub fn hessian_inv_diag(&self, q: &[f64]) -> Result<Vec<f64>> {
        check_domain(q)?;
        Ok(q.iter().map(|&x| self.hessian_inv_at(x)).collect())
    }

    /// Local dual norm `sum c_i^2 / psi''(q_i)` of a sparse vector.
    pub fn local_norm_sq(&self, q: &[f64], entries: &[(usize, f64)]) -> f64 {
        entries
            .iter()
            .map(|&(i, c)| c * c * self.hessian_inv_at(q[i]))
            .sum()
    }

    /// `D(q, q_ref) = psi(q) - psi(q_ref) - <grad psi(q_ref), q - q_ref>`.
    pub fn bregman(&self, q: &[f64], q_ref: &[f64]) -> Result<f64> {
        if q.len() != q_ref.len() {
            return Err(SspError::Domain("length mismatch".into()));
        }
        check_domain(q)?;
        check_domain(q_ref)?;
        let mut total = 0.0;
        match *self {
            Regularizer::LrNorm { p } => {
                let r = 1.0 / p;
                for (&x, &y) in q.iter().zip(q_ref) {
                    if x == y {
                        continue;
                    }
                    let yr = y.powf(r);
                    let term = y * yr + x * (p * x.powf(r) - (p + 1.0) * yr);
                    // Each coordinate is a one-dimensional divergence, so only
                    // rounding can make it negative.
                    total += term.max(0.0);
                }
            }
            Regularizer::NegativeEntropy => {
                for (i, (&x, &y)) in q.iter().zip(q_ref).enumerate() {
                    if x == y {
                        continue;
                    }
                    if x == 0.0 {
                        total += y;
                    } else if y == 0.0 {
                        return Err(SspError::Domain(format!(
                            "reference vanishes at {i} where q is positive"
                        )));
                    } else {
                        total += (x * (x / y).ln() - x + y).max(0.0);
                    }
                }
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        let r = Regularizer::lr_norm(3.0).unwrap();
        assert_eq!(r.value(&[0.0, 0.0]).unwrap(), -3.0);
        assert_eq!(Regularizer::lr_norm(1.0).unwrap().value(&[4.0]).unwrap(), 15.0);
        assert_eq!(Regularizer::NegativeEntropy.value(&[1.0, 1.0]).unwrap(), -2.0);
        assert!(r.value(&[-1.0]).is_err());
        assert!(Regularizer::lr_norm(0.5).is_err());
    }

    #[test]
    fn gradients_and_inverse_hessians() {
        let r = Regularizer::lr_norm(2.0).unwrap();
        assert_eq!(r.gradient(&[1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        assert_eq!(r.gradient(&[0.0]).unwrap(), vec![0.0]);
        assert!((r.gradient(&[8.0]).unwrap()[0] - 8.485_281_374_238_57).abs() < 1e-12);
        assert!((r.hessian_inv_diag(&[1.0]).unwrap()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.hessian_inv_diag(&[0.0]).unwrap(), vec![0.0]);
        let ne = Regularizer::NegativeEntropy;
        assert_eq!(ne.hessian_inv_diag(&[0.3, 0.7]).unwrap(), vec![0.3, 0.7]);
        assert_eq!(ne.gradient(&[0.0]).unwrap()[0], f64::NEG_INFINITY);
    }

    #[test]
    fn bregman_examples() {
        let x = [0.0, 1.0];
        let y = [0.5, 0.5];
        let kl = Regularizer::NegativeEntropy.bregman(&x, &y).unwrap();
        assert!((kl - 2f64.ln()).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for p in [4.0, 8.0, 16.0, 32.0] {
            let d = Regularizer::lr_norm(p).unwrap().bregman(&x, &y).unwrap();
            let err = (d - kl).abs();
            assert!(err < last);
            last = err;
        }
        let e = Regularizer::lr_norm(1.0).unwrap();
        let a = [0.3, 2.0, 0.0];
        let b = [1.1, 0.5, 0.7];
        let sq: f64 = a.iter().zip(&b).map(|(u, v)| (u - v) * (u - v)).sum();
        assert!((e.bregman(&a, &b).unwrap() - sq).abs() < 1e-12);
        assert_eq!(e.bregman(&a, &a).unwrap(), 0.0);
    }
}
