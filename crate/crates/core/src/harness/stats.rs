use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SspError};
use crate::rng;

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(SspError::BadParam("need at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SspError::BadParam("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
        n: x.len(),
    })
}

/// Fit of `log y` against `log x`; pairs with nonpositive entries are dropped.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    ols(&lx, &ly)
}

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomWalkEstimate {
    pub n: u64,
    pub p: f64,
    pub d: usize,
    pub trials: usize,
    pub estimate: f64,
    pub std_error: f64,
    /// `0.02 sqrt(n p (1-p) log d) - 1.5`.
    pub bound: f64,
}

/// Monte Carlo estimate of `E[max_i Z_i]` over `d` independent walks of `n`
/// steps `+ (1-p)` w.p. `p` and `-p` otherwise. Each walk is `Bin(n, p) - n p`.
pub fn rw_max_expectation(n: u64, p: f64, d: usize, trials: usize, seed: u64) -> Result<RandomWalkEstimate> {
    if n == 0 || d == 0 || trials == 0 {
        return Err(SspError::BadParam("need n, d and trials >= 1".into()));
    }
    if !(0.5..=1.0 - 1.0 / n as f64).contains(&p) {
        return Err(SspError::BadParam(format!("p = {p} outside [1/2, 1 - 1/n]")));
    }
    let bin = Binomial::new(n, p).map_err(|e| SspError::BadParam(e.to_string()))?;
    let mut r = rng::seeded(seed);
    let shift = n as f64 * p;
    let maxima: Vec<f64> = (0..trials)
        .map(|_| {
            (0..d)
                .map(|_| bin.sample(&mut r) as f64 - shift)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let (estimate, std_error) = mean_se(&maxima);
    Ok(RandomWalkEstimate {
        n,
        p,
        d,
        trials,
        estimate,
        std_error,
        bound: rw_bound(n, p, d),
    })
}

pub fn rw_bound(n: u64, p: f64, d: usize) -> f64 {
    0.02 * (n as f64 * p * (1.0 - p) * (d as f64).ln()).sqrt() - 1.5
}

/// Smallest `n` meeting `n >= 200 p/(1-p) log d`.
pub fn rw_min_steps(p: f64, d: usize) -> u64 {
    (200.0 * p / (1.0 - p) * (d as f64).ln()).ceil() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_exact_line() {
        let f = ols(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let g = loglog_fit(&[1.0, 4.0, 16.0], &[1.0, 2.0, 4.0]).unwrap();
        assert!((g.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_walk_is_centered() {
        let e = rw_max_expectation(1000, 0.5, 1, 20_000, 3).unwrap();
        assert!(e.estimate.abs() < 3.0 * e.std_error, "{e:?}");
        assert!(rw_max_expectation(10, 0.95, 3, 5, 0).is_err());
    }

    #[test]
    fn min_steps() {
        assert_eq!(rw_min_steps(0.5, 100), (200.0 * 100f64.ln()).ceil() as u64);
    }
}
