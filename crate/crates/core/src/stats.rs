//! Monte Carlo estimates, Wilson intervals and deterministic parallel trials.

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "WORDPERC_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval95 {
    pub lo: f64,
    pub hi: f64,
}

/// Wilson score interval for `successes` out of `trials` at normal quantile `z`.
pub fn wilson(successes: u64, trials: u64, z: f64) -> Interval95 {
    if trials == 0 {
        return Interval95 { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval95 { lo: (center - half).max(0.0), hi: (center + half).min(1.0) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub point: f64,
    pub wilson95: Interval95,
    /// Stream ids used by the trials, `[first, last]`.
    pub seed_range: (u64, u64),
}

impl Estimate {
    pub fn new(successes: u64, trials: u64, first_stream: u64) -> Self {
        let point = if trials == 0 { 0.0 } else { successes as f64 / trials as f64 };
        let mut ci = wilson(successes, trials, Z95);
        // Guard against rounding pushing the endpoint past the point estimate.
        ci.lo = ci.lo.min(point);
        ci.hi = ci.hi.max(point);
        Self {
            successes,
            trials,
            point,
            wilson95: ci,
            seed_range: (first_stream, first_stream + trials.saturating_sub(1)),
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.wilson95.lo <= value && value <= self.wilson95.hi
    }
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    })
}

/// Runs `f(t)` for `t in 0..trials` on the shared pool; results come back in trial order.
pub fn par_trials<T, F>(trials: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    pool().install(|| (0..trials).into_par_iter().map(&f).collect::<Result<Vec<T>>>())
}

/// Number of trials for which `event(t)` holds.
pub fn count_successes<F>(trials: u64, event: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    Ok(par_trials(trials, event)?.into_iter().filter(|&b| b).count() as u64)
}

/// Upper tail `P(Bin(n, q) >= k)`.
pub fn binomial_upper_tail(n: u64, q: f64, k: u64) -> Result<f64> {
    use statrs::distribution::{Binomial, DiscreteCDF};
    if k == 0 {
        return Ok(1.0);
    }
    let b = Binomial::new(q, n).map_err(|e| Error::Internal(format!("binomial({n}, {q}): {e}")))?;
    Ok(b.sf(k - 1))
}

/// Chi-square critical value with `df` degrees of freedom at upper-tail level `alpha`.
pub fn chi_square_critical(df: u64, alpha: f64) -> Result<f64> {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let c = ChiSquared::new(df as f64).map_err(|e| Error::Internal(format!("chi-square({df}): {e}")))?;
    Ok(c.inverse_cdf(1.0 - alpha))
}

/// Pearson statistic of observed counts against expected probabilities.
pub fn chi_square_statistic(observed: &[u64], probabilities: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probabilities)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

/// Least-squares slope and intercept of `y` on `x`, with the coefficient of determination.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = x.len() as f64;
    if x.len() < 2 || x.len() != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn wilson_basics() {
        let e = Estimate::new(0, 1, 0);
        assert_eq!(e.point, 0.0);
        assert!(e.wilson95.lo == 0.0 && (e.wilson95.hi - 0.7935).abs() < 1e-3);
        let e = Estimate::new(1, 1, 0);
        assert!(e.wilson95.hi == 1.0 && (e.wilson95.lo - 0.2065).abs() < 1e-3);
        let e = Estimate::new(30, 100, 5);
        assert!(e.contains(0.3));
        assert_eq!(e.seed_range, (5, 104));
    }

    #[test]
    fn wilson_coverage() {
        let theta = 0.3;
        let meta = 1000u64;
        let covered = (0..meta)
            .filter(|&m| {
                let mut rng = RngStream::new(99, m);
                let s = (0..200).filter(|_| rng.bernoulli(theta)).count() as u64;
                Estimate::new(s, 200, 0).contains(theta)
            })
            .count();
        assert!(covered as f64 >= 0.93 * meta as f64, "coverage {covered}");
    }

    #[test]
    fn site_event_estimate() {
        let p = 0.3;
        let hits = count_successes(100_000, |t| Ok(RngStream::new(1, t).bernoulli(p))).unwrap();
        let est = Estimate::new(hits, 100_000, 0);
        assert!((est.point - p).abs() <= 0.006);
    }

    #[test]
    fn distribution_helpers() {
        assert!((binomial_upper_tail(4, 0.5, 2).unwrap() - 11.0 / 16.0).abs() < 1e-12);
        assert_eq!(binomial_upper_tail(4, 0.5, 0).unwrap(), 1.0);
        assert!((chi_square_critical(15, 1e-3).unwrap() - 37.697).abs() < 1e-2);
        let (slope, icept, r2) = linear_fit(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((slope - 2.0).abs() < 1e-12 && icept.abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
