//! Goodness-of-fit checks for Monte Carlo histograms.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: u32,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against expected probabilities.
///
/// Bins with expected probability at or below `floor` are left out; a count
/// landing in one of them makes the fit fail outright (`p_value = 0`). With
/// a single live bin there is nothing to test and the fit passes trivially.
pub fn chi_square(counts: &[u64], probabilities: &[f64], floor: f64) -> ChiSquare {
    assert_eq!(counts.len(), probabilities.len());
    let total: u64 = counts.iter().sum();
    let n = total as f64;
    let mut statistic = 0.0;
    let mut live = 0u32;
    let mut impossible = false;
    for (&c, &p) in counts.iter().zip(probabilities) {
        if p <= floor {
            impossible |= c > 0;
            continue;
        }
        live += 1;
        let e = n * p;
        statistic += (c as f64 - e).powi(2) / e;
    }
    let dof = live.saturating_sub(1);
    let p_value = if impossible {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
        1.0 - dist.cdf(statistic)
    };
    ChiSquare {
        statistic,
        dof,
        p_value,
    }
}

/// Whether `count` out of `trials` lies within `k` binomial standard
/// deviations of `trials · p`.
pub fn within_binomial_sigma(count: u64, trials: u64, p: f64, k: f64) -> bool {
    let n = trials as f64;
    let sigma = (n * p * (1.0 - p)).sqrt();
    (count as f64 - n * p).abs() <= k * sigma
}
