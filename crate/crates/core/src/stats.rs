//! Small statistical helpers shared by the learners, testers and harness.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: 0.0, n: 0 }
    }

    /// Mean of 0/1 outcomes.
    pub fn from_hits(hits: usize, n: usize) -> Self {
        let p = hits as f64 / n.max(1) as f64;
        Estimate {
            value: p,
            stderr: (p * (1.0 - p) / n.max(1) as f64).sqrt(),
            n,
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate { value: 0.0, stderr: 0.0, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            value: mean,
            stderr: (var / n as f64).sqrt(),
            n,
        }
    }
}

/// Wilson score interval for `successes` out of `n` at the given two-sided
/// confidence level.
pub fn wilson_interval(successes: usize, n: usize, confidence: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + confidence / 2.0);
    let n_f = n as f64;
    let p = successes as f64 / n_f;
    let denom = 1.0 + z * z / n_f;
    let centre = (p + z * z / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z * z / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `ceil(x)` that treats values within 1e-9 of an integer as that integer,
/// so `2 / 0.1` gives 20 rather than 21.
pub fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

pub fn ceil_usize(x: f64) -> usize {
    ceil_tol(x).max(0.0) as usize
}
