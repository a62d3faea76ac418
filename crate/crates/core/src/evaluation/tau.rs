//! Mapping theoretical merit scores onto plausibility probabilities.

use std::f64::consts::PI;

use super::{EvalError, GroundTruth, TheoryScores};

/// `T(tau) = sigmoid(tan(pi * (tau_hat - 1/2)) + b)` with
/// `tau_hat = (tau - tau_min) / (tau_max - tau_min)`.
///
/// `b` is chosen so that `T(tau_mid) = 1/2`, where `tau_mid` is the mean
/// score of discovered materials. `T` is 0 at `tau_min` (and below) and 1 at
/// `tau_max` (and above).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauTransform {
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_mid: f64,
    pub b: f64,
}

impl TauTransform {
    pub fn new(tau_min: f64, tau_max: f64, tau_mid: f64) -> Result<Self, EvalError> {
        if !(tau_min.is_finite() && tau_max.is_finite() && tau_mid.is_finite()) {
            return Err(EvalError::NonFinite("tau bounds".into()));
        }
        if tau_max <= tau_min {
            return Err(EvalError::DegenerateScores);
        }
        if !(tau_min < tau_mid && tau_mid < tau_max) {
            return Err(EvalError::MidOutOfRange {
                tau_mid,
                tau_min,
                tau_max,
            });
        }
        let mut t = TauTransform {
            tau_min,
            tau_max,
            tau_mid,
            b: 0.0,
        };
        t.b = -(PI * (t.normalize(tau_mid) - 0.5)).tan();
        Ok(t)
    }

    pub fn normalize(&self, tau: f64) -> f64 {
        (tau - self.tau_min) / (self.tau_max - self.tau_min)
    }

    /// The pre-sigmoid value; `-inf`/`+inf` at and beyond the range ends.
    pub fn argument(&self, tau: f64) -> f64 {
        let h = self.normalize(tau);
        if h <= 0.0 {
            f64::NEG_INFINITY
        } else if h >= 1.0 {
            f64::INFINITY
        } else {
            (PI * (h - 0.5)).tan() + self.b
        }
    }

    pub fn apply(&self, tau: f64) -> f64 {
        sigmoid(self.argument(tau))
    }
}

fn sigmoid(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Fits `T` on the global score range with `tau_mid` the mean score of the
/// discovered materials that have a score.
pub fn fit_tau_transform(scores: &TheoryScores, gt: &GroundTruth) -> Result<TauTransform, EvalError> {
    let (lo, hi) = scores.range().ok_or(EvalError::DegenerateScores)?;
    if hi <= lo {
        return Err(EvalError::DegenerateScores);
    }
    let discovered: Vec<f64> = gt.materials().filter_map(|m| scores.get(m)).collect();
    if discovered.is_empty() {
        return Err(EvalError::NoDiscoveredScores);
    }
    let mid = discovered.iter().sum::<f64>() / discovered.len() as f64;
    TauTransform::new(lo, hi, mid)
}
