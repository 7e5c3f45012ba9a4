//! Log-logistic failure model and the effective-lifetime wear metric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReliabilityError {
    #[error("argument out of domain: {0}")]
    DomainError(String),
}

/// Log-logistic lifetime distribution over P/E cycles.
///
/// `mu` is the log of the median lifetime, `sigma` the shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureModelParams {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for FailureModelParams {
    fn default() -> Self {
        FailureModelParams {
            mu: 3000f64.ln(),
            sigma: 0.1,
        }
    }
}

impl FailureModelParams {
    pub fn validate(&self) -> Result<(), ReliabilityError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ReliabilityError::DomainError(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() {
            return Err(ReliabilityError::DomainError("mu must be finite".into()));
        }
        Ok(())
    }
}

/// Weights of the effective-lifetime metric: `k * t + k_p * P(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeParams {
    pub k: f64,
    pub k_p: f64,
}

impl Default for LifetimeParams {
    fn default() -> Self {
        LifetimeParams { k: 1.0, k_p: 0.0 }
    }
}

impl LifetimeParams {
    pub fn validate(&self) -> Result<(), ReliabilityError> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(ReliabilityError::DomainError(format!(
                "k must be > 0, got {}",
                self.k
            )));
        }
        if !(self.k_p >= 0.0 && self.k_p.is_finite()) {
            return Err(ReliabilityError::DomainError(format!(
                "k_p must be >= 0, got {}",
                self.k_p
            )));
        }
        Ok(())
    }
}

/// Numerically stable logistic function `1 / (1 + exp(-z))`.
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        // exp(z) / (1 + exp(z)) keeps tiny tails representable
        let ez = z.exp();
        ez / (1.0 + ez)
    }
}

/// Cumulative probability that a device with `t` P/E cycles has failed.
pub fn failure_probability(t: f64, p: &FailureModelParams) -> Result<f64, ReliabilityError> {
    if !(t > 0.0) {
        return Err(ReliabilityError::DomainError(format!(
            "P/E count must be > 0, got {t}"
        )));
    }
    Ok(logistic((t.ln() - p.mu) / p.sigma))
}

/// `failure_probability` extended to `t = 0` by its limit.
pub fn failure_probability_or_zero(t: f64, p: &FailureModelParams) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        logistic((t.ln() - p.mu) / p.sigma)
    }
}

/// Raw wear plus a penalty proportional to the current failure probability.
pub fn effective_lifetime(t: f64, lp: &LifetimeParams, fp: &FailureModelParams) -> f64 {
    let t = t.max(0.0);
    lp.k * t + lp.k_p * failure_probability_or_zero(t, fp)
}

/// Probability that at least one of the devices has failed.
pub fn array_failure_probability(probs: &[f64]) -> f64 {
    let survive: f64 = probs.iter().map(|p| 1.0 - p.clamp(0.0, 1.0)).product();
    (1.0 - survive).clamp(0.0, 1.0)
}

/// Wear level at which a device reaches `target_p` failure probability.
pub fn initial_wear_for_probability(
    target_p: f64,
    fp: &FailureModelParams,
) -> Result<f64, ReliabilityError> {
    if !(target_p > 0.0 && target_p < 1.0) {
        return Err(ReliabilityError::DomainError(format!(
            "target probability must be in (0, 1), got {target_p}"
        )));
    }
    let log_odds = (target_p / (1.0 - target_p)).ln();
    Ok((fp.mu + fp.sigma * log_odds).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_like() -> FailureModelParams {
        FailureModelParams {
            mu: 3000f64.ln(),
            sigma: 0.1,
        }
    }

    #[test]
    fn median_is_half() {
        let p = paper_like();
        let v = failure_probability(3000.0, &p).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn deep_lower_tail_is_tiny_but_positive() {
        let v = failure_probability(1.0, &paper_like()).unwrap();
        assert!(v > 0.0 && v < 1e-30);
    }

    #[test]
    fn rejects_non_positive_wear() {
        assert!(failure_probability(0.0, &paper_like()).is_err());
        assert!(failure_probability(-1.0, &paper_like()).is_err());
    }

    #[test]
    fn effective_lifetime_limits() {
        let fp = paper_like();
        let lp = LifetimeParams { k: 1.0, k_p: 0.0 };
        assert_eq!(effective_lifetime(1234.5, &lp, &fp), 1234.5);
        let lp = LifetimeParams { k: 1.0, k_p: 1000.0 };
        assert_eq!(effective_lifetime(0.0, &lp, &fp), 0.0);
    }

    #[test]
    fn array_probability_examples() {
        assert_eq!(array_failure_probability(&[0.0, 0.0, 0.0]), 0.0);
        assert!((array_failure_probability(&[0.5, 0.5]) - 0.75).abs() < 1e-15);
        assert_eq!(array_failure_probability(&[1.0, 0.0]), 1.0);
    }

    #[test]
    fn inverse_rejects_bounds() {
        let fp = paper_like();
        assert!(initial_wear_for_probability(0.0, &fp).is_err());
        assert!(initial_wear_for_probability(1.0, &fp).is_err());
        let t = initial_wear_for_probability(0.5, &fp).unwrap();
        assert!((t - 3000.0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(FailureModelParams { mu: 1.0, sigma: 0.0 }.validate().is_err());
        assert!(LifetimeParams { k: 0.0, k_p: 1.0 }.validate().is_err());
        assert!(LifetimeParams { k: 1.0, k_p: -1.0 }.validate().is_err());
    }
}
