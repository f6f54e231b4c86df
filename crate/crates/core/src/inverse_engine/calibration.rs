use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PINNED: &str = include_str!("../../calibration/constants.json");

/// Seeded corpus on which the calibration constants were measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub count: usize,
    pub c: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub epsilon: String,
    pub n_prime_divisor: usize,
}

/// Pinned constants, echoed into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Calibration {
    /// `A` in `m <= 2 A log n`.
    pub a: f64,
    pub c1: f64,
    pub dual_constant: u64,
    /// Acceptance multiplier on `k^-r |kX|` inside `gap_fit`.
    pub k_fit: f64,
    /// `eps` in the budget precondition `n^eps <= n'`.
    pub budget_epsilon: f64,
    /// Max of `|Q| rho n^(r/2)` over the corpus.
    pub inverse_k: f64,
    /// Same with `n'` in place of `n`.
    pub budget_k: f64,
    /// Max of `|P| rho n'^(r/2)` over the continuous corpus.
    pub continuous_k: f64,
    /// Min of `vol / n^(3/2 - 0.2)` over the rank-1 optimality samples.
    pub optimality_c: f64,
    /// Min of `rho n^C` over the corpus.
    pub forward_kappa: f64,
    pub corpus: CorpusSpec,
}

impl Calibration {
    pub fn pinned() -> Self {
        serde_json::from_str(PINNED).expect("checked-in calibration parses")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidInput(format!("calibration: {e}")))
    }

    pub fn corpus_epsilon(&self) -> Result<crate::Rational> {
        crate::rational::parse(&self.corpus.epsilon)
    }
}

impl Default for Calibration {
    fn default() -> Self {
        Self::pinned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_parses() {
        let c = Calibration::pinned();
        assert_eq!(c.dual_constant, 200);
        assert!(c.inverse_k > 0.0 && c.forward_kappa > 0.0);
        assert_eq!(c.corpus_epsilon().unwrap(), crate::rational::ratio(1, 10));
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(PINNED).unwrap();
        v["extra"] = 1.into();
        assert!(Calibration::from_json(&v.to_string()).is_err());
    }
}
