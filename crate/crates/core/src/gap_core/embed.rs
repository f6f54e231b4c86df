use std::collections::{BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiset::StepMultiset;
use crate::prime::next_prime;
use crate::rational::{self, Rational};
use crate::walks::{self, EtaSpec};

/// Image of an integer multiset in `F_p` together with what was checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingCertificate {
    #[serde(with = "crate::rational::biguint_string")]
    pub p: BigUint,
    /// `v mod p` for every value in ascending order of the original values.
    #[serde(with = "crate::rational::biguint_vec_string")]
    pub values: Vec<BigUint>,
    pub order: usize,
    /// `2 k max|v| < p`, so reduction mod `p` is injective on sums of up to
    /// `k` values.
    pub range_certified: bool,
}

/// Smallest prime `p >= 2^n (sum |v_i| + 1)` and `V mod p`.
pub fn freiman_embed(v: &StepMultiset, k: usize) -> Result<EmbeddingCertificate> {
    if k == 0 {
        return Err(Error::InvalidInput("order k must be positive".into()));
    }
    let bound = (BigUint::one() << v.len()) * (BigUint::from(v.sum_abs()) + 1u32);
    let p = next_prime(&bound);
    let p_int = BigInt::from(p.clone());
    let values = v
        .values()
        .into_iter()
        .map(|x| {
            let r = BigInt::from(x) % &p_int;
            let r = if r < BigInt::zero() { r + &p_int } else { r };
            r.to_biguint().expect("reduced residue is non-negative")
        })
        .collect();
    let spread = BigUint::from(2 * k as u128) * BigUint::from(v.max_abs());
    Ok(EmbeddingCertificate {
        range_certified: spread < p,
        p,
        values,
        order: k,
    })
}

impl EmbeddingCertificate {
    /// Checks by enumeration that `x -> x mod p` is injective on
    /// `union_{i <= k} i X` for the distinct values `X`.
    pub fn verify_sums(&self, v: &StepMultiset, cap: usize) -> Result<bool> {
        let distinct: Vec<i128> = v.distinct().map(|x| x as i128).collect();
        let mut all: BTreeSet<i128> = BTreeSet::from([0]);
        let mut layer: BTreeSet<i128> = BTreeSet::from([0]);
        for _ in 0..self.order {
            let mut next = BTreeSet::new();
            for &s in &layer {
                for &x in &distinct {
                    next.insert(s + x);
                }
            }
            if next.len() > cap {
                return Err(Error::BudgetExceeded {
                    what: "sums checked for injectivity",
                    needed: next.len() as u128,
                    budget: cap as u128,
                });
            }
            all.extend(next.iter().copied());
            layer = next;
        }
        let p = BigInt::from(self.p.clone());
        let mut seen: HashMap<BigInt, i128> = HashMap::new();
        for s in all {
            let r = ((BigInt::from(s) % &p) + &p) % &p;
            if seen.insert(r, s).is_some() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `(rho(V), rho(V_p))`, the latter by folding the exact integer
    /// distribution by residue.
    pub fn rho_pair(&self, v: &StepMultiset, eta: &EtaSpec) -> Result<(Rational, Rational)> {
        let dist = walks::exact_distribution(v, eta)?;
        let over_z = dist
            .support
            .values()
            .max()
            .cloned()
            .unwrap_or_else(Rational::zero);
        let p = BigInt::from(self.p.clone());
        let mut folded: HashMap<BigInt, Rational> = HashMap::new();
        for (&x, q) in &dist.support {
            let r = ((BigInt::from(x) % &p) + &p) % &p;
            *folded.entry(r).or_insert_with(Rational::zero) += q;
        }
        let over_p = folded.into_values().max().unwrap_or_else(Rational::zero);
        Ok((over_z, over_p))
    }

    pub fn p_u64(&self) -> Option<u64> {
        self.p.to_u64()
    }

    pub fn p_string(&self) -> String {
        self.p.to_string()
    }

    pub fn log2_p(&self) -> f64 {
        rational::ln_biguint(&self.p) / std::f64::consts::LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ms(v: &[i64]) -> StepMultiset {
        StepMultiset::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn prime_examples() {
        assert_eq!(
            freiman_embed(&ms(&[1, 2]), 2).unwrap().p,
            BigUint::from(17u32)
        );
        assert_eq!(freiman_embed(&ms(&[0]), 1).unwrap().p, BigUint::from(2u32));
        let c = freiman_embed(&ms(&[1, 2, 3]), 3).unwrap();
        assert_eq!(c.p, BigUint::from(59u32));
        assert!(c.range_certified);
        let (z, p) = c.rho_pair(&ms(&[1, 2, 3]), &EtaSpec::bernoulli()).unwrap();
        assert_eq!((z, p), (ratio(1, 4), ratio(1, 4)));
        assert!(c.verify_sums(&ms(&[1, 2, 3]), 10_000).unwrap());
    }

    #[test]
    fn negative_values_reduce() {
        let c = freiman_embed(&ms(&[-1, 4]), 2).unwrap();
        // 2^2 * 6 = 24 -> 29
        assert_eq!(c.p, BigUint::from(29u32));
        assert_eq!(c.values, vec![BigUint::from(28u32), BigUint::from(4u32)]);
    }

    #[test]
    fn big_prime_for_long_inputs() {
        let v = StepMultiset::new(1..=200).unwrap();
        let c = freiman_embed(&v, 200).unwrap();
        assert!(c.p_u64().is_none());
        assert!(c.log2_p() > 200.0);
        assert!(c.range_certified);
    }

    #[test]
    fn small_modulus_breaks_relation() {
        let c = EmbeddingCertificate {
            p: BigUint::from(5u32),
            values: vec![],
            order: 2,
            range_certified: false,
        };
        assert!(!c.verify_sums(&ms(&[1, 2, 3]), 1000).unwrap());
    }
}
