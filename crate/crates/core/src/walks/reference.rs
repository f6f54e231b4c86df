//! Reference quantities for the forward theorems and the brute-force oracle.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::{rho, EtaSpec};
use crate::error::{Error, Result};
use crate::multiset::StepMultiset;
use crate::rational::Rational;

/// Largest number of atom assignments the brute-force oracle will visit.
pub const BRUTEFORCE_LIMIT: u128 = 10_000_000;

/// `rho` by enumerating every assignment of atoms to steps.
pub fn rho_bruteforce(v: &StepMultiset, eta: &EtaSpec) -> Result<Rational> {
    let values = v.values();
    let atoms = eta.atoms();
    let needed = (atoms.len() as u128)
        .checked_pow(values.len() as u32)
        .unwrap_or(u128::MAX);
    if needed > BRUTEFORCE_LIMIT {
        return Err(Error::BudgetExceeded {
            what: "brute-force assignments",
            needed,
            budget: BRUTEFORCE_LIMIT,
        });
    }
    let (l, weights) = eta.integer_weights();
    let weights: Vec<u128> = weights
        .iter()
        .map(|w| w.to_u128())
        .collect::<Option<_>>()
        .ok_or_else(|| Error::InvalidInput("atom weights overflow u128".into()))?;
    let mut hits: HashMap<i128, u128> = HashMap::new();
    let mut stack = vec![(0usize, 0i128, 1u128)];
    while let Some((depth, sum, weight)) = stack.pop() {
        if depth == values.len() {
            *hits.entry(sum).or_insert(0) += weight;
            continue;
        }
        for ((a, _), &w) in atoms.iter().zip(&weights) {
            let next = weight
                .checked_mul(w)
                .ok_or_else(|| Error::InvalidInput("brute-force weights overflow u128".into()))?;
            stack.push((depth + 1, sum + values[depth] as i128 * *a as i128, next));
        }
    }
    let best = hits.values().copied().max().unwrap_or(0);
    let mass = l.pow(values.len() as u32);
    Ok(Rational::new(BigInt::from(best), mass))
}

/// `C(n, floor(n/2)) / 2^n`.
pub fn erdos_bound(n: usize) -> Rational {
    let k = n / 2;
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    Rational::new(BigInt::from(c), BigInt::from(2u32).pow(n as u32))
}

/// `V0 = {-(n-1)/2, ..., (n-1)/2}` and its concentration probability.
pub fn stanley_reference(n: usize) -> Result<(StepMultiset, Rational)> {
    if n % 2 == 0 {
        return Err(Error::InvalidInput(format!("n = {n} must be odd")));
    }
    let half = (n / 2) as i64;
    let v0 = StepMultiset::new(-half..=half)?;
    let r = rho(&v0, &EtaSpec::bernoulli())?.rho;
    Ok((v0, r))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalaszCount {
    pub l: u32,
    pub r_l: u128,
    /// `n^(-2l - 1/2) R_l`, without any hidden constant.
    pub expression: f64,
}

/// Ordered solutions of `v_{i_1} + .. + v_{i_l} = v_{j_1} + .. + v_{j_l}`,
/// counted as `sum_s c_l(s)^2` where `c_l(s)` counts ordered `l`-tuples
/// summing to `s`.
pub fn halasz_count(v: &StepMultiset, l: u32) -> Result<HalaszCount> {
    if l == 0 {
        return Err(Error::InvalidInput("l must be positive".into()));
    }
    let n = v.len() as u128;
    let needed = n.checked_pow(2 * l).unwrap_or(u128::MAX);
    const LIMIT: u128 = 100_000_000;
    if needed > LIMIT {
        return Err(Error::BudgetExceeded {
            what: "Halasz index tuples",
            needed,
            budget: LIMIT,
        });
    }
    let base: BTreeMap<i128, u128> = v
        .counts()
        .iter()
        .map(|(&x, &c)| (x as i128, c as u128))
        .collect();
    let mut layer = base.clone();
    for _ in 1..l {
        let mut next: BTreeMap<i128, u128> = BTreeMap::new();
        for (&s, &c) in &layer {
            for (&x, &m) in &base {
                *next.entry(s + x).or_insert(0) += c * m;
            }
        }
        layer = next;
    }
    let r_l: u128 = layer.values().map(|&c| c * c).sum();
    let expression = r_l as f64 * (v.len() as f64).powf(-(2.0 * l as f64) - 0.5);
    Ok(HalaszCount { l, r_l, expression })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ms(v: &[i64]) -> StepMultiset {
        StepMultiset::new(v.iter().copied()).unwrap()
    }

    fn halasz_direct(v: &[i64], l: u32) -> u128 {
        let n = v.len();
        let total = n.pow(2 * l);
        let mut count = 0;
        for code in 0..total {
            let mut c = code;
            let (mut left, mut right) = (0i64, 0i64);
            for k in 0..2 * l {
                let idx = c % n;
                c /= n;
                if k < l {
                    left += v[idx];
                } else {
                    right += v[idx];
                }
            }
            if left == right {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn bruteforce_examples() {
        let b = EtaSpec::bernoulli();
        assert_eq!(rho_bruteforce(&ms(&[1, 2, 3]), &b).unwrap(), ratio(1, 4));
        assert_eq!(
            rho_bruteforce(&ms(&[1]), &EtaSpec::lazy(ratio(1, 1)).unwrap()).unwrap(),
            ratio(1, 2)
        );
        assert_eq!(rho_bruteforce(&ms(&[2, 2]), &b).unwrap(), ratio(1, 2));
        let big = StepMultiset::new(std::iter::repeat_n(1, 30)).unwrap();
        assert!(matches!(
            rho_bruteforce(&big, &b),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn erdos_values() {
        assert_eq!(erdos_bound(4), ratio(6, 16));
        assert_eq!(erdos_bound(1), ratio(1, 2));
        assert_eq!(erdos_bound(5), ratio(10, 32));
    }

    #[test]
    fn stanley_small() {
        let (v0, r) = stanley_reference(3).unwrap();
        assert_eq!(v0.values(), vec![-1, 0, 1]);
        assert_eq!(r, ratio(1, 2));
        let (v0, r) = stanley_reference(5).unwrap();
        assert_eq!(r, rho_bruteforce(&v0, &EtaSpec::bernoulli()).unwrap());
        assert!(stanley_reference(4).is_err());
    }

    #[test]
    fn halasz_examples() {
        assert_eq!(halasz_count(&ms(&[1, 2, 3]), 1).unwrap().r_l, 3);
        assert_eq!(halasz_count(&ms(&[1, 1, 2]), 1).unwrap().r_l, 5);
        let h = halasz_count(&ms(&[1, 2, 3, 4]), 2).unwrap();
        assert_eq!(h.r_l, halasz_direct(&[1, 2, 3, 4], 2));
        assert_eq!(h.r_l, 44);
        for (v, l) in [(vec![1, -1, 2, 5, 5], 2), (vec![3, 0, 3, 7], 3)] {
            assert_eq!(halasz_count(&ms(&v), l).unwrap().r_l, halasz_direct(&v, l));
        }
    }
}
