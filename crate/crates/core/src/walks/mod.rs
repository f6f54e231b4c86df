//! Exact distributions and concentration probabilities of random walks with
//! integer steps.

mod eta;
mod exact;
mod reference;

pub use eta::{EtaLabel, EtaSpec};
pub use exact::DEFAULT_TABLE_BUDGET;
pub use reference::{
    erdos_bound, halasz_count, rho_bruteforce, stanley_reference, HalaszCount, BRUTEFORCE_LIMIT,
};

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::multiset::StepMultiset;
use crate::rational::{self, Rational};

/// The law of `sum v_i eta_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkDistribution {
    #[serde(serialize_with = "ser_support")]
    pub support: BTreeMap<i64, Rational>,
    pub n: usize,
    pub values: StepMultiset,
    pub eta: EtaSpec,
}

fn ser_support<S: serde::Serializer>(
    m: &BTreeMap<i64, Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.len()))?;
    for (v, p) in m {
        seq.serialize_element(&(v, rational::format(p)))?;
    }
    seq.end()
}

impl WalkDistribution {
    pub fn total_mass(&self) -> Rational {
        self.support.values().cloned().sum()
    }

    pub fn prob(&self, x: i64) -> Rational {
        self.support.get(&x).cloned().unwrap_or_else(Rational::zero)
    }
}

/// `rho(V)` and the smallest point attaining it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RhoResult {
    #[serde(with = "rational::serde_string")]
    pub rho: Rational,
    pub argmax: i64,
}

fn to_i64(v: i128) -> Result<i64> {
    i64::try_from(v).map_err(|_| Error::InvalidInput(format!("walk value {v} overflows i64")))
}

fn ratio_of(count: BigUint, mass: &BigUint) -> Rational {
    Rational::new(BigInt::from(count), BigInt::from(mass.clone()))
}

pub fn exact_distribution(v: &StepMultiset, eta: &EtaSpec) -> Result<WalkDistribution> {
    exact_distribution_with_budget(v, eta, DEFAULT_TABLE_BUDGET)
}

pub fn exact_distribution_with_budget(
    v: &StepMultiset,
    eta: &EtaSpec,
    budget: u128,
) -> Result<WalkDistribution> {
    let raw = exact::convolve(v, eta, budget)?;
    let mut support = BTreeMap::new();
    for i in 0..raw.width() {
        if !raw.is_zero(i) {
            support.insert(to_i64(raw.value(i))?, ratio_of(raw.count(i), &raw.mass));
        }
    }
    Ok(WalkDistribution {
        support,
        n: v.len(),
        values: v.clone(),
        eta: eta.clone(),
    })
}

pub fn rho(v: &StepMultiset, eta: &EtaSpec) -> Result<RhoResult> {
    rho_with_budget(v, eta, DEFAULT_TABLE_BUDGET)
}

pub fn rho_with_budget(v: &StepMultiset, eta: &EtaSpec, budget: u128) -> Result<RhoResult> {
    let raw = exact::convolve(v, eta, budget)?;
    let best = raw.argmax();
    Ok(RhoResult {
        rho: ratio_of(raw.count(best), &raw.mass),
        argmax: to_i64(raw.value(best))?,
    })
}

/// Concentration probability of `V mod p`: point masses of the integer walk
/// folded by residue.
pub fn rho_mod(v: &StepMultiset, eta: &EtaSpec, p: u64) -> Result<RhoResult> {
    if p < 2 {
        return Err(Error::InvalidInput(format!("modulus {p} must be >= 2")));
    }
    let raw = exact::convolve(v, eta, DEFAULT_TABLE_BUDGET)?;
    let mut folded: BTreeMap<u64, BigUint> = BTreeMap::new();
    for i in 0..raw.width() {
        if !raw.is_zero(i) {
            let r = raw.value(i).rem_euclid(p as i128) as u64;
            *folded.entry(r).or_default() += raw.count(i);
        }
    }
    let (r, c) = folded
        .into_iter()
        .fold(None::<(u64, BigUint)>, |best, (r, c)| match best {
            Some((br, bc)) if bc >= c => Some((br, bc)),
            _ => Some((r, c)),
        })
        .expect("a walk has at least one value");
    Ok(RhoResult {
        rho: ratio_of(c, &raw.mass),
        argmax: r.to_i64().unwrap_or(i64::MAX),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn ms(v: &[i64]) -> StepMultiset {
        StepMultiset::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn distribution_examples() {
        let d = exact_distribution(&ms(&[1]), &EtaSpec::bernoulli()).unwrap();
        assert_eq!(
            d.support,
            BTreeMap::from([(-1, ratio(1, 2)), (1, ratio(1, 2))])
        );

        let d = exact_distribution(&ms(&[1, 2, 3]), &EtaSpec::bernoulli()).unwrap();
        let mut want = BTreeMap::new();
        for x in [-6, -4, -2, 2, 4, 6] {
            want.insert(x, ratio(1, 8));
        }
        want.insert(0, ratio(2, 8));
        assert_eq!(d.support, want);

        let lazy = EtaSpec::lazy(ratio(1, 2)).unwrap();
        let d = exact_distribution(&ms(&[1]), &lazy).unwrap();
        assert_eq!(
            d.support,
            BTreeMap::from([(-1, ratio(1, 4)), (0, ratio(1, 2)), (1, ratio(1, 4))])
        );
    }

    #[test]
    fn rho_examples() {
        let b = EtaSpec::bernoulli();
        assert_eq!(rho(&ms(&[1, 1, 1, 1]), &b).unwrap().rho, ratio(6, 16));
        assert_eq!(
            rho(&ms(&[1, 2, 3]), &b).unwrap(),
            RhoResult {
                rho: ratio(1, 4),
                argmax: 0
            }
        );
        assert_eq!(
            rho(&ms(&[-1, 0, 1]), &b).unwrap(),
            RhoResult {
                rho: ratio(1, 2),
                argmax: 0
            }
        );
    }

    #[test]
    fn ties_go_to_smallest_value() {
        // {1}: masses 1/2 at -1 and +1
        assert_eq!(rho(&ms(&[1]), &EtaSpec::bernoulli()).unwrap().argmax, -1);
        assert_eq!(rho(&ms(&[-3]), &EtaSpec::bernoulli()).unwrap().argmax, -3);
    }

    #[test]
    fn degenerate_inputs() {
        let b = EtaSpec::bernoulli();
        let z = rho(&ms(&[0, 0, 0]), &b).unwrap();
        assert_eq!(
            z,
            RhoResult {
                rho: ratio(1, 1),
                argmax: 0
            }
        );
        let point = EtaSpec::custom(vec![(2, ratio(1, 1))]).unwrap();
        let r = rho(&ms(&[1, 4]), &point).unwrap();
        assert_eq!(
            r,
            RhoResult {
                rho: ratio(1, 1),
                argmax: 10
            }
        );
    }

    #[test]
    fn asymmetric_custom_eta() {
        let eta = EtaSpec::custom(vec![(1, ratio(1, 3)), (3, ratio(2, 3))]).unwrap();
        let d = exact_distribution(&ms(&[1, -2]), &eta).unwrap();
        // eta1 - 2 eta2 over {1,3}^2
        let want = BTreeMap::from([
            (-1, ratio(1, 9)),
            (-5, ratio(2, 9)),
            (1, ratio(2, 9)),
            (-3, ratio(4, 9)),
        ]);
        assert_eq!(d.support, want);
        assert_eq!(d.total_mass(), ratio(1, 1));
    }

    #[test]
    fn large_counts_use_many_limbs() {
        let v = StepMultiset::new(std::iter::repeat_n(1, 300)).unwrap();
        let r = rho(&v, &EtaSpec::bernoulli()).unwrap();
        assert_eq!(r.rho, erdos_bound(300));
        let lazy = EtaSpec::lazy(ratio(1, 3)).unwrap();
        let d = exact_distribution(
            &StepMultiset::new(std::iter::repeat_n(2, 90)).unwrap(),
            &lazy,
        )
        .unwrap();
        assert_eq!(d.total_mass(), ratio(1, 1));
    }

    #[test]
    fn budget_is_enforced() {
        let v = ms(&[1, 1000, 1_000_000]);
        let err = rho_with_budget(&v, &EtaSpec::bernoulli(), 1000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn folding_mod_p() {
        let b = EtaSpec::bernoulli();
        let v = ms(&[1, 2, 3]);
        assert_eq!(rho_mod(&v, &b, 59).unwrap().rho, ratio(1, 4));
        // mod 3: sums {0,+-2,+-4,+-6}: residues 0 -> 0, 6, -6 => 2/8 + 2/8
        assert_eq!(rho_mod(&v, &b, 3).unwrap().rho, ratio(4, 8));
    }
}
