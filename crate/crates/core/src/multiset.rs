use std::collections::BTreeMap;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multiset of integer steps, canonicalised as a sorted value → multiplicity map.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct StepMultiset {
    counts: BTreeMap<i64, usize>,
    n: usize,
}

impl StepMultiset {
    pub fn new(values: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut n = 0usize;
        for v in values {
            *counts.entry(v).or_insert(0) += 1;
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidInput(
                "a step multiset needs at least one value".into(),
            ));
        }
        Ok(Self { counts, n })
    }

    pub fn from_counts(counts: BTreeMap<i64, usize>) -> Result<Self> {
        let counts: BTreeMap<i64, usize> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let n = counts.values().sum();
        if n == 0 {
            return Err(Error::InvalidInput(
                "a step multiset needs at least one value".into(),
            ));
        }
        Ok(Self { counts, n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn counts(&self) -> &BTreeMap<i64, usize> {
        &self.counts
    }

    pub fn distinct(&self) -> impl Iterator<Item = i64> + '_ {
        self.counts.keys().copied()
    }

    pub fn multiplicity(&self, v: i64) -> usize {
        self.counts.get(&v).copied().unwrap_or(0)
    }

    /// All values in ascending order, repeated by multiplicity.
    pub fn values(&self) -> Vec<i64> {
        self.counts
            .iter()
            .flat_map(|(&v, &c)| std::iter::repeat_n(v, c))
            .collect()
    }

    pub fn sum_abs(&self) -> u128 {
        self.counts
            .iter()
            .map(|(&v, &c)| v.unsigned_abs() as u128 * c as u128)
            .sum()
    }

    pub fn max_abs(&self) -> u64 {
        self.counts
            .keys()
            .map(|v| v.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// gcd of all values; zero when every value is zero.
    pub fn gcd(&self) -> u64 {
        self.counts
            .keys()
            .fold(0u64, |g, &v| g.gcd(&v.unsigned_abs()))
    }

    pub fn has_zero(&self) -> bool {
        self.counts.contains_key(&0)
    }

    pub fn scaled(&self, c: i64) -> Result<Self> {
        let mut out = BTreeMap::new();
        for (&v, &m) in &self.counts {
            let w = v
                .checked_mul(c)
                .ok_or_else(|| Error::InvalidInput(format!("overflow scaling {v} by {c}")))?;
            *out.entry(w).or_insert(0) += m;
        }
        Self::from_counts(out)
    }

    /// Divides every value by `d`, which must divide all of them.
    pub fn divided(&self, d: i64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("division by zero".into()));
        }
        if self.counts.keys().any(|v| v % d != 0) {
            return Err(Error::InvalidInput(format!(
                "{d} does not divide every value"
            )));
        }
        Self::from_counts(self.counts.iter().map(|(&v, &c)| (v / d, c)).collect())
    }
}

impl TryFrom<Vec<i64>> for StepMultiset {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StepMultiset> for Vec<i64> {
    fn from(m: StepMultiset) -> Self {
        m.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_regardless_of_order() {
        let a = StepMultiset::new([3, 1, 2, 1]).unwrap();
        let b = StepMultiset::new([1, 1, 3, 2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values(), vec![1, 1, 2, 3]);
        assert_eq!(a.len(), 4);
        assert_eq!(a.multiplicity(1), 2);
    }

    #[test]
    fn empty_is_rejected() {
        assert!(StepMultiset::new(Vec::<i64>::new()).is_err());
    }

    #[test]
    fn gcd_and_scaling() {
        let m = StepMultiset::new([6, -9, 0, 15]).unwrap();
        assert_eq!(m.gcd(), 3);
        assert_eq!(m.divided(3).unwrap().values(), vec![-3, 0, 2, 5]);
        assert_eq!(m.scaled(-1).unwrap().values(), vec![-15, -6, 0, 9]);
        assert!(m.divided(4).is_err());
        assert_eq!(StepMultiset::new([0, 0]).unwrap().gcd(), 0);
    }

    #[test]
    fn json_is_a_plain_array() {
        let m = StepMultiset::new([2, 1, 2]).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[1,2,2]");
        let back: StepMultiset = serde_json::from_str("[2,2,1]").unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<StepMultiset>("[]").is_err());
    }
}
