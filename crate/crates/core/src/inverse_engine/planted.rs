use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gap_core::Gap;
use crate::multiset::StepMultiset;

/// Steps sampled with repetition from a known proper symmetric GAP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedInstance {
    pub seed: u64,
    pub rank: usize,
    pub n: usize,
    pub c: f64,
    pub gap: Gap,
    pub values: StepMultiset,
}

/// Rank 1 or 2 GAP of volume about `n^(C - r/2)`, then `n` uniform samples.
pub fn planted_instance(rank: usize, n: usize, c: f64, seed: u64) -> Result<PlantedInstance> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = (n as f64).powf(c - rank as f64 / 2.0);
    let gap = match rank {
        1 => {
            let m = (((target - 1.0) / 2.0).round() as i64).max(1);
            Gap::symmetric(&[rng.gen_range(1..=20)], &[m])?
        }
        2 => {
            // second direction is a short {-1, 0, 1}
            let m1 = (((target / 3.0 - 1.0) / 2.0).round() as i64).max(1);
            let a1 = rng.gen_range(1..=9);
            let a2 = rng.gen_range(2 * m1 * a1 + 1..=2 * m1 * a1 + 60);
            Gap::symmetric(&[a1, a2], &[m1, 1])?
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "planted rank {rank} not in {{1, 2}}"
            )))
        }
    };
    let gens = gap.scalar_generators();
    let values = (0..n).map(|_| {
        gens.iter()
            .zip(gap.upper())
            .map(|(&a, &m)| a * rng.gen_range(-m..=m))
            .sum::<i64>()
    });
    Ok(PlantedInstance {
        seed,
        rank,
        n,
        c,
        values: StepMultiset::new(values)?,
        gap,
    })
}

/// Alternating ranks 1, 2, with `n` uniform in `[n_min, n_max]`.
pub fn planted_corpus(
    seed: u64,
    count: usize,
    c: f64,
    n_min: usize,
    n_max: usize,
) -> Result<Vec<PlantedInstance>> {
    if n_min == 0 || n_min > n_max {
        return Err(Error::InvalidInput("need 0 < n_min <= n_max".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n = rng.gen_range(n_min..=n_max);
            let s: u64 = rng.gen();
            planted_instance(1 + i % 2, n, c, s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes_follow_the_exponent() {
        for rank in [1, 2] {
            for n in [100, 250, 400] {
                let inst = planted_instance(rank, n, 1.5, 9).unwrap();
                let target = (n as f64).powf(1.5 - rank as f64 / 2.0);
                let vol = inst.gap.volume() as f64;
                assert!(vol / target > 0.5 && vol / target < 2.0, "{rank} {n} {vol}");
                assert!(inst.gap.is_proper(1, 1 << 20).unwrap());
                assert!(inst.gap.is_symmetric());
                assert_eq!(inst.values.len(), n);
                for v in inst.values.distinct() {
                    assert!(inst.gap.contains_scalar(v).unwrap());
                }
            }
        }
    }

    #[test]
    fn corpus_is_reproducible() {
        let a = planted_corpus(5, 6, 1.5, 100, 400).unwrap();
        let b = planted_corpus(5, 6, 1.5, 100, 400).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.iter().map(|i| i.rank).collect::<Vec<_>>(),
            [1, 2, 1, 2, 1, 2]
        );
    }
}
