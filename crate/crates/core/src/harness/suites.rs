use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::char_bounds::{char_bound, SLACK};
use crate::error::Result;
use crate::prime::is_prime_u64;
use crate::rational::{self, ratio, Rational};
use crate::walks::{erdos_bound, rho, rho_bruteforce, rho_mod, stanley_reference, EtaSpec};
use crate::StepMultiset;

/// One checked inequality or equality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub instance: String,
    pub rho: String,
    pub bound: String,
    /// `bound - rho` as a float; zero for equalities.
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: &'static str,
    pub checks: usize,
    pub failures: usize,
}

pub fn summarize(rows: &[SuiteRow]) -> Vec<SuiteSummary> {
    let mut out: Vec<SuiteSummary> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|s| s.suite == r.suite) {
            Some(s) => {
                s.checks += 1;
                s.failures += usize::from(!r.pass);
            }
            None => out.push(SuiteSummary {
                suite: r.suite,
                checks: 1,
                failures: usize::from(!r.pass),
            }),
        }
    }
    out
}

fn label(v: &StepMultiset, eta: &EtaSpec) -> String {
    let vals: Vec<String> = v.values().iter().map(|x| x.to_string()).collect();
    format!("n={} eta={eta} v=[{}]", v.len(), vals.join(" "))
}

fn row(
    suite: &'static str,
    instance: String,
    rho: &Rational,
    bound: &Rational,
    pass: bool,
) -> SuiteRow {
    SuiteRow {
        suite,
        instance,
        rho: rational::format(rho),
        bound: rational::format(bound),
        margin: rational::to_f64(&(bound - rho)),
        pass,
    }
}

fn oracle_etas() -> [EtaSpec; 3] {
    [
        EtaSpec::bernoulli(),
        EtaSpec::lazy(ratio(1, 4)).expect("valid mu"),
        EtaSpec::lazy(ratio(3, 4)).expect("valid mu"),
    ]
}

/// Exact DP against enumeration: `n <= 14`, `|v_i| <= 10`, the three
/// standard laws in rotation.
pub fn oracle_suite(count: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let etas = oracle_etas();
    let cases: Vec<(StepMultiset, EtaSpec)> = (0..count)
        .map(|i| {
            let n = rng.gen_range(1..=14);
            let v = StepMultiset::new((0..n).map(|_| rng.gen_range(-10..=10))).expect("nonempty");
            (v, etas[i % 3].clone())
        })
        .collect();
    cases
        .par_iter()
        .map(|(v, eta)| {
            let dp = rho(v, eta)?.rho;
            let brute = rho_bruteforce(v, eta)?;
            let pass = dp == brute;
            Ok(row("oracle", label(v, eta), &dp, &brute, pass))
        })
        .collect()
}

/// All-ones sharpness for `n <= 30`, then `rho(V) <= C(n, n/2) / 2^n` on
/// random multisets of nonzero values.
pub fn erdos_suite(count: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    let eta = EtaSpec::bernoulli();
    let mut rows = Vec::new();
    for n in 1..=30 {
        let v = StepMultiset::new(vec![1; n])?;
        let r = rho(&v, &eta)?.rho;
        let b = erdos_bound(n);
        rows.push(row("erdos_sharp", label(&v, &eta), &r, &b, r == b));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<StepMultiset> = (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=30);
            StepMultiset::new((0..n).map(|_| {
                let x: i64 = rng.gen_range(1..=20);
                if rng.gen() {
                    x
                } else {
                    -x
                }
            }))
            .expect("nonempty")
        })
        .collect();
    let random: Vec<SuiteRow> = cases
        .par_iter()
        .map(|v| {
            let r = rho(v, &eta)?.rho;
            let b = erdos_bound(v.len());
            Ok(row("erdos", label(v, &eta), &r, &b, r <= b))
        })
        .collect::<Result<_>>()?;
    rows.extend(random);
    Ok(rows)
}

fn subsets(pool: &[i64], k: usize) -> Vec<Vec<i64>> {
    fn go(pool: &[i64], k: usize, start: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..pool.len() {
            cur.push(pool[i]);
            go(pool, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(pool, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Every distinct `n`-subset of `[-6, 6]` against the symmetric interval.
pub fn stanley_suite(ns: &[usize]) -> Result<Vec<SuiteRow>> {
    let eta = EtaSpec::bernoulli();
    let pool: Vec<i64> = (-6..=6).collect();
    let mut rows = Vec::new();
    for &n in ns {
        let (_, r0) = stanley_reference(n)?;
        let part: Vec<SuiteRow> = subsets(&pool, n)
            .par_iter()
            .map(|s| {
                let v = StepMultiset::new(s.iter().copied())?;
                let r = rho(&v, &eta)?.rho;
                Ok(row("stanley", label(&v, &eta), &r, &r0, r <= r0))
            })
            .collect::<Result<_>>()?;
        rows.extend(part);
    }
    Ok(rows)
}

/// `rho(V mod p) <= product bound <= exponential bound` for odd primes
/// `p <= 997` and `n <= 12`.
pub fn fourier_suite(count: usize, seed: u64) -> Result<Vec<SuiteRow>> {
    let primes: Vec<u64> = (3..=997).filter(|&p| is_prime_u64(p)).collect();
    let eta = EtaSpec::bernoulli();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(StepMultiset, u64)> = (0..count)
        .map(|_| {
            let p = *primes.choose(&mut rng).expect("primes below 1000");
            let n = rng.gen_range(1..=12);
            let hi = p as i64 - 1;
            let v = StepMultiset::new((0..n).map(|_| rng.gen_range(0..=hi))).expect("nonempty");
            (v, p)
        })
        .collect();
    cases
        .par_iter()
        .map(|(v, p)| {
            let r = rho_mod(v, &eta, *p)?.rho;
            let b = char_bound(&v.values(), *p)?;
            let rf = rational::to_f64(&r);
            let pass = rf <= b.product_bound + SLACK && b.product_bound <= b.exp_bound + SLACK;
            Ok(SuiteRow {
                suite: "fourier",
                instance: format!("p={p} {}", label(v, &eta)),
                rho: rational::format(&r),
                bound: format!("{} {}", b.product_bound, b.exp_bound),
                margin: b.product_bound - rf,
                pass,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for rows in [
            oracle_suite(20, 1).unwrap(),
            erdos_suite(20, 2).unwrap(),
            stanley_suite(&[3]).unwrap(),
            fourier_suite(10, 3).unwrap(),
        ] {
            assert!(
                rows.iter().all(|r| r.pass),
                "{:?}",
                rows.iter().find(|r| !r.pass)
            );
        }
    }

    #[test]
    fn subset_counts() {
        let pool: Vec<i64> = (-6..=6).collect();
        assert_eq!(subsets(&pool, 3).len(), 286);
        assert_eq!(subsets(&pool, 7).len(), 1716);
    }

    #[test]
    fn deterministic() {
        assert_eq!(erdos_suite(15, 9).unwrap(), erdos_suite(15, 9).unwrap());
    }

    #[test]
    fn summary_counts() {
        let rows = stanley_suite(&[3]).unwrap();
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].checks, 286);
        assert_eq!(s[0].failures, 0);
    }
}
