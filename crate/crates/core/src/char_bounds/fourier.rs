use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::walks::EtaSpec;

/// Largest modulus accepted by the character-sum scans.
pub const P_CAP: u64 = 10_000_000;

/// Slack applied to floating-point certificate comparisons.
pub const SLACK: f64 = 1e-9;

const CHUNK: usize = 4096;

/// Distance from `x / p` to the nearest integer, times `p`.
#[inline]
pub fn dist(x: i128, p: u64) -> u64 {
    let r = x.rem_euclid(p as i128) as u64;
    r.min(p - r)
}

/// How the frequency enters the characteristic function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyForm {
    /// `|E e_p(eta v t)|` as stated.
    Direct,
    /// After the change of variable `t -> t/2`: phase `(v t mod p) / 2p`.
    Halved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub holds: bool,
    /// Frequency with the least slack.
    pub worst_t: u64,
    /// `log rhs - log lhs` at `worst_t`; negative means violated.
    pub worst_slack: f64,
    pub form: FrequencyForm,
    /// Per-variable `|E e_p(eta x)| <= (1 - mu) + mu cos(2 pi x / p)`, when
    /// `mu` was supplied.
    pub mu_bounded: Option<bool>,
}

fn check_prime(p: u64) -> Result<()> {
    if !crate::prime::is_prime_u64(p) {
        return Err(Error::InvalidInput(format!("{p} is not prime")));
    }
    if p > P_CAP {
        return Err(Error::BudgetExceeded {
            what: "modulus for character scans",
            needed: p as u128,
            budget: P_CAP as u128,
        });
    }
    Ok(())
}

/// Verifies `prod_i |E e_p(eta_i v_i t)| <= exp(-c sum_i ||v_i t / p||^2)` for
/// every `t`, and optionally the `mu`-bounded comparison per variable.
pub fn condition_check(
    etas: &[EtaSpec],
    p: u64,
    v_p: &[i64],
    c: f64,
    form: FrequencyForm,
    mu: Option<f64>,
) -> Result<ConditionCheck> {
    check_prime(p)?;
    if etas.len() != v_p.len() && etas.len() != 1 {
        return Err(Error::InvalidInput(
            "give one eta per value or a single shared eta".into(),
        ));
    }
    let eta_at = |i: usize| if etas.len() == 1 { &etas[0] } else { &etas[i] };
    let pf = p as f64;
    let slack_at = |t: u64| -> f64 {
        let mut log_lhs = 0.0;
        let mut norm = 0.0;
        for (i, &v) in v_p.iter().enumerate() {
            let r = (v as i128 * t as i128).rem_euclid(p as i128) as f64;
            let theta = match form {
                FrequencyForm::Direct => r / pf,
                FrequencyForm::Halved => r / (2.0 * pf),
            };
            log_lhs += eta_at(i).char_abs(theta).ln();
            let d = dist(v as i128 * t as i128, p) as f64 / pf;
            norm += d * d;
        }
        -c * norm - log_lhs
    };
    let (worst_t, worst_slack) = (0..p)
        .collect::<Vec<u64>>()
        .par_chunks(CHUNK)
        .flat_map_iter(|chunk| chunk.iter().map(|&t| (t, slack_at(t))).collect::<Vec<_>>())
        .reduce(
            || (0, f64::INFINITY),
            |a, b| {
                if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let mu_bounded = mu.map(|mu| {
        (0..p).all(|x| {
            let rhs = (1.0 - mu) + mu * (std::f64::consts::TAU * x as f64 / pf).cos();
            etas.iter()
                .all(|e| e.char_abs(x as f64 / pf) <= rhs + SLACK)
        })
    });
    Ok(ConditionCheck {
        holds: worst_slack >= -SLACK,
        worst_t,
        worst_slack,
        form,
        mu_bounded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharBound {
    /// `(1/p) sum_xi prod_i |cos(pi v_i xi / p)|`.
    pub product_bound: f64,
    /// `(1/p) sum_xi exp(-2 sum_i ||v_i xi / p||^2)`.
    pub exp_bound: f64,
}

/// Both sides of the key Fourier inequality for Bernoulli steps. The change
/// of variable `xi -> xi/2` needs `p` odd.
pub fn char_bound(v_p: &[i64], p: u64) -> Result<CharBound> {
    check_prime(p)?;
    if p == 2 {
        return Err(Error::InvalidInput(
            "the halving substitution needs an odd prime".into(),
        ));
    }
    let counts = multiplicities(v_p, p);
    let pf = p as f64;
    let cos_tab: Vec<f64> = (0..p)
        .map(|x| (std::f64::consts::PI * x as f64 / pf).cos().abs().ln())
        .collect();
    let partials: Vec<(f64, f64)> = (0..p)
        .collect::<Vec<u64>>()
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut prod_sum = 0.0;
            let mut exp_sum = 0.0;
            for &xi in chunk {
                let mut log_prod = 0.0;
                let mut norm = 0u128;
                for &(v, m) in &counts {
                    let r = (v as u128 * xi as u128 % p as u128) as u64;
                    log_prod += m as f64 * cos_tab[r as usize];
                    let d = r.min(p - r) as u128;
                    norm += m as u128 * d * d;
                }
                prod_sum += log_prod.exp();
                exp_sum += (-2.0 * norm as f64 / (pf * pf)).exp();
            }
            (prod_sum, exp_sum)
        })
        .collect();
    let (prod, exp) = partials
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    Ok(CharBound {
        product_bound: prod / pf,
        exp_bound: exp / pf,
    })
}

/// Distinct residues with multiplicities.
pub(crate) fn multiplicities(v_p: &[i64], p: u64) -> Vec<(u64, usize)> {
    let mut m = std::collections::BTreeMap::new();
    for &v in v_p {
        *m.entry(v.rem_euclid(p as i64) as u64).or_insert(0usize) += 1;
    }
    m.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn dist_is_symmetric() {
        assert_eq!(dist(0, 7), 0);
        assert_eq!(dist(3, 7), 3);
        assert_eq!(dist(4, 7), 3);
        assert_eq!(dist(-1, 7), 1);
    }

    #[test]
    fn product_bound_p5() {
        let b = char_bound(&[1], 5).unwrap();
        let pi = std::f64::consts::PI;
        let want = (1.0 + 2.0 * (pi / 5.0).cos() + 2.0 * (2.0 * pi / 5.0).cos()) / 5.0;
        assert!((b.product_bound - want).abs() < 1e-12);
        assert!((b.product_bound - 0.6472).abs() < 1e-4);
        assert!(b.product_bound <= b.exp_bound);
    }

    #[test]
    fn zero_multiset_is_tight() {
        let b = char_bound(&[0, 0, 0], 11).unwrap();
        assert!((b.product_bound - 1.0).abs() < 1e-12);
        assert!((b.exp_bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn p59_dominates_quarter() {
        let b = char_bound(&[1, 2, 3], 59).unwrap();
        assert!(b.product_bound >= 0.25);
        assert!(b.product_bound <= b.exp_bound + SLACK);
    }

    #[test]
    fn rejects_bad_moduli() {
        assert!(char_bound(&[1], 2).is_err());
        assert!(char_bound(&[1], 9).is_err());
        assert!(matches!(
            char_bound(&[1], 10_000_019),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn lazy_condition() {
        let eta = EtaSpec::lazy(ratio(1, 2)).unwrap();
        let v = vec![1i64; 10];
        let chk = condition_check(&[eta], 101, &v, 1.0, FrequencyForm::Direct, Some(0.5)).unwrap();
        assert!(chk.holds, "{chk:?}");
        assert_eq!(chk.mu_bounded, Some(true));
    }

    #[test]
    fn bernoulli_needs_halved_form() {
        let b = EtaSpec::bernoulli();
        for p in [3u64, 5, 101, 997] {
            let halved =
                condition_check(&[b.clone()], p, &[1], 2.0, FrequencyForm::Halved, None).unwrap();
            assert!(halved.holds, "p = {p}: {halved:?}");
        }
        let direct = condition_check(&[b], 101, &[1], 2.0, FrequencyForm::Direct, None).unwrap();
        assert!(!direct.holds);
    }

    #[test]
    fn deterministic_eta_fails() {
        let z = EtaSpec::custom(vec![(0, ratio(1, 1))]).unwrap();
        let chk = condition_check(&[z], 13, &[1, 2], 0.1, FrequencyForm::Direct, None).unwrap();
        assert!(!chk.holds);
        assert_ne!(chk.worst_t, 0);
    }
}
