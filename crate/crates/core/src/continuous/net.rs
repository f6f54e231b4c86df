use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Exponents and multipliers standing in for the `O(1)`s of the count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConstants {
    /// Exponent on `(beta^-1 sqrt n') sqrt n'`.
    pub generator_exponent: u32,
    /// Exponent on `rho^-1 / sqrt n'`.
    pub dimension_exponent: u32,
    /// `c` in `(c beta^-1)^i`.
    pub exceptional_constant: u64,
}

impl Default for NetConstants {
    fn default() -> Self {
        Self {
            generator_exponent: 1,
            dimension_exponent: 1,
            exceptional_constant: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetCount {
    pub n: u64,
    /// `ceil(n^(1 - 3 eps / 2))`.
    pub n_prime: u64,
    #[serde(with = "rational::biguint_string")]
    pub gap_family_count: BigUint,
    /// `ceil((rho^-1 / sqrt n')^n)`.
    #[serde(with = "rational::biguint_string")]
    pub multiset_term: BigUint,
    /// `ceil(rho^-n n^(-n (1/2 - eps)))`.
    #[serde(with = "rational::biguint_string")]
    pub dominating_term: BigUint,
    #[serde(with = "rational::biguint_string")]
    pub exceptional_count: BigUint,
    /// `gap_family_count (multiset_term + 1) exceptional_count`.
    #[serde(with = "rational::biguint_string")]
    pub total_bound: BigUint,
}

/// Smallest `t >= 0` with `t^k >= x`.
pub fn ceil_root(x: &BigUint, k: u32) -> BigUint {
    assert!(k > 0, "root order must be positive");
    if x.is_zero() || k == 1 {
        return x.clone();
    }
    let t = x.nth_root(k);
    if t.pow(k) == *x {
        t
    } else {
        t + 1u32
    }
}

/// `ceil(q^(1/k))` for a positive rational `q`.
fn ceil_root_rational(q: &Rational, k: u32) -> BigUint {
    let num = q.numer().to_biguint().expect("positive");
    let den = q.denom().to_biguint().expect("positive");
    // smallest t with t^k den >= num
    let mut t = ceil_root(&num.div_ceil(&den), k);
    while !t.is_zero() && (&t - 1u32).pow(k) * &den >= num {
        t -= 1u32;
    }
    while t.pow(k) * &den < num {
        t += 1u32;
    }
    t
}

fn pow_rational(q: &Rational, e: &BigInt) -> Result<Rational> {
    let e_abs = e
        .abs()
        .to_u32()
        .ok_or_else(|| Error::InvalidInput("exponent too large".into()))?;
    let r = Rational::new(q.numer().pow(e_abs), q.denom().pow(e_abs));
    Ok(if e.is_negative() { r.recip() } else { r })
}

/// `ceil(base^e)` for rational `e` with the base positive.
fn ceil_rational_power(base: &Rational, e: &Rational) -> Result<BigUint> {
    let k = e
        .denom()
        .to_u32()
        .ok_or_else(|| Error::InvalidInput("root order too large".into()))?;
    let whole = pow_rational(base, e.numer())?;
    Ok(ceil_root_rational(&whole, k))
}

/// Sizes of the net pieces: GAP families, their sub-multisets, and the
/// exceptional tuples.
pub fn net_count(
    n: u64,
    beta: &Rational,
    rho: &Rational,
    epsilon: &Rational,
    constants: &NetConstants,
) -> Result<NetCount> {
    let zero = Rational::zero();
    let one = Rational::one();
    if n < 2 {
        return Err(Error::InvalidInput("n must be at least 2".into()));
    }
    if rho <= &zero || rho > &one {
        return Err(Error::HypothesisViolated(format!(
            "rho = {} is not in (0, 1]",
            rational::format(rho)
        )));
    }
    if epsilon <= &zero || epsilon > &rational::ratio(1, 3) {
        return Err(Error::HypothesisViolated(
            "epsilon must lie in (0, 1/3]".into(),
        ));
    }
    if beta <= &zero {
        return Err(Error::HypothesisViolated("beta must be positive".into()));
    }
    let eps = rational::to_f64(epsilon);
    if rational::ln_abs(beta) < -(n as f64).powf(eps) {
        return Err(Error::HypothesisViolated(format!(
            "beta = {} < exp(-n^eps)",
            rational::format(beta)
        )));
    }
    let nr = Rational::from_integer(BigInt::from(n));
    let exponent = one.clone() - epsilon * rational::ratio(3, 2);
    let n_prime_big = ceil_rational_power(&nr, &exponent)?;
    let n_prime = n_prime_big
        .to_u64()
        .ok_or_else(|| Error::InvalidInput("n' overflows".into()))?;
    let npr = Rational::from_integer(BigInt::from(n_prime));
    let half = rational::ratio(1, 2);

    // (beta^-1 sqrt n') sqrt n' = beta^-1 n'
    let gen = ceil_rational_power(&(npr.clone() / beta), &one)?;
    // rho^-1 / sqrt n' = (rho^-2 / n')^(1/2)
    let dim = ceil_rational_power(&(rho.recip() * rho.recip() / &npr), &half)?.max(BigUint::one());
    let gap_family_count =
        gen.pow(constants.generator_exponent) * dim.pow(constants.dimension_exponent);

    let multiset_term = ceil_rational_power(
        &(rho.recip() * rho.recip() / &npr),
        &Rational::new(BigInt::from(n), BigInt::from(2)),
    )?;
    // rho^-n n^(a/b) = (rho^(-n b) n^a)^(1/b) with a/b = n (eps - 1/2)
    let n_exp = (epsilon - &half) * Rational::from_integer(BigInt::from(n));
    let b = n_exp
        .denom()
        .to_u32()
        .ok_or_else(|| Error::InvalidInput("root order too large".into()))?;
    let inner = pow_rational(&rho.recip(), &(BigInt::from(n) * BigInt::from(b)))?
        * pow_rational(&nr, n_exp.numer())?;
    let dominating_term = ceil_root_rational(&inner, b);

    let per = ceil_rational_power(
        &(Rational::from_integer(BigInt::from(constants.exceptional_constant)) / beta),
        &one,
    )?;
    let mut exceptional_count = BigUint::zero();
    let mut term = BigUint::one();
    for _ in 1..=n_prime {
        term *= &per;
        exceptional_count += &term;
    }
    let total_bound =
        &gap_family_count * (&multiset_term + 1u32) * exceptional_count.clone().max(BigUint::one());
    Ok(NetCount {
        n,
        n_prime,
        gap_family_count,
        multiset_term,
        dominating_term,
        exceptional_count,
        total_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn roots() {
        assert_eq!(ceil_root(&BigUint::from(27u32), 3), BigUint::from(3u32));
        assert_eq!(ceil_root(&BigUint::from(28u32), 3), BigUint::from(4u32));
        assert_eq!(ceil_root(&BigUint::from(1u32), 5), BigUint::from(1u32));
        assert_eq!(ceil_root_rational(&ratio(9, 4), 2), BigUint::from(2u32));
        assert_eq!(ceil_root_rational(&ratio(1, 4), 2), BigUint::from(1u32));
    }

    #[test]
    fn small_example() {
        let c = net_count(
            16,
            &ratio(1, 2),
            &ratio(1, 4),
            &ratio(1, 3),
            &NetConstants::default(),
        )
        .unwrap();
        // n' = ceil(16^(1/2)) = 4
        assert_eq!(c.n_prime, 4);
        // beta^-1 n' = 8; rho^-1 / sqrt n' = 2
        assert_eq!(c.gap_family_count, BigUint::from(16u32));
        assert_eq!(c.multiset_term, BigUint::from(2u32).pow(16));
        // 4^16 16^(-16/6) = 2^32 / 2^(32/3) = 2^(64/3)
        assert_eq!(c.dominating_term, ceil_root(&(BigUint::one() << 64), 3));
        // 2 + 4 + 8 + 16
        assert_eq!(c.exceptional_count, BigUint::from(30u32));
        assert_eq!(
            c.total_bound,
            BigUint::from(16u32) * (BigUint::from(65536u32) + 1u32) * 30u32
        );
    }

    #[test]
    fn hypotheses() {
        let k = NetConstants::default();
        assert!(matches!(
            net_count(16, &ratio(1, 2), &int(2), &ratio(1, 3), &k),
            Err(Error::HypothesisViolated(_))
        ));
        assert!(matches!(
            net_count(16, &ratio(1, 2), &ratio(1, 4), &ratio(1, 2), &k),
            Err(Error::HypothesisViolated(_))
        ));
        // exp(-16^(1/3)) ~ 0.08
        assert!(net_count(16, &ratio(1, 100), &ratio(1, 4), &ratio(1, 3), &k).is_err());
    }

    #[test]
    fn closed_form_with_rho_power_of_n() {
        // rho = n^-C gives n^((C - 1/2 + eps) n)
        for (n, c, eps) in [
            (16u64, ratio(3, 2), ratio(1, 4)),
            (27, int(1), ratio(1, 3)),
            (64, ratio(5, 3), ratio(1, 6)),
        ] {
            let nr = Rational::from_integer(BigInt::from(n));
            let rho_val = ceil_rational_power(&nr, &c).unwrap();
            let rho = Rational::new(BigInt::one(), BigInt::from(rho_val.clone()));
            // only exact when n^C is an integer
            assert_eq!(
                ceil_rational_power(&nr, &c)
                    .unwrap()
                    .pow(c.denom().to_u32().unwrap()),
                BigUint::from(n).pow(c.numer().to_u32().unwrap())
            );
            let got = net_count(n, &ratio(1, 2), &rho, &eps, &NetConstants::default()).unwrap();
            let e = (c.clone() - ratio(1, 2) + eps.clone()) * int(n as i64);
            let (u, w) = (e.numer().to_u32().unwrap(), e.denom().to_u32().unwrap());
            let want = ceil_root(&BigUint::from(n).pow(u), w);
            assert_eq!(got.dominating_term, want, "n={n}");
        }
    }
}
