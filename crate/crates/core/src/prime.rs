//! Deterministic primality testing and next-prime search on big integers.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

const SMALL_PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Miller–Rabin witnesses; the first twelve make the test exact below 3.3e24
/// and the full list is used as a fixed, reproducible test above that.
const WITNESSES: [u64; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &SMALL_PRIMES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d_s = {
        let mut d = n - 1;
        let mut s = 0;
        while d % 2 == 0 {
            d /= 2;
            s += 1;
        }
        (d, s)
    };
    WITNESSES[..12]
        .iter()
        .all(|&a| strong_probable_u64(n, a, d_s))
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

fn strong_probable_u64(n: u64, a: u64, (d, s): (u64, u32)) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

pub fn is_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    for &p in &SMALL_PRIMES {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for &a in &WITNESSES {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&BigUint::from(2u32), n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= lower`.
pub fn next_prime(lower: &BigUint) -> BigUint {
    let two = BigUint::from(2u32);
    if *lower <= two {
        return two;
    }
    let mut c = lower.clone();
    if c.is_even() {
        c += 1u32;
    }
    while !is_prime(&c) {
        c += &two;
    }
    c
}

pub fn next_prime_u64(lower: u64) -> u64 {
    if lower <= 2 {
        return 2;
    }
    let mut c = lower | 1;
    while !is_prime_u64(c) {
        c += 2;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn agrees_with_trial_division() {
        for n in 0..20_000u64 {
            assert_eq!(is_prime_u64(n), trial_division(n), "n = {n}");
        }
    }

    #[test]
    fn next_prime_examples() {
        assert_eq!(next_prime_u64(16), 17);
        assert_eq!(next_prime_u64(56), 59);
        assert_eq!(next_prime_u64(2), 2);
        assert_eq!(next_prime_u64(0), 2);
        assert_eq!(next_prime(&BigUint::from(56u32)), BigUint::from(59u32));
    }

    #[test]
    fn big_known_primes() {
        // 2^89 - 1 and 2^127 - 1 are Mersenne primes; 2^128 + 1 is composite.
        let m89 = (BigUint::one() << 89u32) - 1u32;
        let m127 = (BigUint::one() << 127u32) - 1u32;
        assert!(is_prime(&m89));
        assert!(is_prime(&m127));
        assert!(!is_prime(&((BigUint::one() << 128u32) + 1u32)));
        assert!(!is_prime(&(&m89 * &m127)));
    }
}
