//! Exact rationals and their `"p/q"` string form.

use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.125"` exactly.
pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let whole_val = if whole_digits.is_empty() {
            BigInt::zero()
        } else {
            BigInt::from_str(whole_digits).map_err(|_| bad())?
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_val = BigInt::from_str(frac).map_err(|_| bad())?;
        let mut num = whole_val * &scale + frac_val;
        if negative {
            num = -num;
        }
        return Ok(Rational::new(num, scale));
    }
    BigInt::from_str(s)
        .map(Rational::from_integer)
        .map_err(|_| bad())
}

pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest double; exact for moderate sizes and stable for huge numerators
/// and denominators.
pub fn to_f64(r: &Rational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    let ln = ln_abs(r);
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * ln.exp()
}

/// Natural log of `|r|`, usable when `r` over- or underflows `f64`.
pub fn ln_abs(r: &Rational) -> f64 {
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

pub fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 900;
    let top = (v >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn from_f64_exact(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidInput(format!("non-finite value {x}")))
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_string {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing big unsigned integers as decimal strings.
pub mod biguint_string {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
        let raw = String::deserialize(d)?;
        BigUint::from_str(raw.trim()).map_err(serde::de::Error::custom)
    }
}

pub mod biguint_vec_string {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[BigUint], s: S) -> std::result::Result<S::Ok, S::Error> {
        let strings: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        strings.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigUint>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|x| BigUint::from_str(x.trim()).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse("3/12").unwrap(), ratio(1, 4));
        assert_eq!(parse("-7").unwrap(), int(-7));
        assert_eq!(parse("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse("-0.5").unwrap(), ratio(-1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("1.").is_err());
    }

    #[test]
    fn format_round_trips() {
        for r in [ratio(6, 16), int(0), ratio(-5, 3)] {
            assert_eq!(parse(&format(&r)).unwrap(), r);
        }
        assert_eq!(format(&ratio(6, 16)), "3/8");
    }

    #[test]
    fn huge_values_convert_through_logs() {
        let big = Rational::new(BigInt::one(), BigInt::from(2u32).pow(3000));
        assert!(to_f64(&big) == 0.0 || to_f64(&big) < 1e-300);
        let ln = ln_abs(&big);
        assert!((ln + 3000.0 * std::f64::consts::LN_2).abs() < 1e-6);
    }
}
