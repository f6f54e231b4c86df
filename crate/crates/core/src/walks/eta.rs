use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EtaLabel {
    Bernoulli,
    Lazy(Rational),
    Custom,
}

/// A finitely supported integer step distribution with exact probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EtaSpec {
    label: EtaLabel,
    atoms: Vec<(i64, Rational)>,
}

impl EtaSpec {
    pub fn bernoulli() -> Self {
        Self {
            label: EtaLabel::Bernoulli,
            atoms: vec![(-1, rational::ratio(1, 2)), (1, rational::ratio(1, 2))],
        }
    }

    pub fn lazy(mu: Rational) -> Result<Self> {
        if !mu.is_positive() || mu > Rational::one() {
            return Err(Error::InvalidInput(format!(
                "lazy walk needs 0 < mu <= 1, got {}",
                rational::format(&mu)
            )));
        }
        let half = &mu / rational::int(2);
        let mut atoms = vec![(-1, half.clone())];
        if mu != Rational::one() {
            atoms.push((0, Rational::one() - &mu));
        }
        atoms.push((1, half));
        Ok(Self {
            label: EtaLabel::Lazy(mu),
            atoms,
        })
    }

    pub fn custom(atoms: Vec<(i64, Rational)>) -> Result<Self> {
        let mut merged: std::collections::BTreeMap<i64, Rational> = Default::default();
        for (v, p) in atoms {
            if !p.is_positive() {
                return Err(Error::InvalidInput(format!(
                    "atom {v} has non-positive probability {}",
                    rational::format(&p)
                )));
            }
            *merged.entry(v).or_insert_with(Rational::zero) += p;
        }
        let total: Rational = merged.values().cloned().sum();
        if merged.is_empty() || total != Rational::one() {
            return Err(Error::InvalidInput(format!(
                "atom probabilities must sum to 1, got {}",
                rational::format(&total)
            )));
        }
        Ok(Self {
            label: EtaLabel::Custom,
            atoms: merged.into_iter().collect(),
        })
    }

    pub fn label(&self) -> &EtaLabel {
        &self.label
    }

    /// Atoms sorted by value.
    pub fn atoms(&self) -> &[(i64, Rational)] {
        &self.atoms
    }

    pub fn is_symmetric(&self) -> bool {
        self.atoms
            .iter()
            .all(|(v, p)| self.atoms.iter().any(|(w, q)| *w == -*v && q == p))
    }

    /// Common denominator `L` and integer weights `L * p_j`.
    pub(crate) fn integer_weights(&self) -> (BigInt, Vec<BigInt>) {
        let l = self
            .atoms
            .iter()
            .fold(BigInt::one(), |acc, (_, p)| acc.lcm(p.denom()));
        let w = self
            .atoms
            .iter()
            .map(|(_, p)| (p * Rational::from_integer(l.clone())).to_integer())
            .collect();
        (l, w)
    }

    /// Integer weights as `u64`, if they fit.
    pub(crate) fn small_weights(&self) -> Option<(u64, Vec<u64>)> {
        let (l, w) = self.integer_weights();
        Some((
            l.to_u64()?,
            w.iter().map(|x| x.to_u64()).collect::<Option<_>>()?,
        ))
    }

    /// `|E e(eta * theta)|` for a real phase `theta` measured in turns.
    pub fn char_abs(&self, theta: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (v, p) in &self.atoms {
            let w = rational::to_f64(p);
            let a = std::f64::consts::TAU * theta * *v as f64;
            re += w * a.cos();
            im += w * a.sin();
        }
        re.hypot(im)
    }
}

impl fmt::Display for EtaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            EtaLabel::Bernoulli => f.write_str("bernoulli"),
            EtaLabel::Lazy(mu) => write!(f, "lazy({})", rational::format(mu)),
            EtaLabel::Custom => {
                f.write_str("custom{")?;
                for (i, (v, p)) in self.atoms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}: {}", rational::format(p))?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EtaJson {
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    atoms: Option<Vec<(i64, String)>>,
}

impl Serialize for EtaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (label, mu) = match &self.label {
            EtaLabel::Bernoulli => ("bernoulli", None),
            EtaLabel::Lazy(mu) => ("lazy", Some(rational::format(mu))),
            EtaLabel::Custom => ("custom", None),
        };
        EtaJson {
            label: label.into(),
            mu,
            atoms: Some(
                self.atoms
                    .iter()
                    .map(|(v, p)| (*v, rational::format(p)))
                    .collect(),
            ),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EtaSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = EtaJson::deserialize(d)?;
        let atoms = raw
            .atoms
            .map(|a| {
                a.into_iter()
                    .map(|(v, p)| rational::parse(&p).map(|p| (v, p)))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()
            .map_err(D::Error::custom)?;
        let spec = match raw.label.as_str() {
            "bernoulli" => EtaSpec::bernoulli(),
            "lazy" => {
                let mu = raw
                    .mu
                    .ok_or_else(|| D::Error::custom("lazy eta needs a \"mu\" field"))?;
                EtaSpec::lazy(rational::parse(&mu).map_err(D::Error::custom)?)
                    .map_err(D::Error::custom)?
            }
            "custom" => {
                let atoms = atoms
                    .clone()
                    .ok_or_else(|| D::Error::custom("custom eta needs \"atoms\""))?;
                EtaSpec::custom(atoms).map_err(D::Error::custom)?
            }
            other => return Err(D::Error::custom(format!("unknown eta label {other:?}"))),
        };
        if let Some(atoms) = atoms {
            let given = EtaSpec::custom(atoms).map_err(D::Error::custom)?;
            if given.atoms != spec.atoms {
                return Err(D::Error::custom("atoms disagree with the eta label"));
            }
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn lazy_atoms() {
        let e = EtaSpec::lazy(ratio(1, 2)).unwrap();
        assert_eq!(
            e.atoms(),
            &[(-1, ratio(1, 4)), (0, ratio(1, 2)), (1, ratio(1, 4))]
        );
        assert_eq!(
            EtaSpec::lazy(ratio(1, 1)).unwrap().atoms(),
            EtaSpec::bernoulli().atoms()
        );
        assert!(EtaSpec::lazy(ratio(0, 1)).is_err());
        assert!(EtaSpec::lazy(ratio(3, 2)).is_err());
    }

    #[test]
    fn custom_validation() {
        assert!(EtaSpec::custom(vec![(0, ratio(1, 2))]).is_err());
        assert!(EtaSpec::custom(vec![(0, ratio(-1, 2)), (1, ratio(3, 2))]).is_err());
        let e =
            EtaSpec::custom(vec![(2, ratio(1, 3)), (2, ratio(1, 3)), (5, ratio(1, 3))]).unwrap();
        assert_eq!(e.atoms(), &[(2, ratio(2, 3)), (5, ratio(1, 3))]);
        assert!(!e.is_symmetric());
        assert!(EtaSpec::bernoulli().is_symmetric());
    }

    #[test]
    fn json_forms() {
        let b: EtaSpec = serde_json::from_str(r#"{"label":"bernoulli"}"#).unwrap();
        assert_eq!(b, EtaSpec::bernoulli());
        let l: EtaSpec = serde_json::from_str(r#"{"label":"lazy","mu":"1/2"}"#).unwrap();
        assert_eq!(l, EtaSpec::lazy(ratio(1, 2)).unwrap());
        let c: EtaSpec =
            serde_json::from_str(r#"{"label":"custom","atoms":[[0,"1/3"],[1,"2/3"]]}"#).unwrap();
        assert_eq!(c.atoms().len(), 2);
        let round: EtaSpec = serde_json::from_str(&serde_json::to_string(&l).unwrap()).unwrap();
        assert_eq!(round, l);
        assert!(
            serde_json::from_str::<EtaSpec>(r#"{"label":"bernoulli","atoms":[[0,"1"]]}"#).is_err()
        );
        assert!(serde_json::from_str::<EtaSpec>(r#"{"label":"lazy"}"#).is_err());
    }

    #[test]
    fn characteristic_function() {
        let b = EtaSpec::bernoulli();
        assert!((b.char_abs(0.25) - 0.0).abs() < 1e-12);
        let l = EtaSpec::lazy(ratio(1, 2)).unwrap();
        let x = 0.1f64;
        assert!((l.char_abs(x) - (0.5 + 0.5 * (std::f64::consts::TAU * x).cos())).abs() < 1e-12);
    }
}
