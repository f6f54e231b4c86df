//! Small-ball probabilities of sums `sum z_i v_i` in `R^d` and the
//! discretized continuous inverse pipeline.

mod invert;
mod net;
mod optimality;
mod smallball;
mod znorm;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use invert::{
    continuous_invert, planted_continuous, planted_corners, Bullets, ContinuousOptions,
    ContinuousReport, PlantedContinuous, RealGap, RefineCase, Refinement,
};
pub use net::{ceil_root, net_count, NetConstants, NetCount};
pub use optimality::{min_rank1_cover, optimality_sample, CoverResult};
pub use smallball::{small_ball_bound, small_ball_mc, SmallBallBound, SmallBallEstimate};
pub use znorm::{cz_window, z_norm, z_norm_mc, CzWindow, ZNorm, ZNormEstimate};

pub const MAX_DIM: usize = 4;
const NORM_TOL: f64 = 1e-12;

/// `v_1..v_n` in `R^d` with `sum |v_i|^2 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorMultiset {
    d: usize,
    vectors: Vec<Vec<f64>>,
}

impl VectorMultiset {
    /// Rescales to unit total squared norm.
    pub fn new(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let d = Self::check(&vectors)?;
        let total: f64 = vectors.iter().flatten().map(|x| x * x).sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::InvalidInput(
                "vectors must have positive finite norm".into(),
            ));
        }
        let s = total.sqrt();
        let vectors = vectors
            .into_iter()
            .map(|v| v.into_iter().map(|x| x / s).collect())
            .collect();
        Ok(Self { d, vectors })
    }

    /// Rejects input whose squared norms do not already sum to 1.
    pub fn from_normalized(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let d = Self::check(&vectors)?;
        let total: f64 = vectors.iter().flatten().map(|x| x * x).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "sum of squared norms is {total}, not 1"
            )));
        }
        Ok(Self { d, vectors })
    }

    fn check(vectors: &[Vec<f64>]) -> Result<usize> {
        let d = vectors
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::InvalidInput("no vectors".into()))?;
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimension {d} not in 1..={MAX_DIM}"
            )));
        }
        if vectors
            .iter()
            .any(|v| v.len() != d || v.iter().any(|x| !x.is_finite()))
        {
            return Err(Error::InvalidInput(
                "vectors must share dimension and be finite".into(),
            ));
        }
        Ok(d)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// `c v_i`, unnormalized.
    pub fn scaled(&self, c: f64) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|v| v.iter().map(|x| x * c).collect())
            .collect()
    }

    /// Distinct vectors (bitwise) with multiplicities.
    pub fn grouped(&self) -> Vec<(Vec<f64>, usize)> {
        group(&self.vectors)
    }
}

pub(crate) fn group(vectors: &[Vec<f64>]) -> Vec<(Vec<f64>, usize)> {
    let mut m: BTreeMap<Vec<u64>, (Vec<f64>, usize)> = BTreeMap::new();
    for v in vectors {
        let key = v.iter().map(|x| x.to_bits()).collect();
        m.entry(key).or_insert_with(|| (v.clone(), 0)).1 += 1;
    }
    m.into_values().collect()
}

/// Law of the real coefficients `z_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawLaw")]
pub enum ZLaw {
    Bernoulli,
    Gaussian,
    /// `(value, probability)` pairs.
    Atoms {
        atoms: Vec<(f64, f64)>,
    },
}

// unit variants of a tagged enum ignore extra keys, so parse flat first
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaw {
    kind: String,
    atoms: Option<Vec<(f64, f64)>>,
}

impl TryFrom<RawLaw> for ZLaw {
    type Error = String;

    fn try_from(raw: RawLaw) -> std::result::Result<Self, String> {
        match (raw.kind.as_str(), raw.atoms) {
            ("bernoulli", None) => Ok(ZLaw::Bernoulli),
            ("gaussian", None) => Ok(ZLaw::Gaussian),
            ("atoms", Some(atoms)) => Ok(ZLaw::Atoms { atoms }),
            ("atoms", None) => Err("atoms law needs an atoms list".into()),
            (k @ ("bernoulli" | "gaussian"), Some(_)) => Err(format!("{k} law takes no atoms")),
            (k, _) => Err(format!("unknown z kind {k:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealEta {
    pub law: ZLaw,
    /// Supplied or measured window; computed on demand when absent.
    pub c_z: Option<f64>,
}

impl RealEta {
    pub fn new(law: ZLaw) -> Result<Self> {
        if let ZLaw::Atoms { atoms } = &law {
            if atoms.is_empty() || atoms.iter().any(|&(x, p)| !x.is_finite() || !(p > 0.0)) {
                return Err(Error::InvalidInput(
                    "atoms need finite values and positive mass".into(),
                ));
            }
            let total: f64 = atoms.iter().map(|a| a.1).sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("atom masses sum to {total}")));
            }
        }
        Ok(Self { law, c_z: None })
    }

    pub fn bernoulli() -> Self {
        Self {
            law: ZLaw::Bernoulli,
            c_z: None,
        }
    }

    pub fn gaussian() -> Self {
        Self {
            law: ZLaw::Gaussian,
            c_z: None,
        }
    }

    pub fn with_cz(mut self, c_z: f64) -> Self {
        self.c_z = Some(c_z);
        self
    }

    /// Exact atom list, if the law has one.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.law {
            ZLaw::Bernoulli => Some(vec![(-1.0, 0.5), (1.0, 0.5)]),
            ZLaw::Atoms { atoms } => Some(atoms.clone()),
            ZLaw::Gaussian => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            ZLaw::Bernoulli => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            ZLaw::Gaussian => rng.sample(StandardNormal),
            ZLaw::Atoms { atoms } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for &(x, p) in atoms {
                    acc += p;
                    if u < acc {
                        return x;
                    }
                }
                atoms.last().expect("nonempty").0
            }
        }
    }

    /// Law of `|z_1 - z_2|` for atom lists, merged by value.
    pub fn difference_atoms(&self) -> Option<Vec<(f64, f64)>> {
        let atoms = self.atoms()?;
        let mut m: BTreeMap<u64, f64> = BTreeMap::new();
        for &(a, p) in &atoms {
            for &(b, q) in &atoms {
                *m.entry((a - b).abs().to_bits()).or_default() += p * q;
            }
        }
        Some(m.into_iter().map(|(k, p)| (f64::from_bits(k), p)).collect())
    }
}
