use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::fourier::{dist, multiplicities, SLACK};
use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Default `A` in the level cap `m <= ceil(A log n)`.
pub const DEFAULT_A: f64 = 10.0;
/// Default constant in the dual set definition.
pub const DEFAULT_DUAL_CONSTANT: u64 = 200;

const CHUNK: usize = 4096;
const LEVEL_SET_JSON_LIMIT: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// How the core `V'` is selected.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CoreMode {
    /// Threshold `eps^-1 (m/n) |S_m|`.
    Epsilon {
        #[serde(with = "rational::serde_string")]
        epsilon: Rational,
    },
    /// Threshold `(m/n') |S_m|`.
    Budget { n_prime: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoreReport {
    pub mode: CoreMode,
    /// `C0 = eps^-1`, absent in budget mode.
    pub c0: Option<String>,
    /// Threshold on the level sum, as a real number.
    pub threshold: f64,
    pub core: Vec<i64>,
    /// Exceptional values by descending level sum.
    pub exceptional: Vec<i64>,
    /// `|V \ V'|` against `eps n` (or `n'`).
    pub exceptional_bound: Certificate,
    /// `sum_i sum_{xi in S_m} ||v_i xi/p||^2` computed both ways; equal by
    /// double counting.
    pub double_count_rows: f64,
    pub double_count_cols: f64,
    pub double_count_identity: bool,
    pub double_count_bound: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualReport {
    pub constant: u64,
    pub size: usize,
    pub elements: Vec<u64>,
    /// `|S*| <= 8p / |S_m|`.
    pub cardinality: Certificate,
    /// `min_{a in S*} T_a` against `|S_m| / 2`.
    pub t_lower: Certificate,
    /// `sum_a T_a^2` against `2p|S_m|`.
    pub t_energy: Certificate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub k: usize,
    pub c1: f64,
    pub dual_constant: u64,
    pub v2_size: usize,
    pub sumset_size: usize,
    /// `|kV''| / (rho^-1 e^(2-m))`.
    pub ratio: f64,
    /// `k^2 C0 m / n <= 1/constant` (or with `n'`), which makes the dual
    /// inclusion follow from the triangle inequality.
    pub premise: Certificate,
    pub sampled: usize,
    pub triangle_ok: usize,
    pub inclusion_ok: usize,
    /// Every sampled element of `kV''` landed in `S*`.
    pub inclusion_holds: bool,
}

/// Level sets of a multiset in `F_p` and the downstream certificates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetReport {
    pub p: u64,
    pub n: usize,
    pub values: Vec<i64>,
    #[serde(with = "rational::serde_string")]
    pub rho: Rational,
    pub a_constant: f64,
    pub m_max: u32,
    pub m: u32,
    pub level_size: usize,
    #[serde(serialize_with = "ser_level_set")]
    pub level_set: Vec<u64>,
    /// `|S_m| e^(2-m) >= rho p`.
    pub heavy: Certificate,
    pub core: Option<CoreReport>,
    pub dual: Option<DualReport>,
    pub growth: Option<GrowthReport>,
}

fn ser_level_set<S: serde::Serializer>(v: &[u64], s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.len() <= LEVEL_SET_JSON_LIMIT {
        s.collect_seq(v)
    } else {
        s.serialize_none()
    }
}

/// `p^2 sum_i ||v_i xi / p||^2` for every `xi`.
fn level_values(counts: &[(u64, usize)], p: u64) -> Vec<u128> {
    let xs: Vec<u64> = (0..p).collect();
    xs.par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            chunk.iter().map(|&xi| {
                counts
                    .iter()
                    .map(|&(v, m)| {
                        let d = dist(v as i128 * xi as i128, p) as u128;
                        m as u128 * d * d
                    })
                    .sum::<u128>()
            })
        })
        .collect()
}

/// `p^2 sum_{xi in S} ||a xi / p||^2`.
fn level_sum(a: i64, set: &[u64], p: u64) -> u128 {
    set.iter()
        .map(|&xi| {
            let d = dist(a as i128 * xi as i128, p) as u128;
            d * d
        })
        .sum()
}

pub fn m_cap(n: usize, a: f64) -> u32 {
    ((a * (n.max(1) as f64).ln()).ceil() as u32).max(1)
}

/// `max(2, floor(c1 sqrt(n / m)))`.
pub fn growth_k(c1: f64, n_eff: usize, m: u32) -> usize {
    ((c1 * (n_eff as f64 / m.max(1) as f64).sqrt()).floor() as usize).max(2)
}

/// Smallest `m <= ceil(A log n)` with `|S_m| e^(2-m) >= rho p`.
pub fn heavy_level(values: &[i64], p: u64, rho: &Rational, a: f64) -> Result<LevelSetReport> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty multiset".into()));
    }
    let n = values.len();
    let counts = multiplicities(values, p);
    let levels = level_values(&counts, p);
    let p2 = p as u128 * p as u128;
    let m_max = m_cap(n, a);
    let rho_p = rational::to_f64(rho) * p as f64;
    let mut hist = vec![0usize; m_max as usize + 1];
    for &l in &levels {
        let idx = l.div_ceil(p2).max(1);
        if idx <= m_max as u128 {
            hist[idx as usize] += 1;
        }
    }
    let mut size = 0usize;
    for m in 1..=m_max {
        size += hist[m as usize];
        let lhs = size as f64 * (2.0 - m as f64).exp();
        if lhs >= rho_p * (1.0 - SLACK) {
            let bound = m as u128 * p2;
            let level_set: Vec<u64> = (0..p).filter(|&xi| levels[xi as usize] <= bound).collect();
            debug_assert_eq!(level_set.len(), size);
            let mut sorted = values.to_vec();
            sorted.sort_unstable();
            return Ok(LevelSetReport {
                p,
                n,
                values: sorted,
                rho: rho.clone(),
                a_constant: a,
                m_max,
                m,
                level_size: size,
                level_set,
                heavy: Certificate {
                    lhs,
                    rhs: rho_p,
                    holds: true,
                },
                core: None,
                dual: None,
                growth: None,
            });
        }
    }
    Err(Error::NoHeavyLevel { m_max })
}

fn big(x: u128) -> BigUint {
    BigUint::from(x)
}

impl LevelSetReport {
    /// `p^2` times the level sum of `a` over `S_m`.
    pub fn level_sum(&self, a: i64) -> u128 {
        level_sum(a, &self.level_set, self.p)
    }

    fn threshold_ok(&self, mode: &CoreMode, sigma: u128, scale: u128) -> bool {
        let p2 = self.p as u128 * self.p as u128;
        let rhs = big(self.m as u128) * big(self.level_size as u128) * big(p2) * big(scale);
        match mode {
            CoreMode::Epsilon { epsilon } => {
                let num = epsilon.numer().to_biguint().expect("epsilon is positive");
                let den = epsilon.denom().to_biguint().expect("epsilon is positive");
                big(sigma) * num * big(self.n as u128) <= rhs * den
            }
            CoreMode::Budget { n_prime } => big(sigma) * big(*n_prime as u128) <= rhs,
        }
    }

    fn c0_f64(mode: &CoreMode) -> f64 {
        match mode {
            CoreMode::Epsilon { epsilon } => 1.0 / rational::to_f64(epsilon),
            CoreMode::Budget { .. } => 1.0,
        }
    }

    fn n_eff(&self, mode: &CoreMode) -> usize {
        match mode {
            CoreMode::Epsilon { .. } => self.n,
            CoreMode::Budget { n_prime } => *n_prime,
        }
    }

    /// Keeps the values whose level sum is below the double-counting
    /// threshold.
    pub fn core_select(&mut self, mode: CoreMode) -> Result<&CoreReport> {
        match &mode {
            CoreMode::Epsilon { epsilon } => {
                if epsilon <= &Rational::from_integer(0.into())
                    || epsilon > &Rational::from_integer(1.into())
                {
                    return Err(Error::InvalidInput("epsilon must lie in (0, 1]".into()));
                }
            }
            CoreMode::Budget { n_prime } => {
                if *n_prime == 0 {
                    return Err(Error::InvalidInput("n' must be positive".into()));
                }
            }
        }
        let p = self.p;
        let p2 = p as u128 * p as u128;
        let counts = multiplicities(&self.values, p);
        let mut sigma_of = std::collections::BTreeMap::new();
        for &v in &self.values {
            sigma_of
                .entry(v)
                .or_insert_with(|| level_sum(v, &self.level_set, p));
        }
        let mut core = Vec::new();
        let mut exceptional: Vec<(u128, i64)> = Vec::new();
        for &v in &self.values {
            let s = sigma_of[&v];
            if self.threshold_ok(&mode, s, 1) {
                core.push(v);
            } else {
                exceptional.push((s, v));
            }
        }
        exceptional.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

        let rows: u128 = self.values.iter().map(|v| sigma_of[v]).sum();
        let cols: u128 = self
            .level_set
            .iter()
            .map(|&xi| {
                counts
                    .iter()
                    .map(|&(v, m)| {
                        let d = dist(v as i128 * xi as i128, p) as u128;
                        m as u128 * d * d
                    })
                    .sum::<u128>()
            })
            .sum();
        let total_bound = self.m as u128 * self.level_size as u128 * p2;
        let p2f = p2 as f64;

        let exc = exceptional.len();
        let (exc_bound, exc_holds) = match &mode {
            CoreMode::Epsilon { epsilon } => {
                let bound = rational::to_f64(epsilon) * self.n as f64;
                let exact = Rational::from_integer((exc as u64).into())
                    <= epsilon * Rational::from_integer((self.n as u64).into());
                (bound, exact)
            }
            CoreMode::Budget { n_prime } => (*n_prime as f64, exc <= *n_prime),
        };
        let c0 = match &mode {
            CoreMode::Epsilon { epsilon } => Some(rational::format(&epsilon.recip())),
            CoreMode::Budget { .. } => None,
        };
        let threshold =
            Self::c0_f64(&mode) * self.m as f64 * self.level_size as f64 / self.n_eff(&mode) as f64;
        self.core = Some(CoreReport {
            mode,
            c0,
            threshold,
            core,
            exceptional: exceptional.into_iter().map(|(_, v)| v).collect(),
            exceptional_bound: Certificate {
                lhs: exc as f64,
                rhs: exc_bound,
                holds: exc_holds,
            },
            double_count_rows: rows as f64 / p2f,
            double_count_cols: cols as f64 / p2f,
            double_count_identity: rows == cols,
            double_count_bound: Certificate {
                lhs: rows as f64 / p2f,
                rhs: total_bound as f64 / p2f,
                holds: rows <= total_bound,
            },
        });
        Ok(self.core.as_ref().expect("just set"))
    }

    /// Full scan for `S* = {a : sum_{xi in S_m} ||a xi/p||^2 <= |S_m| / D}`.
    pub fn dual_set(&mut self, cap: u128, constant: u64) -> Result<&DualReport> {
        let p = self.p;
        let s = self.level_size;
        let needed = p as u128 * s as u128;
        if needed > cap {
            return Err(Error::BudgetExceeded {
                what: "dual set scan p |S_m|",
                needed,
                budget: cap,
            });
        }
        let p2 = p as u128 * p as u128;
        let cos_tab: Vec<f64> = (0..p)
            .map(|x| (std::f64::consts::TAU * x as f64 / p as f64).cos())
            .collect();
        let set = &self.level_set;
        let xs: Vec<u64> = (0..p).collect();
        let per_a: Vec<(u64, bool, f64)> = xs
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                chunk.iter().map(|&a| {
                    let mut sigma = 0u128;
                    let mut t = 0.0;
                    for &xi in set {
                        let r = (a as u128 * xi as u128 % p as u128) as u64;
                        let d = r.min(p - r) as u128;
                        sigma += d * d;
                        t += cos_tab[r as usize];
                    }
                    (a, sigma * constant as u128 <= s as u128 * p2, t)
                })
            })
            .collect();
        let elements: Vec<u64> = per_a.iter().filter(|x| x.1).map(|x| x.0).collect();
        let t_min = per_a
            .iter()
            .filter(|x| x.1)
            .map(|x| x.2)
            .fold(f64::INFINITY, f64::min);
        let energy: f64 = per_a.iter().map(|x| x.2 * x.2).sum();
        let size = elements.len();
        let bound8 = 8.0 * p as f64 / s as f64;
        self.dual = Some(DualReport {
            constant,
            size,
            elements,
            cardinality: Certificate {
                lhs: size as f64,
                rhs: bound8,
                holds: size as u128 * s as u128 <= 8 * p as u128,
            },
            t_lower: Certificate {
                lhs: t_min,
                rhs: s as f64 / 2.0,
                holds: t_min >= s as f64 / 2.0 - SLACK * s as f64,
            },
            t_energy: Certificate {
                lhs: energy,
                rhs: 2.0 * p as f64 * s as f64,
                holds: energy <= 2.0 * p as f64 * s as f64 * (1.0 + SLACK),
            },
        });
        Ok(self.dual.as_ref().expect("just set"))
    }

    /// `kV''` over `F_p` with `V'' = distinct(V') + {0}` and the dual
    /// inclusion checked on up to `samples` elements.
    pub fn growth_set(
        &mut self,
        k: usize,
        c1: f64,
        constant: u64,
        samples: usize,
        cap: usize,
    ) -> Result<&GrowthReport> {
        let core = self
            .core
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("growth_set needs core_select first".into()))?;
        let p = self.p;
        let mut v2: Vec<u64> = core
            .core
            .iter()
            .map(|&v| v.rem_euclid(p as i64) as u64)
            .collect();
        v2.push(0);
        v2.sort_unstable();
        v2.dedup();
        let needed = k as u128 * v2.len() as u128 * p.div_ceil(64) as u128;
        if needed > cap as u128 {
            return Err(Error::BudgetExceeded {
                what: "iterated sumset word operations",
                needed,
                budget: cap as u128,
            });
        }
        let sumset = bitset_sumset(&v2, k, p);
        let elements: Vec<u64> = (0..p).filter(|&x| sumset.get(x)).collect();

        let rho = rational::to_f64(&self.rho);
        let ratio = elements.len() as f64 / ((2.0 - self.m as f64).exp() / rho);
        let mode = core.mode.clone();
        let c0 = Self::c0_f64(&mode);
        let n_eff = self.n_eff(&mode) as f64;
        let premise_lhs = (k * k) as f64 * c0 * self.m as f64 / n_eff;
        let premise_rhs = 1.0 / constant as f64;

        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let chosen: Vec<u64> = if elements.len() <= samples {
            elements.clone()
        } else {
            elements
                .choose_multiple(&mut rng, samples)
                .copied()
                .collect()
        };
        let p2 = p as u128 * p as u128;
        let s = self.level_size as u128;
        let mut triangle_ok = 0;
        let mut inclusion_ok = 0;
        for &a in &chosen {
            let sigma = level_sum(a as i64, &self.level_set, p);
            if self.threshold_ok(&mode, sigma, (k * k) as u128) {
                triangle_ok += 1;
            }
            if sigma * constant as u128 <= s * p2 {
                inclusion_ok += 1;
            }
        }
        self.growth = Some(GrowthReport {
            k,
            c1,
            dual_constant: constant,
            v2_size: v2.len(),
            sumset_size: elements.len(),
            ratio,
            premise: Certificate {
                lhs: premise_lhs,
                rhs: premise_rhs,
                holds: premise_lhs <= premise_rhs,
            },
            sampled: chosen.len(),
            triangle_ok,
            inclusion_ok,
            inclusion_holds: inclusion_ok == chosen.len(),
        });
        Ok(self.growth.as_ref().expect("just set"))
    }

    pub fn level_size_u64(&self) -> u64 {
        self.level_size.to_u64().unwrap_or(u64::MAX)
    }
}

struct Bits {
    words: Vec<u64>,
    len: u64,
}

impl Bits {
    fn new(len: u64) -> Self {
        Self {
            words: vec![0; len.div_ceil(64) as usize],
            len,
        }
    }

    fn set(&mut self, i: u64) {
        self.words[(i / 64) as usize] |= 1 << (i % 64);
    }

    fn get(&self, i: u64) -> bool {
        self.words[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    /// `self |= other rotated by s` (cyclic shift modulo `len`).
    fn or_rotated(&mut self, other: &Bits, s: u64) {
        if s == 0 {
            for (a, b) in self.words.iter_mut().zip(&other.words) {
                *a |= b;
            }
            return;
        }
        for i in 0..other.len {
            if other.get(i) {
                let j = (i + s) % self.len;
                self.set(j);
            }
        }
    }
}

/// `k`-fold sumset of a set containing 0, modulo `p`.
fn bitset_sumset(set: &[u64], k: usize, p: u64) -> Bits {
    let mut cur = Bits::new(p);
    cur.set(0);
    for _ in 0..k {
        let mut next = Bits::new(p);
        let members: Vec<u64> = (0..p).filter(|&i| cur.get(i)).collect();
        for &x in set {
            if x == 0 {
                next.or_rotated(&cur, 0);
                continue;
            }
            for &i in &members {
                next.set((i + x) % p);
            }
        }
        cur = next;
    }
    cur
}
