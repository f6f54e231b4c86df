//! Generalized arithmetic progressions over `Z`, `Z^d` and `F_p`.

mod embed;
mod lemmas;

pub use embed::{freiman_embed, EmbeddingCertificate};
pub use lemmas::{divide_containment, iterated_sumset, sarkozy_cover, sumset_scalar};

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Group elements are stored as coordinate vectors; scalars have length 1.
pub type Point = Vec<i64>;

/// Default rank limit for membership search.
pub const CONTAINS_RANK_LIMIT: usize = 4;

/// Default cap on box enumeration.
pub const DEFAULT_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ambient {
    Integers,
    Lattice(usize),
    Field(u64),
}

impl Ambient {
    pub fn dim(self) -> usize {
        match self {
            Ambient::Lattice(d) => d,
            _ => 1,
        }
    }

    pub fn modulus(self) -> Option<u64> {
        match self {
            Ambient::Field(p) => Some(p),
            _ => None,
        }
    }

    fn reduce(self, v: i128) -> i128 {
        match self {
            Ambient::Field(p) => v.rem_euclid(p as i128),
            _ => v,
        }
    }
}

/// `{a0 + sum x_i a_i : lower_i <= x_i <= upper_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gap {
    ambient: Ambient,
    offset: Point,
    generators: Vec<Point>,
    lower: Vec<i64>,
    upper: Vec<i64>,
}

impl Gap {
    pub fn new(
        ambient: Ambient,
        offset: Point,
        generators: Vec<Point>,
        lower: Vec<i64>,
        upper: Vec<i64>,
    ) -> Result<Self> {
        let d = ambient.dim();
        if d == 0 {
            return Err(Error::InvalidInput(
                "lattice dimension must be positive".into(),
            ));
        }
        if let Ambient::Field(p) = ambient {
            if p < 2 {
                return Err(Error::InvalidInput(format!("modulus {p} is not a prime")));
            }
        }
        if offset.len() != d || generators.iter().any(|g| g.len() != d) {
            return Err(Error::InvalidInput(format!(
                "every element must have {d} coordinate(s)"
            )));
        }
        if lower.len() != generators.len() || upper.len() != generators.len() {
            return Err(Error::InvalidInput(
                "bounds and generators must have equal length".into(),
            ));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidInput(
                "every lower bound must be <= its upper bound".into(),
            ));
        }
        let norm = |v: Point| -> Point {
            v.into_iter()
                .map(|c| ambient.reduce(c as i128) as i64)
                .collect()
        };
        Ok(Self {
            ambient,
            offset: norm(offset),
            generators: generators.into_iter().map(norm).collect(),
            lower,
            upper,
        })
    }

    /// Symmetric GAP `{sum x_i a_i : |x_i| <= m_i}` in `Z`.
    pub fn symmetric(generators: &[i64], bounds: &[i64]) -> Result<Self> {
        Self::new(
            Ambient::Integers,
            vec![0],
            generators.iter().map(|&g| vec![g]).collect(),
            bounds.iter().map(|&m| -m).collect(),
            bounds.to_vec(),
        )
    }

    /// Symmetric GAP in `Z^d`.
    pub fn symmetric_lattice(d: usize, generators: Vec<Point>, bounds: &[i64]) -> Result<Self> {
        Self::new(
            Ambient::Lattice(d),
            vec![0; d],
            generators,
            bounds.iter().map(|&m| -m).collect(),
            bounds.to_vec(),
        )
    }

    /// Symmetric GAP in `F_p`.
    pub fn symmetric_mod(p: u64, generators: &[i64], bounds: &[i64]) -> Result<Self> {
        Self::new(
            Ambient::Field(p),
            vec![0],
            generators.iter().map(|&g| vec![g]).collect(),
            bounds.iter().map(|&m| -m).collect(),
            bounds.to_vec(),
        )
    }

    pub fn point(x: i64) -> Self {
        Self {
            ambient: Ambient::Integers,
            offset: vec![x],
            generators: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn offset(&self) -> &Point {
        &self.offset
    }

    pub fn generators(&self) -> &[Point] {
        &self.generators
    }

    /// Generators of a scalar GAP.
    pub fn scalar_generators(&self) -> Vec<i64> {
        self.generators.iter().map(|g| g[0]).collect()
    }

    pub fn lower(&self) -> &[i64] {
        &self.lower
    }

    pub fn upper(&self) -> &[i64] {
        &self.upper
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.offset.iter().all(|&c| c == 0)
            && self.lower.iter().zip(&self.upper).all(|(&l, &u)| l == -u)
    }

    /// Box cardinality, saturating at `u128::MAX`.
    pub fn volume(&self) -> u128 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&l, &u)| (u as i128 - l as i128 + 1) as u128)
            .fold(1u128, |acc, w| acc.saturating_mul(w))
    }

    fn dilated_bounds(&self, t: i64) -> (Vec<i64>, Vec<i64>) {
        (
            self.lower.iter().map(|&l| l.saturating_mul(t)).collect(),
            self.upper.iter().map(|&u| u.saturating_mul(t)).collect(),
        )
    }

    /// `a0 + sum x_i a_i`.
    pub fn eval(&self, coeffs: &[i64]) -> Point {
        (0..self.dim())
            .map(|c| {
                let mut acc = self.offset[c] as i128;
                for (g, &x) in self.generators.iter().zip(coeffs) {
                    acc += g[c] as i128 * x as i128;
                }
                self.ambient.reduce(acc) as i64
            })
            .collect()
    }

    pub fn volume_and_enumerate(&self, cap: u128) -> Result<(u128, BTreeSet<Point>)> {
        let volume = self.volume();
        if volume > cap {
            return Err(Error::CapExceeded { volume, cap });
        }
        let mut out = BTreeSet::new();
        for_each_image(self, &self.lower, &self.upper, |p| {
            out.insert(p.to_vec());
            true
        });
        Ok((volume, out))
    }

    /// Element set of a scalar GAP.
    pub fn enumerate_scalar(&self, cap: u128) -> Result<BTreeSet<i64>> {
        let (_, pts) = self.volume_and_enumerate(cap)?;
        Ok(pts.into_iter().map(|p| p[0]).collect())
    }

    /// Injectivity of the box map on the `t`-dilated box.
    pub fn is_proper(&self, t: i64, cap: u128) -> Result<bool> {
        if t < 1 {
            return Err(Error::InvalidInput("dilation t must be positive".into()));
        }
        let (lower, upper) = self.dilated_bounds(t);
        let widths: Vec<i128> = lower
            .iter()
            .zip(&upper)
            .map(|(&l, &u)| u as i128 - l as i128)
            .collect();
        let live: Vec<usize> = (0..self.rank()).filter(|&i| widths[i] > 0).collect();
        if live.is_empty() {
            return Ok(true);
        }
        if live
            .iter()
            .any(|&i| self.generators[i].iter().all(|&c| c == 0))
        {
            return Ok(false);
        }
        match self.ambient {
            Ambient::Integers | Ambient::Lattice(_) => {
                let gens: Vec<&Point> = live.iter().map(|&i| &self.generators[i]).collect();
                if independent(&gens) {
                    return Ok(true);
                }
                if self.ambient == Ambient::Integers && live.len() == 2 {
                    let (a1, a2) = (gens[0][0] as i128, gens[1][0] as i128);
                    let g = a1.gcd(&a2);
                    let (w1, w2) = (widths[live[0]], widths[live[1]]);
                    return Ok(a2.abs() / g > w1 || a1.abs() / g > w2);
                }
            }
            Ambient::Field(p) => {
                if live.len() == 1 {
                    return Ok(widths[live[0]] < p as i128);
                }
            }
        }
        let volume = lower
            .iter()
            .zip(&upper)
            .map(|(&l, &u)| (u as i128 - l as i128 + 1) as u128)
            .fold(1u128, |a, w| a.saturating_mul(w));
        if volume > cap {
            return Err(Error::CapExceeded { volume, cap });
        }
        let mut seen = HashSet::with_capacity(volume as usize);
        let mut injective = true;
        for_each_image(self, &lower, &upper, |p| {
            injective = seen.insert(p.to_vec());
            injective
        });
        Ok(injective)
    }

    /// Bounds multiplied by `dilate_l`, generators (and offset) by `scale_c`.
    pub fn transform(&self, dilate_l: i64, scale_c: i64) -> Result<Gap> {
        if dilate_l < 1 || scale_c == 0 {
            return Err(Error::InvalidInput(
                "dilation must be positive and scale nonzero".into(),
            ));
        }
        let (lower, upper) = self.dilated_bounds(dilate_l);
        let scale = |v: &Point| -> Point { v.iter().map(|&c| c.saturating_mul(scale_c)).collect() };
        Gap::new(
            self.ambient,
            scale(&self.offset),
            self.generators.iter().map(scale).collect(),
            lower,
            upper,
        )
    }

    /// Generators `l a_i`, bounds divided by `l^2` and rounded toward zero.
    pub fn sarkozy_shrink(&self, l: i64) -> Result<Gap> {
        if l < 1 {
            return Err(Error::InvalidInput("l must be positive".into()));
        }
        let l2 = l.saturating_mul(l);
        Gap::new(
            self.ambient,
            self.offset.clone(),
            self.generators
                .iter()
                .map(|g| g.iter().map(|&c| c.saturating_mul(l)).collect())
                .collect(),
            self.lower.iter().map(|&m| m / l2).collect(),
            self.upper.iter().map(|&m| m / l2).collect(),
        )
    }

    /// Drops generators whose coefficient range is a single value, folding
    /// them into the offset.
    pub fn trimmed(&self) -> Gap {
        let mut offset: Vec<i128> = self.offset.iter().map(|&c| c as i128).collect();
        let (mut gens, mut lower, mut upper) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..self.rank() {
            let zero = self.generators[i].iter().all(|&c| c == 0);
            if self.lower[i] == self.upper[i] || zero {
                let x = if zero { 0 } else { self.lower[i] as i128 };
                for (o, &g) in offset.iter_mut().zip(&self.generators[i]) {
                    *o += g as i128 * x;
                }
            } else {
                gens.push(self.generators[i].clone());
                lower.push(self.lower[i]);
                upper.push(self.upper[i]);
            }
        }
        let offset = offset
            .into_iter()
            .map(|c| self.ambient.reduce(c) as i64)
            .collect();
        Gap {
            ambient: self.ambient,
            offset,
            generators: gens,
            lower,
            upper,
        }
    }

    pub fn contains(&self, x: &[i64]) -> Result<Option<Vec<i64>>> {
        self.contains_with_limit(x, CONTAINS_RANK_LIMIT)
    }

    pub fn contains_scalar(&self, x: i64) -> Result<bool> {
        Ok(self.contains(&[x])?.is_some())
    }

    /// Membership with a witness coefficient vector. Coefficients are tried
    /// by increasing absolute value so a symmetric GAP reports `0` for `0`.
    pub fn contains_with_limit(&self, x: &[i64], limit: usize) -> Result<Option<Vec<i64>>> {
        if self.rank() > limit {
            return Err(Error::RankTooLarge {
                rank: self.rank(),
                limit,
            });
        }
        if x.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "element has {} coordinate(s), GAP lives in dimension {}",
                x.len(),
                self.dim()
            )));
        }
        let target: Vec<i128> = x
            .iter()
            .zip(&self.offset)
            .map(|(&a, &b)| self.ambient.reduce(a as i128 - b as i128))
            .collect();
        if self.rank() == 0 {
            return Ok(target.iter().all(|&c| c == 0).then(Vec::new));
        }
        let search = Search::new(self);
        let mut coeffs = vec![0i64; self.rank()];
        Ok(search
            .descend(self.rank() - 1, target, &mut coeffs)
            .then_some(coeffs))
    }
}

/// Calls `f` on the image of every box point in odometer order; `f` returns
/// false to stop.
fn for_each_image(gap: &Gap, lower: &[i64], upper: &[i64], mut f: impl FnMut(&[i64]) -> bool) {
    let r = gap.rank();
    let d = gap.dim();
    let mut coeffs = lower.to_vec();
    let mut acc: Vec<i128> = (0..d)
        .map(|c| {
            let mut v = gap.offset[c] as i128;
            for i in 0..r {
                v += gap.generators[i][c] as i128 * lower[i] as i128;
            }
            v
        })
        .collect();
    let mut buf = vec![0i64; d];
    loop {
        for c in 0..d {
            buf[c] = gap.ambient.reduce(acc[c]) as i64;
        }
        if !f(&buf) {
            return;
        }
        let mut i = 0;
        loop {
            if i == r {
                return;
            }
            if coeffs[i] < upper[i] {
                coeffs[i] += 1;
                for c in 0..d {
                    acc[c] += gap.generators[i][c] as i128;
                }
                break;
            }
            let span = upper[i] as i128 - lower[i] as i128;
            for c in 0..d {
                acc[c] -= gap.generators[i][c] as i128 * span;
            }
            coeffs[i] = lower[i];
            i += 1;
        }
    }
}

/// Linear independence over `Q` by fraction-free elimination.
fn independent(gens: &[&Point]) -> bool {
    let r = gens.len();
    let d = gens.first().map_or(0, |g| g.len());
    if r > d {
        return false;
    }
    let mut m: Vec<Vec<i128>> = gens
        .iter()
        .map(|g| g.iter().map(|&c| c as i128).collect())
        .collect();
    let mut row = 0;
    for col in 0..d {
        let Some(piv) = (row..r).find(|&i| m[i][col] != 0) else {
            continue;
        };
        m.swap(row, piv);
        for i in row + 1..r {
            let (a, b) = (m[row][col], m[i][col]);
            if b == 0 {
                continue;
            }
            let g = a.gcd(&b);
            let (fa, fb) = (a / g, b / g);
            let pivot_row = m[row].clone();
            for (x, &y) in m[i].iter_mut().zip(&pivot_row) {
                *x = *x * fa - y * fb;
            }
            let cg = m[i].iter().fold(0i128, |g, &v| g.gcd(&v));
            if cg > 1 {
                m[i].iter_mut().for_each(|v| *v /= cg);
            }
        }
        row += 1;
        if row == r {
            return true;
        }
    }
    row == r
}

struct Search<'a> {
    gap: &'a Gap,
    /// Per prefix `0..=s`, per coordinate, the reachable `[min, max]`.
    reach: Vec<Vec<(i128, i128)>>,
}

impl<'a> Search<'a> {
    fn new(gap: &'a Gap) -> Self {
        let d = gap.dim();
        let mut reach = Vec::with_capacity(gap.rank());
        let mut cur = vec![(0i128, 0i128); d];
        for i in 0..gap.rank() {
            for (c, slot) in cur.iter_mut().enumerate() {
                let a = gap.generators[i][c] as i128;
                let (x, y) = (a * gap.lower[i] as i128, a * gap.upper[i] as i128);
                slot.0 += x.min(y);
                slot.1 += x.max(y);
            }
            reach.push(cur.clone());
        }
        Self { gap, reach }
    }

    fn in_reach(&self, s: usize, t: &[i128]) -> bool {
        self.gap.ambient.modulus().is_some()
            || self.reach[s]
                .iter()
                .zip(t)
                .all(|(&(lo, hi), &v)| lo <= v && v <= hi)
    }

    fn descend(&self, s: usize, target: Vec<i128>, coeffs: &mut [i64]) -> bool {
        if !self.in_reach(s, &target) {
            return false;
        }
        if s == 0 {
            return match self.solve_last(&target) {
                Some(x) => {
                    coeffs[0] = x;
                    true
                }
                None => false,
            };
        }
        let g = &self.gap.generators[s];
        for x in by_magnitude(self.gap.lower[s], self.gap.upper[s]) {
            let next: Vec<i128> = target
                .iter()
                .zip(g)
                .map(|(&t, &a)| self.gap.ambient.reduce(t - a as i128 * x as i128))
                .collect();
            coeffs[s] = x;
            if self.descend(s - 1, next, coeffs) {
                return true;
            }
        }
        false
    }

    fn solve_last(&self, t: &[i128]) -> Option<i64> {
        let (lo, hi) = (self.gap.lower[0], self.gap.upper[0]);
        let a: Vec<i128> = self.gap.generators[0].iter().map(|&c| c as i128).collect();
        if a.iter().all(|&c| c == 0) {
            return t.iter().all(|&c| c == 0).then(|| 0i64.clamp(lo, hi));
        }
        let x = match self.gap.ambient {
            Ambient::Field(p) => {
                let p = p as i128;
                let inv = mod_inverse(a[0], p)?;
                let s = (t[0] * inv).rem_euclid(p);
                let base = lo as i128 + (s - lo as i128).rem_euclid(p);
                // the representative closest to zero keeps witnesses small
                let mut best = base;
                let mut cand = base;
                while cand <= hi as i128 {
                    if cand.abs() < best.abs() {
                        best = cand;
                    }
                    cand += p;
                }
                best
            }
            _ => {
                let c = a.iter().position(|&v| v != 0)?;
                if t[c] % a[c] != 0 {
                    return None;
                }
                let x = t[c] / a[c];
                if a.iter().zip(t).any(|(&ai, &ti)| ai * x != ti) {
                    return None;
                }
                x
            }
        };
        (lo as i128 <= x && x <= hi as i128).then_some(x as i64)
    }
}

/// `0, -1, 1, -2, 2, ...` restricted to `[lo, hi]`.
fn by_magnitude(lo: i64, hi: i64) -> impl Iterator<Item = i64> {
    let start = 0i64.clamp(lo, hi);
    let reach = (start - lo).max(hi - start);
    std::iter::once(start).chain((1..=reach).flat_map(move |k| {
        [start - k, start + k]
            .into_iter()
            .filter(move |&x| lo <= x && x <= hi)
    }))
}

pub(crate) fn mod_inverse(a: i128, p: i128) -> Option<i128> {
    let a = a.rem_euclid(p);
    if a == 0 {
        return None;
    }
    let e = a.extended_gcd(&p);
    (e.gcd == 1).then(|| e.x.rem_euclid(p))
}

impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let elem = |v: &Point| -> String {
            match self.ambient {
                Ambient::Lattice(_) => format!("{v:?}"),
                _ => v[0].to_string(),
            }
        };
        write!(f, "{{{}", elem(&self.offset))?;
        for i in 0..self.rank() {
            write!(
                f,
                " + {}*x{} ({}..={})",
                elem(&self.generators[i]),
                i + 1,
                self.lower[i],
                self.upper[i]
            )?;
        }
        if let Ambient::Field(p) = self.ambient {
            write!(f, " mod {p}")?;
        }
        f.write_str("}")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Elem {
    Scalar(i64),
    Vector(Vec<i64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GapJson {
    offset: Elem,
    generators: Vec<Elem>,
    lower: Vec<i64>,
    upper: Vec<i64>,
    modulus: Option<u64>,
}

impl Serialize for Gap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let wrap = |v: &Point| match self.ambient {
            Ambient::Lattice(_) => Elem::Vector(v.clone()),
            _ => Elem::Scalar(v[0]),
        };
        GapJson {
            offset: wrap(&self.offset),
            generators: self.generators.iter().map(wrap).collect(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            modulus: self.ambient.modulus(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GapJson::deserialize(d)?;
        let ambient = match (&raw.offset, raw.modulus) {
            (Elem::Scalar(_), Some(p)) => Ambient::Field(p),
            (Elem::Scalar(_), None) => Ambient::Integers,
            (Elem::Vector(v), None) => Ambient::Lattice(v.len()),
            (Elem::Vector(_), Some(_)) => {
                return Err(D::Error::custom("vector GAPs cannot carry a modulus"))
            }
        };
        let unwrap = |e: Elem| -> std::result::Result<Point, D::Error> {
            match (e, ambient) {
                (Elem::Vector(v), Ambient::Lattice(_)) => Ok(v),
                (Elem::Scalar(x), Ambient::Integers | Ambient::Field(_)) => Ok(vec![x]),
                _ => Err(D::Error::custom("mixed scalar and vector elements")),
            }
        };
        let offset = unwrap(raw.offset)?;
        let generators = raw
            .generators
            .into_iter()
            .map(unwrap)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Gap::new(ambient, offset, generators, raw.lower, raw.upper).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q310() -> Gap {
        Gap::symmetric(&[3, 10], &[2, 1]).unwrap()
    }

    #[test]
    fn enumerate_examples() {
        let (vol, els) = q310().volume_and_enumerate(100).unwrap();
        assert_eq!(vol, 15);
        let got: Vec<i64> = els.into_iter().map(|p| p[0]).collect();
        assert_eq!(
            got,
            vec![-16, -13, -10, -7, -6, -4, -3, 0, 3, 4, 6, 7, 10, 13, 16]
        );

        let zero = Gap::symmetric(&[0], &[5]).unwrap();
        let (vol, els) = zero.volume_and_enumerate(100).unwrap();
        assert_eq!((vol, els.len()), (11, 1));

        let (vol, els) = Gap::point(7).volume_and_enumerate(1).unwrap();
        assert_eq!(vol, 1);
        assert!(els.contains(&vec![7]));

        assert!(matches!(
            q310().volume_and_enumerate(14),
            Err(Error::CapExceeded {
                volume: 15,
                cap: 14
            })
        ));
    }

    #[test]
    fn properness_examples() {
        assert!(q310().is_proper(1, 1000).unwrap());
        assert!(!Gap::symmetric(&[1, 2], &[2, 1])
            .unwrap()
            .is_proper(1, 1000)
            .unwrap());
        for n in [1, 5, 40] {
            for t in 1..5 {
                assert!(Gap::symmetric(&[1], &[n])
                    .unwrap()
                    .is_proper(t, 10)
                    .unwrap());
            }
        }
        // kernel vector (10, -3) fits the 3-dilated box but not the 2-dilated one
        assert!(q310().is_proper(2, 1000).unwrap());
        assert!(!q310().is_proper(3, 1000).unwrap());
    }

    #[test]
    fn properness_in_field() {
        let g = Gap::symmetric_mod(7, &[1], &[3]).unwrap();
        assert!(g.is_proper(1, 100).unwrap());
        assert!(!g.is_proper(2, 100).unwrap());
        let g2 = Gap::symmetric_mod(101, &[1, 10], &[4, 4]).unwrap();
        assert!(g2.is_proper(1, 1000).unwrap());
        assert!(!g2.is_proper(2, 1000).unwrap());
    }

    #[test]
    fn transform_examples() {
        let g = Gap::symmetric(&[5], &[3]).unwrap();
        assert_eq!(
            g.transform(2, 1).unwrap(),
            Gap::symmetric(&[5], &[6]).unwrap()
        );
        let s = Gap::symmetric(&[1], &[9])
            .unwrap()
            .sarkozy_shrink(2)
            .unwrap();
        assert_eq!(s, Gap::symmetric(&[2], &[2]).unwrap());
        let flipped = q310().transform(1, -1).unwrap();
        assert_eq!(
            flipped.enumerate_scalar(100).unwrap(),
            q310().enumerate_scalar(100).unwrap()
        );
    }

    #[test]
    fn contains_examples() {
        assert_eq!(q310().contains(&[13]).unwrap(), Some(vec![1, 1]));
        assert_eq!(q310().contains(&[5]).unwrap(), None);
        assert_eq!(q310().contains(&[0]).unwrap(), Some(vec![0, 0]));
        let wide = Gap::symmetric(&[1, 2, 3, 4, 5], &[1; 5]).unwrap();
        assert!(matches!(
            wide.contains(&[0]),
            Err(Error::RankTooLarge { rank: 5, limit: 4 })
        ));
        assert!(wide.contains_with_limit(&[0], 5).unwrap().is_some());
    }

    #[test]
    fn contains_lattice_and_field() {
        let g = Gap::symmetric_lattice(2, vec![vec![1, 0], vec![1, 2]], &[3, 2]).unwrap();
        assert_eq!(g.contains(&[3, 4]).unwrap(), Some(vec![1, 2]));
        assert_eq!(g.contains(&[0, 1]).unwrap(), None);
        let f = Gap::symmetric_mod(11, &[3], &[2]).unwrap();
        // -2*3 = -6 = 5 mod 11
        assert_eq!(f.contains(&[5]).unwrap(), Some(vec![-2]));
        assert_eq!(f.contains(&[1]).unwrap(), None);
    }

    #[test]
    fn json_round_trip() {
        let s = serde_json::to_string(&q310()).unwrap();
        assert_eq!(
            s,
            r#"{"offset":0,"generators":[3,10],"lower":[-2,-1],"upper":[2,1],"modulus":null}"#
        );
        let back: Gap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q310());

        let lat = Gap::symmetric_lattice(2, vec![vec![1, 2]], &[3]).unwrap();
        let back: Gap = serde_json::from_str(&serde_json::to_string(&lat).unwrap()).unwrap();
        assert_eq!(back, lat);

        let f = Gap::symmetric_mod(13, &[20], &[1]).unwrap();
        assert_eq!(f.generators()[0], vec![7]);
        let back: Gap = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);

        assert!(serde_json::from_str::<Gap>(
            r#"{"offset":0,"generators":[1],"lower":[2],"upper":[1],"modulus":null}"#
        )
        .is_err());
    }

    #[test]
    fn trimmed_folds_degenerate_directions() {
        let g = Gap::new(
            Ambient::Integers,
            vec![1],
            vec![vec![4], vec![0], vec![3]],
            vec![2, -3, -1],
            vec![2, 3, 1],
        )
        .unwrap();
        let t = g.trimmed();
        assert_eq!(t.rank(), 1);
        assert_eq!(t.offset(), &vec![9]);
        assert_eq!(
            t.enumerate_scalar(100).unwrap(),
            g.enumerate_scalar(100).unwrap()
        );
    }

    #[test]
    fn independence() {
        assert!(independent(&[&vec![1, 0], &vec![1, 2]]));
        assert!(!independent(&[&vec![2, 4], &vec![1, 2]]));
        assert!(!independent(&[&vec![1], &vec![2]]));
    }
}
