use std::collections::{BTreeSet, HashMap, HashSet};

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gap_core::{self, mod_inverse, Ambient, Gap, Point};

/// Default multiplier on `k^-r |kX|` below which a rank is accepted.
pub const DEFAULT_K_FIT: f64 = 2.5;
pub const MAX_FIT_RANK: usize = 4;
const POPULAR_SAMPLE: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub k: usize,
    pub gamma: f64,
    pub r_max: usize,
    /// Rank `r` is accepted only when `vol <= k_fit k^-r |kX|`; `None`
    /// accepts the first rank with any covering GAP.
    pub k_fit: Option<f64>,
    pub max_volume: u128,
    /// Short differences tried as generators.
    pub candidates: usize,
    /// Cap on sumset sizes and enumerations.
    pub cap: usize,
    /// When no rank passes `k_fit`, return the smallest-volume proper
    /// candidate instead of failing.
    pub fallback_min_volume: bool,
}

impl FitConfig {
    pub fn new(k: usize, gamma: f64, r_max: usize) -> Self {
        Self {
            k,
            gamma,
            r_max,
            k_fit: Some(DEFAULT_K_FIT),
            max_volume: 1 << 40,
            candidates: 24,
            cap: 20_000_000,
            fallback_min_volume: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FitRoute {
    Direct,
    /// Fitted `kX` first, then divided by `k`.
    Divided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankAttempt {
    pub rank: usize,
    pub volume: Option<u128>,
    pub growth_ratio: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub gap: Gap,
    pub rank: usize,
    pub volume: u128,
    pub x_size: usize,
    pub k: usize,
    pub sumset_size: usize,
    /// `k^gamma |X|`.
    pub growth_bound: f64,
    /// `vol / (k^-r |kX|)`, never below 1 for a covering GAP.
    pub growth_ratio: f64,
    pub within_k_fit: bool,
    pub two_proper: Option<bool>,
    pub route: FitRoute,
    pub attempts: Vec<RankAttempt>,
}

/// Smallest-rank, then smallest-volume, proper symmetric GAP found that
/// contains `X`.
pub fn gap_fit(x: &BTreeSet<Point>, k: usize, gamma: f64, r_max: usize) -> Result<Gap> {
    Ok(gap_fit_with(x, &FitConfig::new(k, gamma, r_max))?.gap)
}

pub fn gap_fit_with(x: &BTreeSet<Point>, cfg: &FitConfig) -> Result<FitReport> {
    let d = x
        .iter()
        .next()
        .map(|p| p.len())
        .ok_or_else(|| Error::InvalidInput("X is empty".into()))?;
    if d == 0 || x.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidInput(
            "points of X must share a positive dimension".into(),
        ));
    }
    if !x.contains(&vec![0; d]) {
        return Err(Error::PreconditionFailed("0 is not in X".into()));
    }
    if cfg.k < 2 {
        return Err(Error::InvalidInput("k must be at least 2".into()));
    }
    if cfg.r_max > MAX_FIT_RANK {
        return Err(Error::InvalidInput(format!(
            "r_max must be <= {MAX_FIT_RANK}"
        )));
    }
    let kx = sumset_size(x, cfg.k, cfg.cap)?;
    let bound = (cfg.k as f64).powf(cfg.gamma) * x.len() as f64;
    if kx as f64 > bound {
        return Err(Error::GrowthHypothesisFailed { sumset: kx, bound });
    }
    let ambient = if d == 1 {
        Ambient::Integers
    } else {
        Ambient::Lattice(d)
    };
    let target = |r: usize| kx as f64 / (cfg.k as f64).powi(r as i32);

    let mut attempts = Vec::new();
    let mut seed_bound = u128::MAX;
    let mut rejected: Vec<(u128, usize, Gap, FitRoute, f64)> = Vec::new();
    for r in 0..=cfg.r_max {
        let mut route = FitRoute::Direct;
        let mut found = fit_rank(x, d, r, cfg, seed_bound)?;
        if found.is_none() && d == 1 && (1..=2).contains(&r) && kx <= 4096 {
            found = divided_fit(x, r, cfg, seed_bound)?;
            route = FitRoute::Divided;
        }
        let Some((gens, bounds)) = found else {
            attempts.push(RankAttempt {
                rank: r,
                volume: None,
                growth_ratio: None,
                accepted: false,
            });
            continue;
        };
        let gap = make_gap(ambient, d, gens, &bounds)?;
        let volume = gap.volume();
        // the rank search prunes on this, so keep it off in fallback mode
        if !cfg.fallback_min_volume {
            seed_bound = seed_bound.min(volume);
        }
        let ratio = volume as f64 / target(r);
        let within = cfg.k_fit.is_none_or(|kf| ratio <= kf);
        let accepted = volume <= cfg.max_volume && within;
        attempts.push(RankAttempt {
            rank: r,
            volume: Some(volume),
            growth_ratio: Some(ratio),
            accepted,
        });
        if accepted {
            if !gap.is_proper(1, cfg.cap as u128)? || !gap.is_symmetric() {
                return Err(Error::FitFailed(format!(
                    "rank {r} candidate is not proper"
                )));
            }
            let two_proper = gap.is_proper(2, cfg.cap as u128).ok();
            return Ok(FitReport {
                rank: r,
                volume,
                x_size: x.len(),
                k: cfg.k,
                sumset_size: kx,
                growth_bound: bound,
                growth_ratio: ratio,
                within_k_fit: within,
                two_proper,
                route,
                attempts,
                gap,
            });
        }
        if volume <= cfg.max_volume {
            rejected.push((volume, r, gap, route, ratio));
        }
    }
    if cfg.fallback_min_volume {
        rejected.sort_by_key(|c| (c.0, c.1));
        for (volume, r, gap, route, ratio) in rejected {
            if gap.is_symmetric() && gap.is_proper(1, cfg.cap as u128).unwrap_or(false) {
                let two_proper = gap.is_proper(2, cfg.cap as u128).ok();
                for a in attempts.iter_mut().filter(|a| a.rank == r) {
                    a.accepted = true;
                }
                return Ok(FitReport {
                    rank: r,
                    volume,
                    x_size: x.len(),
                    k: cfg.k,
                    sumset_size: kx,
                    growth_bound: bound,
                    growth_ratio: ratio,
                    within_k_fit: false,
                    two_proper,
                    route,
                    attempts,
                    gap,
                });
            }
        }
    }
    Err(Error::FitFailed(format!(
        "no rank <= {} within the volume budget ({})",
        cfg.r_max,
        attempts
            .iter()
            .map(|a| match (a.volume, a.growth_ratio) {
                (Some(v), Some(q)) => format!("r={}: vol {v}, ratio {q:.3}", a.rank),
                _ => format!("r={}: none", a.rank),
            })
            .collect::<Vec<_>>()
            .join("; ")
    )))
}

fn make_gap(ambient: Ambient, d: usize, gens: Vec<Point>, bounds: &[i64]) -> Result<Gap> {
    Gap::new(
        ambient,
        vec![0; d],
        gens,
        bounds.iter().map(|&b| -b).collect(),
        bounds.to_vec(),
    )
}

/// `|kX|`.
pub fn sumset_size(x: &BTreeSet<Point>, k: usize, cap: usize) -> Result<usize> {
    if x.iter().next().is_some_and(|p| p.len() == 1) {
        let xs: Vec<i64> = x.iter().map(|p| p[0]).collect();
        return sumset_size_scalar(&xs, k, cap);
    }
    Ok(gap_core::iterated_sumset(x, k, None, cap)?.len())
}

fn sumset_size_scalar(xs: &[i64], k: usize, cap: usize) -> Result<usize> {
    let lo = *xs.iter().min().expect("X is nonempty");
    let hi = *xs.iter().max().expect("X is nonempty");
    let width = (hi - lo) as u128 * k as u128 + 1;
    if width > cap as u128 * 64 {
        return Err(Error::BudgetExceeded {
            what: "sumset bitset width",
            needed: width,
            budget: cap as u128 * 64,
        });
    }
    let words = (width as usize).div_ceil(64);
    let mut cur = vec![0u64; words];
    cur[0] = 1;
    let shifts: Vec<usize> = xs.iter().map(|&x| (x - lo) as usize).collect();
    for _ in 0..k {
        let mut next = vec![0u64; words];
        for &s in &shifts {
            shift_or(&mut next, &cur, s);
        }
        cur = next;
    }
    Ok(cur.iter().map(|w| w.count_ones() as usize).sum())
}

/// `dst |= src << s` on little-endian bit vectors of equal length.
fn shift_or(dst: &mut [u64], src: &[u64], s: usize) {
    let (ws, bs) = (s / 64, s % 64);
    let n = dst.len();
    for i in (ws..n).rev() {
        let j = i - ws;
        let mut v = src[j] << bs;
        if bs > 0 && j > 0 {
            v |= src[j - 1] >> (64 - bs);
        }
        dst[i] |= v;
    }
}

type Found = Option<(Vec<Point>, Vec<i64>)>;

fn fit_rank(
    x: &BTreeSet<Point>,
    d: usize,
    r: usize,
    cfg: &FitConfig,
    bound: u128,
) -> Result<Found> {
    let nonzero = x.iter().any(|p| p.iter().any(|&c| c != 0));
    if r == 0 {
        return Ok((!nonzero).then(|| (Vec::new(), Vec::new())));
    }
    if !nonzero {
        return Ok(None);
    }
    if d == 1 {
        let xs: Vec<i64> = x.iter().map(|p| p[0]).collect();
        return Ok(match r {
            1 => Some(rank1(&xs)),
            2 => rank2(&xs, cfg.candidates, bound),
            3 => rank3(&xs, cfg.candidates.min(12), bound, cfg.cap),
            _ => None,
        }
        .map(|(g, b)| (g.into_iter().map(|a| vec![a]).collect(), b)));
    }
    if r == d {
        return Ok(full_rank(x, d, cfg.candidates));
    }
    if r > d && r <= 2 * d {
        return noisy_lattice(x, d, r, cfg, bound);
    }
    Ok(None)
}

fn rank1(xs: &[i64]) -> (Vec<i64>, Vec<i64>) {
    let g = xs.iter().fold(0i64, |g, &x| g.gcd(&x));
    let m = xs.iter().map(|&x| x.abs()).max().unwrap_or(0) / g;
    (vec![g], vec![m])
}

/// Half the smallest distinct positive differences, half the most frequent.
fn short_differences(xs: &[i64], count: usize) -> Vec<i64> {
    let mut small = BTreeSet::new();
    let mut freq: HashMap<i64, u32> = HashMap::new();
    let stride = xs.len().div_ceil(POPULAR_SAMPLE).max(1);
    for (i, &a) in xs.iter().enumerate() {
        for (j, &b) in xs[i + 1..].iter().enumerate() {
            let diff = (a - b).abs();
            if diff == 0 {
                continue;
            }
            small.insert(diff);
            if small.len() > count {
                small.pop_last();
            }
            if i % stride == 0 || j % stride == 0 {
                *freq.entry(diff).or_default() += 1;
            }
        }
    }
    let mut popular: Vec<(u32, i64)> = freq.into_iter().map(|(d, f)| (f, d)).collect();
    popular.sort_unstable_by_key(|&(f, d)| (std::cmp::Reverse(f), d));
    let mut out: BTreeSet<i64> = small.iter().copied().take(count.div_ceil(2)).collect();
    for (_, d) in popular {
        if out.len() >= count {
            break;
        }
        out.insert(d);
    }
    out.into_iter().collect()
}

/// Precomputed data for representing `x = c1 a1 + c2 a2` with `|c2| <= M2`.
struct Pair {
    a1: i128,
    a2: i128,
    a1r: i128,
    residues: Vec<Option<i128>>,
}

impl Pair {
    fn new(a1: i64, a2: i64, xs: &[i64]) -> Option<Self> {
        let g = a1.gcd(&a2) as i128;
        let (a1, a2) = (a1 as i128, a2 as i128);
        let a1r = a1 / g;
        let inv = if a1r == 1 {
            0
        } else {
            mod_inverse(a2 / g, a1r)?
        };
        let residues = xs
            .iter()
            .map(|&x| {
                let x = x as i128;
                (x % g == 0).then(|| ((x / g).rem_euclid(a1r) * inv).rem_euclid(a1r))
            })
            .collect();
        Some(Self {
            a1,
            a2,
            a1r,
            residues,
        })
    }

    /// Smallest `|c1|` over `|c2| <= m2`.
    fn best_c1(&self, x: i128, r0: i128, m2: i128) -> Option<i128> {
        let (a1r, a2) = (self.a1r, self.a2);
        let j_lo = Integer::div_ceil(&(-m2 - r0), &a1r);
        let j_hi = Integer::div_floor(&(m2 - r0), &a1r);
        if j_lo > j_hi {
            return None;
        }
        let j0 = Integer::div_floor(&(x - r0 * a2), &(a1r * a2));
        [j0, j0 + 1]
            .into_iter()
            .map(|j| {
                let c2 = r0 + j.clamp(j_lo, j_hi) * a1r;
                (x - c2 * a2).abs() / self.a1
            })
            .min()
    }
}

fn rank2(xs: &[i64], candidates: usize, bound: u128) -> Option<(Vec<i64>, Vec<i64>)> {
    let cands = short_differences(xs, candidates);
    let pairs: Vec<(i64, i64)> = cands
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| cands[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let xmax = xs.iter().map(|&x| x.abs() as i128).max().unwrap_or(0);
    pairs
        .par_iter()
        .enumerate()
        .filter_map(|(idx, &(a1, a2))| {
            let pair = Pair::new(a1, a2, xs)?;
            if pair.residues.iter().any(|r| r.is_none()) {
                return None;
            }
            let g = a1.gcd(&a2) as i128;
            let (a1r, a2r) = (pair.a1r, pair.a2 / g);
            let mut best: Option<(u128, i64, i64)> = None;
            let mut limit = bound;
            let m2_max = xmax / pair.a2 + a1r + 1;
            for m2 in 0..=m2_max {
                let w2 = (2 * m2 + 1) as u128;
                if w2 >= limit {
                    break;
                }
                // the largest element forces |c1| >= (xmax - m2 a2) / a1
                let lb = ((xmax - m2 * pair.a2).max(0) / pair.a1) as u128;
                if (2 * lb + 1) * w2 >= limit {
                    continue;
                }
                let mut m1 = 0i128;
                let mut ok = true;
                for (&x, r0) in xs.iter().zip(&pair.residues) {
                    match pair.best_c1(x as i128, r0.expect("checked"), m2) {
                        Some(c) => m1 = m1.max(c),
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if !ok || !(a2r > 2 * m1 || a1r > 2 * m2) {
                    continue;
                }
                let vol = (2 * m1 + 1) as u128 * w2;
                if vol < limit {
                    limit = vol;
                    best = Some((vol, m1 as i64, m2 as i64));
                }
                if m1 == 0 {
                    break;
                }
            }
            best.map(|(vol, m1, m2)| (vol, idx, a1, a2, m1, m2))
        })
        .min_by_key(|t| (t.0, t.1))
        .map(|(_, _, a1, a2, m1, m2)| (vec![a1, a2], vec![m1, m2]))
}

const RANK3_M3: i128 = 3;

fn rank3(xs: &[i64], candidates: usize, bound: u128, cap: usize) -> Option<(Vec<i64>, Vec<i64>)> {
    let cands = short_differences(xs, candidates);
    let mut triples = Vec::new();
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            for l in j + 1..cands.len() {
                triples.push((cands[i], cands[j], cands[l]));
            }
        }
    }
    let xmax = xs.iter().map(|&x| x.abs() as i128).max().unwrap_or(0);
    triples
        .par_iter()
        .enumerate()
        .filter_map(|(idx, &(a1, a2, a3))| {
            let pair = Pair::new(a1, a2, &[0])?;
            let g = a1.gcd(&a2) as i128;
            let inv = if pair.a1r == 1 {
                0
            } else {
                mod_inverse((a2 as i128) / g, pair.a1r)?
            };
            let mut best: Option<(u128, i64, i64, i64)> = None;
            let mut limit = bound;
            for m3 in 1..=RANK3_M3 {
                let w3 = (2 * m3 + 1) as u128;
                let m2_max = xmax / pair.a2 + pair.a1r + 1;
                for m2 in 0..=m2_max {
                    let w23 = w3 * (2 * m2 + 1) as u128;
                    if w23 >= limit {
                        break;
                    }
                    let mut m1 = 0i128;
                    let mut ok = true;
                    for &x in xs {
                        let mut here: Option<i128> = None;
                        for c3 in -m3..=m3 {
                            let y = x as i128 - c3 * a3 as i128;
                            if y % g != 0 {
                                continue;
                            }
                            let r0 = ((y / g).rem_euclid(pair.a1r) * inv).rem_euclid(pair.a1r);
                            if let Some(c) = pair.best_c1(y, r0, m2) {
                                here = Some(here.map_or(c, |h: i128| h.min(c)));
                            }
                        }
                        match here {
                            Some(c) => m1 = m1.max(c),
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if !ok {
                        continue;
                    }
                    let vol = (2 * m1 + 1) as u128 * w23;
                    if vol >= limit {
                        continue;
                    }
                    let gap =
                        Gap::symmetric(&[a1, a2, a3], &[m1 as i64, m2 as i64, m3 as i64]).ok()?;
                    if gap.is_proper(1, cap as u128).unwrap_or(false) {
                        limit = vol;
                        best = Some((vol, m1 as i64, m2 as i64, m3 as i64));
                    }
                }
            }
            best.map(|(vol, m1, m2, m3)| (vol, idx, [a1, a2, a3], [m1, m2, m3]))
        })
        .min_by_key(|t| (t.0, t.1))
        .map(|(_, _, g, b)| (g.to_vec(), b.to_vec()))
}

/// Short difference vectors, sign-normalized, by sup norm.
fn short_vectors(x: &BTreeSet<Point>, d: usize, count: usize) -> Vec<Point> {
    let set: HashSet<&Point> = x.iter().collect();
    let sup = x
        .iter()
        .flat_map(|p| p.iter().map(|c| c.abs()))
        .max()
        .unwrap_or(0)
        .max(1)
        * 2;
    let mut radius = 1i64;
    loop {
        let mut found = BTreeSet::new();
        let side = (2 * radius + 1) as u64;
        let cells = side.pow(d as u32);
        for p in x {
            for code in 0..cells {
                let mut c = code;
                let delta: Point = (0..d)
                    .map(|_| {
                        let v = (c % side) as i64 - radius;
                        c /= side;
                        v
                    })
                    .collect();
                let Some(first) = delta.iter().find(|&&v| v != 0) else {
                    continue;
                };
                if *first < 0 {
                    continue;
                }
                let q: Point = p.iter().zip(&delta).map(|(a, b)| a + b).collect();
                if set.contains(&q) {
                    let key = (
                        delta.iter().map(|v| v.abs()).max().unwrap_or(0),
                        delta.iter().map(|v| v.abs()).sum::<i64>(),
                        delta,
                    );
                    found.insert(key);
                }
            }
        }
        if found.len() >= count || radius >= sup || (cells as usize) * x.len() > 50_000_000 {
            return found.into_iter().take(count).map(|k| k.2).collect();
        }
        radius *= 2;
    }
}

fn det(m: &[Vec<i128>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.to_vec();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return 0;
            };
            a.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}

/// Rank `d` GAPs in `Z^d` from `d`-tuples of short difference vectors.
fn full_rank(x: &BTreeSet<Point>, d: usize, candidates: usize) -> Found {
    let count = match d {
        2 => candidates,
        3 => candidates.min(12),
        _ => candidates.min(8),
    };
    let cands = short_vectors(x, d, count);
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    fn choose(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            choose(i + 1, n, d, cur, out);
            cur.pop();
        }
    }
    choose(0, cands.len(), d, &mut cur, &mut tuples);
    let pts: Vec<&Point> = x.iter().collect();
    tuples
        .par_iter()
        .enumerate()
        .filter_map(|(idx, t)| {
            // columns are generators
            let b: Vec<Vec<i128>> = (0..d)
                .map(|row| t.iter().map(|&c| cands[c][row] as i128).collect())
                .collect();
            let det_b = det(&b);
            if det_b == 0 {
                return None;
            }
            // adjugate via cofactors
            let mut adj = vec![vec![0i128; d]; d];
            for i in 0..d {
                for j in 0..d {
                    let minor: Vec<Vec<i128>> = (0..d)
                        .filter(|&r| r != j)
                        .map(|r| (0..d).filter(|&c| c != i).map(|c| b[r][c]).collect())
                        .collect();
                    let s = if (i + j) % 2 == 0 { 1 } else { -1 };
                    adj[i][j] = s * if d == 1 { 1 } else { det(&minor) };
                }
            }
            let mut bounds = vec![0i128; d];
            for p in &pts {
                for i in 0..d {
                    let num: i128 = (0..d).map(|j| adj[i][j] * p[j] as i128).sum();
                    if num % det_b != 0 {
                        return None;
                    }
                    bounds[i] = bounds[i].max((num / det_b).abs());
                }
            }
            let vol = bounds
                .iter()
                .fold(1u128, |acc, &m| acc.saturating_mul((2 * m + 1) as u128));
            Some((vol, idx, t.clone(), bounds))
        })
        .min_by_key(|r| (r.0, r.1))
        .map(|(_, _, t, bounds)| {
            (
                t.iter().map(|&c| cands[c].clone()).collect(),
                bounds.iter().map(|&m| m as i64).collect(),
            )
        })
}

const NOISE_SAMPLE: usize = 600;
const NOISE_THRESHOLDS: [i64; 6] = [0, 2, 4, 8, 16, 32];
const NOISE_PROPER_TRIES: usize = 8;

/// Most frequent difference vectors, sign-normalized, taking the top few
/// above each sup-norm threshold.
fn popular_differences(x: &BTreeSet<Point>, per: usize) -> Vec<Point> {
    let stride = x.len().div_ceil(NOISE_SAMPLE).max(1);
    let pts: Vec<&Point> = x.iter().step_by(stride).collect();
    let mut counts: HashMap<Point, usize> = HashMap::new();
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            let mut diff: Point = q.iter().zip(p.iter()).map(|(a, b)| a - b).collect();
            if diff.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
                diff.iter_mut().for_each(|v| *v = -*v);
            }
            *counts.entry(diff).or_default() += 1;
        }
    }
    let sup = |p: &Point| p.iter().map(|v| v.abs()).max().unwrap_or(0);
    let mut ranked: Vec<(Point, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then(sup(&a.0).cmp(&sup(&b.0)))
            .then(a.0.cmp(&b.0))
    });
    let mut out: Vec<Point> = Vec::new();
    for t in NOISE_THRESHOLDS {
        for (p, _) in ranked.iter().filter(|(p, _)| sup(p) > t).take(per) {
            if !out.contains(p) {
                out.push(p.clone());
            }
        }
    }
    out
}

fn invert_f64(b: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = b.len();
    let mut a: Vec<Vec<f64>> = b
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, piv);
        let f = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= f);
        for i in 0..n {
            if i != c {
                let g = a[i][c];
                if g != 0.0 {
                    for j in 0..2 * n {
                        a[i][j] -= g * a[c][j];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Rank `d + e` GAPs: a lattice basis from popular differences plus `e` unit
/// vectors absorbing the rounding residue, one per noisy coordinate.
fn noisy_lattice(
    x: &BTreeSet<Point>,
    d: usize,
    r: usize,
    cfg: &FitConfig,
    bound: u128,
) -> Result<Found> {
    let per = match d {
        2 => 4,
        3 => 2,
        _ => 1,
    };
    let cands = popular_differences(x, per);
    let mut tuples: Vec<Vec<usize>> = Vec::new();
    let mut cur = Vec::new();
    fn choose(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            choose(i + 1, n, d, cur, out);
            cur.pop();
        }
    }
    choose(0, cands.len(), d, &mut cur, &mut tuples);
    let pts: Vec<&Point> = x.iter().collect();
    let mut found: Vec<(u128, usize, Vec<Point>, Vec<i64>)> = tuples
        .par_iter()
        .enumerate()
        .filter_map(|(idx, t)| {
            let b: Vec<Vec<f64>> = (0..d)
                .map(|row| t.iter().map(|&c| cands[c][row] as f64).collect())
                .collect();
            let inv = invert_f64(&b)?;
            let mut coef = vec![0i64; d];
            let mut noise = vec![0i64; d];
            for p in &pts {
                let xs: Vec<i64> = (0..d)
                    .map(|i| (0..d).map(|j| inv[i][j] * p[j] as f64).sum::<f64>().round() as i64)
                    .collect();
                for j in 0..d {
                    let fitted: i64 = t.iter().zip(&xs).map(|(&c, &xi)| cands[c][j] * xi).sum();
                    noise[j] = noise[j].max((p[j] - fitted).abs());
                }
                for i in 0..d {
                    coef[i] = coef[i].max(xs[i].abs());
                }
            }
            if d + noise.iter().filter(|&&c| c > 0).count() != r {
                return None;
            }
            let vol = coef
                .iter()
                .chain(noise.iter().filter(|&&c| c > 0))
                .fold(1u128, |acc, &m| acc.saturating_mul((2 * m + 1) as u128));
            if vol >= bound || vol > cfg.max_volume {
                return None;
            }
            let mut gens: Vec<Point> = t.iter().map(|&c| cands[c].clone()).collect();
            let mut bounds = coef;
            for (j, &c) in noise.iter().enumerate() {
                if c > 0 {
                    let mut e = vec![0; d];
                    e[j] = 1;
                    gens.push(e);
                    bounds.push(c);
                }
            }
            Some((vol, idx, gens, bounds))
        })
        .collect();
    found.sort_by_key(|f| (f.0, f.1));
    let ambient = Ambient::Lattice(d);
    for (_, _, gens, bounds) in found.into_iter().take(NOISE_PROPER_TRIES) {
        let gap = make_gap(ambient, d, gens.clone(), &bounds)?;
        if gap.is_proper(1, cfg.cap as u128).unwrap_or(false) {
            return Ok(Some((gens, bounds)));
        }
    }
    Ok(None)
}

/// Fits `kX` at rank `r`, then divides by `k`.
fn divided_fit(x: &BTreeSet<Point>, r: usize, cfg: &FitConfig, bound: u128) -> Result<Found> {
    let kx = gap_core::iterated_sumset(x, cfg.k, None, cfg.cap)?;
    let Some((gens, bounds)) = fit_rank(&kx, 1, r, cfg, u128::MAX)? else {
        return Ok(None);
    };
    let p = make_gap(Ambient::Integers, 1, gens, &bounds)?;
    match gap_core::divide_containment(x, cfg.k, &p, cfg.cap as u128) {
        Ok(q) if q.volume() < bound => Ok(Some((q.generators().to_vec(), q.upper().to_vec()))),
        Ok(_) | Err(Error::PreconditionFailed(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
