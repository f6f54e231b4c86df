use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::smallball::small_ball_mc;
use super::znorm::{cz_window, torus_sq, CzWindow, ZNorm};
use super::{RealEta, SmallBallEstimate, VectorMultiset};
use crate::error::{Error, Result, Stage, StageExt};
use crate::gap_core::{Gap, Point};
use crate::inverse_engine::{gap_fit_with, Calibration, FitConfig, FitReport};
use crate::prime::next_prime_u64;

const CZ_BUDGET: f64 = 64.0;
const Y0_GRID: usize = 64;
/// Grid points of the level-set box.
const LEVEL_CAP: usize = 4_000_000;
/// Points of the discretized box `B_1`.
const DISC_CAP: usize = 20_000_000;
const FIT_K_FIT: f64 = 2.0;
const ENUM_CAP: u128 = 2_000_000;
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousOptions {
    pub constants: Calibration,
    pub trials: usize,
    pub seed: u64,
}

impl ContinuousOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            constants: Calibration::pinned(),
            trials: 100_000,
            seed,
        }
    }
}

/// `Q = (beta / p) P` with `P` an integer GAP.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealGap {
    pub beta: f64,
    pub denominator: i64,
    /// Integer steps `p_ij` of `P`.
    pub numerators: Vec<Vec<i64>>,
    /// `beta p_ij / p`.
    pub generators: Vec<Vec<f64>>,
    pub bounds: Vec<i64>,
    pub rank: usize,
    pub volume: u128,
}

impl RealGap {
    fn new(gap: &Gap, beta: f64, p: i64) -> Self {
        let numerators = gap.generators().to_vec();
        let generators = numerators
            .iter()
            .map(|g| g.iter().map(|&c| beta * c as f64 / p as f64).collect())
            .collect();
        Self {
            beta,
            denominator: p,
            numerators,
            generators,
            bounds: gap.upper().to_vec(),
            rank: gap.rank(),
            volume: gap.volume(),
        }
    }
}

/// The four conclusions, each checked against constants that follow from
/// the construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bullets {
    /// `beta^-1 k Q = P` contains `{0,1}^d` with `k = p`.
    pub full_dimension: bool,
    pub k: i64,
    /// `k / sqrt(n' / ln n)`, at least `(128 / pi) (2 A)^-1/2` up to rounding.
    pub k_low_ratio: f64,
    /// `k / sqrt(n')`, at most `128 d C_z / pi` up to rounding.
    pub k_high_ratio: f64,
    pub k_window: bool,
    /// Vectors `v` with `round(p v / beta)` in `P` and within
    /// `beta sqrt(d) / (2 p)` of `Q`.
    pub approximation_count: usize,
    pub approximation_need: usize,
    /// Largest distance to `Q` over the counted vectors, in units of `beta / k`.
    pub approximation_max_ratio: f64,
    pub approximation: bool,
    pub rank: usize,
    /// `|Q| rho n'^((r - d) / 2)`.
    pub cardinality_ratio: f64,
    pub cardinality: bool,
    /// `p / sqrt(n')`.
    pub p_ratio: f64,
    /// `max |p_ij| / (beta^-1 sqrt(n'))`.
    pub pij_ratio: f64,
    pub small_generators: bool,
}

impl Bullets {
    pub fn all(&self) -> bool {
        self.full_dimension
            && self.k_window
            && self.approximation
            && self.cardinality
            && self.small_generators
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineCase {
    /// `r >= d + 1`: `P' = P`.
    RankAboveDimension,
    /// `r = d`: points of `P` with every coordinate divisible by `k`.
    SubLattice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub case: RefineCase,
    pub k_int: i64,
    pub q: RealGap,
    /// `|P'| / max(|P| / k^r, 1)`.
    pub size_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousReport {
    pub version: String,
    pub constants: Calibration,
    pub d: usize,
    pub n: usize,
    pub n_prime: usize,
    pub beta: f64,
    pub c: f64,
    pub rho: SmallBallEstimate,
    /// `n^-C`.
    pub threshold: f64,
    pub window: CzWindow,
    pub m: u32,
    pub m_max: u32,
    pub grid_spacing: f64,
    /// `mu(S_m)`.
    pub level_measure: f64,
    /// `rho e^(m/4 - 2)`.
    pub level_target: f64,
    pub ball_center: Vec<f64>,
    pub ball_measure: f64,
    /// `mu(T)`.
    pub t_measure: f64,
    /// Discretization prime.
    pub n_disc: u64,
    pub s_size: usize,
    /// `|S| / (N^d mu(T))`.
    pub s_ratio: f64,
    pub y0: f64,
    pub energy: f64,
    /// `32 m |S|`.
    pub energy_bound: f64,
    pub bad_count: usize,
    pub k: f64,
    pub d_const: f64,
    /// Rounding denominator `p = round(D k)`.
    pub p: i64,
    pub a_beta_size: usize,
    /// `sum |a|^2 / (D k / beta)^2` over the good vectors.
    pub magnitude_ratio: f64,
    pub fit: FitReport,
    pub q: RealGap,
    pub refined: Refinement,
    pub bullets: Bullets,
}

fn torus(u: &[f64], s: &[f64]) -> f64 {
    u.iter().zip(s).map(|(a, b)| a * b).sum()
}

/// Cell-centered `[-R, R]^d` grid with spacing `h`.
struct Grid {
    d: usize,
    side: usize,
    h: f64,
    origin: f64,
}

impl Grid {
    fn new(d: usize, radius: f64, h: f64) -> Result<Self> {
        let half = (radius / h).ceil() as usize;
        let side = 2 * half + 1;
        let total = (side as u128).pow(d as u32);
        if total > LEVEL_CAP as u128 {
            return Err(Error::BudgetExceeded {
                what: "level-set grid points",
                needed: total,
                budget: LEVEL_CAP as u128,
            });
        }
        Ok(Self {
            d,
            side,
            h,
            origin: -(half as f64) * h,
        })
    }

    fn len(&self) -> usize {
        self.side.pow(self.d as u32)
    }

    fn point(&self, mut flat: usize, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.origin + (flat % self.side) as f64 * self.h;
            flat /= self.side;
        }
    }

    fn cell(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    /// Flat indices of grid points in the closed ball `B(x, r)`.
    fn ball(&self, x: &[f64], r: f64) -> Vec<usize> {
        let lo: Vec<usize> = x
            .iter()
            .map(|c| (((c - r - self.origin) / self.h).ceil().max(0.0)) as usize)
            .collect();
        let hi: Vec<usize> = x
            .iter()
            .map(|c| (((c + r - self.origin) / self.h).floor() as usize).min(self.side - 1))
            .collect();
        let mut out = Vec::new();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return out;
        }
        let mut idx = lo.clone();
        let mut pt = vec![0.0; self.d];
        loop {
            let flat = idx.iter().rev().fold(0, |acc, &i| acc * self.side + i);
            self.point(flat, &mut pt);
            if pt
                .iter()
                .zip(x)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                <= r * r + TOL
            {
                out.push(flat);
            }
            let mut j = 0;
            loop {
                if j == self.d {
                    return out;
                }
                if idx[j] < hi[j] {
                    idx[j] += 1;
                    break;
                }
                idx[j] = lo[j];
                j += 1;
            }
        }
    }
}

struct Groups {
    u: Vec<Vec<f64>>,
    mult: Vec<usize>,
}

impl Groups {
    /// `sum m ||<u, xi>||_z^2`.
    fn energy(&self, norm: &ZNorm, xi: &[f64]) -> f64 {
        self.u
            .iter()
            .zip(&self.mult)
            .map(|(u, &m)| m as f64 * norm.sq(torus(u, xi)))
            .sum()
    }
}

/// Candidate `|y_0|` values: the support of `|z1 - z2|` inside the window for
/// atom laws, a uniform grid otherwise.
fn y0_candidates(z: &RealEta, c_z: f64) -> Vec<f64> {
    if let Some(atoms) = z.difference_atoms() {
        let v: Vec<f64> = atoms
            .into_iter()
            .map(|a| a.0)
            .filter(|&y| y >= 1.0 - 1e-12 && y <= c_z + 1e-12)
            .collect();
        if !v.is_empty() {
            return v;
        }
    }
    (0..Y0_GRID)
        .map(|i| 1.0 + (c_z - 1.0) * i as f64 / (Y0_GRID - 1) as f64)
        .collect()
}

/// The discretized continuous inverse pipeline on `V_beta = beta^-1 V`.
pub fn continuous_invert(
    v: &VectorMultiset,
    beta: f64,
    z: &RealEta,
    n_prime: usize,
    c: f64,
    opts: &ContinuousOptions,
) -> Result<ContinuousReport> {
    let n = v.n();
    let d = v.d();
    let nf = n as f64;
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidInput("beta must be positive".into()).at(Stage::Rescale));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidInput("C must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidInput("need at least two vectors".into()));
    }
    let eps = opts.constants.budget_epsilon;
    if (n_prime as f64) < nf.powf(eps) - TOL || n_prime > n {
        return Err(Error::PreconditionFailed(format!(
            "n' = {n_prime} outside [n^{eps}, n] = [{:.3}, {n}]",
            nf.powf(eps)
        )));
    }
    let window = match z.c_z {
        Some(c_z) if c_z >= 1.0 => CzWindow {
            c_z,
            mass: f64::NAN,
            exact: false,
        },
        Some(_) => {
            return Err(
                Error::InvalidInput("supplied C_z must be at least 1".into())
                    .at(Stage::DoubleCount),
            )
        }
        None => cz_window(z, CZ_BUDGET).stage(Stage::DoubleCount)?,
    };

    // small-ball precondition
    let rho = small_ball_mc(v, beta, z, opts.trials, &[], opts.seed).stage(Stage::SmallBall)?;
    let threshold = nf.powf(-c);
    if rho.ci_low < threshold {
        let err = if rho.ci_high < threshold {
            Error::PreconditionFailed(format!(
                "rho estimate {:.4e} below n^-C = {threshold:.4e}",
                rho.estimate
            ))
        } else {
            Error::McTooNoisy {
                estimate: rho.estimate,
                half_width: 3.0 * rho.sigma,
                threshold,
            }
        };
        return Err(err.at(Stage::SmallBall));
    }
    let rho_hat = rho.estimate;

    // rescale
    let grouped = v.grouped();
    let groups = Groups {
        u: grouped
            .iter()
            .map(|(g, _)| g.iter().map(|x| x / beta).collect())
            .collect(),
        mult: grouped.iter().map(|g| g.1).collect(),
    };
    let norm = ZNorm::new(z);
    let u_max2 = groups
        .u
        .iter()
        .map(|u| u.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let u_max_inf = groups
        .u
        .iter()
        .flat_map(|u| u.iter().map(|x| x.abs()))
        .fold(0.0, f64::max);

    // large level set
    let m_max = (2.0 * opts.constants.a * nf.ln()).ceil().max(1.0) as u32;
    let h = (1.0 / (8.0 * u_max2.max(1.0))).min(1.0 / 16.0);
    let grid = Grid::new(d, (m_max as f64).sqrt(), h).stage(Stage::LevelSet)?;
    // G(xi) = sum m ||<u, xi>||_z^2, and |xi|^2
    let values: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; d],
            |pt, flat| {
                grid.point(flat, pt);
                (groups.energy(&norm, pt), pt.iter().map(|x| x * x).sum())
            },
        )
        .collect();
    let mut counts = vec![0usize; m_max as usize + 1];
    for &(g, r2) in &values {
        let f = g + r2;
        if f <= m_max as f64 {
            counts[(f.ceil().max(1.0)) as usize] += 1;
        }
    }
    for m in 1..counts.len() {
        counts[m] += counts[m - 1];
    }
    let cell = grid.cell();
    let (m, level_measure, level_target) = (1..=m_max)
        .map(|m| {
            let mu = counts[m as usize] as f64 * cell;
            (m, mu, rho_hat * (m as f64 / 4.0 - 2.0).exp())
        })
        .find(|&(_, mu, target)| mu >= target)
        .ok_or_else(|| {
            Error::PreconditionFailed(format!("no m <= {m_max} with mu(S_m) >= rho e^(m/4 - 2)"))
                .at(Stage::LevelSet)
        })?;
    let mf = m as f64;

    // densest B(x, 1/2) inside B(0, sqrt m), centers on a 1/4 lattice
    let reach = mf.sqrt() - 0.5;
    let steps = (reach / 0.25).floor() as i64;
    let side = (2 * steps + 1) as usize;
    let centers: Vec<Vec<f64>> = (0..side.pow(d as u32))
        .map(|mut flat| {
            (0..d)
                .map(|_| {
                    let c = (flat % side) as i64 - steps;
                    flat /= side;
                    c as f64 * 0.25
                })
                .collect::<Vec<f64>>()
        })
        .filter(|x| x.iter().map(|c| c * c).sum::<f64>() <= reach * reach + TOL)
        .collect();
    let (ball_center, ball_count) = centers
        .par_iter()
        .map(|x| {
            let hits = grid
                .ball(x, 0.5)
                .into_iter()
                .filter(|&i| values[i].0 + values[i].1 <= mf)
                .count();
            (x.clone(), hits)
        })
        .reduce(
            || (vec![0.0; d], 0),
            |a, b| {
                if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                    b
                } else {
                    a
                }
            },
        );
    let ball_measure = ball_count as f64 * cell;
    let t_measure = grid
        .ball(&vec![0.0; d], 1.0)
        .into_iter()
        .filter(|&i| values[i].0 <= 4.0 * mf)
        .count() as f64
        * cell;
    drop(values);

    // discretize: S = {s in (1/N) Z^d, |s|_inf <= 2 : sum ||<u, s>||_z^2 <= 16 m}
    let n_disc = next_prime_u64(64 * (u_max_inf.ceil().max(1.0) as u64));
    let dside = 4 * n_disc as usize + 1;
    let dtotal = (dside as u128).pow(d as u32);
    if dtotal > DISC_CAP as u128 {
        return Err(Error::BudgetExceeded {
            what: "discretized box points",
            needed: dtotal,
            budget: DISC_CAP as u128,
        }
        .at(Stage::Discretize));
    }
    let inv_n = 1.0 / n_disc as f64;
    let two_n = 2 * n_disc as i64;
    let s_points: Vec<f64> = (0..dtotal as usize)
        .into_par_iter()
        .flat_map_iter(|mut flat| {
            let s: Vec<f64> = (0..d)
                .map(|_| {
                    let k = (flat % dside) as i64 - two_n;
                    flat /= dside;
                    k as f64 * inv_n
                })
                .collect();
            let keep = groups.energy(&norm, &s) <= 16.0 * mf + TOL;
            keep.then_some(s).into_iter().flatten()
        })
        .collect();
    let s_size = s_points.len() / d;
    let s_ratio = s_size as f64 / ((n_disc as f64).powi(d as i32) * t_measure);

    // double counting: y0 minimizing sum_s sum_v ||y0 <v, s>||^2
    let per_group = |y0: f64| -> Vec<f64> {
        s_points
            .par_chunks(d * 4096)
            .map(|chunk| {
                let mut acc = vec![0.0; groups.u.len()];
                for s in chunk.chunks(d) {
                    for (a, u) in acc.iter_mut().zip(&groups.u) {
                        *a += torus_sq(y0 * torus(u, s));
                    }
                }
                acc
            })
            .reduce(
                || vec![0.0; groups.u.len()],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    };
    let total = |sums: &[f64]| -> f64 {
        sums.iter()
            .zip(&groups.mult)
            .map(|(s, &m)| s * m as f64)
            .sum()
    };
    let (y0, sums) = y0_candidates(z, window.c_z)
        .into_iter()
        .map(|y| (y, per_group(y)))
        .min_by(|a, b| total(&a.1).total_cmp(&total(&b.1)))
        .expect("at least one y0 candidate");
    let energy = total(&sums);
    let energy_bound = 32.0 * mf * s_size as f64;
    let bad_cut = energy_bound / n_prime as f64;
    let good: Vec<bool> = sums.iter().map(|&s| s < bad_cut).collect();
    let bad_count: usize = good
        .iter()
        .zip(&groups.mult)
        .filter(|(g, _)| !**g)
        .map(|(_, &m)| m)
        .sum();
    drop(s_points);

    // round to (Z / p)^d
    let k = (n_prime as f64 / (64.0 * PI * PI * mf)).sqrt();
    let d_const = 1024.0 * d as f64 * y0;
    let p = (d_const * k).round().max(1.0) as i64;
    let pf = p as f64;
    let rounded: Vec<Point> = groups
        .u
        .iter()
        .map(|u| u.iter().map(|x| (x * pf).round() as i64).collect())
        .collect();
    let mut a_beta: BTreeSet<Point> = BTreeSet::new();
    let mut magnitude = 0.0;
    for ((a, &m), &g) in rounded.iter().zip(&groups.mult).zip(&good) {
        if g {
            magnitude += m as f64 * a.iter().map(|&c| (c as f64).powi(2)).sum::<f64>();
            a_beta.insert(a.clone());
        }
    }
    a_beta.insert(vec![0; d]);
    let magnitude_ratio = magnitude / (d_const * k / beta).powi(2);
    let cube: Vec<Point> = (0..3usize.pow(d as u32))
        .map(|mut f| {
            (0..d)
                .map(|_| {
                    let c = (f % 3) as i64 - 1;
                    f /= 3;
                    c
                })
                .collect()
        })
        .collect();
    let x: BTreeSet<Point> = a_beta
        .iter()
        .flat_map(|a| {
            cube.iter()
                .map(move |e| a.iter().zip(e).map(|(x, y)| x + y).collect())
        })
        .collect();

    // long-range fit on A_beta + C_0(0, 1)
    let k_fit_int = (k.round() as usize).max(2);
    let mut cfg = FitConfig::new(k_fit_int, 2.0 * c + d as f64 + 1.0, 4);
    cfg.k_fit = Some(FIT_K_FIT);
    cfg.fallback_min_volume = true;
    let fit = gap_fit_with(&x, &cfg).stage(Stage::GapFit)?;
    let gap = &fit.gap;
    let q = RealGap::new(gap, beta, p);

    // bullets
    let r = gap.rank();
    let full_dimension = (0..1usize << d).all(|mask| {
        let corner: Point = (0..d).map(|j| ((mask >> j) & 1) as i64).collect();
        matches!(gap.contains(&corner), Ok(Some(_)))
    });
    let ln_n = nf.ln();
    let npf = n_prime as f64;
    let k_low_ratio = pf / (npf / ln_n).sqrt();
    let k_high_ratio = pf / npf.sqrt();
    let k_window = pf + 0.5 + TOL >= 128.0 / PI * (npf / (2.0 * opts.constants.a * ln_n)).sqrt()
        && pf <= 128.0 * d as f64 * window.c_z / PI * npf.sqrt() + 0.5 + TOL;

    let close = beta * (d as f64).sqrt() / (2.0 * pf) * (1.0 + TOL);
    let mut approximation_count = 0;
    let mut approximation_max_ratio: f64 = 0.0;
    for ((u, a), &mlt) in groups.u.iter().zip(&rounded).zip(&groups.mult) {
        let dist = beta
            * u.iter()
                .zip(a)
                .map(|(x, &c)| (x - c as f64 / pf).powi(2))
                .sum::<f64>()
                .sqrt();
        if dist <= close && matches!(gap.contains(a), Ok(Some(_))) {
            approximation_count += mlt;
            approximation_max_ratio = approximation_max_ratio.max(dist / (beta / pf));
        }
    }
    let approximation_need = n.saturating_sub(n_prime);

    let cardinality_ratio = gap.volume() as f64 * rho_hat * npf.powf((r as f64 - d as f64) / 2.0);
    let cardinality = r >= d && r <= 4 && cardinality_ratio <= opts.constants.continuous_k;

    let pij_max = q
        .numerators
        .iter()
        .flatten()
        .map(|c| c.abs())
        .max()
        .unwrap_or(0);
    let small_generators = pf <= 128.0 * d as f64 * window.c_z / PI * npf.sqrt() + 0.5 + TOL
        && (pij_max as f64) <= 2.0 * (pf * u_max_inf + 2.0);
    let bullets = Bullets {
        full_dimension,
        k: p,
        k_low_ratio,
        k_high_ratio,
        k_window,
        approximation_count,
        approximation_need,
        approximation_max_ratio,
        approximation: approximation_count >= approximation_need,
        rank: r,
        cardinality_ratio,
        cardinality,
        p_ratio: pf / npf.sqrt(),
        pij_ratio: pij_max as f64 / (npf.sqrt() / beta),
        small_generators,
    };

    let refined = refine(gap, d, k, beta, p).stage(Stage::Refine)?;

    Ok(ContinuousReport {
        version: crate::VERSION.to_string(),
        constants: opts.constants.clone(),
        d,
        n,
        n_prime,
        beta,
        c,
        rho,
        threshold,
        window,
        m,
        m_max,
        grid_spacing: h,
        level_measure,
        level_target,
        ball_center,
        ball_measure,
        t_measure,
        n_disc,
        s_size,
        s_ratio,
        y0,
        energy,
        energy_bound,
        bad_count,
        k,
        d_const,
        p,
        a_beta_size: a_beta.len(),
        magnitude_ratio,
        fit,
        q,
        refined,
        bullets,
    })
}

fn refine(gap: &Gap, d: usize, k: f64, beta: f64, p: i64) -> Result<Refinement> {
    let r = gap.rank();
    let k_int = (k.round() as i64).max(1);
    if r >= d + 1 || k_int == 1 {
        return Ok(Refinement {
            case: if r >= d + 1 {
                RefineCase::RankAboveDimension
            } else {
                RefineCase::SubLattice
            },
            k_int,
            q: RealGap::new(gap, beta, p),
            size_ratio: gap.volume() as f64
                / (gap.volume() as f64 / (k_int as f64).powi(r as i32)).max(1.0),
        });
    }
    let (_, points) = gap.volume_and_enumerate(ENUM_CAP)?;
    let sub: BTreeSet<Point> = points
        .into_iter()
        .filter(|x| x.iter().all(|c| c % k_int == 0))
        .collect();
    let mut cfg = FitConfig::new(2, 2.0 * d as f64 + 2.0, 4);
    cfg.k_fit = None;
    let fit = gap_fit_with(&sub, &cfg)?;
    let vol = fit.gap.volume() as f64;
    Ok(Refinement {
        case: RefineCase::SubLattice,
        k_int,
        q: RealGap::new(&fit.gap, beta, p),
        size_ratio: vol / (gap.volume() as f64 / (k_int as f64).powi(r as i32)).max(1.0),
    })
}

/// Vectors `sum x_j g_j` with random box coefficients, normalized, plus
/// `beta` so that the ball of radius `beta` isolates lattice points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlantedContinuous {
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    pub n_prime: usize,
    pub c: f64,
    pub beta: f64,
    /// Unnormalized generators.
    pub generators: Vec<Vec<f64>>,
    pub coefficients: Vec<Vec<i64>>,
    pub vectors: VectorMultiset,
}

const PLANTED_C: f64 = 1.5;
const PLANTED_RADIUS: f64 = 0.4;

fn finish_planted(
    seed: u64,
    generators: Vec<Vec<f64>>,
    coefficients: Vec<Vec<i64>>,
) -> Result<PlantedContinuous> {
    let d = generators[0].len();
    let raw: Vec<Vec<f64>> = coefficients
        .iter()
        .map(|x| {
            (0..d)
                .map(|j| {
                    x.iter()
                        .zip(&generators)
                        .map(|(&c, g)| c as f64 * g[j])
                        .sum()
                })
                .collect()
        })
        .collect();
    let scale = raw.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let vectors = VectorMultiset::new(raw)?;
    let n = vectors.n();
    Ok(PlantedContinuous {
        seed,
        d,
        n,
        n_prime: (n / 10).max(1),
        c: PLANTED_C,
        beta: PLANTED_RADIUS / scale,
        generators,
        coefficients,
        vectors,
    })
}

/// `d = 1`: integer multiples of 1 in `[-3, 3]`. `d = 2`: `x_1 (1, 0) +
/// x_2 (theta, 1)` with `x` in `{-1, 0, 1}^2` and `theta` in `[0.2, 0.8]`.
pub fn planted_continuous(d: usize, n: usize, seed: u64) -> Result<PlantedContinuous> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (generators, bound) = match d {
        1 => (vec![vec![1.0]], 3),
        2 => {
            let theta = rng.gen_range(0.2..=0.8);
            (vec![vec![1.0, 0.0], vec![theta, 1.0]], 1)
        }
        _ => {
            return Err(Error::InvalidInput(
                "planted instances exist for d in {1, 2}".into(),
            ))
        }
    };
    let mut coefficients: Vec<Vec<i64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-bound..=bound)).collect())
        .collect();
    // every generator must appear
    for j in 0..d {
        coefficients[j] = (0..d).map(|i| i64::from(i == j)).collect();
    }
    finish_planted(seed, generators, coefficients)
}

/// `{0,1}^2` repeated `n / 4` times.
pub fn planted_corners(n: usize) -> Result<PlantedContinuous> {
    let coefficients = (0..n)
        .map(|i| vec![(i & 1) as i64, ((i >> 1) & 1) as i64])
        .collect();
    finish_planted(0, vec![vec![1.0, 0.0], vec![0.0, 1.0]], coefficients)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(inst: &PlantedContinuous, seed: u64) -> ContinuousReport {
        continuous_invert(
            &inst.vectors,
            inst.beta,
            &RealEta::bernoulli(),
            inst.n_prime,
            inst.c,
            &ContinuousOptions::new(seed),
        )
        .unwrap()
    }

    #[test]
    fn rank_one_line() {
        let inst = planted_continuous(1, 120, 7).unwrap();
        let r = run(&inst, 1);
        assert_eq!(r.y0, 2.0);
        assert!(r.bad_count <= inst.n_prime);
        assert!(r.energy <= r.energy_bound);
        let b = &r.bullets;
        assert!(
            b.full_dimension && b.approximation && b.small_generators && b.k_window,
            "{b:?}"
        );
        assert!(b.rank >= 1);
        // Q generators are beta p_ij / p exactly
        for (g, num) in r.q.generators.iter().zip(&r.q.numerators) {
            assert_eq!(g[0], inst.beta * num[0] as f64 / r.p as f64);
        }
    }

    #[test]
    fn corners_full_dimension() {
        let inst = planted_corners(100).unwrap();
        let r = run(&inst, 2);
        assert!(r.bullets.full_dimension);
        assert!(r.bullets.rank >= 2);
        assert!(r.bullets.approximation);
    }

    #[test]
    fn degenerate_budget() {
        let inst = planted_continuous(1, 100, 3).unwrap();
        let r = continuous_invert(
            &inst.vectors,
            inst.beta,
            &RealEta::bernoulli(),
            inst.n,
            inst.c,
            &ContinuousOptions::new(4),
        )
        .unwrap();
        assert!(r.bad_count <= inst.n);
        assert_eq!(r.bullets.approximation_need, 0);
        assert!(r.q.rank >= 1);
    }

    #[test]
    fn preconditions() {
        let inst = planted_continuous(1, 100, 3).unwrap();
        let opts = ContinuousOptions::new(4);
        let z = RealEta::bernoulli();
        // n' below n^(1/4)
        let e = continuous_invert(&inst.vectors, inst.beta, &z, 2, 1.5, &opts).unwrap_err();
        assert!(matches!(e, Error::PreconditionFailed(_)));
        // rho far below n^-C for tiny C
        let e = continuous_invert(&inst.vectors, inst.beta, &z, 10, 0.1, &opts).unwrap_err();
        assert!(matches!(e.root(), Error::PreconditionFailed(_)), "{e:?}");
        let e = continuous_invert(
            &inst.vectors,
            inst.beta,
            &RealEta::gaussian(),
            10,
            1.5,
            &opts,
        )
        .unwrap_err();
        assert!(matches!(e.root(), Error::NoWindow { .. }));
    }

    #[test]
    fn planted_shapes() {
        let p = planted_continuous(2, 150, 9).unwrap();
        assert_eq!(p.d, 2);
        assert_eq!(p.n_prime, 15);
        assert_eq!(p.coefficients[0], vec![1, 0]);
        assert!(planted_continuous(3, 10, 1).is_err());
    }
}
