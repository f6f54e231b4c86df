use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::znorm::{ZNorm, MIN_TRIALS};
use super::{group, RealEta, VectorMultiset, ZLaw};
use crate::error::{Error, Result};

const BLOCK: usize = 8192;
const PILOT_STREAM: u64 = 1 << 32;
const MODE_CELLS: usize = 16;
const BALL_TOL: f64 = 1e-12;
const NEAR_TIE_SIGMAS: f64 = 3.0;
const MAX_FINALISTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallEstimate {
    /// Hit frequency of the chosen ball on the fresh batch. When several
    /// finalists are re-scored the max carries a small upward bias.
    pub estimate: f64,
    pub sigma: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub center: Vec<f64>,
    pub trials: usize,
    pub pilot_trials: usize,
    pub candidates: usize,
    /// Centers re-scored on the fresh batch.
    pub finalists: usize,
}

fn draw_sums(
    groups: &[(Vec<f64>, usize)],
    d: usize,
    z: &RealEta,
    trials: usize,
    seed: u64,
    stream: u64,
) -> Vec<Vec<f64>> {
    let blocks = trials.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream + b as u64);
            let len = BLOCK.min(trials - b * BLOCK);
            (0..len)
                .map(|_| {
                    let mut s = vec![0.0; d];
                    for (v, m) in groups {
                        for _ in 0..*m {
                            let c = if z.law == ZLaw::Bernoulli {
                                if rng.gen::<bool>() {
                                    1.0
                                } else {
                                    -1.0
                                }
                            } else {
                                z.sample(&mut rng)
                            };
                            for (acc, x) in s.iter_mut().zip(v) {
                                *acc += c * x;
                            }
                        }
                    }
                    s
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn hits(samples: &[Vec<f64>], center: &[f64], r: f64) -> usize {
    let r2 = r * r * (1.0 + BALL_TOL) + BALL_TOL;
    samples
        .par_iter()
        .filter(|s| {
            s.iter()
                .zip(center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                <= r2
        })
        .count()
}

/// Centroids of the most populated cells of side `beta`.
fn mode_centers(samples: &[Vec<f64>], beta: f64) -> Vec<Vec<f64>> {
    let mut cells: HashMap<Vec<i64>, (usize, Vec<f64>)> = HashMap::new();
    for s in samples {
        let key = s.iter().map(|x| (x / beta).floor() as i64).collect();
        let e = cells.entry(key).or_insert_with(|| (0, vec![0.0; s.len()]));
        e.0 += 1;
        for (a, x) in e.1.iter_mut().zip(s) {
            *a += x;
        }
    }
    let mut top: Vec<(Vec<i64>, (usize, Vec<f64>))> = cells.into_iter().collect();
    top.sort_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(&b.0)));
    top.into_iter()
        .take(MODE_CELLS)
        .map(|(_, (c, sum))| sum.into_iter().map(|x| x / c as f64).collect())
        .collect()
}

/// `max_x P(sum z_i v_i in B(x, beta))` over a finite set of centers: the
/// supplied ones, the origin and the modes of a pilot batch. The pilot
/// shortlists centers, a fresh batch scores them.
pub fn small_ball_mc(
    v: &VectorMultiset,
    beta: f64,
    z: &RealEta,
    trials: usize,
    centers: &[Vec<f64>],
    seed: u64,
) -> Result<SmallBallEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidInput(format!(
            "trials must be >= {MIN_TRIALS}"
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidInput("beta must be positive".into()));
    }
    let d = v.d();
    if centers.iter().any(|c| c.len() != d) {
        return Err(Error::InvalidInput(format!(
            "centers must have {d} coordinates"
        )));
    }
    let groups = v.grouped();
    let pilot_trials = (trials / 4).max(MIN_TRIALS);
    let pilot = draw_sums(&groups, d, z, pilot_trials, seed, PILOT_STREAM);
    let mut cands: Vec<Vec<f64>> = centers.to_vec();
    cands.push(vec![0.0; d]);
    cands.extend(mode_centers(&pilot, beta));
    let scores: Vec<usize> = cands.iter().map(|c| hits(&pilot, c, beta)).collect();
    let top = *scores.iter().max().expect("origin is always a candidate");
    // a pilot cannot separate centers within a few standard deviations, so
    // every near-tie is scored again on the fresh batch
    let floor = top as f64 - NEAR_TIE_SIGMAS * (top as f64).sqrt();
    let mut finalists: Vec<usize> = (0..cands.len()).filter(|&i| scores[i] as f64 >= floor).collect();
    finalists.sort_by_key(|&i| (std::cmp::Reverse(scores[i]), i));
    finalists.truncate(MAX_FINALISTS);
    drop(pilot);

    let fresh = draw_sums(&groups, d, z, trials, seed, 0);
    let (h, best) = finalists
        .iter()
        .map(|&i| (hits(&fresh, &cands[i], beta), i))
        .max_by_key(|&(h, i)| (h, std::cmp::Reverse(i)))
        .expect("the top candidate is a finalist");
    let p = h as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    Ok(SmallBallEstimate {
        estimate: p,
        sigma,
        ci_low: (p - 3.0 * sigma).max(0.0),
        ci_high: (p + 3.0 * sigma).min(1.0),
        center: cands[best].clone(),
        trials,
        pilot_trials,
        candidates: cands.len(),
        finalists: finalists.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallBound {
    pub bound: f64,
    pub std_error: f64,
    pub points: usize,
}

/// `exp(pi r^2) int exp(-sum ||<v_i, xi>||_z^2 / 2 - pi |xi|^2) dxi`, sampled
/// with `xi ~ N(0, I / 2 pi)` whose density is exactly `exp(-pi |xi|^2)`.
pub fn small_ball_bound(
    v: &VectorMultiset,
    r: f64,
    z: &RealEta,
    mc_points: usize,
    seed: u64,
) -> Result<SmallBallBound> {
    if mc_points == 0 {
        return Err(Error::InvalidInput("need at least one sample point".into()));
    }
    let d = v.d();
    let groups = group(v.vectors());
    let norm = ZNorm::new(z);
    let sd = 1.0 / (2.0 * PI).sqrt();
    let blocks = mc_points.div_ceil(BLOCK);
    let (s1, s2) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = BLOCK.min(mc_points - b * BLOCK);
            let mut acc = (0.0, 0.0);
            let mut xi = vec![0.0; d];
            for _ in 0..len {
                for x in xi.iter_mut() {
                    *x = sd * rng.sample::<f64, _>(StandardNormal);
                }
                let e: f64 = groups
                    .iter()
                    .map(|(u, m)| {
                        let dot: f64 = u.iter().zip(&xi).map(|(a, b)| a * b).sum();
                        *m as f64 * norm.sq(dot)
                    })
                    .sum();
                let f = (-e / 2.0).exp();
                acc.0 += f;
                acc.1 += f * f;
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = mc_points as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    let scale = (PI * r * r).exp();
    Ok(SmallBallBound {
        bound: scale * mean,
        std_error: scale * (var / nf).sqrt(),
        points: mc_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational;
    use crate::walks::{erdos_bound, rho, EtaSpec};
    use crate::StepMultiset;

    fn flat(n: usize) -> VectorMultiset {
        VectorMultiset::new(vec![vec![1.0]; n]).unwrap()
    }

    #[test]
    fn discrete_collapse() {
        let n = 20;
        let exact = rational::to_f64(&erdos_bound(n));
        let v = flat(n);
        let est = small_ball_mc(
            &v,
            0.5 / (n as f64).sqrt(),
            &RealEta::bernoulli(),
            100_000,
            &[],
            1,
        )
        .unwrap();
        assert!(
            (est.estimate - exact).abs() <= 3.0 * est.sigma,
            "{est:?} vs {exact}"
        );
    }

    #[test]
    fn huge_ball_is_certain() {
        let v = flat(10);
        let est = small_ball_mc(&v, 10.0, &RealEta::bernoulli(), 10_000, &[], 2).unwrap();
        assert_eq!(est.estimate, 1.0);
    }

    #[test]
    fn reproducible() {
        let v = VectorMultiset::new(vec![vec![1.0, 0.5], vec![0.3, -1.0], vec![2.0, 0.1]]).unwrap();
        let a = small_ball_mc(&v, 0.2, &RealEta::gaussian(), 20_000, &[], 9).unwrap();
        let b = small_ball_mc(&v, 0.2, &RealEta::gaussian(), 20_000, &[], 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bound_dominates_exact() {
        for n in [8usize, 12] {
            let v = flat(n);
            let exact = rational::to_f64(
                &rho(
                    &StepMultiset::new(vec![1; n]).unwrap(),
                    &EtaSpec::bernoulli(),
                )
                .unwrap()
                .rho,
            );
            let b = small_ball_bound(
                &v,
                0.5 / (n as f64).sqrt(),
                &RealEta::bernoulli(),
                200_000,
                4,
            )
            .unwrap();
            assert!(
                b.bound + 3.0 * b.std_error >= exact,
                "n={n}: {b:?} < {exact}"
            );
        }
    }

    #[test]
    fn bound_trivial_cases() {
        let v = VectorMultiset::new(vec![vec![1.0]]).unwrap();
        let b = small_ball_bound(&v, 3.0, &RealEta::bernoulli(), 10_000, 5).unwrap();
        assert!(b.bound >= 1.0);
        let b = small_ball_bound(&v, 0.0, &RealEta::bernoulli(), 10_000, 5).unwrap();
        assert!(b.bound > 0.0);
    }
}
