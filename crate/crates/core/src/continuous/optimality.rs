use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// `n` uniform points from `[-2n, -n] u [n, 2n]`.
pub fn optimality_sample(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    (0..n)
        .map(|_| {
            let x = rng.gen_range(nf..=2.0 * nf);
            if rng.gen::<bool>() {
                x
            } else {
                -x
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverResult {
    /// Smallest `L` such that some `{x g : |x| <= L}` has `need` points
    /// within `tol`.
    pub l: u64,
    pub volume: u64,
    pub generator: f64,
    pub covered: usize,
    pub need: usize,
    pub tol: f64,
}

/// Best coverage over `g > 0` for fixed `L`: every point `v` is covered on
/// the union over `1 <= x <= L` of `[(|v| - tol) / x, (|v| + tol) / x]`, plus
/// every `g` when `|v| <= tol`.
fn best_coverage(points: &[f64], l: u64, tol: f64) -> (usize, f64) {
    let mut always = 0;
    let mut events: Vec<(f64, i32)> = Vec::new();
    for &v in points {
        let a = v.abs();
        if a <= tol {
            always += 1;
            continue;
        }
        // intervals shrink toward 0 as x grows; merge them per point
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for x in (1..=l).rev() {
            let xf = x as f64;
            let (lo, hi) = (((a - tol) / xf).max(0.0), (a + tol) / xf);
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        for (lo, hi) in merged {
            events.push((lo, 1));
            events.push((hi, -1));
        }
    }
    // closed intervals: starts before ends at ties
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    let (mut cur, mut best, mut at) = (0i32, 0i32, 0.0);
    for (pos, delta) in events {
        cur += delta;
        if cur > best && pos > 0.0 {
            best = cur;
            at = pos;
        }
    }
    (always + best as usize, at)
}

/// Minimal `2L + 1` over rank-1 symmetric GAPs `{x g}` (any real `g`) with at
/// least `(1 - delta) n` points within `tol` of the GAP.
pub fn min_rank1_cover(points: &[f64], delta: f64, tol: f64) -> Result<CoverResult> {
    if points.is_empty() || !(0.0..1.0).contains(&delta) || !(tol > 0.0) {
        return Err(Error::InvalidInput(
            "need points, delta in [0, 1), tol > 0".into(),
        ));
    }
    let need = ((1.0 - delta) * points.len() as f64).ceil() as usize;
    let reach = points.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // spacing 2 tol covers everything in reach
    let mut hi = ((reach / (2.0 * tol)).ceil() as u64).max(1);
    while best_coverage(points, hi, tol).0 < need {
        hi *= 2;
    }
    let mut lo = 0u64;
    let zero_cover = points.iter().filter(|v| v.abs() <= tol).count();
    if zero_cover >= need {
        hi = 0;
    }
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if best_coverage(points, mid, tol).0 >= need {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (covered, generator) = if hi == 0 {
        (zero_cover, 0.0)
    } else {
        best_coverage(points, hi, tol)
    };
    Ok(CoverResult {
        l: hi,
        volume: 2 * hi + 1,
        generator,
        covered,
        need,
        tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_points_need_their_span() {
        let pts: Vec<f64> = (-10..=10).map(|x| 3.0 * x as f64).collect();
        let r = min_rank1_cover(&pts, 0.0, 0.1).unwrap();
        assert_eq!(r.l, 10);
        assert!((r.generator - 3.0).abs() < 0.1 / 10.0 + 1e-9);
    }

    #[test]
    fn delta_drops_outliers() {
        let mut pts: Vec<f64> = (-5..=5).map(|x| x as f64).collect();
        pts.push(1000.0);
        let r = min_rank1_cover(&pts, 0.1, 0.01).unwrap();
        assert_eq!(r.l, 5);
        assert_eq!(r.need, 11);
    }

    #[test]
    fn brute_force_agrees() {
        let pts = optimality_sample(12, 3);
        let tol = 2.0;
        let r = min_rank1_cover(&pts, 0.25, tol).unwrap();
        // scan g finely for L = r.l and r.l - 1
        let count = |l: u64, g: f64| {
            pts.iter()
                .filter(|&&v| {
                    let x = (v / g).round().clamp(-(l as f64), l as f64);
                    (v - x * g).abs() <= tol
                })
                .count()
        };
        let scan = |l: u64| {
            (1..200_000)
                .map(|i| count(l, i as f64 * 1e-4))
                .max()
                .unwrap()
        };
        assert!(scan(r.l) >= r.need);
        assert!(r.l == 0 || scan(r.l - 1) < r.need);
    }

    #[test]
    fn sample_range() {
        let s = optimality_sample(50, 1);
        assert!(s.iter().all(|v| (50.0..=100.0).contains(&v.abs())));
    }
}
