use std::collections::BTreeSet;

use num_bigint::BigInt;

use super::{Gap, Point};
use crate::error::{Error, Result};
use crate::rational::Rational;

fn add_points(a: &[i64], b: &[i64], modulus: Option<u64>) -> Point {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let s = x as i128 + y as i128;
            match modulus {
                Some(p) => s.rem_euclid(p as i128) as i64,
                None => s as i64,
            }
        })
        .collect()
}

fn sumset_budget(len: usize, cap: usize) -> Result<()> {
    if len > cap {
        return Err(Error::BudgetExceeded {
            what: "iterated sumset size",
            needed: len as u128,
            budget: cap as u128,
        });
    }
    Ok(())
}

/// `kX = {x_1 + .. + x_k}`; `0X = {0}`.
pub fn iterated_sumset(
    x: &BTreeSet<Point>,
    k: usize,
    modulus: Option<u64>,
    cap: usize,
) -> Result<BTreeSet<Point>> {
    let d = x.iter().next().map_or(1, |p| p.len());
    let mut acc: BTreeSet<Point> = BTreeSet::from([vec![0; d]]);
    for _ in 0..k {
        let mut next = BTreeSet::new();
        for a in &acc {
            for b in x {
                next.insert(add_points(a, b, modulus));
            }
            sumset_budget(next.len(), cap)?;
        }
        acc = next;
    }
    Ok(acc)
}

pub fn sumset_scalar(
    x: &BTreeSet<i64>,
    k: usize,
    modulus: Option<u64>,
    cap: usize,
) -> Result<BTreeSet<i64>> {
    let pts: BTreeSet<Point> = x.iter().map(|&v| vec![v]).collect();
    Ok(iterated_sumset(&pts, k, modulus, cap)?
        .into_iter()
        .map(|p| p[0])
        .collect())
}

/// If `0 in X` and `kX` lies in a symmetric 2-proper `P`, then `X` lies in
/// `{sum x_i a_i : |x_i| <= 2 N_i / k}`.
pub fn divide_containment(x: &BTreeSet<Point>, k: usize, p: &Gap, cap: u128) -> Result<Gap> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let zero = vec![0; p.dim()];
    if !x.contains(&zero) {
        return Err(Error::PreconditionFailed("0 is not in X".into()));
    }
    if !p.is_symmetric() {
        return Err(Error::PreconditionFailed("P is not symmetric".into()));
    }
    if !p.is_proper(2, cap)? {
        return Err(Error::PreconditionFailed("P is not 2-proper".into()));
    }
    let kx = iterated_sumset(
        x,
        k,
        p.ambient().modulus(),
        cap.min(usize::MAX as u128) as usize,
    )?;
    for y in &kx {
        if p.contains(y)?.is_none() {
            return Err(Error::PreconditionFailed(format!(
                "kX is not contained in P ({y:?} is missing)"
            )));
        }
    }
    let bounds: Vec<i64> = p.upper().iter().map(|&n| 2 * n / k as i64).collect();
    let q = Gap::new(
        p.ambient(),
        zero,
        p.generators().to_vec(),
        bounds.iter().map(|&b| -b).collect(),
        bounds,
    )?;
    for y in x {
        if q.contains(y)?.is_none() {
            return Err(Error::FitFailed(format!(
                "dividing lemma conclusion fails at {y:?}"
            )));
        }
    }
    Ok(q)
}

/// Smallest `l`, then smallest `m`, with `Q_l` inside `2mA`.
pub fn sarkozy_cover(
    a: &BTreeSet<Point>,
    q: &Gap,
    delta: &Rational,
    m_max: usize,
    l_max: i64,
    cap: u128,
) -> Result<(usize, i64)> {
    if !q.is_symmetric() {
        return Err(Error::PreconditionFailed("Q is not symmetric".into()));
    }
    if !q.is_proper(1, cap)? {
        return Err(Error::PreconditionFailed("Q is not proper".into()));
    }
    let modulus = q.ambient().modulus();
    let neg = |v: &Point| -> Point {
        v.iter()
            .map(|&c| match modulus {
                Some(p) => (-(c as i128)).rem_euclid(p as i128) as i64,
                None => -c,
            })
            .collect()
    };
    if a.iter().any(|v| !a.contains(&neg(v))) {
        return Err(Error::PreconditionFailed("A is not symmetric".into()));
    }
    for v in a {
        if q.contains(v)?.is_none() {
            return Err(Error::PreconditionFailed(format!(
                "A is not inside Q ({v:?})"
            )));
        }
    }
    let vol = Rational::from_integer(BigInt::from(q.volume()));
    if Rational::from_integer(BigInt::from(a.len())) < delta * vol {
        return Err(Error::PreconditionFailed(format!(
            "|A| = {} is below delta |Q|",
            a.len()
        )));
    }
    let cap_us = cap.min(usize::MAX as u128) as usize;
    let two_a = iterated_sumset(a, 2, modulus, cap_us)?;
    let mut sums: Vec<BTreeSet<Point>> = vec![two_a.clone()];
    for l in 1..=l_max {
        let ql = q.sarkozy_shrink(l)?;
        let (_, els) = ql.volume_and_enumerate(cap)?;
        for m in 1..=m_max {
            while sums.len() < m {
                let last = sums.last().expect("seeded with 2A");
                let mut next = BTreeSet::new();
                for x in last {
                    for y in &two_a {
                        next.insert(add_points(x, y, modulus));
                    }
                }
                sumset_budget(next.len(), cap_us)?;
                sums.push(next);
            }
            if els.iter().all(|e| sums[m - 1].contains(e)) {
                return Ok((m, l));
            }
        }
    }
    Err(Error::SearchBudgetExceeded(format!(
        "no (m, l) with m <= {m_max}, l <= {l_max}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn set(v: &[i64]) -> BTreeSet<Point> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn sumset_examples() {
        let s = sumset_scalar(&BTreeSet::from([0, 1]), 3, None, 100).unwrap();
        assert_eq!(s, BTreeSet::from([0, 1, 2, 3]));
        let s = sumset_scalar(&BTreeSet::from([0, 3, 10]), 2, None, 100).unwrap();
        assert_eq!(s, BTreeSet::from([0, 3, 6, 10, 13, 20]));
        let s = sumset_scalar(&BTreeSet::from([0, 4]), 2, Some(5), 100).unwrap();
        assert_eq!(s, BTreeSet::from([0, 3, 4]));
        assert!(sumset_scalar(&BTreeSet::from([0, 1, 2]), 3, None, 3).is_err());
    }

    #[test]
    fn divide_examples() {
        let p = Gap::symmetric(&[1], &[10]).unwrap();
        let q = divide_containment(&set(&[0, 1, 2, 3]), 2, &p, 1000).unwrap();
        assert_eq!(q, Gap::symmetric(&[1], &[10]).unwrap());

        let p = Gap::symmetric(&[5], &[4]).unwrap();
        let q = divide_containment(&set(&[0, 5]), 4, &p, 1000).unwrap();
        assert_eq!(q, Gap::symmetric(&[5], &[2]).unwrap());

        let err = divide_containment(&set(&[1, 2]), 2, &p, 1000).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(ref m) if m.contains("0 is not")));
    }

    #[test]
    fn divide_reports_failed_hypotheses() {
        let not_two_proper = Gap::symmetric(&[1, 5], &[2, 1]).unwrap();
        let err = divide_containment(&set(&[0]), 2, &not_two_proper, 1000).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(ref m) if m.contains("2-proper")));

        let p = Gap::symmetric(&[1], &[3]).unwrap();
        let err = divide_containment(&set(&[0, 2]), 2, &p, 1000).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(ref m) if m.contains("contained")));
    }

    #[test]
    fn sarkozy_examples() {
        let q = Gap::symmetric(&[1], &[10]).unwrap();
        let a: BTreeSet<Point> = (-10..=10).map(|x| vec![x]).collect();
        assert_eq!(
            sarkozy_cover(&a, &q, &ratio(1, 1), 8, 8, 10_000).unwrap(),
            (1, 1)
        );

        let q = Gap::symmetric(&[1], &[9]).unwrap();
        let a = set(&[-9, -6, -3, 0, 3, 6, 9]);
        let (m, l) = sarkozy_cover(&a, &q, &ratio(1, 3), 8, 8, 10_000).unwrap();
        assert_eq!((m, l), (1, 3));
        let ql = q.sarkozy_shrink(l).unwrap().enumerate_scalar(100).unwrap();
        let two_m_a = sumset_scalar(&(-3..=3).map(|x| 3 * x).collect(), 2 * m, None, 1000).unwrap();
        assert!(ql.is_subset(&two_m_a));

        let err = sarkozy_cover(&set(&[0, 1]), &q, &ratio(1, 100), 8, 8, 10_000).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(ref m) if m.contains("symmetric")));
    }

    #[test]
    fn sarkozy_budget() {
        let q = Gap::symmetric(&[1], &[100]).unwrap();
        let a = set(&[-100, 0, 100]);
        let err = sarkozy_cover(&a, &q, &ratio(1, 100), 2, 2, 10_000).unwrap_err();
        assert!(matches!(err, Error::SearchBudgetExceeded(_)));
    }
}
