//! Multi-limb in-place convolution of integer step distributions.

use std::cmp::Ordering;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;

use super::EtaSpec;
use crate::error::{Error, Result};
use crate::multiset::StepMultiset;

/// Default memory budget for the convolution table, in bytes.
pub const DEFAULT_TABLE_BUDGET: u128 = 1 << 30;

/// Counts of `S = sum v_i eta_i`, scaled by `L^n'` where `L` is the common
/// denominator of the atoms and `n'` the number of nonzero steps.
pub(crate) struct RawDist {
    /// Value at index `i` is `shift + stride * i`.
    pub shift: i128,
    pub stride: i128,
    limbs: usize,
    data: Vec<u64>,
    pub mass: BigUint,
}

impl RawDist {
    pub fn width(&self) -> usize {
        self.data.len() / self.limbs
    }

    fn entry(&self, i: usize) -> &[u64] {
        &self.data[i * self.limbs..(i + 1) * self.limbs]
    }

    pub fn is_zero(&self, i: usize) -> bool {
        self.entry(i).iter().all(|&x| x == 0)
    }

    pub fn count(&self, i: usize) -> BigUint {
        let digits: Vec<u32> = self
            .entry(i)
            .iter()
            .flat_map(|&x| [x as u32, (x >> 32) as u32])
            .collect();
        BigUint::new(digits)
    }

    pub fn value(&self, i: usize) -> i128 {
        self.shift + self.stride * i as i128
    }

    /// Index of the largest count; smallest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.width() {
            if cmp_limbs(self.entry(i), self.entry(best)) == Ordering::Greater {
                best = i;
            }
        }
        best
    }
}

fn cmp_limbs(a: &[u64], b: &[u64]) -> Ordering {
    for (x, y) in a.iter().rev().zip(b.iter().rev()) {
        match x.cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn add_assign(dst: &mut [u64], src: &[u64]) {
    let mut carry = false;
    for (d, &s) in dst.iter_mut().zip(src) {
        let (x, c1) = d.overflowing_add(s);
        let (y, c2) = x.overflowing_add(carry as u64);
        *d = y;
        carry = c1 || c2;
    }
    debug_assert!(!carry);
}

pub(crate) fn convolve(v: &StepMultiset, eta: &EtaSpec, budget: u128) -> Result<RawDist> {
    let atoms = eta.atoms();
    let a_min = atoms[0].0;
    let g = atoms
        .iter()
        .fold(0u64, |acc, (a, _)| acc.gcd(&((*a - a_min) as u64)));
    let h = v.gcd();
    let sum_v: i128 = v
        .counts()
        .iter()
        .map(|(&x, &c)| x as i128 * c as i128)
        .sum();
    if g == 0 || h == 0 {
        return Ok(RawDist {
            shift: a_min as i128 * sum_v,
            stride: 0,
            limbs: 1,
            data: vec![1],
            mass: BigUint::one(),
        });
    }
    let (l, weights) = eta.small_weights().ok_or_else(|| {
        Error::InvalidInput("atom probabilities have denominators beyond 64 bits".into())
    })?;
    if weights.iter().any(|&w| w >= 1 << 56) {
        return Err(Error::InvalidInput("atom weights exceed 2^56".into()));
    }
    let e: Vec<i128> = atoms
        .iter()
        .map(|(a, _)| ((*a - a_min) as u64 / g) as i128)
        .collect();
    let e_max = *e.last().unwrap();

    let mut steps: Vec<i64> = v
        .values()
        .into_iter()
        .filter(|&x| x != 0)
        .map(|x| x / h as i64)
        .collect();
    steps.sort_by_key(|x| (x.unsigned_abs(), *x));
    let nz = steps.len();

    let t_min: i128 = steps
        .iter()
        .filter(|&&u| u < 0)
        .map(|&u| u as i128 * e_max)
        .sum();
    let t_max: i128 = steps
        .iter()
        .filter(|&&u| u > 0)
        .map(|&u| u as i128 * e_max)
        .sum();
    let width = (t_max - t_min + 1) as u128;
    let bits_per_step = 64 - (l.max(1)).leading_zeros() as u128;
    let total_bits = bits_per_step * nz as u128 + 1;
    let limbs = (total_bits / 64 + 1) as usize;
    let needed = width.saturating_mul(limbs as u128).saturating_mul(8);
    if needed > budget {
        return Err(Error::BudgetExceeded {
            what: "walk table bytes",
            needed,
            budget,
        });
    }
    let width = width as usize;
    let mut data = vec![0u64; width * limbs];
    let origin = (-t_min) as usize;
    data[origin * limbs] = 1;
    let (mut lo, mut hi) = (origin, origin);
    let pair = e.len() == 2 && weights.iter().all(|&w| w == 1);
    let mut acc = vec![0u128; limbs];
    let mut active_bits = 1u128;

    for &u in &steps {
        active_bits += bits_per_step;
        let active = ((active_bits / 64) as usize + 1).min(limbs);
        let du = u.unsigned_abs() as usize;
        let reach = du * e_max as usize;
        if u > 0 {
            hi += reach;
            for t in (lo..=hi).rev() {
                if pair {
                    // new[t] = old[t] + old[t - du]
                    if let Some(s) = t.checked_sub(reach) {
                        let (a, b) = data.split_at_mut(t * limbs);
                        add_assign(&mut b[..active], &a[s * limbs..s * limbs + active]);
                    }
                    continue;
                }
                let src = e.iter().map(|&ej| t.checked_sub(du * ej as usize));
                accumulate(&mut data, limbs, active, t, src, &weights, &mut acc);
            }
        } else {
            lo -= reach;
            for t in lo..=hi {
                if pair {
                    let s = t + reach;
                    if s < width {
                        let (a, b) = data.split_at_mut(s * limbs);
                        add_assign(&mut a[t * limbs..t * limbs + active], &b[..active]);
                    }
                    continue;
                }
                let src = e
                    .iter()
                    .map(|&ej| Some(t + du * ej as usize).filter(|&s| s < width));
                accumulate(&mut data, limbs, active, t, src, &weights, &mut acc);
            }
        }
    }

    let stride = g as i128 * h as i128;
    let shift = a_min as i128 * sum_v + stride * t_min;
    Ok(RawDist {
        shift,
        stride,
        limbs,
        data,
        mass: BigUint::from(l).pow(nz as u32),
    })
}

/// `data[t] = sum_j w_j data[src_j]`, where every source is read before the
/// write.
fn accumulate(
    data: &mut [u64],
    limbs: usize,
    active: usize,
    t: usize,
    sources: impl Iterator<Item = Option<usize>>,
    weights: &[u64],
    acc: &mut [u128],
) {
    acc[..active].iter_mut().for_each(|a| *a = 0);
    for (s, &w) in sources.zip(weights) {
        let Some(s) = s else { continue };
        let src = &data[s * limbs..s * limbs + active];
        for (a, &x) in acc.iter_mut().zip(src) {
            *a += w as u128 * x as u128;
        }
    }
    let mut carry = 0u128;
    for (o, a) in data[t * limbs..t * limbs + active]
        .iter_mut()
        .zip(acc.iter())
    {
        let v = a + carry;
        *o = v as u64;
        carry = v >> 64;
    }
    debug_assert_eq!(carry, 0);
}
