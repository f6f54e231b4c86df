use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

use super::{RealEta, ZLaw};
use crate::error::{Error, Result};

/// Atom lists up to this size use the exact formula.
pub const EXACT_ATOMS: usize = 8;
pub const MIN_TRIALS: usize = 10_000;
const BLOCK: usize = 8192;
const GRID_STEPS: usize = 64;

/// `||t||^2` with `||.||` the distance to the nearest integer.
#[inline]
pub(crate) fn torus_sq(t: f64) -> f64 {
    let r = t - t.round();
    r * r
}

/// Evaluator for `||w||_z^2 = E ||w (z1 - z2)||^2`.
#[derive(Debug, Clone)]
pub enum ZNorm {
    /// Nonzero `|y|` values with their mass.
    Atoms(Vec<(f64, f64)>),
    /// `y ~ N(0, 2)`.
    Gaussian,
}

impl ZNorm {
    pub fn new(z: &RealEta) -> Self {
        match z.difference_atoms() {
            Some(d) => ZNorm::Atoms(d.into_iter().filter(|a| a.0 != 0.0).collect()),
            None => ZNorm::Gaussian,
        }
    }

    #[inline]
    pub fn sq(&self, w: f64) -> f64 {
        match self {
            ZNorm::Atoms(a) => a.iter().map(|&(y, p)| p * torus_sq(w * y)).sum(),
            ZNorm::Gaussian => gaussian_sq(w.abs() * std::f64::consts::SQRT_2),
        }
    }
}

/// `E ||t||^2` for `t ~ N(0, s^2)`.
fn gaussian_sq(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    if s > 0.5 {
        // Fourier series of ||t||^2
        let mut acc = 1.0 / 12.0;
        for k in 1..=64 {
            let kf = k as f64;
            let term = (-2.0 * PI * PI * kf * kf * s * s).exp() / (PI * PI * kf * kf);
            if term < 1e-18 {
                break;
            }
            acc += if k % 2 == 0 { term } else { -term };
        }
        return acc.max(0.0);
    }
    // sum over cells [j - 1/2, j + 1/2] of the second moment about j
    let normal = Normal::new(0.0, s).expect("positive sd");
    let pdf = |t: f64| (-(t * t) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt());
    let jmax = (12.0 * s).ceil() as i64 + 1;
    let mut acc = 0.0;
    for j in -jmax..=jmax {
        let (a, b) = (j as f64 - 0.5, j as f64 + 0.5);
        let m0 = normal.cdf(b) - normal.cdf(a);
        let m1 = s * s * (pdf(a) - pdf(b));
        let m2 = s * s * m0 + s * s * (a * pdf(a) - b * pdf(b));
        let jf = j as f64;
        acc += m2 - 2.0 * jf * m1 + jf * jf * m0;
    }
    acc.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZNormEstimate {
    pub value: f64,
    /// Three standard errors; zero for closed forms.
    pub half_width: f64,
    pub exact: bool,
}

/// Closed form for atom lists and the Gaussian.
pub fn z_norm(w: f64, z: &RealEta) -> ZNormEstimate {
    ZNormEstimate {
        value: ZNorm::new(z).sq(w).sqrt(),
        half_width: 0.0,
        exact: true,
    }
}

/// Sampled `z`, with a delta-method interval on the root.
pub fn z_norm_mc(w: f64, z: &RealEta, trials: usize, seed: u64) -> Result<ZNormEstimate> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidInput(format!(
            "trials must be >= {MIN_TRIALS}"
        )));
    }
    if matches!(&z.law, ZLaw::Atoms { atoms } if atoms.len() <= EXACT_ATOMS)
        || z.law == ZLaw::Bernoulli
    {
        return Ok(z_norm(w, z));
    }
    let blocks = trials.div_ceil(BLOCK);
    let (s1, s2) = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = BLOCK.min(trials - b * BLOCK);
            let mut acc = (0.0, 0.0);
            for _ in 0..len {
                let y = z.sample(&mut rng) - z.sample(&mut rng);
                let q = torus_sq(w * y);
                acc.0 += q;
                acc.1 += q * q;
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = trials as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    let se = (var / nf).sqrt();
    let value = mean.sqrt();
    Ok(ZNormEstimate {
        value,
        half_width: if value > 0.0 {
            3.0 * se / (2.0 * value)
        } else {
            (3.0 * se).sqrt()
        },
        exact: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CzWindow {
    pub c_z: f64,
    /// `P(1 <= |z1 - z2| <= C_z)`.
    pub mass: f64,
    pub exact: bool,
}

/// Smallest `C <= budget` with `P(1 <= |z1 - z2| <= C) >= 1/2`.
pub fn cz_window(z: &RealEta, budget: f64) -> Result<CzWindow> {
    if let Some(diffs) = z.difference_atoms() {
        let mut mass = 0.0;
        let mut best: f64 = 0.0;
        for (y, p) in diffs {
            if y < 1.0 - 1e-12 {
                continue;
            }
            if y > budget {
                break;
            }
            mass += p;
            best = best.max(mass);
            if mass >= 0.5 - 1e-12 {
                return Ok(CzWindow {
                    c_z: y,
                    mass,
                    exact: true,
                });
            }
        }
        return Err(Error::NoWindow {
            budget,
            best_mass: best,
        });
    }
    // y ~ N(0, 2), scanned on a grid of step 1/64
    let normal = Normal::new(0.0, std::f64::consts::SQRT_2).expect("positive sd");
    let base = normal.cdf(1.0);
    let mut best: f64 = 0.0;
    let steps = ((budget - 1.0).max(0.0) * GRID_STEPS as f64).floor() as usize;
    for i in 0..=steps {
        let c = 1.0 + i as f64 / GRID_STEPS as f64;
        let mass = 2.0 * (normal.cdf(c) - base);
        best = best.max(mass);
        if mass >= 0.5 {
            return Ok(CzWindow {
                c_z: c,
                mass,
                exact: false,
            });
        }
    }
    Err(Error::NoWindow {
        budget,
        best_mass: best,
    })
}
