use rayon::prelude::*;
use serde::Serialize;

use crate::continuous::{
    continuous_invert, min_rank1_cover, optimality_sample, planted_continuous, ContinuousOptions,
    RealEta,
};
use crate::error::Result;
use crate::inverse_engine::{
    invert, invert_budget, planted_corpus, Calibration, CorpusSpec, InvertOptions,
};
use crate::rational;

/// Offsets keeping the continuous and optimality seeds apart from the
/// discrete corpus.
pub const CONTINUOUS_SEED_OFFSET: u64 = 10_000;
pub const OPTIMALITY_SEED_OFFSET: u64 = 20_000;
pub const CONTINUOUS_COUNT: usize = 20;
pub const CONTINUOUS_N: (usize, usize) = (100, 200);
pub const OPTIMALITY_COUNT: usize = 20;
pub const OPTIMALITY_N: usize = 200;
pub const OPTIMALITY_DELTA: f64 = 0.1;
/// `eps'` in the `n^(3/2 - eps')` volume floor.
pub const OPTIMALITY_EPS: f64 = 0.2;

/// Closeness used for the rank-1 covers: `log n / sqrt n` on the raw sample.
pub fn optimality_tol(n: usize) -> f64 {
    (n as f64).ln() / (n as f64).sqrt()
}

/// `vol / n^(3/2 - eps')` for one sample.
pub fn optimality_statistic(n: usize, seed: u64) -> Result<f64> {
    let pts = optimality_sample(n, seed);
    let cover = min_rank1_cover(&pts, OPTIMALITY_DELTA, optimality_tol(n))?;
    Ok(cover.volume as f64 / (n as f64).powf(1.5 - OPTIMALITY_EPS))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    pub name: &'static str,
    /// `max` or `min`.
    pub rule: &'static str,
    pub value: f64,
    pub samples: usize,
    pub failures: usize,
    pub mean: f64,
}

fn measure(name: &'static str, rule: &'static str, xs: &[f64], failures: usize) -> Measured {
    let value = match rule {
        "max" => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        _ => xs.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Measured {
        name,
        rule,
        value,
        samples: xs.len(),
        failures,
        mean: xs.iter().sum::<f64>() / xs.len().max(1) as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub measured: Vec<Measured>,
    pub constants: Calibration,
}

fn split<T>(rs: Vec<Result<T>>) -> (Vec<T>, usize) {
    let n = rs.len();
    let ok: Vec<T> = rs.into_iter().filter_map(|r| r.ok()).collect();
    let bad = n - ok.len();
    (ok, bad)
}

/// Re-measures every corpus constant of `base` on `spec`; the structural
/// knobs (`a`, `c1`, ...) are kept.
pub fn calibrate(base: &Calibration, spec: &CorpusSpec) -> Result<CalibrationReport> {
    let eps = rational::parse(&spec.epsilon)?;
    let mut measuring = base.clone();
    // no acceptance gate while measuring
    measuring.inverse_k = f64::INFINITY;
    measuring.budget_k = f64::INFINITY;
    measuring.continuous_k = f64::INFINITY;
    let opts = InvertOptions {
        constants: measuring.clone(),
        ..InvertOptions::new(spec.c)
    };
    let corpus = planted_corpus(spec.seed, spec.count, spec.c, spec.n_min, spec.n_max)?;

    let runs: Vec<Result<(f64, f64, f64)>> = corpus
        .par_iter()
        .map(|inst| {
            let full = invert(&inst.values, &eps, &opts)?;
            let n_prime = (inst.n / spec.n_prime_divisor).max(1);
            let budget = invert_budget(&inst.values, n_prime, &opts)?;
            let kappa = full.rho_decimal * (inst.n as f64).powf(spec.c);
            Ok((full.ratio, budget.ratio, kappa))
        })
        .collect();
    let (runs, discrete_failures) = split(runs);
    let inverse: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let budget: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let kappa: Vec<f64> = runs.iter().map(|r| r.2).collect();

    let copts = ContinuousOptions {
        constants: measuring,
        ..ContinuousOptions::new(spec.seed)
    };
    let cards: Vec<Result<f64>> = (0..CONTINUOUS_COUNT as u64)
        .map(|i| {
            let seed = spec.seed + CONTINUOUS_SEED_OFFSET + i;
            let d = 1 + (i % 2) as usize;
            let n = CONTINUOUS_N.0 + (seed as usize % (CONTINUOUS_N.1 - CONTINUOUS_N.0 + 1));
            let inst = planted_continuous(d, n, seed)?;
            let o = ContinuousOptions {
                seed,
                ..copts.clone()
            };
            let r = continuous_invert(
                &inst.vectors,
                inst.beta,
                &RealEta::bernoulli(),
                inst.n_prime,
                inst.c,
                &o,
            )?;
            Ok(r.bullets.cardinality_ratio)
        })
        .collect();
    let (cards, continuous_failures) = split(cards);

    let stats: Vec<Result<f64>> = (0..OPTIMALITY_COUNT as u64)
        .into_par_iter()
        .map(|i| optimality_statistic(OPTIMALITY_N, spec.seed + OPTIMALITY_SEED_OFFSET + i))
        .collect();
    let (stats, optimality_failures) = split(stats);

    let measured = vec![
        measure("inverse_k", "max", &inverse, discrete_failures),
        measure("budget_k", "max", &budget, discrete_failures),
        measure("forward_kappa", "min", &kappa, discrete_failures),
        measure("continuous_k", "max", &cards, continuous_failures),
        measure("optimality_c", "min", &stats, optimality_failures),
    ];
    let mut constants = base.clone();
    constants.corpus = spec.clone();
    for m in &measured {
        if m.samples == 0 {
            continue;
        }
        let slot = match m.name {
            "inverse_k" => &mut constants.inverse_k,
            "budget_k" => &mut constants.budget_k,
            "forward_kappa" => &mut constants.forward_kappa,
            "continuous_k" => &mut constants.continuous_k,
            _ => &mut constants.optimality_c,
        };
        *slot = m.value;
    }
    Ok(CalibrationReport {
        measured,
        constants,
    })
}
