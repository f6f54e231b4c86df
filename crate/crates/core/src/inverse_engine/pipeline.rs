use std::collections::BTreeSet;

use num_traits::Signed;
use serde::Serialize;

use super::calibration::Calibration;
use super::fit::{gap_fit_with, FitConfig, FitReport};
use crate::char_bounds::{growth_k, heavy_level, CoreMode, LevelSetReport, P_CAP};
use crate::error::{Error, Result, Stage, StageExt};
use crate::gap_core::{freiman_embed, Gap};
use crate::multiset::StepMultiset;
use crate::prime::next_prime_u64;
use crate::rational::{self, Rational};
use crate::walks::{self, EtaSpec};

/// Dual sets are scanned only below this many word operations.
const DUAL_SCAN_LIMIT: u128 = 20_000_000;
const GROWTH_SAMPLES: usize = 100;
const GROWTH_CAP: usize = 200_000_000;
const ENUMERATION_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSource {
    Exact,
    Supplied,
}

/// Knobs for one run of the inverse pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertOptions {
    pub c: f64,
    /// Skips the exact DP and marks the report as supplied.
    pub rho: Option<Rational>,
    pub constants: Calibration,
}

impl InvertOptions {
    pub fn new(c: f64) -> Self {
        Self {
            c,
            rho: None,
            constants: Calibration::pinned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingSummary {
    pub p: String,
    pub log2_p: f64,
    pub range_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineTrace {
    /// Prime the level sets were computed in; it exceeds `2 sum |w_i|` so
    /// reduction keeps every walk value distinct.
    pub working_prime: u64,
    /// The `2^n (sum |v| + 1)` embedding, kept for audit.
    pub embedding: EmbeddingSummary,
    pub growth_k: usize,
    pub level: LevelSetReport,
    pub fit: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub version: String,
    pub constants: Calibration,
    pub input: Vec<i64>,
    pub n: usize,
    #[serde(with = "rational::serde_string")]
    pub rho: Rational,
    pub rho_decimal: f64,
    pub rho_source: RhoSource,
    pub c: f64,
    pub mode: CoreMode,
    /// `V` was divided by this before embedding.
    pub gcd: u64,
    pub gap: Gap,
    pub rank: usize,
    pub volume: u128,
    /// `|Q|` by enumeration, when small enough.
    pub enumerated_size: Option<u128>,
    pub covered: Vec<i64>,
    /// By descending level sum.
    pub exceptional: Vec<i64>,
    /// `eps n` or `n'`.
    pub exceptional_limit: f64,
    /// `rho^-1 n^(-r/2)` with `n'` in budget mode.
    pub target: f64,
    pub ratio: f64,
    pub calibration_k: f64,
    pub within_calibration: bool,
    pub trace: Option<PipelineTrace>,
}

/// All but at most `eps n` elements of `V` in one proper symmetric GAP.
pub fn invert(
    v: &StepMultiset,
    epsilon: &Rational,
    opts: &InvertOptions,
) -> Result<StructureReport> {
    if !epsilon.is_positive() || epsilon > &Rational::from_integer(1.into()) {
        return Err(Error::InvalidInput("epsilon must lie in (0, 1]".into()));
    }
    run(
        v,
        CoreMode::Epsilon {
            epsilon: epsilon.clone(),
        },
        opts,
    )
}

/// All but at most `n'` elements, for `n^eps <= n' <= n`.
pub fn invert_budget(
    v: &StepMultiset,
    n_prime: usize,
    opts: &InvertOptions,
) -> Result<StructureReport> {
    let n = v.len();
    let low = (n as f64).powf(opts.constants.budget_epsilon);
    if (n_prime as f64) < low - 1e-9 || n_prime > n {
        return Err(Error::PreconditionFailed(format!(
            "n' = {n_prime} outside [n^{}, n] = [{low:.3}, {n}]",
            opts.constants.budget_epsilon
        )));
    }
    run(v, CoreMode::Budget { n_prime }, opts)
}

fn limit_of(mode: &CoreMode, n: usize) -> f64 {
    match mode {
        CoreMode::Epsilon { epsilon } => rational::to_f64(epsilon) * n as f64,
        CoreMode::Budget { n_prime } => *n_prime as f64,
    }
}

fn n_eff(mode: &CoreMode, n: usize) -> usize {
    match mode {
        CoreMode::Epsilon { .. } => n,
        CoreMode::Budget { n_prime } => *n_prime,
    }
}

fn run(v: &StepMultiset, mode: CoreMode, opts: &InvertOptions) -> Result<StructureReport> {
    let n = v.len();
    if n == 0 {
        return Err(Error::InvalidInput("V is empty".into()));
    }
    let consts = &opts.constants;
    let g = v.gcd();
    let w = if g == 0 {
        v.clone()
    } else {
        v.divided(g as i64)?
    };

    let (rho, rho_source) = match &opts.rho {
        Some(r) => {
            if !r.is_positive() || r > &Rational::from_integer(1.into()) {
                return Err(Error::InvalidInput(
                    "supplied rho must lie in (0, 1]".into(),
                ));
            }
            (r.clone(), RhoSource::Supplied)
        }
        None => (
            walks::rho(&w, &EtaSpec::bernoulli()).stage(Stage::Rho)?.rho,
            RhoSource::Exact,
        ),
    };
    let ln_floor = -opts.c * (n as f64).ln();
    if rational::ln_abs(&rho) < ln_floor - 1e-12 {
        return Err(Error::PreconditionFailed(format!(
            "rho = {} < n^-C = {:.3e}",
            rational::format(&rho),
            ln_floor.exp()
        ))
        .at(Stage::Rho));
    }
    let limit = limit_of(&mode, n);
    let calibration_k = match mode {
        CoreMode::Epsilon { .. } => consts.inverse_k,
        CoreMode::Budget { .. } => consts.budget_k,
    };

    let mut report = StructureReport {
        version: crate::VERSION.to_string(),
        constants: consts.clone(),
        input: v.values(),
        n,
        rho_decimal: rational::to_f64(&rho),
        rho: rho.clone(),
        rho_source,
        c: opts.c,
        mode: mode.clone(),
        gcd: g,
        gap: Gap::point(0),
        rank: 0,
        volume: 1,
        enumerated_size: Some(1),
        covered: v.values(),
        exceptional: Vec::new(),
        exceptional_limit: limit,
        target: 1.0 / rational::to_f64(&rho),
        ratio: 0.0,
        calibration_k,
        within_calibration: true,
        trace: None,
    };
    if g == 0 {
        report.ratio = report.volume as f64 / report.target;
        report.within_calibration = report.ratio <= calibration_k;
        return Ok(report);
    }

    let embedding = freiman_embed(&w, 2).stage(Stage::Embed)?;
    let bound = 2 * w.sum_abs() + 1;
    if bound >= P_CAP as u128 {
        return Err(Error::BudgetExceeded {
            what: "working prime",
            needed: bound,
            budget: P_CAP as u128,
        }
        .at(Stage::Embed));
    }
    let p = next_prime_u64(bound as u64);
    let values = w.values();
    let mut level = heavy_level(&values, p, &rho, consts.a).stage(Stage::HeavyLevel)?;
    level.core_select(mode.clone()).stage(Stage::CoreSelect)?;
    let k = growth_k(consts.c1, n_eff(&mode, n), level.m);
    level
        .growth_set(
            k,
            consts.c1,
            consts.dual_constant,
            GROWTH_SAMPLES,
            GROWTH_CAP,
        )
        .stage(Stage::GrowthSet)?;
    if p as u128 * level.level_size as u128 <= DUAL_SCAN_LIMIT {
        level
            .dual_set(DUAL_SCAN_LIMIT, consts.dual_constant)
            .stage(Stage::GrowthSet)?;
    }

    let core = &level.core.as_ref().expect("core selected").core;
    let x: BTreeSet<Vec<i64>> = core.iter().copied().chain([0]).map(|c| vec![c]).collect();
    let cfg = FitConfig {
        k_fit: Some(consts.k_fit),
        ..FitConfig::new(k, 2.0 * opts.c + 1.0, 4)
    };
    let fit = gap_fit_with(&x, &cfg).stage(Stage::GapFit)?;
    let gap = fit.gap.transform(1, g as i64).stage(Stage::Rescale)?;

    let mut covered = Vec::new();
    let mut exceptional = Vec::new();
    for &val in &report.input {
        if gap.contains_scalar(val).stage(Stage::Rescale)? {
            covered.push(val);
        } else {
            exceptional.push(val);
        }
    }
    let gi = g as i64;
    exceptional.sort_by_key(|&e| (std::cmp::Reverse(level.level_sum(e / gi)), e));

    let rank = gap.rank();
    let volume = gap.volume();
    let target = report.target * (n_eff(&mode, n) as f64).powf(-(rank as f64) / 2.0);
    let ratio = volume as f64 / target;
    report.enumerated_size = (volume <= ENUMERATION_CAP)
        .then(|| {
            gap.volume_and_enumerate(ENUMERATION_CAP)
                .map(|(_, s)| s.len() as u128)
        })
        .transpose()?;
    report.gap = gap;
    report.rank = rank;
    report.volume = volume;
    report.covered = covered;
    report.exceptional = exceptional;
    report.target = target;
    report.ratio = ratio;
    report.within_calibration = ratio <= calibration_k;
    report.trace = Some(PipelineTrace {
        working_prime: p,
        embedding: EmbeddingSummary {
            p: embedding.p_string(),
            log2_p: embedding.log2_p(),
            range_certified: embedding.range_certified,
        },
        growth_k: k,
        level,
        fit,
    });
    Ok(report)
}

impl StructureReport {
    pub fn exceptional_ok(&self) -> bool {
        self.exceptional.len() as f64 <= self.exceptional_limit + 1e-9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn eps() -> Rational {
        ratio(1, 10)
    }

    #[test]
    fn all_ones() {
        let v = StepMultiset::new(vec![1; 100]).unwrap();
        let r = invert(&v, &eps(), &InvertOptions::new(1.5)).unwrap();
        assert!(r.rank <= 1);
        assert!(r.exceptional.is_empty());
        assert!(r.gap.contains_scalar(1).unwrap());
        // |Q| sqrt(n) = O(1 / rho)
        assert!(r.volume as f64 * 10.0 <= 4.0 / r.rho_decimal);
        assert_eq!(r.rho_source, RhoSource::Exact);
    }

    #[test]
    fn planted_multiples_of_five() {
        let vals: Vec<i64> = (0..200).map(|i| 5 * ((i * 37 % 101) - 50)).collect();
        let v = StepMultiset::new(vals).unwrap();
        let r = invert(&v, &eps(), &InvertOptions::new(1.5)).unwrap();
        assert!(r.covered.len() >= 180);
        assert_eq!(r.gcd, 5);
        assert!(r.gap.scalar_generators().iter().all(|g| g % 5 == 0));
    }

    #[test]
    fn distinct_run_is_consistent() {
        let v = StepMultiset::new(1..=60).unwrap();
        let r = invert(&v, &eps(), &InvertOptions::new(1.5)).unwrap();
        assert!(r.volume >= r.covered.len() as u128);
        assert!(r.covered.len() >= 54);
    }

    #[test]
    fn rho_precondition() {
        let v = StepMultiset::new([1, 2, 4, 8, 16, 32, 64, 128]).unwrap();
        let err = invert(&v, &eps(), &InvertOptions::new(0.5)).unwrap_err();
        assert!(matches!(
            err,
            Error::Stage {
                stage: Stage::Rho,
                ..
            }
        ));
    }

    #[test]
    fn zero_multiset() {
        let v = StepMultiset::new([0, 0, 0]).unwrap();
        let r = invert(&v, &eps(), &InvertOptions::new(1.0)).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.covered.len(), 3);
    }

    #[test]
    fn budget_bounds() {
        let v = StepMultiset::new(vec![1; 16]).unwrap();
        let opts = InvertOptions::new(1.5);
        // 16^(1/4) = 2
        assert!(invert_budget(&v, 2, &opts).is_ok());
        assert!(matches!(
            invert_budget(&v, 1, &opts),
            Err(Error::PreconditionFailed(_))
        ));
        assert!(invert_budget(&v, 17, &opts).is_err());
    }

    #[test]
    fn supplied_rho_is_marked() {
        let v = StepMultiset::new(vec![1; 20]).unwrap();
        let exact = walks::rho(&v, &EtaSpec::bernoulli()).unwrap().rho;
        let opts = InvertOptions {
            rho: Some(exact),
            ..InvertOptions::new(1.5)
        };
        let r = invert(&v, &eps(), &opts).unwrap();
        assert_eq!(r.rho_source, RhoSource::Supplied);
    }

    #[test]
    fn dilation_equivariance() {
        let base: Vec<i64> = (0..120)
            .map(|i| 3 * ((i * 7) % 11) as i64 - 15 + 2 * (i % 3) as i64)
            .collect();
        let v = StepMultiset::new(base).unwrap();
        let opts = InvertOptions::new(1.5);
        let r1 = invert(&v, &eps(), &opts).unwrap();
        for c in [-3i64, 2, 7] {
            let r2 = invert(&v.scaled(c).unwrap(), &eps(), &opts).unwrap();
            assert_eq!(r1.gap.lower(), r2.gap.lower());
            assert_eq!(r1.gap.upper(), r2.gap.upper());
            let g1 = r1.gap.scalar_generators();
            let g2 = r2.gap.scalar_generators();
            for (a, b) in g1.iter().zip(&g2) {
                assert_eq!(b.abs(), (a * c).abs());
            }
        }
    }
}
