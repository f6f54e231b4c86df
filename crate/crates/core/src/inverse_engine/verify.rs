use std::collections::BTreeMap;

use serde::Serialize;

use super::pipeline::StructureReport;

const ENUMERATION_CAP: u128 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail: detail.into(),
    }
}

fn counts(v: &[i64]) -> BTreeMap<i64, usize> {
    let mut m = BTreeMap::new();
    for &x in v {
        *m.entry(x).or_default() += 1;
    }
    m
}

/// Re-checks a report from scratch. Failures are listed, never thrown.
pub fn verify_report(report: &StructureReport) -> Vec<CheckResult> {
    let q = &report.gap;
    let mut out = vec![check(
        "symmetric",
        q.is_symmetric(),
        format!("lower {:?}, upper {:?}", q.lower(), q.upper()),
    )];
    out.push(match q.is_proper(1, ENUMERATION_CAP) {
        Ok(b) => check("proper", b, ""),
        Err(e) => check("proper", false, e.to_string()),
    });

    let mut misses = 0usize;
    let mut errors = Vec::new();
    for &v in &report.covered {
        match q.contains_scalar(v) {
            Ok(true) => {}
            Ok(false) => misses += 1,
            Err(e) => errors.push(e.to_string()),
        }
    }
    let mut joined = report.covered.clone();
    joined.extend(&report.exceptional);
    let partition = counts(&joined) == counts(&report.input);
    out.push(check(
        "coverage",
        misses == 0 && errors.is_empty() && partition,
        format!(
            "{} covered, {misses} not in Q, partition of input: {partition}{}",
            report.covered.len(),
            errors.first().map(|e| format!(", {e}")).unwrap_or_default()
        ),
    ));
    let wrongly_excluded = report
        .exceptional
        .iter()
        .filter(|&&v| q.contains_scalar(v).unwrap_or(false))
        .count();
    out.push(check(
        "exceptional_count",
        report.exceptional.len() as f64 <= report.exceptional_limit + 1e-9 && wrongly_excluded == 0,
        format!(
            "{} exceptional (limit {:.3}), {wrongly_excluded} actually in Q",
            report.exceptional.len(),
            report.exceptional_limit
        ),
    ));

    let vol = q.volume();
    let size = if vol <= ENUMERATION_CAP {
        q.volume_and_enumerate(ENUMERATION_CAP)
            .ok()
            .map(|(_, s)| s.len() as u128)
    } else {
        None
    };
    out.push(check(
        "volume",
        report.volume == vol && size.is_none_or(|s| s == vol) && report.rank == q.rank(),
        format!("reported {}, box {vol}, enumerated {size:?}", report.volume),
    ));

    if let Some(trace) = &report.trace {
        let level = &trace.level;
        out.push(check(
            "heavy_level",
            level.heavy.holds,
            format!("{:.6} >= {:.6}", level.heavy.lhs, level.heavy.rhs),
        ));
        if let Some(core) = &level.core {
            out.push(check(
                "double_count",
                core.double_count_identity && core.double_count_bound.holds,
                format!(
                    "rows {} cols {}",
                    core.double_count_rows, core.double_count_cols
                ),
            ));
        }
        if let Some(dual) = &level.dual {
            for (name, c) in [
                ("dual_cardinality", &dual.cardinality),
                ("dual_t_lower", &dual.t_lower),
                ("dual_t_energy", &dual.t_energy),
            ] {
                out.push(check(
                    name,
                    c.holds,
                    format!("{:.6} vs {:.6}", c.lhs, c.rhs),
                ));
            }
        }
    }
    out
}

pub fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gap_core::{Ambient, Gap};
    use crate::inverse_engine::{invert, InvertOptions};
    use crate::rational::ratio;
    use crate::StepMultiset;

    fn report() -> StructureReport {
        let vals: Vec<i64> = (0..150)
            .map(|i| 4 * ((i * 13) % 31 - 15) + 60 * ((i % 3) - 1))
            .collect();
        invert(
            &StepMultiset::new(vals).unwrap(),
            &ratio(1, 10),
            &InvertOptions::new(1.5),
        )
        .unwrap()
    }

    fn failed(r: &StructureReport) -> Vec<&'static str> {
        verify_report(r)
            .into_iter()
            .filter(|c| !c.passed)
            .map(|c| c.name)
            .collect()
    }

    #[test]
    fn clean_report_passes() {
        let r = report();
        let checks = verify_report(&r);
        assert!(all_pass(&checks), "{checks:?}");
        assert!(checks.iter().any(|c| c.name == "double_count"));
    }

    #[test]
    fn shrunk_gap_fails_coverage() {
        let mut r = report();
        let q = &r.gap;
        let upper: Vec<i64> = q.upper().iter().map(|&m| m / 2).collect();
        let lower: Vec<i64> = upper.iter().map(|&m| -m).collect();
        r.gap = Gap::new(
            Ambient::Integers,
            vec![0],
            q.generators().to_vec(),
            lower,
            upper,
        )
        .unwrap();
        assert!(failed(&r).contains(&"coverage"));
    }

    #[test]
    fn asymmetric_gap_fails() {
        let mut r = report();
        let q = &r.gap;
        let mut lower = q.lower().to_vec();
        lower[0] += 1;
        r.gap = Gap::new(
            Ambient::Integers,
            vec![0],
            q.generators().to_vec(),
            lower,
            q.upper().to_vec(),
        )
        .unwrap();
        assert!(failed(&r).contains(&"symmetric"));
    }
}
