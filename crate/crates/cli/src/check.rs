//! `dnls check`: structural conditions of a model.

use dnls_core::structure::{
    check_b3_exact, check_condition_a, check_dissipativity, check_gauge_invariance, search_diagonal_a,
    Condition, DissipLevel,
};
use dnls_core::{ConditionReport, CubicSystem, HermitianForm, Result, SamplePlan};
use serde_json::{json, Value};

/// Largest `N` for which a diagonal matrix is searched automatically.
const SEARCH_MAX_N: usize = 4;

pub struct CheckOutcome {
    pub reports: Vec<ConditionReport>,
    /// Strongest theorem regime that applies, if any.
    pub regime: Option<Condition>,
    pub passed: bool,
}

fn level(c: Condition) -> Option<DissipLevel> {
    match c {
        Condition::B0 => Some(DissipLevel::B0),
        Condition::B1 => Some(DissipLevel::B1),
        Condition::B2 => Some(DissipLevel::B2),
        _ => None,
    }
}

fn dissipative(
    sys: &CubicSystem,
    matrix: Option<&HermitianForm>,
    plan: &SamplePlan,
    level: DissipLevel,
) -> Result<ConditionReport> {
    let (a, note) = match matrix {
        Some(a) => (a.clone(), None),
        None if sys.n() <= SEARCH_MAX_N => match search_diagonal_a(sys, plan, level)? {
            Some(a) => (a, Some("matrix found by diagonal search")),
            None => (
                HermitianForm::identity(sys.n()),
                Some("diagonal search found no matrix; identity shown"),
            ),
        },
        None => (
            HermitianForm::identity(sys.n()),
            Some("identity matrix; pass --matrix to choose A"),
        ),
    };
    let mut r = check_dissipativity(sys, &a, plan, level)?;
    if let Some(note) = note {
        r.note = if r.note.is_empty() {
            note.into()
        } else {
            format!("{}; {note}", r.note)
        };
    }
    Ok(r)
}

pub fn run_condition(
    sys: &CubicSystem,
    c: Condition,
    matrix: Option<&HermitianForm>,
    plan: &SamplePlan,
) -> Result<ConditionReport> {
    match c {
        Condition::A => Ok(check_condition_a(sys)),
        Condition::Gauge => check_gauge_invariance(sys),
        Condition::B3 => Ok(check_b3_exact(sys)),
        other => dissipative(sys, matrix, plan, level(other).expect("dissipative level")),
    }
}

/// With `requested` empty the model is classified: (a) and the strongest
/// applicable dissipative level are required.
pub fn check(
    sys: &CubicSystem,
    requested: &[Condition],
    matrix: Option<&HermitianForm>,
    plan: &SamplePlan,
) -> Result<CheckOutcome> {
    if !requested.is_empty() {
        let reports = requested
            .iter()
            .map(|&c| run_condition(sys, c, matrix, plan))
            .collect::<Result<Vec<_>>>()?;
        let passed = reports.iter().all(|r| r.holds());
        let regime = classify(&reports);
        return Ok(CheckOutcome {
            reports,
            regime,
            passed,
        });
    }
    let mut reports = vec![check_condition_a(sys)];
    if sys.n() == 1 {
        reports.push(check_gauge_invariance(sys)?);
    }
    if reports[0].holds() {
        for c in [Condition::B3, Condition::B2, Condition::B1, Condition::B0] {
            let r = run_condition(sys, c, matrix, plan)?;
            let stop = r.holds();
            reports.push(r);
            if stop {
                break;
            }
        }
    }
    let regime = classify(&reports);
    let passed = reports[0].holds() && regime.is_some();
    Ok(CheckOutcome {
        reports,
        regime,
        passed,
    })
}

fn classify(reports: &[ConditionReport]) -> Option<Condition> {
    let a = reports.iter().any(|r| r.condition == Condition::A && r.holds());
    if !a {
        return None;
    }
    [Condition::B3, Condition::B2, Condition::B1, Condition::B0]
        .into_iter()
        .find(|c| reports.iter().any(|r| r.condition == *c && r.holds()))
}

pub fn report_json(sys: &CubicSystem, outcome: &CheckOutcome) -> Value {
    json!({
        "model": sys.name,
        "passed": outcome.passed,
        "regime": outcome.regime.map(|c| c.id()),
        "conditions": outcome.reports.iter().map(|r| json!({
            "condition": r.condition.id(),
            "verdict": r.verdict.id(),
            "margin": r.margin,
            "constant": r.constant,
            "matrix": r.matrix.as_ref().map(|a| a.to_text()),
            "witness": r.witness.as_ref().map(|w| w.to_string()),
            "note": r.note,
        })).collect::<Vec<_>>(),
    })
}

pub fn report_text(sys: &CubicSystem, outcome: &CheckOutcome) -> String {
    let mut s = format!(
        "model = {}\nregime = {}\npassed = {}\n\n",
        if sys.name.is_empty() {
            "(unnamed)"
        } else {
            &sys.name
        },
        outcome.regime.map(|c| c.id()).unwrap_or("none"),
        outcome.passed
    );
    for r in &outcome.reports {
        s.push_str(&r.to_string());
        s.push('\n');
    }
    s
}
