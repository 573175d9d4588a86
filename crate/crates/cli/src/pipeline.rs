//! `dnls pipeline`: check, simulate and analyze one config.

use std::fmt;
use std::path::{Path, PathBuf};

use dnls_core::analysis::DecayModel;
use dnls_core::structure::Condition;
use dnls_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::analyze::{analyze, AnalysisSummary};
use crate::check::{check, report_json, report_text};
use crate::config::Loaded;
use crate::rundir::RunDir;
use crate::simulate::simulate;

/// Constancy ratios up to this count as a matching compensated law.
pub const DECAY_RATIO_MAX: f64 = 3.0;

/// Which pipeline stage failed.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.error)
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|error| StageError { stage: name, error })
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub run_id: String,
    pub regime: Option<String>,
    /// Set when the pipeline stopped after the check.
    pub stopped: Option<String>,
    pub law: Option<String>,
    pub law_matches: Option<bool>,
    pub detail: String,
    pub run_dir: Option<PathBuf>,
    pub analysis_dir: Option<PathBuf>,
    pub blowup: Option<String>,
}

impl PipelineReport {
    pub fn text(&self) -> String {
        let mut s = format!(
            "run = {}\nregime = {}\n",
            self.run_id,
            self.regime.as_deref().unwrap_or("none")
        );
        if let Some(why) = &self.stopped {
            s.push_str(&format!("stopped after check: {why}\n"));
        }
        if let Some(law) = &self.law {
            s.push_str(&format!("law = {law}\n"));
        }
        if let Some(m) = self.law_matches {
            s.push_str(&format!("law matches = {m}\n"));
        }
        if let Some(b) = &self.blowup {
            s.push_str(&format!("blow-up: {b}\n"));
        }
        if !self.detail.is_empty() {
            s.push_str(&self.detail);
            s.push('\n');
        }
        s
    }
}

fn ratio(a: &AnalysisSummary, model: DecayModel) -> Option<f64> {
    a.decay
        .iter()
        .find(|f| f.model == model)
        .map(|f| f.constancy_ratio)
}

/// The decay statement of the regime's theorem and whether the run follows it.
pub fn judge(regime: Condition, a: &AnalysisSummary) -> (String, bool, String) {
    let pure = ratio(a, DecayModel::PurePower);
    let plog = ratio(a, DecayModel::PowerLog);
    let log_only = ratio(a, DecayModel::LogOnly);
    let fmt_r = |r: Option<f64>| r.map(|r| format!("{r:.4}")).unwrap_or_else(|| "n/a".into());
    let power_log_ok =
        plog.is_some_and(|r| r <= DECAY_RATIO_MAX) && a.best_linf_model == Some(DecayModel::PowerLog);
    match regime {
        Condition::B0 => (
            "|u|_inf <= C eps (1+t)^(-1/2)".into(),
            pure.is_some_and(|r| r <= DECAY_RATIO_MAX),
            format!("pure-power constancy ratio {}", fmt_r(pure)),
        ),
        Condition::B1 => (
            "|u|_inf <= C eps ((1+t)(1+eps^2 log(2+t)))^(-1/2)".into(),
            power_log_ok,
            format!(
                "power-log ratio {}, pure-power ratio {}, best {}",
                fmt_r(plog),
                fmt_r(pure),
                a.best_linf_model.map(|m| m.id()).unwrap_or("n/a")
            ),
        ),
        Condition::B2 => (
            "|u|_L2 <= C eps (1+eps^2 log(2+t))^(-1/2)".into(),
            log_only.is_some_and(|r| r <= DECAY_RATIO_MAX) && power_log_ok,
            format!(
                "log-only L2 ratio {}, uncompensated L2 ratio {}, power-log ratio {}",
                fmt_r(log_only),
                fmt_r(a.l2_raw_ratio),
                fmt_r(plog)
            ),
        ),
        _ => match &a.scattering {
            Some(s) => (
                "u scatters to a free solution, O(t^(-1/4+delta)) in L2".into(),
                s.passed,
                format!(
                    "Cauchy differences decay with exponent {:.4} (L2 {:.4}), strictly decreasing = {}",
                    s.exponent, s.l2_exponent, s.strictly_decreasing
                ),
            ),
            None => (
                "u scatters to a free solution".into(),
                false,
                format!(
                    "scattering check not run: {}",
                    a.scattering_skipped.as_deref().unwrap_or("unknown")
                ),
            ),
        },
    }
}

pub fn pipeline(
    loaded: &Loaded,
    out: &Path,
    seed: Option<u64>,
    quiet: bool,
) -> std::result::Result<PipelineReport, StageError> {
    let plan = stage("check", loaded.plan(seed))?;
    let outcome = stage("check", check(&loaded.model, &[], loaded.matrix.as_ref(), &plan))?;
    let dir = stage(
        "check",
        RunDir::create(out, &format!("{}-pipeline", loaded.run_id()), "pipeline"),
    )?;
    stage(
        "check",
        dir.write("check.txt", report_text(&loaded.model, &outcome).as_bytes()),
    )?;
    let check_json =
        serde_json::to_string_pretty(&report_json(&loaded.model, &outcome)).expect("report serializes");
    stage("check", dir.write("check.json", check_json.as_bytes()))?;

    let mut report = PipelineReport {
        run_id: loaded.run_id(),
        regime: outcome.regime.map(|c| c.id().to_string()),
        stopped: None,
        law: None,
        law_matches: None,
        detail: String::new(),
        run_dir: None,
        analysis_dir: None,
        blowup: None,
    };
    let finish = |dir: RunDir, report: &PipelineReport| -> std::result::Result<(), StageError> {
        let text = serde_json::to_string_pretty(report).expect("report serializes");
        stage("report", dir.write("report.json", text.as_bytes()))?;
        stage("report", dir.write("report.txt", report.text().as_bytes()))?;
        stage("report", dir.seal(&loaded.text, seed))?;
        Ok(())
    };

    let regime = match outcome.regime {
        Some(r) if outcome.passed => r,
        _ => {
            let a_holds = outcome.reports.first().is_some_and(|r| r.holds());
            report.stopped = Some(if a_holds {
                "no dissipative condition (b0)-(b3) could be established".into()
            } else {
                let w = outcome.reports[0]
                    .witness
                    .as_ref()
                    .map(|w| format!(" ({w})"))
                    .unwrap_or_default();
                format!("condition (a) fails{w}")
            });
            finish(dir, &report)?;
            return Ok(report);
        }
    };

    let sim = stage("simulate", simulate(loaded, out, seed, quiet))?;
    report.run_dir = Some(sim.root.clone());
    if let Some(b) = &sim.blowup {
        report.blowup = Some(b.to_string());
        finish(dir, &report)?;
        return Err(StageError {
            stage: "simulate",
            error: sim.blowup.unwrap(),
        });
    }
    let analysis = stage("analyze", analyze(&sim.root, out, quiet))?;
    report.analysis_dir = Some(analysis.root.clone());
    let (law, ok, detail) = judge(regime, &analysis.summary);
    report.law = Some(law);
    report.law_matches = Some(ok);
    report.detail = detail;
    if !analysis.summary.decay_errors.is_empty() {
        report.detail.push_str(&format!(
            "\nfit errors: {}",
            analysis.summary.decay_errors.join("; ")
        ));
    }
    finish(dir, &report)?;
    Ok(report)
}

pub fn sweep_row(config: &Path, r: &std::result::Result<PipelineReport, StageError>) -> serde_json::Value {
    match r {
        Ok(rep) => json!({ "config": config, "ok": true, "report": rep }),
        Err(e) => json!({ "config": config, "ok": false, "stage": e.stage, "error": e.error.to_string() }),
    }
}
