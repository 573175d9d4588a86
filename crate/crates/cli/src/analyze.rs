//! `dnls analyze` and the profile CSV format shared with `dnls reduce`.

use std::path::{Path, PathBuf};

use dnls_core::analysis::fit::default_window;
use dnls_core::analysis::{
    compute_residual, default_xi_grid, extract_profile, fit_decay, fit_power_law, scattering_check, DecayFit,
    DecayModel, ProfileState, ScatteringReport,
};
use dnls_core::solver::snapshot::read_snapshot;
use dnls_core::solver::{Grid1D, Solver};
use dnls_core::structure::check_b3_exact;
use dnls_core::{CubicSystem, Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::config::{self, ExperimentConfig};
use crate::rundir::{num, RunDir};
use crate::simulate::{read_observables, CONFIG_COPY, MODEL_COPY, SNAPSHOT_DIR};

/// Residual fits start here.
const RESIDUAL_FIT_START: f64 = 10.0;

pub fn profile_csv(p: &ProfileState) -> String {
    let n = p.components();
    let mut s = String::from("t,xi");
    for j in 1..=n {
        s.push_str(&format!(",re_{j},im_{j}"));
    }
    s.push('\n');
    for (i, &xi) in p.xi.iter().enumerate() {
        s.push_str(&num(p.t));
        s.push(',');
        s.push_str(&num(xi));
        for j in 0..n {
            let z = p.alpha[j][i];
            s.push(',');
            s.push_str(&num(z.re));
            s.push(',');
            s.push_str(&num(z.im));
        }
        s.push('\n');
    }
    s
}

pub fn parse_profile_csv(text: &str) -> Result<ProfileState> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty profile file".into()))?;
    let cols = header.split(',').count();
    if cols < 4 || (cols - 2) % 2 != 0 {
        return Err(Error::Parse(format!("profile header has {cols} columns")));
    }
    let n = (cols - 2) / 2;
    let mut t = None;
    let mut xi = Vec::new();
    let mut alpha = vec![Vec::new(); n];
    for (r, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("profile row {r}: {e}")))?;
        if v.len() != cols {
            return Err(Error::Parse(format!("profile row {r} has {} columns", v.len())));
        }
        t.get_or_insert(v[0]);
        xi.push(v[1]);
        for j in 0..n {
            alpha[j].push(Complex64::new(v[2 + 2 * j], v[3 + 2 * j]));
        }
    }
    let t = t.ok_or_else(|| Error::Parse("profile has no rows".into()))?;
    ProfileState::new(t, xi, alpha)
}

fn residual_csv(t: f64, xi: &[f64], rho: &[Vec<Complex64>]) -> String {
    let p = ProfileState {
        t,
        xi: xi.to_vec(),
        alpha: rho.to_vec(),
        boundary_warning: false,
    };
    profile_csv(&p)
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotSummary {
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
    pub profile_sup: f64,
    pub residual_sup: f64,
    pub boundary_warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub run_id: String,
    pub window: (f64, f64),
    /// Fits of `‖u‖_∞` (pure-power, power-log) and of `‖u‖_{L²}` (log-only).
    pub decay: Vec<DecayFit>,
    pub decay_errors: Vec<String>,
    /// Model with the smallest constancy ratio among the `‖u‖_∞` fits.
    pub best_linf_model: Option<DecayModel>,
    /// `max/min` of the uncompensated `‖u‖_{L²}` over the window.
    pub l2_raw_ratio: Option<f64>,
    pub residual_exponent: Option<f64>,
    pub scattering: Option<ScatteringReport>,
    pub scattering_skipped: Option<String>,
    pub snapshots: Vec<SnapshotSummary>,
}

pub struct AnalysisOutcome {
    pub root: PathBuf,
    pub summary: AnalysisSummary,
}

fn read_run(root: &Path) -> Result<(ExperimentConfig, String, CubicSystem)> {
    let text = config::read(&root.join(CONFIG_COPY))?;
    let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let model = CubicSystem::from_toml_str(&config::read(&root.join(MODEL_COPY))?)?;
    Ok((cfg, text, model))
}

fn snapshot_paths(root: &Path) -> Result<Vec<PathBuf>> {
    let dir = root.join(SNAPSHOT_DIR);
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "dnls"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Longest run of consecutive dyadic profiles ending at the last one.
fn dyadic_tail(profiles: &[ProfileState]) -> Vec<ProfileState> {
    let mut out: Vec<ProfileState> = Vec::new();
    for p in profiles.iter().rev() {
        match out.last() {
            Some(q) if ((q.t / p.t) - 2.0).abs() > 0.02 => break,
            _ => out.push(p.clone()),
        }
    }
    out.reverse();
    out
}

pub fn analyze(run_root: &Path, out: &Path, quiet: bool) -> Result<AnalysisOutcome> {
    let (cfg, cfg_text, sys) = read_run(run_root)?;
    let run_id = run_root
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    let grid = Grid1D::new(cfg.grid.length, cfg.grid.points)?;
    let solver = Solver::new(&sys, grid.clone(), cfg.solver.dealias);
    let xi = default_xi_grid(&grid, sys.masses(), cfg.analysis.xi_points);
    let dir = RunDir::create(out, &format!("{run_id}-analysis"), "analyze")?;

    let mut profiles = Vec::new();
    let mut snapshots = Vec::new();
    let mut jsonl = String::new();
    for path in snapshot_paths(run_root)? {
        let (state, _) = read_snapshot(std::io::BufReader::new(std::fs::File::open(&path)?))?;
        if state.t < 1.0 {
            continue;
        }
        let p = extract_profile(&solver, &state, &xi)?;
        let rho = compute_residual(&solver, &state, &p)?;
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        dir.write(&format!("profiles/{stem}.csv"), profile_csv(&p).as_bytes())?;
        dir.write(
            &format!("residuals/{stem}.csv"),
            residual_csv(rho.t, &rho.xi, &rho.rho).as_bytes(),
        )?;
        let obs = solver.observables(&state, false);
        let row = SnapshotSummary {
            t: state.t,
            l2: obs.total_l2(),
            linf: obs.max_linf(),
            profile_sup: p.sup(),
            residual_sup: rho.sup(),
            boundary_warning: p.boundary_warning,
        };
        if !quiet {
            eprintln!(
                "t = {:>12.4}  sup|alpha| = {:.6e}  sup|rho| = {:.6e}",
                row.t, row.profile_sup, row.residual_sup
            );
        }
        jsonl.push_str(&serde_json::to_string(&row).expect("row serializes"));
        jsonl.push('\n');
        snapshots.push(row);
        profiles.push(p);
    }
    dir.write("summary.jsonl", jsonl.as_bytes())?;

    let series = read_observables(run_root)?;
    let t_first = series.iter().map(|s| s.0).find(|&t| t >= 1.0).unwrap_or(1.0);
    let t_end = series.last().map(|s| s.0).unwrap_or(cfg.solver.t_end);
    let window = cfg
        .analysis
        .fit_window
        .map(|w| (w[0], w[1]))
        .unwrap_or_else(|| default_window(t_first, t_end));
    let eps = cfg.solver.eps;
    let linf: Vec<(f64, f64)> = series.iter().map(|s| (s.0, s.2)).collect();
    let l2: Vec<(f64, f64)> = series.iter().map(|s| (s.0, s.1)).collect();
    let mut decay = Vec::new();
    let mut decay_errors = Vec::new();
    for (model, data) in [
        (DecayModel::PurePower, &linf),
        (DecayModel::PowerLog, &linf),
        (DecayModel::LogOnly, &l2),
    ] {
        match fit_decay(data, model, eps, window) {
            Ok(f) => decay.push(f),
            Err(e) => decay_errors.push(format!("{model}: {e}")),
        }
    }
    let best_linf_model = decay
        .iter()
        .filter(|f| f.model != DecayModel::LogOnly)
        .min_by(|a, b| a.constancy_ratio.total_cmp(&b.constancy_ratio))
        .map(|f| f.model);
    let in_window: Vec<f64> = l2
        .iter()
        .filter(|p| p.0 >= window.0 && p.0 <= window.1)
        .map(|p| p.1)
        .collect();
    let l2_raw_ratio = (!in_window.is_empty()).then(|| {
        in_window.iter().cloned().fold(f64::MIN, f64::max)
            / in_window.iter().cloned().fold(f64::MAX, f64::min)
    });

    let rho_series: Vec<(f64, f64)> = snapshots
        .iter()
        .filter(|s| s.t >= RESIDUAL_FIT_START && s.residual_sup > 0.0)
        .map(|s| (s.t, s.residual_sup))
        .collect();
    let residual_exponent = rho_series
        .last()
        .and_then(|last| fit_power_law(&rho_series, (RESIDUAL_FIT_START, last.0), 3).ok())
        .map(|f| f.exponent);

    let (scattering, scattering_skipped) = if !check_b3_exact(&sys).holds() {
        (None, Some("model does not satisfy (b3)".to_string()))
    } else {
        match scattering_check(&sys, &dyadic_tail(&profiles), cfg.analysis.scattering_delta) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };

    let summary = AnalysisSummary {
        run_id,
        window,
        decay,
        decay_errors,
        best_linf_model,
        l2_raw_ratio,
        residual_exponent,
        scattering,
        scattering_skipped,
        snapshots,
    };
    dir.write(
        "fits.json",
        serde_json::to_string_pretty(&json!({
            "window": summary.window,
            "decay": summary.decay,
            "decay_errors": summary.decay_errors,
            "best_linf_model": summary.best_linf_model,
            "l2_raw_ratio": summary.l2_raw_ratio,
            "residual_exponent": summary.residual_exponent,
            "scattering": summary.scattering,
            "scattering_skipped": summary.scattering_skipped,
        }))
        .expect("fits serialize")
        .as_bytes(),
    )?;
    let root = dir.seal(&cfg_text, None)?;
    Ok(AnalysisOutcome { root, summary })
}
