//! `dnls simulate`: one solver run written to its own directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dnls_core::solver::snapshot::{read_snapshot, write_snapshot};
use dnls_core::solver::{FieldState, InitialData, Observables, Solver};
use dnls_core::{Error, Result};
use serde_json::json;

use crate::config::{self, Loaded};
use crate::rundir::{num, RunDir};

pub const OBSERVABLES: &str = "observables.csv";
pub const CONFIG_COPY: &str = "config.toml";
pub const MODEL_COPY: &str = "model.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub struct SimulateOutcome {
    pub root: PathBuf,
    /// Set when the run stopped at the blow-up ceiling.
    pub blowup: Option<Error>,
}

fn csv_header(n: usize, j_norms: bool) -> String {
    let mut cols = vec!["t".to_string()];
    for name in ["l2", "linf", "w1inf"] {
        cols.extend((1..=n).map(|j| format!("{name}_{j}")));
    }
    if j_norms {
        cols.extend((1..=n).map(|j| format!("j_l2_{j}")));
    }
    cols.join(",")
}

fn csv_row(o: &Observables, j_norms: bool) -> String {
    let mut cols = vec![num(o.t)];
    for v in [&o.l2, &o.linf, &o.w1inf] {
        cols.extend(v.iter().map(|x| num(*x)));
    }
    if j_norms {
        match &o.j_l2 {
            Some(j) => cols.extend(j.iter().map(|x| num(*x))),
            None => cols.extend(o.l2.iter().map(|_| String::new())),
        }
    }
    cols.join(",")
}

pub fn snapshot_name(index: usize) -> String {
    format!("{SNAPSHOT_DIR}/{index:04}.dnls")
}

fn initial_state(loaded: &Loaded) -> Result<FieldState> {
    let grid = loaded.grid()?;
    let n = loaded.model.n();
    let eps = loaded.config.solver.eps;
    match &loaded.config.initial {
        InitialData::File { path } => {
            let p = config::relative(loaded, path);
            let f = std::fs::File::open(&p)?;
            let (state, length) = read_snapshot(std::io::BufReader::new(f))?;
            if state.points() != grid.points() || (length - grid.length()).abs() > 1e-12 * length {
                return Err(Error::Config(format!(
                    "initial data {} does not match the configured grid",
                    p.display()
                )));
            }
            InitialData::from_values(state.values, eps)
        }
        other => other.build(&grid, n, eps),
    }
}

pub fn simulate(loaded: &Loaded, out: &Path, seed: Option<u64>, quiet: bool) -> Result<SimulateOutcome> {
    let grid = loaded.grid()?;
    let cfg = loaded.solver_config()?;
    let init = initial_state(loaded)?;
    let solver = Solver::new(&loaded.model, grid.clone(), cfg.dealias);
    let dir = RunDir::create(out, &loaded.run_id(), "simulate")?;
    dir.write(CONFIG_COPY, loaded.text.as_bytes())?;
    dir.write(MODEL_COPY, loaded.model_text.as_bytes())?;

    let snap_times = loaded.snapshot_times();
    let n = loaded.model.n();
    let mut csv = csv_header(n, cfg.j_norms);
    csv.push('\n');
    let mut snap_index = 0;
    let result = solver.run_with(&cfg, &init, |state, obs| {
        let _ = writeln!(csv, "{}", csv_row(obs, cfg.j_norms));
        if snap_times.iter().any(|&t| (t - state.t).abs() < 0.5 * cfg.dt) {
            let mut bytes = Vec::new();
            write_snapshot(&mut bytes, state, grid.length())?;
            dir.write(&snapshot_name(snap_index), &bytes)?;
            snap_index += 1;
        }
        if !quiet {
            eprintln!("t = {:>12.4}  |u|_inf = {:.6e}", obs.t, obs.max_linf());
        }
        Ok(())
    });
    dir.write(OBSERVABLES, csv.as_bytes())?;
    let blowup = match result {
        Ok(_) => None,
        Err(e @ Error::BlowUp { .. }) => {
            if let Error::BlowUp {
                last_good_time,
                norm,
                ceiling,
            } = &e
            {
                let info = json!({
                    "last_good_time": last_good_time,
                    "norm": norm,
                    "ceiling": ceiling,
                });
                dir.write(
                    "blowup.json",
                    serde_json::to_string_pretty(&info).unwrap().as_bytes(),
                )?;
            }
            Some(e)
        }
        Err(e) => return Err(e),
    };
    let root = dir.seal(&loaded.text, seed)?;
    Ok(SimulateOutcome { root, blowup })
}

/// Observables of a finished run, read back from its CSV.
pub fn read_observables(root: &Path) -> Result<Vec<(f64, f64, f64)>> {
    let text = config::read(&root.join(OBSERVABLES))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty observables file".into()))?
        .split(',')
        .collect();
    let cols = |prefix: &str| -> Vec<usize> {
        header
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix) && h[prefix.len()..].chars().all(|c| c.is_ascii_digit()))
            .map(|(i, _)| i)
            .collect()
    };
    let (l2, linf) = (cols("l2_"), cols("linf_"));
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.parse::<f64>().unwrap_or(f64::NAN))
                .collect();
            let total_l2 = l2.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
            let max_linf = linf.iter().map(|&i| v[i]).fold(0.0, f64::max);
            Ok((v[0], total_l2, max_linf))
        })
        .collect()
}
