//! Experiment configuration files.

use std::path::{Path, PathBuf};

use dnls_core::solver::{Grid1D, InitialData, SolverConfig};
use dnls_core::structure::{HermitianForm, SamplePlan, DEFAULT_SPHERE_SAMPLES, DEFAULT_XI_SAMPLES};
use dnls_core::{CubicSystem, Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Defaults to the config file stem.
    pub run_id: Option<String>,
    /// Model file, relative to the config file.
    pub model: PathBuf,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub initial: InitialData,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub check: CheckSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub eps: f64,
    #[serde(default = "yes")]
    pub dealias: bool,
    #[serde(default = "default_ceiling")]
    pub blowup_ceiling: f64,
    #[serde(default)]
    pub j_norms: bool,
    /// Explicit observable times; otherwise `sample_count` times spaced by
    /// `sample_spacing` (log spacing starts at `t = 1`).
    pub sample_times: Option<Vec<f64>>,
    #[serde(default = "default_sample_count")]
    pub sample_count: usize,
    #[serde(default = "default_spacing")]
    pub sample_spacing: Spacing,
    /// Times at which the full state is written; defaults to the powers of
    /// two in `[1, t_end]`.
    pub snapshot_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_xi_points")]
    pub xi_points: usize,
    /// Defaults to `[max(50, 10 t₀), t_end]`.
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "default_delta")]
    pub scattering_delta: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            xi_points: default_xi_points(),
            fit_window: None,
            scattering_delta: default_delta(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    #[serde(default = "default_xi_samples")]
    pub xi_samples: usize,
    #[serde(default = "default_sphere_samples")]
    pub sphere_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Hermitian matrix file, relative to the config file.
    pub matrix: Option<PathBuf>,
}

impl Default for CheckSection {
    fn default() -> Self {
        Self {
            xi_samples: default_xi_samples(),
            sphere_samples: default_sphere_samples(),
            seed: 0,
            matrix: None,
        }
    }
}

fn yes() -> bool {
    true
}
fn default_ceiling() -> f64 {
    1e6
}
fn default_sample_count() -> usize {
    101
}
fn default_spacing() -> Spacing {
    Spacing::Log
}
fn default_xi_points() -> usize {
    257
}
fn default_delta() -> f64 {
    0.1
}
fn default_xi_samples() -> usize {
    DEFAULT_XI_SAMPLES
}
fn default_sphere_samples() -> usize {
    DEFAULT_SPHERE_SAMPLES
}

/// A parsed config together with the files it refers to.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub path: PathBuf,
    pub text: String,
    pub config: ExperimentConfig,
    pub model_text: String,
    pub model: CubicSystem,
    pub matrix: Option<HermitianForm>,
}

impl Loaded {
    pub fn run_id(&self) -> String {
        self.config.run_id.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into())
        })
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.config.grid.length, self.config.grid.points)
    }

    pub fn plan(&self, seed: Option<u64>) -> Result<SamplePlan> {
        let c = &self.config.check;
        SamplePlan::new(c.xi_samples, c.sphere_samples, seed.unwrap_or(c.seed))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let s = &self.config.solver;
        let mut cfg = SolverConfig::new(s.dt, s.t_end);
        cfg.eps = s.eps;
        cfg.dealias = s.dealias;
        cfg.blowup_ceiling = s.blowup_ceiling;
        cfg.j_norms = s.j_norms;
        let mut times = match &s.sample_times {
            Some(t) => t.clone(),
            None => spaced_times(s.t_end, s.sample_count, s.sample_spacing),
        };
        times.extend(self.snapshot_times());
        times.push(0.0);
        times.push(s.t_end);
        cfg.sample_times = merge_times(times, s.dt);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        let s = &self.config.solver;
        match &s.snapshot_times {
            Some(t) => t.clone(),
            None => {
                let mut out = Vec::new();
                let mut t = 1.0;
                while t <= s.t_end * (1.0 + 1e-12) {
                    out.push(t);
                    t *= 2.0;
                }
                out
            }
        }
    }
}

/// `count` times in `[0, t_end]`; log spacing covers `[1, t_end]`.
pub fn spaced_times(t_end: f64, count: usize, spacing: Spacing) -> Vec<f64> {
    if count < 2 {
        return vec![t_end];
    }
    let frac = |i: usize| i as f64 / (count - 1) as f64;
    match spacing {
        Spacing::Linear => (0..count).map(|i| t_end * frac(i)).collect(),
        Spacing::Log if t_end > 1.0 => (0..count).map(|i| t_end.powf(frac(i))).collect(),
        Spacing::Log => vec![t_end],
    }
}

/// Sorts, snaps to the step grid and removes duplicates.
fn merge_times(mut times: Vec<f64>, dt: f64) -> Vec<f64> {
    for t in &mut times {
        *t = (*t / dt).round() * dt;
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() < 0.5 * dt);
    times
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn load(path: &Path) -> Result<Loaded> {
    let text = read(path)?;
    let config: ExperimentConfig =
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let model_path = resolve(path, &config.model);
    let model_text = read(&model_path)?;
    let model = CubicSystem::from_toml_str(&model_text).map_err(|e| at(&model_path, e))?;
    let matrix = match &config.check.matrix {
        Some(m) => Some(HermitianForm::from_text(&read(&resolve(path, m))?)?),
        None => None,
    };
    if let InitialData::File { path: p } = &config.initial {
        let p = resolve(path, Path::new(p));
        if !p.exists() {
            return Err(Error::Config(format!(
                "initial data file {} not found",
                p.display()
            )));
        }
    }
    Ok(Loaded {
        path: path.to_path_buf(),
        text,
        config,
        model_text,
        model,
        matrix,
    })
}

/// Prefixes a parse error with the file it came from.
pub fn at(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    }
}

/// Resolves a path relative to the config file.
pub fn relative(loaded: &Loaded, p: &str) -> PathBuf {
    resolve(&loaded.path, Path::new(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_times_span_one_to_end() {
        let t = spaced_times(100.0, 3, Spacing::Log);
        assert_eq!(t.len(), 3);
        assert!((t[0] - 1.0).abs() < 1e-12 && (t[1] - 10.0).abs() < 1e-12 && (t[2] - 100.0).abs() < 1e-12);
        assert_eq!(
            spaced_times(4.0, 5, Spacing::Linear),
            vec![0.0, 1.0, 2.0, 3.0, 4.0]
        );
    }

    #[test]
    fn merged_times_are_snapped_and_unique() {
        let t = merge_times(vec![1.004, 0.0, 1.0, 0.5, 2.0, 0.999], 0.01);
        assert_eq!(t.len(), 4);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
        assert!(t.iter().all(|x| ((x / 0.01).round() * 0.01 - x).abs() < 1e-15));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"
model = "m.toml"
typo = 1
[grid]
length = 10.0
points = 64
[solver]
dt = 0.1
t_end = 1.0
eps = 0.1
[initial]
kind = "gaussian"
sigma = 1.0
"#;
        assert!(toml::from_str::<ExperimentConfig>(text).is_err());
        let ok = text.replace("typo = 1\n", "");
        let cfg: ExperimentConfig = toml::from_str(&ok).unwrap();
        assert!(cfg.solver.dealias);
        assert_eq!(cfg.analysis.xi_points, 257);
    }
}
