//! Decision procedures for the structural conditions on a cubic system:
//! mass resonance, gauge invariance, the dissipative conditions `b0`–`b2`
//! (sample based, relative to a positive Hermitian matrix `A`) and the exact
//! null condition `b3`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::{inner, CubicSystem, Factor, ZERO_COEFF_TOL};

/// Relative tolerance on resonance sums `m_j - (m̃_{k1} + m̃_{k2} + m̃_{k3})`.
pub const TOL_MASS: f64 = 1e-9;
/// Slack on `sup g` for the dissipative conditions.
pub const TOL_DISSIP: f64 = 1e-10;
/// Hermitian symmetry tolerance for user supplied matrices.
pub const TOL_HERMITIAN: f64 = 1e-12;

pub const DEFAULT_XI_SAMPLES: usize = 201;
pub const DEFAULT_SPHERE_SAMPLES: usize = 2000;
const PAIR_PHASES: usize = 8;

/// A positive definite Hermitian matrix with cached extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    entries: DMatrix<Complex64>,
    kappa_min: f64,
    kappa_max: f64,
}

impl HermitianForm {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::NotPositiveHermitian(format!(
                "matrix must be square and nonempty, got {}x{}",
                n,
                entries.ncols()
            )));
        }
        let scale = entries.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        for i in 0..n {
            for j in 0..n {
                let diff = (entries[(i, j)] - entries[(j, i)].conj()).norm();
                if !diff.is_finite() || diff > TOL_HERMITIAN * scale {
                    return Err(Error::NotPositiveHermitian(format!(
                        "entry ({i},{j}) differs from conjugate transpose by {diff:e}"
                    )));
                }
            }
        }
        let sym = (&entries + entries.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = sym.clone().symmetric_eigenvalues();
        let kappa_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let kappa_max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if kappa_min <= 0.0 {
            return Err(Error::NotPositiveHermitian(format!(
                "smallest eigenvalue {kappa_min:e} is not positive"
            )));
        }
        Ok(Self {
            entries: sym,
            kappa_min,
            kappa_max,
        })
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let m = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self::new(m)
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n]).expect("identity is positive")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn kappa_min(&self) -> f64 {
        self.kappa_min
    }

    pub fn kappa_max(&self) -> f64 {
        self.kappa_max
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.entries * Complex64::new(c, 0.0))
    }

    pub fn apply(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if y.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: y.len(),
            });
        }
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.entries[(i, j)] * y[j]).sum())
            .collect())
    }

    /// `⟨y, A y⟩`, real for Hermitian `A`.
    pub fn quadratic(&self, y: &[Complex64]) -> Result<f64> {
        let ay = self.apply(y)?;
        Ok(inner(&ay, y).re)
    }

    pub fn diagonal_entries(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.entries[(i, i)].re).collect()
    }

    /// Parses `N` lines of `2N` numbers (`re im` pairs). `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| Error::Parse(format!("matrix entry `{t}`: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if n == 0 {
            return Err(Error::Parse("matrix file is empty".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != 2 * n {
                return Err(Error::Parse(format!(
                    "matrix row {i} has {} numbers, expected {} (re im pairs)",
                    r.len(),
                    2 * n
                )));
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(rows[i][2 * j], rows[i][2 * j + 1])
        }))
    }

    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut s = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.entries[(i, j)];
                    format!("{:.17e} {:.17e}", z.re, z.im)
                })
                .collect();
            s.push_str(&row.join("  "));
            s.push('\n');
        }
        s
    }
}

/// Sampling plan for the dissipative checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub xi_samples: Vec<f64>,
    pub sphere_samples: usize,
    pub seed: u64,
}

impl SamplePlan {
    /// `ξ = tan θ` on a uniform grid of `xi_count` midpoints in `(-π/2, π/2)`.
    pub fn new(xi_count: usize, sphere_samples: usize, seed: u64) -> Result<Self> {
        if xi_count == 0 || sphere_samples == 0 {
            return Err(Error::Config(
                "sample plan needs at least one ξ and one Y sample".into(),
            ));
        }
        Ok(Self {
            xi_samples: tan_grid(xi_count),
            sphere_samples,
            seed,
        })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(DEFAULT_XI_SAMPLES, DEFAULT_SPHERE_SAMPLES, seed).expect("defaults are valid")
    }

    /// Seeded complex-Gaussian unit vectors, followed by the coordinate
    /// directions and all two-coordinate equal-magnitude vectors at
    /// eight relative phases.
    pub fn sphere_points(&self, n: usize) -> Vec<Vec<Complex64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut pts = Vec::with_capacity(self.sphere_samples + n + n * n * PAIR_PHASES);
        for _ in 0..self.sphere_samples {
            loop {
                let y: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect();
                if let Some(u) = normalize(y) {
                    pts.push(u);
                    break;
                }
            }
        }
        for a in 0..n {
            let mut y = vec![Complex64::new(0.0, 0.0); n];
            y[a] = Complex64::new(1.0, 0.0);
            pts.push(y);
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for a in 0..n {
            for b in (a + 1)..n {
                for p in 0..PAIR_PHASES {
                    let phase = 2.0 * std::f64::consts::PI * p as f64 / PAIR_PHASES as f64;
                    let mut y = vec![Complex64::new(0.0, 0.0); n];
                    y[a] = Complex64::new(h, 0.0);
                    y[b] = Complex64::from_polar(h, phase);
                    pts.push(y);
                }
            }
        }
        pts
    }
}

pub fn tan_grid(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            let theta = -FRAC_PI_2 + std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
            theta.tan()
        })
        .collect()
}

fn normalize(mut y: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let norm = crate::nonlinearity::norm2(&y);
    if norm < 1e-12 || !norm.is_finite() {
        return None;
    }
    y.iter_mut().for_each(|z| *z /= norm);
    Some(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    A,
    Gauge,
    B0,
    B1,
    B2,
    B3,
}

impl Condition {
    pub fn id(self) -> &'static str {
        match self {
            Condition::A => "a",
            Condition::Gauge => "gauge",
            Condition::B0 => "b0",
            Condition::B1 => "b1",
            Condition::B2 => "b2",
            Condition::B3 => "b3",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Condition::A),
            "gauge" => Ok(Condition::Gauge),
            "b0" => Ok(Condition::B0),
            "b1" => Ok(Condition::B1),
            "b2" => Ok(Condition::B2),
            "b3" => Ok(Condition::B3),
            other => Err(Error::Parse(format!("unknown condition `{other}`"))),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Which dissipative inequality is being tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DissipLevel {
    B0,
    B1,
    B2,
}

impl DissipLevel {
    pub fn condition(self) -> Condition {
        match self {
            DissipLevel::B0 => Condition::B0,
            DissipLevel::B1 => Condition::B1,
            DissipLevel::B2 => Condition::B2,
        }
    }

    /// `w(ξ)`: 1 for `b0`/`b1`, `⟨ξ⟩² = 1 + ξ²` for `b2`.
    pub fn weight(self, xi: f64) -> f64 {
        match self {
            DissipLevel::B2 => 1.0 + xi * xi,
            _ => 1.0,
        }
    }

    /// True when `g(ξ, Y)` violates the inequality at a single point.
    pub fn fails_at(self, g: f64) -> bool {
        match self {
            DissipLevel::B0 => g > TOL_DISSIP,
            _ => g >= -TOL_DISSIP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnSamples,
    Violated,
    HoldsExactly,
}

impl Verdict {
    pub fn holds(self) -> bool {
        !matches!(self, Verdict::Violated)
    }

    pub fn id(self) -> &'static str {
        match self {
            Verdict::HoldsOnSamples => "holds-on-samples",
            Verdict::Violated => "violated",
            Verdict::HoldsExactly => "holds-exactly",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// An offending monomial (conditions `a` and `gauge`).
    Monomial {
        target: usize,
        factors: [Factor; 3],
        coeff: Complex64,
        detail: String,
    },
    /// A nonvanishing term of the symbol expansion (condition `b3`).
    SymbolTerm {
        target: usize,
        xi_degree: usize,
        factors: [usize; 3],
        coeff: Complex64,
    },
    /// A point `(ξ, Y)` with `|Y| = 1` and the value of `g` there.
    Sample { xi: f64, y: Vec<Complex64>, g: f64 },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Monomial {
                target,
                factors,
                coeff,
                detail,
            } => write!(
                f,
                "monomial j={} factors={} coeff={} ({detail})",
                target + 1,
                fmt_factors(factors),
                fmt_c(*coeff)
            ),
            Witness::SymbolTerm {
                target,
                xi_degree,
                factors,
                coeff,
            } => write!(
                f,
                "symbol term j={} xi^{} Y[{},{},{}] coeff={}",
                target + 1,
                xi_degree,
                factors[0] + 1,
                factors[1] + 1,
                factors[2] + 1,
                fmt_c(*coeff)
            ),
            Witness::Sample { xi, y, g } => {
                let ys: Vec<String> = y.iter().map(|z| fmt_c(*z)).collect();
                write!(f, "xi={xi:.17e} Y=({}) g={g:.17e}", ys.join(", "))
            }
        }
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.17e}{:+.17e}i", z.re, z.im)
}

fn fmt_factors(factors: &[Factor; 3]) -> String {
    let parts: Vec<String> = factors
        .iter()
        .map(|f| format!("({},{})", f.k + 1, f.deriv as u8))
        .collect();
    parts.join("")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub condition: Condition,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// `C_*` or `C_**` estimate for `b1`/`b2`.
    pub constant: Option<f64>,
    /// `-sup g` for the dissipative checks.
    pub margin: Option<f64>,
    pub matrix: Option<HermitianForm>,
    pub plan: Option<SamplePlan>,
    pub note: String,
}

impl ConditionReport {
    fn exact(condition: Condition, witness: Option<Witness>, note: impl Into<String>) -> Self {
        Self {
            condition,
            verdict: if witness.is_some() {
                Verdict::Violated
            } else {
                Verdict::HoldsExactly
            },
            witness,
            constant: None,
            margin: None,
            matrix: None,
            plan: None,
            note: note.into(),
        }
    }

    pub fn holds(&self) -> bool {
        self.verdict.holds()
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[condition {}]", self.condition)?;
        writeln!(f, "verdict = {}", self.verdict.id())?;
        if let Some(m) = self.margin {
            writeln!(f, "margin = {m:.17e}")?;
        }
        if let Some(c) = self.constant {
            writeln!(f, "constant = {c:.17e}")?;
        }
        if let Some(a) = &self.matrix {
            let d: Vec<String> = a.diagonal_entries().iter().map(|x| format!("{x:.6}")).collect();
            writeln!(
                f,
                "matrix_diag = [{}] kappa_min = {:.6e} kappa_max = {:.6e}",
                d.join(", "),
                a.kappa_min(),
                a.kappa_max()
            )?;
        }
        if let Some(p) = &self.plan {
            writeln!(
                f,
                "plan = xi_samples:{} sphere_samples:{} seed:{}",
                p.xi_samples.len(),
                p.sphere_samples,
                p.seed
            )?;
        }
        if let Some(w) = &self.witness {
            writeln!(f, "witness = {w}")?;
        }
        if !self.note.is_empty() {
            writeln!(f, "note = {}", self.note)?;
        }
        Ok(())
    }
}

/// Mass resonance: every monomial with `m_j ≠ m̃_{k1} + m̃_{k2} + m̃_{k3}`
/// must have a zero coefficient.
pub fn check_condition_a(sys: &CubicSystem) -> ConditionReport {
    let sys = sys.canonical();
    let masses = sys.masses();
    let witness = sys.monomials().iter().find_map(|m| {
        let mj = masses.get(m.target);
        let ext: Vec<f64> = m
            .factors
            .iter()
            .map(|f| masses.extended(f.k).expect("validated index"))
            .collect();
        let sum: f64 = ext.iter().sum();
        let scale = ext.iter().fold(mj.abs(), |acc, x| acc.max(x.abs()));
        ((mj - sum).abs() > TOL_MASS * scale).then(|| Witness::Monomial {
            target: m.target,
            factors: m.factors,
            coeff: m.coeff,
            detail: format!("resonance sum {sum} != m_j = {mj}"),
        })
    });
    ConditionReport::exact(Condition::A, witness, "")
}

/// Gauge invariance of a single equation: every monomial has one more
/// unconjugated than conjugated factor.
pub fn check_gauge_invariance(sys: &CubicSystem) -> Result<ConditionReport> {
    if sys.n() != 1 {
        return Err(Error::Precondition(format!(
            "gauge check is defined for N = 1, got N = {}",
            sys.n()
        )));
    }
    let sys = sys.canonical();
    let witness = sys.monomials().iter().find_map(|m| {
        let w = m.gauge_weight(1);
        (w != 1).then(|| Witness::Monomial {
            target: m.target,
            factors: m.factors,
            coeff: m.coeff,
            detail: format!("gauge weight {w} != 1"),
        })
    });
    Ok(ConditionReport::exact(Condition::Gauge, witness, ""))
}

/// Exact null condition: all coefficients of the symbol expansion vanish.
pub fn check_b3_exact(sys: &CubicSystem) -> ConditionReport {
    let sys = sys.canonical();
    let witness = sys
        .symbol_expansion()
        .into_iter()
        .find(|(_, c)| c.norm() > ZERO_COEFF_TOL)
        .map(|((target, xi_degree, factors), coeff)| Witness::SymbolTerm {
            target,
            xi_degree,
            factors,
            coeff,
        });
    ConditionReport::exact(Condition::B3, witness, "")
}

/// `Im ⟨p(ξ;Y), AY⟩` as a polynomial in `ξ` for fixed `Y`.
fn im_form_coefficients(sys: &CubicSystem, a: &HermitianForm, y: &[Complex64]) -> [f64; 4] {
    let coeffs = sys.symbol_coefficients(y).expect("dimension checked");
    let ay = a.apply(y).expect("dimension checked");
    let mut out = [0.0; 4];
    for (d, c) in coeffs.iter().enumerate() {
        // drop coefficients at round-off level of their own terms, which
        // would otherwise dominate as |ξ| grows
        let bound: f64 = c.iter().zip(&ay).map(|(x, y)| x.norm() * y.norm()).sum();
        let v = inner(c, &ay).im;
        out[d] = if v.abs() <= 64.0 * f64::EPSILON * bound {
            0.0
        } else {
            v
        };
    }
    out
}

fn eval_poly(c: &[f64; 4], xi: f64) -> f64 {
    ((c[3] * xi + c[2]) * xi + c[1]) * xi + c[0]
}

/// `g(ξ, Y) = Im⟨p(ξ;Y), AY⟩ / (w(ξ) |Y|⁴)`, evaluated directly through
/// [`CubicSystem::quartic_form`].
pub fn normalized_form(
    sys: &CubicSystem,
    a: &HermitianForm,
    level: DissipLevel,
    xi: f64,
    y: &[Complex64],
) -> Result<f64> {
    let q = sys.quartic_form(a, xi, y)?;
    let r2 = y.iter().map(|z| z.norm_sqr()).sum::<f64>();
    Ok(q.im / (level.weight(xi) * r2 * r2))
}

/// Behaviour of `g(·, Y)` as `|ξ| → ∞`.
#[derive(Debug, Clone, Copy)]
enum Tail {
    /// `g → +∞` in the given direction of `ξ`.
    Unbounded { sign: f64 },
    /// Finite limit (the same for both directions).
    Limit(f64),
    /// `g → -∞` in both directions.
    Decreasing,
}

fn tail_behaviour(c: &[f64; 4], level: DissipLevel) -> Tail {
    let scale = c.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let tol = (1e-12 * scale).max(ZERO_COEFF_TOL);
    let degree = (0..4).rev().find(|&d| c[d].abs() > tol);
    let Some(d) = degree else {
        return Tail::Limit(0.0);
    };
    let lead = c[d];
    match level {
        DissipLevel::B0 | DissipLevel::B1 => match d {
            0 => Tail::Limit(lead),
            1 | 3 => Tail::Unbounded { sign: lead.signum() },
            _ if lead > 0.0 => Tail::Unbounded { sign: 1.0 },
            _ => Tail::Decreasing,
        },
        DissipLevel::B2 => match d {
            3 => Tail::Unbounded { sign: lead.signum() },
            2 => Tail::Limit(lead),
            _ => Tail::Limit(0.0),
        },
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    g: f64,
    xi: f64,
    y: Vec<Complex64>,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.g > b.g
}

/// Finds a large `|ξ|` at which the tail violation shows up in `g` itself.
fn tail_witness(
    sys: &CubicSystem,
    a: &HermitianForm,
    level: DissipLevel,
    y: &[Complex64],
    sign: f64,
) -> Option<Candidate> {
    let mut last = None;
    for e in 0..=16 {
        let xi = sign * 10f64.powi(e);
        let g = normalized_form(sys, a, level, xi, y).ok()?;
        let cand = Candidate { g, xi, y: y.to_vec() };
        if level.fails_at(g) {
            return Some(cand);
        }
        last = Some(cand);
    }
    last
}

fn refine(
    sys: &CubicSystem,
    a: &HermitianForm,
    level: DissipLevel,
    start: &Candidate,
    theta_step: f64,
    seed: u64,
) -> Candidate {
    let g_at = |xi: f64, y: &[Complex64]| -> f64 {
        let c = im_form_coefficients(sys, a, y);
        eval_poly(&c, xi) / level.weight(xi)
    };
    let mut best = start.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = best.y.len();
    let mut step = 0.25;
    for _round in 0..6 {
        // golden-section search in θ around the current ξ
        let theta0 = best.xi.atan();
        let lo = (theta0 - theta_step).max(-FRAC_PI_2 + 1e-12);
        let hi = (theta0 + theta_step).min(FRAC_PI_2 - 1e-12);
        let y = best.y.clone();
        let f = |th: f64| g_at(th.tan(), &y);
        let theta = golden_max(f, lo, hi, 60);
        let g = f(theta);
        if g > best.g {
            best = Candidate {
                g,
                xi: theta.tan(),
                y,
            };
        }
        // random hill climb on the unit sphere
        let mut failures = 0;
        while step > 1e-9 {
            let trial: Vec<Complex64> = best
                .y
                .iter()
                .map(|z| {
                    z + Complex64::new(
                        rng.sample::<f64, _>(StandardNormal),
                        rng.sample::<f64, _>(StandardNormal),
                    ) * step
                })
                .collect();
            let Some(trial) = normalize(trial) else {
                continue;
            };
            let g = g_at(best.xi, &trial);
            if g > best.g {
                best = Candidate {
                    g,
                    xi: best.xi,
                    y: trial,
                };
                failures = 0;
            } else {
                failures += 1;
                if failures > 8 * n {
                    step *= 0.5;
                    failures = 0;
                }
            }
        }
        step = 1e-3;
    }
    best
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        x1
    } else {
        x2
    }
}

/// Sample-based test of `b0`, `b1` or `b2` for a given matrix `A`.
///
/// Evaluates `g(ξ, Y)` on the plan's grid with `|Y| = 1`, checks the sign of
/// the `ξ → ±∞` behaviour for every sampled `Y`, and refines the best
/// candidates by local ascent before deciding.
pub fn check_dissipativity(
    sys: &CubicSystem,
    a: &HermitianForm,
    plan: &SamplePlan,
    level: DissipLevel,
) -> Result<ConditionReport> {
    dissipativity(sys, a, plan, level, REFINED_CANDIDATES)
}

/// Grid candidates passed to local ascent by [`check_dissipativity`].
const REFINED_CANDIDATES: usize = 8;

fn dissipativity(
    sys: &CubicSystem,
    a: &HermitianForm,
    plan: &SamplePlan,
    level: DissipLevel,
    refined_candidates: usize,
) -> Result<ConditionReport> {
    let n = sys.n();
    if a.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: a.dim(),
        });
    }
    if plan.xi_samples.is_empty() {
        return Err(Error::Config("sample plan has no ξ samples".into()));
    }
    let sys = sys.canonical();
    let points = plan.sphere_points(n);

    struct PerY {
        grid_best: Candidate,
        tail: Tail,
    }

    let per_y: Vec<PerY> = points
        .par_iter()
        .map(|y| {
            let c = im_form_coefficients(&sys, a, y);
            let mut best = Candidate {
                g: f64::NEG_INFINITY,
                xi: 0.0,
                y: y.clone(),
            };
            for &xi in &plan.xi_samples {
                let g = eval_poly(&c, xi) / level.weight(xi);
                if g > best.g {
                    best.g = g;
                    best.xi = xi;
                }
            }
            PerY {
                grid_best: best,
                tail: tail_behaviour(&c, level),
            }
        })
        .collect();

    // tails first: an unbounded direction is a violation regardless of samples
    for p in &per_y {
        if let Tail::Unbounded { sign } = p.tail {
            let w = tail_witness(&sys, a, level, &p.grid_best.y, sign).expect("tail witness evaluation");
            return Ok(dissip_report(
                level,
                a,
                plan,
                w,
                f64::INFINITY,
                "unbounded as |xi| -> inf",
            ));
        }
    }

    let mut sup_tail = f64::NEG_INFINITY;
    let mut tail_y: Option<(&[Complex64], f64)> = None;
    for p in &per_y {
        if let Tail::Limit(l) = p.tail {
            if l > sup_tail {
                sup_tail = l;
                tail_y = Some((&p.grid_best.y, l));
            }
        }
    }

    let mut order: Vec<usize> = (0..per_y.len()).collect();
    order.sort_by(|&i, &j| {
        per_y[j]
            .grid_best
            .g
            .partial_cmp(&per_y[i].grid_best.g)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let theta_step = std::f64::consts::PI / plan.xi_samples.len() as f64;
    let top = order.len().min(refined_candidates);
    let refined: Vec<Candidate> = order[..top]
        .par_iter()
        .enumerate()
        .map(|(r, &i)| {
            refine(
                &sys,
                a,
                level,
                &per_y[i].grid_best,
                theta_step,
                plan.seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(r as u64 + 1)),
            )
        })
        .collect();
    let mut best = per_y[order[0]].grid_best.clone();
    for c in &refined {
        if better(c, &best) {
            best = c.clone();
        }
    }

    let mut sup = best.g;
    let mut note = String::new();
    if sup_tail > sup {
        sup = sup_tail;
        note = "supremum attained as |xi| -> inf".into();
        if let Some((y, _)) = tail_y {
            // report a concrete finite point close to the limit
            let sign = 1.0;
            if let Some(w) = tail_witness(&sys, a, level, y, sign) {
                best = w;
            }
        }
    }
    Ok(dissip_report(level, a, plan, best, sup, note))
}

fn dissip_report(
    level: DissipLevel,
    a: &HermitianForm,
    plan: &SamplePlan,
    best: Candidate,
    sup: f64,
    note: impl Into<String>,
) -> ConditionReport {
    let holds = match level {
        DissipLevel::B0 => sup <= TOL_DISSIP,
        _ => sup < -TOL_DISSIP,
    };
    let constant = match level {
        DissipLevel::B0 => None,
        _ if holds => Some(-sup),
        _ => None,
    };
    ConditionReport {
        condition: level.condition(),
        verdict: if holds {
            Verdict::HoldsOnSamples
        } else {
            Verdict::Violated
        },
        witness: (!holds).then_some(Witness::Sample {
            xi: best.xi,
            y: best.y,
            g: best.g,
        }),
        constant,
        margin: Some(-sup),
        matrix: Some(a.clone()),
        plan: Some(plan.clone()),
        note: note.into(),
    }
}

/// Diagonal `A = diag(1, a₂, …)` that cancels the odd powers of `ξ` in
/// `Im⟨p, AY⟩` for every sampled `Y`, when such a positive one exists.
/// Cancellations of this kind are exact, so the grid alone can miss them.
fn odd_balancing_logs(sys: &CubicSystem, plan: &SamplePlan) -> Option<Vec<f64>> {
    let n = sys.n();
    if n < 2 {
        return None;
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for y in plan.sphere_points(n).iter().take(64) {
        let coeffs = sys.symbol_coefficients(y).ok()?;
        for d in [1, 3] {
            rows.push((0..n).map(|j| (coeffs[d][j] * y[j].conj()).im).collect());
        }
    }
    let scale = rows.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale < ZERO_COEFF_TOL {
        return None;
    }
    let m = DMatrix::from_fn(rows.len(), n - 1, |r, c| rows[r][c + 1]);
    let rhs = nalgebra::DVector::from_fn(rows.len(), |r, _| -rows[r][0]);
    let sol = m.clone().svd(true, true).solve(&rhs, 1e-12).ok()?;
    let resid = (&m * &sol - &rhs).amax();
    if resid > 1e-9 * scale || sol.iter().any(|&x| x.is_nan() || x <= 0.0) {
        return None;
    }
    Some(sol.iter().map(|x| x.log10()).collect())
}

/// Searches positive diagonal matrices `diag(1, a₂, …, a_N)` for one that
/// passes the requested dissipative level. Returns `None` when nothing on
/// the search grid passes.
pub fn search_diagonal_a(
    sys: &CubicSystem,
    plan: &SamplePlan,
    level: DissipLevel,
) -> Result<Option<HermitianForm>> {
    let n = sys.n();
    if n > 4 {
        return Err(Error::Precondition(format!(
            "diagonal search supports N <= 4, got N = {n}"
        )));
    }
    let coarse = SamplePlan::new(
        plan.xi_samples.len().min(61),
        plan.sphere_samples.min(200),
        plan.seed,
    )?;
    let margin = |logs: &[f64]| -> Option<f64> {
        let diag: Vec<f64> = std::iter::once(1.0)
            .chain(logs.iter().map(|l| 10f64.powf(*l)))
            .collect();
        let a = HermitianForm::diagonal(&diag).ok()?;
        dissipativity(sys, &a, &coarse, level, 0)
            .ok()
            .and_then(|r| r.margin)
    };
    let to_form = |logs: &[f64]| {
        let diag: Vec<f64> = std::iter::once(1.0)
            .chain(logs.iter().map(|l| 10f64.powf(*l)))
            .collect();
        HermitianForm::diagonal(&diag)
    };

    let free = n - 1;
    let grid: Vec<f64> = (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect();
    let mut candidates: Vec<Vec<f64>> = vec![vec![0.0; free]];
    if let Some(logs) = odd_balancing_logs(sys, &coarse) {
        candidates.push(logs);
    }
    // the identity and the balancing matrix are tried before any grid search
    for logs in &candidates {
        let a = to_form(logs)?;
        if check_dissipativity(sys, &a, plan, level)?.holds() {
            return Ok(Some(a));
        }
    }
    if free > 0 && free <= 2 {
        let mut all = vec![vec![]];
        for _ in 0..free {
            all = all
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    grid.iter().map(move |g| {
                        let mut p = prefix.clone();
                        p.push(*g);
                        p
                    })
                })
                .collect();
        }
        candidates.extend(all);
    }
    let mut scored: Vec<(f64, Vec<f64>)> = candidates
        .into_iter()
        .filter_map(|c| margin(&c).map(|m| (m, c)))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    // coordinate refinement of the best grid point
    if let Some((mut best_m, mut best)) = scored.first().cloned() {
        for _sweep in 0..3 {
            for c in 0..free {
                let f = |v: f64| {
                    let mut x = best.clone();
                    x[c] = v;
                    margin(&x).unwrap_or(f64::NEG_INFINITY)
                };
                let v = golden_max(f, best[c] - 1.0, best[c] + 1.0, 30);
                let mut trial = best.clone();
                trial[c] = v;
                if let Some(m) = margin(&trial) {
                    if m > best_m {
                        best_m = m;
                        best = trial;
                    }
                }
            }
        }
        scored.insert(0, (best_m, best));
    }

    for (_, logs) in scored.iter().take(5) {
        let a = to_form(logs)?;
        if check_dissipativity(sys, &a, plan, level)?.holds() {
            return Ok(Some(a));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quick_plan() -> SamplePlan {
        SamplePlan::new(101, 300, 7).unwrap()
    }

    #[test]
    fn hermitian_form_rejects_bad_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(HermitianForm::new(m).is_err());
        assert!(HermitianForm::diagonal(&[1.0, -1.0]).is_err());
        assert!(HermitianForm::diagonal(&[1.0, 0.0]).is_err());
        let m = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let a = HermitianForm::new(m).unwrap();
        assert!((a.kappa_min() - 1.0).abs() < 1e-12);
        assert!((a.kappa_max() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_text_round_trip() {
        let m = DMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.5, 0.25), c(0.5, -0.25), c(3.0, 0.0)]);
        let a = HermitianForm::new(m).unwrap();
        let b = HermitianForm::from_text(&a.to_text()).unwrap();
        assert_eq!(a, b);
        assert!(HermitianForm::from_text("1 0 0\n0 0 1 0").is_err());
    }

    #[test]
    fn gauge_examples() {
        let r = check_gauge_invariance(&models::nls_single(c(1.0, 0.0))).unwrap();
        assert_eq!(r.verdict, Verdict::HoldsExactly);

        let cube = CubicSystem::from_toml_str("masses=[1]\nmonomials=[[1,1,0,1,0,1,0,1.0,0.0]]").unwrap();
        let r = check_gauge_invariance(&cube).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(r.witness.is_some());

        let dnls = CubicSystem::from_toml_str("masses=[1]\nmonomials=[[1,2,0,1,1,1,1,1.0,0.0]]").unwrap();
        assert!(check_gauge_invariance(&dnls).unwrap().holds());

        let two = models::example3(1.0);
        assert!(check_gauge_invariance(&two).is_err());
    }

    #[test]
    fn condition_a_nls_two() {
        let sys = models::nls_two(1.0, 3.0, c(0.0, -1.0), c(0.0, -1.0), c(1.0, 0.0), c(1.0, 0.0));
        assert_eq!(check_condition_a(&sys).verdict, Verdict::HoldsExactly);

        let sys = models::nls_two(1.0, 2.0, c(0.0, -1.0), c(0.0, -1.0), c(1.0, 0.0), c(1.0, 0.0));
        let r = check_condition_a(&sys);
        assert_eq!(r.verdict, Verdict::Violated);
        // ν₁ū₁²u₂ in equation 1 has sum -1-1+2 = 0 ≠ 1; it sorts before u₁³ in equation 2
        match r.witness.unwrap() {
            Witness::Monomial { target, .. } => assert_eq!(target, 0),
            w => panic!("unexpected witness {w}"),
        }

        // only the u₁³ term is non-resonant once ν₁ = 0
        let sys = models::nls_two(1.0, 2.0, c(0.0, -1.0), c(0.0, -1.0), c(0.0, 0.0), c(1.0, 0.0));
        match check_condition_a(&sys).witness.unwrap() {
            Witness::Monomial { target, factors, .. } => {
                assert_eq!(target, 1);
                assert!(factors.iter().all(|f| f.k == 0 && !f.deriv));
            }
            w => panic!("unexpected witness {w}"),
        }
    }

    #[test]
    fn condition_a_example3() {
        assert_eq!(
            check_condition_a(&models::example3(0.7)).verdict,
            Verdict::HoldsExactly
        );
        assert_eq!(
            check_condition_a(&models::example2(1.3, c(0.0, -1.0), c(0.0, 1.0), c(1.0, 0.0))).verdict,
            Verdict::HoldsExactly
        );
    }

    #[test]
    fn b3_examples() {
        assert_eq!(
            check_b3_exact(&models::example3(0.7)).verdict,
            Verdict::HoldsExactly
        );
        assert_eq!(
            check_b3_exact(&models::nls_single(c(0.0, -1.0))).verdict,
            Verdict::Violated
        );
        assert_eq!(
            check_b3_exact(&models::free(vec![1.0, 2.0])).verdict,
            Verdict::HoldsExactly
        );
    }

    #[test]
    fn single_nls_dissipative_levels() {
        let a = HermitianForm::identity(1);
        let sys = models::nls_single(c(0.0, -1.0));
        let r = check_dissipativity(&sys, &a, &quick_plan(), DissipLevel::B1).unwrap();
        assert!(r.holds());
        assert!((r.constant.unwrap() - 1.0).abs() < 1e-12);
        // g → 0 as |ξ| → ∞ under the ⟨ξ⟩² weight
        let r = check_dissipativity(&sys, &a, &quick_plan(), DissipLevel::B2).unwrap();
        assert!(!r.holds());
        let Some(Witness::Sample { xi, y, .. }) = r.witness else {
            panic!()
        };
        let g = normalized_form(&sys, &a, DissipLevel::B2, xi, &y).unwrap();
        assert!(DissipLevel::B2.fails_at(g));

        let r = check_dissipativity(&models::dnls_single(), &a, &quick_plan(), DissipLevel::B2).unwrap();
        assert!(r.holds());
        assert!((r.constant.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn odd_tail_is_caught() {
        // Im⟨p, Y⟩ = ξ|Y|⁴ for p = iξ|Y|²Y ... here via λ|u|²∂ₓu with λ = 1
        let sys = CubicSystem::from_toml_str("masses=[1]\nmonomials=[[1,1,0,2,0,1,1,1.0,0.0]]").unwrap();
        let r =
            check_dissipativity(&sys, &HermitianForm::identity(1), &quick_plan(), DissipLevel::B0).unwrap();
        assert!(!r.holds());
        let Some(Witness::Sample { xi, y, .. }) = r.witness else {
            panic!()
        };
        let g = normalized_form(&sys, &HermitianForm::identity(1), DissipLevel::B0, xi, &y).unwrap();
        assert!(g > TOL_DISSIP);
    }

    #[test]
    fn search_examples() {
        let plan = quick_plan();
        let ex2 = models::example2(1.0, c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0));
        let a = search_diagonal_a(&ex2, &plan, DissipLevel::B1).unwrap().unwrap();
        assert!(check_dissipativity(&ex2, &a, &plan, DissipLevel::B1)
            .unwrap()
            .holds());

        let bad = models::nls_single(c(0.0, 1.0));
        assert!(search_diagonal_a(&bad, &plan, DissipLevel::B0).unwrap().is_none());

        let ex3 = models::example3(1.0);
        assert!(search_diagonal_a(&ex3, &plan, DissipLevel::B0).unwrap().is_some());
    }
}
