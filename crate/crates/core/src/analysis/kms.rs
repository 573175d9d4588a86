//! Numerical check of the ODE comparison lemma: if
//! `Ψ' ≤ -C0|Ψ|^p/t + C1/t^q` on `t ≥ 2`, then `Ψ(t) ≤ C2/(log t)^{p*-1}`
//! with `1/p + 1/p* = 1` and
//!
//! ```text
//! C2 = (p*/(C0 p))^{p*-1} + (log 2)^{p*-1} Ψ(2) + (C1/log 2) ∫₂^∞ (log τ)^{p*}/τ^q dτ.
//! ```
//!
//! The worst case is the equality ODE, integrated here with RK4 in `log t`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmsInput {
    pub c0: f64,
    pub c1: f64,
    pub p: f64,
    pub q: f64,
    /// `Ψ(2)`
    pub psi2: f64,
}

impl KmsInput {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c0 > 0.0
            && self.c1 >= 0.0
            && self.p > 1.0
            && self.q > 1.0
            && self.psi2 >= 0.0
            && [self.c0, self.c1, self.p, self.q, self.psi2]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "need C0 > 0, C1 >= 0, p > 1, q > 1, Psi(2) >= 0; got {self:?}"
            )))
        }
    }

    pub fn p_star(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `∫₂^∞ (log τ)^{p*} τ^{-q} dτ = ∫_{log 2}^∞ s^{p*} e^{(1-q)s} ds`.
    pub fn tail_integral(&self) -> f64 {
        let ps = self.p_star();
        let s0 = std::f64::consts::LN_2;
        let decay = self.q - 1.0;
        // s = s0 + ℓu/(1-u) maps [0, 1) onto [s0, ∞); ℓ is the width of the
        // bulk of the integrand
        let ell = (ps + 1.0) / decay;
        let f = |u: f64| {
            if u >= 1.0 {
                return 0.0;
            }
            let w = 1.0 - u;
            let s = s0 + ell * u / w;
            s.powf(ps) * (-decay * s).exp() * ell / (w * w)
        };
        // scale for the relative tolerance
        let rough = adaptive_simpson(&f, 0.0, 1.0, 1e-6, 12)
            .abs()
            .max(f64::MIN_POSITIVE);
        adaptive_simpson(&f, 0.0, 1.0, 1e-13 * rough, 40)
    }

    pub fn c2(&self) -> f64 {
        let ps = self.p_star();
        let ln2 = std::f64::consts::LN_2;
        (ps / (self.c0 * self.p)).powf(ps - 1.0)
            + ln2.powf(ps - 1.0) * self.psi2
            + self.c1 / ln2 * self.tail_integral()
    }

    pub fn bound(&self, t: f64) -> f64 {
        self.c2() / t.ln().powf(self.p_star() - 1.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KmsSample {
    pub t: f64,
    pub psi: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KmsReport {
    pub input: KmsInput,
    pub p_star: f64,
    pub c2: f64,
    pub samples: Vec<KmsSample>,
    /// `min_t (C2/(log t)^{p*-1} - Ψ(t))`
    pub min_margin: f64,
}

impl KmsReport {
    pub fn holds(&self) -> bool {
        self.min_margin >= 0.0
    }
}

/// Substeps per unit of `log t`.
const STEPS_PER_UNIT: f64 = 2000.0;

/// Integrates `Ψ' = -C0|Ψ|^p/t + C1/t^q` from `Ψ(2)` and compares against the
/// bound at `samples` log-spaced times in `[2, t_max]`.
pub fn kms_verify(input: &KmsInput, t_max: f64, samples: usize) -> Result<KmsReport> {
    input.validate()?;
    if !(t_max > 2.0 && t_max.is_finite()) || samples < 2 {
        return Err(Error::Precondition(format!(
            "need t_max > 2 and at least two samples, got t_max = {t_max}, samples = {samples}"
        )));
    }
    let c2 = input.c2();
    let ps = input.p_star();
    let f = |s: f64, psi: f64| -input.c0 * psi.abs().powf(input.p) + input.c1 * ((1.0 - input.q) * s).exp();
    let s_lo = 2f64.ln();
    let s_hi = t_max.ln();
    let mut out = Vec::with_capacity(samples);
    let mut s = s_lo;
    let mut psi = input.psi2;
    for i in 0..samples {
        let target = s_lo + (s_hi - s_lo) * i as f64 / (samples - 1) as f64;
        let span = target - s;
        if span > 0.0 {
            let n = (span * STEPS_PER_UNIT).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = f(s, psi);
                let k2 = f(s + 0.5 * h, psi + 0.5 * h * k1);
                let k3 = f(s + 0.5 * h, psi + 0.5 * h * k2);
                let k4 = f(s + h, psi + h * k3);
                psi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                s += h;
            }
            s = target;
        }
        let t = target.exp();
        out.push(KmsSample {
            t,
            psi,
            bound: c2 / target.powf(ps - 1.0),
        });
    }
    let min_margin = out.iter().map(|k| k.bound - k.psi).fold(f64::INFINITY, f64::min);
    Ok(KmsReport {
        input: *input,
        p_star: ps,
        c2,
        samples: out,
        min_margin,
    })
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: usize) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
