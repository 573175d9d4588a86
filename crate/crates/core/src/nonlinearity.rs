//! Coefficient representation of cubic nonlinearities `F_j(u, ∂ₓu)`.
//!
//! A system of `N` equations is stored as a mass vector and a flat list of
//! monomials. Factor indices run over `0..2N`: indices `0..N` are the fields
//! themselves, `N..2N` their complex conjugates. Each factor also carries a
//! derivative flag selecting `u` or `∂ₓu`.
//!
//! Model files use 1-based indices to match the usual mathematical notation;
//! everything in memory is 0-based.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Coefficients with modulus at or below this value are treated as zero
/// after canonicalization.
pub const ZERO_COEFF_TOL: f64 = 1e-14;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::Model("mass vector is empty".into()));
        }
        if let Some(bad) = masses.iter().find(|m| !m.is_finite() || **m == 0.0) {
            return Err(Error::Model(format!("mass {bad} must be finite and nonzero")));
        }
        Ok(Self(masses))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    /// Sign-extended mass of factor index `k` (0-based over `0..2N`):
    /// `m_k` for a field, `-m_{k-N}` for a conjugated field.
    pub fn extended(&self, k: usize) -> Result<f64> {
        let n = self.0.len();
        match k {
            k if k < n => Ok(self.0[k]),
            k if k < 2 * n => Ok(-self.0[k - n]),
            _ => Err(Error::IndexOutOfRange {
                index: k,
                bound: 2 * n,
            }),
        }
    }

    pub fn min_abs(&self) -> f64 {
        self.0.iter().fold(f64::INFINITY, |acc, m| acc.min(m.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc: f64, m| acc.max(m.abs()))
    }
}

/// One factor `∂ₓ^l ǔ_k` of a cubic monomial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub k: usize,
    pub deriv: bool,
}

impl Factor {
    pub fn value(k: usize) -> Self {
        Self { k, deriv: false }
    }

    pub fn derivative(k: usize) -> Self {
        Self { k, deriv: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub target: usize,
    pub factors: [Factor; 3],
    pub coeff: Complex64,
}

impl Monomial {
    pub fn new(target: usize, factors: [Factor; 3], coeff: Complex64) -> Self {
        Self {
            target,
            factors,
            coeff,
        }
    }

    /// Number of unconjugated minus number of conjugated factors.
    pub fn gauge_weight(&self, n: usize) -> i32 {
        self.factors.iter().map(|f| if f.k < n { 1 } else { -1 }).sum()
    }

    pub fn derivative_count(&self) -> usize {
        self.factors.iter().filter(|f| f.deriv).count()
    }

    fn sorted_factors(&self) -> [Factor; 3] {
        let mut f = self.factors;
        f.sort();
        f
    }
}

/// Masses plus the monomial list defining `F` and its symbol `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSystem {
    pub name: String,
    masses: MassVector,
    monomials: Vec<Monomial>,
}

impl CubicSystem {
    pub fn new(masses: MassVector, monomials: Vec<Monomial>) -> Result<Self> {
        let n = masses.len();
        for m in &monomials {
            if m.target >= n {
                return Err(Error::IndexOutOfRange {
                    index: m.target,
                    bound: n,
                });
            }
            for f in &m.factors {
                if f.k >= 2 * n {
                    return Err(Error::IndexOutOfRange {
                        index: f.k,
                        bound: 2 * n,
                    });
                }
            }
            if !(m.coeff.re.is_finite() && m.coeff.im.is_finite()) {
                return Err(Error::Model("non-finite coefficient".into()));
            }
        }
        Ok(Self {
            name: String::new(),
            masses,
            monomials,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &MassVector {
        &self.masses
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_linear(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Sorts the factors of every monomial, merges monomials that collide
    /// after sorting and drops coefficients below [`ZERO_COEFF_TOL`].
    pub fn canonical(&self) -> Self {
        let mut merged: BTreeMap<(usize, [Factor; 3]), Complex64> = BTreeMap::new();
        for m in &self.monomials {
            *merged
                .entry((m.target, m.sorted_factors()))
                .or_insert(Complex64::new(0.0, 0.0)) += m.coeff;
        }
        let monomials = merged
            .into_iter()
            .filter(|(_, c)| c.norm() > ZERO_COEFF_TOL)
            .map(|((target, factors), coeff)| Monomial::new(target, factors, coeff))
            .collect();
        Self {
            name: self.name.clone(),
            masses: self.masses.clone(),
            monomials,
        }
    }

    pub fn is_canonical(&self) -> bool {
        let c = self.canonical();
        c.monomials == self.monomials
    }

    #[inline]
    fn factor_value(&self, f: Factor, u: &[Complex64], ux: &[Complex64]) -> Complex64 {
        let n = self.n();
        let src = if f.deriv { ux } else { u };
        if f.k < n {
            src[f.k]
        } else {
            src[f.k - n].conj()
        }
    }

    /// Pointwise evaluation of `F(u, ∂ₓu)`.
    pub fn evaluate_f(&self, u: &[Complex64], ux: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        check_len(n, u.len())?;
        check_len(n, ux.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for m in &self.monomials {
            let prod = m
                .factors
                .iter()
                .fold(m.coeff, |acc, f| acc * self.factor_value(*f, u, ux));
            out[m.target] += prod;
        }
        Ok(out)
    }

    /// `(i m̃_k ξ)^l` for one factor.
    #[inline]
    fn symbol_multiplier(&self, f: Factor, xi: f64) -> Complex64 {
        if f.deriv {
            // k was validated at construction
            I * self.masses.extended(f.k).unwrap_or(f64::NAN) * xi
        } else {
            Complex64::new(1.0, 0.0)
        }
    }

    #[inline]
    fn y_check(&self, k: usize, y: &[Complex64]) -> Complex64 {
        let n = self.n();
        if k < n {
            y[k]
        } else {
            y[k - n].conj()
        }
    }

    /// The symbol `p_j(ξ; Y)`: every derivative flag becomes a factor
    /// `i m̃_k ξ`, conjugated indices read conjugated entries of `Y`.
    pub fn symbol_p(&self, xi: f64, y: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        check_len(n, y.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for m in &self.monomials {
            let prod = m.factors.iter().fold(m.coeff, |acc, f| {
                acc * self.symbol_multiplier(*f, xi) * self.y_check(f.k, y)
            });
            out[m.target] += prod;
        }
        Ok(out)
    }

    /// Coefficients of `p_j(ξ; Y)` as a polynomial in `ξ`:
    /// `p_j = Σ_d ξ^d · coeffs[d][j]`, `d ≤ 3`.
    pub fn symbol_coefficients(&self, y: &[Complex64]) -> Result<[Vec<Complex64>; 4]> {
        let n = self.n();
        check_len(n, y.len())?;
        let zero = vec![Complex64::new(0.0, 0.0); n];
        let mut out = [zero.clone(), zero.clone(), zero.clone(), zero];
        for m in &self.monomials {
            let mut prod = m.coeff;
            for f in &m.factors {
                if f.deriv {
                    prod *= I * self.masses.extended(f.k)?;
                }
                prod *= self.y_check(f.k, y);
            }
            out[m.derivative_count()][m.target] += prod;
        }
        Ok(out)
    }

    /// Expansion of the symbol in `ξ` and in canonical `Y`-monomials,
    /// keyed by `(target, ξ-degree, sorted factor indices)`.
    pub fn symbol_expansion(&self) -> BTreeMap<(usize, usize, [usize; 3]), Complex64> {
        let mut terms = BTreeMap::new();
        for m in &self.monomials {
            let mut c = m.coeff;
            for f in &m.factors {
                if f.deriv {
                    c *= I * self.masses.extended(f.k).unwrap_or(f64::NAN);
                }
            }
            let mut ks = [m.factors[0].k, m.factors[1].k, m.factors[2].k];
            ks.sort_unstable();
            *terms
                .entry((m.target, m.derivative_count(), ks))
                .or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        terms
    }

    /// `⟨p(ξ;Y), AY⟩ = Σ_j p_j(ξ;Y) · conj((AY)_j)`.
    pub fn quartic_form(
        &self,
        a: &crate::structure::HermitianForm,
        xi: f64,
        y: &[Complex64],
    ) -> Result<Complex64> {
        check_len(self.n(), a.dim())?;
        let p = self.symbol_p(xi, y)?;
        let ay = a.apply(y)?;
        Ok(inner(&p, &ay))
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let masses: Vec<f64> = doc
            .get("masses")
            .and_then(|v| v.as_array())
            .ok_or_else(|| Error::Parse("missing `masses` array".into()))?
            .iter()
            .map(as_f64)
            .collect::<Result<_>>()?;
        let n = masses.len();
        if let Some(declared) = doc.get("n") {
            let declared = declared
                .as_integer()
                .ok_or_else(|| Error::Parse("`n` must be an integer".into()))?;
            if declared as usize != n || declared < 1 {
                return Err(Error::Parse(format!(
                    "`n` = {declared} but {n} masses were given"
                )));
            }
        }
        let rows = match doc.get("monomials") {
            None => Vec::new(),
            Some(v) => v
                .as_array()
                .ok_or_else(|| Error::Parse("`monomials` must be an array of rows".into()))?
                .clone(),
        };
        let mut monomials = Vec::with_capacity(rows.len());
        for (r, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| Error::Parse(format!("monomial row {r} is not an array")))?;
            if row.len() != 9 {
                return Err(Error::Parse(format!(
                    "monomial row {r} has {} entries (expected 9: j k1 l1 k2 l2 k3 l3 re im)",
                    row.len()
                )));
            }
            let idx = |i: usize, lo: i64, hi: i64, what: &str| -> Result<usize> {
                let v = row[i]
                    .as_integer()
                    .ok_or_else(|| Error::Parse(format!("row {r}: {what} must be an integer")))?;
                if v < lo || v > hi {
                    return Err(Error::Parse(format!(
                        "row {r}: {what} = {v} outside [{lo}, {hi}]"
                    )));
                }
                Ok(v as usize)
            };
            let target = idx(0, 1, n as i64, "j")? - 1;
            let mut factors = [Factor::value(0); 3];
            for (slot, f) in factors.iter_mut().enumerate() {
                let k = idx(1 + 2 * slot, 1, 2 * n as i64, "k")? - 1;
                let l = idx(2 + 2 * slot, 0, 1, "l")?;
                *f = Factor { k, deriv: l == 1 };
            }
            let coeff = Complex64::new(as_f64(&row[7])?, as_f64(&row[8])?);
            monomials.push(Monomial::new(target, factors, coeff));
        }
        let name = doc
            .get("name")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        Ok(Self::new(MassVector::new(masses)?, monomials)?.with_name(name))
    }

    pub fn to_toml_string(&self) -> String {
        let mut s = String::new();
        if !self.name.is_empty() {
            let _ = writeln!(s, "name = {:?}", self.name);
        }
        let _ = writeln!(s, "n = {}", self.n());
        let masses: Vec<String> = self.masses.as_slice().iter().map(|m| format_float(*m)).collect();
        let _ = writeln!(s, "masses = [{}]", masses.join(", "));
        let _ = writeln!(s, "# j, k1, l1, k2, l2, k3, l3, re, im");
        let _ = writeln!(s, "monomials = [");
        for m in &self.monomials {
            let f = &m.factors;
            let _ = writeln!(
                s,
                "  [{}, {}, {}, {}, {}, {}, {}, {}, {}],",
                m.target + 1,
                f[0].k + 1,
                f[0].deriv as u8,
                f[1].k + 1,
                f[1].deriv as u8,
                f[2].k + 1,
                f[2].deriv as u8,
                format_float(m.coeff.re),
                format_float(m.coeff.im),
            );
        }
        s.push_str("]\n");
        s
    }
}

fn format_float(x: f64) -> String {
    // keep a decimal point or exponent so TOML reads a float back
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E', 'i', 'N']) {
        s
    } else {
        format!("{s}.0")
    }
}

fn as_f64(v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::Parse(format!("expected a number, got {other}"))),
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

/// `⟨z, w⟩ = Σ z_j conj(w_j)`.
pub fn inner(z: &[Complex64], w: &[Complex64]) -> Complex64 {
    z.iter().zip(w).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm2(z: &[Complex64]) -> f64 {
    z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn extended_mass_branches() {
        let m = MassVector::new(vec![1.0, 3.0]).unwrap();
        assert_eq!(m.extended(0).unwrap(), 1.0);
        assert_eq!(m.extended(3).unwrap(), -3.0);
        let m = MassVector::new(vec![-2.0, 5.0]).unwrap();
        assert_eq!(m.extended(2).unwrap(), 2.0);
        assert!(matches!(
            m.extended(4),
            Err(Error::IndexOutOfRange { index: 4, bound: 4 })
        ));
    }

    #[test]
    fn masses_must_be_nonzero_and_finite() {
        assert!(MassVector::new(vec![1.0, 0.0]).is_err());
        assert!(MassVector::new(vec![f64::NAN]).is_err());
        assert!(MassVector::new(vec![]).is_err());
    }

    #[test]
    fn single_nls_unit_input() {
        let lambda = c(0.3, -1.2);
        let sys = models::nls_single(lambda);
        let f = sys.evaluate_f(&[c(1.0, 0.0)], &[c(0.0, 0.0)]).unwrap();
        assert!((f[0] - lambda).norm() < 1e-15);
    }

    #[test]
    fn example2_first_equation_by_hand() {
        // λ₁|u₁|²u₁ + λ₂ū₁(∂ₓu₁)² at u = (1, 0), ∂ₓu = (i, 0): λ₁ + λ₂·i² = λ₁ − λ₂
        let (l1, l2, l3) = (c(0.5, -1.0), c(-0.25, 2.0), c(1.5, 0.0));
        let sys = models::example2(1.0, l1, l2, l3);
        let f = sys
            .evaluate_f(&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 1.0), c(0.0, 0.0)])
            .unwrap();
        assert!((f[0] - (l1 - l2)).norm() < 1e-14);
    }

    #[test]
    fn example3_symbol_vanishes() {
        let sys = models::example3(1.7);
        let p = sys
            .symbol_p(0.37, &[c(1.0, 2.0), c(-0.5, 0.3), c(0.2, -1.0)])
            .unwrap();
        assert!(p.iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let sys = models::nls_single(c(1.0, 0.0));
        assert!(matches!(
            sys.symbol_p(0.0, &[c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::Dimension { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn canonical_merges_permuted_factors() {
        let masses = MassVector::new(vec![1.0]).unwrap();
        let sys = CubicSystem::new(
            masses,
            vec![
                Monomial::new(
                    0,
                    [Factor::value(1), Factor::value(0), Factor::value(0)],
                    c(1.0, 0.0),
                ),
                Monomial::new(
                    0,
                    [Factor::value(0), Factor::value(1), Factor::value(0)],
                    c(2.0, 0.0),
                ),
                Monomial::new(
                    0,
                    [Factor::value(0), Factor::value(0), Factor::value(0)],
                    c(1.0, 0.0),
                ),
                Monomial::new(
                    0,
                    [Factor::value(0), Factor::value(0), Factor::value(0)],
                    c(-1.0, 0.0),
                ),
            ],
        )
        .unwrap();
        let canon = sys.canonical();
        assert_eq!(canon.monomials().len(), 1);
        assert_eq!(canon.monomials()[0].coeff, c(3.0, 0.0));
        assert!(canon.is_canonical());
    }

    #[test]
    fn model_file_round_trip() {
        let sys = models::example2(0.7, c(0.0, -1.0), c(0.25, 0.5), c(1.0, 0.0));
        let text = sys.to_toml_string();
        let back = CubicSystem::from_toml_str(&text).unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn model_file_errors() {
        assert!(
            CubicSystem::from_toml_str("masses = [1.0]\nmonomials = [[1, 1, 0, 1, 0, 2, 0, 1.0]]").is_err()
        );
        assert!(
            CubicSystem::from_toml_str("masses = [1.0]\nmonomials = [[1, 3, 0, 1, 0, 2, 0, 1.0, 0.0]]")
                .is_err()
        );
        assert!(
            CubicSystem::from_toml_str("masses = [1.0]\nmonomials = [[1, 1, 2, 1, 0, 2, 0, 1.0, 0.0]]")
                .is_err()
        );
        assert!(CubicSystem::from_toml_str("n = 2\nmasses = [1.0]").is_err());
        assert!(CubicSystem::from_toml_str("masses = [0.0]").is_err());
        assert!(CubicSystem::from_toml_str("this is not toml").is_err());
        let empty = CubicSystem::from_toml_str("n = 1\nmasses = [2]").unwrap();
        assert!(empty.is_linear());
    }
}
