//! Cauchy check of the profile against its latest snapshot.

use serde::Serialize;

use super::fit::fit_power_law;
use super::profile::ProfileState;
use crate::error::{Error, Result};
use crate::nonlinearity::CubicSystem;
use crate::structure::check_b3_exact;

/// Minimum number of profiles, including the proxy.
pub const MIN_SNAPSHOTS: usize = 4;
/// Relative tolerance on consecutive time ratios being 2.
pub const DYADIC_TOL: f64 = 0.01;
/// The theoretical Cauchy rate is `t^{-1/4+δ}`.
pub const REFERENCE_EXPONENT: f64 = -0.25;

#[derive(Debug, Clone, Serialize)]
pub struct CauchyRow {
    pub t: f64,
    pub linf: f64,
    pub l2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringReport {
    /// Time of the profile used as `α⁺`.
    pub proxy_time: f64,
    pub rows: Vec<CauchyRow>,
    /// Fitted exponent of the `L∞` differences in `t`.
    pub exponent: f64,
    pub l2_exponent: f64,
    pub strictly_decreasing: bool,
    pub delta: f64,
    pub passed: bool,
}

/// `profiles` must be in increasing dyadic time order; the last one is the
/// `α⁺` proxy and the differences of the others against it are fitted.
pub fn scattering_check(
    sys: &CubicSystem,
    profiles: &[ProfileState],
    delta: f64,
) -> Result<ScatteringReport> {
    let b3 = check_b3_exact(sys);
    if !b3.holds() {
        return Err(Error::Precondition(format!(
            "scattering check needs (b3); {}",
            b3.witness.map(|w| w.to_string()).unwrap_or_default()
        )));
    }
    if profiles.len() < MIN_SNAPSHOTS {
        return Err(Error::InsufficientSamples {
            got: profiles.len(),
            need: MIN_SNAPSHOTS,
        });
    }
    for w in profiles.windows(2) {
        let ratio = w[1].t / w[0].t;
        if (ratio - 2.0).abs() > 2.0 * DYADIC_TOL {
            return Err(Error::Precondition(format!(
                "snapshot times {} and {} are not dyadic",
                w[0].t, w[1].t
            )));
        }
        if w[0].xi != w[1].xi || w[0].components() != w[1].components() {
            return Err(Error::Precondition("profiles use different grids".into()));
        }
    }
    let proxy = profiles.last().expect("length checked");
    let rows: Vec<CauchyRow> = profiles[..profiles.len() - 1]
        .iter()
        .map(|p| CauchyRow {
            t: p.t,
            linf: p.sup_distance(proxy),
            l2: p.l2_distance(proxy),
        })
        .collect();
    let strictly_decreasing = rows.windows(2).all(|w| w[1].linf < w[0].linf);
    let span = (rows[0].t, rows[rows.len() - 1].t);
    let series = |f: fn(&CauchyRow) -> f64| -> Vec<(f64, f64)> { rows.iter().map(|r| (r.t, f(r))).collect() };
    let (exponent, l2_exponent) = if rows.iter().all(|r| r.linf > 0.0 && r.l2 > 0.0) {
        (
            fit_power_law(&series(|r| r.linf), span, 2)?.exponent,
            fit_power_law(&series(|r| r.l2), span, 2)?.exponent,
        )
    } else {
        (f64::NEG_INFINITY, f64::NEG_INFINITY)
    };
    Ok(ScatteringReport {
        proxy_time: proxy.t,
        rows,
        exponent,
        l2_exponent,
        strictly_decreasing,
        delta,
        passed: exponent <= REFERENCE_EXPONENT + delta,
    })
}
