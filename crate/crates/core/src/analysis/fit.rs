//! Decay-law fits on `(t, value)` series.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Minimum number of samples in a fit window.
pub const MIN_FIT_SAMPLES: usize = 10;
/// Smallest admissible window start.
pub const MIN_FIT_TIME: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `w = √(1+t)`
    PurePower,
    /// `w = √((1+t)(1+ε²log(2+t)))`
    PowerLog,
    /// `w = √(1+ε²log(2+t))`
    LogOnly,
}

impl DecayModel {
    pub const ALL: [DecayModel; 3] = [DecayModel::PurePower, DecayModel::PowerLog, DecayModel::LogOnly];

    pub fn id(self) -> &'static str {
        match self {
            DecayModel::PurePower => "pure-power",
            DecayModel::PowerLog => "power-log",
            DecayModel::LogOnly => "log-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.id() == s)
    }

    /// Compensating weight at time `t`.
    pub fn weight(self, t: f64, eps: f64) -> f64 {
        let log_part = 1.0 + eps * eps * (2.0 + t).ln();
        match self {
            DecayModel::PurePower => (1.0 + t).sqrt(),
            DecayModel::PowerLog => ((1.0 + t) * log_part).sqrt(),
            DecayModel::LogOnly => log_part.sqrt(),
        }
    }
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Slope of `log(value·w)` against `log t`; zero for a perfect match.
    pub slope: f64,
    /// Geometric mean of the compensated series.
    pub constant: f64,
    /// `max/min` of the compensated series over the window.
    pub constancy_ratio: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PowerFit {
    /// `value ≈ constant · t^exponent`
    pub exponent: f64,
    pub constant: f64,
    pub samples: usize,
}

fn select(series: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (t0, t1) = window;
    if !(t0 >= MIN_FIT_TIME && t1 > t0) {
        return Err(Error::Precondition(format!(
            "fit window [{t0}, {t1}] must satisfy {MIN_FIT_TIME} <= t0 < t1"
        )));
    }
    let tol = 1e-9 * t1;
    let picked: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t >= t0 - tol && t <= t1 + tol)
        .collect();
    if picked.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: picked.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    if let Some(&(t, v)) = picked.iter().find(|&&(_, v)| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Precondition(format!(
            "value {v} at t = {t} is not positive"
        )));
    }
    Ok(picked)
}

/// Least squares `y = a + b x`.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (my - b * mx, b)
}

/// Default window `[max(50, 10 t₀), t_end]`.
pub fn default_window(t_first: f64, t_end: f64) -> (f64, f64) {
    ((10.0 * t_first).max(50.0), t_end)
}

pub fn fit_decay(series: &[(f64, f64)], model: DecayModel, eps: f64, window: (f64, f64)) -> Result<DecayFit> {
    let picked = select(series, window)?;
    let compensated: Vec<(f64, f64)> = picked
        .iter()
        .map(|&(t, v)| (t, v * model.weight(t, eps)))
        .collect();
    let logs: Vec<(f64, f64)> = compensated.iter().map(|&(t, c)| (t.ln(), c.ln())).collect();
    let (_, slope) = linear_fit(&logs);
    let mean_log = logs.iter().map(|p| p.1).sum::<f64>() / logs.len() as f64;
    let max = compensated.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let min = compensated.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    Ok(DecayFit {
        model,
        slope,
        constant: mean_log.exp(),
        constancy_ratio: max / min,
        window,
        samples: picked.len(),
    })
}

/// Fits `value ≈ C t^b` on the window by least squares in log-log.
pub fn fit_power_law(series: &[(f64, f64)], window: (f64, f64), min_samples: usize) -> Result<PowerFit> {
    let (t0, t1) = window;
    if !(t0 > 0.0 && t1 > t0) {
        return Err(Error::Precondition(format!("bad window [{t0}, {t1}]")));
    }
    let tol = 1e-9 * t1;
    let logs: Vec<(f64, f64)> = series
        .iter()
        .filter(|&&(t, _)| t >= t0 - tol && t <= t1 + tol)
        .map(|&(t, v)| {
            if v > 0.0 && v.is_finite() {
                Ok((t.ln(), v.ln()))
            } else {
                Err(Error::Precondition(format!(
                    "value {v} at t = {t} is not positive"
                )))
            }
        })
        .collect::<Result<_>>()?;
    if logs.len() < min_samples.max(2) {
        return Err(Error::InsufficientSamples {
            got: logs.len(),
            need: min_samples.max(2),
        });
    }
    let (a, b) = linear_fit(&logs);
    Ok(PowerFit {
        exponent: b,
        constant: a.exp(),
        samples: logs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_times(t0: f64, t1: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| t0 * (t1 / t0).powf(i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn pure_power_exact() {
        let s: Vec<_> = log_times(2.0, 1e3, 40)
            .into_iter()
            .map(|t| (t, 3.0 / (1.0 + t).sqrt()))
            .collect();
        let f = fit_decay(&s, DecayModel::PurePower, 0.1, (2.0, 1e3)).unwrap();
        assert!((f.constancy_ratio - 1.0).abs() < 1e-12);
        assert!(f.slope.abs() < 1e-12);
        assert!((f.constant - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_recovers_exponent() {
        let s: Vec<_> = log_times(1.0, 100.0, 20)
            .into_iter()
            .map(|t| (t, 2.0 * t.powf(-1.25)))
            .collect();
        let f = fit_power_law(&s, (1.0, 100.0), 4).unwrap();
        assert!((f.exponent + 1.25).abs() < 1e-12);
        assert!((f.constant - 2.0).abs() < 1e-12);
    }

    #[test]
    fn window_errors() {
        let s: Vec<_> = log_times(2.0, 10.0, 5)
            .into_iter()
            .map(|t| (t, 1.0 / t))
            .collect();
        assert!(matches!(
            fit_decay(&s, DecayModel::PurePower, 0.1, (2.0, 10.0)),
            Err(Error::InsufficientSamples { got: 5, .. })
        ));
        assert!(fit_decay(&s, DecayModel::PurePower, 0.1, (1.0, 10.0)).is_err());
        let bad = vec![(3.0, 0.0); 12];
        assert!(fit_decay(&bad, DecayModel::LogOnly, 0.1, (2.0, 10.0)).is_err());
    }

    #[test]
    fn model_ids_round_trip() {
        for m in DecayModel::ALL {
            assert_eq!(DecayModel::parse(m.id()), Some(m));
        }
    }
}
