use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use super::state::FieldState;
use crate::error::{Error, Result};

/// Built-in initial data families. Every family is multiplied by the
/// amplitude `eps` and by a per-component complex weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `w_j e^{-(x-c)²/σ²}`
    Gaussian {
        sigma: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        weights: Vec<[f64; 2]>,
    },
    /// `w_j e^{-(x-c)²/σ²} e^{ik₀x}`
    ModulatedGaussian {
        sigma: f64,
        #[serde(default)]
        center: f64,
        wavenumber: f64,
        #[serde(default)]
        weights: Vec<[f64; 2]>,
    },
    /// Values taken from a snapshot file (its time is ignored).
    File { path: String },
}

impl InitialData {
    pub fn gaussian(sigma: f64) -> Self {
        InitialData::Gaussian {
            sigma,
            center: 0.0,
            weights: Vec::new(),
        }
    }

    fn weights(raw: &[[f64; 2]], n: usize) -> Result<Vec<Complex64>> {
        if raw.is_empty() {
            return Ok(vec![Complex64::new(1.0, 0.0); n]);
        }
        if raw.len() != n {
            return Err(Error::Config(format!(
                "initial data has {} weights for {n} components",
                raw.len()
            )));
        }
        Ok(raw.iter().map(|w| Complex64::new(w[0], w[1])).collect())
    }

    /// Builds the state at `t = 0`. `File` data is resolved by the caller
    /// through [`InitialData::from_values`].
    pub fn build(&self, grid: &Grid1D, components: usize, eps: f64) -> Result<FieldState> {
        let (sigma, center, k0, raw) = match self {
            InitialData::Gaussian {
                sigma,
                center,
                weights,
            } => (*sigma, *center, 0.0, weights),
            InitialData::ModulatedGaussian {
                sigma,
                center,
                wavenumber,
                weights,
            } => (*sigma, *center, *wavenumber, weights),
            InitialData::File { path } => {
                return Err(Error::Config(format!(
                    "file initial data `{path}` must be loaded before building"
                )))
            }
        };
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        let w = Self::weights(raw, components)?;
        let profile: Vec<Complex64> = grid
            .nodes()
            .iter()
            .map(|&x| {
                let y = (x - center) / sigma;
                Complex64::from_polar((-y * y).exp(), k0 * x) * eps
            })
            .collect();
        FieldState::new(
            0.0,
            w.iter()
                .map(|wj| profile.iter().map(|p| p * wj).collect())
                .collect(),
        )
    }

    pub fn from_values(values: Vec<Vec<Complex64>>, eps: f64) -> Result<FieldState> {
        FieldState::new(
            0.0,
            values
                .into_iter()
                .map(|c| c.into_iter().map(|z| z * eps).collect())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_and_amplitude() {
        let grid = Grid1D::new(20.0, 64).unwrap();
        let data = InitialData::ModulatedGaussian {
            sigma: 1.5,
            center: 1.0,
            wavenumber: 2.0,
            weights: vec![[1.0, 0.0], [0.0, -2.0]],
        };
        let s = data.build(&grid, 2, 0.25).unwrap();
        for (i, &x) in grid.nodes().iter().enumerate() {
            let e = Complex64::from_polar(0.25 * (-((x - 1.0) / 1.5).powi(2)).exp(), 2.0 * x);
            assert!((s.values[0][i] - e).norm() < 1e-15);
            assert!((s.values[1][i] - e * Complex64::new(0.0, -2.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn bad_data_is_a_config_error() {
        let grid = Grid1D::new(20.0, 64).unwrap();
        assert!(InitialData::gaussian(0.0).build(&grid, 1, 1.0).is_err());
        let two = InitialData::Gaussian {
            sigma: 1.0,
            center: 0.0,
            weights: vec![[1.0, 0.0]; 2],
        };
        assert!(matches!(two.build(&grid, 3, 1.0), Err(Error::Config(_))));
        let file = InitialData::File {
            path: "x.dnls".into(),
        };
        assert!(file.build(&grid, 1, 1.0).is_err());
    }

    #[test]
    fn serde_shape() {
        let d: InitialData = toml::from_str("kind = \"gaussian\"\nsigma = 2.0\n").unwrap();
        assert_eq!(d, InitialData::gaussian(2.0));
    }
}
