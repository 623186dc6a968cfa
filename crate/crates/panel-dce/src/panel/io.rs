//! JSON document form of the linear and autoregressive panel specs.
//!
//! Schema: `kind` tag (`linear` | `autoregressive`), `alphabet` (label list),
//! `n_units`, `n_periods`, coefficient arrays in row-major `[i][t][s]` order
//! (`beta` rows have `t+1` lags, `phi` rows have `t`), and the `epsilon`
//! error matrix as `[i][t]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::alphabet::TreatmentAlphabet;

use super::{ArPanelSpec, LinearPanelSpec, PotentialOutcomePanel};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PanelDocument {
    Linear {
        alphabet: Vec<String>,
        n_units: usize,
        n_periods: usize,
        beta: Vec<Vec<Vec<f64>>>,
        epsilon: Vec<Vec<f64>>,
    },
    Autoregressive {
        alphabet: Vec<String>,
        n_units: usize,
        n_periods: usize,
        phi: Vec<Vec<Vec<f64>>>,
        beta: Vec<Vec<Vec<f64>>>,
        epsilon: Vec<Vec<f64>>,
    },
}

impl PanelDocument {
    pub fn into_panel(self) -> Result<PotentialOutcomePanel> {
        match self {
            Self::Linear { alphabet, n_units, n_periods, beta, epsilon } => {
                let eps = shaped_grid(epsilon, n_units, n_periods)?;
                Ok(LinearPanelSpec::new(TreatmentAlphabet::new(alphabet)?, beta, eps)?.into())
            }
            Self::Autoregressive { alphabet, n_units, n_periods, phi, beta, epsilon } => {
                let eps = shaped_grid(epsilon, n_units, n_periods)?;
                Ok(ArPanelSpec::new(TreatmentAlphabet::new(alphabet)?, phi, beta, eps)?.into())
            }
        }
    }

    pub fn from_linear(spec: &LinearPanelSpec) -> Self {
        Self::Linear {
            alphabet: spec.alphabet().labels().to_vec(),
            n_units: spec.n_units(),
            n_periods: spec.n_periods(),
            beta: spec.beta_rows().to_vec(),
            epsilon: grid_rows(spec.epsilon()),
        }
    }

    pub fn from_ar(spec: &ArPanelSpec) -> Self {
        let n = spec.n_units();
        let t_max = spec.n_periods();
        Self::Autoregressive {
            alphabet: spec.alphabet().labels().to_vec(),
            n_units: n,
            n_periods: t_max,
            phi: (0..n)
                .map(|i| (0..t_max).map(|t| (1..=t).map(|k| spec.phi(i, t, k)).collect()).collect())
                .collect(),
            beta: (0..n)
                .map(|i| (0..t_max).map(|t| (0..=t).map(|s| spec.beta(i, t, s)).collect()).collect())
                .collect(),
            epsilon: grid_rows(spec.epsilon()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(format!("panel document: {e}")))
    }
}

fn grid_rows(g: &Grid<f64>) -> Vec<Vec<f64>> {
    g.rows().map(<[f64]>::to_vec).collect()
}

fn shaped_grid(rows: Vec<Vec<f64>>, n_units: usize, n_periods: usize) -> Result<Grid<f64>> {
    let g = Grid::from_rows(rows)?;
    if g.n_rows() != n_units || g.n_cols() != n_periods {
        return Err(Error::Dimension(format!(
            "epsilon is {}x{}, document says {n_units}x{n_periods}",
            g.n_rows(),
            g.n_cols()
        )));
    }
    Ok(g)
}
