use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Linear potential outcome panel:
/// `Y_{i,t}(w_{1:t}) = sum_{s=0}^{t} beta[i][t][s] * w_{t-s} + epsilon[i][t]`
/// (periods 0-based, so the coefficient row at period `t` has `t + 1` lags).
///
/// Coefficients and errors are non-stochastic; the only randomness anywhere
/// is the assignment draw.
#[derive(Debug, Clone)]
pub struct LinearPanelSpec {
    alphabet: TreatmentAlphabet,
    values: Vec<f64>,
    beta: Vec<Vec<Vec<f64>>>,
    epsilon: Grid<f64>,
}

impl LinearPanelSpec {
    pub fn new(
        alphabet: TreatmentAlphabet,
        beta: Vec<Vec<Vec<f64>>>,
        epsilon: Grid<f64>,
    ) -> Result<Self> {
        let values = alphabet.numeric_values()?;
        check_ragged_shape(&beta, epsilon.n_rows(), epsilon.n_cols(), 1, "beta")?;
        Ok(Self { alphabet, values, beta, epsilon })
    }

    /// All coefficients zero: the outcome never depends on the path. Accepts
    /// any alphabet since numeric coding is never needed.
    pub fn path_invariant(alphabet: TreatmentAlphabet, epsilon: Grid<f64>) -> Self {
        let beta = ragged_zeros(epsilon.n_rows(), epsilon.n_cols(), 1);
        let values = alphabet.numeric_values().unwrap_or_else(|_| vec![0.0; alphabet.len()]);
        Self { alphabet, values, beta, epsilon }
    }

    /// Homogeneous, time-invariant coefficients: `beta[i][t][s] = coeffs[s]`
    /// for `s < coeffs.len()`, zero beyond.
    pub fn homogeneous_time_invariant(
        alphabet: TreatmentAlphabet,
        n_units: usize,
        n_periods: usize,
        coeffs: &[f64],
        epsilon: Grid<f64>,
    ) -> Result<Self> {
        if epsilon.n_rows() != n_units || epsilon.n_cols() != n_periods {
            return Err(Error::Dimension("epsilon shape mismatch".into()));
        }
        let mut beta = ragged_zeros(n_units, n_periods, 1);
        for row in &mut beta {
            for (t, lags) in row.iter_mut().enumerate() {
                for s in 0..=t {
                    if let Some(&c) = coeffs.get(s) {
                        lags[s] = c;
                    }
                }
            }
        }
        Self::new(alphabet, beta, epsilon)
    }

    pub fn n_units(&self) -> usize {
        self.epsilon.n_rows()
    }

    pub fn n_periods(&self) -> usize {
        self.epsilon.n_cols()
    }

    pub fn alphabet(&self) -> &TreatmentAlphabet {
        &self.alphabet
    }

    pub fn epsilon(&self) -> &Grid<f64> {
        &self.epsilon
    }

    /// `beta_{i,t,s}`, zero when `s > t`.
    pub fn beta(&self, unit: usize, time: usize, lag: usize) -> f64 {
        self.beta[unit][time].get(lag).copied().unwrap_or(0.0)
    }

    pub fn beta_rows(&self) -> &[Vec<Vec<f64>>] {
        &self.beta
    }

    /// Cross-unit mean of `beta_{., t, s}`.
    pub fn mean_beta(&self, time: usize, lag: usize) -> f64 {
        let n = self.n_units();
        (0..n).map(|i| self.beta(i, time, lag)).sum::<f64>() / n as f64
    }

    /// True when coefficients do not vary across units.
    pub fn is_homogeneous(&self) -> bool {
        self.beta.iter().all(|row| row == &self.beta[0])
    }

    /// True when `beta_{i,t,s}` depends only on `(i, s)` wherever defined.
    pub fn is_time_invariant(&self) -> bool {
        self.beta.iter().all(|row| {
            (0..row.len()).all(|s| {
                let mut vals = (s..row.len()).map(|t| row[t][s]);
                match vals.next() {
                    Some(first) => vals.all(|v| v == first),
                    None => true,
                }
            })
        })
    }

    #[inline]
    pub(crate) fn evaluate(&self, unit: usize, time: usize, path: &[Treatment]) -> f64 {
        let lags = &self.beta[unit][time];
        let mut acc = *self.epsilon.get(unit, time);
        for (s, &b) in lags.iter().enumerate() {
            if b != 0.0 {
                acc += b * self.values[path[time - s].index()];
            }
        }
        acc
    }
}

// offset 1 gives beta-shaped rows (t+1 lags), offset 0 phi-shaped rows (t lags)
pub(crate) fn ragged_zeros(n_units: usize, n_periods: usize, offset: usize) -> Vec<Vec<Vec<f64>>> {
    (0..n_units)
        .map(|_| (0..n_periods).map(|t| vec![0.0; t + offset]).collect())
        .collect()
}

pub(crate) fn check_ragged_shape(
    coeffs: &[Vec<Vec<f64>>],
    n_units: usize,
    n_periods: usize,
    offset: usize,
    name: &str,
) -> Result<()> {
    // offset 1: beta rows have t+1 lags; offset 0: phi rows have t lags.
    if coeffs.len() != n_units {
        return Err(Error::Dimension(format!("{name} has {} unit rows, want {n_units}", coeffs.len())));
    }
    for (i, row) in coeffs.iter().enumerate() {
        if row.len() != n_periods {
            return Err(Error::Dimension(format!(
                "{name}[{i}] has {} period rows, want {n_periods}",
                row.len()
            )));
        }
        for (t, lags) in row.iter().enumerate() {
            if lags.len() != t + offset {
                return Err(Error::Dimension(format!(
                    "{name}[{i}][{t}] has {} lags, want {}",
                    lags.len(),
                    t + offset
                )));
            }
        }
    }
    Ok(())
}
