use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::error::{Error, Result};
use crate::grid::Grid;

use super::linear::{check_ragged_shape, ragged_zeros, LinearPanelSpec};

/// Autoregressive potential outcome panel:
/// `Y_{i,t}(w_{1:t}) = sum_{k=1}^{t} phi[i][t][k-1] * Y_{i,t-k}(w_{1:t-k})
///                    + sum_{s=0}^{t} beta[i][t][s] * w_{t-s} + epsilon[i][t]`
/// with base case `Y_{i,0}(w_0) = beta[i][0][0] * w_0 + epsilon[i][0]`.
#[derive(Debug, Clone)]
pub struct ArPanelSpec {
    alphabet: TreatmentAlphabet,
    values: Vec<f64>,
    phi: Vec<Vec<Vec<f64>>>,
    beta: Vec<Vec<Vec<f64>>>,
    epsilon: Grid<f64>,
}

impl ArPanelSpec {
    pub fn new(
        alphabet: TreatmentAlphabet,
        phi: Vec<Vec<Vec<f64>>>,
        beta: Vec<Vec<Vec<f64>>>,
        epsilon: Grid<f64>,
    ) -> Result<Self> {
        let values = alphabet.numeric_values()?;
        check_ragged_shape(&beta, epsilon.n_rows(), epsilon.n_cols(), 1, "beta")?;
        check_ragged_shape(&phi, epsilon.n_rows(), epsilon.n_cols(), 0, "phi")?;
        Ok(Self { alphabet, values, phi, beta, epsilon })
    }

    /// AR(1) with shared coefficients: `phi[i][t][0] = phi_1` and
    /// `beta[i][t][0] = beta_0`, all other coefficients zero.
    pub fn ar1(
        alphabet: TreatmentAlphabet,
        n_units: usize,
        n_periods: usize,
        phi_1: f64,
        beta_0: f64,
        epsilon: Grid<f64>,
    ) -> Result<Self> {
        if epsilon.n_rows() != n_units || epsilon.n_cols() != n_periods {
            return Err(Error::Dimension("epsilon shape mismatch".into()));
        }
        let mut phi = ragged_zeros(n_units, n_periods, 0);
        for row in &mut phi {
            for lags in row.iter_mut().skip(1) {
                lags[0] = phi_1;
            }
        }
        let mut beta = ragged_zeros(n_units, n_periods, 1);
        for row in &mut beta {
            for lags in row.iter_mut() {
                lags[0] = beta_0;
            }
        }
        Self::new(alphabet, phi, beta, epsilon)
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

    pub fn phi(&self, unit: usize, time: usize, lag: usize) -> f64 {
        debug_assert!(lag >= 1);
        self.phi[unit][time].get(lag - 1).copied().unwrap_or(0.0)
    }

    pub fn beta(&self, unit: usize, time: usize, lag: usize) -> f64 {
        self.beta[unit][time].get(lag).copied().unwrap_or(0.0)
    }

    /// One step of the recursion, given outcomes already computed along the
    /// same path (`prior[s]` = outcome at period `s`).
    #[inline]
    pub(crate) fn evaluate_step(
        &self,
        unit: usize,
        time: usize,
        path: &[Treatment],
        prior: &[f64],
    ) -> f64 {
        let mut acc = *self.epsilon.get(unit, time);
        for (k, &p) in self.phi[unit][time].iter().enumerate() {
            if p != 0.0 {
                acc += p * prior[time - (k + 1)];
            }
        }
        for (s, &b) in self.beta[unit][time].iter().enumerate() {
            if b != 0.0 {
                acc += b * self.values[path[time - s].index()];
            }
        }
        acc
    }

    /// Rewrite the recursion as an equivalent [`LinearPanelSpec`]: substitute
    /// each lagged outcome until only assignments and errors remain.
    pub fn unroll_to_linear(&self) -> LinearPanelSpec {
        let n = self.n_units();
        let t_max = self.n_periods();
        let mut beta = ragged_zeros(n, t_max, 1);
        let mut eps = Grid::filled(n, t_max, 0.0);
        for i in 0..n {
            for t in 0..t_max {
                let mut e = *self.epsilon.get(i, t);
                for s in 0..=t {
                    beta[i][t][s] = self.beta(i, t, s);
                }
                for k in 1..=t {
                    let p = self.phi(i, t, k);
                    if p == 0.0 {
                        continue;
                    }
                    e += p * eps.get(i, t - k);
                    for s in k..=t {
                        beta[i][t][s] += p * beta[i][t - k][s - k];
                    }
                }
                eps.set(i, t, e);
            }
        }
        LinearPanelSpec::new(self.alphabet.clone(), beta, eps)
            .expect("unrolled spec shares the validated alphabet and shapes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PotentialOutcomePanel;

    fn eps(rows: Vec<Vec<f64>>) -> Grid<f64> {
        Grid::from_rows(rows).unwrap()
    }

    fn all_paths(len: usize) -> Vec<Vec<Treatment>> {
        let mut out = vec![vec![]];
        for _ in 0..len {
            out = out
                .into_iter()
                .flat_map(|p| {
                    [Treatment(0), Treatment(1)].into_iter().map(move |w| {
                        let mut q = p.clone();
                        q.push(w);
                        q
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn hand_unrolled_two_periods() {
        // phi=0.4, beta=2, eps=0: Y_2(1,1) = phi*beta + beta
        let spec =
            ArPanelSpec::ar1(TreatmentAlphabet::binary(), 1, 2, 0.4, 2.0, eps(vec![vec![0.0; 2]]))
                .unwrap();
        let panel = PotentialOutcomePanel::from(spec);
        let y = panel.evaluate(0, 1, &[Treatment(1), Treatment(1)]).unwrap();
        assert!((y - (0.4 * 2.0 + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_beta_is_path_free() {
        let spec = ArPanelSpec::ar1(
            TreatmentAlphabet::binary(),
            1,
            3,
            0.5,
            0.0,
            eps(vec![vec![0.3, -1.0, 0.7]]),
        )
        .unwrap();
        let panel = PotentialOutcomePanel::from(spec);
        let reference = panel.evaluate(0, 2, &[Treatment(0); 3]).unwrap();
        for path in all_paths(3) {
            assert_eq!(panel.evaluate(0, 2, &path).unwrap(), reference);
        }
    }

    #[test]
    fn unroll_matches_on_every_path() {
        // general heterogeneous coefficients, N=2, T=4
        let n = 2;
        let t_max = 4;
        let mut phi = ragged_zeros(n, t_max, 0);
        let mut beta = ragged_zeros(n, t_max, 1);
        let mut c = 0.0f64;
        for i in 0..n {
            for t in 0..t_max {
                for k in 0..t {
                    c += 0.13;
                    phi[i][t][k] = (c * 7.0).sin() * 0.6;
                }
                for s in 0..=t {
                    c += 0.07;
                    beta[i][t][s] = (c * 5.0).cos();
                }
            }
        }
        let e = eps(vec![vec![0.2, -0.4, 0.6, -0.8], vec![1.0, 0.5, -0.5, 0.25]]);
        let ar = ArPanelSpec::new(TreatmentAlphabet::binary(), phi, beta, e).unwrap();
        let lin = ar.unroll_to_linear();
        let ar_panel = PotentialOutcomePanel::from(ar);
        let lin_panel = PotentialOutcomePanel::from(lin);
        for i in 0..n {
            for t in 0..t_max {
                for path in all_paths(t + 1) {
                    let a = ar_panel.evaluate(i, t, &path).unwrap();
                    let b = lin_panel.evaluate(i, t, &path).unwrap();
                    assert!((a - b).abs() < 1e-12, "mismatch at ({i},{t},{path:?}): {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn unroll_geometric_coefficients() {
        // phi AR(1), single contemporaneous beta: unrolled lag-s coefficient is phi^s * beta
        let spec =
            ArPanelSpec::ar1(TreatmentAlphabet::binary(), 1, 4, 0.5, 2.0, eps(vec![vec![0.0; 4]]))
                .unwrap();
        let lin = spec.unroll_to_linear();
        for t in 0..4 {
            for s in 0..=t {
                assert!((lin.beta(0, t, s) - 0.5f64.powi(s as i32) * 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unroll_carries_errors() {
        // phi=0 leaves beta and eps unchanged; nonzero phi folds eps forward,
        // checked on the all-zero path where only errors survive.
        let spec = ArPanelSpec::ar1(
            TreatmentAlphabet::binary(),
            1,
            3,
            0.25,
            1.0,
            eps(vec![vec![1.0, 2.0, 3.0]]),
        )
        .unwrap();
        let lin = spec.unroll_to_linear();
        let ar_panel = PotentialOutcomePanel::from(spec);
        let zero = vec![Treatment(0); 3];
        assert!(
            (lin.epsilon().get(0, 2) - ar_panel.evaluate(0, 2, &zero).unwrap()).abs() < 1e-12
        );

        let flat =
            ArPanelSpec::ar1(TreatmentAlphabet::binary(), 1, 3, 0.0, 1.5, eps(vec![vec![1.0; 3]]))
                .unwrap();
        let flat_lin = flat.unroll_to_linear();
        assert_eq!(flat_lin.beta(0, 2, 0), 1.5);
        assert_eq!(flat_lin.beta(0, 2, 1), 0.0);
        assert_eq!(*flat_lin.epsilon().get(0, 2), 1.0);
    }
}
