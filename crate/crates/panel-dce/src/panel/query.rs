use serde::{Deserialize, Serialize};

use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::error::{Error, Result};

use super::table::pack_path;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Weights over continuation paths `v` for weighted lag-(p,q) effects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSpec {
    /// `a_v = |W|^-(p-q+1)` for every continuation.
    Uniform,
    /// Explicit table indexed by the packed continuation path.
    Table(Vec<f64>),
}

impl WeightSpec {
    pub fn validate(&self, n_labels: usize, continuation_len: usize) -> Result<()> {
        match self {
            Self::Uniform => Ok(()),
            Self::Table(a) => {
                let expected = n_labels.pow(continuation_len as u32);
                if a.len() != expected {
                    return Err(Error::InvalidWeights(format!(
                        "{} entries, want {expected}",
                        a.len()
                    )));
                }
                if a.iter().any(|&w| w < 0.0 || !w.is_finite()) {
                    return Err(Error::InvalidWeights("negative or non-finite weight".into()));
                }
                let sum: f64 = a.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
                }
                Ok(())
            }
        }
    }

    #[inline]
    pub fn weight(&self, n_labels: usize, continuation_len: usize, packed: u32) -> f64 {
        match self {
            Self::Uniform => (n_labels as f64).powi(-(continuation_len as i32)),
            Self::Table(a) => a[packed as usize],
        }
    }

    pub fn weight_of(&self, n_labels: usize, continuation: &[Treatment]) -> f64 {
        self.weight(n_labels, continuation.len(), pack_path(continuation, n_labels))
    }
}

/// A dynamic causal effect query: compare the length-`q` switch paths `w` and
/// `w_tilde` applied `p` periods back, averaging over continuations when
/// `q < p + 1` with the given weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectQuery {
    lag: usize,
    window: Vec<Treatment>,
    window_alt: Vec<Treatment>,
    weights: WeightSpec,
}

impl EffectQuery {
    /// Pure lag-p query: both switch paths span the whole window (`q = p+1`).
    pub fn lag_p(window: Vec<Treatment>, window_alt: Vec<Treatment>) -> Result<Self> {
        if window.is_empty() {
            return Err(Error::InvalidSpec("empty query window".into()));
        }
        let lag = window.len() - 1;
        Self::weighted(lag, window, window_alt, WeightSpec::Uniform)
    }

    /// Contemporaneous (`p = 0`) query.
    pub fn contemporaneous(w: Treatment, w_alt: Treatment) -> Self {
        Self { lag: 0, window: vec![w], window_alt: vec![w_alt], weights: WeightSpec::Uniform }
    }

    /// Weighted lag-(p,q) query with `q = window.len()`.
    pub fn weighted(
        lag: usize,
        window: Vec<Treatment>,
        window_alt: Vec<Treatment>,
        weights: WeightSpec,
    ) -> Result<Self> {
        if window.len() != window_alt.len() {
            return Err(Error::Dimension(format!(
                "switch paths of lengths {} and {}",
                window.len(),
                window_alt.len()
            )));
        }
        let q = window.len();
        if q == 0 || q > lag + 1 {
            return Err(Error::InvalidSpec(format!("window length {q} outside (0, {}]", lag + 1)));
        }
        Ok(Self { lag, window, window_alt, weights })
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    /// `q`, the length of the switch block.
    pub fn block_len(&self) -> usize {
        self.window.len()
    }

    /// `p - q + 1`, the length of the averaged continuation.
    pub fn continuation_len(&self) -> usize {
        self.lag + 1 - self.window.len()
    }

    /// True for pure lag-p queries (no continuation averaging).
    pub fn is_pure(&self) -> bool {
        self.continuation_len() == 0
    }

    pub fn window(&self) -> &[Treatment] {
        &self.window
    }

    pub fn window_alt(&self) -> &[Treatment] {
        &self.window_alt
    }

    pub fn weights(&self) -> &WeightSpec {
        &self.weights
    }

    pub fn validate_for(&self, alphabet: &TreatmentAlphabet) -> Result<()> {
        alphabet.check_path(&self.window)?;
        alphabet.check_path(&self.window_alt)?;
        self.weights.validate(alphabet.len(), self.continuation_len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths_must_match() {
        assert!(EffectQuery::lag_p(vec![Treatment(1)], vec![Treatment(0), Treatment(0)]).is_err());
    }

    #[test]
    fn window_len_bounds() {
        assert!(EffectQuery::weighted(1, vec![], vec![], WeightSpec::Uniform).is_err());
        assert!(EffectQuery::weighted(
            0,
            vec![Treatment(1); 2],
            vec![Treatment(0); 2],
            WeightSpec::Uniform
        )
        .is_err());
    }

    #[test]
    fn uniform_weights_normalise() {
        let w = WeightSpec::Uniform;
        assert_eq!(w.weight(2, 3, 5), 0.125);
        w.validate(2, 3).unwrap();
    }

    #[test]
    fn table_weights_validated() {
        assert!(WeightSpec::Table(vec![0.5, 0.6]).validate(2, 1).is_err());
        assert!(WeightSpec::Table(vec![0.5, -0.5]).validate(2, 1).is_err());
        assert!(WeightSpec::Table(vec![0.25]).validate(2, 1).is_err());
        WeightSpec::Table(vec![0.3, 0.7]).validate(2, 1).unwrap();
    }
}
