//! Potential outcome panels: the fixed collection of outcomes each unit would
//! exhibit under every possible own assignment path, together with the causal
//! estimands defined on them.
//!
//! Non-anticipation and non-interference hold by construction: every
//! representation maps `(unit, time, own path w_{1:t})` to a real outcome and
//! nothing else.

mod ar;
mod estimands;
mod io;
mod linear;
mod query;
mod table;

pub use ar::ArPanelSpec;
pub use estimands::{
    true_average_effects, true_lag_p_effect, true_weighted_effect, AverageEffects,
};
pub use io::PanelDocument;
pub use linear::LinearPanelSpec;
pub use query::{EffectQuery, WeightSpec};
pub use table::{pack_path, TablePanel, PATH_BITS_CAP};

use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// A potential outcome panel under one of the supported representations.
#[derive(Debug, Clone)]
pub enum PotentialOutcomePanel {
    /// Exhaustive path-indexed table; only feasible for tiny panels.
    Table(TablePanel),
    Linear(LinearPanelSpec),
    Autoregressive(ArPanelSpec),
    /// Outcomes that do not depend on the path at all. Used for sharp-null
    /// imputation, where every counterfactual equals the observed outcome.
    Invariant { outcomes: Grid<f64>, alphabet: TreatmentAlphabet },
}

impl PotentialOutcomePanel {
    pub fn path_invariant(outcomes: Grid<f64>, alphabet: TreatmentAlphabet) -> Self {
        Self::Invariant { outcomes, alphabet }
    }

    pub fn n_units(&self) -> usize {
        match self {
            Self::Table(t) => t.n_units(),
            Self::Linear(l) => l.n_units(),
            Self::Autoregressive(a) => a.n_units(),
            Self::Invariant { outcomes, .. } => outcomes.n_rows(),
        }
    }

    pub fn n_periods(&self) -> usize {
        match self {
            Self::Table(t) => t.n_periods(),
            Self::Linear(l) => l.n_periods(),
            Self::Autoregressive(a) => a.n_periods(),
            Self::Invariant { outcomes, .. } => outcomes.n_cols(),
        }
    }

    pub fn alphabet(&self) -> &TreatmentAlphabet {
        match self {
            Self::Table(t) => t.alphabet(),
            Self::Linear(l) => l.alphabet(),
            Self::Autoregressive(a) => a.alphabet(),
            Self::Invariant { alphabet, .. } => alphabet,
        }
    }

    /// Evaluate `Y_{unit,time}(path)` for a path covering periods `0..=time`.
    pub fn evaluate(&self, unit: usize, time: usize, path: &[Treatment]) -> Result<f64> {
        self.check_cell(unit, time)?;
        if path.len() != time + 1 {
            return Err(Error::PathLength { expected: time + 1, got: path.len() });
        }
        self.alphabet().check_path(path)?;
        match self {
            Self::Table(t) => t.lookup(unit, time, path),
            Self::Linear(l) => Ok(l.evaluate(unit, time, path)),
            Self::Autoregressive(a) => {
                // Unroll the recursion over all prefixes of the path.
                let mut prior = Vec::with_capacity(time + 1);
                for s in 0..=time {
                    let y = a.evaluate_step(unit, s, &path[..=s], &prior);
                    prior.push(y);
                }
                Ok(prior[time])
            }
            Self::Invariant { outcomes, .. } => Ok(*outcomes.get(unit, time)),
        }
    }

    /// Evaluate the outcome at `time` given the outcomes already revealed
    /// along the same path (`prior[s]` is the outcome at period `s`). This is
    /// what sequential draws use; it avoids re-unrolling recursions.
    pub(crate) fn evaluate_step(
        &self,
        unit: usize,
        time: usize,
        path: &[Treatment],
        prior: &[f64],
    ) -> Result<f64> {
        debug_assert_eq!(path.len(), time + 1);
        debug_assert_eq!(prior.len(), time);
        match self {
            Self::Table(t) => t.lookup(unit, time, path),
            Self::Linear(l) => Ok(l.evaluate(unit, time, path)),
            Self::Autoregressive(a) => Ok(a.evaluate_step(unit, time, path, prior)),
            Self::Invariant { outcomes, .. } => Ok(*outcomes.get(unit, time)),
        }
    }

    fn check_cell(&self, unit: usize, time: usize) -> Result<()> {
        if unit >= self.n_units() || time >= self.n_periods() {
            return Err(Error::Dimension(format!(
                "cell ({unit}, {time}) outside {}x{} panel",
                self.n_units(),
                self.n_periods()
            )));
        }
        Ok(())
    }
}

impl From<LinearPanelSpec> for PotentialOutcomePanel {
    fn from(spec: LinearPanelSpec) -> Self {
        Self::Linear(spec)
    }
}

impl From<ArPanelSpec> for PotentialOutcomePanel {
    fn from(spec: ArPanelSpec) -> Self {
        Self::Autoregressive(spec)
    }
}

impl From<TablePanel> for PotentialOutcomePanel {
    fn from(table: TablePanel) -> Self {
        Self::Table(table)
    }
}
