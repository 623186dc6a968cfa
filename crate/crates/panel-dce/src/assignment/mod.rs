//! Sequentially randomized assignment mechanisms, panel draws and adapted
//! propensity scores.
//!
//! All implemented mechanisms are individualistic: the distribution of
//! `W_{i,t}` depends only on unit `i`'s own past assignments and observed
//! outcomes. Every per-step probability must lie strictly inside `(0, 1)`
//! (probabilistic assignment), which the constructors enforce.

mod draw;
mod observed;
mod propensity;
pub mod rng;

pub use draw::{draw_panel, draw_panel_grouped};
pub use observed::ObservedPanel;
pub use propensity::{adapted_propensity, validate_probabilistic, AdaptedPropensity, ProbabilityReport, ProbabilityViolation};
pub use rng::{derive_seed, CounterRng};

use serde::{Deserialize, Serialize};

use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::error::{Error, Result};

const DIST_SUM_TOL: f64 = 1e-12;

/// A unit's own realized history up to (excluding) the step being drawn.
#[derive(Debug, Clone, Copy)]
pub struct StepHistory<'a> {
    pub assignments: &'a [Treatment],
    pub outcomes: &'a [f64],
}

impl<'a> StepHistory<'a> {
    pub fn new(assignments: &'a [Treatment], outcomes: &'a [f64]) -> Self {
        Self { assignments, outcomes }
    }

    pub fn empty() -> Self {
        Self { assignments: &[], outcomes: &[] }
    }
}

/// Per-step probability tables for the i.i.d. kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbTable {
    /// One distribution shared by every `(unit, period)`.
    Shared(Vec<f64>),
    /// Distinct distribution per cell, row-major `unit * n_periods + period`.
    PerCell { n_units: usize, n_periods: usize, rows: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MechanismKind {
    /// Independent categorical draws each period.
    Bernoulli { probs: ProbTable },
    /// First-order chain over the unit's own previous assignment.
    Markov { transition: Vec<Vec<f64>>, initial: Vec<f64> },
    /// Outcome-adaptive rule: use `shifted` whenever the unit's last observed
    /// outcome exceeds `cutoff`, otherwise `base`.
    OutcomeThreshold { base: Vec<f64>, shifted: Vec<f64>, cutoff: f64 },
}

/// An individualistic, sequentially randomized assignment mechanism with
/// known per-step probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentMechanism {
    alphabet: TreatmentAlphabet,
    #[serde(flatten)]
    kind: MechanismKind,
}

impl AssignmentMechanism {
    pub fn bernoulli(alphabet: TreatmentAlphabet, probs: Vec<f64>) -> Result<Self> {
        check_distribution(&probs, alphabet.len())?;
        Ok(Self { alphabet, kind: MechanismKind::Bernoulli { probs: ProbTable::Shared(probs) } })
    }

    /// Binary Bernoulli with treatment probability `p_treat`.
    pub fn bernoulli_binary(p_treat: f64) -> Result<Self> {
        Self::bernoulli(TreatmentAlphabet::binary(), vec![1.0 - p_treat, p_treat])
    }

    pub fn bernoulli_per_cell(
        alphabet: TreatmentAlphabet,
        n_units: usize,
        n_periods: usize,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.len() != n_units * n_periods {
            return Err(Error::Dimension(format!(
                "{} probability rows for {n_units}x{n_periods} cells",
                rows.len()
            )));
        }
        for row in &rows {
            check_distribution(row, alphabet.len())?;
        }
        Ok(Self {
            alphabet,
            kind: MechanismKind::Bernoulli {
                probs: ProbTable::PerCell { n_units, n_periods, rows },
            },
        })
    }

    pub fn markov(
        alphabet: TreatmentAlphabet,
        transition: Vec<Vec<f64>>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let k = alphabet.len();
        if transition.len() != k {
            return Err(Error::Dimension(format!("{} transition rows for {k} labels", transition.len())));
        }
        for row in &transition {
            check_distribution(row, k)?;
        }
        check_distribution(&initial, k)?;
        Ok(Self { alphabet, kind: MechanismKind::Markov { transition, initial } })
    }

    /// Binary symmetric chain: stay on the previous label with probability
    /// `stay`, started from the uniform (stationary) distribution.
    pub fn markov_binary_stay(stay: f64) -> Result<Self> {
        Self::markov(
            TreatmentAlphabet::binary(),
            vec![vec![stay, 1.0 - stay], vec![1.0 - stay, stay]],
            vec![0.5, 0.5],
        )
    }

    pub fn outcome_threshold(
        alphabet: TreatmentAlphabet,
        base: Vec<f64>,
        shifted: Vec<f64>,
        cutoff: f64,
    ) -> Result<Self> {
        check_distribution(&base, alphabet.len())?;
        check_distribution(&shifted, alphabet.len())?;
        if !cutoff.is_finite() {
            return Err(Error::InvalidSpec("non-finite threshold cutoff".into()));
        }
        Ok(Self { alphabet, kind: MechanismKind::OutcomeThreshold { base, shifted, cutoff } })
    }

    /// Binary outcome-adaptive rule: treatment probability moves from
    /// `p_treat` to `p_treat + offset` after an outcome above `cutoff`.
    pub fn outcome_threshold_binary(p_treat: f64, offset: f64, cutoff: f64) -> Result<Self> {
        let shifted = p_treat + offset;
        Self::outcome_threshold(
            TreatmentAlphabet::binary(),
            vec![1.0 - p_treat, p_treat],
            vec![1.0 - shifted, shifted],
            cutoff,
        )
    }

    pub fn alphabet(&self) -> &TreatmentAlphabet {
        &self.alphabet
    }

    pub fn kind(&self) -> &MechanismKind {
        &self.kind
    }

    pub fn n_labels(&self) -> usize {
        self.alphabet.len()
    }

    /// Whether the per-step rule reads any history at all (and which part).
    pub fn is_history_dependent(&self) -> bool {
        !matches!(self.kind, MechanismKind::Bernoulli { .. })
    }

    /// Fill `out` with the distribution of `W_{unit,time}` given the unit's
    /// own history. `out.len()` must equal the alphabet size.
    pub fn step_distribution_into(
        &self,
        unit: usize,
        time: usize,
        history: StepHistory<'_>,
        out: &mut [f64],
    ) {
        debug_assert_eq!(out.len(), self.n_labels());
        debug_assert_eq!(history.assignments.len(), history.outcomes.len());
        match &self.kind {
            MechanismKind::Bernoulli { probs: ProbTable::Shared(p) } => out.copy_from_slice(p),
            MechanismKind::Bernoulli { probs: ProbTable::PerCell { n_periods, rows, .. } } => {
                out.copy_from_slice(&rows[unit * n_periods + time]);
            }
            MechanismKind::Markov { transition, initial } => {
                match history.assignments.last() {
                    Some(prev) => out.copy_from_slice(&transition[prev.index()]),
                    None => out.copy_from_slice(initial),
                }
            }
            MechanismKind::OutcomeThreshold { base, shifted, cutoff } => {
                match history.outcomes.last() {
                    Some(&y) if y > *cutoff => out.copy_from_slice(shifted),
                    _ => out.copy_from_slice(base),
                }
            }
        }
    }

    pub fn step_distribution(&self, unit: usize, time: usize, history: StepHistory<'_>) -> Vec<f64> {
        let mut out = vec![0.0; self.n_labels()];
        self.step_distribution_into(unit, time, history, &mut out);
        out
    }

    /// Declared probability bounds `(c_L, c_U)`: the extreme per-step
    /// probabilities this mechanism can ever produce.
    pub fn prob_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut scan = |row: &[f64]| {
            for &p in row {
                lo = lo.min(p);
                hi = hi.max(p);
            }
        };
        match &self.kind {
            MechanismKind::Bernoulli { probs: ProbTable::Shared(p) } => scan(p),
            MechanismKind::Bernoulli { probs: ProbTable::PerCell { rows, .. } } => {
                rows.iter().for_each(|r| scan(r))
            }
            MechanismKind::Markov { transition, initial } => {
                transition.iter().for_each(|r| scan(r));
                scan(initial);
            }
            MechanismKind::OutcomeThreshold { base, shifted, .. } => {
                scan(base);
                scan(shifted);
            }
        }
        (lo, hi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mechanisms always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mech: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSpec(format!("mechanism document: {e}")))?;
        mech.revalidate()?;
        Ok(mech)
    }

    fn revalidate(&self) -> Result<()> {
        let k = self.n_labels();
        let check_all = |rows: &[&[f64]]| -> Result<()> {
            rows.iter().try_for_each(|r| check_distribution(r, k))
        };
        match &self.kind {
            MechanismKind::Bernoulli { probs: ProbTable::Shared(p) } => check_all(&[p]),
            MechanismKind::Bernoulli { probs: ProbTable::PerCell { rows, n_units, n_periods } } => {
                if rows.len() != n_units * n_periods {
                    return Err(Error::Dimension("per-cell probability table shape".into()));
                }
                rows.iter().try_for_each(|r| check_distribution(r, k))
            }
            MechanismKind::Markov { transition, initial } => {
                if transition.len() != k {
                    return Err(Error::Dimension("transition matrix shape".into()));
                }
                transition.iter().try_for_each(|r| check_distribution(r, k))?;
                check_distribution(initial, k)
            }
            MechanismKind::OutcomeThreshold { base, shifted, .. } => check_all(&[base, shifted]),
        }
    }
}

fn check_distribution(probs: &[f64], n_labels: usize) -> Result<()> {
    if probs.len() != n_labels {
        return Err(Error::Dimension(format!(
            "{} probabilities for {n_labels} labels",
            probs.len()
        )));
    }
    for (k, &p) in probs.iter().enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityBound { unit: 0, time: k, value: p });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > DIST_SUM_TOL {
        return Err(Error::InvalidSpec(format!("step distribution sums to {sum}")));
    }
    Ok(())
}
