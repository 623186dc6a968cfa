use crate::alphabet::Treatment;
use crate::error::{Error, Result};

use super::{AssignmentMechanism, ObservedPanel, StepHistory};

/// An adapted propensity score `p_{i,t-p}(w)` together with its per-step
/// factors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedPropensity {
    pub unit: usize,
    /// First period of the window (`t - p`).
    pub window_start: usize,
    pub value: f64,
    pub factors: Vec<f64>,
}

/// Probability of the window path `w` given the unit's realized history,
/// factorized into per-step conditionals.
///
/// `window_outcomes[s]` must hold the outcome revealed at window position `s`
/// under the hypothetical path `(history, w_{0..=s})`; only the first
/// `window.len() - 1` entries are ever read (the final step's distribution
/// conditions on outcomes strictly before it).
pub fn adapted_propensity(
    mech: &AssignmentMechanism,
    unit: usize,
    window_start: usize,
    history: StepHistory<'_>,
    window: &[Treatment],
    window_outcomes: &[f64],
) -> Result<AdaptedPropensity> {
    if history.assignments.len() != window_start || history.outcomes.len() != window_start {
        return Err(Error::Dimension(format!(
            "history of length {} for a window starting at {window_start}",
            history.assignments.len()
        )));
    }
    if window.is_empty() {
        return Err(Error::InvalidSpec("empty propensity window".into()));
    }
    if window_outcomes.len() + 1 < window.len() {
        return Err(Error::Dimension(format!(
            "{} window outcomes for a window of length {}",
            window_outcomes.len(),
            window.len()
        )));
    }
    mech.alphabet().check_path(window)?;

    let mut assignments = history.assignments.to_vec();
    let mut outcomes = history.outcomes.to_vec();
    let mut dist = vec![0.0; mech.n_labels()];
    let mut factors = Vec::with_capacity(window.len());
    let mut value = 1.0;
    for (s, &w) in window.iter().enumerate() {
        let time = window_start + s;
        mech.step_distribution_into(unit, time, StepHistory::new(&assignments, &outcomes), &mut dist);
        let p = dist[w.index()];
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityBound { unit, time, value: p });
        }
        factors.push(p);
        value *= p;
        if s + 1 < window.len() {
            assignments.push(w);
            outcomes.push(window_outcomes[s]);
        }
    }
    Ok(AdaptedPropensity { unit, window_start, value, factors })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityViolation {
    pub unit: usize,
    pub time: usize,
    pub value: f64,
}

/// Report of every logged step probability falling outside `[c_L, c_U]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityReport {
    pub bounds: (f64, f64),
    pub violations: Vec<ProbabilityViolation>,
}

impl ProbabilityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the probabilistic-assignment bounds on every logged step
/// probability. An empty report means the panel satisfies the declared
/// overlap bounds.
pub fn validate_probabilistic(observed: &ObservedPanel, bounds: (f64, f64)) -> ProbabilityReport {
    let (lo, hi) = bounds;
    let mut violations = Vec::new();
    for unit in 0..observed.n_units() {
        for time in 0..observed.n_periods() {
            let value = *observed.step_probs.get(unit, time);
            if value < lo || value > hi {
                violations.push(ProbabilityViolation { unit, time, value });
            }
        }
    }
    ProbabilityReport { bounds, violations }
}
