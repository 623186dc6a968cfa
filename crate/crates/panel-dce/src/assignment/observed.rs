use serde::{Deserialize, Serialize};

use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// What a real experiment logs: realized assignments, realized outcomes, the
/// probability of each realized label at its step, and optionally the labels
/// of units sharing one draw per period.
///
/// Under an individualistic mechanism the product of logged step
/// probabilities over a window is exactly the adapted propensity score of the
/// observed window path, which is all the point estimators need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedPanel {
    pub alphabet: TreatmentAlphabet,
    pub assignments: Grid<Treatment>,
    pub outcomes: Grid<f64>,
    pub step_probs: Grid<f64>,
    pub group_ids: Option<Grid<u32>>,
}

impl ObservedPanel {
    pub fn new(
        alphabet: TreatmentAlphabet,
        assignments: Grid<Treatment>,
        outcomes: Grid<f64>,
        step_probs: Grid<f64>,
        group_ids: Option<Grid<u32>>,
    ) -> Result<Self> {
        let (n, t) = (assignments.n_rows(), assignments.n_cols());
        for (name, rows, cols) in [
            ("outcomes", outcomes.n_rows(), outcomes.n_cols()),
            ("step_probs", step_probs.n_rows(), step_probs.n_cols()),
        ] {
            if rows != n || cols != t {
                return Err(Error::Dimension(format!("{name} is {rows}x{cols}, want {n}x{t}")));
            }
        }
        if let Some(g) = &group_ids {
            if g.n_rows() != n || g.n_cols() != t {
                return Err(Error::Dimension("group_ids shape mismatch".into()));
            }
        }
        for i in 0..n {
            alphabet.check_path(assignments.row(i))?;
            for time in 0..t {
                let p = *step_probs.get(i, time);
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::ProbabilityBound { unit: i, time, value: p });
                }
            }
        }
        if let Some(g) = &group_ids {
            // shared draw => shared label
            let mut seen: std::collections::HashMap<u32, Treatment> = std::collections::HashMap::new();
            for time in 0..t {
                seen.clear();
                for i in 0..n {
                    let gid = *g.get(i, time);
                    let w = *assignments.get(i, time);
                    match seen.entry(gid) {
                        std::collections::hash_map::Entry::Vacant(e) => {
                            e.insert(w);
                        }
                        std::collections::hash_map::Entry::Occupied(e) => {
                            if *e.get() != w {
                                return Err(Error::InvalidSpec(format!(
                                    "units sharing group {gid} at period {time} differ in assignment"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(Self { alphabet, assignments, outcomes, step_probs, group_ids })
    }

    pub fn n_units(&self) -> usize {
        self.assignments.n_rows()
    }

    pub fn n_periods(&self) -> usize {
        self.assignments.n_cols()
    }

    /// Adapted propensity of the observed window `[start, start+len)` for one
    /// unit: the product of logged per-step probabilities (Lemma-1
    /// factorization evaluated along the realized path).
    pub fn observed_window_propensity(&self, unit: usize, start: usize, len: usize) -> f64 {
        self.step_probs.row(unit)[start..start + len].iter().product()
    }

    /// Share of cells assigned the given label.
    pub fn treatment_share(&self, label: Treatment) -> f64 {
        let total = (self.n_units() * self.n_periods()) as f64;
        self.assignments.values().iter().filter(|&&w| w == label).count() as f64 / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (Grid<Treatment>, Grid<f64>, Grid<f64>) {
        let w = Grid::from_rows(vec![vec![Treatment(1), Treatment(0)]]).unwrap();
        let y = Grid::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        let p = Grid::from_rows(vec![vec![0.5, 0.4]]).unwrap();
        (w, y, p)
    }

    #[test]
    fn window_propensity_is_step_product() {
        let (w, y, p) = tiny();
        let obs = ObservedPanel::new(TreatmentAlphabet::binary(), w, y, p, None).unwrap();
        assert!((obs.observed_window_propensity(0, 0, 2) - 0.2).abs() < 1e-15);
        assert_eq!(obs.treatment_share(Treatment(1)), 0.5);
    }

    #[test]
    fn degenerate_step_prob_rejected() {
        let (w, y, _) = tiny();
        let p = Grid::from_rows(vec![vec![1.0, 0.4]]).unwrap();
        assert!(matches!(
            ObservedPanel::new(TreatmentAlphabet::binary(), w, y, p, None),
            Err(Error::ProbabilityBound { unit: 0, time: 0, .. })
        ));
    }

    #[test]
    fn grouped_units_must_share_labels() {
        let w = Grid::from_rows(vec![
            vec![Treatment(1), Treatment(0)],
            vec![Treatment(0), Treatment(0)],
        ])
        .unwrap();
        let y = Grid::filled(2, 2, 0.0);
        let p = Grid::filled(2, 2, 0.5);
        let g = Grid::from_rows(vec![vec![0u32, 0], vec![0, 1]]).unwrap();
        assert!(ObservedPanel::new(TreatmentAlphabet::binary(), w, y, p, Some(g)).is_err());
    }
}
