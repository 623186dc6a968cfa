//! Nonparametric estimators of lag-p and weighted lag-(p,q) dynamic causal
//! effects, with the unbiased estimators of their variance upper bounds.
//!
//! A cell estimator at `(i, t)` is the observed outcome times an indicator
//! contrast over the realized window, divided by the adapted propensity of
//! the realized window path. Cells whose window matches neither switch path
//! contribute exact zeros; they are part of the estimator, not missing data.

use serde::Serialize;

use crate::alphabet::TreatmentAlphabet;
use crate::assignment::ObservedPanel;
use crate::error::{Error, Result};
use crate::panel::EffectQuery;
use crate::util::pairwise_sum_by;

/// Index set an estimate averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "level", content = "index", rename_all = "snake_case")]
pub enum Level {
    TimeT(usize),
    UnitI(usize),
    Total,
}

impl Level {
    pub fn name(&self) -> &'static str {
        match self {
            Self::TimeT(_) => "time_t",
            Self::UnitI(_) => "unit_i",
            Self::Total => "total",
        }
    }
}

/// One `(i, t)` cell of the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEstimate {
    pub unit: usize,
    pub time: usize,
    pub tau_hat: f64,
    pub gamma2_hat: f64,
    /// Whether the observed window matched either switch path.
    pub contributing: bool,
}

/// An averaged estimate with its conservative variance-bound estimate.
/// The scaled variance used for inference is `var_bound / n_cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectEstimate {
    pub level: Level,
    pub point: f64,
    pub var_bound: f64,
    pub n_cells: usize,
    pub query: EffectQuery,
}

impl EffectEstimate {
    /// Conservative standard error of the averaged estimator.
    pub fn standard_error(&self) -> f64 {
        (self.var_bound / self.n_cells as f64).sqrt()
    }

    pub fn record(&self, alphabet: &TreatmentAlphabet) -> EffectRecord {
        let (level, index) = match self.level {
            Level::TimeT(t) => ("time_t", Some(t)),
            Level::UnitI(i) => ("unit_i", Some(i)),
            Level::Total => ("total", None),
        };
        EffectRecord {
            level: level.into(),
            index,
            p: self.query.lag(),
            q: self.query.block_len(),
            w: self.query.window().iter().map(|&w| alphabet.label(w).to_owned()).collect(),
            w_tilde: self.query.window_alt().iter().map(|&w| alphabet.label(w).to_owned()).collect(),
            point: self.point,
            var_bound: self.var_bound,
            n_cells: self.n_cells,
        }
    }
}

/// Serializable summary of an [`EffectEstimate`].
#[derive(Debug, Clone, Serialize)]
pub struct EffectRecord {
    pub level: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub p: usize,
    pub q: usize,
    pub w: Vec<String>,
    pub w_tilde: Vec<String>,
    pub point: f64,
    pub var_bound: f64,
    pub n_cells: usize,
}

/// Cell estimator for a pure lag-p query (`q = p + 1`).
pub fn ht_cell(
    observed: &ObservedPanel,
    unit: usize,
    time: usize,
    query: &EffectQuery,
) -> Result<CellEstimate> {
    if !query.is_pure() {
        return Err(Error::InvalidSpec("weighted query passed to ht_cell".into()));
    }
    cell_estimate(observed, unit, time, query)
}

/// Cell estimator for a weighted lag-(p,q) query.
pub fn ht_weighted_cell(
    observed: &ObservedPanel,
    unit: usize,
    time: usize,
    query: &EffectQuery,
) -> Result<CellEstimate> {
    cell_estimate(observed, unit, time, query)
}

/// Cell estimator for any query; dispatches on the query shape.
pub fn cell_estimate(
    observed: &ObservedPanel,
    unit: usize,
    time: usize,
    query: &EffectQuery,
) -> Result<CellEstimate> {
    let p = query.lag();
    if time >= observed.n_periods() || unit >= observed.n_units() {
        return Err(Error::Dimension(format!("cell ({unit}, {time}) outside panel")));
    }
    if time < p {
        return Err(Error::Dimension(format!("lag {p} window does not fit at period {time}")));
    }
    query.validate_for(&observed.alphabet)?;

    let start = time - p;
    let window = &observed.assignments.row(unit)[start..=time];
    let q = query.block_len();
    let block = &window[..q];
    let ind_w = block == query.window();
    let ind_alt = block == query.window_alt();
    if !ind_w && !ind_alt {
        return Ok(CellEstimate { unit, time, tau_hat: 0.0, gamma2_hat: 0.0, contributing: false });
    }

    let weight = if query.is_pure() {
        1.0
    } else {
        query.weights().weight_of(observed.alphabet.len(), &window[q..])
    };
    let prop = observed.observed_window_propensity(unit, start, p + 1);
    if !(prop > 0.0 && prop < 1.0) {
        return Err(Error::ProbabilityBound { unit, time, value: prop });
    }
    let y = *observed.outcomes.get(unit, time);
    let contrast = (ind_w as i8 - ind_alt as i8) as f64;
    let indicator_sum = (ind_w as u8 + ind_alt as u8) as f64;
    Ok(CellEstimate {
        unit,
        time,
        tau_hat: weight * y * contrast / prop,
        gamma2_hat: weight * weight * y * y * indicator_sum / (prop * prop),
        contributing: true,
    })
}

/// Average a collection of cells covering exactly one level's index set.
pub fn average_estimates(
    cells: &[CellEstimate],
    level: Level,
    query: &EffectQuery,
) -> Result<EffectEstimate> {
    if cells.is_empty() {
        return Err(Error::EmptyCells(level.name().into()));
    }
    let distinct = |key: &dyn Fn(&CellEstimate) -> usize| -> bool {
        let mut keys: Vec<usize> = cells.iter().map(key).collect();
        keys.sort_unstable();
        keys.windows(2).all(|w| w[0] != w[1])
    };
    let coverage_ok = match level {
        Level::TimeT(t) => cells.iter().all(|c| c.time == t) && distinct(&|c| c.unit),
        Level::UnitI(i) => cells.iter().all(|c| c.unit == i) && distinct(&|c| c.time),
        Level::Total => {
            let mut keys: Vec<(usize, usize)> = cells.iter().map(|c| (c.unit, c.time)).collect();
            keys.sort_unstable();
            keys.windows(2).all(|w| w[0] != w[1])
        }
    };
    if !coverage_ok {
        return Err(Error::InvalidSpec(format!(
            "cells do not cover the {} index set exactly",
            level.name()
        )));
    }
    let n = cells.len();
    let point = pairwise_sum_by(0..n, &|k| cells[k].tau_hat) / n as f64;
    let var_bound = pairwise_sum_by(0..n, &|k| cells[k].gamma2_hat) / n as f64;
    Ok(EffectEstimate { level, point, var_bound, n_cells: n, query: query.clone() })
}

/// Compute all cells of a level's index set and average them.
pub fn estimate(
    observed: &ObservedPanel,
    query: &EffectQuery,
    level: Level,
) -> Result<EffectEstimate> {
    let n = observed.n_units();
    let t_max = observed.n_periods();
    let p = query.lag();
    if p >= t_max {
        return Err(Error::Dimension(format!("lag {p} with only {t_max} periods")));
    }
    let cells: Vec<CellEstimate> = match level {
        Level::TimeT(t) => {
            (0..n).map(|i| cell_estimate(observed, i, t, query)).collect::<Result<_>>()?
        }
        Level::UnitI(i) => {
            (p..t_max).map(|t| cell_estimate(observed, i, t, query)).collect::<Result<_>>()?
        }
        Level::Total => {
            let mut cells = Vec::with_capacity(n * (t_max - p));
            for i in 0..n {
                for t in p..t_max {
                    cells.push(cell_estimate(observed, i, t, query)?);
                }
            }
            cells
        }
    };
    average_estimates(&cells, level, query)
}

/// Per-period estimates for `t = p..T-1`.
pub fn estimate_by_time(observed: &ObservedPanel, query: &EffectQuery) -> Result<Vec<EffectEstimate>> {
    (query.lag()..observed.n_periods())
        .map(|t| estimate(observed, query, Level::TimeT(t)))
        .collect()
}

/// Per-unit estimates.
pub fn estimate_by_unit(observed: &ObservedPanel, query: &EffectQuery) -> Result<Vec<EffectEstimate>> {
    (0..observed.n_units()).map(|i| estimate(observed, query, Level::UnitI(i))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{Treatment, TreatmentAlphabet};
    use crate::grid::Grid;
    use crate::panel::WeightSpec;

    const W1: Treatment = Treatment(1);
    const W0: Treatment = Treatment(0);

    fn observed(
        w: Vec<Vec<Treatment>>,
        y: Vec<Vec<f64>>,
        p: Vec<Vec<f64>>,
    ) -> ObservedPanel {
        ObservedPanel::new(
            TreatmentAlphabet::binary(),
            Grid::from_rows(w).unwrap(),
            Grid::from_rows(y).unwrap(),
            Grid::from_rows(p).unwrap(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_cell_hand_value() {
        // N=1, T=1, p=0, Bernoulli(0.5), y=2 under w=1, query 1 vs 0
        let obs = observed(vec![vec![W1]], vec![vec![2.0]], vec![vec![0.5]]);
        let q = EffectQuery::contemporaneous(W1, W0);
        let c = ht_cell(&obs, 0, 0, &q).unwrap();
        assert_eq!(c.tau_hat, 4.0);
        assert_eq!(c.gamma2_hat, 16.0);
        assert!(c.contributing);
    }

    #[test]
    fn unmatched_window_is_zero() {
        let obs = observed(
            vec![vec![W1, W1]],
            vec![vec![1.0, 5.0]],
            vec![vec![0.5, 0.5]],
        );
        // window (1,1) matches neither (1,0) nor (0,0)
        let q = EffectQuery::lag_p(vec![W1, W0], vec![W0, W0]).unwrap();
        let c = ht_cell(&obs, 0, 1, &q).unwrap();
        assert_eq!((c.tau_hat, c.gamma2_hat, c.contributing), (0.0, 0.0, false));
    }

    #[test]
    fn weighted_cell_applies_half_weight() {
        // uniform weights, binary, q=1, p=1: factor 1/2 on the indicator
        let obs = observed(
            vec![vec![W1, W0]],
            vec![vec![0.0, 3.0]],
            vec![vec![0.25, 0.5]],
        );
        let q = EffectQuery::weighted(1, vec![W1], vec![W0], WeightSpec::Uniform).unwrap();
        let c = ht_weighted_cell(&obs, 0, 1, &q).unwrap();
        let prop = 0.25 * 0.5;
        assert!((c.tau_hat - 0.5 * 3.0 / prop).abs() < 1e-12);
        assert!((c.gamma2_hat - 0.25 * 9.0 / (prop * prop)).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_continuation_kills_cell() {
        let obs = observed(
            vec![vec![W1, W1]],
            vec![vec![0.0, 3.0]],
            vec![vec![0.5, 0.5]],
        );
        // all weight on continuation (0); realized continuation is (1)
        let q = EffectQuery::weighted(1, vec![W1], vec![W0], WeightSpec::Table(vec![1.0, 0.0]))
            .unwrap();
        let c = ht_weighted_cell(&obs, 0, 1, &q).unwrap();
        assert_eq!((c.tau_hat, c.gamma2_hat), (0.0, 0.0));
    }

    #[test]
    fn averages_are_plain_means() {
        let cells = vec![
            CellEstimate { unit: 0, time: 0, tau_hat: 4.0, gamma2_hat: 16.0, contributing: true },
            CellEstimate { unit: 1, time: 0, tau_hat: 0.0, gamma2_hat: 0.0, contributing: false },
        ];
        let q = EffectQuery::contemporaneous(W1, W0);
        let e = average_estimates(&cells, Level::TimeT(0), &q).unwrap();
        assert_eq!(e.point, 2.0);
        assert_eq!(e.var_bound, 8.0);
        assert_eq!(e.n_cells, 2);
    }

    #[test]
    fn all_noncontributing_average_is_zero() {
        let cells: Vec<CellEstimate> = (0..3)
            .map(|i| CellEstimate { unit: i, time: 2, tau_hat: 0.0, gamma2_hat: 0.0, contributing: false })
            .collect();
        let q = EffectQuery::contemporaneous(W1, W0);
        let e = average_estimates(&cells, Level::TimeT(2), &q).unwrap();
        assert_eq!((e.point, e.var_bound), (0.0, 0.0));
    }

    #[test]
    fn coverage_validated() {
        let q = EffectQuery::contemporaneous(W1, W0);
        assert!(matches!(
            average_estimates(&[], Level::Total, &q),
            Err(Error::EmptyCells(_))
        ));
        let dup = vec![
            CellEstimate { unit: 0, time: 1, tau_hat: 1.0, gamma2_hat: 1.0, contributing: true },
            CellEstimate { unit: 0, time: 1, tau_hat: 1.0, gamma2_hat: 1.0, contributing: true },
        ];
        assert!(average_estimates(&dup, Level::Total, &q).is_err());
    }

    #[test]
    fn estimate_levels_share_cells() {
        let obs = observed(
            vec![vec![W1, W0], vec![W0, W1]],
            vec![vec![1.0, 2.0], vec![3.0, 4.0]],
            vec![vec![0.5, 0.5], vec![0.5, 0.5]],
        );
        let q = EffectQuery::contemporaneous(W1, W0);
        let total = estimate(&obs, &q, Level::Total).unwrap();
        let by_time = estimate_by_time(&obs, &q).unwrap();
        let mean_of_times: f64 =
            by_time.iter().map(|e| e.point).sum::<f64>() / by_time.len() as f64;
        assert!((total.point - mean_of_times).abs() < 1e-12);
        assert_eq!(total.n_cells, 4);
    }
}
