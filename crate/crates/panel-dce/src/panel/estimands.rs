//! Ground-truth causal estimands, computed directly from a potential outcome
//! panel. These are the oracles the nonparametric estimators are judged
//! against.

use crate::alphabet::Treatment;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::util::pairwise_mean;

use super::table::for_each_path;
use super::{EffectQuery, PotentialOutcomePanel};

/// `tau_{i,t}(w, w~; p)`: outcome difference between the two switch paths
/// appended to the realized prefix. Requires a pure query (`q = p + 1`).
pub fn true_lag_p_effect(
    panel: &PotentialOutcomePanel,
    prefix: &[Treatment],
    unit: usize,
    time: usize,
    query: &EffectQuery,
) -> Result<f64> {
    if !query.is_pure() {
        return Err(Error::InvalidSpec("weighted query passed to the pure lag-p estimand".into()));
    }
    true_weighted_effect(panel, prefix, unit, time, query)
}

/// Weighted lag-(p,q) effect: `sum_v a_v { Y(prefix, w, v) - Y(prefix, w~, v) }`.
/// Handles pure queries as the degenerate empty-continuation case.
pub fn true_weighted_effect(
    panel: &PotentialOutcomePanel,
    prefix: &[Treatment],
    unit: usize,
    time: usize,
    query: &EffectQuery,
) -> Result<f64> {
    let p = query.lag();
    if time < p {
        return Err(Error::Dimension(format!("lag {p} window does not fit at period {time}")));
    }
    if prefix.len() != time - p {
        return Err(Error::PathLength { expected: time - p, got: prefix.len() });
    }
    query.validate_for(panel.alphabet())?;
    let k = panel.alphabet().len();
    let cont_len = query.continuation_len();

    let mut path = Vec::with_capacity(time + 1);
    let mut total = 0.0;
    let assemble = |block: &[Treatment], cont: &[Treatment], path: &mut Vec<Treatment>| {
        path.clear();
        path.extend_from_slice(prefix);
        path.extend_from_slice(block);
        path.extend_from_slice(cont);
    };
    let mut err = None;
    for_each_path(k, cont_len, |packed, cont| {
        if err.is_some() {
            return;
        }
        let a = query.weights().weight(k, cont_len, packed);
        if a == 0.0 {
            return;
        }
        assemble(query.window(), cont, &mut path);
        let y_w = match panel.evaluate(unit, time, &path) {
            Ok(v) => v,
            Err(e) => return err = Some(e),
        };
        assemble(query.window_alt(), cont, &mut path);
        let y_alt = match panel.evaluate(unit, time, &path) {
            Ok(v) => v,
            Err(e) => return err = Some(e),
        };
        total += a * (y_w - y_alt);
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// True time-t, unit-i and total averages of the queried effect, using the
/// observed assignment panel for the conditioning prefixes.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageEffects {
    /// Per-period averages for `t = p..T-1` (index `j` holds period `p + j`).
    pub time_t: Vec<f64>,
    /// Per-unit averages over `t = p..T-1`.
    pub unit_i: Vec<f64>,
    /// Grand mean over the same cells.
    pub total: f64,
}

pub fn true_average_effects(
    panel: &PotentialOutcomePanel,
    observed_assignments: &Grid<Treatment>,
    query: &EffectQuery,
) -> Result<AverageEffects> {
    let n = panel.n_units();
    let t_max = panel.n_periods();
    let p = query.lag();
    if observed_assignments.n_rows() != n || observed_assignments.n_cols() != t_max {
        return Err(Error::Dimension("observed assignments do not match the panel".into()));
    }
    if p >= t_max {
        return Err(Error::Dimension(format!("lag {p} with only {t_max} periods")));
    }
    let mut cells = Grid::filled(n, t_max - p, 0.0);
    for i in 0..n {
        let row = observed_assignments.row(i);
        for t in p..t_max {
            let e = true_weighted_effect(panel, &row[..t - p], i, t, query)?;
            cells.set(i, t - p, e);
        }
    }
    let time_t = cells.col_means();
    let unit_i = cells.row_means();
    Ok(AverageEffects { time_t, unit_i, total: pairwise_mean(cells.values()) })
}
