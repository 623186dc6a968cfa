//! Inference on dynamic causal effects: conservative weak-null tests backed
//! by the finite-population CLTs, and exact randomization tests of the sharp
//! null of no effect for any unit or period.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::assignment::rng::domain;
use crate::assignment::{derive_seed, draw_panel_grouped, AssignmentMechanism, ObservedPanel};
use crate::error::{Error, Result};
use crate::ht::{estimate, EffectEstimate, Level};
use crate::panel::{EffectQuery, PotentialOutcomePanel};
use crate::util::sorted_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    TwoSided,
    Greater,
    Less,
}

/// Weak-null test based on the normal approximation with the conservative
/// variance-bound estimate.
#[derive(Debug, Clone)]
pub struct ConservativeTestResult {
    pub estimate: EffectEstimate,
    pub null_value: f64,
    pub z_stat: f64,
    pub p_value: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub alpha: f64,
    pub sidedness: Sidedness,
}

/// Two-sided conservative test of `H0: estimand = null_value`.
pub fn conservative_test(
    estimate: &EffectEstimate,
    null_value: f64,
    alpha: f64,
) -> Result<ConservativeTestResult> {
    conservative_test_sided(estimate, null_value, alpha, Sidedness::TwoSided)
}

pub fn conservative_test_sided(
    estimate: &EffectEstimate,
    null_value: f64,
    alpha: f64,
    sidedness: Sidedness,
) -> Result<ConservativeTestResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidSpec(format!("alpha {alpha} outside (0, 1)")));
    }
    if estimate.var_bound < 0.0 {
        return Err(Error::Numerical("negative variance bound".into()));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let se = estimate.standard_error();
    let (z, p_value) = if se == 0.0 {
        (0.0, 1.0)
    } else {
        let z = (estimate.point - null_value) / se;
        let p = match sidedness {
            Sidedness::TwoSided => 2.0 * (1.0 - normal.cdf(z.abs())),
            Sidedness::Greater => 1.0 - normal.cdf(z),
            Sidedness::Less => normal.cdf(z),
        };
        (z, p.clamp(0.0, 1.0))
    };
    let crit = normal.inverse_cdf(1.0 - alpha / 2.0);
    Ok(ConservativeTestResult {
        estimate: estimate.clone(),
        null_value,
        z_stat: z,
        p_value,
        ci_lower: estimate.point - crit * se,
        ci_upper: estimate.point + crit * se,
        alpha,
        sidedness,
    })
}

/// Randomization test of the sharp null via redraws of the assignment panel.
#[derive(Debug, Clone)]
pub struct RandomizationTestResult {
    pub observed_stat: f64,
    pub null_draws: Vec<f64>,
    pub p_value: f64,
    pub seed: u64,
    pub replicates: usize,
    pub sidedness: Sidedness,
}

/// Exact test of the sharp null `tau_{i,t}(w, w~; p) = 0` for all `i, t`.
///
/// The sharp null reveals every needed potential outcome
/// (`Y_{i,t}(prefix, anything) = y^obs_{i,t}`), so each replicate redraws the
/// whole assignment panel from the known mechanism with outcomes imputed at
/// their observed values, recomputes the chosen statistic, and the p-value is
/// the add-one tail frequency. Group labels, when present, are respected so
/// paired units share redraws. Deterministic given `seed`.
pub fn fisher_randomization_test(
    observed: &ObservedPanel,
    mech: &AssignmentMechanism,
    query: &EffectQuery,
    statistic: Level,
    replicates: usize,
    seed: u64,
) -> Result<RandomizationTestResult> {
    fisher_randomization_test_sided(observed, mech, query, statistic, replicates, seed, Sidedness::TwoSided)
}

pub fn fisher_randomization_test_sided(
    observed: &ObservedPanel,
    mech: &AssignmentMechanism,
    query: &EffectQuery,
    statistic: Level,
    replicates: usize,
    seed: u64,
    sidedness: Sidedness,
) -> Result<RandomizationTestResult> {
    if replicates < 1 {
        return Err(Error::InvalidSpec("need at least one replicate".into()));
    }
    if mech.alphabet() != &observed.alphabet {
        return Err(Error::InvalidSpec("mechanism and panel alphabets differ".into()));
    }
    let observed_stat = estimate(observed, query, statistic)?.point;

    // Under the sharp null the imputed panel is path-invariant at the
    // observed outcomes; redraws feed these imputed values to any
    // history-dependent mechanism.
    let null_panel = PotentialOutcomePanel::path_invariant(
        observed.outcomes.clone(),
        observed.alphabet.clone(),
    );
    let groups = observed.group_ids.as_ref();
    let null_draws: Vec<f64> = crate::par::try_map_indexed(replicates, |b| {
        let rep_seed = derive_seed(seed, &[domain::FISHER, b as u64]);
        let redraw = draw_panel_grouped(mech, &null_panel, groups, rep_seed)?;
        Ok(estimate(&redraw, query, statistic)?.point)
    })?;

    let exceed = null_draws
        .iter()
        .filter(|&&d| match sidedness {
            Sidedness::TwoSided => d.abs() >= observed_stat.abs(),
            Sidedness::Greater => d >= observed_stat,
            Sidedness::Less => d <= observed_stat,
        })
        .count();
    let p_value = (1 + exceed) as f64 / (replicates + 1) as f64;
    Ok(RandomizationTestResult {
        observed_stat,
        null_draws,
        p_value,
        seed,
        replicates,
        sidedness,
    })
}

/// Recompute the add-one p-value for a different observed statistic against
/// the same null draws.
pub fn randomization_p_value(null_draws: &[f64], observed_stat: f64, sidedness: Sidedness) -> f64 {
    let exceed = null_draws
        .iter()
        .filter(|&&d| match sidedness {
            Sidedness::TwoSided => d.abs() >= observed_stat.abs(),
            Sidedness::Greater => d >= observed_stat,
            Sidedness::Less => d <= observed_stat,
        })
        .count();
    (1 + exceed) as f64 / (null_draws.len() + 1) as f64
}

const QUANTILE_GRID: [f64; 11] =
    [0.01, 0.025, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.975, 0.99];

#[derive(Debug, Clone, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Bin counts and quantiles of a randomization distribution, for plotting.
#[derive(Debug, Clone, Serialize)]
pub struct RandomizationDistribution {
    pub bins: Vec<HistogramBin>,
    pub quantiles: Vec<(f64, f64)>,
    pub observed_stat: f64,
}

pub fn randomization_distribution(
    result: &RandomizationTestResult,
    n_bins: Option<usize>,
) -> RandomizationDistribution {
    let draws = &result.null_draws;
    let n = draws.len();
    let n_bins = n_bins.unwrap_or_else(|| ((n as f64).sqrt().ceil() as usize).clamp(1, 100));
    let lo = draws.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = draws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let mut bins: Vec<HistogramBin> = (0..n_bins)
        .map(|b| HistogramBin {
            lower: lo + span * b as f64 / n_bins as f64,
            upper: lo + span * (b + 1) as f64 / n_bins as f64,
            count: 0,
        })
        .collect();
    for &d in draws {
        let idx = (((d - lo) / span) * n_bins as f64) as usize;
        bins[idx.min(n_bins - 1)].count += 1;
    }
    let mut sorted = draws.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let quantiles =
        QUANTILE_GRID.iter().map(|&q| (q, sorted_quantile(&sorted, q))).collect();
    RandomizationDistribution { bins, quantiles, observed_stat: result.observed_stat }
}

/// Build the path-invariant sharp-null imputation panel for an observed
/// panel. Exposed for test statistics that need the imputed outcomes.
pub fn sharp_null_panel(observed: &ObservedPanel) -> PotentialOutcomePanel {
    PotentialOutcomePanel::path_invariant(observed.outcomes.clone(), observed.alphabet.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{Treatment, TreatmentAlphabet};
    use crate::grid::Grid;
    use crate::panel::WeightSpec;

    const W1: Treatment = Treatment(1);
    const W0: Treatment = Treatment(0);

    fn estimate_stub(point: f64, var_bound: f64, n_cells: usize) -> EffectEstimate {
        EffectEstimate {
            level: Level::Total,
            point,
            var_bound,
            n_cells,
            query: EffectQuery::contemporaneous(W1, W0),
        }
    }

    #[test]
    fn null_point_gives_unit_p() {
        let r = conservative_test(&estimate_stub(1.5, 4.0, 16), 1.5, 0.05).unwrap();
        assert_eq!(r.z_stat, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_two_normal_values() {
        // point 2, var_bound/n = 1, null 0: z = 2, p ~ 0.0455, CI ~ (0.04, 3.96)
        let r = conservative_test(&estimate_stub(2.0, 16.0, 16), 0.0, 0.05).unwrap();
        assert!((r.z_stat - 2.0).abs() < 1e-12);
        assert!((r.p_value - 0.045500).abs() < 5e-5);
        assert!((r.ci_lower - 0.040036).abs() < 5e-5);
        assert!((r.ci_upper - 3.959964).abs() < 5e-5);
    }

    #[test]
    fn zero_variance_bound_degenerates() {
        let r = conservative_test(&estimate_stub(0.7, 0.0, 8), 0.0, 0.05).unwrap();
        assert_eq!(r.z_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!((r.ci_lower, r.ci_upper), (0.7, 0.7));
    }

    #[test]
    fn one_sided_halves() {
        let two = conservative_test(&estimate_stub(2.0, 16.0, 16), 0.0, 0.05).unwrap();
        let gt = conservative_test_sided(&estimate_stub(2.0, 16.0, 16), 0.0, 0.05, Sidedness::Greater)
            .unwrap();
        assert!((gt.p_value - two.p_value / 2.0).abs() < 1e-12);
    }

    fn constant_observed() -> (ObservedPanel, AssignmentMechanism) {
        // outcomes all zero: every statistic is identically zero
        let w = Grid::from_rows(vec![vec![W1, W0], vec![W0, W1]]).unwrap();
        let y = Grid::filled(2, 2, 0.0);
        let p = Grid::filled(2, 2, 0.5);
        let obs = ObservedPanel::new(TreatmentAlphabet::binary(), w, y, p, None).unwrap();
        let mech = AssignmentMechanism::bernoulli_binary(0.5).unwrap();
        (obs, mech)
    }

    #[test]
    fn degenerate_distribution_gives_p_one() {
        let (obs, mech) = constant_observed();
        let q = EffectQuery::contemporaneous(W1, W0);
        let r = fisher_randomization_test(&obs, &mech, &q, Level::Total, 64, 5).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.null_draws.len(), 64);
    }

    #[test]
    fn p_value_monotone_in_observed_stat() {
        let draws = vec![-2.0, -1.0, 0.5, 1.5, 3.0];
        let mut last = 1.0;
        for stat in [0.1, 0.6, 1.6, 2.5, 3.5] {
            let p = randomization_p_value(&draws, stat, Sidedness::TwoSided);
            assert!(p <= last);
            last = p;
        }
    }

    #[test]
    fn needs_replicates_and_matching_alphabet() {
        let (obs, mech) = constant_observed();
        let q = EffectQuery::contemporaneous(W1, W0);
        assert!(fisher_randomization_test(&obs, &mech, &q, Level::Total, 0, 1).is_err());
    }

    #[test]
    fn histogram_single_draw_single_bin() {
        let r = RandomizationTestResult {
            observed_stat: 0.3,
            null_draws: vec![1.0],
            p_value: 1.0,
            seed: 0,
            replicates: 1,
            sidedness: Sidedness::TwoSided,
        };
        let d = randomization_distribution(&r, None);
        assert_eq!(d.bins.len(), 1);
        assert_eq!(d.bins[0].count, 1);
    }

    #[test]
    fn quantiles_match_sort_oracle() {
        let draws: Vec<f64> = (0..101).map(|k| (k as f64 * 0.37).sin()).collect();
        let r = RandomizationTestResult {
            observed_stat: 0.0,
            null_draws: draws.clone(),
            p_value: 1.0,
            seed: 0,
            replicates: draws.len(),
            sidedness: Sidedness::TwoSided,
        };
        let d = randomization_distribution(&r, Some(10));
        let mut sorted = draws;
        sorted.sort_by(|a, b| a.total_cmp(b));
        let median = d.quantiles.iter().find(|(q, _)| *q == 0.5).unwrap().1;
        assert_eq!(median, sorted[50]);
        let total: usize = d.bins.iter().map(|b| b.count).sum();
        assert_eq!(total, 101);
    }

    #[test]
    fn symmetric_null_centers_near_zero() {
        // Bernoulli(0.5), symmetric outcomes: randomization distribution
        // median within Monte Carlo error of 0
        let w = Grid::from_rows(vec![vec![W1, W0, W1, W0]; 8]).unwrap();
        let mut y = Grid::filled(8, 4, 0.0);
        for i in 0..8 {
            for t in 0..4 {
                y.set(i, t, ((i * 7 + t * 3) % 5) as f64 - 2.0);
            }
        }
        let p = Grid::filled(8, 4, 0.5);
        let obs = ObservedPanel::new(TreatmentAlphabet::binary(), w, y, p, None).unwrap();
        let mech = AssignmentMechanism::bernoulli_binary(0.5).unwrap();
        let q = EffectQuery::weighted(1, vec![W1], vec![W0], WeightSpec::Uniform).unwrap();
        let r = fisher_randomization_test(&obs, &mech, &q, Level::Total, 4000, 11).unwrap();
        let d = randomization_distribution(&r, None);
        let median = d.quantiles.iter().find(|(q, _)| *q == 0.5).unwrap().1;
        let spread = d.quantiles.iter().find(|(q, _)| *q == 0.75).unwrap().1
            - d.quantiles.iter().find(|(q, _)| *q == 0.25).unwrap().1;
        assert!(median.abs() < spread, "median {median}, iqr {spread}");
    }
}
