//! Monte Carlo harness for the simulation study: AR(1) populations with
//! normal or Cauchy errors, Bernoulli designs over a `(phi, p_treat)` grid,
//! size tables, power curves and QQ exports.
//!
//! Finite-population discipline: each grid cell generates its error matrix
//! once; replications redraw only the assignment panel. Replication `r` of
//! cell `c` is keyed by `(seed, c, r)`, so any cell is independently
//! re-runnable and results do not depend on scheduling.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::alphabet::{Treatment, TreatmentAlphabet};
use crate::assignment::rng::{domain, CounterRng};
use crate::assignment::{derive_seed, draw_panel, AssignmentMechanism};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::ht::{estimate, Level};
use crate::inference::conservative_test;
use crate::panel::{ArPanelSpec, EffectQuery, PotentialOutcomePanel, WeightSpec};
use crate::util::pearson_correlation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorDist {
    Normal,
    Cauchy,
}

/// Which averaged estimator the harness tests. `TimeT` evaluates at the last
/// period, `UnitI` at the first unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimLevel {
    TimeT,
    UnitI,
    Total,
}

impl SimLevel {
    fn to_level(self, n_periods: usize) -> Level {
        match self {
            Self::TimeT => Level::TimeT(n_periods - 1),
            Self::UnitI => Level::UnitI(0),
            Self::Total => Level::Total,
        }
    }

    fn discriminant(self) -> u64 {
        match self {
            Self::TimeT => 0,
            Self::UnitI => 1,
            Self::Total => 2,
        }
    }
}

/// Cells are keyed by their parameters, not their grid position, so running
/// a sub-grid reproduces exactly the same per-cell streams.
fn cell_tag(phi: f64, beta: f64, p_treat: f64, lag: usize, level: SimLevel) -> u64 {
    derive_seed(
        0x5ce11,
        &[phi.to_bits(), beta.to_bits(), p_treat.to_bits(), lag as u64, level.discriminant()],
    )
}

/// Full factorial simulation design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimDesign {
    pub n_units: usize,
    pub n_periods: usize,
    pub phi_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub p_treat_grid: Vec<f64>,
    pub error_dist: ErrorDist,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl SimDesign {
    fn validate(&self) -> Result<()> {
        if self.n_units == 0 || self.n_periods == 0 {
            return Err(Error::InvalidSpec("empty panel dimensions".into()));
        }
        if self.phi_grid.is_empty() || self.beta_grid.is_empty() || self.p_treat_grid.is_empty() {
            return Err(Error::InvalidSpec("empty parameter grid".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidSpec("need at least one replication".into()));
        }
        if self.p_treat_grid.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidSpec("treatment probabilities outside (0,1)".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec("alpha outside (0,1)".into()));
        }
        Ok(())
    }
}

/// The AR(1) population for one cell: `phi_{i,t,1} = phi`, `beta_{i,t,0} =
/// beta`, everything else zero; errors drawn once from the chosen
/// distribution and frozen.
pub fn generate_design_panel(
    design: &SimDesign,
    phi: f64,
    beta: f64,
    panel_seed: u64,
) -> Result<ArPanelSpec> {
    let (n, t) = (design.n_units, design.n_periods);
    let mut eps = Grid::filled(n, t, 0.0);
    for i in 0..n {
        for s in 0..t {
            let mut rng = CounterRng::from_tags(panel_seed, &[domain::PANEL_ERRORS, i as u64, s as u64]);
            let e = match design.error_dist {
                ErrorDist::Normal => rng.sample(StandardNormal),
                ErrorDist::Cauchy => {
                    Cauchy::new(0.0, 1.0).expect("unit cauchy").sample(&mut rng)
                }
            };
            eps.set(i, s, e);
        }
    }
    ArPanelSpec::ar1(TreatmentAlphabet::binary(), n, t, phi, beta, eps)
}

/// Query tested at lag `p`: the pure contemporaneous contrast at `p = 0`,
/// the uniformly weighted single-period switch at deeper lags.
pub fn lag_query(p: usize) -> EffectQuery {
    if p == 0 {
        EffectQuery::contemporaneous(Treatment(1), Treatment(0))
    } else {
        EffectQuery::weighted(p, vec![Treatment(1)], vec![Treatment(0)], WeightSpec::Uniform)
            .expect("single-period switch block is always valid")
    }
}

/// True value of the tested estimand under the AR(1) design: the lag-p
/// response is `phi^p * beta`.
pub fn true_design_effect(phi: f64, beta: f64, p: usize) -> f64 {
    phi.powi(p as i32) * beta
}

/// One cell of a rejection-rate table.
#[derive(Debug, Clone, Serialize)]
pub struct RateCell {
    pub phi: f64,
    pub beta: f64,
    pub p_treat: f64,
    pub rejection_rate: f64,
    /// Monte Carlo standard error `sqrt(r (1-r) / R)`.
    pub mc_se: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimReport {
    pub level: SimLevel,
    pub lag: usize,
    pub alpha: f64,
    pub cells: Vec<RateCell>,
}

/// Null rejection rates over the `(phi, p_treat)` grid. Requires a
/// pure-null design (`beta_grid == [0]`).
pub fn size_table(design: &SimDesign, level: SimLevel, lag: usize) -> Result<SimReport> {
    if design.beta_grid != [0.0] {
        return Err(Error::InvalidSpec("size tables need beta_grid == [0.0]".into()));
    }
    rate_table(design, level, lag)
}

/// Rejection rates over the full `(beta, phi, p_treat)` grid.
pub fn power_curve(design: &SimDesign, level: SimLevel, lag: usize) -> Result<SimReport> {
    rate_table(design, level, lag)
}

fn rate_table(design: &SimDesign, level: SimLevel, lag: usize) -> Result<SimReport> {
    design.validate()?;
    if lag >= design.n_periods {
        return Err(Error::Dimension(format!(
            "lag {lag} with {} periods",
            design.n_periods
        )));
    }
    let query = lag_query(lag);
    let stat_level = level.to_level(design.n_periods);
    let mut cells = Vec::new();
    for &beta in &design.beta_grid {
        for &phi in &design.phi_grid {
            for &p_treat in &design.p_treat_grid {
                let tag = cell_tag(phi, beta, p_treat, lag, level);
                let rate =
                    run_rejection_cell(design, phi, beta, p_treat, &query, stat_level, tag)?;
                cells.push(RateCell {
                    phi,
                    beta,
                    p_treat,
                    rejection_rate: rate,
                    mc_se: (rate * (1.0 - rate) / design.replications as f64).sqrt(),
                    replications: design.replications,
                });
            }
        }
    }
    Ok(SimReport { level, lag, alpha: design.alpha, cells })
}

fn run_rejection_cell(
    design: &SimDesign,
    phi: f64,
    beta: f64,
    p_treat: f64,
    query: &EffectQuery,
    stat_level: Level,
    tag: u64,
) -> Result<f64> {
    let panel_seed = derive_seed(design.seed, &[domain::SIM_PANEL, tag]);
    let spec = generate_design_panel(design, phi, beta, panel_seed)?;
    let panel = PotentialOutcomePanel::from(spec);
    let mech = AssignmentMechanism::bernoulli_binary(p_treat)?;
    let alpha = design.alpha;
    let rejections: Vec<u8> = crate::par::try_map_indexed(design.replications, |r| {
        let rep_seed = derive_seed(design.seed, &[domain::SIM_REP, tag, r as u64]);
        let observed = draw_panel(&mech, &panel, rep_seed)?;
        let est = estimate(&observed, query, stat_level)?;
        let test = conservative_test(&est, 0.0, alpha)?;
        Ok(u8::from(test.p_value < alpha))
    })?;
    // integer accumulation: bit-deterministic regardless of scheduling
    let count: u64 = rejections.iter().map(|&x| x as u64).sum();
    Ok(count as f64 / design.replications as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct QqCell {
    pub phi: f64,
    pub p_treat: f64,
    /// Sorted standardized estimates `(tau_hat - tau) / se_hat`.
    pub sample_quantiles: Vec<f64>,
    /// Matching standard normal quantiles `Phi^-1((k+0.5)/R)`.
    pub normal_quantiles: Vec<f64>,
    pub correlation: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct QqReport {
    pub level: SimLevel,
    pub lag: usize,
    pub cells: Vec<QqCell>,
}

/// Standardized-estimate samples paired with normal quantiles, under the
/// null design (`beta_grid == [0]`).
pub fn qq_export(design: &SimDesign, level: SimLevel, lag: usize) -> Result<QqReport> {
    if design.beta_grid != [0.0] {
        return Err(Error::InvalidSpec("qq exports need beta_grid == [0.0]".into()));
    }
    design.validate()?;
    let query = lag_query(lag);
    let stat_level = level.to_level(design.n_periods);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let r_total = design.replications;
    let normal_quantiles: Vec<f64> =
        (0..r_total).map(|k| normal.inverse_cdf((k as f64 + 0.5) / r_total as f64)).collect();

    let mut cells = Vec::new();
    let mut cell_index = 0u64;
    for &phi in &design.phi_grid {
        for &p_treat in &design.p_treat_grid {
            let panel_seed = derive_seed(design.seed, &[domain::SIM_PANEL, cell_index]);
            let spec = generate_design_panel(design, phi, 0.0, panel_seed)?;
            let panel = PotentialOutcomePanel::from(spec);
            let mech = AssignmentMechanism::bernoulli_binary(p_treat)?;
            let draws: Vec<f64> = crate::par::try_map_indexed(r_total, |r| {
                let rep_seed = derive_seed(design.seed, &[domain::SIM_REP, cell_index, r as u64]);
                let observed = draw_panel(&mech, &panel, rep_seed)?;
                let est = estimate(&observed, &query, stat_level)?;
                let se = est.standard_error();
                Ok(if se > 0.0 { est.point / se } else { f64::NAN })
            })?;
            cells.push(finish_qq_cell(draws, &normal_quantiles, phi, p_treat));
            cell_index += 1;
        }
    }
    Ok(QqReport { level, lag, cells })
}

/// Sort the standardized draws and attach quantiles; constant or undefined
/// samples are flagged degenerate instead of reporting a fake correlation.
fn finish_qq_cell(mut draws: Vec<f64>, normal_quantiles: &[f64], phi: f64, p_treat: f64) -> QqCell {
    let degenerate = draws.iter().any(|d| d.is_nan()) || {
        let first = draws[0];
        draws.iter().all(|&d| d == first)
    };
    draws.sort_by(|a, b| a.total_cmp(b));
    let correlation =
        if degenerate { None } else { pearson_correlation(&draws, normal_quantiles) };
    QqCell {
        phi,
        p_treat,
        sample_quantiles: draws,
        normal_quantiles: normal_quantiles.to_vec(),
        correlation,
        degenerate,
    }
}
