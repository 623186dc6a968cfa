//! Linear fixed-effects estimators, their within transforms, and the
//! closed-form finite-population probability limits that quantify their bias
//! under dynamic causal effects.
//!
//! The probability limits decompose into a contemporaneous term, a carryover
//! term driven by cross moments between raw assignments and within-transformed
//! assignments, and a counterfactual-covariance term. The carryover cross
//! moments are taken between the *untransformed* lagged assignment and the
//! transformed current one; finite-T demeaning makes them nonzero even when
//! raw assignments are serially uncorrelated.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::assignment::{AssignmentMechanism, MechanismKind, ObservedPanel, ProbTable};
use crate::error::{Error, Result};
use crate::grid::Grid;

/// Within-period (`dot`), within-unit (`check`) and two-way (`dotcheck`)
/// demeaned versions of an N x T matrix.
#[derive(Debug, Clone)]
pub struct WithinTransforms {
    pub dot: Grid<f64>,
    pub check: Grid<f64>,
    pub dotcheck: Grid<f64>,
}

pub fn within_transforms(a: &Grid<f64>) -> WithinTransforms {
    let n = a.n_rows();
    let t = a.n_cols();
    let row_means = a.row_means();
    let col_means = a.col_means();
    let grand = a.mean();
    let mut dot = Grid::filled(n, t, 0.0);
    let mut check = Grid::filled(n, t, 0.0);
    let mut dotcheck = Grid::filled(n, t, 0.0);
    for i in 0..n {
        for s in 0..t {
            let v = *a.get(i, s);
            dot.set(i, s, v - col_means[s]);
            check.set(i, s, v - row_means[i]);
            dotcheck.set(i, s, v - col_means[s] - row_means[i] + grand);
        }
    }
    WithinTransforms { dot, check, dotcheck }
}

fn numeric_assignments(observed: &ObservedPanel) -> Result<Grid<f64>> {
    let values = observed.alphabet.numeric_values()?;
    let n = observed.n_units();
    let t = observed.n_periods();
    let mut w = Grid::filled(n, t, 0.0);
    for i in 0..n {
        for s in 0..t {
            w.set(i, s, values[observed.assignments.get(i, s).index()]);
        }
    }
    Ok(w)
}

fn ratio_of_cross_products(y: &Grid<f64>, w: &Grid<f64>, what: &str) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for (yr, wr) in y.values().iter().zip(w.values()) {
        num += yr * wr;
        den += wr * wr;
    }
    if den <= 0.0 {
        return Err(Error::ZeroDenominator(what.into()));
    }
    Ok(num / den)
}

/// `beta_UFE`: ratio of within-unit cross products.
pub fn unit_fe_estimate(observed: &ObservedPanel) -> Result<f64> {
    let w = numeric_assignments(observed)?;
    let wt = within_transforms(&w);
    let yt = within_transforms(&observed.outcomes);
    ratio_of_cross_products(&yt.check, &wt.check, "unit fixed effects (constant treatment within every unit)")
}

/// `beta_TWFE`: ratio of two-way demeaned cross products.
pub fn twoway_fe_estimate(observed: &ObservedPanel) -> Result<f64> {
    let w = numeric_assignments(observed)?;
    let wt = within_transforms(&w);
    let yt = within_transforms(&observed.outcomes);
    ratio_of_cross_products(&yt.dotcheck, &wt.dotcheck, "two-way fixed effects")
}

/// Repeated cross-section OLS at one period: regress within-period demeaned
/// outcomes at `time` on the `time + 1` demeaned own lags of treatment.
/// Coefficients are ordered contemporaneous first.
pub fn repeated_cross_section_estimate(observed: &ObservedPanel, time: usize) -> Result<Vec<f64>> {
    let n = observed.n_units();
    let t_len = time + 1;
    if time >= observed.n_periods() {
        return Err(Error::Dimension(format!("period {time} outside panel")));
    }
    if n <= t_len {
        return Err(Error::Dimension(format!(
            "{n} units cannot identify {t_len} lag coefficients"
        )));
    }
    let w = numeric_assignments(observed)?;
    let wt = within_transforms(&w);
    let yt = within_transforms(&observed.outcomes);
    // X[i][u] = demeaned W_{i, time-u}
    let x = DMatrix::from_fn(n, t_len, |i, u| *wt.dot.get(i, time - u));
    let y = DVector::from_fn(n, |i, _| *yt.dot.get(i, time));
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * y;
    let solved = xtx.lu().solve(&xty).ok_or(Error::SingularDesign { time })?;
    Ok(solved.iter().copied().collect())
}

/// Exact single-unit joint moments of the numeric assignment path
/// `(W_0, ..., W_{T-1})` under a mechanism shared by all units. Everything
/// the probability-limit formulas need derives from the mean vector and the
/// second-moment matrix.
#[derive(Debug, Clone)]
pub struct MechanismMoments {
    values: Vec<f64>,
    means: Vec<f64>,
    second: DMatrix<f64>,
}

impl MechanismMoments {
    pub fn new(values: Vec<f64>, means: Vec<f64>, second: DMatrix<f64>) -> Result<Self> {
        let t = means.len();
        if second.nrows() != t || second.ncols() != t {
            return Err(Error::Dimension("second-moment matrix shape".into()));
        }
        Ok(Self { values, means, second })
    }

    /// Independent categorical draws with per-period label distributions.
    pub fn iid_categorical(step_probs: &[Vec<f64>], values: &[f64]) -> Result<Self> {
        let t = step_probs.len();
        let mut means = vec![0.0; t];
        let mut raw2 = vec![0.0; t];
        for (s, probs) in step_probs.iter().enumerate() {
            if probs.len() != values.len() {
                return Err(Error::Dimension("probability row length".into()));
            }
            means[s] = probs.iter().zip(values).map(|(p, v)| p * v).sum();
            raw2[s] = probs.iter().zip(values).map(|(p, v)| p * v * v).sum();
        }
        let second = DMatrix::from_fn(t, t, |s, u| {
            if s == u {
                raw2[s]
            } else {
                means[s] * means[u]
            }
        });
        Self::new(values.to_vec(), means, second)
    }

    /// First-order chain over labels with numeric `values`.
    pub fn markov(
        transition: &[Vec<f64>],
        initial: &[f64],
        n_periods: usize,
        values: &[f64],
    ) -> Result<Self> {
        let k = values.len();
        if transition.len() != k || transition.iter().any(|r| r.len() != k) || initial.len() != k {
            return Err(Error::Dimension("transition matrix shape".into()));
        }
        for row in transition.iter().chain(std::iter::once(&initial.to_vec())) {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-10 || row.iter().any(|&p| p < 0.0) {
                return Err(Error::InvalidSpec("invalid stochastic matrix".into()));
            }
        }
        // marginals by forward iteration
        let mut marginals = vec![initial.to_vec()];
        for _ in 1..n_periods {
            let prev = marginals.last().unwrap();
            let mut next = vec![0.0; k];
            for (j, &pj) in prev.iter().enumerate() {
                for (l, &tr) in transition[j].iter().enumerate() {
                    next[l] += pj * tr;
                }
            }
            marginals.push(next);
        }
        let means: Vec<f64> =
            marginals.iter().map(|m| m.iter().zip(values).map(|(p, v)| p * v).sum()).collect();
        // step powers: powers[d][j][l] = P(W_{s+d} = l | W_s = j)
        let mut powers: Vec<Vec<Vec<f64>>> = vec![identity(k)];
        for d in 1..n_periods {
            let prev = &powers[d - 1];
            let mut next = vec![vec![0.0; k]; k];
            for j in 0..k {
                for m in 0..k {
                    let pjm = prev[j][m];
                    if pjm == 0.0 {
                        continue;
                    }
                    for l in 0..k {
                        next[j][l] += pjm * transition[m][l];
                    }
                }
            }
            powers.push(next);
        }
        let second = DMatrix::from_fn(n_periods, n_periods, |s, u| {
            let (a, b) = if s <= u { (s, u) } else { (u, s) };
            let step = &powers[b - a];
            let mut acc = 0.0;
            for j in 0..k {
                let pj = marginals[a][j];
                if pj == 0.0 {
                    continue;
                }
                for l in 0..k {
                    acc += pj * step[j][l] * values[j] * values[l];
                }
            }
            acc
        });
        Self::new(values.to_vec(), means, second)
    }

    /// Moments implied by a mechanism, when they are history-free in
    /// outcomes. Outcome-adaptive rules have no closed form here.
    pub fn from_mechanism(mech: &AssignmentMechanism, n_periods: usize) -> Result<Self> {
        let values = mech.alphabet().numeric_values()?;
        match mech.kind() {
            MechanismKind::Bernoulli { probs: ProbTable::Shared(p) } => {
                Self::iid_categorical(&vec![p.clone(); n_periods], &values)
            }
            MechanismKind::Bernoulli { probs: ProbTable::PerCell { .. } } => Err(Error::InvalidSpec(
                "per-cell probabilities vary across units; no shared moment sequence".into(),
            )),
            MechanismKind::Markov { transition, initial } => {
                Self::markov(transition, initial, n_periods, &values)
            }
            MechanismKind::OutcomeThreshold { .. } => Err(Error::InvalidSpec(
                "outcome-adaptive mechanisms have no outcome-free assignment moments".into(),
            )),
        }
    }

    pub fn n_periods(&self) -> usize {
        self.means.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self, t: usize) -> f64 {
        self.means[t]
    }

    /// `E[W_s W_t]`.
    pub fn second_moment(&self, s: usize, t: usize) -> f64 {
        self.second[(s, t)]
    }

    pub fn covariance(&self, s: usize, t: usize) -> f64 {
        self.second[(s, t)] - self.means[s] * self.means[t]
    }

    fn row_mean(&self, s: usize) -> f64 {
        self.second.row(s).sum() / self.n_periods() as f64
    }

    fn grand_mean(&self) -> f64 {
        self.second.sum() / (self.n_periods() * self.n_periods()) as f64
    }

    fn mean_bar(&self) -> f64 {
        self.means.iter().sum::<f64>() / self.means.len() as f64
    }

    /// Deterministic centering `c_t = E[W_t] - mean_u E[W_u] = E[W_check_t]`.
    pub fn check_mean(&self, t: usize) -> f64 {
        self.means[t] - self.mean_bar()
    }

    /// `E[W_s * W_check_t]`: cross moment between a raw assignment and a
    /// within-unit transformed one.
    pub fn check_cross(&self, s: usize, t: usize) -> f64 {
        self.second[(s, t)] - self.row_mean(s)
    }

    /// `E[W_check_t ^ 2]`.
    pub fn check_second(&self, t: usize) -> f64 {
        self.second[(t, t)] - 2.0 * self.row_mean(t) + self.grand_mean()
    }

    /// Two-way analogue of [`Self::check_cross`]: in the large-N limit the
    /// within-period demeaning subtracts the deterministic `c_t`.
    pub fn dotcheck_cross(&self, s: usize, t: usize) -> f64 {
        self.check_cross(s, t) - self.means[s] * self.check_mean(t)
    }

    /// Two-way analogue of [`Self::check_second`].
    pub fn dotcheck_second(&self, t: usize) -> f64 {
        let c = self.check_mean(t);
        self.check_second(t) - c * c
    }

    /// Covariance matrix of the lag vector `(W_t, W_{t-1}, ..., W_0)`; the
    /// repeated-cross-section design-moment matrix. Within-period demeaning
    /// by deterministic limits does not change covariances.
    pub fn omega(&self, time: usize) -> DMatrix<f64> {
        DMatrix::from_fn(time + 1, time + 1, |u, v| self.covariance(time - u, time - v))
    }

    /// Large-N limit of the averaged design-moment matrix; equals
    /// [`Self::omega`] when every unit shares this mechanism.
    pub fn gamma2(&self, time: usize) -> DMatrix<f64> {
        self.omega(time)
    }
}

fn identity(k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|j| (0..k).map(|l| if j == l { 1.0 } else { 0.0 }).collect()).collect()
}

/// Binary-treatment convenience: iid Bernoulli with per-period treatment
/// probabilities and labels `{0, 1}`.
pub fn bernoulli_moments(p_treat_by_period: &[f64]) -> Result<MechanismMoments> {
    let rows: Vec<Vec<f64>> = p_treat_by_period.iter().map(|&p| vec![1.0 - p, p]).collect();
    MechanismMoments::iid_categorical(&rows, &[0.0, 1.0])
}

/// Binary-treatment convenience: two-state chain with the given transition
/// matrix and initial distribution.
pub fn markov_moments(
    transition: &[Vec<f64>],
    initial: &[f64],
    n_periods: usize,
) -> Result<MechanismMoments> {
    MechanismMoments::markov(transition, initial, n_periods, &[0.0, 1.0])
}

/// Three-term decomposition of a fixed-effects probability limit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeProbLimit {
    pub contemporaneous: f64,
    pub carryover: f64,
    pub counterfactual: f64,
    pub total: f64,
}

/// Probability limit of the unit fixed-effects estimator for a linear panel
/// under a mechanism shared by all units.
pub fn problimit_unit_fe(
    spec: &crate::panel::LinearPanelSpec,
    moments: &MechanismMoments,
) -> Result<FeProbLimit> {
    problimit_fe(spec, moments, false)
}

/// Probability limit of the two-way fixed-effects estimator.
pub fn problimit_twoway_fe(
    spec: &crate::panel::LinearPanelSpec,
    moments: &MechanismMoments,
) -> Result<FeProbLimit> {
    problimit_fe(spec, moments, true)
}

fn problimit_fe(
    spec: &crate::panel::LinearPanelSpec,
    moments: &MechanismMoments,
    twoway: bool,
) -> Result<FeProbLimit> {
    let t_max = spec.n_periods();
    if moments.n_periods() != t_max {
        return Err(Error::Dimension(format!(
            "moments cover {} periods, panel has {t_max}",
            moments.n_periods()
        )));
    }
    let cross = |s: usize, t: usize| {
        if twoway {
            moments.dotcheck_cross(s, t)
        } else {
            moments.check_cross(s, t)
        }
    };
    let denom: f64 = (0..t_max)
        .map(|t| if twoway { moments.dotcheck_second(t) } else { moments.check_second(t) })
        .sum();
    if denom <= 0.0 {
        return Err(Error::ZeroDenominator("within-transform variance sum".into()));
    }
    let mut contemporaneous = 0.0;
    let mut carryover = 0.0;
    for t in 0..t_max {
        contemporaneous += spec.mean_beta(t, 0) * cross(t, t);
        for s in 0..t {
            // coefficient on W_s in Y_t is the lag t-s coefficient
            carryover += spec.mean_beta(t, t - s) * cross(s, t);
        }
    }

    // Counterfactual term: covariance of the demeaned control-path outcome
    // with the expected transformed assignment. The control path uses the
    // first alphabet label, so evaluate it rather than assuming it is zero.
    let y0 = control_path_outcomes(spec)?;
    let y0t = within_transforms(&y0);
    let mut counterfactual = 0.0;
    for t in 0..t_max {
        let mu = if twoway {
            // E[W_check_t - c_t] = 0 identically under a shared mechanism
            0.0
        } else {
            moments.check_mean(t)
        };
        if mu != 0.0 {
            let y_mean: f64 = (0..spec.n_units()).map(|i| *y0t.check.get(i, t)).sum::<f64>()
                / spec.n_units() as f64;
            counterfactual += mu * y_mean;
        }
    }

    Ok(FeProbLimit {
        contemporaneous: contemporaneous / denom,
        carryover: carryover / denom,
        counterfactual: counterfactual / denom,
        total: (contemporaneous + carryover + counterfactual) / denom,
    })
}

fn control_path_outcomes(spec: &crate::panel::LinearPanelSpec) -> Result<Grid<f64>> {
    let panel = crate::panel::PotentialOutcomePanel::Linear(spec.clone());
    let zero = crate::alphabet::Treatment(0);
    let n = spec.n_units();
    let t_max = spec.n_periods();
    let mut out = Grid::filled(n, t_max, 0.0);
    let path = vec![zero; t_max];
    for i in 0..n {
        for t in 0..t_max {
            out.set(i, t, panel.evaluate(i, t, &path[..=t])?);
        }
    }
    Ok(out)
}
