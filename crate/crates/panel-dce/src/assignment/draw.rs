use crate::alphabet::Treatment;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::panel::PotentialOutcomePanel;

use super::rng::{domain, CounterRng};
use super::{AssignmentMechanism, ObservedPanel, StepHistory};

/// Run one panel experiment: sequentially draw `W_{i,t}` from the mechanism
/// given each unit's own realized history, revealing outcomes as they occur.
/// Deterministic given `seed`; unit `i`'s draw at period `t` depends only on
/// `(seed, i, t)`, so units have isolated substreams.
pub fn draw_panel(
    mech: &AssignmentMechanism,
    panel: &PotentialOutcomePanel,
    seed: u64,
) -> Result<ObservedPanel> {
    draw_panel_grouped(mech, panel, None, seed)
}

/// Like [`draw_panel`], but units sharing a group label at a period share one
/// draw, broadcast to all members (the random number is keyed by the group).
/// Group members must face identical step distributions for the broadcast to
/// be coherent; each unit still logs its own probability of the realized
/// label.
pub fn draw_panel_grouped(
    mech: &AssignmentMechanism,
    panel: &PotentialOutcomePanel,
    groups: Option<&Grid<u32>>,
    seed: u64,
) -> Result<ObservedPanel> {
    let n = panel.n_units();
    let t_max = panel.n_periods();
    if mech.alphabet() != panel.alphabet() {
        return Err(Error::InvalidSpec("mechanism and panel alphabets differ".into()));
    }
    if let Some(g) = groups {
        if g.n_rows() != n || g.n_cols() != t_max {
            return Err(Error::Dimension("group grid shape mismatch".into()));
        }
    }
    let k = mech.n_labels();

    let mut assignments = Grid::filled(n, t_max, Treatment(0));
    let mut outcomes = Grid::filled(n, t_max, 0.0);
    let mut step_probs = Grid::filled(n, t_max, 0.0);

    let mut dist = vec![0.0; k];
    let mut path: Vec<Treatment> = Vec::with_capacity(t_max);
    let mut prior: Vec<f64> = Vec::with_capacity(t_max);
    for i in 0..n {
        path.clear();
        prior.clear();
        for t in 0..t_max {
            mech.step_distribution_into(i, t, StepHistory::new(&path, &prior), &mut dist);
            let u = match groups {
                Some(g) => {
                    CounterRng::from_tags(seed, &[domain::GROUP_DRAW, *g.get(i, t) as u64, t as u64])
                        .uniform()
                }
                None => CounterRng::from_tags(seed, &[domain::UNIT_DRAW, i as u64, t as u64]).uniform(),
            };
            let label = sample_categorical(&dist, u);
            let p = dist[label.index()];
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::ProbabilityBound { unit: i, time: t, value: p });
            }
            path.push(label);
            let y = panel.evaluate_step(i, t, &path, &prior)?;
            prior.push(y);
            assignments.set(i, t, label);
            outcomes.set(i, t, y);
            step_probs.set(i, t, p);
        }
    }

    ObservedPanel::new(
        panel.alphabet().clone(),
        assignments,
        outcomes,
        step_probs,
        groups.cloned(),
    )
}

#[inline]
fn sample_categorical(dist: &[f64], u: f64) -> Treatment {
    let mut acc = 0.0;
    for (kk, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return Treatment(kk as u8);
        }
    }
    Treatment((dist.len() - 1) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::TreatmentAlphabet;
    use crate::panel::LinearPanelSpec;

    fn flat_panel(n: usize, t: usize) -> PotentialOutcomePanel {
        LinearPanelSpec::homogeneous_time_invariant(
            TreatmentAlphabet::binary(),
            n,
            t,
            &[1.0],
            Grid::filled(n, t, 0.0),
        )
        .unwrap()
        .into()
    }

    #[test]
    fn same_seed_same_panel() {
        let mech = AssignmentMechanism::bernoulli_binary(0.4).unwrap();
        let panel = flat_panel(5, 4);
        let a = draw_panel(&mech, &panel, 99).unwrap();
        let b = draw_panel(&mech, &panel, 99).unwrap();
        assert_eq!(a, b);
        let c = draw_panel(&mech, &panel, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn treated_share_near_design_probability() {
        // Bernoulli(1 - delta) with delta small; 10^5 cell draws
        let delta = 0.1;
        let mech = AssignmentMechanism::bernoulli_binary(1.0 - delta).unwrap();
        let panel = flat_panel(100, 10);
        let mut treated = 0usize;
        let reps = 100;
        for r in 0..reps {
            let obs = draw_panel(&mech, &panel, r as u64).unwrap();
            treated += obs
                .assignments
                .values()
                .iter()
                .filter(|&&w| w == Treatment(1))
                .count();
        }
        let n_draws = (reps * 100 * 10) as f64;
        let share = treated as f64 / n_draws;
        let se = (delta * (1.0 - delta) / n_draws).sqrt();
        assert!(
            (share - (1.0 - delta)).abs() < 3.0 * se,
            "share {share} vs {}",
            1.0 - delta
        );
    }

    #[test]
    fn five_elevenths_design_share() {
        let p = 5.0 / 11.0;
        let mech = AssignmentMechanism::bernoulli_binary(p).unwrap();
        let panel = flat_panel(110, 20);
        let mut share = 0.0;
        let reps = 50;
        for r in 0..reps {
            share += draw_panel(&mech, &panel, r).unwrap().treatment_share(Treatment(1));
        }
        share /= reps as f64;
        let se = (p * (1.0 - p) / (110.0 * 20.0 * reps as f64)).sqrt();
        assert!((share - p).abs() < 3.0 * se, "share {share}");
    }

    #[test]
    fn unit_substreams_are_isolated() {
        // A unit's realized path must not depend on other units' histories:
        // drawing the same unit alone reproduces its row from the joint draw.
        let mech = AssignmentMechanism::markov_binary_stay(0.7).unwrap();
        let joint_panel = flat_panel(4, 6);
        let joint = draw_panel(&mech, &joint_panel, 7).unwrap();
        // redraw "unit 2" in a 4-unit panel where other units' specs changed
        let mut eps = Grid::filled(4, 6, 0.0);
        for t in 0..6 {
            eps.set(0, t, 100.0);
            eps.set(3, t, -50.0);
        }
        let altered: PotentialOutcomePanel = LinearPanelSpec::homogeneous_time_invariant(
            TreatmentAlphabet::binary(),
            4,
            6,
            &[1.0],
            eps,
        )
        .unwrap()
        .into();
        let other = draw_panel(&mech, &altered, 7).unwrap();
        assert_eq!(joint.assignments.row(2), other.assignments.row(2));
    }

    #[test]
    fn grouped_draws_broadcast_labels() {
        let mech = AssignmentMechanism::bernoulli_binary(0.5).unwrap();
        let panel = flat_panel(6, 5);
        // pairs (0,1), (2,3), (4,5) every period
        let rows: Vec<Vec<u32>> = (0..6).map(|i| vec![(i / 2) as u32; 5]).collect();
        let groups = Grid::from_rows(rows).unwrap();
        let obs = draw_panel_grouped(&mech, &panel, Some(&groups), 3).unwrap();
        for t in 0..5 {
            for pair in 0..3 {
                assert_eq!(obs.assignments.get(2 * pair, t), obs.assignments.get(2 * pair + 1, t));
            }
        }
        assert!(obs.group_ids.is_some());
    }
}
