//! Branch MPC planner: chance-constraint behaviour on a constructed state,
//! tree probability invariants and the single-branch reduction.

mod common;

use approx::assert_relative_eq;
use common::{planner_with, three_candidates};
use lfg_core::game::separation;
use lfg_core::role::RoleDist;
use lfg_core::{Agent, BranchMpc, GameState, Role};
use proptest::prelude::*;

const CLEARANCE: f64 = 7.5;

/// A leaf is unsafe if any predicted joint state along it is inside the
/// clearance radius.
fn leaf_unsafe(b1: &lfg_core::branch_mpc::Stage1Branch<f64>, b2: &lfg_core::branch_mpc::Stage2Branch<f64>) -> bool {
    b1.states.iter().chain(&b2.states).any(|s| separation(&s.human, &s.robot) < CLEARANCE)
}

#[test]
fn fastest_candidate_flips_feasibility_with_assumed_adaptation() {
    for (p_a_hat, fast_feasible) in [(0.98, true), (0.95, false)] {
        let p = planner_with(p_a_hat, 0.0);
        let (root, cands) = three_candidates(&p);
        let out = p.plan_over(&root, &cands, RoleDist::certain(Role::Leader)).unwrap();

        // Independent tally: the human is certainly a leader, reads the fast
        // robot as a leader, and yields with probability p_a_hat. Only the
        // non-adapting branch is unsafe.
        let tree = p.predict_branches(&root.state, &cands[2], RoleDist::certain(Role::Leader)).unwrap();
        let unsafe_mass: f64 = tree.leaves().filter(|(_, b1, b2)| leaf_unsafe(b1, b2)).map(|(w, _, _)| w).sum();
        assert_relative_eq!(unsafe_mass, 1.0 - p_a_hat, epsilon = 1e-12);
        let fast = &out.evaluations[2];
        assert_relative_eq!(fast.violation_prob, 1.0 - p_a_hat, epsilon = 1e-12);
        assert_eq!(fast.feasible, fast_feasible, "p_a_hat={p_a_hat}");

        // The slow candidates are safe on every branch.
        assert!(out.evaluations[..2].iter().all(|e| e.violation_prob == 0.0 && e.feasible));
        assert!(out.feasible);
        if fast_feasible {
            assert_eq!(out.index, 2);
        } else {
            assert_ne!(out.index, 2);
            let best_feasible = out.evaluations[..2]
                .iter()
                .max_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
                .unwrap();
            assert_eq!(out.index, best_feasible.index);
        }
    }
}

#[test]
fn planning_is_deterministic_and_picks_a_member() {
    let p = planner_with(0.9, 0.01);
    let x = GameState::new((-17.0, 5.0), (-21.0, 3.5), 0.5);
    let root = p.model.stage_game(&x);
    let a = p.plan(&x, RoleDist { p_leader: 0.37 });
    let b = p.plan(&x, RoleDist { p_leader: 0.37 });
    assert_eq!(a.index, b.index);
    assert_eq!(a.chosen, b.chosen);
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(root.robot_set[a.index], a.chosen);
}

/// Single-branch baseline: predict the human once with a fixed role, then
/// pick the best candidate that never enters the clearance radius.
fn baseline_pick(p: &BranchMpc, x: &GameState, role: Role) -> (usize, Vec<f64>) {
    let t1 = p.mpc.t1;
    let n = p.model.horizon;
    let root = p.model.stage_game(x);
    let h1 = root.decide(Agent::Human, role).clone();
    let mut scores = Vec::new();
    for cand in &root.robot_set {
        let x_t1 = GameState { human: h1.states[t1], robot: cand.states[t1], t: x.t + t1 as u32, dt: x.dt };
        let h2 = p.model.stage_game(&x_t1).decide(Agent::Human, role).clone();
        let mut total = 0.0;
        let mut disc = 1.0;
        let mut unsafe_any = false;
        for k in 1..=n {
            let human = if k <= t1 { h1.states[k] } else { h2.states[k - t1] };
            let robot = cand.states[k];
            let hit = separation(&human, &robot) < CLEARANCE;
            unsafe_any |= hit;
            let pen = if hit { 1.0 + robot.v } else { 0.0 };
            total += disc * ((robot.s - x.robot.s) - p.model.reward.w1 * pen - p.model.reward.w2 * cand.accels[k - 1].abs());
            disc *= p.model.reward.lambda;
        }
        scores.push(if unsafe_any { f64::NEG_INFINITY } else { total });
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    (best, scores)
}

#[test]
fn certain_belief_without_adaptation_reduces_to_single_branch() {
    let p = planner_with(0.0, 0.0);
    let mut checked = 0;
    for (hs, hv, rs, rv) in [(-20.0, 4.0, -20.0, 4.0), (-25.0, 6.0, -18.0, 3.0), (-14.0, 2.0, -24.0, 7.0), (-30.0, 8.0, -30.0, 8.0)] {
        let x = GameState::new((hs, hv), (rs, rv), 0.5);
        for role in Role::ALL {
            let (want, scores) = baseline_pick(&p, &x, role);
            let out = p.plan(&x, RoleDist::certain(role));
            for e in &out.evaluations {
                if scores[e.index].is_finite() {
                    assert!(e.feasible);
                    assert_relative_eq!(e.objective, scores[e.index], max_relative = 1e-12);
                } else {
                    assert_eq!(e.violation_prob, 1.0);
                }
            }
            if scores[want].is_finite() {
                assert_eq!(out.index, want, "{x:?} {role}");
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

fn state_strategy() -> impl Strategy<Value = GameState> {
    (-35.0f64..-9.0, 0.0f64..10.0, -35.0f64..-9.0, 0.0f64..10.0)
        .prop_map(|(hs, hv, rs, rv)| GameState::new((hs, hv), (rs, rv), 0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leaf_probabilities_form_a_distribution(
        x in state_strategy(),
        belief in 0.0f64..=1.0,
        p_a_hat in 0.0f64..=1.0,
    ) {
        let p = planner_with(p_a_hat, 0.0);
        let root = p.model.stage_game(&x);
        for cand in &root.robot_set {
            let tree = p.predict_branches(&x, cand, RoleDist { p_leader: belief }).unwrap();
            let leaves = tree.leaf_probs();
            prop_assert!(leaves.iter().all(|&w| (-1e-15..=1.0 + 1e-15).contains(&w)));
            prop_assert!((leaves.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for b1 in &tree.stage1 {
                prop_assert!((b1.children[0].prob + b1.children[1].prob - 1.0).abs() <= 1e-12);
            }
        }
    }

    /// Loosening the risk level never removes a candidate from the feasible set.
    #[test]
    fn feasible_set_grows_with_epsilon(
        x in state_strategy(),
        belief in 0.05f64..0.95,
        p_a_hat in 0.5f64..=1.0,
        eps in (0.0f64..0.3, 0.0f64..0.3),
    ) {
        let (lo, hi) = if eps.0 <= eps.1 { eps } else { (eps.1, eps.0) };
        let mut tight = planner_with(p_a_hat, 0.01);
        tight.model.safety.epsilon = lo;
        let mut loose = tight;
        loose.model.safety.epsilon = hi;
        let a = tight.plan(&x, RoleDist { p_leader: belief });
        let b = loose.plan(&x, RoleDist { p_leader: belief });
        for (ea, eb) in a.evaluations.iter().zip(&b.evaluations) {
            prop_assert_eq!(ea.violation_prob, eb.violation_prob);
            prop_assert!(!ea.feasible || eb.feasible);
        }
        if a.feasible {
            prop_assert!(b.feasible && b.objective >= a.objective);
        }
    }
}
