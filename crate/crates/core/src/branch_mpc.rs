//! Interactive prediction and the two-stage branch MPC planner.
//!
//! For each robot candidate the human is predicted over a scenario tree:
//! stage 1 branches on the human's current role (weighted by the robot's
//! belief) and holds it for `t1` steps; the human then re-assesses the
//! robot's role from what the candidate did, adapts its own role through the
//! assumed transition matrix, and stage 2 branches on the adapted role for
//! the rest of the horizon. Candidates are scored by branch-weighted reward
//! subject to a chance constraint on leaving the safe set.

use serde::{Deserialize, Serialize};

use crate::actions::ActionTrajectory;
use crate::error::{Error, Result};
use crate::game::{pair_safe, reward_terms, Agent, GameState};
use crate::lfg::Role;
use crate::model::{GameModel, StageGame};
use crate::role::{belief_update_in, transition_matrix, LikelihoodParams, PlausibleMap, RoleBelief, RoleDist};
use crate::scalar::Scalar;

/// Slack added to the risk level when testing `P(violation) <= epsilon`, so
/// that leaf masses such as `1 - 0.98` are not rejected by rounding.
pub const CHANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct MpcParams<S> {
    /// Stage-1 length in steps, `0 < t1 < horizon`.
    pub t1: usize,
    /// Role-adaptation likelihood the robot assumes for the human.
    pub p_a_hat: S,
    /// Plausible-role map assumed for the human.
    #[serde(default)]
    pub plausible: PlausibleMap,
}

impl<S: Scalar> Default for MpcParams<S> {
    fn default() -> Self {
        Self { t1: 2, p_a_hat: S::one(), plausible: PlausibleMap::Mle }
    }
}

impl<S: Scalar> MpcParams<S> {
    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.t1 == 0 || self.t1 >= horizon {
            return Err(Error::InvalidParam(format!("t1={} must satisfy 0 < t1 < N={horizon}", self.t1)));
        }
        if !(self.p_a_hat >= S::zero() && self.p_a_hat <= S::one()) {
            return Err(Error::InvalidParam(format!("p_a_hat={} outside [0, 1]", self.p_a_hat)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Stage2Branch<S> {
    pub role: Role,
    /// Probability conditional on the parent stage-1 branch.
    pub prob: S,
    /// Human trajectory planned from the stage-1 end state.
    pub human_traj: ActionTrajectory<S>,
    /// Joint states for steps `t1 + 1 ..= N`.
    pub states: Vec<GameState<S>>,
}

#[derive(Debug, Clone)]
pub struct Stage1Branch<S> {
    pub role: Role,
    pub prob: S,
    pub human_traj: ActionTrajectory<S>,
    /// Joint states for steps `1 ..= t1`.
    pub states: Vec<GameState<S>>,
    /// The human's simulated belief that the robot leads, at `t + t1`.
    pub human_belief: RoleBelief<S>,
    pub plausible: RoleDist<S>,
    pub children: [Stage2Branch<S>; 2],
}

/// Two stages, four leaves.
#[derive(Debug, Clone)]
pub struct BranchTree<S> {
    pub root: GameState<S>,
    pub stage1: [Stage1Branch<S>; 2],
}

impl<S: Scalar> BranchTree<S> {
    /// Leaf probabilities ordered (l,l), (l,f), (f,l), (f,f).
    pub fn leaf_probs(&self) -> [S; 4] {
        let [a, b] = &self.stage1;
        [
            a.prob * a.children[0].prob,
            a.prob * a.children[1].prob,
            b.prob * b.children[0].prob,
            b.prob * b.children[1].prob,
        ]
    }

    /// Iterates the four leaves as `(probability, stage-1 branch, stage-2 branch)`.
    pub fn leaves(&self) -> impl Iterator<Item = (S, &Stage1Branch<S>, &Stage2Branch<S>)> {
        self.stage1
            .iter()
            .flat_map(|b1| b1.children.iter().map(move |b2| (b1.prob * b2.prob, b1, b2)))
    }
}

/// Total leaf probability of paths that leave the safe set at any step.
/// A stage-1 violation counts against both of its children.
pub fn branch_violation_prob<S: Scalar>(tree: &BranchTree<S>, clearance: S) -> S {
    let unsafe_state = |x: &GameState<S>| !pair_safe(&x.human, &x.robot, clearance);
    tree.leaves()
        .filter(|(_, b1, b2)| b1.states.iter().any(unsafe_state) || b2.states.iter().any(unsafe_state))
        .map(|(p, _, _)| p)
        .fold(S::zero(), |acc, p| acc + p)
}

/// Whether a violation probability satisfies the chance constraint at `epsilon`.
pub fn chance_feasible<S: Scalar>(violation_prob: S, epsilon: S) -> bool {
    violation_prob <= epsilon + S::lit(CHANCE_TOL)
}

/// Score of one robot candidate.
#[derive(Debug, Clone)]
pub struct CandidateEval<S> {
    pub index: usize,
    pub objective: S,
    pub violation_prob: S,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct PlanOutcome<S> {
    pub index: usize,
    pub chosen: ActionTrajectory<S>,
    pub tree: BranchTree<S>,
    pub feasible: bool,
    pub objective: S,
    pub violation_prob: S,
    pub evaluations: Vec<CandidateEval<S>>,
}

/// The robot's branch MPC planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct BranchMpc<S> {
    pub model: GameModel<S>,
    pub mpc: MpcParams<S>,
    /// Likelihood model the robot assumes the human uses to read the robot.
    pub likelihood: LikelihoodParams<S>,
}

impl<S: Scalar> BranchMpc<S> {
    pub fn new(model: GameModel<S>, mpc: MpcParams<S>, likelihood: LikelihoodParams<S>) -> Result<Self> {
        model.validate()?;
        mpc.validate(model.horizon)?;
        likelihood.validate()?;
        Ok(Self { model, mpc, likelihood })
    }

    /// Builds the scenario tree of one robot candidate.
    pub fn predict_branches(
        &self,
        x: &GameState<S>,
        robot_candidate: &ActionTrajectory<S>,
        belief: RoleBelief<S>,
    ) -> Result<BranchTree<S>> {
        let root = self.model.stage_game(x);
        self.tree_for(&root, robot_candidate, belief)
    }

    fn tree_for(
        &self,
        root: &StageGame<S>,
        robot: &ActionTrajectory<S>,
        belief: RoleBelief<S>,
    ) -> Result<BranchTree<S>> {
        let n = self.model.horizon;
        if robot.len() != n {
            return Err(Error::HorizonMismatch { robot: robot.len(), human: n });
        }
        let stage1 = Role::ALL.map(|role| self.stage1_branch(root, robot, role, belief.prob(role)));
        Ok(BranchTree { root: root.state, stage1 })
    }

    fn stage1_branch(&self, root: &StageGame<S>, robot: &ActionTrajectory<S>, role: Role, prob: S) -> Stage1Branch<S> {
        let t1 = self.mpc.t1;
        let n = self.model.horizon;
        let x0 = root.state;
        let human_traj = root.decide(Agent::Human, role).clone();
        let states: Vec<GameState<S>> = (1..=t1).map(|k| joint(&x0, &human_traj, k, robot, k, k)).collect();

        // The human reads the robot's role from scratch each planning cycle.
        let mut human_belief = RoleBelief::uniform();
        let mut prev_game: Option<StageGame<S>> = None;
        for k in 0..t1 {
            let game = prev_game.as_ref().unwrap_or(root);
            human_belief = belief_update_in(
                game,
                &self.model,
                human_belief,
                Agent::Human,
                human_traj.accels[k],
                &states[k],
                &self.likelihood,
            );
            if k + 1 < t1 {
                prev_game = Some(self.model.stage_game(&states[k]));
            }
        }

        let plausible = self.mpc.plausible.apply(human_belief, role);
        let adapted = transition_matrix(plausible, self.mpc.p_a_hat).column(role);
        let x_t1 = states[t1 - 1];
        let game_t1 = self.model.stage_game(&x_t1);
        let children = Role::ALL.map(|role2| {
            let human2 = game_t1.decide(Agent::Human, role2).clone();
            let states2 = (1..=n - t1).map(|j| joint(&x0, &human2, j, robot, t1 + j, t1 + j)).collect();
            Stage2Branch { role: role2, prob: adapted.prob(role2), human_traj: human2, states: states2 }
        });
        Stage1Branch { role, prob, human_traj, states, human_belief, plausible, children }
    }

    /// Branch-weighted discounted robot reward over the horizon.
    pub fn objective(&self, tree: &BranchTree<S>, robot: &ActionTrajectory<S>) -> S {
        let reward = &self.model.reward;
        let clearance = self.model.safety.clearance();
        let r0 = tree.root.robot.s;
        let t1 = self.mpc.t1;
        let step = |x: &GameState<S>, k: usize| {
            reward_terms(x.robot.s, x.robot.v, robot.accels[k - 1], r0, !pair_safe(&x.human, &x.robot, clearance), reward)
        };
        let mut total = S::zero();
        let mut disc = S::one();
        for k in 1..=self.model.horizon {
            let expected = if k <= t1 {
                tree.stage1.iter().map(|b| b.prob * step(&b.states[k - 1], k)).sum::<S>()
            } else {
                tree.leaves().map(|(p, _, b2)| p * step(&b2.states[k - t1 - 1], k)).sum::<S>()
            };
            total += disc * expected;
            disc *= reward.lambda;
        }
        total
    }

    /// Plans over the robot's generated action set at `x`.
    pub fn plan(&self, x: &GameState<S>, belief: RoleBelief<S>) -> PlanOutcome<S> {
        let root = self.model.stage_game(x);
        let candidates = root.robot_set.clone();
        self.plan_over(&root, &candidates, belief).expect("generated candidates match the horizon")
    }

    /// Plans over an explicit candidate list, with the human predicted from
    /// the stage game `root`.
    pub fn plan_over(
        &self,
        root: &StageGame<S>,
        candidates: &[ActionTrajectory<S>],
        belief: RoleBelief<S>,
    ) -> Result<PlanOutcome<S>> {
        if candidates.is_empty() {
            return Err(Error::EmptyActionSet("robot candidate"));
        }
        let clearance = self.model.safety.clearance();
        let epsilon = self.model.safety.epsilon;
        let mut trees = Vec::with_capacity(candidates.len());
        let mut evaluations = Vec::with_capacity(candidates.len());
        for (index, cand) in candidates.iter().enumerate() {
            let tree = self.tree_for(root, cand, belief)?;
            let violation_prob = branch_violation_prob(&tree, clearance);
            evaluations.push(CandidateEval {
                index,
                objective: self.objective(&tree, cand),
                violation_prob,
                feasible: chance_feasible(violation_prob, epsilon),
            });
            trees.push(tree);
        }
        let best = |pool: &mut dyn Iterator<Item = &CandidateEval<S>>| {
            pool.fold(None::<&CandidateEval<S>>, |acc, e| match acc {
                Some(b) if b.objective >= e.objective => Some(b),
                _ => Some(e),
            })
            .map(|e| e.index)
        };
        let feasible_pick = best(&mut evaluations.iter().filter(|e| e.feasible));
        let (index, feasible) = match feasible_pick {
            Some(i) => (i, true),
            None => (best(&mut evaluations.iter()).expect("non-empty candidates"), false),
        };
        let eval = &evaluations[index];
        Ok(PlanOutcome {
            index,
            chosen: candidates[index].clone(),
            feasible,
            objective: eval.objective,
            violation_prob: eval.violation_prob,
            tree: trees.swap_remove(index),
            evaluations,
        })
    }
}

fn joint<S: Scalar>(
    x0: &GameState<S>,
    human: &ActionTrajectory<S>,
    hk: usize,
    robot: &ActionTrajectory<S>,
    rk: usize,
    t: usize,
) -> GameState<S> {
    GameState { human: human.states[hk], robot: robot.states[rk], t: x0.t + t as u32, dt: x0.dt }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn planner(p_a_hat: f64) -> BranchMpc<f64> {
        BranchMpc::new(
            GameModel::default(),
            MpcParams { p_a_hat, ..MpcParams::default() },
            LikelihoodParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn leaves_sum_to_one() {
        let p = planner(0.9);
        let x = GameState::new((-18.0, 4.5), (-20.0, 4.0), 0.5);
        let out = p.plan(&x, RoleBelief { p_leader: 0.6 });
        for cand in &p.model.action_set(&x.robot) {
            let tree = p.predict_branches(&x, cand, RoleBelief { p_leader: 0.6 }).unwrap();
            let total: f64 = tree.leaf_probs().iter().sum();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
        assert!(out.index < 11);
    }

    #[test]
    fn zero_adaptation_keeps_stage1_roles() {
        let p = planner(0.0);
        let x = GameState::new((-18.0, 4.5), (-20.0, 4.0), 0.5);
        let cand = &p.model.action_set(&x.robot)[5];
        let tree = p.predict_branches(&x, cand, RoleBelief { p_leader: 0.6 }).unwrap();
        assert_eq!(tree.leaf_probs(), [0.6, 0.0, 0.0, 0.4]);
    }

    #[test]
    fn no_conflict_picks_fastest() {
        let p = planner(1.0);
        // Human already well past the merging point.
        let x = GameState::new((30.0, 8.0), (-20.0, 4.0), 0.5);
        let out = p.plan(&x, RoleBelief::uniform());
        assert!(out.feasible);
        assert_eq!(out.index, 9);
        assert_eq!(out.violation_prob, 0.0);
    }

    #[test]
    fn rejects_bad_params() {
        let model = GameModel::<f64>::default();
        assert!(MpcParams { t1: 0, ..MpcParams::<f64>::default() }.validate(model.horizon).is_err());
        assert!(MpcParams { t1: 10, ..MpcParams::<f64>::default() }.validate(model.horizon).is_err());
        assert!(MpcParams { p_a_hat: 1.5, ..MpcParams::<f64>::default() }.validate(10).is_err());
    }

    #[test]
    fn chance_constraint_boundary() {
        assert!(chance_feasible(1.0 - 0.98, 0.02));
        assert!(!chance_feasible(1.0 - 0.95, 0.02));
        assert!(chance_feasible(0.0, 0.0));
    }
}
