//! Role inference and adaptation: Bayesian belief over the other agent's
//! role, the plausible-role map, the role transition matrix and sampling.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::actions::ActionTrajectory;
use crate::error::{Error, Result};
use crate::game::{step_kinematics, Agent, GameState, VehicleState};
use crate::lfg::Role;
use crate::model::{GameModel, StageGame};
use crate::scalar::{clamp, Scalar};

/// A distribution over the two roles, stored as the leader probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoleDist<S> {
    pub p_leader: S,
}

/// Belief that the other agent is a leader.
pub type RoleBelief<S> = RoleDist<S>;

impl<S: Scalar> RoleDist<S> {
    pub fn new(p_leader: S) -> Result<Self> {
        if !(p_leader >= S::zero() && p_leader <= S::one()) {
            return Err(Error::InvalidParam(format!("probability {p_leader} outside [0, 1]")));
        }
        Ok(Self { p_leader })
    }

    pub fn uniform() -> Self {
        Self { p_leader: S::lit(0.5) }
    }

    pub fn certain(role: Role) -> Self {
        match role {
            Role::Leader => Self { p_leader: S::one() },
            Role::Follower => Self { p_leader: S::zero() },
        }
    }

    pub fn p_follower(&self) -> S {
        S::one() - self.p_leader
    }

    pub fn prob(&self, role: Role) -> S {
        match role {
            Role::Leader => self.p_leader,
            Role::Follower => self.p_follower(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct LikelihoodParams<S> {
    /// Residual variance of the other vehicle's position, m^2.
    pub cov_pos: S,
    /// Residual variance of the other vehicle's speed, (m/s)^2.
    pub cov_vel: S,
    /// Posterior components are clamped to `[floor, 1 - floor]`; zero disables it.
    pub belief_floor: S,
}

impl<S: Scalar> Default for LikelihoodParams<S> {
    fn default() -> Self {
        Self { cov_pos: S::lit(0.25), cov_vel: S::lit(0.25), belief_floor: S::lit(0.01) }
    }
}

impl<S: Scalar> LikelihoodParams<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.cov_pos > S::zero() && self.cov_vel > S::zero()) {
            return Err(Error::InvalidParam("residual covariance must be positive definite".into()));
        }
        if !(self.belief_floor >= S::zero() && self.belief_floor < S::lit(0.5)) {
            return Err(Error::InvalidParam(format!("belief_floor={} not in [0, 0.5)", self.belief_floor)));
        }
        Ok(())
    }

    /// Zero-mean bivariate normal density with diagonal covariance.
    pub fn density(&self, r_pos: S, r_vel: S) -> S {
        let two = S::lit(2.0);
        let quad = r_pos * r_pos / self.cov_pos + r_vel * r_vel / self.cov_vel;
        let norm = two * S::PI() * (self.cov_pos * self.cov_vel).sqrt();
        (-quad / two).exp() / norm
    }
}

/// The other agent's trajectory under a role hypothesis: `who` plays the
/// leader-follower game from `x_prev` with the hypothesised role.
pub fn predict_other_action<S: Scalar>(
    model: &GameModel<S>,
    x_prev: &GameState<S>,
    role_hypothesis: Role,
    who: Agent,
) -> ActionTrajectory<S> {
    model.stage_game(x_prev).decide(who, role_hypothesis).clone()
}

/// One Bayesian step from already-computed predictions of the other
/// vehicle's state, indexed as [`Role::ALL`].
pub fn bayes_update<S: Scalar>(
    prior: RoleBelief<S>,
    predicted: [VehicleState<S>; 2],
    observed: &VehicleState<S>,
    params: &LikelihoodParams<S>,
) -> RoleBelief<S> {
    let lik = predicted.map(|p| params.density(observed.s - p.s, observed.v - p.v));
    let un_l = lik[0] * prior.p_leader;
    let un_f = lik[1] * prior.p_follower();
    let total = un_l + un_f;
    let floor = params.belief_floor;
    if !(total > S::zero()) || !total.is_finite() {
        log::debug!("role likelihoods degenerate ({:?}); keeping prior", lik);
        return RoleDist { p_leader: clamp(prior.p_leader, floor, S::one() - floor) };
    }
    RoleDist { p_leader: clamp(un_l / total, floor, S::one() - floor) }
}

/// Updates `ego`'s belief on the other agent's role after observing `x_obs`
/// one step after `x_prev`, where `ego` applied `own_action`.
pub fn belief_update<S: Scalar>(
    model: &GameModel<S>,
    belief: RoleBelief<S>,
    ego: Agent,
    x_prev: &GameState<S>,
    own_action: S,
    x_obs: &GameState<S>,
    params: &LikelihoodParams<S>,
) -> RoleBelief<S> {
    belief_update_in(&model.stage_game(x_prev), model, belief, ego, own_action, x_obs, params)
}

/// As [`belief_update`], reusing the stage game already solved at `x_prev`.
pub fn belief_update_in<S: Scalar>(
    game_prev: &StageGame<S>,
    model: &GameModel<S>,
    belief: RoleBelief<S>,
    ego: Agent,
    own_action: S,
    x_obs: &GameState<S>,
    params: &LikelihoodParams<S>,
) -> RoleBelief<S> {
    let other = ego.other();
    let x_prev = &game_prev.state;
    // x_hat = f(x_prev, own_action, predicted other action). The ego part of
    // x_hat equals the observation, so only the other vehicle's residual matters.
    let _ = own_action;
    let predicted = game_prev
        .decisions(other)
        .map(|traj| step_kinematics(*x_prev.vehicle(other), traj.first_accel(), model.dt, model.actions.v_max));
    bayes_update(belief, predicted, x_obs.vehicle(other), params)
}

/// Ego takes the complementary role: `P^p(l) = P(other = f)`.
pub fn plausible_role_complementary<S: Scalar>(belief_on_other: RoleBelief<S>) -> RoleDist<S> {
    RoleDist { p_leader: belief_on_other.p_follower() }
}

/// Maximum-likelihood plausible role; an exact tie keeps `current_role`.
pub fn plausible_role_mle<S: Scalar>(belief_on_other: RoleBelief<S>, current_role: Role) -> Role {
    let (pl, pf) = (belief_on_other.p_leader, belief_on_other.p_follower());
    if pl < pf {
        Role::Leader
    } else if pl > pf {
        Role::Follower
    } else {
        current_role
    }
}

/// Selectable plausible-role map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlausibleMap {
    #[default]
    Mle,
    Complementary,
}

impl PlausibleMap {
    pub fn apply<S: Scalar>(self, belief_on_other: RoleBelief<S>, current_role: Role) -> RoleDist<S> {
        match self {
            PlausibleMap::Mle => RoleDist::certain(plausible_role_mle(belief_on_other, current_role)),
            PlausibleMap::Complementary => plausible_role_complementary(belief_on_other),
        }
    }
}

/// Column-stochastic role transition matrix, `entries[next][prev]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionMatrix<S> {
    pub entries: [[S; 2]; 2],
}

impl<S: Scalar> TransitionMatrix<S> {
    pub fn identity() -> Self {
        Self { entries: [[S::one(), S::zero()], [S::zero(), S::one()]] }
    }

    pub fn get(&self, next: Role, prev: Role) -> S {
        self.entries[next.index()][prev.index()]
    }

    /// Distribution of the next role given the previous one.
    pub fn column(&self, prev: Role) -> RoleDist<S> {
        RoleDist { p_leader: self.get(Role::Leader, prev) }
    }

    /// `Pi * p` for a role distribution `p`.
    pub fn apply(&self, dist: RoleDist<S>) -> RoleDist<S> {
        RoleDist { p_leader: self.entries[0][0] * dist.p_leader + self.entries[0][1] * dist.p_follower() }
    }
}

/// Adaptation matrix: with probability `p_a` the agent moves to the
/// plausible role, otherwise it keeps its role.
pub fn transition_matrix<S: Scalar>(plausible: RoleDist<S>, p_a: S) -> TransitionMatrix<S> {
    let one = S::one();
    let (pl, pf) = (plausible.p_leader, plausible.p_follower());
    TransitionMatrix {
        entries: [
            [pl * one + pf * (one - p_a), pl * p_a],
            [pf * p_a, pl * (one - p_a) + pf * one],
        ],
    }
}

/// Draws the next role from the column of `current`.
pub fn sample_role<S: Scalar, R: Rng + ?Sized>(current: Role, matrix: &TransitionMatrix<S>, rng: &mut R) -> Role {
    let u: f64 = rng.gen();
    if u < matrix.get(Role::Leader, current).as_f64() {
        Role::Leader
    } else {
        Role::Follower
    }
}
