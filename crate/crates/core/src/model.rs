//! Shared game model: the parameters every agent uses to generate action
//! sets and solve the leader-follower game at a joint state.

use serde::{Deserialize, Serialize};

use crate::actions::{generate_action_set, ActionGenParams, ActionTrajectory};
use crate::error::Result;
use crate::game::{Agent, GameState, RewardParams, SafetyParams, VehicleState};
use crate::lfg::{GamePayoffs, Role};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct GameModel<S> {
    /// Planning horizon in steps.
    pub horizon: usize,
    pub dt: S,
    pub actions: ActionGenParams<S>,
    pub reward: RewardParams<S>,
    pub safety: SafetyParams<S>,
}

impl<S: Scalar> Default for GameModel<S> {
    fn default() -> Self {
        Self {
            horizon: 10,
            dt: S::lit(0.5),
            actions: ActionGenParams::default(),
            reward: RewardParams::default(),
            safety: SafetyParams::default(),
        }
    }
}

impl<S: Scalar> GameModel<S> {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || !(self.dt > S::zero()) {
            return Err(crate::Error::InvalidParam(format!("horizon={} dt={}", self.horizon, self.dt)));
        }
        self.actions.validate()?;
        self.reward.validate()?;
        self.safety.validate()
    }

    pub fn action_set(&self, vehicle: &VehicleState<S>) -> Vec<ActionTrajectory<S>> {
        generate_action_set(vehicle, &self.actions, self.horizon, self.dt)
    }

    /// Builds both action sets and the joint payoff tables at `x`.
    pub fn stage_game(&self, x: &GameState<S>) -> StageGame<S> {
        let human_set = self.action_set(&x.human);
        let robot_set = self.action_set(&x.robot);
        let payoffs = GamePayoffs::new(x, &human_set, &robot_set, &self.reward, &self.safety)
            .expect("generated sets are non-empty and share the horizon");
        StageGame { state: *x, human_set, robot_set, payoffs }
    }
}

/// The one-shot game at a joint state: both trajectory sets and payoffs.
#[derive(Debug, Clone)]
pub struct StageGame<S> {
    pub state: GameState<S>,
    pub human_set: Vec<ActionTrajectory<S>>,
    pub robot_set: Vec<ActionTrajectory<S>>,
    pub payoffs: GamePayoffs<S>,
}

impl<S: Scalar> StageGame<S> {
    pub fn set(&self, agent: Agent) -> &[ActionTrajectory<S>] {
        match agent {
            Agent::Human => &self.human_set,
            Agent::Robot => &self.robot_set,
        }
    }

    /// The trajectory `agent` picks when playing `role`.
    pub fn decide(&self, agent: Agent, role: Role) -> &ActionTrajectory<S> {
        &self.set(agent)[self.payoffs.decision(agent, role)]
    }

    /// Leader and follower decisions of `agent`, in [`Role::ALL`] order.
    pub fn decisions(&self, agent: Agent) -> [&ActionTrajectory<S>; 2] {
        [self.decide(agent, Role::Leader), self.decide(agent, Role::Follower)]
    }
}
