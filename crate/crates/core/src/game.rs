//! Vehicle kinematics, the joint game state, the safe set and the
//! intersection reward.
//!
//! Both vehicles move along a single axis towards the merging point at the
//! origin: the robot (AV) eastbound on `x`, the human (HV) northbound on `y`.
//! Positions are negative before the merging point.

use serde::{Deserialize, Serialize};

use crate::actions::ActionTrajectory;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// The two players of the interaction game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Agent {
    Human,
    Robot,
}

impl Agent {
    pub fn other(self) -> Agent {
        match self {
            Agent::Human => Agent::Robot,
            Agent::Robot => Agent::Human,
        }
    }
}

/// Longitudinal state of one vehicle on its travel axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState<S> {
    pub axis: Axis,
    /// Position along the axis, metres (negative before the merging point).
    pub s: S,
    /// Speed, m/s, never negative.
    pub v: S,
}

impl<S: Scalar> VehicleState<S> {
    pub fn new(axis: Axis, s: S, v: S) -> Self {
        Self { axis, s, v }
    }

    /// Planar position; the off-axis coordinate is always zero.
    pub fn position(&self) -> (S, S) {
        match self.axis {
            Axis::X => (self.s, S::zero()),
            Axis::Y => (S::zero(), self.s),
        }
    }
}

/// Advances one vehicle by one sampling period under constant acceleration.
///
/// Speed is confined to `[0, v_max]`. When the unconstrained speed would leave
/// that band inside the step, the vehicle follows the double integrator until
/// it stops (or reaches `v_max`) and then holds that speed for the rest of the
/// step, so position never runs backwards.
pub fn step_kinematics<S: Scalar>(state: VehicleState<S>, accel: S, dt: S, v_max: S) -> VehicleState<S> {
    let half = S::lit(0.5);
    let v_raw = state.v + accel * dt;
    let (s, v) = if v_raw < S::zero() {
        // accel < 0 here; stop time v / |a| lies within the step.
        let t_stop = state.v / -accel;
        (state.s + state.v * t_stop + half * accel * t_stop * t_stop, S::zero())
    } else if v_raw > v_max {
        let t_cap = ((v_max - state.v) / accel).max(S::zero());
        let s_cap = state.s + state.v * t_cap + half * accel * t_cap * t_cap;
        (s_cap + v_max * (dt - t_cap), v_max)
    } else {
        (state.s + state.v * dt + half * accel * dt * dt, v_raw)
    };
    VehicleState { axis: state.axis, s, v }
}

/// Joint state `x = (x^H, x^R)` of the two-player game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameState<S> {
    pub human: VehicleState<S>,
    pub robot: VehicleState<S>,
    /// Discrete time index.
    pub t: u32,
    /// Sampling period, seconds.
    pub dt: S,
}

impl<S: Scalar> GameState<S> {
    /// Human on `y`, robot on `x`, starting at `t = 0`.
    pub fn new(human: (S, S), robot: (S, S), dt: S) -> Self {
        Self {
            human: VehicleState::new(Axis::Y, human.0, human.1),
            robot: VehicleState::new(Axis::X, robot.0, robot.1),
            t: 0,
            dt,
        }
    }

    pub fn vehicle(&self, agent: Agent) -> &VehicleState<S> {
        match agent {
            Agent::Human => &self.human,
            Agent::Robot => &self.robot,
        }
    }

    pub fn vehicle_mut(&mut self, agent: Agent) -> &mut VehicleState<S> {
        match agent {
            Agent::Human => &mut self.human,
            Agent::Robot => &mut self.robot,
        }
    }

    /// Euclidean distance between the two vehicles.
    pub fn separation(&self) -> S {
        separation(&self.human, &self.robot)
    }

    /// Applies one step of both vehicles' kinematics.
    pub fn step(&self, human_accel: S, robot_accel: S, v_max: S) -> Self {
        Self {
            human: step_kinematics(self.human, human_accel, self.dt, v_max),
            robot: step_kinematics(self.robot, robot_accel, self.dt, v_max),
            t: self.t + 1,
            dt: self.dt,
        }
    }
}

pub(crate) fn separation_sq<S: Scalar>(a: &VehicleState<S>, b: &VehicleState<S>) -> S {
    let (ax, ay) = a.position();
    let (bx, by) = b.position();
    let dx = ax - bx;
    let dy = ay - by;
    dx * dx + dy * dy
}

pub fn separation<S: Scalar>(a: &VehicleState<S>, b: &VehicleState<S>) -> S {
    separation_sq(a, b).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct RewardParams<S> {
    /// Collision penalty weight.
    pub w1: S,
    /// Control effort weight, multiplies |acceleration|.
    pub w2: S,
    /// Discount factor in (0, 1].
    pub lambda: S,
}

impl<S: Scalar> Default for RewardParams<S> {
    fn default() -> Self {
        Self { w1: S::lit(100.0), w2: S::lit(0.1), lambda: S::one() }
    }
}

impl<S: Scalar> RewardParams<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1 > S::zero()) || !(self.w2 >= S::zero()) {
            return Err(Error::InvalidParam(format!("reward weights w1={} w2={}", self.w1, self.w2)));
        }
        if !(self.lambda > S::zero() && self.lambda <= S::one()) {
            return Err(Error::InvalidParam(format!("discount lambda={} not in (0, 1]", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct SafetyParams<S> {
    pub veh_length: S,
    pub clearance_factor: S,
    /// Chance-constraint risk level.
    pub epsilon: S,
}

impl<S: Scalar> Default for SafetyParams<S> {
    fn default() -> Self {
        Self { veh_length: S::lit(5.0), clearance_factor: S::lit(1.5), epsilon: S::lit(0.02) }
    }
}

impl<S: Scalar> SafetyParams<S> {
    /// Minimum admissible separation, `clearance_factor * veh_length`.
    pub fn clearance(&self) -> S {
        self.clearance_factor * self.veh_length
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.veh_length > S::zero()) || !(self.clearance_factor >= S::one()) {
            return Err(Error::InvalidParam(format!(
                "vehicle length {} / clearance factor {}",
                self.veh_length, self.clearance_factor
            )));
        }
        if !(self.epsilon >= S::zero() && self.epsilon < S::one()) {
            return Err(Error::InvalidParam(format!("epsilon={} not in [0, 1)", self.epsilon)));
        }
        Ok(())
    }
}

/// True iff the vehicles are at least `clearance_factor * veh_length` apart.
pub fn in_safe_set<S: Scalar>(state: &GameState<S>, params: &SafetyParams<S>) -> bool {
    pair_safe(&state.human, &state.robot, params.clearance())
}

#[inline]
pub(crate) fn pair_safe<S: Scalar>(a: &VehicleState<S>, b: &VehicleState<S>, clearance: S) -> bool {
    separation_sq(a, b) >= clearance * clearance
}

/// Single-step reward of `agent` after reaching `state_next` with `accel`:
/// progress since `initial_pos`, minus a speed-weighted collision penalty and
/// an effort term.
pub fn step_reward<S: Scalar>(
    state_next: &GameState<S>,
    agent: Agent,
    accel: S,
    initial_pos: S,
    collided: bool,
    params: &RewardParams<S>,
) -> S {
    let veh = state_next.vehicle(agent);
    reward_terms(veh.s, veh.v, accel, initial_pos, collided, params)
}

#[inline]
pub(crate) fn reward_terms<S: Scalar>(s: S, v: S, accel: S, initial_pos: S, collided: bool, params: &RewardParams<S>) -> S {
    let c = if collided { S::one() + v } else { S::zero() };
    (s - initial_pos) - params.w1 * c - params.w2 * accel.abs()
}

/// Discounted sum of [`step_reward`] for `agent` along the joint rollout of
/// the two trajectories, measuring progress from the positions in `initial`.
pub fn cumulative_reward<S: Scalar>(
    initial: &GameState<S>,
    robot_traj: &ActionTrajectory<S>,
    human_traj: &ActionTrajectory<S>,
    agent: Agent,
    reward: &RewardParams<S>,
    safety: &SafetyParams<S>,
) -> Result<S> {
    if robot_traj.len() != human_traj.len() {
        return Err(Error::HorizonMismatch { robot: robot_traj.len(), human: human_traj.len() });
    }
    let (h, r) = pair_rewards(initial, human_traj, robot_traj, reward, safety.clearance());
    Ok(match agent {
        Agent::Human => h,
        Agent::Robot => r,
    })
}

/// Both agents' cumulative rewards for one trajectory pair. Lengths are
/// assumed equal.
pub(crate) fn pair_rewards<S: Scalar>(
    initial: &GameState<S>,
    human_traj: &ActionTrajectory<S>,
    robot_traj: &ActionTrajectory<S>,
    reward: &RewardParams<S>,
    clearance: S,
) -> (S, S) {
    let h0 = initial.human.s;
    let r0 = initial.robot.s;
    let mut disc = S::one();
    let mut total_h = S::zero();
    let mut total_r = S::zero();
    for k in 0..human_traj.len() {
        let hs = &human_traj.states[k + 1];
        let rs = &robot_traj.states[k + 1];
        let collided = !pair_safe(hs, rs, clearance);
        total_h += disc * reward_terms(hs.s, hs.v, human_traj.accels[k], h0, collided, reward);
        total_r += disc * reward_terms(rs.s, rs.v, robot_traj.accels[k], r0, collided, reward);
        disc *= reward.lambda;
    }
    (total_h, total_r)
}
