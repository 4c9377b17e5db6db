//! Discrete admissible trajectory sets.
//!
//! Each set holds `n_mesh` speed-tracking trajectories towards target speeds
//! spread over the reachable band, plus one trajectory that keeps the current
//! speed. The slowest target is swapped for an exact stop at the crossing
//! line whenever that stop is reachable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{step_kinematics, VehicleState};
use crate::scalar::{clamp, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TrajectoryTag<S> {
    TargetSpeed(S),
    KeepSpeed,
    StopAtLine,
}

/// An acceleration sequence and the rollout it induces from its first state.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionTrajectory<S> {
    pub accels: Vec<S>,
    /// `accels.len() + 1` states, starting with the initial state.
    pub states: Vec<VehicleState<S>>,
    pub tag: TrajectoryTag<S>,
}

impl<S: Scalar> ActionTrajectory<S> {
    /// Rolls out `accels` from `initial`.
    pub fn rollout(initial: VehicleState<S>, accels: Vec<S>, dt: S, v_max: S, tag: TrajectoryTag<S>) -> Self {
        let mut states = Vec::with_capacity(accels.len() + 1);
        states.push(initial);
        let mut cur = initial;
        for &a in &accels {
            cur = step_kinematics(cur, a, dt, v_max);
            states.push(cur);
        }
        Self { accels, states, tag }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.accels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accels.is_empty()
    }

    pub fn first_accel(&self) -> S {
        self.accels.first().copied().unwrap_or_else(S::zero)
    }

    pub fn last_state(&self) -> &VehicleState<S> {
        self.states.last().expect("rollout always holds its initial state")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "S: Scalar + Deserialize<'de>"))]
pub struct ActionGenParams<S> {
    /// Number of target speeds.
    pub n_mesh: usize,
    pub a_min: S,
    pub a_max: S,
    pub v_max: S,
    /// Speed-tracking gain, 1/s.
    pub ovm_gain: S,
    /// Position of the intersection entrance on the travel axis.
    pub crossing_line: S,
}

impl<S: Scalar> Default for ActionGenParams<S> {
    fn default() -> Self {
        Self {
            n_mesh: 10,
            a_min: S::lit(-4.0),
            a_max: S::lit(2.0),
            v_max: S::lit(10.0),
            ovm_gain: S::one(),
            crossing_line: S::lit(-6.5),
        }
    }
}

impl<S: Scalar> ActionGenParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.n_mesh < 2 {
            return Err(Error::InvalidParam(format!("n_mesh={} < 2", self.n_mesh)));
        }
        if !(self.a_min < S::zero() && S::zero() < self.a_max) {
            return Err(Error::InvalidParam(format!("acceleration bounds [{}, {}]", self.a_min, self.a_max)));
        }
        if !(self.ovm_gain > S::zero()) || !(self.v_max > S::zero()) {
            return Err(Error::InvalidParam(format!("ovm_gain={} v_max={}", self.ovm_gain, self.v_max)));
        }
        Ok(())
    }

    /// Number of trajectories in every generated set.
    pub fn set_size(&self) -> usize {
        self.n_mesh + 1
    }
}

/// Lowest and highest speed reachable within `horizon_s`, capped to `[0, v_max]`.
pub fn reachable_speed_range<S: Scalar>(state: &VehicleState<S>, params: &ActionGenParams<S>, horizon_s: S) -> (S, S) {
    let v_hi = (state.v + params.a_max * horizon_s).min(params.v_max);
    let v_lo = (state.v + params.a_min * horizon_s).max(S::zero());
    (v_lo, v_hi)
}

/// Constant deceleration that brings the vehicle to rest exactly on the
/// crossing line, if it is within the acceleration bounds.
pub fn stop_at_line_decel<S: Scalar>(state: &VehicleState<S>, params: &ActionGenParams<S>) -> Option<S> {
    let dist = params.crossing_line - state.s;
    if dist < S::zero() {
        return None;
    }
    if state.v == S::zero() {
        return Some(S::zero());
    }
    if dist == S::zero() {
        return None;
    }
    let a = -(state.v * state.v) / (S::lit(2.0) * dist);
    (a >= params.a_min).then_some(a)
}

/// Builds the ordered admissible set: target speeds ascending (the slowest
/// possibly replaced by a stop at the line), then keep-speed.
pub fn generate_action_set<S: Scalar>(
    state: &VehicleState<S>,
    params: &ActionGenParams<S>,
    n_steps: usize,
    dt: S,
) -> Vec<ActionTrajectory<S>> {
    let horizon_s = S::from_usize(n_steps).expect("step count fits scalar") * dt;
    let (v_lo, v_hi) = reachable_speed_range(state, params, horizon_s);
    let denom = S::from_usize(params.n_mesh - 1).expect("mesh size fits scalar");

    let mut set = Vec::with_capacity(params.set_size());
    for i in 0..params.n_mesh {
        let frac = S::from_usize(i).expect("index fits scalar") / denom;
        let v_tgt = v_lo + (v_hi - v_lo) * frac;
        if i == 0 && v_lo == S::zero() {
            if let Some(decel) = stop_at_line_decel(state, params) {
                set.push(stop_at_line(state, decel, n_steps, dt, params.v_max));
                continue;
            }
        }
        set.push(track_speed(state, v_tgt, params, n_steps, dt));
    }
    set.push(ActionTrajectory::rollout(
        *state,
        vec![S::zero(); n_steps],
        dt,
        params.v_max,
        TrajectoryTag::KeepSpeed,
    ));
    set
}

fn track_speed<S: Scalar>(
    state: &VehicleState<S>,
    v_tgt: S,
    params: &ActionGenParams<S>,
    n_steps: usize,
    dt: S,
) -> ActionTrajectory<S> {
    let mut accels = Vec::with_capacity(n_steps);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(*state);
    let mut cur = *state;
    for _ in 0..n_steps {
        let a = clamp(params.ovm_gain * (v_tgt - cur.v), params.a_min, params.a_max);
        cur = step_kinematics(cur, a, dt, params.v_max);
        accels.push(a);
        states.push(cur);
    }
    ActionTrajectory { accels, states, tag: TrajectoryTag::TargetSpeed(v_tgt) }
}

fn stop_at_line<S: Scalar>(state: &VehicleState<S>, decel: S, n_steps: usize, dt: S, v_max: S) -> ActionTrajectory<S> {
    let mut accels = Vec::with_capacity(n_steps);
    let mut states = Vec::with_capacity(n_steps + 1);
    states.push(*state);
    let mut cur = *state;
    for _ in 0..n_steps {
        let a = if cur.v > S::zero() { decel } else { S::zero() };
        cur = step_kinematics(cur, a, dt, v_max);
        accels.push(a);
        states.push(cur);
    }
    ActionTrajectory { accels, states, tag: TrajectoryTag::StopAtLine }
}
