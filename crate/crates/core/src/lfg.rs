//! Leader and follower strategies of the leader-follower game over finite
//! trajectory sets.
//!
//! The follower plays max-min against the leader's whole set. The leader
//! assumes a max-min follower and maximises its worst case over the
//! follower's optimal set. Ties go to the lowest trajectory index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::actions::ActionTrajectory;
use crate::error::{Error, Result};
use crate::game::{pair_rewards, Agent, GameState, RewardParams, SafetyParams};
use crate::scalar::Scalar;

/// Relative tolerance for membership in the follower's optimal set.
pub const TOL_Q: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Leader,
    Follower,
}

impl Role {
    pub const ALL: [Role; 2] = [Role::Leader, Role::Follower];

    pub fn index(self) -> usize {
        match self {
            Role::Leader => 0,
            Role::Follower => 1,
        }
    }

    pub fn complement(self) -> Role {
        match self {
            Role::Leader => Role::Follower,
            Role::Follower => Role::Leader,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Leader => "leader",
            Role::Follower => "follower",
        })
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "leader" | "l" => Ok(Role::Leader),
            "follower" | "f" => Ok(Role::Follower),
            other => Err(Error::Config(format!("unknown role `{other}`"))),
        }
    }
}

/// Dense row-major payoff matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> PayoffMatrix<S> {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged payoff rows");
        Self::from_fn(rows.len(), cols, |r, c| rows[r][c])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> S {
        self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

fn check_nonempty<S: Scalar>(m: &PayoffMatrix<S>) -> Result<()> {
    if m.rows == 0 {
        return Err(Error::EmptyActionSet("follower"));
    }
    if m.cols == 0 {
        return Err(Error::EmptyActionSet("leader"));
    }
    Ok(())
}

/// `Q_f(u_f)`: the follower's worst case over every leader trajectory.
/// `follower[u_f][u_l]` holds the follower's cumulative reward.
pub fn follower_value<S: Scalar>(follower: &PayoffMatrix<S>, u_f: usize) -> Result<S> {
    check_nonempty(follower)?;
    Ok(row_min(follower, u_f))
}

fn row_min<S: Scalar>(m: &PayoffMatrix<S>, r: usize) -> S {
    m.data[r * m.cols..(r + 1) * m.cols].iter().copied().fold(S::infinity(), S::min)
}

fn argmax_first<S: Scalar>(values: impl Iterator<Item = S>) -> usize {
    let mut best = 0;
    let mut best_val = S::neg_infinity();
    for (i, v) in values.enumerate() {
        if v > best_val {
            best = i;
            best_val = v;
        }
    }
    best
}

/// Index of the max-min follower trajectory.
pub fn follower_decision<S: Scalar>(follower: &PayoffMatrix<S>) -> Result<usize> {
    check_nonempty(follower)?;
    Ok(argmax_first((0..follower.rows).map(|r| row_min(follower, r))))
}

/// All follower trajectories whose `Q_f` is maximal within [`TOL_Q`].
pub fn follower_optimal_set<S: Scalar>(follower: &PayoffMatrix<S>) -> Result<Vec<usize>> {
    check_nonempty(follower)?;
    let q: Vec<S> = (0..follower.rows).map(|r| row_min(follower, r)).collect();
    let best = q.iter().copied().fold(S::neg_infinity(), S::max);
    let tol = S::lit(TOL_Q) * best.abs().max(S::one());
    Ok((0..q.len()).filter(|&r| q[r] >= best - tol).collect())
}

/// Index of the leader trajectory maximising its worst case over the
/// follower's optimal set. `leader[u_l][u_f]`, `follower[u_f][u_l]`.
pub fn leader_decision<S: Scalar>(leader: &PayoffMatrix<S>, follower: &PayoffMatrix<S>) -> Result<usize> {
    check_nonempty(follower)?;
    if leader.rows != follower.cols || leader.cols != follower.rows {
        return Err(Error::InvalidParam(format!(
            "leader table {}x{} does not match follower table {}x{}",
            leader.rows, leader.cols, follower.rows, follower.cols
        )));
    }
    let optimal = follower_optimal_set(follower)?;
    Ok(argmax_first(
        (0..leader.rows).map(|u_l| optimal.iter().map(|&u_f| leader.at(u_l, u_f)).fold(S::infinity(), S::min)),
    ))
}

/// Both agents' cumulative rewards over every trajectory pair of a state.
/// `human[i][j]` and `robot[i][j]` index the human set by `i` and the robot
/// set by `j`.
#[derive(Debug, Clone)]
pub struct GamePayoffs<S> {
    pub human: PayoffMatrix<S>,
    pub robot: PayoffMatrix<S>,
}

impl<S: Scalar> GamePayoffs<S> {
    pub fn new(
        x: &GameState<S>,
        human_set: &[ActionTrajectory<S>],
        robot_set: &[ActionTrajectory<S>],
        reward: &RewardParams<S>,
        safety: &SafetyParams<S>,
    ) -> Result<Self> {
        if human_set.is_empty() {
            return Err(Error::EmptyActionSet("human"));
        }
        if robot_set.is_empty() {
            return Err(Error::EmptyActionSet("robot"));
        }
        let n = human_set[0].len();
        if let Some(bad) = human_set.iter().chain(robot_set).find(|t| t.len() != n) {
            return Err(Error::HorizonMismatch { robot: bad.len(), human: n });
        }
        let clearance = safety.clearance();
        let (rows, cols) = (human_set.len(), robot_set.len());
        let mut h = Vec::with_capacity(rows * cols);
        let mut r = Vec::with_capacity(rows * cols);
        for ht in human_set {
            for rt in robot_set {
                let (ph, pr) = pair_rewards(x, ht, rt, reward, clearance);
                h.push(ph);
                r.push(pr);
            }
        }
        Ok(Self {
            human: PayoffMatrix { rows, cols, data: h },
            robot: PayoffMatrix { rows, cols, data: r },
        })
    }

    /// Payoff tables seen by `agent` playing `role`:
    /// `(own[own][other], other[other][own])`.
    pub fn oriented(&self, agent: Agent) -> (PayoffMatrix<S>, PayoffMatrix<S>) {
        match agent {
            Agent::Human => (self.human.clone(), self.robot.transpose()),
            Agent::Robot => (self.robot.transpose(), self.human.clone()),
        }
    }

    /// Index into `agent`'s own set of its leader-follower decision.
    pub fn decision(&self, agent: Agent, role: Role) -> usize {
        let (own, other) = self.oriented(agent);
        match role {
            Role::Follower => follower_decision(&own),
            Role::Leader => leader_decision(&own, &other),
        }
        .expect("payoff tables are non-empty by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> PayoffMatrix<f64> {
        PayoffMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn follower_examples() {
        let f = m(&[&[3.0, 0.0], &[2.0, 1.0]]);
        assert_eq!(follower_decision(&f).unwrap(), 1);
        assert_eq!(follower_value(&f, 0).unwrap(), 0.0);
        assert_eq!(follower_value(&f, 1).unwrap(), 1.0);

        let single = m(&[&[7.0, 2.0, 9.0]]);
        assert_eq!(follower_decision(&single).unwrap(), 0);
        assert_eq!(follower_value(&single, 0).unwrap(), 2.0);

        let flat = m(&[&[4.0, 4.0], &[4.0, 4.0], &[4.0, 4.0]]);
        assert_eq!(follower_decision(&flat).unwrap(), 0);
        assert_eq!(follower_value(&flat, 2).unwrap(), 4.0);
        assert_eq!(follower_optimal_set(&flat).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn optimal_set_ties() {
        let f = m(&[&[1.0, 5.0], &[3.0, 2.0], &[2.0, 6.0]]);
        assert_eq!(follower_optimal_set(&f).unwrap(), vec![1, 2]);
        let f = m(&[&[1.0, 5.0], &[3.0, 2.0], &[2.5, 6.0]]);
        assert_eq!(follower_optimal_set(&f).unwrap(), vec![2]);
    }

    #[test]
    fn leader_best_responds_to_unique_follower() {
        // Follower rows = u_f, cols = u_l; unique max-min is u_f = 1.
        let f = m(&[&[3.0, 0.0], &[2.0, 1.0]]);
        let l = m(&[&[5.0, 1.0], &[0.0, 4.0]]);
        assert_eq!(leader_decision(&l, &f).unwrap(), 1);
        let flat = m(&[&[2.0, 2.0], &[2.0, 2.0]]);
        assert_eq!(leader_decision(&flat, &f).unwrap(), 0);
    }

    #[test]
    fn empty_sets_error() {
        let empty = PayoffMatrix::<f64>::from_fn(0, 3, |_, _| 0.0);
        assert!(matches!(follower_decision(&empty), Err(Error::EmptyActionSet(_))));
        let empty = PayoffMatrix::<f64>::from_fn(3, 0, |_, _| 0.0);
        assert!(follower_value(&empty, 0).is_err());
        assert!(follower_optimal_set(&empty).is_err());
    }

    #[test]
    fn role_parse() {
        assert_eq!("Leader".parse::<Role>().unwrap(), Role::Leader);
        assert_eq!("f".parse::<Role>().unwrap(), Role::Follower);
        assert!("boss".parse::<Role>().is_err());
        assert_eq!(Role::Leader.complement(), Role::Follower);
    }
}
