//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use lfg_core::actions::TrajectoryTag;
use lfg_core::lfg::PayoffMatrix;
use lfg_core::sim::SimConfig;
use lfg_core::{ActionTrajectory, BranchMpc, GameState, StageGame};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Follower values by brute force: for each row, the smallest entry found
/// by comparing every pair of outcomes.
pub fn oracle_q(f: &[Vec<i64>]) -> Vec<i64> {
    f.iter()
        .map(|row| *row.iter().find(|&&x| row.iter().all(|&y| x <= y)).unwrap())
        .collect()
}

pub fn oracle_follower_set(f: &[Vec<i64>]) -> Vec<usize> {
    let q = oracle_q(f);
    (0..q.len()).filter(|&i| q.iter().all(|&other| q[i] >= other)).collect()
}

pub fn oracle_follower_pick(f: &[Vec<i64>]) -> usize {
    oracle_follower_set(f)[0]
}

/// Leader pick: the first leader row whose worst case over the follower's
/// optimal set is at least every other row's worst case.
pub fn oracle_leader_pick(l: &[Vec<i64>], f: &[Vec<i64>]) -> usize {
    let opt = oracle_follower_set(f);
    let worst: Vec<i64> = l.iter().map(|row| opt.iter().map(|&j| row[j]).min().unwrap()).collect();
    (0..l.len()).find(|&i| worst.iter().all(|&w| worst[i] >= w)).unwrap()
}

pub fn to_matrix(rows: &[Vec<i64>]) -> PayoffMatrix<f64> {
    PayoffMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect::<Vec<_>>())
}

pub fn random_table(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<i64>> {
    // A narrow range forces plenty of ties.
    (0..rows).map(|_| (0..cols).map(|_| rng.gen_range(-3..=3)).collect()).collect()
}

/// Branch planner on the default experiment with a chosen assumed
/// adaptation likelihood and belief floor.
pub fn planner_with(p_a_hat: f64, floor: f64) -> BranchMpc {
    let mut cfg = SimConfig::default();
    cfg.mpc.p_a_hat = p_a_hat;
    cfg.likelihood.belief_floor = floor;
    cfg.planner().unwrap()
}

/// Both vehicles 20 m out at 4 m/s. Candidates: stop, keep speed, and
/// accelerate to the top speed.
pub fn three_candidates(p: &BranchMpc) -> (StageGame, Vec<ActionTrajectory>) {
    let x = GameState::new((-20.0, 4.0), (-20.0, 4.0), 0.5);
    let root = p.model.stage_game(&x);
    let pick = |want: &dyn Fn(&TrajectoryTag<f64>) -> bool| {
        root.robot_set.iter().find(|c| want(&c.tag)).expect("tag present").clone()
    };
    let v_max = p.model.actions.v_max;
    let cands = vec![
        pick(&|t| matches!(t, TrajectoryTag::StopAtLine)),
        pick(&|t| matches!(t, TrajectoryTag::KeepSpeed)),
        pick(&|t| matches!(t, TrajectoryTag::TargetSpeed(v) if (*v - v_max).abs() < 1e-9)),
    ];
    (root, cands)
}
