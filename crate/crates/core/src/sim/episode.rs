//! One closed-loop intersection run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{in_safe_set, Agent, GameState};
use crate::lfg::Role;
use crate::model::StageGame;
use crate::role::{belief_update_in, sample_role, transition_matrix, RoleBelief};
use crate::sim::config::{AvPolicy, SimConfig};

/// Which vehicle reached the crossing line first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arrival {
    Av,
    Hv,
}

/// One logged decision step. Field names are the CSV column names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t_s: f64,
    pub hv_s_m: f64,
    pub hv_v_mps: f64,
    pub hv_a_mps2: f64,
    pub hv_role: Role,
    pub hv_belief_av_leader: f64,
    pub av_s_m: f64,
    pub av_v_mps: f64,
    pub av_a_mps2: f64,
    pub av_belief_hv_leader: f64,
    pub av_feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub first_arrival: Arrival,
    /// Interpolated crossing-line times, s.
    pub t_av: Option<f64>,
    pub t_hv: Option<f64>,
    /// Some joint state left the safe set.
    pub safety_violation: bool,
    /// Separation dropped below one vehicle length.
    pub collision: bool,
    /// The run hit `max_sim_time` before both vehicles cleared the merge.
    pub timeout: bool,
    pub min_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub rows: Vec<LogRow>,
    pub outcome: Outcome,
}

struct AdaptiveAgent {
    role: Role,
    p_a: f64,
}

/// Simulates one episode with the seed in `cfg.scenario.seed`.
pub fn run_episode(cfg: &SimConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let sc = &cfg.scenario;
    let model = cfg.model();
    let planner = cfg.planner()?;
    let v_max = model.actions.v_max;
    let clearance = model.safety.clearance();

    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let mut jitter = |centre: f64, half: f64| centre + half * (2.0 * rng.gen::<f64>() - 1.0);
    let hv0 = (jitter(sc.hv_init_center[0], sc.hv_init_jitter[0]), jitter(sc.hv_init_center[1], sc.hv_init_jitter[1]));
    let mut x = GameState::new(hv0, (sc.av_init[0], sc.av_init[1]), sc.dt);

    let mut hv = AdaptiveAgent { role: sc.hv_initial_role, p_a: sc.p_a };
    let mut av = AdaptiveAgent { role: sc.av_initial_role.unwrap_or(sc.hv_initial_role.complement()), p_a: sc.av_p_a };
    let mut hv_belief = RoleBelief::<f64>::uniform();
    let mut av_belief = RoleBelief::<f64>::uniform();

    let line = sc.crossing_line;
    let mut t_hv = (x.human.s >= line).then_some(0.0);
    let mut t_av = (x.robot.s >= line).then_some(0.0);
    let mut violation = !in_safe_set(&x, &model.safety);
    let mut collision = x.separation() < model.safety.veh_length;
    let mut min_sep = x.separation();

    let mut rows = Vec::new();
    let mut prev: Option<(StageGame<f64>, f64, f64)> = None;
    let max_steps = (sc.max_sim_time / sc.dt).round() as usize;
    let mut timeout = true;

    for step in 0..max_steps {
        if x.human.s >= clearance && x.robot.s >= clearance {
            timeout = false;
            break;
        }
        let game = model.stage_game(&x);
        if let Some((game_prev, hv_a_prev, av_a_prev)) = &prev {
            hv_belief = belief_update_in(game_prev, &model, hv_belief, Agent::Human, *hv_a_prev, &x, &cfg.likelihood);
            av_belief = belief_update_in(game_prev, &model, av_belief, Agent::Robot, *av_a_prev, &x, &cfg.likelihood);
        }
        let resolved = sc.freeze_roles_after_merge && x.human.s > 0.0 && x.robot.s > 0.0;

        if !resolved {
            let plausible = sc.plausible.apply(hv_belief, hv.role);
            hv.role = sample_role(hv.role, &transition_matrix(plausible, hv.p_a), &mut rng);
        }
        let hv_a = game.decide(Agent::Human, hv.role).first_accel();

        let (av_a, feasible) = match sc.av_policy {
            AvPolicy::Lfg => {
                if !resolved {
                    let plausible = sc.plausible.apply(av_belief, av.role);
                    av.role = sample_role(av.role, &transition_matrix(plausible, av.p_a), &mut rng);
                }
                (game.decide(Agent::Robot, av.role).first_accel(), true)
            }
            AvPolicy::BranchMpc => {
                let plan = planner.plan_over(&game, &game.robot_set, av_belief)?;
                (plan.chosen.first_accel(), plan.feasible)
            }
        };

        rows.push(LogRow {
            t_s: step as f64 * sc.dt,
            hv_s_m: x.human.s,
            hv_v_mps: x.human.v,
            hv_a_mps2: hv_a,
            hv_role: hv.role,
            hv_belief_av_leader: hv_belief.p_leader,
            av_s_m: x.robot.s,
            av_v_mps: x.robot.v,
            av_a_mps2: av_a,
            av_belief_hv_leader: av_belief.p_leader,
            av_feasible: feasible,
        });

        let next = x.step(hv_a, av_a, v_max);
        let t0 = step as f64 * sc.dt;
        if t_hv.is_none() {
            t_hv = crossing_time(x.human.s, next.human.s, line, t0, sc.dt);
        }
        if t_av.is_none() {
            t_av = crossing_time(x.robot.s, next.robot.s, line, t0, sc.dt);
        }
        violation |= !in_safe_set(&next, &model.safety);
        let sep = next.separation();
        collision |= sep < model.safety.veh_length;
        min_sep = min_sep.min(sep);

        prev = Some((game, hv_a, av_a));
        x = next;
    }
    if timeout && x.human.s >= clearance && x.robot.s >= clearance {
        timeout = false;
    }
    if timeout {
        log::warn!("seed {}: timed out after {} s before both vehicles cleared the merge", sc.seed, sc.max_sim_time);
    }

    let first_arrival = match (t_av, t_hv) {
        (Some(a), Some(h)) => {
            if a == h {
                log::info!("seed {}: exact arrival tie at {a} s, awarded to AV", sc.seed);
            }
            if a <= h {
                Arrival::Av
            } else {
                Arrival::Hv
            }
        }
        (Some(_), None) => Arrival::Av,
        (None, Some(_)) => Arrival::Hv,
        (None, None) => {
            if x.robot.s >= x.human.s {
                Arrival::Av
            } else {
                Arrival::Hv
            }
        }
    };

    Ok(RunRecord {
        seed: sc.seed,
        rows,
        outcome: Outcome {
            first_arrival,
            t_av,
            t_hv,
            safety_violation: violation,
            collision,
            timeout,
            min_separation: min_sep,
        },
    })
}

/// Linearly interpolated time at which a position moving from `s0` to `s1`
/// over `[t0, t0 + dt]` passes `line`, if it does.
pub fn crossing_time(s0: f64, s1: f64, line: f64, t0: f64, dt: f64) -> Option<f64> {
    (s0 < line && s1 >= line).then(|| t0 + dt * (line - s0) / (s1 - s0))
}
