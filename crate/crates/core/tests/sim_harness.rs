use std::path::PathBuf;

use lfg_core::game::step_kinematics;
use lfg_core::sim::io::write_rows;
use lfg_core::sim::{
    read_run_log, read_summary, run_batch, run_episode, write_run_log, write_summary, Arrival, LogRow, Outcome,
    RunRecord, SimConfig, CSV_COLUMNS,
};
use lfg_core::{Axis, Role, VehicleState};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn row(t: f64, hv: [f64; 3], role: Role, hb: f64, av: [f64; 3], ab: f64, feasible: bool) -> LogRow {
    LogRow {
        t_s: t,
        hv_s_m: hv[0],
        hv_v_mps: hv[1],
        hv_a_mps2: hv[2],
        hv_role: role,
        hv_belief_av_leader: hb,
        av_s_m: av[0],
        av_v_mps: av[1],
        av_a_mps2: av[2],
        av_belief_hv_leader: ab,
        av_feasible: feasible,
    }
}

fn handcrafted() -> Vec<LogRow> {
    vec![
        row(0.0, [-20.0, 4.0, 2.0], Role::Leader, 0.5, [-20.0, 4.0, -1.5], 0.5, true),
        row(0.5, [-17.75, 5.0, 0.0], Role::Leader, 0.25, [-18.1875, 3.25, -6.0], 0.75, true),
        row(1.0, [-15.25, 5.0, -4.0], Role::Follower, 0.125, [-17.3125, 0.25, 0.0], 0.875, false),
    ]
}

fn assert_rows_follow_kinematics(rows: &[LogRow], dt: f64, v_max: f64) {
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let hv = step_kinematics(VehicleState::new(Axis::Y, a.hv_s_m, a.hv_v_mps), a.hv_a_mps2, dt, v_max);
        let av = step_kinematics(VehicleState::new(Axis::X, a.av_s_m, a.av_v_mps), a.av_a_mps2, dt, v_max);
        assert_eq!((hv.s, hv.v), (b.hv_s_m, b.hv_v_mps), "hv at t={}", b.t_s);
        assert_eq!((av.s, av.v), (b.av_s_m, b.av_v_mps), "av at t={}", b.t_s);
        assert_eq!(b.t_s - a.t_s, dt);
    }
}

#[test]
fn handcrafted_log_matches_golden_file() {
    let rows = handcrafted();
    assert_rows_follow_kinematics(&rows, 0.5, 10.0);
    let mut buf = Vec::new();
    write_rows(&rows, &mut buf).unwrap();
    let golden = std::fs::read(data("golden_run.csv")).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), String::from_utf8(golden).unwrap());
    assert_eq!(read_run_log(&data("golden_run.csv")).unwrap(), rows);
}

#[test]
fn empty_record_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    let outcome = Outcome {
        first_arrival: Arrival::Av,
        t_av: None,
        t_hv: None,
        safety_violation: false,
        collision: false,
        timeout: false,
        min_separation: 0.0,
    };
    write_run_log(&RunRecord { seed: 0, rows: vec![], outcome }, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{}\n", CSV_COLUMNS.join(",")));
    assert!(read_run_log(&path).unwrap().is_empty());
}

#[test]
fn simulated_log_round_trips_and_follows_kinematics() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::default();
    cfg.scenario.seed = 3;
    let rec = run_episode(&cfg).unwrap();
    assert!(rec.rows.len() > 4);
    assert_rows_follow_kinematics(&rec.rows, cfg.scenario.dt, cfg.actions.v_max);
    let path = dir.path().join("run.csv");
    write_run_log(&rec, &path).unwrap();
    assert_eq!(read_run_log(&path).unwrap(), rec.rows);
}

#[test]
fn foreign_columns_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "t_s,hv_s_m\n0.0,1.0\n").unwrap();
    assert!(read_run_log(&path).is_err());
    let missing = dir.path().join("missing.csv");
    let err = read_run_log(&missing).unwrap_err().to_string();
    assert!(err.contains("missing.csv"), "{err}");
}

#[test]
fn unobstructed_human_cruises_to_the_line() {
    let mut cfg = SimConfig::default();
    // The AV starts beyond the merge, out of the conflict.
    cfg.scenario.av_init = [20.0, 5.0];
    cfg.scenario.hv_init_center = [-30.0, 10.0];
    cfg.scenario.hv_init_jitter = [0.0, 0.0];
    for seed in 0..3 {
        cfg.scenario.seed = seed;
        let rec = run_episode(&cfg).unwrap();
        let o = rec.outcome;
        assert_eq!(o.t_av, Some(0.0));
        let want = (cfg.scenario.crossing_line - -30.0) / 10.0;
        assert!((o.t_hv.unwrap() - want).abs() < 1e-12, "{o:?}");
        assert_eq!(o.first_arrival, Arrival::Av);
        assert!(!o.safety_violation && !o.collision && !o.timeout);
        assert!(rec.rows.iter().all(|r| r.hv_v_mps == 10.0 && r.hv_a_mps2 == 0.0));
    }
}

#[test]
fn human_never_adapts_without_adaptation_likelihood() {
    for role in Role::ALL {
        let mut cfg = SimConfig::default();
        cfg.scenario.p_a = 0.0;
        cfg.scenario.hv_initial_role = role;
        for seed in 0..6 {
            cfg.scenario.seed = seed;
            let rec = run_episode(&cfg).unwrap();
            assert!(rec.rows.iter().all(|r| r.hv_role == role), "seed {seed}");
        }
    }
}

#[test]
fn episodes_are_deterministic_per_seed() {
    let mut cfg = SimConfig::default();
    cfg.scenario.seed = 41;
    assert_eq!(run_episode(&cfg).unwrap(), run_episode(&cfg).unwrap());
}

#[test]
fn parallel_batch_equals_serial_batch() {
    let mut cfg = SimConfig::default();
    cfg.scenario.seed = 5;
    cfg.scenario.p_a = 0.5;
    let serial = run_batch(&cfg, 12, Some(1)).unwrap();
    let parallel = run_batch(&cfg, 12, Some(3)).unwrap();
    assert_eq!(serial, parallel);
    assert_eq!(serial.n_runs, 12);
    assert_eq!(serial.av_first_pct + serial.hv_first_pct, 100.0);
    let again = run_batch(&cfg, 12, None).unwrap();
    assert_eq!(serial, again);
}

#[test]
fn single_run_percentages_are_all_or_nothing() {
    let mut cfg = SimConfig::default();
    for seed in 0..4 {
        cfg.scenario.seed = seed;
        let s = run_batch(&cfg, 1, Some(1)).unwrap();
        assert!(s.av_first_pct == 0.0 || s.av_first_pct == 100.0);
        assert_eq!(s.av_first_pct + s.hv_first_pct, 100.0);
    }
    assert!(run_batch(&cfg, 0, None).is_err());
}

#[test]
fn summary_json_carries_config_and_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::default();
    cfg.scenario.hv_initial_role = Role::Follower;
    let s = run_batch(&cfg, 3, Some(1)).unwrap();
    let path = dir.path().join("summary.json");
    write_summary(&s, &path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["config", "n_runs", "av_first_pct", "hv_first_pct", "violations", "collisions", "per_run"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["config"]["scenario"]["hv_initial_role"], "follower");
    let run = &doc["per_run"][0];
    for key in ["seed", "first", "t_av", "t_hv"] {
        assert!(run.get(key).is_some(), "missing per_run.{key}");
    }
    assert_eq!(read_summary(&path).unwrap(), s);
}

#[test]
fn shipped_config_file_is_the_default_experiment() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/intersection.toml");
    assert_eq!(SimConfig::load(&path).unwrap(), SimConfig::default());
}
