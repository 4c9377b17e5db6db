//! Simulation configuration, TOML loading and dotted-key overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actions::ActionGenParams;
use crate::branch_mpc::{BranchMpc, MpcParams};
use crate::error::{Error, Result};
use crate::game::{RewardParams, SafetyParams};
use crate::lfg::Role;
use crate::model::GameModel;
use crate::role::{LikelihoodParams, PlausibleMap};

/// Decision policy of the autonomous vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AvPolicy {
    /// Adaptive leader-follower game, like the human.
    Lfg,
    /// Two-stage branch MPC.
    BranchMpc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Intersection entrance on each travel axis, m.
    pub crossing_line: f64,
    /// AV initial (position m, speed m/s).
    pub av_init: [f64; 2],
    /// Centre of the HV initial (position, speed).
    pub hv_init_center: [f64; 2],
    /// Half-widths of the uniform HV jitter (position, speed).
    pub hv_init_jitter: [f64; 2],
    pub hv_initial_role: Role,
    /// AV role for the LFG policy; defaults to the complement of the HV role.
    pub av_initial_role: Option<Role>,
    /// HV's true role-adaptation likelihood.
    pub p_a: f64,
    /// AV's own adaptation likelihood when it runs the LFG policy.
    pub av_p_a: f64,
    pub av_policy: AvPolicy,
    /// Plausible-role map used by adaptive LFG agents.
    pub plausible: PlausibleMap,
    /// Freeze adaptive roles once both vehicles have passed the merging point.
    pub freeze_roles_after_merge: bool,
    pub dt: f64,
    /// Planning horizon, steps.
    pub horizon: usize,
    pub max_sim_time: f64,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            crossing_line: -6.5,
            av_init: [-20.0, 4.0],
            hv_init_center: [-20.0, 4.0],
            hv_init_jitter: [5.0, 1.0],
            hv_initial_role: Role::Leader,
            av_initial_role: None,
            p_a: 1.0,
            av_p_a: 1.0,
            av_policy: AvPolicy::BranchMpc,
            plausible: PlausibleMap::Mle,
            freeze_roles_after_merge: true,
            dt: 0.5,
            horizon: 10,
            max_sim_time: 30.0,
            seed: 0,
        }
    }
}

/// Everything a closed-loop run needs.
///
/// The default is the calibrated intersection experiment. It departs from
/// the per-module nominal defaults in four places: the generator stops
/// vehicles 8 m before the merge (outside the clearance radius), braking
/// goes down to -6 m/s^2, the residual covariance is diag(4, 4) and the
/// first stage lasts one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub scenario: ScenarioConfig,
    pub mpc: MpcParams<f64>,
    pub reward: RewardParams<f64>,
    pub safety: SafetyParams<f64>,
    pub actions: ActionGenParams<f64>,
    pub likelihood: LikelihoodParams<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            mpc: MpcParams { t1: 1, ..MpcParams::default() },
            reward: RewardParams::default(),
            safety: SafetyParams::default(),
            actions: ActionGenParams { a_min: -6.0, crossing_line: -8.0, ..ActionGenParams::default() },
            likelihood: LikelihoodParams { cov_pos: 4.0, cov_vel: 4.0, ..LikelihoodParams::default() },
        }
    }
}

impl SimConfig {
    /// Parses a TOML document. Keys it leaves out keep the values of
    /// [`SimConfig::default`], also inside sections it does mention.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut tree = toml::Value::try_from(SimConfig::default()).map_err(|e| Error::Config(e.to_string()))?;
        for (section, body) in user {
            match body {
                toml::Value::Table(fields) => {
                    for (key, value) in fields {
                        set_dotted(&mut tree, &format!("{section}.{key}"), value)?;
                    }
                }
                _ => return Err(Error::Config(format!("`{section}` must be a table"))),
            }
        }
        Self::from_tree(tree)
    }

    fn from_tree(tree: toml::Value) -> Result<Self> {
        let cfg: SimConfig = tree.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises to TOML")
    }

    /// Applies `section.key=value` overrides. Keys must already exist;
    /// values are parsed as TOML literals, falling back to bare strings.
    pub fn with_overrides<I, T>(&self, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        let mut tree = toml::Value::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            let item = item.as_ref();
            let (key, raw) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
            set_dotted(&mut tree, key.trim(), parse_value(raw.trim()))?;
        }
        Self::from_tree(tree)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if s.hv_init_jitter.iter().any(|&j| !(j >= 0.0)) {
            return Err(Error::Config("hv_init_jitter must be non-negative".into()));
        }
        for (name, p) in [("p_a", s.p_a), ("av_p_a", s.av_p_a)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name}={p} outside [0, 1]")));
            }
        }
        if !(s.max_sim_time > 0.0) {
            return Err(Error::Config("max_sim_time must be positive".into()));
        }
        self.model().validate()?;
        self.mpc.validate(s.horizon)?;
        self.likelihood.validate()
    }

    pub fn model(&self) -> GameModel<f64> {
        GameModel {
            horizon: self.scenario.horizon,
            dt: self.scenario.dt,
            actions: self.actions,
            reward: self.reward,
            safety: self.safety,
        }
    }

    pub fn planner(&self) -> Result<BranchMpc<f64>> {
        BranchMpc::new(self.model(), self.mpc, self.likelihood)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let probe = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&probe) {
        Ok(mut t) => t.remove("v").expect("probe key present"),
        Err(_) => toml::Value::String(raw.to_owned()),
    }
}

fn set_dotted(tree: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| Error::UnknownKey(key.to_owned()))?;
        if i + 1 == parts.len() {
            // Optional fields are absent from the serialised tree when unset.
            let known = table.contains_key(*part) || OPTIONAL_KEYS.contains(&key);
            if !known {
                return Err(Error::UnknownKey(key.to_owned()));
            }
            let value = match (table.get(*part), value) {
                (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                (_, v) => v,
            };
            table.insert((*part).to_owned(), value);
            return Ok(());
        }
        node = table.get_mut(*part).ok_or_else(|| Error::UnknownKey(key.to_owned()))?;
    }
    Err(Error::UnknownKey(key.to_owned()))
}

const OPTIONAL_KEYS: &[&str] = &["scenario.av_initial_role"];
