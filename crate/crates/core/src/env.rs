//! The joint driving/association decision process for one ego AV.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{FeatureVector, NUM_ACTIONS, QUBITS};
use crate::radio::{
    candidate_set, evaluate_links, linear_to_db, load_counts, resolve_tele_action, AssocState,
    BaseStation, Geometry, LinkBudget, LinkDraws, RadioConfig, Tier,
};
use crate::seed::{derive_seed, tag};
use crate::traffic::{ring_ahead, Traffic, TrafficConfig};

pub const DRIVING_ACTIONS: usize = 5;
pub const TELE_ACTIONS: usize = 3;
/// Neighbours kept in the raw observation.
const NEIGHBOURS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    /// Policy steps per episode.
    pub horizon: usize,
    pub n_background: usize,
    /// IDM desired speed, m/s.
    pub desired_velocity: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            omega1: 1.0,
            omega2: 5.0,
            omega3: 1e-8,
            horizon: 60,
            n_background: 12,
            desired_velocity: 25.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, w) in [("omega1", self.omega1), ("omega2", self.omega2), ("omega3", self.omega3)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(format!("env.{key}"), format!("must be >= 0, got {w}")));
            }
        }
        if self.horizon == 0 {
            return Err(Error::config("env.horizon", "must be >= 1"));
        }
        if !(self.desired_velocity.is_finite() && self.desired_velocity > 0.0) {
            return Err(Error::config("env.desired_velocity", "must be > 0"));
        }
        Ok(())
    }
}

/// Everything the environment needs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub env: EnvConfig,
    pub traffic: TrafficConfig,
    pub radio: RadioConfig,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.traffic.validate()?;
        self.radio.validate()?;
        if self.env.desired_velocity > self.traffic.v_hard_max {
            return Err(Error::config("env.desired_velocity", "must not exceed traffic.v_hard_max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JointAction {
    /// Driving action, 1..=5.
    pub tran: usize,
    /// Tele action, 1..=3.
    pub tele: usize,
}

impl JointAction {
    pub fn new(tran: usize, tele: usize) -> Result<Self> {
        if !(1..=DRIVING_ACTIONS).contains(&tran) {
            return Err(Error::InvalidAction { kind: "driving", index: tran });
        }
        if !(1..=TELE_ACTIONS).contains(&tele) {
            return Err(Error::InvalidAction { kind: "tele", index: tele });
        }
        Ok(Self { tran, tele })
    }

    pub fn from_flat(flat: usize) -> Result<Self> {
        if flat >= NUM_ACTIONS {
            return Err(Error::InvalidAction { kind: "joint", index: flat });
        }
        Ok(Self { tran: flat / TELE_ACTIONS + 1, tele: flat % TELE_ACTIONS + 1 })
    }

    pub fn flat(&self) -> usize {
        TELE_ACTIONS * (self.tran - 1) + (self.tele - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardVector {
    pub r_tran: f64,
    pub r_tele: f64,
    pub total: f64,
}

impl RewardVector {
    pub fn new(r_tran: f64, r_tele: f64) -> Self {
        Self { r_tran, r_tele, total: r_tran + r_tele }
    }
}

/// Driving reward: weighted normalized speed minus the collision penalty.
/// Speeds outside `[v_min, v_max]` clamp the normalized term to `[0, 1]`.
pub fn reward_tran(v: f64, collided: bool, omega1: f64, omega2: f64, v_min: f64, v_max: f64) -> f64 {
    let speed = ((v - v_min) / (v_max - v_min)).clamp(0.0, 1.0);
    let delta = if collided { 1.0 } else { 0.0 };
    omega1 * speed - omega2 * delta
}

/// Communication reward: weighted serving rate discounted by the handoff rate.
pub fn reward_tele(rate: f64, xi: f64, omega3: f64) -> f64 {
    omega3 * rate * (1.0 - xi.min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighbourObs {
    pub lane: usize,
    /// Signed ring offset from the ego, metres (positive = ahead).
    pub dx: f64,
    pub v: f64,
}

/// State in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct RawObservation {
    pub ego_x: f64,
    pub ego_lane: usize,
    pub ego_v: f64,
    pub lanes: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub leader_gap: Option<f64>,
    pub neighbours: Vec<NeighbourObs>,
    pub serving_bs: Option<usize>,
    pub serving_load: usize,
    pub serving_quota: usize,
    /// `(station, SINR in dB)` for each candidate, best rate first.
    pub candidate_sinr_db: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub raw: RawObservation,
    pub embedded: FeatureVector,
}

/// Maps the raw state onto five features in `[-1, 1]`.
pub fn embed(raw: &RawObservation) -> FeatureVector {
    let f0 = 2.0 * (raw.ego_v - raw.v_min) / (raw.v_max - raw.v_min) - 1.0;
    let half = (raw.lanes.max(2) - 1) as f64 / 2.0;
    let f1 = if raw.lanes > 1 { raw.ego_lane as f64 / half - 1.0 } else { 0.0 };
    let f2 = match raw.leader_gap {
        Some(gap) => (gap.max(0.0) / 100.0).tanh() * 2.0 - 1.0,
        None => 1.0,
    };
    let f3 = match raw.candidate_sinr_db.first() {
        Some(&(_, db)) => (db / 40.0).clamp(-1.0, 1.0),
        None => -1.0,
    };
    let f4 = match raw.serving_bs {
        Some(_) => 2.0 * (raw.serving_load as f64 / raw.serving_quota as f64).min(1.0) - 1.0,
        None => -1.0,
    };
    let features: [f64; QUBITS] = [f0, f1, f2, f3, f4];
    FeatureVector::clamped(features)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepInfo {
    pub rate_bps: f64,
    /// Linear SINR of the serving link (0 when detached).
    pub sinr: f64,
    pub ho_count: usize,
    pub xi: f64,
    pub collided: bool,
    pub lane: usize,
    pub v_ego: f64,
    pub lane_change_rejected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardVector,
    pub done: bool,
    pub info: StepInfo,
}

/// Full simulator state.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub traffic: Traffic,
    pub stations: Vec<BaseStation>,
    /// One per vehicle, same order as `traffic.vehicles`.
    pub assoc: Vec<AssocState>,
    /// Per-vehicle link budgets for the current step, indexed by station.
    pub links: Vec<Vec<LinkBudget>>,
    pub loads: Vec<usize>,
    /// Policy steps taken.
    pub t: usize,
    pub collided: bool,
    pub done: bool,
    pub episode_seed: u64,
}

impl WorldState {
    pub fn ego_assoc(&self) -> &AssocState {
        &self.assoc[0]
    }

    pub fn ego_rate(&self) -> f64 {
        self.assoc[0].serving_bs.map_or(0.0, |s| self.links[0][s].rate)
    }

    pub fn ego_sinr(&self) -> f64 {
        self.assoc[0].serving_bs.map_or(0.0, |s| self.links[0][s].sinr)
    }
}

/// Anything the training loop can drive: 15 discrete actions, encoded
/// observations, a scalarizable reward.
pub trait Environment {
    fn reset(&mut self, seed: u64) -> Result<FeatureVector>;
    fn step(&mut self, action: usize) -> Result<EnvStep>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvStep {
    pub features: FeatureVector,
    pub reward: RewardVector,
    pub done: bool,
    pub info: StepInfo,
}

pub struct MomdpEnv {
    config: SimConfig,
    world: Option<WorldState>,
    rng: ChaCha8Rng,
}

impl MomdpEnv {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, world: None, rng: ChaCha8Rng::seed_from_u64(0) })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    fn geometry(&self) -> Geometry {
        Geometry {
            road_length: self.config.traffic.road_length,
            lane_width: self.config.traffic.lane_width,
            av_height: self.config.radio.av_height_m,
        }
    }

    /// Starts an episode. Everything random in the episode derives from `seed`.
    pub fn reset_episode(&mut self, seed: u64) -> Result<Observation> {
        let cfg = &self.config;
        self.rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[tag::RESPAWN]));
        let traffic = Traffic::spawn(&cfg.traffic, cfg.env.desired_velocity, cfg.env.n_background, &mut self.rng)?;
        let stations = cfg.radio.deploy(cfg.traffic.road_length);
        let n = traffic.vehicles.len();
        let mut world = WorldState {
            traffic,
            stations,
            assoc: vec![AssocState::default(); n],
            links: Vec::new(),
            loads: Vec::new(),
            t: 0,
            collided: false,
            done: false,
            episode_seed: seed,
        };
        self.refresh_network(&mut world);
        for assoc in world.assoc.iter_mut() {
            let pick = assoc.candidates.first().map(|c| c.bs);
            assoc.update_handoff(pick);
        }
        let obs = self.observe(&world);
        self.world = Some(world);
        Ok(obs)
    }

    fn refresh_network(&self, world: &mut WorldState) {
        let geo = self.geometry();
        let draws = LinkDraws { seed: world.episode_seed, step: world.t as u64 };
        let threshold = self.config.radio.sinr_threshold();
        world.links = world
            .traffic
            .vehicles
            .iter()
            .map(|v| evaluate_links(v, &world.stations, &geo, &self.config.radio, &draws))
            .collect();
        for (assoc, links) in world.assoc.iter_mut().zip(&world.links) {
            assoc.candidates = candidate_set(links, threshold);
        }
        world.loads = load_counts(world.assoc.iter().map(|a| a.candidates.as_slice()), world.stations.len());
    }

    fn observe(&self, world: &WorldState) -> Observation {
        let tc = &self.config.traffic;
        let ego = world.traffic.ego();
        let l = world.traffic.road_length;
        let mut neighbours: Vec<NeighbourObs> = world
            .traffic
            .vehicles
            .iter()
            .skip(1)
            .map(|o| {
                let ahead = ring_ahead(ego.x, o.x, l);
                let dx = if ahead > l / 2.0 { ahead - l } else { ahead };
                NeighbourObs { lane: o.lane, dx, v: o.v }
            })
            .collect();
        neighbours.sort_by(|a, b| a.dx.abs().total_cmp(&b.dx.abs()));
        neighbours.truncate(NEIGHBOURS);

        let assoc = world.ego_assoc();
        let (serving_load, serving_quota) = assoc
            .serving_bs
            .map_or((0, 1), |s| (world.loads[s], world.stations[s].quota));
        let raw = RawObservation {
            ego_x: ego.x,
            ego_lane: ego.lane,
            ego_v: ego.v,
            lanes: tc.lanes,
            v_min: tc.v_min,
            v_max: tc.v_max,
            leader_gap: world.traffic.leader_of(0).map(|(_, l)| l.gap),
            neighbours,
            serving_bs: assoc.serving_bs,
            serving_load,
            serving_quota,
            candidate_sinr_db: assoc.candidates.iter().map(|c| (c.bs, linear_to_db(c.sinr))).collect(),
        };
        let embedded = embed(&raw);
        Observation { raw, embedded }
    }

    /// Advances one policy step.
    pub fn step_joint(&mut self, action: JointAction) -> Result<StepOutcome> {
        let mut world = self.world.take().ok_or(Error::NotReset)?;
        if world.done {
            self.world = Some(world);
            return Err(Error::EpisodeDone);
        }
        let tc = &self.config.traffic;
        let idm = tc.idm(self.config.env.desired_velocity);

        if let Err(e) = world.traffic.apply_driving_action(action.tran, tc) {
            self.world = Some(world);
            return Err(e);
        }
        let mut collided = false;
        for _ in 0..tc.action_repeat {
            world.traffic.step_kinematics(tc.dt, tc, &idm, &mut self.rng);
            if world.traffic.detect_collision() {
                collided = true;
                break;
            }
        }
        world.t += 1;
        world.collided = collided;

        self.refresh_network(&mut world);
        let threshold = self.config.radio.sinr_threshold();
        for i in 0..world.assoc.len() {
            let tele = if i == 0 { action.tele } else { 3 };
            let pick = resolve_tele_action(tele, &world.assoc[i], &world.links[i], &world.stations, &world.loads, threshold)?;
            world.assoc[i].update_handoff(pick);
        }

        let ego = *world.traffic.ego();
        let assoc = world.ego_assoc();
        let rate = world.ego_rate();
        let env = &self.config.env;
        let reward = RewardVector::new(
            reward_tran(ego.v, collided, env.omega1, env.omega2, tc.v_min, tc.v_max),
            reward_tele(rate, assoc.xi, env.omega3),
        );
        let info = StepInfo {
            rate_bps: rate,
            sinr: world.ego_sinr(),
            ho_count: assoc.ho_count,
            xi: assoc.xi,
            collided,
            lane: ego.lane,
            v_ego: ego.v,
            lane_change_rejected: world.traffic.lane_change_rejected,
        };
        world.done = collided || world.t >= env.horizon;
        let done = world.done;
        let observation = self.observe(&world);
        self.world = Some(world);
        Ok(StepOutcome { observation, reward, done, info })
    }

    /// `(t, id, lane, x, v, a, is_ego)` per vehicle.
    pub fn traffic_trace(&self) -> Vec<TrafficTraceRow> {
        let Some(w) = &self.world else { return Vec::new() };
        w.traffic
            .vehicles
            .iter()
            .map(|v| TrafficTraceRow { t: w.t, id: v.id, lane: v.lane, x: v.x, v: v.v, a: v.a, is_ego: v.is_ego })
            .collect()
    }

    /// One row per vehicle describing its serving link.
    pub fn network_trace(&self) -> Vec<NetworkTraceRow> {
        let Some(w) = &self.world else { return Vec::new() };
        w.assoc
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let link = a.serving_bs.map(|s| w.links[i][s]);
                NetworkTraceRow {
                    t: w.t,
                    av_id: w.traffic.vehicles[i].id,
                    serving_bs: a.serving_bs,
                    tier: a.serving_bs.map(|s| w.stations[s].tier),
                    sinr_db: link.map(|l| linear_to_db(l.sinr)),
                    rate_bps: link.map_or(0.0, |l| l.rate),
                    n_serving: a.serving_bs.map_or(0, |s| w.loads[s]),
                    ho_count: a.ho_count,
                    xi: a.xi,
                }
            })
            .collect()
    }
}

impl Environment for MomdpEnv {
    fn reset(&mut self, seed: u64) -> Result<FeatureVector> {
        Ok(self.reset_episode(seed)?.embedded)
    }

    fn step(&mut self, action: usize) -> Result<EnvStep> {
        let out = self.step_joint(JointAction::from_flat(action)?)?;
        Ok(EnvStep { features: out.observation.embedded, reward: out.reward, done: out.done, info: out.info })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrafficTraceRow {
    pub t: usize,
    pub id: usize,
    pub lane: usize,
    pub x: f64,
    pub v: f64,
    pub a: f64,
    pub is_ego: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkTraceRow {
    pub t: usize,
    pub av_id: usize,
    pub serving_bs: Option<usize>,
    pub tier: Option<Tier>,
    #[serde(rename = "sinr_dB")]
    pub sinr_db: Option<f64>,
    pub rate_bps: f64,
    pub n_serving: usize,
    pub ho_count: usize,
    #[serde(rename = "ξ")]
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeLogRow {
    pub t: usize,
    pub flat_action: usize,
    pub r_tran: f64,
    pub r_tele: f64,
    pub total: f64,
    pub rate_bps: f64,
    #[serde(rename = "ξ")]
    pub xi: f64,
    #[serde(rename = "δ")]
    pub delta: u8,
    pub lane: usize,
    pub v_ego: f64,
}

impl EpisodeLogRow {
    pub fn new(t: usize, action: usize, step: &EnvStep) -> Self {
        Self {
            t,
            flat_action: action,
            r_tran: step.reward.r_tran,
            r_tele: step.reward.r_tele,
            total: step.reward.total,
            rate_bps: step.info.rate_bps,
            xi: step.info.xi,
            delta: step.info.collided as u8,
            lane: step.info.lane,
            v_ego: step.info.v_ego,
        }
    }
}
