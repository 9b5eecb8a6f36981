//! Multi-lane ring-road kinematics.
//!
//! Background vehicles follow the intelligent driver model against their
//! same-lane leader and never change lanes. The ego vehicle (always index 0)
//! is driven by the five discrete driving actions. Vehicle `x` is the rear
//! bumper; a vehicle occupies `[x, x + length]` along the ring.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub lanes: usize,
    pub lane_width: f64,
    pub road_length: f64,
    /// Integration step, seconds.
    pub dt: f64,
    /// Kinematic steps per policy step.
    pub action_repeat: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub v_hard_max: f64,
    pub a_ego_step: f64,
    pub vehicle_length: f64,
    pub b_emergency: f64,
    pub idm_time_headway: f64,
    pub idm_a_max: f64,
    pub idm_b: f64,
    pub idm_s0: f64,
    pub idm_delta: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            lanes: 4,
            lane_width: 4.0,
            road_length: 1000.0,
            dt: 0.25,
            action_repeat: 4,
            v_min: 20.0,
            v_max: 30.0,
            v_hard_max: 40.0,
            a_ego_step: 2.0,
            vehicle_length: 5.0,
            b_emergency: 8.0,
            idm_time_headway: 1.5,
            idm_a_max: 1.5,
            idm_b: 2.0,
            idm_s0: 2.0,
            idm_delta: 4.0,
        }
    }
}

impl TrafficConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lane_width", self.lane_width),
            ("road_length", self.road_length),
            ("dt", self.dt),
            ("v_hard_max", self.v_hard_max),
            ("a_ego_step", self.a_ego_step),
            ("vehicle_length", self.vehicle_length),
            ("b_emergency", self.b_emergency),
            ("idm_time_headway", self.idm_time_headway),
            ("idm_a_max", self.idm_a_max),
            ("idm_b", self.idm_b),
            ("idm_s0", self.idm_s0),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("traffic.{key}"), format!("must be > 0, got {v}")));
            }
        }
        if self.lanes == 0 {
            return Err(Error::config("traffic.lanes", "must be >= 1"));
        }
        if self.action_repeat == 0 {
            return Err(Error::config("traffic.action_repeat", "must be >= 1"));
        }
        if self.idm_delta.is_nan() || self.idm_delta < 1.0 {
            return Err(Error::config("traffic.idm_delta", "must be >= 1"));
        }
        if !(self.v_min.is_finite() && self.v_min >= 0.0 && self.v_min < self.v_max) {
            return Err(Error::config("traffic.v_min", "need 0 <= v_min < v_max"));
        }
        if self.v_max > self.v_hard_max {
            return Err(Error::config("traffic.v_max", "must not exceed v_hard_max"));
        }
        Ok(())
    }

    pub fn idm(&self, desired_velocity: f64) -> IdmParams {
        IdmParams {
            v0: desired_velocity,
            time_headway: self.idm_time_headway,
            a_max: self.idm_a_max,
            b: self.idm_b,
            s0: self.idm_s0,
            delta: self.idm_delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    pub v0: f64,
    pub time_headway: f64,
    pub a_max: f64,
    pub b: f64,
    pub s0: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub id: usize,
    pub lane: usize,
    pub x: f64,
    pub v: f64,
    pub a: f64,
    pub length: f64,
    pub is_ego: bool,
}

/// What the follower sees of its leader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leader {
    /// Bumper-to-bumper gap, metres.
    pub gap: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmOutcome {
    pub acceleration: f64,
    pub imminent_collision: bool,
}

/// Intelligent driver model acceleration, floored at `-b_emergency`.
pub fn idm_acceleration(v: f64, leader: Option<Leader>, p: &IdmParams, b_emergency: f64) -> IdmOutcome {
    let free = 1.0 - (v / p.v0).powf(p.delta);
    let interaction = match leader {
        None => 0.0,
        Some(l) if l.gap <= 0.0 => {
            return IdmOutcome { acceleration: -b_emergency, imminent_collision: true };
        }
        Some(l) => {
            let dv = v - l.speed;
            let s_star = p.s0 + v * p.time_headway + v * dv / (2.0 * (p.a_max * p.b).sqrt());
            // s* can go negative when pulling away from the leader
            let s_star = s_star.max(0.0);
            (s_star / l.gap).powi(2)
        }
    };
    IdmOutcome {
        acceleration: (p.a_max * (free - interaction)).max(-b_emergency),
        imminent_collision: false,
    }
}

/// Forward distance along the ring from `from` to `to`, in `[0, length)`.
pub fn ring_ahead(from: f64, to: f64, length: f64) -> f64 {
    (to - from).rem_euclid(length)
}

/// True iff the two intervals overlap on the ring and the vehicles share a lane.
pub fn overlaps(a: &VehicleState, b: &VehicleState, road_length: f64) -> bool {
    if a.lane != b.lane || a.id == b.id {
        return false;
    }
    let d = ring_ahead(a.x, b.x, road_length);
    d < a.length || road_length - d < b.length
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivingAction {
    LaneLeft,
    Idle,
    LaneRight,
    Faster,
    Slower,
}

impl DrivingAction {
    /// Actions are numbered 1..=5.
    pub fn from_index(index: usize) -> Result<Self> {
        Ok(match index {
            1 => Self::LaneLeft,
            2 => Self::Idle,
            3 => Self::LaneRight,
            4 => Self::Faster,
            5 => Self::Slower,
            _ => return Err(Error::InvalidAction { kind: "driving", index }),
        })
    }
}

/// Vehicles on the ring. The ego is `vehicles[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Traffic {
    pub vehicles: Vec<VehicleState>,
    pub road_length: f64,
    pub lanes: usize,
    /// Set when the most recent lane change was refused for lack of space.
    pub lane_change_rejected: bool,
}

impl Traffic {
    /// Places the ego at `x = 0` and `n_background` vehicles at random
    /// non-overlapping positions with speeds uniform in `[v_min, v0]`.
    pub fn spawn<R: Rng + ?Sized>(
        cfg: &TrafficConfig,
        desired_velocity: f64,
        n_background: usize,
        rng: &mut R,
    ) -> Result<Self> {
        const TRIES: usize = 2000;
        let idm = cfg.idm(desired_velocity);
        let (lo, hi) = if desired_velocity > cfg.v_min {
            (cfg.v_min, desired_velocity.min(cfg.v_hard_max))
        } else {
            (desired_velocity, desired_velocity)
        };
        let speed = |rng: &mut R| if hi > lo { rng.random_range(lo..=hi) } else { lo };

        let mut traffic = Self {
            vehicles: Vec::with_capacity(n_background + 1),
            road_length: cfg.road_length,
            lanes: cfg.lanes,
            lane_change_rejected: false,
        };
        let ego_lane = rng.random_range(0..cfg.lanes);
        let ego_v = speed(rng);
        traffic.vehicles.push(VehicleState {
            id: 0,
            lane: ego_lane,
            x: 0.0,
            v: ego_v,
            a: 0.0,
            length: cfg.vehicle_length,
            is_ego: true,
        });

        for id in 1..=n_background {
            let v = speed(rng);
            let mut placed = false;
            for _ in 0..TRIES {
                let candidate = VehicleState {
                    id,
                    lane: rng.random_range(0..cfg.lanes),
                    x: rng.random_range(0.0..cfg.road_length),
                    v,
                    a: 0.0,
                    length: cfg.vehicle_length,
                    is_ego: false,
                };
                let clear = traffic.vehicles.iter().all(|o| {
                    if o.lane != candidate.lane {
                        return true;
                    }
                    let need = idm.s0 + idm.time_headway * o.v.max(candidate.v);
                    let ahead = ring_ahead(candidate.x, o.x, cfg.road_length) - candidate.length;
                    let behind = ring_ahead(o.x, candidate.x, cfg.road_length) - o.length;
                    ahead >= need && behind >= need
                });
                if clear {
                    traffic.vehicles.push(candidate);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::InfeasibleSpawn {
                    vehicles: n_background + 1,
                    lanes: cfg.lanes,
                    length: cfg.road_length,
                });
            }
        }
        traffic.refresh_background_accelerations(&idm, cfg.b_emergency);
        Ok(traffic)
    }

    /// Wraps an explicit vehicle list; `vehicles[0]` is treated as the ego.
    pub fn from_vehicles(vehicles: Vec<VehicleState>, road_length: f64, lanes: usize) -> Self {
        Self { vehicles, road_length, lanes, lane_change_rejected: false }
    }

    pub fn ego(&self) -> &VehicleState {
        &self.vehicles[0]
    }

    /// Nearest vehicle ahead in the same lane as `vehicles[index]`.
    pub fn leader_of(&self, index: usize) -> Option<(usize, Leader)> {
        let me = &self.vehicles[index];
        self.vehicles
            .iter()
            .enumerate()
            .filter(|(j, o)| *j != index && o.lane == me.lane)
            .map(|(j, o)| (j, ring_ahead(me.x, o.x, self.road_length), o))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(j, d, o)| (j, Leader { gap: d - me.length, speed: o.v }))
    }

    fn refresh_background_accelerations(&mut self, idm: &IdmParams, b_emergency: f64) {
        let accels: Vec<Option<f64>> = (0..self.vehicles.len())
            .map(|i| {
                (!self.vehicles[i].is_ego).then(|| {
                    let leader = self.leader_of(i).map(|(_, l)| l);
                    idm_acceleration(self.vehicles[i].v, leader, idm, b_emergency).acceleration
                })
            })
            .collect();
        for (veh, a) in self.vehicles.iter_mut().zip(accels) {
            if let Some(a) = a {
                veh.a = a;
            }
        }
    }

    /// Applies a driving action (1..=5) to the ego.
    pub fn apply_driving_action(&mut self, action: usize, cfg: &TrafficConfig) -> Result<()> {
        let action = DrivingAction::from_index(action)?;
        self.lane_change_rejected = false;
        let ego = self.vehicles[0];
        let target_lane = match action {
            DrivingAction::LaneLeft => Some(ego.lane.saturating_sub(1)),
            DrivingAction::LaneRight => Some((ego.lane + 1).min(self.lanes - 1)),
            _ => None,
        };
        match action {
            DrivingAction::Faster => self.vehicles[0].a = cfg.a_ego_step,
            DrivingAction::Slower => self.vehicles[0].a = -cfg.a_ego_step,
            DrivingAction::Idle => self.vehicles[0].a = 0.0,
            DrivingAction::LaneLeft | DrivingAction::LaneRight => {
                let target = target_lane.expect("lane action");
                if target != ego.lane && !self.lane_is_clear(target, cfg) {
                    self.lane_change_rejected = true;
                    return Ok(());
                }
                self.vehicles[0].lane = target;
                self.vehicles[0].a = 0.0;
            }
        }
        Ok(())
    }

    /// No vehicle of `lane` within `s0 + v·T` of the ego, in either direction.
    fn lane_is_clear(&self, lane: usize, cfg: &TrafficConfig) -> bool {
        let ego = &self.vehicles[0];
        let need = cfg.idm_s0 + ego.v * cfg.idm_time_headway;
        self.vehicles.iter().skip(1).filter(|o| o.lane == lane).all(|o| {
            let ahead = ring_ahead(ego.x, o.x, self.road_length) - ego.length;
            let behind = ring_ahead(o.x, ego.x, self.road_length) - o.length;
            ahead >= need && behind >= need
        })
    }

    /// One forward-Euler step. Background accelerations are refreshed from
    /// the current state first; vehicles that pass the end of the segment
    /// re-enter at the start, background ones with a resampled speed.
    pub fn step_kinematics<R: Rng + ?Sized>(
        &mut self,
        dt: f64,
        cfg: &TrafficConfig,
        idm: &IdmParams,
        rng: &mut R,
    ) {
        self.refresh_background_accelerations(idm, cfg.b_emergency);
        let (lo, hi) = (cfg.v_min.min(idm.v0), idm.v0.max(cfg.v_min).min(cfg.v_hard_max));
        for veh in &mut self.vehicles {
            let v_old = veh.v;
            veh.v = (v_old + veh.a * dt).clamp(0.0, cfg.v_hard_max);
            veh.x += v_old * dt;
            if veh.x >= self.road_length {
                veh.x -= self.road_length;
                if !veh.is_ego {
                    veh.v = if hi > lo { rng.random_range(lo..=hi) } else { lo };
                }
            }
        }
    }

    /// Collision indicator for the ego.
    pub fn detect_collision(&self) -> bool {
        let ego = &self.vehicles[0];
        self.vehicles
            .iter()
            .skip(1)
            .any(|o| overlaps(ego, o, self.road_length))
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn veh(id: usize, lane: usize, x: f64, v: f64) -> VehicleState {
        VehicleState { id, lane, x, v, a: 0.0, length: 5.0, is_ego: id == 0 }
    }

    fn idm() -> IdmParams {
        TrafficConfig::default().idm(25.0)
    }

    #[test]
    fn idm_free_road_endpoints() {
        let p = idm();
        assert_eq!(idm_acceleration(p.v0, None, &p, 8.0).acceleration, 0.0);
        assert_eq!(idm_acceleration(0.0, None, &p, 8.0).acceleration, p.a_max);
        assert!(idm_acceleration(10.0, None, &p, 8.0).acceleration > 0.0);
        assert!(idm_acceleration(30.0, None, &p, 8.0).acceleration < 0.0);
    }

    #[test]
    fn idm_non_positive_gap_brakes_hard() {
        let p = idm();
        let out = idm_acceleration(20.0, Some(Leader { gap: -0.5, speed: 20.0 }), &p, 8.0);
        assert_eq!(out.acceleration, -8.0);
        assert!(out.imminent_collision);
    }

    #[test]
    fn step_kinematics_examples() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = Traffic::from_vehicles(vec![veh(0, 0, 0.0, 20.0)], 1000.0, 4);
        t.step_kinematics(1.0, &cfg, &idm(), &mut rng);
        assert_eq!(t.vehicles[0].x, 20.0);

        let mut t = Traffic::from_vehicles(vec![veh(0, 0, 0.0, 1.0)], 1000.0, 4);
        t.vehicles[0].a = -5.0;
        t.step_kinematics(1.0, &cfg, &idm(), &mut rng);
        assert_eq!(t.vehicles[0].v, 0.0);
    }

    #[test]
    fn ego_wraps_without_resample() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = Traffic::from_vehicles(vec![veh(0, 0, 995.0, 20.0)], 1000.0, 4);
        t.step_kinematics(0.5, &cfg, &idm(), &mut rng);
        assert!((t.vehicles[0].x - 5.0).abs() < 1e-9);
        assert_eq!(t.vehicles[0].v, 20.0);
    }

    #[test]
    fn lane_actions() {
        let cfg = TrafficConfig::default();
        let mut t = Traffic::from_vehicles(vec![veh(0, 0, 0.0, 20.0)], 1000.0, 4);
        t.apply_driving_action(1, &cfg).unwrap();
        assert_eq!(t.ego().lane, 0);

        let mut t = Traffic::from_vehicles(vec![veh(0, 1, 0.0, 20.0)], 1000.0, 4);
        t.apply_driving_action(3, &cfg).unwrap();
        assert_eq!(t.ego().lane, 2);
        t.apply_driving_action(3, &cfg).unwrap();
        t.apply_driving_action(3, &cfg).unwrap();
        assert_eq!(t.ego().lane, 3);

        assert!(matches!(
            t.apply_driving_action(6, &cfg),
            Err(Error::InvalidAction { index: 6, .. })
        ));
        assert!(t.apply_driving_action(0, &cfg).is_err());
    }

    #[test]
    fn accelerate_then_step() {
        let cfg = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = Traffic::from_vehicles(vec![veh(0, 1, 0.0, 20.0)], 1000.0, 4);
        t.apply_driving_action(4, &cfg).unwrap();
        t.step_kinematics(cfg.dt, &cfg, &idm(), &mut rng);
        assert_eq!(t.ego().v, 20.0 + cfg.a_ego_step * cfg.dt);
    }

    #[test]
    fn blocked_lane_change_is_rejected_without_side_effects() {
        let cfg = TrafficConfig::default();
        let mut t = Traffic::from_vehicles(
            vec![veh(0, 1, 100.0, 20.0), veh(1, 2, 110.0, 20.0)],
            1000.0,
            4,
        );
        t.vehicles[0].a = 1.25;
        let before = t.clone();
        t.apply_driving_action(3, &cfg).unwrap();
        assert!(t.lane_change_rejected);
        t.lane_change_rejected = false;
        assert_eq!(t, before);
    }

    #[test]
    fn collision_examples() {
        // gap 5 m
        let t = Traffic::from_vehicles(vec![veh(0, 0, 0.0, 0.0), veh(1, 0, 10.0, 0.0)], 1000.0, 4);
        assert!(!t.detect_collision());
        // overlap 0.1 m
        let t = Traffic::from_vehicles(vec![veh(0, 0, 0.0, 0.0), veh(1, 0, 4.9, 0.0)], 1000.0, 4);
        assert!(t.detect_collision());
        // overlap but adjacent lanes
        let t = Traffic::from_vehicles(vec![veh(0, 0, 0.0, 0.0), veh(1, 1, 4.9, 0.0)], 1000.0, 4);
        assert!(!t.detect_collision());
        // overlap across the ring seam
        let t = Traffic::from_vehicles(vec![veh(0, 0, 0.0, 0.0), veh(1, 0, 996.0, 0.0)], 1000.0, 4);
        assert!(t.detect_collision());
    }

    #[test]
    fn collision_is_symmetric() {
        let a = veh(0, 2, 3.0, 0.0);
        let b = veh(1, 2, 6.5, 0.0);
        assert_eq!(overlaps(&a, &b, 1000.0), overlaps(&b, &a, 1000.0));
        let c = veh(1, 2, 9.0, 0.0);
        assert_eq!(overlaps(&a, &c, 1000.0), overlaps(&c, &a, 1000.0));
    }

    #[test]
    fn spawn_is_seeded_and_feasible() {
        let cfg = TrafficConfig::default();
        let a = Traffic::spawn(&cfg, 25.0, 20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = Traffic::spawn(&cfg, 25.0, 20, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.vehicles.len(), 21);
        assert!(!a.detect_collision());

        let err = Traffic::spawn(&cfg, 25.0, 400, &mut ChaCha8Rng::seed_from_u64(3));
        assert!(matches!(err, Err(Error::InfeasibleSpawn { .. })));
    }
}
