//! Two-tier RF/THz downlink: link budgets, candidate sets, loads, the
//! weighted-rate metric, tele-action resolution and handoff bookkeeping.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{tag, unit_uniform};
use crate::traffic::VehicleState;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Closest allowed link distance, metres.
const MIN_DISTANCE: f64 = 1.0;
pub const MAX_CANDIDATES: usize = 3;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub rf_carrier_hz: f64,
    pub rf_pathloss_exponent: f64,
    pub rf_reference_distance_m: f64,
    pub rf_tx_power_dbm: f64,
    pub rf_antenna_gain_dbi: f64,
    pub rf_bandwidth_hz: f64,
    pub rf_quota: usize,
    pub rf_ho_penalty: f64,
    pub rf_spacing_m: f64,
    /// Unit-mean exponential fading on RF links.
    pub rf_fading: bool,
    pub thz_carrier_hz: f64,
    pub thz_absorption_per_m: f64,
    pub thz_tx_power_dbm: f64,
    pub thz_main_lobe_gain_dbi: f64,
    pub thz_side_lobe_gain_dbi: f64,
    /// Probability that an interfering TBS main lobe points at the AV.
    pub thz_alignment_prob: f64,
    pub thz_bandwidth_hz: f64,
    pub thz_quota: usize,
    pub thz_ho_penalty: f64,
    pub thz_spacing_m: f64,
    pub noise_dbm_per_hz: f64,
    pub sinr_threshold_db: f64,
    pub bs_lateral_offset_m: f64,
    pub bs_height_m: f64,
    pub av_height_m: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            rf_carrier_hz: 2e9,
            rf_pathloss_exponent: 3.0,
            rf_reference_distance_m: 1.0,
            rf_tx_power_dbm: 40.0,
            rf_antenna_gain_dbi: 0.0,
            rf_bandwidth_hz: 20e6,
            rf_quota: 8,
            rf_ho_penalty: 0.05,
            rf_spacing_m: 500.0,
            rf_fading: false,
            thz_carrier_hz: 0.3e12,
            thz_absorption_per_m: 0.05,
            thz_tx_power_dbm: 30.0,
            thz_main_lobe_gain_dbi: 20.0,
            thz_side_lobe_gain_dbi: -10.0,
            thz_alignment_prob: 0.1,
            thz_bandwidth_hz: 1e9,
            thz_quota: 4,
            thz_ho_penalty: 0.3,
            thz_spacing_m: 100.0,
            noise_dbm_per_hz: -174.0,
            sinr_threshold_db: 0.0,
            bs_lateral_offset_m: 10.0,
            bs_height_m: 10.0,
            av_height_m: 1.5,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rf_carrier_hz", self.rf_carrier_hz),
            ("rf_pathloss_exponent", self.rf_pathloss_exponent),
            ("rf_reference_distance_m", self.rf_reference_distance_m),
            ("rf_bandwidth_hz", self.rf_bandwidth_hz),
            ("rf_spacing_m", self.rf_spacing_m),
            ("thz_carrier_hz", self.thz_carrier_hz),
            ("thz_bandwidth_hz", self.thz_bandwidth_hz),
            ("thz_spacing_m", self.thz_spacing_m),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("radio.{key}"), format!("must be > 0, got {v}")));
            }
        }
        let finite = [
            ("rf_tx_power_dbm", self.rf_tx_power_dbm),
            ("rf_antenna_gain_dbi", self.rf_antenna_gain_dbi),
            ("thz_tx_power_dbm", self.thz_tx_power_dbm),
            ("thz_main_lobe_gain_dbi", self.thz_main_lobe_gain_dbi),
            ("thz_side_lobe_gain_dbi", self.thz_side_lobe_gain_dbi),
            ("noise_dbm_per_hz", self.noise_dbm_per_hz),
            ("sinr_threshold_db", self.sinr_threshold_db),
            ("bs_lateral_offset_m", self.bs_lateral_offset_m),
            ("bs_height_m", self.bs_height_m),
            ("av_height_m", self.av_height_m),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(format!("radio.{key}"), "must be finite"));
            }
        }
        if !(self.thz_absorption_per_m.is_finite() && self.thz_absorption_per_m >= 0.0) {
            return Err(Error::config("radio.thz_absorption_per_m", "must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.thz_alignment_prob) {
            return Err(Error::config("radio.thz_alignment_prob", "must lie in [0, 1]"));
        }
        for (key, q) in [("rf_quota", self.rf_quota), ("thz_quota", self.thz_quota)] {
            if q == 0 {
                return Err(Error::config(format!("radio.{key}"), "must be >= 1"));
            }
        }
        for (key, mu) in [("rf_ho_penalty", self.rf_ho_penalty), ("thz_ho_penalty", self.thz_ho_penalty)] {
            if !(0.0..1.0).contains(&mu) {
                return Err(Error::config(format!("radio.{key}"), "must lie in [0, 1)"));
            }
        }
        if self.thz_ho_penalty <= self.rf_ho_penalty {
            return Err(Error::config("radio.thz_ho_penalty", "must exceed rf_ho_penalty"));
        }
        Ok(())
    }

    pub fn sinr_threshold(&self) -> f64 {
        db_to_linear(self.sinr_threshold_db)
    }

    /// RBSs then TBSs, evenly spaced along the ring starting half a spacing in.
    pub fn deploy(&self, road_length: f64) -> Vec<BaseStation> {
        let mut out = Vec::new();
        let place = |tier: Tier, spacing: f64, out: &mut Vec<BaseStation>| {
            let mut x = spacing / 2.0;
            while x < road_length {
                out.push(self.station(out.len(), tier, x));
                x += spacing;
            }
        };
        place(Tier::Rf, self.rf_spacing_m, &mut out);
        place(Tier::Thz, self.thz_spacing_m, &mut out);
        out
    }

    pub fn station(&self, id: usize, tier: Tier, x: f64) -> BaseStation {
        match tier {
            Tier::Rf => BaseStation {
                id,
                tier,
                x,
                lateral_offset: self.bs_lateral_offset_m,
                height: self.bs_height_m,
                tx_power_dbm: self.rf_tx_power_dbm,
                bandwidth: self.rf_bandwidth_hz,
                quota: self.rf_quota,
                carrier: self.rf_carrier_hz,
                ho_penalty: self.rf_ho_penalty,
            },
            Tier::Thz => BaseStation {
                id,
                tier,
                x,
                lateral_offset: self.bs_lateral_offset_m,
                height: self.bs_height_m,
                tx_power_dbm: self.thz_tx_power_dbm,
                bandwidth: self.thz_bandwidth_hz,
                quota: self.thz_quota,
                carrier: self.thz_carrier_hz,
                ho_penalty: self.thz_ho_penalty,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "RF")]
    Rf,
    #[serde(rename = "THz")]
    Thz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseStation {
    pub id: usize,
    pub tier: Tier,
    /// Position along the road, metres.
    pub x: f64,
    pub lateral_offset: f64,
    pub height: f64,
    pub tx_power_dbm: f64,
    pub bandwidth: f64,
    pub quota: usize,
    pub carrier: f64,
    pub ho_penalty: f64,
}

/// Road geometry needed to place an AV in 3-D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub road_length: f64,
    pub lane_width: f64,
    pub av_height: f64,
}

impl Geometry {
    pub fn distance(&self, av: &VehicleState, bs: &BaseStation) -> f64 {
        let dx = (av.x - bs.x).rem_euclid(self.road_length);
        let dx = dx.min(self.road_length - dx);
        let dy = (av.lane as f64 + 0.5) * self.lane_width + bs.lateral_offset;
        let dz = bs.height - self.av_height;
        (dx * dx + dy * dy + dz * dz).sqrt().max(MIN_DISTANCE)
    }
}

/// Per-step random draws, addressed by `(episode seed, step, av, bs)` so that
/// the result does not depend on evaluation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDraws {
    pub seed: u64,
    pub step: u64,
}

impl LinkDraws {
    /// Whether the main lobe of interfering TBS `bs` points at `av` this step.
    pub fn main_lobe_aligned(&self, av: usize, bs: usize, q: f64) -> bool {
        unit_uniform(self.seed, &[tag::BEAM, self.step, av as u64, bs as u64]) < q
    }

    /// Unit-mean exponential fading power on link `(av, bs)`.
    pub fn fading(&self, av: usize, bs: usize) -> f64 {
        let u = unit_uniform(self.seed, &[tag::FADING, self.step, av as u64, bs as u64]);
        -(1.0 - u).ln()
    }
}

fn noise_power(cfg: &RadioConfig, bandwidth: f64) -> f64 {
    dbm_to_watts(cfg.noise_dbm_per_hz) * bandwidth
}

fn rf_received(av: &VehicleState, bs: &BaseStation, geo: &Geometry, cfg: &RadioConfig, draws: &LinkDraws) -> f64 {
    let d_ref = cfg.rf_reference_distance_m;
    let d = geo.distance(av, bs);
    let pl = (SPEED_OF_LIGHT / (4.0 * PI * bs.carrier * d_ref)).powi(2) * (d / d_ref).powf(-cfg.rf_pathloss_exponent);
    let h = if cfg.rf_fading { draws.fading(av.id, bs.id) } else { 1.0 };
    dbm_to_watts(bs.tx_power_dbm) * db_to_linear(cfg.rf_antenna_gain_dbi) * h * pl
}

/// SINR of the RF link `av`–`bs`; every other RBS interferes.
pub fn rf_sinr(
    av: &VehicleState,
    bs: &BaseStation,
    stations: &[BaseStation],
    geo: &Geometry,
    cfg: &RadioConfig,
    draws: &LinkDraws,
) -> f64 {
    debug_assert_eq!(bs.tier, Tier::Rf);
    let signal = rf_received(av, bs, geo, cfg, draws);
    let interference: f64 = stations
        .iter()
        .filter(|o| o.tier == Tier::Rf && o.id != bs.id)
        .map(|o| rf_received(av, o, geo, cfg, draws))
        .sum();
    signal / (noise_power(cfg, bs.bandwidth) + interference)
}

fn thz_spreading(bs: &BaseStation, d: f64, absorption: f64) -> f64 {
    (SPEED_OF_LIGHT / (4.0 * PI * bs.carrier * d)).powi(2) * (-absorption * d).exp()
}

/// SINR of the THz link `av`–`bs`. The serving beam is aligned; each other TBS
/// hits with main-lobe gain with probability `q`, side-lobe gain otherwise.
pub fn thz_sinr(
    av: &VehicleState,
    bs: &BaseStation,
    stations: &[BaseStation],
    geo: &Geometry,
    cfg: &RadioConfig,
    draws: &LinkDraws,
) -> f64 {
    debug_assert_eq!(bs.tier, Tier::Thz);
    let main = db_to_linear(cfg.thz_main_lobe_gain_dbi);
    let side = db_to_linear(cfg.thz_side_lobe_gain_dbi);
    let a = cfg.thz_absorption_per_m;
    let signal = dbm_to_watts(bs.tx_power_dbm) * main * main * thz_spreading(bs, geo.distance(av, bs), a);
    let interference: f64 = stations
        .iter()
        .filter(|o| o.tier == Tier::Thz && o.id != bs.id)
        .map(|o| {
            let g = if draws.main_lobe_aligned(av.id, o.id, cfg.thz_alignment_prob) {
                main * main
            } else {
                side * side
            };
            dbm_to_watts(o.tx_power_dbm) * g * thz_spreading(o, geo.distance(av, o), a)
        })
        .sum();
    signal / (noise_power(cfg, bs.bandwidth) + interference)
}

/// Shannon rate `W·log2(1 + SINR)`.
pub fn data_rate(bandwidth: f64, sinr: f64) -> f64 {
    bandwidth * (1.0 + sinr).log2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub bs: usize,
    pub sinr: f64,
    pub rate: f64,
}

/// Budgets for every station, indexed by station id.
pub fn evaluate_links(
    av: &VehicleState,
    stations: &[BaseStation],
    geo: &Geometry,
    cfg: &RadioConfig,
    draws: &LinkDraws,
) -> Vec<LinkBudget> {
    stations
        .iter()
        .map(|bs| {
            let sinr = match bs.tier {
                Tier::Rf => rf_sinr(av, bs, stations, geo, cfg, draws),
                Tier::Thz => thz_sinr(av, bs, stations, geo, cfg, draws),
            };
            LinkBudget { bs: bs.id, sinr, rate: data_rate(bs.bandwidth, sinr) }
        })
        .collect()
}

/// Rate descending, then lower id first.
fn by_rate_desc(a: &LinkBudget, b: &LinkBudget) -> Ordering {
    b.rate.total_cmp(&a.rate).then(a.bs.cmp(&b.bs))
}

/// Top three links by rate among those with `SINR >= threshold`.
pub fn candidate_set(links: &[LinkBudget], threshold: f64) -> Vec<LinkBudget> {
    let mut out: Vec<LinkBudget> = links.iter().filter(|l| l.sinr >= threshold).copied().collect();
    out.sort_by(by_rate_desc);
    out.truncate(MAX_CANDIDATES);
    out
}

/// `n_i`: how many AVs list station `i` as a candidate.
pub fn load_counts<'a>(candidates: impl IntoIterator<Item = &'a [LinkBudget]>, stations: usize) -> Vec<usize> {
    let mut n = vec![0; stations];
    for set in candidates {
        for c in set {
            n[c.bs] += 1;
        }
    }
    n
}

/// `R / max(1, min(Q, n)) · (1 − μ)`.
pub fn weighted_rate(rate: f64, quota: usize, load: usize, penalty: f64) -> f64 {
    rate / quota.min(load).max(1) as f64 * (1.0 - penalty)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeleAction {
    /// Max weighted rate, penalizing stations that would cause a handoff.
    WeightedRate,
    /// Max unpenalized weighted rate among stations with spare quota.
    VacantWeightedRate,
    /// Max raw rate.
    MaxRate,
}

impl TeleAction {
    /// Actions are numbered 1..=3.
    pub fn from_index(index: usize) -> Result<Self> {
        Ok(match index {
            1 => Self::WeightedRate,
            2 => Self::VacantWeightedRate,
            3 => Self::MaxRate,
            _ => return Err(Error::InvalidAction { kind: "tele", index }),
        })
    }
}

/// Per-AV association state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssocState {
    pub serving_bs: Option<usize>,
    pub candidates: Vec<LinkBudget>,
    pub ho_count: usize,
    pub episode_steps: usize,
    pub xi: f64,
}

impl AssocState {
    /// Records this step's association. A change between two stations is a
    /// handoff; the first attach is not.
    pub fn update_handoff(&mut self, new_bs: Option<usize>) {
        if let (Some(a), Some(b)) = (self.serving_bs, new_bs) {
            if a != b {
                self.ho_count += 1;
            }
        }
        self.serving_bs = new_bs;
        self.episode_steps += 1;
        self.xi = self.ho_count as f64 / self.episode_steps.saturating_sub(1).max(1) as f64;
    }
}

fn argmax_by_key(cands: &[LinkBudget], key: impl Fn(&LinkBudget) -> f64) -> Option<usize> {
    cands
        .iter()
        .map(|c| (key(c), c.bs))
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .map(|(_, id)| id)
}

/// Picks the serving station for a tele action (1..=3).
///
/// `links` is indexed by station id; `loads` holds this step's `n_i`.
pub fn resolve_tele_action(
    action: usize,
    assoc: &AssocState,
    links: &[LinkBudget],
    stations: &[BaseStation],
    loads: &[usize],
    threshold: f64,
) -> Result<Option<usize>> {
    let action = TeleAction::from_index(action)?;
    let cands = &assoc.candidates;
    if cands.is_empty() {
        return Ok(assoc.serving_bs.filter(|&s| links[s].sinr >= threshold));
    }
    let wr = |c: &LinkBudget, penalty: f64| {
        let bs = &stations[c.bs];
        weighted_rate(c.rate, bs.quota, loads[c.bs], penalty)
    };
    let choice = match action {
        TeleAction::WeightedRate => argmax_by_key(cands, |c| {
            let mu = if Some(c.bs) == assoc.serving_bs { 0.0 } else { stations[c.bs].ho_penalty };
            wr(c, mu)
        }),
        TeleAction::VacantWeightedRate => {
            let mut ranked: Vec<(f64, usize)> = cands.iter().map(|c| (wr(c, 0.0), c.bs)).collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            ranked
                .iter()
                .find(|(_, id)| stations[*id].quota >= loads[*id])
                .or(ranked.first())
                .map(|&(_, id)| id)
        }
        TeleAction::MaxRate => argmax_by_key(cands, |c| c.rate),
    };
    Ok(choice)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn av(x: f64) -> VehicleState {
        VehicleState { id: 0, lane: 0, x, v: 20.0, a: 0.0, length: 5.0, is_ego: true }
    }

    fn geo() -> Geometry {
        Geometry { road_length: 10_000.0, lane_width: 4.0, av_height: 1.5 }
    }

    fn draws() -> LinkDraws {
        LinkDraws { seed: 11, step: 0 }
    }

    #[test]
    fn data_rate_examples() {
        assert_eq!(data_rate(1e6, 1.0), 1e6);
        assert_eq!(data_rate(5e6, 0.0), 0.0);
        assert_eq!(data_rate(2e9, 3.0), 4e9);
    }

    #[test]
    fn weighted_rate_examples() {
        assert_eq!(weighted_rate(100e6, 5, 10, 0.1), 100e6 / 5.0 * 0.9);
        assert!((weighted_rate(100e6, 5, 10, 0.1) - 18e6).abs() < 1e-6);
        assert_eq!(weighted_rate(90e6, 5, 3, 0.0), 30e6);
        assert_eq!(weighted_rate(90e6, 5, 0, 0.3), 90e6 * 0.7);
    }

    #[test]
    fn rf_sinr_monotone_in_distance() {
        let cfg = RadioConfig::default();
        let bs = vec![cfg.station(0, Tier::Rf, 0.0)];
        let mut last = f64::INFINITY;
        let mut d = 10.0;
        while d <= 500.0 {
            let s = rf_sinr(&av(d), &bs[0], &bs, &geo(), &cfg, &draws());
            assert!(s < last);
            last = s;
            d += 5.0;
        }
    }

    #[test]
    fn rf_two_equidistant_stations() {
        let cfg = RadioConfig::default();
        let bs = vec![cfg.station(0, Tier::Rf, 4000.0), cfg.station(1, Tier::Rf, 6000.0)];
        let s = rf_sinr(&av(5000.0), &bs[0], &bs, &geo(), &cfg, &draws());
        let single = vec![bs[0].clone()];
        let snr = rf_sinr(&av(5000.0), &bs[0], &single, &geo(), &cfg, &draws());
        let noise = dbm_to_watts(cfg.noise_dbm_per_hz) * cfg.rf_bandwidth_hz;
        let p_rx = snr * noise;
        let expected = p_rx / (noise + p_rx);
        assert!((s - expected).abs() <= 1e-12 * expected.max(1.0));
        assert!(s < 1.0);
    }

    #[test]
    fn zero_power_gives_zero_rate() {
        let cfg = RadioConfig { rf_tx_power_dbm: -1000.0, ..RadioConfig::default() };
        let bs = vec![cfg.station(0, Tier::Rf, 0.0)];
        let s = rf_sinr(&av(50.0), &bs[0], &bs, &geo(), &cfg, &draws());
        assert!(s < 1e-60);
        assert!(data_rate(cfg.rf_bandwidth_hz, s) < 1e-50);
    }

    #[test]
    fn thz_alignment_extremes() {
        let mut cfg = RadioConfig::default();
        let bs: Vec<_> = (0..4).map(|i| cfg.station(i, Tier::Thz, 100.0 * i as f64 + 50.0)).collect();
        let car = av(120.0);
        cfg.thz_alignment_prob = 0.0;
        let s0 = thz_sinr(&car, &bs[1], &bs, &geo(), &cfg, &draws());
        let side = db_to_linear(cfg.thz_side_lobe_gain_dbi);
        let main = db_to_linear(cfg.thz_main_lobe_gain_dbi);
        let signal = dbm_to_watts(cfg.thz_tx_power_dbm) * main * main
            * thz_spreading(&bs[1], geo().distance(&car, &bs[1]), cfg.thz_absorption_per_m);
        let interf: f64 = [0, 2, 3]
            .iter()
            .map(|&i| dbm_to_watts(cfg.thz_tx_power_dbm) * side * side
                * thz_spreading(&bs[i], geo().distance(&car, &bs[i]), cfg.thz_absorption_per_m))
            .sum();
        let noise = dbm_to_watts(cfg.noise_dbm_per_hz) * cfg.thz_bandwidth_hz;
        assert!((s0 - signal / (noise + interf)).abs() <= 1e-9 * s0);

        cfg.thz_alignment_prob = 1.0;
        let s1 = thz_sinr(&car, &bs[1], &bs, &geo(), &cfg, &draws());
        assert!(s1 <= s0);
    }

    #[test]
    fn zero_absorption_is_free_space() {
        let cfg = RadioConfig::default();
        let bs = cfg.station(0, Tier::Thz, 0.0);
        assert_eq!(thz_spreading(&bs, 30.0, 0.0), (SPEED_OF_LIGHT / (4.0 * PI * bs.carrier * 30.0)).powi(2));
    }

    fn lb(bs: usize, sinr: f64, rate: f64) -> LinkBudget {
        LinkBudget { bs, sinr, rate }
    }

    #[test]
    fn candidate_set_examples() {
        let links = vec![lb(0, 0.5, 9.0), lb(1, 0.2, 8.0)];
        assert!(candidate_set(&links, 1.0).is_empty());

        let links = vec![lb(0, 2.0, 5.0), lb(1, 0.2, 8.0), lb(2, 3.0, 7.0)];
        let c = candidate_set(&links, 1.0);
        assert_eq!(c.iter().map(|l| l.bs).collect::<Vec<_>>(), vec![2, 0]);

        let links = vec![lb(0, 2.0, 5.0), lb(1, 2.0, 8.0), lb(2, 3.0, 8.0), lb(3, 9.0, 1.0), lb(4, 9.0, 6.0)];
        let c = candidate_set(&links, 1.0);
        assert_eq!(c.iter().map(|l| l.bs).collect::<Vec<_>>(), vec![1, 2, 4]);
    }

    #[test]
    fn load_count_identities() {
        let a = vec![lb(0, 1.0, 1.0), lb(2, 1.0, 1.0)];
        let b = vec![lb(2, 1.0, 1.0)];
        let n = load_counts([a.as_slice(), b.as_slice()], 4);
        assert_eq!(n, vec![1, 0, 2, 0]);
        assert_eq!(n.iter().sum::<usize>(), a.len() + b.len());
    }

    fn stations(n: usize) -> Vec<BaseStation> {
        let cfg = RadioConfig::default();
        (0..n).map(|i| cfg.station(i, Tier::Rf, 0.0)).collect()
    }

    #[test]
    fn single_candidate_wins_everywhere() {
        let bs = stations(2);
        let links = vec![lb(0, 5.0, 10.0), lb(1, 0.1, 1.0)];
        let assoc = AssocState { candidates: candidate_set(&links, 1.0), ..Default::default() };
        for a in 1..=3 {
            assert_eq!(resolve_tele_action(a, &assoc, &links, &bs, &[1, 0], 1.0).unwrap(), Some(0));
        }
        assert!(resolve_tele_action(4, &assoc, &links, &bs, &[1, 0], 1.0).is_err());
    }

    #[test]
    fn vacancy_rule_prefers_free_station() {
        let mut bs = stations(2);
        bs[0].quota = 2;
        bs[1].quota = 2;
        let links = vec![lb(0, 5.0, 10.0), lb(1, 5.0, 10.0)];
        let assoc = AssocState { candidates: candidate_set(&links, 1.0), ..Default::default() };
        assert_eq!(resolve_tele_action(2, &assoc, &links, &bs, &[3, 1], 1.0).unwrap(), Some(1));
    }

    #[test]
    fn handoff_penalty_keeps_incumbent() {
        let mut bs = stations(2);
        bs[1].ho_penalty = 0.3;
        let links = vec![lb(0, 5.0, 80e6), lb(1, 5.0, 100e6)];
        let assoc = AssocState {
            serving_bs: Some(0),
            candidates: candidate_set(&links, 1.0),
            ..Default::default()
        };
        let loads = [1, 1];
        assert_eq!(resolve_tele_action(1, &assoc, &links, &bs, &loads, 1.0).unwrap(), Some(0));
        assert_eq!(resolve_tele_action(3, &assoc, &links, &bs, &loads, 1.0).unwrap(), Some(1));
    }

    #[test]
    fn empty_candidates_retain_or_drop() {
        let bs = stations(2);
        let links = vec![lb(0, 0.5, 1.0), lb(1, 0.5, 1.0)];
        let assoc = AssocState { serving_bs: Some(1), ..Default::default() };
        assert_eq!(resolve_tele_action(3, &assoc, &links, &bs, &[0, 0], 1.0).unwrap(), None);
        assert_eq!(resolve_tele_action(3, &assoc, &links, &bs, &[0, 0], 0.4).unwrap(), Some(1));
    }

    #[test]
    fn handoff_bookkeeping() {
        let mut s = AssocState::default();
        s.update_handoff(Some(0));
        assert_eq!(s.ho_count, 0);
        for _ in 0..9 {
            s.update_handoff(Some(0));
        }
        assert_eq!((s.ho_count, s.xi), (0, 0.0));

        let mut s = AssocState::default();
        let seq = [0, 0, 1, 1, 1, 2, 2, 2, 2, 0, 0];
        for bs in seq {
            s.update_handoff(Some(bs));
        }
        assert_eq!(s.episode_steps, 11);
        assert_eq!(s.ho_count, 3);
        assert_eq!(s.xi, 3.0 / 10.0);
    }

    #[test]
    fn deploy_layout() {
        let cfg = RadioConfig::default();
        let bs = cfg.deploy(1000.0);
        assert_eq!(bs.iter().filter(|b| b.tier == Tier::Rf).count(), 2);
        assert_eq!(bs.iter().filter(|b| b.tier == Tier::Thz).count(), 10);
        assert!(bs.iter().enumerate().all(|(i, b)| b.id == i));
    }
}
