use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vqmorl::learner::{ReplayMemory, Transition};
use vqmorl::quantum::{action_observable, q_values, GateSpec, InitScheme, PauliProduct, Statevector, VqcParams};
use vqmorl::radio::AssocState;
use vqmorl::traffic::{Traffic, TrafficConfig};
use vqmorl::FeatureVector;

fn gate() -> impl Strategy<Value = GateSpec> {
    prop_oneof![
        (0..5usize, -10.0..10.0f64).prop_map(|(q, a)| GateSpec::rx(q, a)),
        (0..5usize, -10.0..10.0f64).prop_map(|(q, a)| GateSpec::ry(q, a)),
        (0..5usize, -10.0..10.0f64).prop_map(|(q, a)| GateSpec::rz(q, a)),
        (0..5usize, 1..5usize).prop_map(|(c, d)| GateSpec::cz(c, (c + d) % 5)),
    ]
}

fn state() -> impl Strategy<Value = Statevector> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 32).prop_filter_map("zero vector", |v| {
        Statevector::from_amplitudes(v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
    })
}

fn features() -> impl Strategy<Value = FeatureVector> {
    prop::array::uniform5(0.0..=1.0f64).prop_map(|f| FeatureVector::new(f).unwrap())
}

proptest! {
    #[test]
    fn gates_preserve_norm(s in state(), gates in prop::collection::vec(gate(), 0..64)) {
        let mut s = s;
        for g in &gates {
            s.apply(g).unwrap();
        }
        prop_assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_round_trip(s in state(), g in gate()) {
        let mut t = s.clone();
        t.apply(&g).unwrap();
        t.apply(&g.inverse()).unwrap();
        for (a, b) in s.amplitudes().iter().zip(t.amplitudes()) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn z_products_are_bounded(s in state(), mask in 1u32..32) {
        let support: Vec<usize> = (0..5).filter(|q| mask >> q & 1 == 1).collect();
        let e = s.expectation(&PauliProduct::new(5, support).unwrap());
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&e));
    }

    #[test]
    fn q_values_bounded_by_weights(seed in any::<u64>(), f in features()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = VqcParams::init(3, InitScheme::Uniform, 3.0, &mut rng);
        for (i, w) in p.action_weights_mut().iter_mut().enumerate() {
            *w = 0.5 + i as f64;
        }
        let q = q_values(&p, &f);
        for (a, v) in q.iter().enumerate() {
            prop_assert!(v.abs() <= p.action_weights()[a] + 1e-12);
            action_observable(a).unwrap();
        }
    }

    #[test]
    fn replay_never_exceeds_capacity(cap in 1usize..50, n in 0usize..200) {
        let mut m = ReplayMemory::new(cap);
        let f = FeatureVector::new([0.0; 5]).unwrap();
        for i in 0..n {
            m.push(Transition { s: f, a: i % 15, r: i as f64, s_next: f, done: false });
            prop_assert!(m.len() <= cap);
        }
        let oldest_kept = n.saturating_sub(cap);
        let rs: Vec<f64> = m.iter().map(|t| t.r).collect();
        prop_assert_eq!(rs.iter().copied().fold(f64::INFINITY, f64::min), if n == 0 { f64::INFINITY } else { oldest_kept as f64 });
    }

    #[test]
    fn handoff_count_is_monotone(seq in prop::collection::vec(prop::option::of(0usize..4), 1..40)) {
        let mut a = AssocState::default();
        let mut prev = 0;
        for bs in seq {
            a.update_handoff(bs);
            prop_assert!(a.ho_count >= prev);
            prop_assert!(a.ho_count < a.episode_steps);
            prop_assert!((0.0..=1.0).contains(&a.xi));
            prev = a.ho_count;
        }
    }

    #[test]
    fn lanes_and_speeds_stay_in_bounds(seed in any::<u64>(), actions in prop::collection::vec(1usize..=5, 1..30)) {
        let cfg = TrafficConfig::default();
        let idm = cfg.idm(25.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Traffic::spawn(&cfg, 25.0, 12, &mut rng).unwrap();
        for a in actions {
            t.apply_driving_action(a, &cfg).unwrap();
            for _ in 0..cfg.action_repeat {
                t.step_kinematics(cfg.dt, &cfg, &idm, &mut rng);
            }
            for v in &t.vehicles {
                prop_assert!(v.lane < cfg.lanes);
                prop_assert!((0.0..=cfg.v_hard_max).contains(&v.v));
                prop_assert!((0.0..cfg.road_length).contains(&v.x));
            }
        }
    }
}
