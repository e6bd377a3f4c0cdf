mod common;

use hardball::analysis::game_position_of_state;
use hardball::dynamics::{apply_collisions, StepOutcome};
use hardball::embedding::{collision_coordinate, neighbor_gram_closed_form};
use hardball::game::{correction_sequence, potential_after_firing, BuiltinStrategy, Potential, StrategyKind};
use hardball::{
    build_embedding, check_conditions, collide, embed_velocities, fire, inversion_number, is_terminal,
    play_negative_game, potential, reflect, simulate, step, Exact, GamePosition, MassProfile, Scalar, SimConfig,
    SystemState, Tolerance, WeightMatrix,
};
use num_bigint::BigInt;
use proptest::prelude::*;

const EXACT: Tolerance = Tolerance::ZERO;

fn identity_tol() -> Tolerance {
    Tolerance::default().scaled(10.0)
}

fn rational(num: i64, den: i64) -> Exact {
    Exact::new(BigInt::from(num), BigInt::from(den))
}

fn mass() -> impl Strategy<Value = Exact> {
    (1i64..=60, 1i64..=12).prop_map(|(a, b)| rational(a, b))
}

fn mass_f64() -> impl Strategy<Value = f64> {
    (-4.0f64..4.0).prop_map(f64::exp)
}

fn small() -> impl Strategy<Value = Exact> {
    (-20i64..=20, 1i64..=6).prop_map(|(a, b)| rational(a, b))
}

/// Masses, strictly increasing positions and velocities for 2..=max_balls balls.
fn exact_system(max_balls: usize) -> impl Strategy<Value = (MassProfile<Exact>, SystemState<Exact>)> {
    (2..=max_balls).prop_flat_map(|balls| {
        (
            prop::collection::vec(mass(), balls),
            prop::collection::vec((1i64..=30, 1i64..=4), balls - 1),
            prop::collection::vec(small(), balls),
        )
            .prop_map(|(m, gaps, v)| {
                let masses = MassProfile::new(m).unwrap();
                let mut x = vec![<Exact as Scalar>::zero()];
                for (a, b) in gaps {
                    let next = x.last().unwrap().clone() + rational(a, b);
                    x.push(next);
                }
                let state = SystemState::new(x, v, &masses).unwrap();
                (masses, state)
            })
    })
}

fn float_velocities(balls: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, balls)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn exact_simulation_conserves_exactly((m, s) in exact_system(5)) {
        let trace = simulate(&s, &m, &SimConfig::for_balls(m.len())).unwrap();
        let p0 = m.momentum(&s.velocities);
        let e0 = m.vis_viva(&s.velocities);
        for v in trace.velocity_history() {
            prop_assert_eq!(m.momentum(&v), p0.clone());
            prop_assert_eq!(m.vis_viva(&v), e0.clone());
        }
        prop_assert!(trace.is_consistent());
    }

    #[test]
    fn float_simulation_conserves_within_tolerance((m, s) in exact_system(5)) {
        let (m, s) = (m.to_f64(), s.to_f64());
        let trace = simulate(&s, &m, &SimConfig::for_balls(m.len())).unwrap();
        let p_scale: f64 = m.as_slice().iter().zip(&s.velocities).map(|(a, b)| (a * b).abs()).sum::<f64>().max(1e-300);
        let e0 = m.vis_viva(&s.velocities).max(1e-300);
        for v in trace.velocity_history() {
            prop_assert!((m.momentum(&v) - m.momentum(&s.velocities)).abs() / p_scale <= 1e-8);
            prop_assert!((m.vis_viva(&v) - e0).abs() / e0 <= 1e-8);
        }
    }

    #[test]
    fn positions_stay_ordered((m, s) in exact_system(5)) {
        let config = SimConfig::for_balls(m.len());
        let mut state = s;
        for _ in 0..config.max_events {
            match step(&state, &m, &config).unwrap() {
                StepOutcome::Event { state: next, event } => {
                    prop_assert!(next.positions.windows(2).all(|w| w[0] <= w[1]));
                    for &i in &event.pairs {
                        prop_assert_eq!(&next.positions[i - 1], &next.positions[i]);
                    }
                    prop_assert!(next.time >= state.time);
                    state = next;
                }
                _ => break,
            }
        }
    }

    #[test]
    fn equal_mass_events_remove_one_inversion_per_pair((_, s) in exact_system(6)) {
        let m = MassProfile::<Exact>::equal(s.balls()).unwrap();
        let trace = simulate(&s, &m, &SimConfig::for_balls(m.len())).unwrap();
        let inversions = |v: &[Exact]| {
            let mut c = 0;
            for i in 0..v.len() {
                for j in i + 1..v.len() {
                    c += (v[i] > v[j]) as usize;
                }
            }
            c
        };
        let history = trace.velocity_history();
        for (event, w) in trace.events.iter().zip(history.windows(2)) {
            prop_assert_eq!(inversions(&w[0]), inversions(&w[1]) + event.pairs.len());
        }
    }

    #[test]
    fn sorted_velocities_mean_no_events((m, mut s) in exact_system(6)) {
        s.velocities.sort();
        let trace = simulate(&s, &m, &SimConfig::for_balls(m.len())).unwrap();
        prop_assert!(trace.events.is_empty());
    }

    #[test]
    fn non_adjacent_updates_commute(
        (m, s) in exact_system(7),
        seed in any::<u64>(),
    ) {
        // pick every other approaching pair, then apply them forwards and backwards
        let approaching: Vec<usize> = (1..s.balls()).filter(|&i| s.velocities[i - 1] > s.velocities[i]).collect();
        let mut pairs: Vec<usize> = Vec::new();
        for i in approaching {
            if pairs.last().is_none_or(|&l| l + 1 < i) && (seed >> (i % 64)) & 1 == 1 {
                pairs.push(i);
            }
        }
        let mut a = s.velocities.clone();
        let mut b = s.velocities.clone();
        apply_collisions(&mut a, &m, &pairs, EXACT).unwrap();
        let reversed: Vec<usize> = pairs.iter().rev().copied().collect();
        apply_collisions(&mut b, &m, &reversed, EXACT).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn exact_simulation_is_deterministic((m, s) in exact_system(5)) {
        let c = SimConfig::for_balls(m.len());
        prop_assert_eq!(simulate(&s, &m, &c).unwrap(), simulate(&s, &m, &c).unwrap());
    }

    #[test]
    fn collision_is_a_reflection(
        m in prop::collection::vec(mass_f64(), 2..=9),
        v in float_velocities(9),
        pick in any::<prop::sample::Index>(),
    ) {
        let masses = MassProfile::new(m.clone()).unwrap();
        let v = &v[..m.len()];
        let i = 1 + pick.index(m.len() - 1);
        prop_assume!(v[i - 1] > v[i]);
        let g = build_embedding(&masses);
        let (l, r) = collide(&m[i - 1], &m[i], &v[i - 1], &v[i], Tolerance::default()).unwrap();
        let mut after = v.to_vec();
        after[i - 1] = l;
        after[i] = r;
        let lhs = embed_velocities(&masses, &after).unwrap();
        let rhs = reflect(&g, &embed_velocities(&masses, v).unwrap(), i);
        for (a, b) in lhs.coords().iter().zip(rhs.coords()) {
            prop_assert!(identity_tol().eq_f64(*a, *b), "{} vs {}", a, b);
        }
        prop_assert!(collision_coordinate(&g, &embed_velocities(&masses, v).unwrap(), i) < 0.0);
    }

    #[test]
    fn distant_reflections_commute_and_preserve_invariants(
        m in prop::collection::vec(mass_f64(), 4..=9),
        v in float_velocities(9),
        a in any::<prop::sample::Index>(),
        b in any::<prop::sample::Index>(),
    ) {
        let masses = MassProfile::new(m.clone()).unwrap();
        let n = m.len() - 1;
        let (i, j) = (1 + a.index(n), 1 + b.index(n));
        prop_assume!(i.abs_diff(j) > 1);
        let g = build_embedding(&masses);
        let v = embed_velocities(&masses, &v[..m.len()]).unwrap();
        let ij = reflect(&g, &reflect(&g, &v, i), j);
        let ji = reflect(&g, &reflect(&g, &v, j), i);
        for (x, y) in ij.coords().iter().zip(ji.coords()) {
            prop_assert!(identity_tol().eq_f64(*x, *y));
        }
        let r = reflect(&g, &v, i);
        prop_assert!(identity_tol().eq_f64(r.norm_sq(), v.norm_sq()));
        prop_assert!(identity_tol().eq_f64(r.momentum(&g), v.momentum(&g)));
    }

    #[test]
    fn gram_identities_and_full_rank(m in prop::collection::vec(mass_f64(), 2..=9)) {
        let masses = MassProfile::new(m.clone()).unwrap();
        let g = build_embedding(&masses);
        prop_assert!(g.identity_violations(identity_tol()).is_empty());
        for i in 1..g.n() {
            prop_assert!(identity_tol().eq_f64(neighbor_gram_closed_form(&masses, i), g.gram(i, i + 1)));
        }
        prop_assert_eq!(g.basis_rank(Tolerance::default()), m.len());
    }

    #[test]
    fn terminal_iff_potential_increasing(p in prop::collection::vec(small(), 1..=7)) {
        let p = GamePosition::new(p).unwrap();
        prop_assert_eq!(is_terminal(&p, EXACT), potential(&p).is_increasing(EXACT));
    }

    #[test]
    fn four_case_formula_matches_firing(
        p in prop::collection::vec(small(), 1..=7),
        k in prop::collection::vec(small(), 6),
        pick in any::<prop::sample::Index>(),
    ) {
        let n = p.len();
        let k = WeightMatrix::from_neighbors(n, k[..n - 1].to_vec()).unwrap();
        let p = GamePosition::new(p).unwrap();
        let i = 1 + pick.index(n);
        prop_assert_eq!(potential(&fire(&p, &k, i)), potential_after_firing(&potential(&p), &k, i));
    }

    #[test]
    fn correction_is_non_decreasing_and_inversions_drop(
        p in prop::collection::vec(small(), 1..=7),
        k in prop::collection::vec((0i64..=8).prop_map(|a| rational(a, 8)), 6),
        pick in any::<prop::sample::Index>(),
    ) {
        let n = p.len();
        let k = WeightMatrix::from_neighbors(n, k[..n - 1].to_vec()).unwrap();
        let p = GamePosition::new(p).unwrap();
        let i = 1 + pick.index(n);
        prop_assume!(p.get(i) < <Exact as Scalar>::zero());
        let c = correction_sequence(&p, &k, i);
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        let before = inversion_number(&potential(&p), EXACT).count;
        let after = inversion_number(&potential(&fire(&p, &k, i)), EXACT).count;
        prop_assert!(after < before);
    }

    #[test]
    fn inversions_match_bubble_sort(q in prop::collection::vec(-6i64..=6, 1..=12)) {
        let qf: Vec<f64> = q.iter().map(|&x| x as f64).collect();
        let exact = Potential::from_values(q.iter().map(|&x| Exact::from_i64(x)).collect());
        prop_assert_eq!(inversion_number(&exact, EXACT).count, common::bubble_sort_swaps(&qf));
        let float = Potential::from_values(qf.clone());
        prop_assert_eq!(inversion_number(&float, Tolerance::default()).count, common::bubble_sort_swaps(&qf));
    }

    #[test]
    fn condition_implications(m in prop::collection::vec(mass(), 1..=7)) {
        let r = hardball::analysis::check_conditions_slice(&m, EXACT).unwrap();
        prop_assert!(!r.arithmetic_ok || r.geometric_ok);
        if m.len() >= 2 {
            let rf = check_conditions(&MassProfile::new(m.iter().map(Scalar::to_f64).collect()).unwrap(), Tolerance::default());
            prop_assert!(!r.geometric_ok || rf.weights_ok);
        }
    }

    #[test]
    fn game_position_tracks_collisions(
        m in prop::collection::vec(mass_f64(), 2..=8),
        v in float_velocities(8),
        pick in any::<prop::sample::Index>(),
    ) {
        let masses = MassProfile::new(m.clone()).unwrap();
        let v = &v[..m.len()];
        let i = 1 + pick.index(m.len() - 1);
        prop_assume!(v[i - 1] > v[i]);
        let k = WeightMatrix::from_masses(&masses);
        let (l, r) = collide(&m[i - 1], &m[i], &v[i - 1], &v[i], Tolerance::default()).unwrap();
        let mut after = v.to_vec();
        after[i - 1] = l;
        after[i] = r;
        let lhs = game_position_of_state(&masses, &after).unwrap();
        let rhs = fire(&game_position_of_state(&masses, v).unwrap(), &k, i);
        for (a, b) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            prop_assert!(identity_tol().eq_f64(*a, *b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn potential_sorted_iff_velocities_sorted(
        m in prop::collection::vec(mass_f64(), 2..=8),
        v in prop::collection::vec(-5i64..=5, 8),
    ) {
        let masses = MassProfile::new(m.clone()).unwrap();
        let v: Vec<f64> = v[..m.len()].iter().map(|&x| x as f64).collect();
        let p = game_position_of_state(&masses, &v).unwrap();
        let sorted = v.windows(2).all(|w| w[0] <= w[1]);
        prop_assert_eq!(potential(&p).is_increasing(Tolerance::default()), sorted);
    }

    #[test]
    fn seeded_random_play_is_reproducible(
        p in prop::collection::vec(-9i64..=9, 1..=6),
        seed in any::<u64>(),
    ) {
        let n = p.len();
        let k = WeightMatrix::from_neighbors(n, vec![rational(1, 2); n - 1]).unwrap();
        let start = GamePosition::new(p.iter().map(|&x| Exact::from_i64(x)).collect()).unwrap();
        let run = || {
            let mut s = BuiltinStrategy::new(StrategyKind::Random, seed);
            play_negative_game(&start, &k, &mut s, 100, EXACT).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}
