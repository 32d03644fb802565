mod common;

use num_complex::Complex;
use proptest::prelude::*;

use bayesgame::classical::{behavior_of_correlated, classical_region, region_contains, CorrelatedStrategy};
use bayesgame::equilibrium_opt::{best_response, seesaw, SeesawOptions};
use bayesgame::game::{check_no_signaling, symmetrize, table_from_fn, Behavior};
use bayesgame::npa::{build_moment_structure, payoff_functional, Level};
use bayesgame::quantum::chsh_value;
use bayesgame::{
    behavior_of_quantum, expected_payoffs, standard_game, GameSpec, Player, QuantumState, QuantumStrategy,
    QubitMeasurement,
};

fn measurement() -> impl Strategy<Value = QubitMeasurement<f64>> {
    (0.0..std::f64::consts::PI, 0.0..2.0 * std::f64::consts::PI)
        .prop_map(|(p, a)| QubitMeasurement::from_bloch_angles(p, a))
}

fn state() -> impl Strategy<Value = QuantumState<f64>> {
    let amps = prop::array::uniform4((-1.0..1.0f64, -1.0..1.0f64));
    (amps.clone(), amps, 0.0..=1.0f64).prop_filter_map("zero vector", |(a, b, lambda)| {
        let pure = |v: [(f64, f64); 4]| {
            let c = v.map(|(re, im)| Complex::new(re, im));
            let n = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            (n > 1e-3).then(|| QuantumState::pure(c.map(|z| z / n)).unwrap())
        };
        Some(pure(a)?.mix(&pure(b)?, lambda))
    })
}

fn quantum_strategy() -> impl Strategy<Value = QuantumStrategy<f64>> {
    (state(), measurement(), measurement(), measurement(), measurement())
        .prop_map(|(s, a0, a1, b0, b1)| QuantumStrategy::new(s, [a0, a1], [b0, b1]))
}

fn behavior() -> impl Strategy<Value = Behavior<f64>> {
    prop::array::uniform4(prop::array::uniform4(0.01..1.0f64)).prop_map(|rows| {
        Behavior::from_fn(|xa, xb, ya, yb| {
            let r = rows[2 * xa + xb];
            r[2 * ya + yb] / r.iter().sum::<f64>()
        })
        .unwrap()
    })
}

fn game() -> impl Strategy<Value = GameSpec<f64>> {
    (
        prop::array::uniform4(0.01..1.0f64),
        prop::array::uniform16(-2.0..2.0f64),
        prop::array::uniform16(-2.0..2.0f64),
    )
        .prop_map(|(p, ua, ub)| {
            let s: f64 = p.iter().sum();
            let (p01, p10, p11) = (p[1] / s, p[2] / s, p[3] / s);
            let prior = [[1.0 - p01 - p10 - p11, p01], [p10, p11]];
            let t = |u: [f64; 16]| table_from_fn(|xa, xb, ya, yb| u[8 * xa + 4 * xb + 2 * ya + yb]);
            GameSpec::new(prior, t(ua), t(ub)).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn born_behaviors_are_normalized_and_non_signaling(m in quantum_strategy()) {
        let b = behavior_of_quantum(&m).unwrap();
        for xa in 0..2 {
            for xb in 0..2 {
                let s: f64 = (0..4).map(|k| b.get(xa, xb, k >> 1, k & 1)).sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
        prop_assert!(check_no_signaling(&b, 1e-9).no_signaling);
        prop_assert!(chsh_value(&b).abs() <= 2.0 * std::f64::consts::SQRT_2 + 1e-9);
    }

    #[test]
    fn payoffs_are_linear_in_the_behavior(b1 in behavior(), b2 in behavior(), lambda in 0.0..=1.0f64, g in game()) {
        let mixed = b1.mix(&b2, lambda).unwrap();
        let (p, p1, p2) = (expected_payoffs(&g, &mixed), expected_payoffs(&g, &b1), expected_payoffs(&g, &b2));
        prop_assert!((p.alice - (lambda * p1.alice + (1.0 - lambda) * p2.alice)).abs() < 1e-12);
        prop_assert!((p.bob - (lambda * p1.bob + (1.0 - lambda) * p2.bob)).abs() < 1e-12);
    }

    #[test]
    fn symmetrize_equalizes_on_the_standard_game(b in behavior()) {
        let g = standard_game::<f64>();
        let p = expected_payoffs(&g, &b);
        let s = expected_payoffs(&g, &symmetrize(&b));
        prop_assert!((s.alice - s.bob).abs() < 1e-10);
        prop_assert!((s.joint() - p.joint()).abs() < 1e-10);
        // idempotent
        prop_assert!(symmetrize(&symmetrize(&b)).distance(&symmetrize(&b)) < 1e-15);
    }

    #[test]
    fn correlated_payoffs_lie_in_the_classical_region(w in prop::array::uniform16(0.01..1.0f64)) {
        let s: f64 = w.iter().sum();
        let mut weights = [[0.0; 4]; 4];
        for (i, v) in w.iter().enumerate() {
            weights[i / 4][i % 4] = v / s;
        }
        let rest: f64 = weights.iter().flatten().skip(1).sum();
        weights[0][0] = 1.0 - rest;
        let cs = CorrelatedStrategy::new(weights).unwrap();
        let g = standard_game::<f64>();
        let p = expected_payoffs(&g, &behavior_of_correlated(&cs));
        prop_assert!(region_contains(&classical_region(&g), &p, 1e-12));
        prop_assert!(p.joint() <= 1.125 + 1e-12);
    }

    #[test]
    fn best_response_dominates_random_alternatives(
        m in quantum_strategy(),
        alt in prop::array::uniform2(measurement()),
        alice in any::<bool>(),
    ) {
        let g = standard_game::<f64>();
        let player = if alice { Player::Alice } else { Player::Bob };
        let br = best_response(&g, &m, player);
        let current = expected_payoffs(&g, &behavior_of_quantum(&m).unwrap()).get(player);
        let other = expected_payoffs(&g, &behavior_of_quantum(&m.with_measurements(player, alt)).unwrap()).get(player);
        let achieved = expected_payoffs(&g, &behavior_of_quantum(&m.with_measurements(player, br.measurements.clone())).unwrap()).get(player);
        prop_assert!((achieved - br.optimal).abs() < 1e-9);
        prop_assert!(other <= br.optimal + 1e-9);
        prop_assert!(current <= br.optimal + 1e-9);
    }

    #[test]
    fn seesaw_is_monotone(m in quantum_strategy(), phi in 0.0..std::f64::consts::FRAC_PI_2) {
        let g = standard_game::<f64>();
        let opts = SeesawOptions { max_iters: 50, ..SeesawOptions::default() };
        let t = seesaw(&g, phi.cos(), phi.sin(), &m, &opts);
        prop_assert!(t.is_monotone(1e-12));
    }

    #[test]
    fn moment_matrices_of_strategies_are_feasible(m in quantum_strategy(), wa in -1.0..1.0f64, wb in -1.0..1.0f64) {
        let s = build_moment_structure(Level::Two);
        let gamma = s.moment_matrix(&m);
        prop_assert!(gamma.min_eigenvalue() > -1e-10);
        for ((ri, rj), (ei, ej)) in s.equalities() {
            prop_assert!((gamma[(ri, rj)] - gamma[(ei, ej)]).abs() < 1e-10);
        }
        let f = payoff_functional(&standard_game::<f64>(), wa, wb);
        let (c, off) = s.embed(&f);
        prop_assert!((c.inner(&gamma) + off - f.evaluate(&behavior_of_quantum(&m).unwrap())).abs() < 1e-10);
    }
}
