//! Best responses, quantum-equilibrium verification and see-saw
//! optimization over two-qubit projective strategies.
//!
//! With the opponent's measurements and the shared state fixed, a player's
//! payoff is `Σ_{type,a} tr(Π^a_type · G^a_type)` for effective operators
//! `G`. Since `Π¹ = I − Π⁰`, the optimum over all binary POVMs is attained by
//! the projector onto the nonnegative eigenspace of `G⁰ − G¹`. That gives an
//! exact optimality certificate without running a numerical SDP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classical::{max_weighted_classical, DeterministicStrategy};
use crate::error::Result;
use crate::game::{expected_payoffs, GameSpec, PayoffPoint, Player};
use crate::quantum::{
    behavior_of_quantum, hermitian_eig, ComplexOperator, QuantumState, QuantumStrategy, QubitMeasurement,
};
use crate::scalar::Real;

fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).unwrap()
}

/// `(G⁰, G¹)` such that the player's payoff is Σ_{type,a} tr(Π^a_type·G^a_type).
pub fn effective_payoff_operators<T: Real>(
    game: &GameSpec<T>,
    m: &QuantumStrategy<T>,
    player: Player,
    ty: usize,
) -> [ComplexOperator<T>; 2] {
    let rho = m.state.density();
    let id = ComplexOperator::identity(2);
    let mut g = [ComplexOperator::zeros(2), ComplexOperator::zeros(2)];
    for other_ty in 0..2 {
        let (xa, xb) = match player {
            Player::Alice => (ty, other_ty),
            Player::Bob => (other_ty, ty),
        };
        let prior = game.prior(xa, xb);
        if prior == T::zero() {
            continue;
        }
        let other = &m.measurements(player.other())[other_ty];
        for other_out in 0..2 {
            let proj = other.projector(other_out);
            let reduced = match player {
                Player::Alice => id.kron(proj).mul(rho).partial_trace_b(),
                Player::Bob => proj.kron(&id).mul(rho).partial_trace_a(),
            };
            let reduced = reduced.add(&reduced.adjoint()).scale(lit(0.5));
            for (own_out, g_out) in g.iter_mut().enumerate() {
                let (ya, yb) = match player {
                    Player::Alice => (own_out, other_out),
                    Player::Bob => (other_out, own_out),
                };
                let u = game.utility(player, xa, xb, ya, yb);
                if u != T::zero() {
                    *g_out = g_out.add(&reduced.scale(prior * u));
                }
            }
        }
    }
    g
}

/// Player's payoff from the effective operators of the current strategy.
pub fn payoff_via_operators<T: Real>(game: &GameSpec<T>, m: &QuantumStrategy<T>, player: Player) -> T {
    (0..2).fold(T::zero(), |acc, ty| {
        let g = effective_payoff_operators(game, m, player, ty);
        let meas = &m.measurements(player)[ty];
        acc + meas.projector(0).trace_product_re(&g[0]) + meas.projector(1).trace_product_re(&g[1])
    })
}

#[derive(Debug, Clone)]
pub struct BestResponseReport<T> {
    pub player: Player,
    /// Optimal replacement measurement for each of the player's types.
    pub measurements: [QubitMeasurement<T>; 2],
    pub current: T,
    pub optimal: T,
    /// `optimal − current`.
    pub gain: T,
    /// Some type had a (numerically) zero eigenvalue, so the optimum is not unique.
    pub degenerate: bool,
}

/// Exact best response of `player` against the rest of `m`.
pub fn best_response<T: Real>(game: &GameSpec<T>, m: &QuantumStrategy<T>, player: Player) -> BestResponseReport<T> {
    let mut optimal = T::zero();
    let mut degenerate = false;
    let mut chosen: Vec<QubitMeasurement<T>> = Vec::with_capacity(2);
    for ty in 0..2 {
        let g = effective_payoff_operators(game, m, player, ty);
        let diff = g[0].sub(&g[1]);
        let eig = hermitian_eig(&diff).expect("difference of Hermitian operators");
        let scale = g[0].max_abs().max(g[1].max_abs()).max(T::min_positive_value());
        let zero_tol = lit::<T>(1e-12) * scale;
        let mut p0 = ComplexOperator::zeros(2);
        let mut rank = 0;
        for (l, v) in eig.values.iter().zip(&eig.vectors) {
            if l.abs() <= zero_tol {
                degenerate = true;
            }
            // zero eigenspace goes to outcome 0
            if *l >= -zero_tol {
                p0 = p0.add(&ComplexOperator::outer(v));
                rank += 1;
            }
            optimal = optimal + l.max(T::zero());
        }
        optimal = optimal + g[1].trace().re;
        let meas = match rank {
            0 => QubitMeasurement::constant(1),
            2 => QubitMeasurement::constant(0),
            _ => QubitMeasurement::from_projector(p0).expect("rank-1 eigenprojector"),
        };
        chosen.push(meas);
    }
    let current = payoff_via_operators(game, m, player);
    let second = chosen.pop().expect("two types");
    let first = chosen.pop().expect("two types");
    BestResponseReport {
        player,
        measurements: [first, second],
        current,
        optimal,
        gain: optimal - current,
        degenerate,
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport<T> {
    pub is_equilibrium: bool,
    pub max_gain: T,
    pub alice: BestResponseReport<T>,
    pub bob: BestResponseReport<T>,
}

/// Equilibrium iff neither player can gain more than `tol` by any change of
/// measurements (all binary POVMs included).
pub fn verify_quantum_equilibrium<T: Real>(game: &GameSpec<T>, m: &QuantumStrategy<T>, tol: T) -> EquilibriumReport<T> {
    let alice = best_response(game, m, Player::Alice);
    let bob = best_response(game, m, Player::Bob);
    let max_gain = alice.gain.max(bob.gain);
    EquilibriumReport {
        is_equilibrium: max_gain <= tol,
        max_gain,
        alice,
        bob,
    }
}

/// Σ_{x,y} P(x)·u(x,y)·Π_A ⊗ Π_B for the player's utility table.
pub fn payoff_operator<T: Real>(game: &GameSpec<T>, m: &QuantumStrategy<T>, player: Player) -> ComplexOperator<T> {
    let mut w = ComplexOperator::zeros(4);
    for (xa, xb, ya, yb) in crate::game::cells() {
        let coef = game.prior(xa, xb) * game.utility(player, xa, xb, ya, yb);
        if coef != T::zero() {
            let op = m.alice[xa].projector(ya).kron(m.bob[xb].projector(yb));
            w = w.add(&op.scale(coef));
        }
    }
    w
}

/// Best shared pure state for fixed measurements: top eigenvector of the
/// player's payoff operator.
pub fn optimal_state<T: Real>(game: &GameSpec<T>, m: &QuantumStrategy<T>, player: Player) -> (T, QuantumState<T>) {
    let w = payoff_operator(game, m, player);
    let w = w.add(&w.adjoint()).scale(lit(0.5));
    let eig = hermitian_eig(&w).expect("Hermitian payoff operator");
    let v = &eig.vectors[0];
    let state = QuantumState::pure([v[0], v[1], v[2], v[3]]).expect("unit eigenvector");
    (eig.values[0], state)
}

#[derive(Debug, Clone, Copy)]
pub struct SeesawOptions {
    pub max_iters: usize,
    pub tol: f64,
    /// Also replace the shared state by the best pure state after each round.
    /// This goes beyond fixed-state see-saw and is off by default.
    pub optimize_state: bool,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        SeesawOptions {
            max_iters: 500,
            tol: 1e-10,
            optimize_state: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SeesawTrace<T> {
    /// Objective before the first round, then after every round.
    pub objective: Vec<T>,
    pub strategy: QuantumStrategy<T>,
    pub converged: bool,
}

impl<T: Real> SeesawTrace<T> {
    pub fn final_objective(&self) -> T {
        *self.objective.last().expect("nonempty trace")
    }

    pub fn is_monotone(&self, slack: T) -> bool {
        self.objective.windows(2).all(|w| w[1] >= w[0] - slack)
    }
}

/// Alternating best responses for the weighted utility w_a·u_A + w_b·u_B.
pub fn seesaw<T: Real>(
    game: &GameSpec<T>,
    w_a: T,
    w_b: T,
    init: &QuantumStrategy<T>,
    opts: &SeesawOptions,
) -> SeesawTrace<T> {
    let weighted = game.weighted(w_a, w_b);
    let tol = lit::<T>(opts.tol);
    let mut m = init.clone();
    let mut objective = vec![payoff_via_operators(&weighted, &m, Player::Alice)];
    let mut converged = false;
    for _ in 0..opts.max_iters {
        let br = best_response(&weighted, &m, Player::Alice);
        m = m.with_measurements(Player::Alice, br.measurements);
        let br = best_response(&weighted, &m, Player::Bob);
        m = m.with_measurements(Player::Bob, br.measurements);
        let mut value = br.optimal;
        if opts.optimize_state {
            let (v, state) = optimal_state(&weighted, &m, Player::Alice);
            if v > value {
                m = m.with_state(state);
                value = v;
            }
        }
        let prev = *objective.last().unwrap();
        objective.push(value);
        if value - prev < tol {
            converged = true;
            break;
        }
    }
    SeesawTrace {
        objective,
        strategy: m,
        converged,
    }
}

/// RNG for task `stream` of a computation seeded with `seed`.
pub fn task_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniformly random Bloch angles for all four measurements.
pub fn random_strategy<T: Real, R: Rng + ?Sized>(state: &QuantumState<T>, rng: &mut R) -> QuantumStrategy<T> {
    let mut draw = || {
        let polar = rng.gen_range(0.0..std::f64::consts::PI);
        let azimuth = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
        QubitMeasurement::from_bloch_angles(lit::<T>(polar), lit::<T>(azimuth))
    };
    let alice = [draw(), draw()];
    let bob = [draw(), draw()];
    QuantumStrategy::new(state.clone(), alice, bob)
}

/// Deterministic profile played with constant measurements on `state`.
pub fn classical_strategy<T: Real>(
    state: &QuantumState<T>,
    alice: DeterministicStrategy,
    bob: DeterministicStrategy,
) -> QuantumStrategy<T> {
    let m = |s: DeterministicStrategy| {
        [
            QubitMeasurement::constant(s.action(0)),
            QubitMeasurement::constant(s.action(1)),
        ]
    };
    QuantumStrategy::new(state.clone(), m(alice), m(bob))
}

/// Best see-saw result over `restarts` seeded random starts (ties → lowest index).
#[allow(clippy::too_many_arguments)]
pub fn seesaw_restarts<T: Real>(
    game: &GameSpec<T>,
    w_a: T,
    w_b: T,
    state: &QuantumState<T>,
    restarts: usize,
    seed: u64,
    stream_offset: u64,
    opts: &SeesawOptions,
) -> Vec<SeesawTrace<T>> {
    (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut rng = task_rng(seed, stream_offset + r as u64);
            let init = random_strategy(state, &mut rng);
            seesaw(game, w_a, w_b, &init, opts)
        })
        .collect()
}

fn best_trace<T: Real>(traces: Vec<SeesawTrace<T>>) -> SeesawTrace<T> {
    let mut best: Option<SeesawTrace<T>> = None;
    for t in traces {
        if best.as_ref().is_none_or(|b| t.final_objective() > b.final_objective()) {
            best = Some(t);
        }
    }
    best.expect("at least one restart")
}

/// Best of `restarts` see-saw runs.
pub fn best_seesaw<T: Real>(
    game: &GameSpec<T>,
    w_a: T,
    w_b: T,
    state: &QuantumState<T>,
    restarts: usize,
    seed: u64,
    opts: &SeesawOptions,
) -> SeesawTrace<T> {
    best_trace(seesaw_restarts(game, w_a, w_b, state, restarts, seed, 0, opts))
}

/// `n` weight directions spanning [0, π/2], scaled so the larger weight is 1.
/// An odd `n` includes (1, 1).
pub fn weight_grid<T: Real>(n: usize) -> Vec<(T, T)> {
    if n <= 1 {
        return vec![(T::one(), T::one())];
    }
    (0..n)
        .map(|k| {
            let phi = std::f64::consts::FRAC_PI_2 * k as f64 / (n - 1) as f64;
            let (s, c) = phi.sin_cos();
            let m = s.max(c);
            let (wa, wb) = if 2 * k == n - 1 { (1.0, 1.0) } else { (c / m, s / m) };
            (lit::<T>(wa), lit::<T>(wb))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RegionSample<T> {
    pub w_a: T,
    pub w_b: T,
    pub payoffs: PayoffPoint<T>,
    pub objective: T,
    pub converged: bool,
    pub strategy: QuantumStrategy<T>,
}

/// Best see-saw point per weight direction, state held at |φ⁺⟩. Besides the
/// random restarts, each direction runs once from its best classical profile,
/// so no sample falls below the classical maximum.
pub fn quantum_region_sample<T: Real>(
    game: &GameSpec<T>,
    weights: &[(T, T)],
    restarts: usize,
    seed: u64,
    opts: &SeesawOptions,
) -> Result<Vec<RegionSample<T>>> {
    let state = QuantumState::phi_plus();
    let restarts = restarts.max(1);
    weights
        .par_iter()
        .enumerate()
        .map(|(g, &(w_a, w_b))| {
            let mut traces = seesaw_restarts(game, w_a, w_b, &state, restarts, seed, (g * restarts) as u64, opts);
            let (_, (ca, cb)) = max_weighted_classical(game, w_a, w_b);
            traces.push(seesaw(game, w_a, w_b, &classical_strategy(&state, ca, cb), opts));
            let best = best_trace(traces);
            let payoffs = expected_payoffs(game, &behavior_of_quantum(&best.strategy)?);
            Ok(RegionSample {
                w_a,
                w_b,
                payoffs,
                objective: best.final_objective(),
                converged: best.converged,
                strategy: best.strategy,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::standard_game;
    use crate::quantum::{bell_strategy, fair_strategy};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

    fn tsirelson_payoff() -> f64 {
        0.75 * FRAC_PI_8.cos().powi(2)
    }

    #[test]
    fn operators_reproduce_payoff() {
        let g = standard_game::<f64>();
        let m = fair_strategy::<f64>();
        for p in [Player::Alice, Player::Bob] {
            assert!((payoff_via_operators(&g, &m, p) - tsirelson_payoff()).abs() < 1e-12);
            for ty in 0..2 {
                for op in effective_payoff_operators(&g, &m, p, ty) {
                    assert!(op.is_hermitian(1e-14));
                }
            }
        }
    }

    #[test]
    fn zero_game_operators_vanish() {
        let g = GameSpec::<f64>::zero();
        let m = fair_strategy::<f64>();
        for ty in 0..2 {
            for op in effective_payoff_operators(&g, &m, Player::Alice, ty) {
                assert_eq!(op.max_abs(), 0.0);
            }
        }
        let br = best_response(&g, &m, Player::Bob);
        assert_eq!(br.gain, 0.0);
        assert!(br.degenerate);
    }

    #[test]
    fn maximally_mixed_state_makes_alice_indifferent() {
        let g = standard_game::<f64>();
        let mut rng = task_rng(11, 0);
        let base = random_strategy(&QuantumState::maximally_mixed(), &mut rng);
        let values: Vec<f64> = (0..20)
            .map(|_| {
                let other = random_strategy(&QuantumState::maximally_mixed(), &mut rng);
                let m = base.with_measurements(Player::Alice, other.alice.clone());
                payoff_via_operators(&g, &m, Player::Alice)
            })
            .collect();
        let spread = values.iter().cloned().fold(f64::MIN, f64::max) - values.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-9);
    }

    #[test]
    fn fair_strategy_is_equilibrium() {
        let g = standard_game::<f64>();
        let rep = verify_quantum_equilibrium(&g, &fair_strategy(), 1e-8);
        assert!(rep.is_equilibrium, "gain {}", rep.max_gain);
        assert!(rep.alice.gain.abs() < 1e-8 && rep.bob.gain.abs() < 1e-8);
    }

    #[test]
    fn alice_recovers_from_bad_start() {
        let g = standard_game::<f64>();
        let m = fair_strategy::<f64>();
        let bad = m.with_measurements(
            Player::Alice,
            [
                QubitMeasurement::from_angle(FRAC_PI_2),
                QubitMeasurement::from_angle(FRAC_PI_2),
            ],
        );
        let br = best_response(&g, &bad, Player::Alice);
        assert!(br.gain > 0.0);
        let fixed = bad.with_measurements(Player::Alice, br.measurements.clone());
        let f = expected_payoffs(&g, &behavior_of_quantum(&fixed).unwrap());
        assert!((f.alice - tsirelson_payoff()).abs() < 1e-8);
        assert!((br.optimal - f.alice).abs() < 1e-12);
    }

    #[test]
    fn perturbed_strategy_is_not_equilibrium() {
        let g = standard_game::<f64>();
        let m = fair_strategy::<f64>();
        let mut alice = m.alice.clone();
        alice[1] = QubitMeasurement::from_angle(std::f64::consts::FRAC_PI_4 + 0.3);
        let rep = verify_quantum_equilibrium(&g, &m.with_measurements(Player::Alice, alice), 1e-8);
        assert!(!rep.is_equilibrium);
        assert!(rep.max_gain > 1e-3);
    }

    #[test]
    fn bell_states_are_equilibria() {
        let g = standard_game::<f64>();
        for k in 0..4 {
            let rep = verify_quantum_equilibrium(&g, &bell_strategy(k).unwrap(), 1e-8);
            assert!(rep.is_equilibrium, "Bell state {k}: gain {}", rep.max_gain);
        }
    }

    #[test]
    fn seesaw_zero_weights() {
        let g = standard_game::<f64>();
        let t = seesaw(&g, 0.0, 0.0, &fair_strategy(), &SeesawOptions::default());
        assert_eq!(t.final_objective(), 0.0);
        assert!(t.converged);
        assert_eq!(t.objective.len(), 2);
    }

    #[test]
    fn seesaw_alice_only_reaches_classical_max() {
        let g = standard_game::<f64>();
        let best = best_seesaw(
            &g,
            1.0,
            0.0,
            &QuantumState::phi_plus(),
            20,
            3,
            &SeesawOptions::default(),
        );
        assert!(best.final_objective() >= 0.75 - 1e-9, "{}", best.final_objective());
    }

    #[test]
    fn optimal_state_step_is_monotone() {
        let g = standard_game::<f64>();
        let mut rng = task_rng(5, 0);
        let init = random_strategy(&QuantumState::werner(0.5).unwrap(), &mut rng);
        let opts = SeesawOptions {
            optimize_state: true,
            ..SeesawOptions::default()
        };
        let t = seesaw(&g, 1.0, 1.0, &init, &opts);
        assert!(t.is_monotone(1e-12));
        assert!(t.final_objective() > 1.125);
    }

    #[test]
    fn grid_shape() {
        let grid = weight_grid::<f64>(33);
        assert_eq!(grid.len(), 33);
        assert_eq!(grid[0], (1.0, 0.0));
        assert_eq!(grid[16], (1.0, 1.0));
        assert!((grid[32].0).abs() < 1e-15 && grid[32].1 == 1.0);
        assert_eq!(weight_grid::<f64>(1), vec![(1.0, 1.0)]);
    }
}
