#![allow(dead_code)]

use bayesgame::equilibrium_opt::random_strategy;
use bayesgame::{QuantumState, QuantumStrategy, QubitMeasurement};
use num_complex::Complex;
use rand::Rng;

/// Random two-qubit state: a random mixture of two random pure states.
pub fn random_state<R: Rng>(rng: &mut R) -> QuantumState<f64> {
    let mut pure = || {
        let amps: [Complex<f64>; 4] =
            std::array::from_fn(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        QuantumState::pure(amps.map(|a| a / n)).unwrap()
    };
    let (a, b) = (pure(), pure());
    a.mix(&b, rng.gen_range(0.0..1.0))
}

pub fn random_instance<R: Rng>(rng: &mut R) -> QuantumStrategy<f64> {
    let state = random_state(rng);
    random_strategy(&state, rng)
}

/// `n` rank-1 measurements with Bloch vectors spread over the sphere
/// (Fibonacci lattice).
pub fn measurement_grid(n: usize) -> Vec<QubitMeasurement<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            QubitMeasurement::from_bloch([r * phi.cos(), r * phi.sin(), z]).unwrap()
        })
        .collect()
}
