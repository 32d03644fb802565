//! Analysis of a two-player Bayesian game that pairs a Battle-of-the-Sexes
//! conflict with CHSH-style type correlations: classical strategies and
//! equilibria, quantum strategies and their equilibria, moment-matrix upper
//! bounds, and a Monte Carlo model of a photonic run.
//!
//! Most of the library is generic over [`Scalar`]. Classical computations
//! also work over exact rationals; anything touching operators needs a
//! floating [`Real`] type.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod equilibrium_opt;
pub mod error;
pub mod experiment;
pub mod game;
pub mod io;
pub mod linalg;
pub mod npa;
pub mod quantum;
pub mod scalar;
pub mod sdp;

pub use classical::{
    classical_region, is_correlated_equilibrium, max_weighted_classical, nash_equilibria, CorrelatedStrategy,
    DeterministicStrategy,
};
pub use equilibrium_opt::{best_response, seesaw, verify_quantum_equilibrium, SeesawOptions};
pub use error::{Error, Result};
pub use experiment::{simulate_runs, SourceModel, TallyTable};
pub use game::{expected_payoffs, standard_game, symmetrize, Behavior, GameSpec, PayoffPoint, Player};
pub use npa::{npa_upper_bound, Level};
pub use quantum::{behavior_of_quantum, fair_strategy, QuantumState, QuantumStrategy, QubitMeasurement};
pub use scalar::{Rational, Real, Scalar};

pub type Game = GameSpec<f64>;
pub type ExactGame = GameSpec<Rational>;
pub type Behavior64 = Behavior<f64>;
pub type ExactBehavior = Behavior<Rational>;
pub type Payoffs = PayoffPoint<f64>;
pub type ExactPayoffs = PayoffPoint<Rational>;
pub type State = QuantumState<f64>;
pub type Strategy = QuantumStrategy<f64>;
pub type Measurement = QubitMeasurement<f64>;
