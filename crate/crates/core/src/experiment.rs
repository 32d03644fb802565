//! Monte Carlo model of the photonic run of the game: a noisy entangled
//! source, uniformly drawn settings, coincidence tallies with optional
//! accidental counts, and payoff estimates with normal-approximation
//! confidence intervals. Double precision only.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::equilibrium_opt::task_rng;
use crate::error::{Error, Result};
use crate::game::{cells, expected_payoffs, symmetrize, table_from_fn, Behavior, GameSpec, PayoffPoint, Table};
use crate::quantum::{
    behavior_of_quantum, chsh_value, chsh_win_probability, fair_angles, fidelity, QuantumState, QuantumStrategy,
};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Settings with fewer recorded events are flagged by [`estimate_behavior`].
pub const LOW_COUNT: f64 = 100.0;

const BLOCK: u64 = 1 << 16;

/// What the ideal |φ⁺⟩ is mixed with.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    /// Maximally mixed state I/4.
    Werner,
    /// Dephased (|00⟩⟨00| + |11⟩⟨11|)/2.
    Colored,
    /// An arbitrary density operator.
    Custom(QuantumState<f64>),
}

impl NoiseModel {
    pub fn noise_state(&self) -> QuantumState<f64> {
        match self {
            NoiseModel::Werner => QuantumState::maximally_mixed(),
            NoiseModel::Colored => QuantumState::colored_noise(0.0).expect("v=0 is valid"),
            NoiseModel::Custom(rho) => rho.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            NoiseModel::Werner => "werner",
            NoiseModel::Colored => "colored",
            NoiseModel::Custom(_) => "custom",
        }
    }

    /// ⟨φ⁺|ρ_noise|φ⁺⟩.
    fn floor_fidelity(&self) -> f64 {
        fidelity(&self.noise_state(), &QuantumState::phi_plus()).expect("φ⁺ is pure")
    }
}

/// Noise kind without data, for argument parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Werner,
    Colored,
    Custom,
}

impl FromStr for NoiseKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "werner" => Ok(NoiseKind::Werner),
            "colored" | "coloured" => Ok(NoiseKind::Colored),
            "custom" => Ok(NoiseKind::Custom),
            _ => Err(format!("unknown noise model `{s}` (werner, colored, custom)")),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::Werner => "werner",
            NoiseKind::Colored => "colored",
            NoiseKind::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub noise: NoiseModel,
    /// Weight of |φ⁺⟩ in the emitted state.
    pub visibility: f64,
    /// Probability that a recorded event is a uniformly random accidental.
    pub accidental_rate: f64,
    pub alice_angles: [f64; 2],
    pub bob_angles: [f64; 2],
}

impl SourceModel {
    /// Source measured with the fair-equilibrium bases.
    pub fn new(noise: NoiseModel, visibility: f64, accidental_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::OutOfRange {
                name: "visibility",
                value: visibility,
                range: "[0, 1]",
            });
        }
        if !(0.0..1.0).contains(&accidental_rate) {
            return Err(Error::OutOfRange {
                name: "accidental rate",
                value: accidental_rate,
                range: "[0, 1)",
            });
        }
        let (alice_angles, bob_angles) = fair_angles::<f64>();
        Ok(SourceModel {
            noise,
            visibility,
            accidental_rate,
            alice_angles,
            bob_angles,
        })
    }

    pub fn werner(visibility: f64) -> Result<Self> {
        Self::new(NoiseModel::Werner, visibility, 0.0)
    }

    pub fn with_angles(mut self, alice: [f64; 2], bob: [f64; 2]) -> Self {
        self.alice_angles = alice;
        self.bob_angles = bob;
        self
    }

    pub fn with_accidentals(mut self, rate: f64) -> Result<Self> {
        Self::new(self.noise.clone(), self.visibility, rate).map(|m| {
            self.accidental_rate = m.accidental_rate;
            self
        })
    }

    pub fn state(&self) -> QuantumState<f64> {
        QuantumState::phi_plus().mix(&self.noise.noise_state(), self.visibility)
    }

    pub fn strategy(&self) -> QuantumStrategy<f64> {
        QuantumStrategy::from_angles(self.state(), self.alice_angles, self.bob_angles)
    }

    /// Born-rule behavior of the source before accidentals.
    pub fn behavior(&self) -> Result<Behavior<f64>> {
        behavior_of_quantum(&self.strategy())
    }

    /// Behavior of recorded events, accidentals included.
    pub fn recorded_behavior(&self) -> Result<Behavior<f64>> {
        let b = self.behavior()?;
        b.mix(&Behavior::uniform(), 1.0 - self.accidental_rate)
    }

    pub fn fidelity(&self) -> f64 {
        fidelity(&self.state(), &QuantumState::phi_plus()).expect("φ⁺ is pure")
    }
}

/// Inverts F = v + (1−v)·F₀, where F₀ is the fidelity of the noise alone.
/// Werner gives v = (4F−1)/3, colored v = 2F−1.
pub fn visibility_from_fidelity(f: f64, noise: &NoiseModel) -> Result<f64> {
    let floor = noise.floor_fidelity();
    if !(f.is_finite() && f >= floor - 1e-12 && f <= 1.0 + 1e-12) || (1.0 - floor).abs() < 1e-12 {
        return Err(Error::OutOfRange {
            name: "fidelity",
            value: f,
            range: "[noise fidelity, 1]",
        });
    }
    Ok(((f - floor) / (1.0 - floor)).clamp(0.0, 1.0))
}

/// Visibility at which the model's CHSH value equals `s` (S is affine in v).
pub fn visibility_for_chsh(s: f64, template: &SourceModel) -> Result<f64> {
    let at = |v: f64| -> Result<f64> {
        let mut m = template.clone();
        m.visibility = v;
        Ok(chsh_value(&m.behavior()?))
    };
    let (s0, s1) = (at(0.0)?, at(1.0)?);
    let v = (s - s0) / (s1 - s0);
    if !(v.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&v)) {
        return Err(Error::OutOfRange {
            name: "CHSH value",
            value: s,
            range: "reachable by the model",
        });
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Closed-form payoff of each player for the Werner source with the
/// fair-equilibrium bases: (3/4)(v·cos²(π/8) + (1−v)/2).
pub fn werner_payoff(v: f64) -> f64 {
    0.75 * (v * std::f64::consts::FRAC_PI_8.cos().powi(2) + (1.0 - v) / 2.0)
}

/// Coincidence counts N(y|x), indexed `[x_a][x_b][y_a][y_b]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyTable {
    pub counts: Table<u64>,
    pub seed: u64,
    pub n_runs: u64,
}

impl TallyTable {
    pub fn empty(seed: u64) -> Self {
        TallyTable {
            counts: [[[[0; 2]; 2]; 2]; 2],
            seed,
            n_runs: 0,
        }
    }

    pub fn total(&self, xa: usize, xb: usize) -> u64 {
        self.counts[xa][xb].iter().flatten().sum()
    }

    pub fn totals(&self) -> [[u64; 2]; 2] {
        [
            [self.total(0, 0), self.total(0, 1)],
            [self.total(1, 0), self.total(1, 1)],
        ]
    }

    fn merge(mut self, other: &TallyTable) -> Self {
        for (xa, xb, ya, yb) in cells() {
            self.counts[xa][xb][ya][yb] += other.counts[xa][xb][ya][yb];
        }
        self.n_runs += other.n_runs;
        self
    }

    pub fn as_real(&self) -> CorrectedTally {
        CorrectedTally {
            counts: table_from_fn(|xa, xb, ya, yb| self.counts[xa][xb][ya][yb] as f64),
            raw_totals: self.totals().map(|r| r.map(|t| t as f64)),
            rate: 0.0,
        }
    }
}

/// Real-valued counts after accidental subtraction.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedTally {
    pub counts: Table<f64>,
    /// Per-setting totals of the raw tally.
    pub raw_totals: [[f64; 2]; 2],
    pub rate: f64,
}

/// Simulates `n` runs. Runs are split into fixed blocks with their own RNG
/// stream, so the tally depends only on (model, n, seed).
pub fn simulate_runs(model: &SourceModel, n: u64, seed: u64) -> Result<TallyTable> {
    let b = model.behavior()?;
    let cdf: [[[f64; 4]; 2]; 2] = std::array::from_fn(|xa| {
        std::array::from_fn(|xb| {
            let mut acc = 0.0;
            std::array::from_fn(|k| {
                acc += b.get(xa, xb, k >> 1, k & 1);
                acc
            })
        })
    });
    let rate = model.accidental_rate;
    let blocks = n.div_ceil(BLOCK);
    let tally = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = task_rng(seed, blk);
            let mut t = TallyTable::empty(seed);
            let runs = BLOCK.min(n - blk * BLOCK);
            for _ in 0..runs {
                let x = rng.gen_range(0..4usize);
                let (xa, xb) = (x >> 1, x & 1);
                let u: f64 = rng.gen();
                let mut y = cdf[xa][xb].iter().position(|&c| u < c).unwrap_or(3);
                if rate > 0.0 && rng.gen::<f64>() < rate {
                    y = rng.gen_range(0..4usize);
                }
                t.counts[xa][xb][y >> 1][y & 1] += 1;
            }
            t.n_runs = runs;
            t
        })
        .reduce(|| TallyTable::empty(seed), |a, b| a.merge(&b));
    Ok(tally)
}

/// N'(y|x) = (N(y|x) − rate·total(x)/4)/(1−rate), clamped at zero.
pub fn accidental_correction(t: &TallyTable, rate: f64) -> Result<CorrectedTally> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::OutOfRange {
            name: "accidental rate",
            value: rate,
            range: "[0, 1)",
        });
    }
    let totals = t.totals();
    Ok(CorrectedTally {
        counts: table_from_fn(|xa, xb, ya, yb| {
            let n = t.counts[xa][xb][ya][yb] as f64;
            ((n - rate * totals[xa][xb] as f64 / 4.0) / (1.0 - rate)).max(0.0)
        }),
        raw_totals: totals.map(|r| r.map(|v| v as f64)),
        rate,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorEstimate {
    pub behavior: Behavior<f64>,
    /// Standard error of each entry.
    pub std_errors: Table<f64>,
    /// 95% half-width of each entry.
    pub half_widths: Table<f64>,
    pub totals: [[f64; 2]; 2],
    pub raw_totals: [[f64; 2]; 2],
    /// Accidental rate removed before estimation.
    pub rate: f64,
    /// Settings with fewer than [`LOW_COUNT`] events.
    pub low_count: Vec<(usize, usize)>,
}

/// p̂(y|x) = N(y|x)/total(x) with normal-approximation intervals.
pub fn estimate_behavior(t: &TallyTable) -> Result<BehaviorEstimate> {
    estimate_corrected(&t.as_real())
}

/// As [`estimate_behavior`] for corrected counts; the binomial error of the
/// raw fraction is inflated by 1/(1−rate).
pub fn estimate_corrected(t: &CorrectedTally) -> Result<BehaviorEstimate> {
    let mut totals = [[0.0; 2]; 2];
    let mut low_count = Vec::new();
    for xa in 0..2 {
        for xb in 0..2 {
            let s: f64 = t.counts[xa][xb].iter().flatten().sum();
            if !(s > 0.0) || t.raw_totals[xa][xb] <= 0.0 {
                return Err(Error::UnobservedSetting(xa, xb));
            }
            if t.raw_totals[xa][xb] < LOW_COUNT {
                low_count.push((xa, xb));
            }
            totals[xa][xb] = s;
        }
    }
    let behavior = Behavior::from_fn(|xa, xb, ya, yb| t.counts[xa][xb][ya][yb] / totals[xa][xb])?;
    let inflate = 1.0 / (1.0 - t.rate);
    let std_errors = table_from_fn(|xa, xb, ya, yb| {
        let n = t.raw_totals[xa][xb];
        let q = raw_fraction(t, xa, xb, ya, yb);
        inflate * (q * (1.0 - q) / n).sqrt()
    });
    Ok(BehaviorEstimate {
        behavior,
        half_widths: table_from_fn(|xa, xb, ya, yb| Z95 * std_errors[xa][xb][ya][yb]),
        std_errors,
        totals,
        raw_totals: t.raw_totals,
        rate: t.rate,
        low_count,
    })
}

fn raw_fraction(t: &CorrectedTally, xa: usize, xb: usize, ya: usize, yb: usize) -> f64 {
    // undo the correction to recover N/total
    let p = t.counts[xa][xb][ya][yb] / t.raw_totals[xa][xb];
    (p * (1.0 - t.rate) + t.rate / 4.0).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffEstimate {
    pub payoffs: PayoffPoint<f64>,
    /// 95% half-widths, linear in the entry half-widths.
    pub half_widths: PayoffPoint<f64>,
    /// Multinomial standard errors.
    pub std_errors: PayoffPoint<f64>,
    pub joint: f64,
    pub joint_std_error: f64,
    pub chsh: f64,
    pub win_probability: f64,
}

impl PayoffEstimate {
    /// Distance of the joint payoff above `level`, in standard errors.
    pub fn sigmas_above(&self, level: f64) -> f64 {
        (self.joint - level) / self.joint_std_error
    }
}

pub fn estimated_payoffs(est: &BehaviorEstimate, game: &GameSpec<f64>) -> PayoffEstimate {
    let payoffs = expected_payoffs(game, &est.behavior);
    let linear = |u: &Table<f64>| {
        cells().fold(0.0, |acc, (xa, xb, ya, yb)| {
            acc + (game.prior(xa, xb) * u[xa][xb][ya][yb]).abs() * est.half_widths[xa][xb][ya][yb]
        })
    };
    // Var Σ_y c_y p̂_y = (Σ c_y² q_y − (Σ c_y q_y)²)/(n(1−r)²) per setting, where q
    // is the raw recorded fraction; settings are independent.
    let inflate = 1.0 / (1.0 - est.rate).powi(2);
    let std_error = |c: &dyn Fn(usize, usize, usize, usize) -> f64| {
        let mut var = 0.0;
        for (xa, xb) in crate::game::type_pairs() {
            let (mut m1, mut m2) = (0.0, 0.0);
            for ya in 0..2 {
                for yb in 0..2 {
                    let q = est.behavior.get(xa, xb, ya, yb) * (1.0 - est.rate) + est.rate / 4.0;
                    let v = game.prior(xa, xb) * c(xa, xb, ya, yb);
                    m1 += v * q;
                    m2 += v * v * q;
                }
            }
            var += (m2 - m1 * m1).max(0.0) / est.raw_totals[xa][xb] * inflate;
        }
        var.sqrt()
    };
    let ua = game.utility_table(crate::game::Player::Alice);
    let ub = game.utility_table(crate::game::Player::Bob);
    let sa = std_error(&|xa, xb, ya, yb| ua[xa][xb][ya][yb]);
    let sb = std_error(&|xa, xb, ya, yb| ub[xa][xb][ya][yb]);
    let sj = std_error(&|xa, xb, ya, yb| ua[xa][xb][ya][yb] + ub[xa][xb][ya][yb]);
    PayoffEstimate {
        payoffs,
        half_widths: PayoffPoint::new(linear(ua), linear(ub)),
        std_errors: PayoffPoint::new(sa, sb),
        joint: payoffs.joint(),
        joint_std_error: sj,
        chsh: chsh_value(&est.behavior),
        win_probability: chsh_win_probability(&est.behavior),
    }
}

/// Payoffs after the shared-random-bit debias, with the same error bars.
pub fn debiased_payoffs(est: &BehaviorEstimate, game: &GameSpec<f64>) -> PayoffEstimate {
    let mut sym = est.clone();
    sym.behavior = symmetrize(&est.behavior);
    sym.std_errors =
        table_from_fn(|xa, xb, ya, yb| 0.5 * (est.std_errors[xa][xb][ya][yb] + est.std_errors[xa][xb][1 - ya][1 - yb]));
    sym.half_widths = table_from_fn(|xa, xb, ya, yb| Z95 * sym.std_errors[xa][xb][ya][yb]);
    estimated_payoffs(&sym, game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::standard_game;
    use std::f64::consts::FRAC_PI_8;

    #[test]
    fn fidelity_conversions() {
        assert!((visibility_from_fidelity(0.925, &NoiseModel::Werner).unwrap() - 0.9).abs() < 1e-12);
        assert!((visibility_from_fidelity(1.0, &NoiseModel::Werner).unwrap() - 1.0).abs() < 1e-12);
        assert!((visibility_from_fidelity(0.925, &NoiseModel::Colored).unwrap() - 0.85).abs() < 1e-12);
        assert!(visibility_from_fidelity(0.1, &NoiseModel::Werner).is_err());
        assert!(visibility_from_fidelity(1.2, &NoiseModel::Colored).is_err());
        let m = SourceModel::new(NoiseModel::Colored, 0.85, 0.0).unwrap();
        assert!((m.fidelity() - 0.925).abs() < 1e-12);
    }

    #[test]
    fn chsh_is_affine_in_visibility() {
        let m = SourceModel::werner(1.0).unwrap();
        let v = visibility_for_chsh(2.645, &m).unwrap();
        assert!((v - 2.645 / 8f64.sqrt()).abs() < 1e-12);
        let mut m2 = m.clone();
        m2.visibility = v;
        assert!((chsh_value(&m2.behavior().unwrap()) - 2.645).abs() < 1e-12);
        assert!(visibility_for_chsh(3.0, &m).is_err());
    }

    #[test]
    fn closed_form_matches_born_rule() {
        let g = standard_game::<f64>();
        for v in [0.0, 0.3, 0.9, 1.0] {
            let p = expected_payoffs(&g, &SourceModel::werner(v).unwrap().behavior().unwrap());
            assert!((p.alice - werner_payoff(v)).abs() < 1e-12);
            assert!((p.bob - werner_payoff(v)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let m = SourceModel::werner(0.9).unwrap().with_accidentals(0.1).unwrap();
        let a = simulate_runs(&m, 200_000, 42).unwrap();
        let b = simulate_runs(&m, 200_000, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, simulate_runs(&m, 200_000, 43).unwrap());
        assert_eq!(a.n_runs, 200_000);
        assert_eq!(a.totals().iter().flatten().sum::<u64>(), 200_000);
    }

    #[test]
    fn noiseless_win_probability() {
        let t = simulate_runs(&SourceModel::werner(1.0).unwrap(), 1_000_000, 1).unwrap();
        let est = estimated_payoffs(&estimate_behavior(&t).unwrap(), &standard_game());
        let want = FRAC_PI_8.cos().powi(2);
        let se = (want * (1.0 - want) / 1e6).sqrt();
        assert!((est.win_probability - want).abs() < 3.0 * se);
        assert!((est.chsh - (8.0 * est.win_probability - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let t = simulate_runs(&SourceModel::werner(0.0).unwrap(), 1_000_000, 3).unwrap();
        let est = estimate_behavior(&t).unwrap();
        for (xa, xb, ya, yb) in cells() {
            let p = est.behavior.get(xa, xb, ya, yb);
            assert!((p - 0.25).abs() < 3.0 * est.std_errors[xa][xb][ya][yb] + 1e-12);
        }
    }

    #[test]
    fn estimate_divides_counts() {
        let mut t = TallyTable::empty(0);
        for xa in 0..2 {
            for xb in 0..2 {
                t.counts[xa][xb] = [[850, 50], [50, 50]];
            }
        }
        t.n_runs = 4000;
        let est = estimate_behavior(&t).unwrap();
        assert!((est.behavior.get(1, 0, 0, 0) - 0.85).abs() < 1e-15);
        assert!((est.behavior.get(1, 0, 1, 1) - 0.05).abs() < 1e-15);
        assert!(est.low_count.is_empty());
        t.counts[1][1] = [[0, 0], [0, 0]];
        assert!(matches!(estimate_behavior(&t), Err(Error::UnobservedSetting(1, 1))));
        t.counts[1][1] = [[10, 0], [0, 0]];
        assert_eq!(estimate_behavior(&t).unwrap().low_count, vec![(1, 1)]);
    }

    #[test]
    fn correction_identity_and_uniform() {
        let t = simulate_runs(&SourceModel::werner(0.7).unwrap(), 10_000, 2).unwrap();
        assert_eq!(accidental_correction(&t, 0.0).unwrap(), t.as_real());
        let mut u = TallyTable::empty(0);
        u.counts = [[[[250; 2]; 2]; 2]; 2];
        let c = accidental_correction(&u, 0.3).unwrap();
        assert!(c
            .counts
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .all(|&n| (n - 250.0).abs() < 1e-9));
        assert!(accidental_correction(&u, 1.0).is_err());
    }

    #[test]
    fn correction_removes_accidentals() {
        let g = standard_game::<f64>();
        let m = SourceModel::werner(0.9).unwrap().with_accidentals(0.05).unwrap();
        let t = simulate_runs(&m, 1_000_000, 9).unwrap();
        let est = estimate_corrected(&accidental_correction(&t, 0.05).unwrap()).unwrap();
        let p = estimated_payoffs(&est, &g);
        assert!((p.payoffs.alice - werner_payoff(0.9)).abs() < 3.0 * p.std_errors.alice);
        assert!((p.payoffs.bob - werner_payoff(0.9)).abs() < 3.0 * p.std_errors.bob);
        // without correction the payoffs are biased toward 3/8
        let raw = estimated_payoffs(&estimate_behavior(&t).unwrap(), &g);
        assert!(raw.joint < p.joint);
    }

    #[test]
    fn zero_game_gives_zero() {
        let t = simulate_runs(&SourceModel::werner(0.5).unwrap(), 1000, 0).unwrap();
        let p = estimated_payoffs(&estimate_behavior(&t).unwrap(), &GameSpec::zero());
        assert_eq!(p.payoffs, PayoffPoint::new(0.0, 0.0));
    }

    #[test]
    fn debias_equalizes() {
        let g = standard_game::<f64>();
        let t = simulate_runs(&SourceModel::werner(0.9).unwrap(), 100_000, 4).unwrap();
        let d = debiased_payoffs(&estimate_behavior(&t).unwrap(), &g);
        assert!((d.payoffs.alice - d.payoffs.bob).abs() <= 2.0 * d.half_widths.alice.min(d.half_widths.bob));
    }
}
