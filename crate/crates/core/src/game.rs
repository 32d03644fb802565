//! Two-player Bayesian game with binary types and actions, and the
//! conditional distributions ("behaviors") that every kind of strategy
//! reduces to.
//!
//! All tables are indexed `[x_a][x_b][y_a][y_b]`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Table over (x_A, x_B, y_A, y_B) ∈ {0,1}⁴.
pub type Table<T> = [[[[T; 2]; 2]; 2]; 2];

/// All 16 (x_a, x_b, y_a, y_b) index tuples in lexicographic order.
pub fn cells() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|k| ((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1))
}

/// All four type pairs (x_a, x_b).
pub fn type_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..4).map(|k| ((k >> 1) & 1, k & 1))
}

pub fn table_from_fn<T: Copy>(mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Table<T> {
    let z = f(0, 0, 0, 0);
    let mut t = [[[[z; 2]; 2]; 2]; 2];
    for (xa, xb, ya, yb) in cells() {
        t[xa][xb][ya][yb] = f(xa, xb, ya, yb);
    }
    t
}

pub fn map_table<T: Copy, U: Copy>(t: &Table<T>, mut f: impl FnMut(T) -> U) -> Table<U> {
    table_from_fn(|xa, xb, ya, yb| f(t[xa][xb][ya][yb]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Player {
    Alice,
    Bob,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::Alice => Player::Bob,
            Player::Bob => Player::Alice,
        }
    }
}

impl std::fmt::Display for Player {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Player::Alice => write!(f, "Alice"),
            Player::Bob => write!(f, "Bob"),
        }
    }
}

/// Pair of average payoffs (F_A, F_B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffPoint<T> {
    pub alice: T,
    pub bob: T,
}

impl<T: Scalar> PayoffPoint<T> {
    pub fn new(alice: T, bob: T) -> Self {
        PayoffPoint { alice, bob }
    }

    pub fn joint(&self) -> T {
        self.alice + self.bob
    }

    pub fn weighted(&self, w_a: T, w_b: T) -> T {
        w_a * self.alice + w_b * self.bob
    }

    pub fn get(&self, player: Player) -> T {
        match player {
            Player::Alice => self.alice,
            Player::Bob => self.bob,
        }
    }

    pub fn to_f64(&self) -> PayoffPoint<f64> {
        PayoffPoint::new(self.alice.as_f64(), self.bob.as_f64())
    }

    /// Max-norm distance to another point.
    pub fn distance(&self, other: &Self) -> T {
        (self.alice - other.alice)
            .abs_val()
            .max_val((self.bob - other.bob).abs_val())
    }
}

/// Prior over type pairs plus one utility table per player.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec<T> {
    prior: [[T; 2]; 2],
    utility_a: Table<T>,
    utility_b: Table<T>,
}

impl<T: Scalar> GameSpec<T> {
    /// Validates that the prior is a probability distribution (1e-12).
    pub fn new(prior: [[T; 2]; 2], utility_a: Table<T>, utility_b: Table<T>) -> Result<Self> {
        let mut sum = T::zero();
        for (xa, xb) in type_pairs() {
            let p = prior[xa][xb];
            if p.as_f64().is_nan() {
                return Err(Error::NonFinite("prior"));
            }
            if p < T::zero() {
                return Err(Error::NegativePrior { value: p.as_f64() });
            }
            sum = sum + p;
        }
        if (sum - T::one()).abs_val() > T::tolerance(1e-12) {
            return Err(Error::PriorNotNormalized { sum: sum.as_f64() });
        }
        for (xa, xb, ya, yb) in cells() {
            if !utility_a[xa][xb][ya][yb].as_f64().is_finite() || !utility_b[xa][xb][ya][yb].as_f64().is_finite() {
                return Err(Error::NonFinite("utility"));
            }
        }
        Ok(GameSpec {
            prior,
            utility_a,
            utility_b,
        })
    }

    pub fn uniform_prior() -> [[T; 2]; 2] {
        let q = T::ratio(1, 4);
        [[q, q], [q, q]]
    }

    /// Game with uniform prior and both utilities identically zero.
    pub fn zero() -> Self {
        let z = [[[[T::zero(); 2]; 2]; 2]; 2];
        GameSpec::new(Self::uniform_prior(), z, z).expect("uniform prior is normalized")
    }

    /// Game with uniform prior and constant utilities.
    pub fn constant(u_a: T, u_b: T) -> Self {
        GameSpec::new(Self::uniform_prior(), [[[[u_a; 2]; 2]; 2]; 2], [[[[u_b; 2]; 2]; 2]; 2])
            .expect("uniform prior is normalized")
    }

    pub fn prior(&self, xa: usize, xb: usize) -> T {
        self.prior[xa][xb]
    }

    pub fn prior_table(&self) -> &[[T; 2]; 2] {
        &self.prior
    }

    pub fn utility(&self, player: Player, xa: usize, xb: usize, ya: usize, yb: usize) -> T {
        match player {
            Player::Alice => self.utility_a[xa][xb][ya][yb],
            Player::Bob => self.utility_b[xa][xb][ya][yb],
        }
    }

    pub fn utility_table(&self, player: Player) -> &Table<T> {
        match player {
            Player::Alice => &self.utility_a,
            Player::Bob => &self.utility_b,
        }
    }

    /// Common-interest game whose utility (for both players) is
    /// `w_a·u_A + w_b·u_B`. Used for weighted-objective optimization.
    pub fn weighted(&self, w_a: T, w_b: T) -> Self {
        let u =
            table_from_fn(|xa, xb, ya, yb| w_a * self.utility_a[xa][xb][ya][yb] + w_b * self.utility_b[xa][xb][ya][yb]);
        GameSpec {
            prior: self.prior,
            utility_a: u,
            utility_b: u,
        }
    }

    /// Converts to another scalar type through `f64`.
    pub fn cast<U: Scalar>(&self) -> Result<GameSpec<U>> {
        let conv = |v: T| U::from_f64(v.as_f64()).ok_or(Error::NonFinite("game value"));
        let mut prior = [[U::zero(); 2]; 2];
        for (xa, xb) in type_pairs() {
            prior[xa][xb] = conv(self.prior[xa][xb])?;
        }
        let mut ua = [[[[U::zero(); 2]; 2]; 2]; 2];
        let mut ub = ua;
        for (xa, xb, ya, yb) in cells() {
            ua[xa][xb][ya][yb] = conv(self.utility_a[xa][xb][ya][yb])?;
            ub[xa][xb][ya][yb] = conv(self.utility_b[xa][xb][ya][yb])?;
        }
        GameSpec::new(prior, ua, ub)
    }
}

/// The conflicting-interest game: Battle-of-the-Sexes payoffs when
/// `x_a ∧ x_b = 0`, anti-coordination worth 3/4 to both when `x_a ∧ x_b = 1`,
/// uniform prior.
pub fn standard_game<T: Scalar>() -> GameSpec<T> {
    let one = T::one();
    let half = T::ratio(1, 2);
    let three_q = T::ratio(3, 4);
    let zero = T::zero();
    let entry = |xa: usize, xb: usize, ya: usize, yb: usize| -> (T, T) {
        if xa & xb == 0 {
            match (ya, yb) {
                (0, 0) => (one, half),
                (1, 1) => (half, one),
                _ => (zero, zero),
            }
        } else if ya != yb {
            (three_q, three_q)
        } else {
            (zero, zero)
        }
    };
    let ua = table_from_fn(|xa, xb, ya, yb| entry(xa, xb, ya, yb).0);
    let ub = table_from_fn(|xa, xb, ya, yb| entry(xa, xb, ya, yb).1);
    GameSpec::new(GameSpec::uniform_prior(), ua, ub).expect("uniform prior is normalized")
}

/// Conditional distribution p(y_a, y_b | x_a, x_b).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Behavior<T> {
    p: Table<T>,
}

impl<T: Scalar> Behavior<T> {
    /// Rejects tables with entries outside [0,1] or rows not summing to one
    /// (tolerance 1e-10). Nothing is renormalized.
    pub fn new(p: Table<T>) -> Result<Self> {
        let tol = T::tolerance(1e-10);
        for (xa, xb) in type_pairs() {
            let mut sum = T::zero();
            for ya in 0..2 {
                for yb in 0..2 {
                    let v = p[xa][xb][ya][yb];
                    if !v.as_f64().is_finite() {
                        return Err(Error::NonFinite("behavior"));
                    }
                    if v < T::zero() - tol || v > T::one() + tol {
                        return Err(Error::InvalidBehavior(format!(
                            "p({ya},{yb}|{xa},{xb}) = {v} outside [0,1]"
                        )));
                    }
                    sum = sum + v;
                }
            }
            if (sum - T::one()).abs_val() > tol {
                return Err(Error::InvalidBehavior(format!("p(·|{xa},{xb}) sums to {sum}")));
            }
        }
        Ok(Behavior { p })
    }

    pub fn from_fn(f: impl FnMut(usize, usize, usize, usize) -> T) -> Result<Self> {
        Behavior::new(table_from_fn(f))
    }

    /// p(y|x) = 1/4 everywhere.
    pub fn uniform() -> Self {
        Behavior {
            p: [[[[T::ratio(1, 4); 2]; 2]; 2]; 2],
        }
    }

    /// Local behavior p_A(y_a|x_a)·p_B(y_b|x_b) from the probabilities of
    /// outputting 0 on each type.
    pub fn product(alice_zero: [T; 2], bob_zero: [T; 2]) -> Result<Self> {
        let marg = |p0: T, y: usize| if y == 0 { p0 } else { T::one() - p0 };
        Behavior::from_fn(|xa, xb, ya, yb| marg(alice_zero[xa], ya) * marg(bob_zero[xb], yb))
    }

    pub fn get(&self, xa: usize, xb: usize, ya: usize, yb: usize) -> T {
        self.p[xa][xb][ya][yb]
    }

    pub fn table(&self) -> &Table<T> {
        &self.p
    }

    /// `lambda·self + (1−lambda)·other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Result<Self> {
        Behavior::from_fn(|xa, xb, ya, yb| {
            lambda * self.p[xa][xb][ya][yb] + (T::one() - lambda) * other.p[xa][xb][ya][yb]
        })
    }

    /// Marginal probability that Alice outputs `ya` on the type pair.
    pub fn alice_marginal(&self, xa: usize, xb: usize, ya: usize) -> T {
        self.p[xa][xb][ya][0] + self.p[xa][xb][ya][1]
    }

    pub fn bob_marginal(&self, xa: usize, xb: usize, yb: usize) -> T {
        self.p[xa][xb][0][yb] + self.p[xa][xb][1][yb]
    }

    /// Max-norm distance between two behaviors.
    pub fn distance(&self, other: &Self) -> T {
        cells().fold(T::zero(), |acc, (xa, xb, ya, yb)| {
            acc.max_val((self.p[xa][xb][ya][yb] - other.p[xa][xb][ya][yb]).abs_val())
        })
    }

    pub fn to_f64(&self) -> Behavior<f64> {
        Behavior {
            p: map_table(&self.p, |v| v.as_f64()),
        }
    }
}

/// F_i = Σ_{x,y} P(x)·p(y|x)·u_i(x,y).
pub fn expected_payoffs<T: Scalar>(game: &GameSpec<T>, b: &Behavior<T>) -> PayoffPoint<T> {
    let mut fa = T::zero();
    let mut fb = T::zero();
    for (xa, xb, ya, yb) in cells() {
        let w = game.prior[xa][xb] * b.p[xa][xb][ya][yb];
        fa = fa + w * game.utility_a[xa][xb][ya][yb];
        fb = fb + w * game.utility_b[xa][xb][ya][yb];
    }
    PayoffPoint::new(fa, fb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoSignalingReport<T> {
    pub no_signaling: bool,
    pub max_violation: T,
}

/// Checks that each player's outcome marginal does not depend on the other
/// player's type.
pub fn check_no_signaling<T: Scalar>(b: &Behavior<T>, tol: T) -> NoSignalingReport<T> {
    let mut worst = T::zero();
    for x in 0..2 {
        for y in 0..2 {
            let alice = (b.alice_marginal(x, 0, y) - b.alice_marginal(x, 1, y)).abs_val();
            let bob = (b.bob_marginal(0, x, y) - b.bob_marginal(1, x, y)).abs_val();
            worst = worst.max_val(alice).max_val(bob);
        }
    }
    NoSignalingReport {
        no_signaling: worst <= tol,
        max_violation: worst,
    }
}

/// Popescu–Rohrlich box: y_a ⊕ y_b = x_a ∧ x_b with uniform marginals.
pub fn pr_box_behavior<T: Scalar>() -> Behavior<T> {
    let half = T::ratio(1, 2);
    Behavior {
        p: table_from_fn(|xa, xb, ya, yb| if ya ^ yb == xa & xb { half } else { T::zero() }),
    }
}

/// Mixes the behavior with its joint output flip, as if a shared uniform
/// bit told both players whether to invert their actions.
pub fn symmetrize<T: Scalar>(b: &Behavior<T>) -> Behavior<T> {
    let half = T::ratio(1, 2);
    Behavior {
        p: table_from_fn(|xa, xb, ya, yb| half * (b.p[xa][xb][ya][yb] + b.p[xa][xb][1 - ya][1 - yb])),
    }
}

/// True iff u_A(x, ¬y_a, ¬y_b) = u_B(x, y_a, y_b) for every cell.
pub fn has_swap_symmetry<T: Scalar>(game: &GameSpec<T>) -> bool {
    cells().all(|(xa, xb, ya, yb)| game.utility_a[xa][xb][1 - ya][1 - yb] == game.utility_b[xa][xb][ya][yb])
}
