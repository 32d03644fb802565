//! Classical play: deterministic type→action maps, correlated advice,
//! the payoff polytope, Nash equilibria without advice and correlated
//! equilibrium checks.

use std::fmt;

use log::debug;

use crate::error::{Error, Result};
use crate::game::{expected_payoffs, Behavior, GameSpec, PayoffPoint, Player};
use crate::scalar::Scalar;

/// Map from a player's type to an action, encoded as
/// `2·(action on type 0) + (action on type 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeterministicStrategy(u8);

impl DeterministicStrategy {
    pub const ALWAYS_ZERO: Self = DeterministicStrategy(0);
    pub const OUTPUT_TYPE: Self = DeterministicStrategy(1);
    pub const COMPLEMENT: Self = DeterministicStrategy(2);
    pub const ALWAYS_ONE: Self = DeterministicStrategy(3);

    pub fn new(code: u8) -> Result<Self> {
        if code < 4 {
            Ok(DeterministicStrategy(code))
        } else {
            Err(Error::InvalidStrategy(format!(
                "deterministic strategy code {code} not in 0..4"
            )))
        }
    }

    pub fn from_actions(on_type_0: usize, on_type_1: usize) -> Self {
        DeterministicStrategy(((on_type_0 & 1) << 1 | (on_type_1 & 1)) as u8)
    }

    pub fn code(self) -> usize {
        self.0 as usize
    }

    pub fn action(self, ty: usize) -> usize {
        if ty == 0 {
            (self.0 as usize >> 1) & 1
        } else {
            self.0 as usize & 1
        }
    }

    pub fn all() -> [Self; 4] {
        [Self::ALWAYS_ZERO, Self::OUTPUT_TYPE, Self::COMPLEMENT, Self::ALWAYS_ONE]
    }
}

impl fmt::Display for DeterministicStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.0 {
            0 => "always0",
            1 => "type",
            2 => "complement",
            _ => "always1",
        };
        f.pad(name)
    }
}

/// Distribution over the 16 pairs of deterministic strategies; the advice
/// handed to each player is its recommended strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedStrategy<T> {
    weights: [[T; 4]; 4],
}

impl<T: Scalar> CorrelatedStrategy<T> {
    pub fn new(weights: [[T; 4]; 4]) -> Result<Self> {
        let mut sum = T::zero();
        for row in &weights {
            for &w in row {
                if !w.as_f64().is_finite() {
                    return Err(Error::NonFinite("correlated weights"));
                }
                if w < T::zero() {
                    return Err(Error::InvalidStrategy(format!("negative weight {w}")));
                }
                sum = sum + w;
            }
        }
        if (sum - T::one()).abs_val() > T::tolerance(1e-12) {
            return Err(Error::InvalidStrategy(format!("weights sum to {sum}")));
        }
        Ok(CorrelatedStrategy { weights })
    }

    pub fn point_mass(a: DeterministicStrategy, b: DeterministicStrategy) -> Self {
        let mut weights = [[T::zero(); 4]; 4];
        weights[a.code()][b.code()] = T::one();
        CorrelatedStrategy { weights }
    }

    /// Uniform mixture over the listed pairs (duplicates add weight).
    pub fn uniform_over(pairs: &[(DeterministicStrategy, DeterministicStrategy)]) -> Result<Self> {
        let mut weights = [[T::zero(); 4]; 4];
        let n = i64::try_from(pairs.len()).unwrap_or(i64::MAX);
        for &(a, b) in pairs {
            weights[a.code()][b.code()] = weights[a.code()][b.code()] + T::ratio(1, n.max(1));
        }
        CorrelatedStrategy::new(weights)
    }

    pub fn weight(&self, a: DeterministicStrategy, b: DeterministicStrategy) -> T {
        self.weights[a.code()][b.code()]
    }

    pub fn weights(&self) -> &[[T; 4]; 4] {
        &self.weights
    }
}

/// Point-mass behavior of a pair of deterministic strategies.
pub fn behavior_of_deterministic<T: Scalar>(a: DeterministicStrategy, b: DeterministicStrategy) -> Behavior<T> {
    Behavior::from_fn(|xa, xb, ya, yb| {
        if ya == a.action(xa) && yb == b.action(xb) {
            T::one()
        } else {
            T::zero()
        }
    })
    .expect("point masses are normalized")
}

pub fn behavior_of_correlated<T: Scalar>(cs: &CorrelatedStrategy<T>) -> Behavior<T> {
    let mut p = [[[[T::zero(); 2]; 2]; 2]; 2];
    for a in DeterministicStrategy::all() {
        for b in DeterministicStrategy::all() {
            let w = cs.weight(a, b);
            if w == T::zero() {
                continue;
            }
            for (xa, row) in p.iter_mut().enumerate() {
                for (xb, cell) in row.iter_mut().enumerate() {
                    let (ya, yb) = (a.action(xa), b.action(xb));
                    cell[ya][yb] = cell[ya][yb] + w;
                }
            }
        }
    }
    Behavior::new(p).expect("convex combination of point masses")
}

/// Payoff point of the pure profile (a, b).
pub fn deterministic_payoff<T: Scalar>(
    game: &GameSpec<T>,
    a: DeterministicStrategy,
    b: DeterministicStrategy,
) -> PayoffPoint<T> {
    expected_payoffs(game, &behavior_of_deterministic(a, b))
}

/// All 16 pure payoff points, Alice's strategy major.
pub fn deterministic_payoff_points<T: Scalar>(game: &GameSpec<T>) -> Vec<PayoffPoint<T>> {
    let mut pts = Vec::with_capacity(16);
    for a in DeterministicStrategy::all() {
        for b in DeterministicStrategy::all() {
            pts.push(deterministic_payoff(game, a, b));
        }
    }
    pts
}

fn cross<T: Scalar>(o: &PayoffPoint<T>, a: &PayoffPoint<T>, b: &PayoffPoint<T>) -> T {
    (a.alice - o.alice) * (b.bob - o.bob) - (a.bob - o.bob) * (b.alice - o.alice)
}

/// Counterclockwise convex hull (monotone chain), collinear points dropped.
pub fn convex_hull<T: Scalar>(points: &[PayoffPoint<T>]) -> Vec<PayoffPoint<T>> {
    let mut pts: Vec<PayoffPoint<T>> = points.to_vec();
    pts.sort_by(|p, q| {
        p.alice
            .partial_cmp(&q.alice)
            .unwrap()
            .then(p.bob.partial_cmp(&q.bob).unwrap())
    });
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<PayoffPoint<T>> = Vec::with_capacity(2 * pts.len());
    for p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= T::zero() {
            hull.pop();
        }
        hull.push(*p);
    }
    hull.pop();
    hull
}

/// Vertices of the classical payoff region.
pub fn classical_region<T: Scalar>(game: &GameSpec<T>) -> Vec<PayoffPoint<T>> {
    convex_hull(&deterministic_payoff_points(game))
}

/// Point-in-convex-polygon test for a counterclockwise vertex list.
pub fn region_contains<T: Scalar>(hull: &[PayoffPoint<T>], p: &PayoffPoint<T>, tol: T) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0].distance(p) <= tol,
        2 => {
            let (a, b) = (&hull[0], &hull[1]);
            let len = (b.alice - a.alice).abs_val().max_val((b.bob - a.bob).abs_val());
            if cross(a, b, p).abs_val() > tol * len {
                return false;
            }
            let lo_a = a.alice.min_val(b.alice) - tol;
            let hi_a = a.alice.max_val(b.alice) + tol;
            let lo_b = a.bob.min_val(b.bob) - tol;
            let hi_b = a.bob.max_val(b.bob) + tol;
            p.alice >= lo_a && p.alice <= hi_a && p.bob >= lo_b && p.bob <= hi_b
        }
        n => (0..n).all(|i| {
            let (a, b) = (&hull[i], &hull[(i + 1) % n]);
            let len = (b.alice - a.alice).abs_val().max_val((b.bob - a.bob).abs_val());
            cross(a, b, p) >= T::zero() - tol * len
        }),
    }
}

/// Maximum of `w_a·F_A + w_b·F_B` over classical strategies. A linear
/// objective is maximized at a vertex, so only pure profiles are scanned;
/// ties go to the lowest index.
pub fn max_weighted_classical<T: Scalar>(
    game: &GameSpec<T>,
    w_a: T,
    w_b: T,
) -> (T, (DeterministicStrategy, DeterministicStrategy)) {
    let mut best: Option<(T, (DeterministicStrategy, DeterministicStrategy))> = None;
    for a in DeterministicStrategy::all() {
        for b in DeterministicStrategy::all() {
            let v = deterministic_payoff(game, a, b).weighted(w_a, w_b);
            if best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, (a, b)));
            }
        }
    }
    best.expect("16 profiles")
}

/// A Nash equilibrium of the 4×4 bimatrix game between deterministic
/// strategies (no advice).
#[derive(Debug, Clone, PartialEq)]
pub struct NashEquilibrium<T> {
    /// Alice's mixture over her 4 deterministic strategies.
    pub alice: [T; 4],
    pub bob: [T; 4],
    pub payoffs: PayoffPoint<T>,
    /// Number of support pairs that produced this equilibrium (after merging).
    pub supports: usize,
    /// Bitmask support pair of the first occurrence.
    pub support_masks: (u8, u8),
}

impl<T: Scalar> NashEquilibrium<T> {
    pub fn is_pure(&self) -> bool {
        let one = |m: &[T; 4]| m.iter().filter(|&&w| w > T::zero()).count() == 1;
        one(&self.alice) && one(&self.bob)
    }

    /// Product behavior induced by the two independent mixtures.
    pub fn behavior(&self) -> Behavior<T> {
        mixed_behavior(&self.alice, &self.bob)
    }
}

#[derive(Debug, Clone)]
pub struct NashReport<T> {
    pub equilibria: Vec<NashEquilibrium<T>>,
    /// Support pairs whose indifference system had no unique solution.
    pub singular_supports: Vec<(u8, u8)>,
}

impl<T: Scalar> NashReport<T> {
    pub fn payoff_points(&self) -> Vec<PayoffPoint<T>> {
        self.equilibria.iter().map(|e| e.payoffs).collect()
    }

    /// True if some equilibrium belongs to a continuum (several supports, or
    /// singular supports exist).
    pub fn has_degenerate_components(&self) -> bool {
        !self.singular_supports.is_empty() || self.equilibria.iter().any(|e| e.supports > 1)
    }
}

fn mixed_behavior<T: Scalar>(alice: &[T; 4], bob: &[T; 4]) -> Behavior<T> {
    let zero_prob = |m: &[T; 4], ty: usize| {
        DeterministicStrategy::all()
            .iter()
            .filter(|s| s.action(ty) == 0)
            .fold(T::zero(), |acc, s| acc + m[s.code()])
    };
    let pa = [zero_prob(alice, 0), zero_prob(alice, 1)];
    let pb = [zero_prob(bob, 0), zero_prob(bob, 1)];
    Behavior::product(pa, pb).expect("mixtures are normalized")
}

/// Solves `m·z = rhs` by Gaussian elimination; `None` unless the solution is
/// unique and the system consistent.
fn solve_unique<T: Scalar>(mut m: Vec<Vec<T>>, mut rhs: Vec<T>, eps: T) -> Option<Vec<T>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, mag) = (r..rows)
            .map(|i| (i, m[i][c].abs_val()))
            .fold((r, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= eps {
            continue;
        }
        m.swap(r, best);
        rhs.swap(r, best);
        for i in 0..rows {
            if i != r {
                let f = m[i][c] / m[r][c];
                if f != T::zero() {
                    for k in c..cols {
                        m[i][k] = m[i][k] - f * m[r][k];
                    }
                    rhs[i] = rhs[i] - f * rhs[r];
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    if pivot_cols.len() < cols {
        return None;
    }
    let scale = rhs.iter().fold(T::one(), |a, &v| a.max_val(v.abs_val()));
    if rhs[r..].iter().any(|v| v.abs_val() > eps * scale) {
        return None;
    }
    let mut z = vec![T::zero(); cols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        z[c] = rhs[i] / m[i][c];
    }
    Some(z)
}

fn members(mask: u8) -> Vec<usize> {
    (0..4).filter(|i| mask >> i & 1 == 1).collect()
}

/// Mixture of the opponent (over `cols`) that makes every strategy in `rows`
/// indifferent under `payoff[row][col]`.
fn indifference<T: Scalar>(payoff: &[[T; 4]; 4], rows: &[usize], cols: &[usize], eps: T) -> Option<[T; 4]> {
    // Unknowns: weights on `cols`, then the common value v.
    let n = cols.len() + 1;
    let mut m = Vec::with_capacity(rows.len() + 1);
    let mut rhs = Vec::with_capacity(rows.len() + 1);
    for &i in rows {
        let mut eq: Vec<T> = cols.iter().map(|&j| payoff[i][j]).collect();
        eq.push(T::zero() - T::one());
        m.push(eq);
        rhs.push(T::zero());
    }
    let mut norm = vec![T::one(); n];
    norm[n - 1] = T::zero();
    m.push(norm);
    rhs.push(T::one());
    let z = solve_unique(m, rhs, eps)?;
    let mut mix = [T::zero(); 4];
    for (k, &j) in cols.iter().enumerate() {
        mix[j] = z[k];
    }
    Some(mix)
}

/// All Nash equilibria found by support enumeration over every pair of
/// nonempty supports. Equilibria with the same payoff point and induced
/// behavior (within 1e-8) are merged.
pub fn nash_equilibria<T: Scalar>(game: &GameSpec<T>) -> NashReport<T> {
    let gain_tol = T::tolerance(1e-9);
    let merge_tol = T::tolerance(1e-8);
    let eps = T::tolerance(1e-12);

    let mut pay_a = [[T::zero(); 4]; 4];
    let mut pay_b = [[T::zero(); 4]; 4];
    for a in DeterministicStrategy::all() {
        for b in DeterministicStrategy::all() {
            let f = deterministic_payoff(game, a, b);
            pay_a[a.code()][b.code()] = f.alice;
            pay_b[a.code()][b.code()] = f.bob;
        }
    }
    let mut pay_b_t = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            pay_b_t[j][i] = pay_b[i][j];
        }
    }

    let mut equilibria: Vec<NashEquilibrium<T>> = Vec::new();
    let mut singular = Vec::new();
    for sa in 1u8..16 {
        for sb in 1u8..16 {
            let rows = members(sa);
            let cols = members(sb);
            let bob = indifference(&pay_a, &rows, &cols, eps);
            let alice = indifference(&pay_b_t, &cols, &rows, eps);
            let (alice, bob) = match (alice, bob) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    debug!("support pair ({sa:04b}, {sb:04b}) has no unique indifference solution");
                    singular.push((sa, sb));
                    continue;
                }
            };
            if alice.iter().chain(bob.iter()).any(|&w| w < T::zero() - eps) {
                continue;
            }
            let alice = alice.map(|w| w.max_val(T::zero()));
            let bob = bob.map(|w| w.max_val(T::zero()));
            if best_response_gain(&pay_a, &pay_b, &alice, &bob) > gain_tol {
                continue;
            }
            let payoffs = mixed_payoff(&pay_a, &pay_b, &alice, &bob);
            let behavior = mixed_behavior(&alice, &bob);
            if let Some(e) = equilibria
                .iter_mut()
                .find(|e| e.payoffs.distance(&payoffs) <= merge_tol && e.behavior().distance(&behavior) <= merge_tol)
            {
                e.supports += 1;
                continue;
            }
            equilibria.push(NashEquilibrium {
                alice,
                bob,
                payoffs,
                supports: 1,
                support_masks: (sa, sb),
            });
        }
    }
    NashReport {
        equilibria,
        singular_supports: singular,
    }
}

fn mixed_payoff<T: Scalar>(pay_a: &[[T; 4]; 4], pay_b: &[[T; 4]; 4], p: &[T; 4], q: &[T; 4]) -> PayoffPoint<T> {
    let mut fa = T::zero();
    let mut fb = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            fa = fa + p[i] * q[j] * pay_a[i][j];
            fb = fb + p[i] * q[j] * pay_b[i][j];
        }
    }
    PayoffPoint::new(fa, fb)
}

/// Largest gain either player gets from a pure deviation.
fn best_response_gain<T: Scalar>(pay_a: &[[T; 4]; 4], pay_b: &[[T; 4]; 4], p: &[T; 4], q: &[T; 4]) -> T {
    let cur = mixed_payoff(pay_a, pay_b, p, q);
    let mut gain = T::zero() - T::one();
    for k in 0..4 {
        let mut e = [T::zero(); 4];
        e[k] = T::one();
        gain = gain
            .max_val(mixed_payoff(pay_a, pay_b, &e, q).alice - cur.alice)
            .max_val(mixed_payoff(pay_a, pay_b, p, &e).bob - cur.bob);
    }
    gain
}

/// Largest gain from a pure deviation for a profile of independent
/// mixtures, computed directly from the game.
pub fn nash_gain<T: Scalar>(game: &GameSpec<T>, alice: &[T; 4], bob: &[T; 4]) -> T {
    let mut pay_a = [[T::zero(); 4]; 4];
    let mut pay_b = [[T::zero(); 4]; 4];
    for a in DeterministicStrategy::all() {
        for b in DeterministicStrategy::all() {
            let f = deterministic_payoff(game, a, b);
            pay_a[a.code()][b.code()] = f.alice;
            pay_b[a.code()][b.code()] = f.bob;
        }
    }
    best_response_gain(&pay_a, &pay_b, alice, bob)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatedEquilibriumReport<T> {
    pub is_equilibrium: bool,
    /// Largest payoff gain found over all deviation maps of both players.
    pub worst_gain: T,
    /// Player achieving `worst_gain` (Alice on ties).
    pub deviating_player: Player,
    /// The deviation map achieving it: recommended code → played code.
    pub deviation: [DeterministicStrategy; 4],
}

/// Scans all 4⁴ deviation maps per player.
pub fn is_correlated_equilibrium<T: Scalar>(
    game: &GameSpec<T>,
    cs: &CorrelatedStrategy<T>,
    tol: T,
) -> CorrelatedEquilibriumReport<T> {
    let mut pay = [[PayoffPoint::new(T::zero(), T::zero()); 4]; 4];
    for a in DeterministicStrategy::all() {
        for b in DeterministicStrategy::all() {
            pay[a.code()][b.code()] = deterministic_payoff(game, a, b);
        }
    }
    let all = DeterministicStrategy::all();
    let mut report: Option<CorrelatedEquilibriumReport<T>> = None;
    for player in [Player::Alice, Player::Bob] {
        for code in 0..256usize {
            let dev = [0, 1, 2, 3].map(|k| all[(code >> (2 * k)) & 3]);
            let mut gain = T::zero();
            for a in all {
                for b in all {
                    let w = cs.weight(a, b);
                    if w == T::zero() {
                        continue;
                    }
                    let delta = match player {
                        Player::Alice => pay[dev[a.code()].code()][b.code()].alice - pay[a.code()][b.code()].alice,
                        Player::Bob => pay[a.code()][dev[b.code()].code()].bob - pay[a.code()][b.code()].bob,
                    };
                    gain = gain + w * delta;
                }
            }
            if report.as_ref().is_none_or(|r| gain > r.worst_gain) {
                report = Some(CorrelatedEquilibriumReport {
                    is_equilibrium: true,
                    worst_gain: gain,
                    deviating_player: player,
                    deviation: dev,
                });
            }
        }
    }
    let mut report = report.expect("identity deviation always scanned");
    report.is_equilibrium = report.worst_gain <= tol;
    report
}
