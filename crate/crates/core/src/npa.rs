//! Moment-matrix relaxations of the set of quantum behaviors for two
//! binary inputs and outputs per party, giving dimension-free upper bounds
//! on linear functionals such as weighted payoffs.
//!
//! Monomials are words in the outcome-0 projectors `A₀, A₁, B₀, B₁`.
//! Alice's operators commute with Bob's, projectors are idempotent, and the
//! relaxation is taken over real symmetric moment matrices (the real part of
//! any complex moment matrix is feasible, so the bound is unchanged).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{cells, Behavior, GameSpec, Table};
use crate::linalg::Matrix;
use crate::quantum::{ComplexOperator, QuantumStrategy};
use crate::scalar::{Real, Scalar};
use crate::sdp::{self, SdpOptions, SdpProblem, SdpSolution, SparseSym};

/// Linear functional `offset + Σ c(y|x)·p(y|x)` on behaviors; coefficients
/// indexed `[x_a][x_b][y_a][y_b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellFunctional<T> {
    pub coefficients: Table<T>,
    pub offset: T,
}

impl<T: Scalar> BellFunctional<T> {
    pub fn evaluate(&self, b: &Behavior<T>) -> T {
        cells().fold(self.offset, |acc, (xa, xb, ya, yb)| {
            acc + self.coefficients[xa][xb][ya][yb] * b.get(xa, xb, ya, yb)
        })
    }
}

/// CHSH expression S = Σ_x (−1)^{x_a x_b} Σ_y (−1)^{y_a ⊕ y_b} p(y|x).
pub fn chsh_functional<T: Scalar>() -> BellFunctional<T> {
    BellFunctional {
        coefficients: crate::game::table_from_fn(|xa, xb, ya, yb| {
            if (xa & xb) ^ ya ^ yb == 0 {
                T::one()
            } else {
                T::zero() - T::one()
            }
        }),
        offset: T::zero(),
    }
}

/// Functional equal to `w_a·F_A + w_b·F_B` on every behavior.
pub fn payoff_functional<T: Scalar>(game: &GameSpec<T>, w_a: T, w_b: T) -> BellFunctional<T> {
    let weighted = game.weighted(w_a, w_b);
    BellFunctional {
        coefficients: crate::game::table_from_fn(|xa, xb, ya, yb| {
            game.prior(xa, xb) * weighted.utility(crate::game::Player::Alice, xa, xb, ya, yb)
        }),
        offset: T::zero(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// {1, A₀, A₁, B₀, B₁}
    One,
    /// Level 1 plus the products A_iB_j.
    OnePlusAB,
    /// Level 1+AB plus A_iA_j and B_iB_j (i ≠ j).
    Two,
}

impl Level {
    pub fn all() -> [Level; 3] {
        [Level::One, Level::OnePlusAB, Level::Two]
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::One => "1",
            Level::OnePlusAB => "1+AB",
            Level::Two => "2",
        })
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "1" => Ok(Level::One),
            "1+AB" | "1AB" => Ok(Level::OnePlusAB),
            "2" => Ok(Level::Two),
            _ => Err(Error::UnsupportedLevel(s.to_string())),
        }
    }
}

/// Operator word: Alice's letters and Bob's letters (input indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    pub alice: Vec<u8>,
    pub bob: Vec<u8>,
}

impl Word {
    fn new(alice: &[u8], bob: &[u8]) -> Self {
        Word {
            alice: alice.to_vec(),
            bob: bob.to_vec(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.alice.is_empty() && self.bob.is_empty()
    }

    fn collapse(letters: &[u8]) -> Vec<u8> {
        let mut out: Vec<u8> = Vec::with_capacity(letters.len());
        for &l in letters {
            if out.last() != Some(&l) {
                out.push(l);
            }
        }
        out
    }

    /// Canonical representative of ⟨u†·v⟩ up to idempotence, commutation
    /// and (real relaxation) adjoint.
    pub fn moment(u: &Word, v: &Word) -> Word {
        let join = |a: &[u8], b: &[u8]| {
            let mut w: Vec<u8> = a.iter().rev().copied().collect();
            w.extend_from_slice(b);
            Self::collapse(&w)
        };
        let w = Word {
            alice: join(&u.alice, &v.alice),
            bob: join(&u.bob, &v.bob),
        };
        let rev = Word {
            alice: w.alice.iter().rev().copied().collect(),
            bob: w.bob.iter().rev().copied().collect(),
        };
        w.min(rev)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("1");
        }
        for l in &self.alice {
            write!(f, "A{l}")?;
        }
        for l in &self.bob {
            write!(f, "B{l}")?;
        }
        Ok(())
    }
}

/// Moment entries sharing one canonical word.
#[derive(Debug, Clone)]
pub struct MomentClass {
    pub word: Word,
    /// Upper-triangular entries (i ≤ j); the first is the representative.
    pub entries: Vec<(usize, usize)>,
}

#[derive(Debug, Clone)]
pub struct MomentStructure {
    pub level: Level,
    pub monomials: Vec<Word>,
    pub classes: Vec<MomentClass>,
    class_index: BTreeMap<Word, usize>,
}

impl MomentStructure {
    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    /// Pairs of entries forced equal.
    pub fn equalities(&self) -> Vec<((usize, usize), (usize, usize))> {
        self.classes
            .iter()
            .flat_map(|c| c.entries[1..].iter().map(move |&e| (c.entries[0], e)))
            .collect()
    }

    pub fn class_of(&self, i: usize, j: usize) -> &MomentClass {
        let w = Word::moment(&self.monomials[i], &self.monomials[j]);
        &self.classes[self.class_index[&w]]
    }

    fn representative(&self, w: &Word) -> (usize, usize) {
        let rev = Word {
            alice: w.alice.iter().rev().copied().collect(),
            bob: w.bob.iter().rev().copied().collect(),
        };
        let key = w.clone().min(rev);
        self.classes[self.class_index[&key]].entries[0]
    }

    /// Equality constraints as SDP data: Γ₁₁ = 1 and every class member equal
    /// to its representative.
    pub fn constraints<T: Real>(&self) -> (Vec<SparseSym<T>>, Vec<T>) {
        let half = T::from_f64(0.5).unwrap();
        let coef = |i: usize, j: usize| if i == j { T::one() } else { half };
        let mut a = vec![SparseSym::selector(0, 0)];
        let mut b = vec![T::one()];
        for ((ri, rj), (ei, ej)) in self.equalities() {
            a.push(SparseSym::new(vec![(ei, ej, coef(ei, ej)), (ri, rj, -coef(ri, rj))]));
            b.push(T::zero());
        }
        (a, b)
    }

    /// Objective matrix C with ⟨C, Γ⟩ + offset equal to the functional on the
    /// behavior encoded by Γ.
    pub fn embed<T: Real>(&self, f: &BellFunctional<T>) -> (Matrix<T>, T) {
        let n = self.dim();
        let mut c = Matrix::zeros(n, n);
        let mut put = |w: Word, k: T| {
            if k == T::zero() {
                return;
            }
            let (i, j) = self.representative(&w);
            if i == j {
                c[(i, i)] = c[(i, i)] + k;
            } else {
                let h = k / (T::one() + T::one());
                c[(i, j)] = c[(i, j)] + h;
                c[(j, i)] = c[(j, i)] + h;
            }
        };
        // p(00)=⟨AB⟩, p(01)=⟨A⟩−⟨AB⟩, p(10)=⟨B⟩−⟨AB⟩, p(11)=1−⟨A⟩−⟨B⟩+⟨AB⟩
        for xa in 0..2u8 {
            for xb in 0..2u8 {
                let k = f.coefficients[xa as usize][xb as usize];
                put(Word::new(&[], &[]), k[1][1]);
                put(Word::new(&[xa], &[]), k[0][1] - k[1][1]);
                put(Word::new(&[], &[xb]), k[1][0] - k[1][1]);
                put(Word::new(&[xa], &[xb]), k[0][0] - k[0][1] - k[1][0] + k[1][1]);
            }
        }
        (c, f.offset)
    }

    /// Γ_{u,v} = Re tr(ρ·u†v) for the operators of an explicit strategy.
    pub fn moment_matrix<T: Real>(&self, m: &QuantumStrategy<T>) -> Matrix<T> {
        let id = ComplexOperator::identity(2);
        let op = |w: &Word| {
            let mut o = ComplexOperator::identity(4);
            for &l in &w.alice {
                o = o.mul(&m.alice[l as usize].projector(0).kron(&id));
            }
            for &l in &w.bob {
                o = o.mul(&id.kron(m.bob[l as usize].projector(0)));
            }
            o
        };
        let ops: Vec<ComplexOperator<T>> = self.monomials.iter().map(op).collect();
        let rho = m.state.density();
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| ops[i].adjoint().mul(&ops[j]).trace_product_re(rho)).symmetrized()
    }
}

pub fn build_moment_structure(level: Level) -> MomentStructure {
    let mut monomials = vec![
        Word::new(&[], &[]),
        Word::new(&[0], &[]),
        Word::new(&[1], &[]),
        Word::new(&[], &[0]),
        Word::new(&[], &[1]),
    ];
    if level >= Level::OnePlusAB {
        for a in 0..2 {
            for b in 0..2 {
                monomials.push(Word::new(&[a], &[b]));
            }
        }
    }
    if level >= Level::Two {
        monomials.push(Word::new(&[0, 1], &[]));
        monomials.push(Word::new(&[1, 0], &[]));
        monomials.push(Word::new(&[], &[0, 1]));
        monomials.push(Word::new(&[], &[1, 0]));
    }
    let n = monomials.len();
    let mut classes: Vec<MomentClass> = Vec::new();
    let mut class_index = BTreeMap::new();
    for i in 0..n {
        for j in i..n {
            let w = Word::moment(&monomials[i], &monomials[j]);
            let idx = *class_index.entry(w.clone()).or_insert_with(|| {
                classes.push(MomentClass {
                    word: w,
                    entries: Vec::new(),
                });
                classes.len() - 1
            });
            classes[idx].entries.push((i, j));
        }
    }
    MomentStructure {
        level,
        monomials,
        classes,
        class_index,
    }
}

/// Maximizes the functional over the relaxation.
pub fn solve_sdp<T: Real>(
    structure: &MomentStructure,
    functional: &BellFunctional<T>,
    opts: &SdpOptions,
) -> Result<SdpSolution<T>> {
    let (c, offset) = structure.embed(functional);
    let (constraints, rhs) = structure.constraints();
    let problem = SdpProblem {
        dim: structure.dim(),
        objective: c,
        constraints,
        rhs,
    };
    let mut sol = sdp::solve(&problem, opts)?;
    sol.value = sol.value + offset;
    sol.primal_value = sol.primal_value + offset;
    Ok(sol)
}

/// Upper bound on `w_a·F_A + w_b·F_B` over all quantum strategies.
pub fn npa_upper_bound<T: Real>(game: &GameSpec<T>, w_a: T, w_b: T, level: Level) -> Result<T> {
    let s = build_moment_structure(level);
    Ok(solve_sdp(&s, &payoff_functional(game, w_a, w_b), &SdpOptions::default())?.value)
}

/// Supporting half-plane `w_a·F_A + w_b·F_B ≤ bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane<T> {
    pub w_a: T,
    pub w_b: T,
    pub bound: T,
    pub gap: T,
    pub level: Level,
}

impl<T: Real> HalfPlane<T> {
    pub fn contains(&self, p: &crate::game::PayoffPoint<T>, slack: T) -> bool {
        self.w_a * p.alice + self.w_b * p.bob <= self.bound + slack
    }
}

pub fn region_upper_boundary<T: Real>(
    game: &GameSpec<T>,
    weights: &[(T, T)],
    level: Level,
    opts: &SdpOptions,
) -> Result<Vec<HalfPlane<T>>> {
    let s = build_moment_structure(level);
    weights
        .par_iter()
        .map(|&(w_a, w_b)| {
            let sol = solve_sdp(&s, &payoff_functional(game, w_a, w_b), opts)?;
            Ok(HalfPlane {
                w_a,
                w_b,
                bound: sol.value,
                gap: sol.gap,
                level,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{behavior_of_deterministic, DeterministicStrategy as D};
    use crate::game::standard_game;
    use crate::quantum::{behavior_of_quantum, fair_strategy};
    use std::f64::consts::{FRAC_PI_8, SQRT_2};

    #[test]
    fn dimensions() {
        assert_eq!(build_moment_structure(Level::One).dim(), 5);
        assert_eq!(build_moment_structure(Level::OnePlusAB).dim(), 9);
        assert_eq!(build_moment_structure(Level::Two).dim(), 13);
    }

    #[test]
    fn level_parsing() {
        assert_eq!("1+AB".parse::<Level>().unwrap(), Level::OnePlusAB);
        assert_eq!("2".parse::<Level>().unwrap(), Level::Two);
        assert!(matches!("3".parse::<Level>(), Err(Error::UnsupportedLevel(_))));
        for l in Level::all() {
            assert_eq!(l.to_string().parse::<Level>().unwrap(), l);
        }
    }

    #[test]
    fn idempotence_ties_diagonal_to_first_row() {
        let s = build_moment_structure(Level::One);
        // monomial 1 is A₀
        let class = s.class_of(1, 1);
        assert!(class.entries.contains(&(0, 1)));
        assert_eq!(class.word, Word::new(&[0], &[]));
        // the identity class only holds the corner
        assert_eq!(s.class_of(0, 0).entries, vec![(0, 0)]);
    }

    #[test]
    fn word_reduction() {
        let a0b1 = Word::new(&[0], &[1]);
        let a1 = Word::new(&[1], &[]);
        // (A₀B₁)†A₁ = B₁A₀A₁ → alice "01", bob "1"; reversed "10"
        assert_eq!(Word::moment(&a0b1, &a1), Word::new(&[0, 1], &[1]));
        assert_eq!(Word::moment(&a0b1, &a0b1), a0b1);
    }

    #[test]
    fn functionals_evaluate_payoffs() {
        let g = standard_game::<f64>();
        let b = behavior_of_quantum(&fair_strategy::<f64>()).unwrap();
        let f = payoff_functional(&g, 1.0, 1.0);
        assert!((f.evaluate(&b) - 1.5 * FRAC_PI_8.cos().powi(2)).abs() < 1e-12);
        let both0 = behavior_of_deterministic::<f64>(D::ALWAYS_ZERO, D::ALWAYS_ZERO);
        assert_eq!(payoff_functional(&g, 1.0, 0.0).evaluate(&both0), 0.75);
        assert_eq!(payoff_functional(&g, 0.0, 0.0).evaluate(&b), 0.0);
        assert!((chsh_functional::<f64>().evaluate(&b) - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn embedding_matches_functional_on_strategy_moments() {
        let s = build_moment_structure(Level::Two);
        let m = fair_strategy::<f64>();
        let gamma = s.moment_matrix(&m);
        let f = payoff_functional(&standard_game::<f64>(), 0.7, 1.3);
        let (c, off) = s.embed(&f);
        let want = f.evaluate(&behavior_of_quantum(&m).unwrap());
        assert!((c.inner(&gamma) + off - want).abs() < 1e-12);
    }

    #[test]
    fn tsirelson_bound() {
        let s = build_moment_structure(Level::OnePlusAB);
        let sol = solve_sdp(&s, &chsh_functional::<f64>(), &SdpOptions::default()).unwrap();
        assert!((sol.value - 2.0 * SQRT_2).abs() < 1e-4, "{}", sol.value);
        assert!(sol.primal.min_eigenvalue() > -1e-8);
    }

    #[test]
    fn corner_objective() {
        let s = build_moment_structure(Level::One);
        let f = BellFunctional {
            coefficients: [[[[1.0f64; 2]; 2]; 2]; 2],
            offset: 0.0,
        };
        // Σ_y p(y|x) = 1 for each of 4 inputs: the objective is 4·Γ₁₁.
        let sol = solve_sdp(&s, &f, &SdpOptions::default()).unwrap();
        assert!((sol.value - 4.0).abs() < 1e-6);
    }

    fn random_state(rng: &mut impl rand::Rng) -> crate::quantum::QuantumState<f64> {
        use num_complex::Complex;
        let mut pure = || {
            let amps: [Complex<f64>; 4] =
                std::array::from_fn(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            crate::quantum::QuantumState::pure(amps.map(|a| a / n)).unwrap()
        };
        let (a, b) = (pure(), pure());
        a.mix(&b, rng.gen_range(0.0..1.0))
    }

    #[test]
    fn strategy_moment_matrices_are_feasible() {
        use crate::equilibrium_opt::{random_strategy, task_rng};
        let g = standard_game::<f64>();
        let s = build_moment_structure(Level::Two);
        let f = payoff_functional(&g, 1.0, 0.4);
        let (c, off) = s.embed(&f);
        let mut rng = task_rng(5, 0);
        for _ in 0..50 {
            let state = random_state(&mut rng);
            let m = random_strategy(&state, &mut rng);
            let gamma = s.moment_matrix(&m);
            assert!(gamma.min_eigenvalue() > -1e-10);
            assert!((gamma[(0, 0)] - 1.0).abs() < 1e-12);
            for ((ri, rj), (ei, ej)) in s.equalities() {
                assert!((gamma[(ri, rj)] - gamma[(ei, ej)]).abs() < 1e-10);
            }
            let want = f.evaluate(&behavior_of_quantum(&m).unwrap());
            assert!((c.inner(&gamma) + off - want).abs() < 1e-10);
        }
    }

    #[test]
    fn fair_direction_bound() {
        let g = standard_game::<f64>();
        let want = 1.5 * FRAC_PI_8.cos().powi(2);
        for level in [Level::OnePlusAB, Level::Two] {
            let b = npa_upper_bound(&g, 1.0, 1.0, level).unwrap();
            assert!((b - want).abs() < 1e-3, "{level}: {b}");
            assert!(b >= want - 1e-6);
        }
        assert!(npa_upper_bound(&g, 1.0, 0.0, Level::One).unwrap() >= 0.75 - 1e-7);
    }

    #[test]
    fn hierarchy_is_monotone() {
        let g = standard_game::<f64>();
        let tol = SdpOptions::default().tol;
        for (wa, wb) in [(1.0, 1.0), (1.0, 0.3), (0.2, 1.0), (1.0, 0.0)] {
            let b: Vec<f64> = Level::all()
                .iter()
                .map(|&l| npa_upper_bound(&g, wa, wb, l).unwrap())
                .collect();
            assert!(b[1] <= b[0] + 2.0 * tol && b[2] <= b[1] + 2.0 * tol, "{b:?}");
        }
    }

    #[test]
    fn solution_certificate() {
        let s = build_moment_structure(Level::Two);
        let f = payoff_functional(&standard_game::<f64>(), 0.6, 1.0);
        let opts = SdpOptions::default();
        let sol = solve_sdp(&s, &f, &opts).unwrap();
        assert!(sol.primal.min_eigenvalue() >= -1e-8);
        let (a, b) = s.constraints::<f64>();
        for (ak, bk) in a.iter().zip(&b) {
            assert!((ak.inner(&sol.primal) - bk).abs() <= 1e-8);
        }
        assert!(sol.gap <= opts.tol);
    }

    #[test]
    fn deterministic_behaviors_below_bound() {
        let s = build_moment_structure(Level::One);
        let f = chsh_functional::<f64>();
        let bound = solve_sdp(&s, &f, &SdpOptions::default()).unwrap().value;
        for a in D::all() {
            for b in D::all() {
                assert!(f.evaluate(&behavior_of_deterministic(a, b)) <= bound + 1e-9);
            }
        }
    }
}
