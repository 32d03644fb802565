//! Two-qubit states, binary projective qubit measurements and the Born
//! rule that turns a quantum strategy into a behavior.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::game::{cells, Behavior, Player};
use crate::linalg::Matrix;
use crate::scalar::{Real, Scalar};

pub type C<T> = Complex<T>;

fn c<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

fn lit<T: Real>(v: f64) -> T {
    T::from_f64(v).unwrap()
}

/// Dense square complex matrix (dimension 2 or 4 in practice).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexOperator<T> {
    dim: usize,
    data: Vec<C<T>>,
}

impl<T: Real> ComplexOperator<T> {
    pub fn zeros(dim: usize) -> Self {
        ComplexOperator {
            dim,
            data: vec![C::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { c(T::one()) } else { c(T::zero()) })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        ComplexOperator { dim, data }
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::IncompleteTable("operator is not square".into()));
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn from_real(m: &[Vec<T>]) -> Self {
        Self::from_fn(m.len(), |i, j| c(m[i][j]))
    }

    /// |v⟩⟨v|.
    pub fn outer(v: &[C<T>]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C<T> {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C<T>) {
        self.data[i * self.dim + j] = v;
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            (0..n).fold(c(T::zero()), |acc, k| acc + self.get(i, k) * rhs.get(k, j))
        })
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j) + rhs.get(i, j))
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j) - rhs.get(i, j))
    }

    pub fn scale(&self, s: T) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j) * s)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    /// Kronecker product self ⊗ rhs.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.dim, rhs.dim);
        Self::from_fn(n * m, |i, j| self.get(i / m, j / m) * rhs.get(i % m, j % m))
    }

    pub fn trace(&self) -> C<T> {
        (0..self.dim).fold(c(T::zero()), |acc, i| acc + self.get(i, i))
    }

    /// Re tr(self · rhs) without forming the product.
    pub fn trace_product_re(&self, rhs: &Self) -> T {
        let n = self.dim;
        let mut acc = T::zero();
        for i in 0..n {
            for k in 0..n {
                acc = acc + (self.get(i, k) * rhs.get(k, i)).re;
            }
        }
        acc
    }

    /// U · self · U†.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.mul(self).mul(&u.adjoint())
    }

    /// Tr_B of a 4×4 operator on A⊗B.
    pub fn partial_trace_b(&self) -> Self {
        assert_eq!(self.dim, 4);
        Self::from_fn(2, |i, j| self.get(2 * i, 2 * j) + self.get(2 * i + 1, 2 * j + 1))
    }

    /// Tr_A of a 4×4 operator on A⊗B.
    pub fn partial_trace_a(&self) -> Self {
        assert_eq!(self.dim, 4);
        Self::from_fn(2, |i, j| self.get(i, j) + self.get(2 + i, 2 + j))
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        self.data
            .iter()
            .zip(&rhs.data)
            .fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm()))
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, a| acc.max(a.norm()))
    }

    /// ‖M − M†‖_max.
    pub fn hermiticity_deviation(&self) -> T {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Hermitian and idempotent within `tol`.
    pub fn is_projector(&self, tol: T) -> bool {
        self.is_hermitian(tol) && self.mul(self).max_abs_diff(self) <= tol
    }

    /// ⟨v|M|v⟩.
    pub fn expectation(&self, v: &[C<T>]) -> C<T> {
        let n = self.dim;
        let mut acc = c(T::zero());
        for i in 0..n {
            for j in 0..n {
                acc = acc + v[i].conj() * self.get(i, j) * v[j];
            }
        }
        acc
    }

    /// Real symmetric embedding [[Re, −Im], [Im, Re]] of a Hermitian operator.
    pub fn real_embedding(&self) -> Matrix<T> {
        let n = self.dim;
        Matrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = self.get(i % n, j % n);
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
    }
}

/// Pauli matrix: 0 → I, 1 → X, 2 → Y, 3 → Z.
pub fn pauli<T: Real>(k: usize) -> ComplexOperator<T> {
    let (o, z, i) = (c(T::one()), c(T::zero()), C::new(T::zero(), T::one()));
    let rows = match k {
        0 => [[o, z], [z, o]],
        1 => [[z, o], [o, z]],
        2 => [[z, -i], [i, z]],
        _ => [[o, z], [z, -o]],
    };
    ComplexOperator::from_fn(2, |r, s| rows[r][s])
}

/// Eigen-decomposition of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T> {
    /// Descending.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors, `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<C<T>>>,
}

/// Closed form for 2×2, Jacobi on the real embedding otherwise.
pub fn hermitian_eig<T: Real>(m: &ComplexOperator<T>) -> Result<HermitianEigen<T>> {
    let dev = m.hermiticity_deviation();
    let tol = T::tolerance(1e-10) * m.max_abs().max(T::one());
    if !(dev <= tol) {
        return Err(Error::NotHermitian(dev.as_f64()));
    }
    if m.dim() == 2 {
        Ok(eig2(m))
    } else {
        Ok(eig_jacobi(m))
    }
}

fn eig2<T: Real>(m: &ComplexOperator<T>) -> HermitianEigen<T> {
    let a = m.get(0, 0).re;
    let d = m.get(1, 1).re;
    let b = (m.get(0, 1) + m.get(1, 0).conj()) * lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let mean = (a + d) / two;
    let half_diff = (a - d) / two;
    let r = (half_diff * half_diff + b.norm_sqr()).sqrt();
    let (l1, l2) = (mean + r, mean - r);
    let v1 = if b.norm() == T::zero() {
        if a >= d {
            vec![c(T::one()), c(T::zero())]
        } else {
            vec![c(T::zero()), c(T::one())]
        }
    } else {
        let cand1 = [b, c(l1 - a)];
        let cand2 = [c(l1 - d), b.conj()];
        let n1 = cand1[0].norm_sqr() + cand1[1].norm_sqr();
        let n2 = cand2[0].norm_sqr() + cand2[1].norm_sqr();
        let (v, n) = if n1 >= n2 { (cand1, n1) } else { (cand2, n2) };
        let n = n.sqrt();
        vec![v[0] / n, v[1] / n]
    };
    let v2 = vec![-v1[1].conj(), v1[0].conj()];
    HermitianEigen {
        values: vec![l1, l2],
        vectors: vec![v1, v2],
    }
}

fn eig_jacobi<T: Real>(m: &ComplexOperator<T>) -> HermitianEigen<T> {
    let n = m.dim();
    let (_, vecs) = m.real_embedding().symmetric_eigen();
    // Each eigenvalue appears twice in the embedding, with vectors z and i·z.
    let mut accepted: Vec<Vec<C<T>>> = Vec::with_capacity(n);
    for col in 0..2 * n {
        if accepted.len() == n {
            break;
        }
        let mut z: Vec<C<T>> = (0..n).map(|k| C::new(vecs[(k, col)], vecs[(k + n, col)])).collect();
        for q in &accepted {
            let overlap = q.iter().zip(&z).fold(c(T::zero()), |acc, (a, b)| acc + a.conj() * b);
            for (zk, qk) in z.iter_mut().zip(q) {
                *zk = *zk - overlap * qk;
            }
        }
        let norm = z.iter().map(|v| v.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if norm > lit::<T>(0.5) {
            accepted.push(z.iter().map(|v| v / norm).collect());
        }
    }
    let mut pairs: Vec<(T, Vec<C<T>>)> = accepted.into_iter().map(|v| (m.expectation(&v).re, v)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    HermitianEigen {
        values: pairs.iter().map(|p| p.0).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
    }
}

/// Density operator on qubit_A ⊗ qubit_B.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState<T> {
    rho: ComplexOperator<T>,
}

impl<T: Real> QuantumState<T> {
    /// Validates Hermiticity and unit trace (1e-10) and positivity
    /// (smallest eigenvalue ≥ −1e-9).
    pub fn new(rho: ComplexOperator<T>) -> Result<Self> {
        if rho.dim() != 4 {
            return Err(Error::InvalidState(format!("dimension {} (expected 4)", rho.dim())));
        }
        let tol = T::tolerance(1e-10);
        let dev = rho.hermiticity_deviation();
        if !(dev <= tol) {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {:e})",
                dev.as_f64()
            )));
        }
        let tr = rho.trace();
        if !((tr.re - T::one()).abs() <= tol && tr.im.abs() <= tol) {
            return Err(Error::InvalidState(format!("trace {} ≠ 1", tr.re)));
        }
        let min_eig = rho.real_embedding().min_eigenvalue();
        if !(min_eig >= -T::tolerance(1e-9)) {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (eigenvalue {:e})",
                min_eig.as_f64()
            )));
        }
        Ok(QuantumState { rho })
    }

    /// Pure state from a (normalized) amplitude vector in the |00⟩,|01⟩,|10⟩,|11⟩ basis.
    pub fn pure(amplitudes: [C<T>; 4]) -> Result<Self> {
        let norm: T = amplitudes.iter().map(|a| a.norm_sqr()).fold(T::zero(), |a, b| a + b);
        if !((norm - T::one()).abs() <= T::tolerance(1e-10)) {
            return Err(Error::InvalidState(format!("state vector has norm² {norm}")));
        }
        Ok(QuantumState {
            rho: ComplexOperator::outer(&amplitudes),
        })
    }

    /// Bell states: 0 → φ⁺, 1 → φ⁻, 2 → ψ⁺, 3 → ψ⁻.
    pub fn bell(k: usize) -> Result<Self> {
        let h = c(T::one() / lit::<T>(2.0).sqrt());
        let z = c(T::zero());
        let amps = match k {
            0 => [h, z, z, h],
            1 => [h, z, z, -h],
            2 => [z, h, h, z],
            3 => [z, h, -h, z],
            _ => {
                return Err(Error::OutOfRange {
                    name: "Bell state index",
                    value: k as f64,
                    range: "0..=3",
                })
            }
        };
        Self::pure(amps)
    }

    pub fn phi_plus() -> Self {
        Self::bell(0).expect("valid index")
    }

    pub fn maximally_mixed() -> Self {
        QuantumState {
            rho: ComplexOperator::identity(4).scale(lit(0.25)),
        }
    }

    /// |00⟩.
    pub fn product_zero() -> Self {
        let (o, z) = (c(T::one()), c(T::zero()));
        Self::pure([o, z, z, z]).expect("unit vector")
    }

    /// v·|φ⁺⟩⟨φ⁺| + (1−v)·I/4.
    pub fn werner(v: T) -> Result<Self> {
        check_unit_interval("visibility", v)?;
        Ok(Self::phi_plus().mix(&Self::maximally_mixed(), v))
    }

    /// v·|φ⁺⟩⟨φ⁺| + (1−v)·(|00⟩⟨00| + |11⟩⟨11|)/2.
    pub fn colored_noise(v: T) -> Result<Self> {
        check_unit_interval("visibility", v)?;
        let half = lit::<T>(0.5);
        let diag = ComplexOperator::from_fn(4, |i, j| {
            if i == j && (i == 0 || i == 3) {
                c(half)
            } else {
                c(T::zero())
            }
        });
        Ok(Self::phi_plus().mix(&QuantumState { rho: diag }, v))
    }

    /// `lambda·self + (1−lambda)·other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Self {
        QuantumState {
            rho: self.rho.scale(lambda).add(&other.rho.scale(T::one() - lambda)),
        }
    }

    /// (U⊗V)·ρ·(U⊗V)†.
    pub fn apply_local(&self, u: &ComplexOperator<T>, v: &ComplexOperator<T>) -> Self {
        QuantumState {
            rho: self.rho.conjugate_by(&u.kron(v)),
        }
    }

    pub fn density(&self) -> &ComplexOperator<T> {
        &self.rho
    }

    /// tr(ρ²).
    pub fn purity(&self) -> T {
        self.rho.trace_product_re(&self.rho)
    }
}

fn check_unit_interval<T: Real>(name: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value: v.as_f64(),
            range: "[0, 1]",
        })
    }
}

/// ⟨ψ|ρ|ψ⟩ for a pure target |ψ⟩⟨ψ|.
pub fn fidelity<T: Real>(rho: &QuantumState<T>, target: &QuantumState<T>) -> Result<T> {
    let purity = target.purity();
    if !((purity - T::one()).abs() <= T::tolerance(1e-10)) {
        return Err(Error::InvalidState(format!(
            "fidelity target is not pure (purity {purity})"
        )));
    }
    Ok(rho.rho.trace_product_re(&target.rho))
}

/// Binary projective measurement on one qubit: (Π⁰, Π¹).
#[derive(Debug, Clone, PartialEq)]
pub struct QubitMeasurement<T> {
    projectors: [ComplexOperator<T>; 2],
}

impl<T: Real> QubitMeasurement<T> {
    pub fn new(p0: ComplexOperator<T>, p1: ComplexOperator<T>) -> Result<Self> {
        let tol = T::tolerance(1e-10);
        if p0.dim() != 2 || p1.dim() != 2 {
            return Err(Error::InvalidMeasurement("projectors must be 2×2".into()));
        }
        if !p0.is_projector(tol) || !p1.is_projector(tol) {
            return Err(Error::InvalidMeasurement("element is not a projector".into()));
        }
        if p0.add(&p1).max_abs_diff(&ComplexOperator::identity(2)) > tol {
            return Err(Error::InvalidMeasurement("Π⁰ + Π¹ ≠ I".into()));
        }
        Ok(QubitMeasurement { projectors: [p0, p1] })
    }

    /// Measurement whose outcome-0 element is `p0` and outcome-1 element is I − p0.
    pub fn from_projector(p0: ComplexOperator<T>) -> Result<Self> {
        let p1 = ComplexOperator::identity(2).sub(&p0);
        Self::new(p0, p1)
    }

    /// Basis |φ₀(θ)⟩ = cos θ|0⟩ + sin θ|1⟩, |φ₁(θ)⟩ = −sin θ|0⟩ + cos θ|1⟩.
    pub fn from_angle(theta: T) -> Self {
        let (s, co) = theta.sin_cos();
        let phi0 = [c(co), c(s)];
        let phi1 = [c(-s), c(co)];
        QubitMeasurement {
            projectors: [ComplexOperator::outer(&phi0), ComplexOperator::outer(&phi1)],
        }
    }

    /// Π⁰ = (I + n·σ)/2 for a unit Bloch vector n.
    pub fn from_bloch(n: [T; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !((norm - T::one()).abs() <= T::tolerance(1e-9)) {
            return Err(Error::InvalidMeasurement(format!("Bloch vector has norm {norm}")));
        }
        let n = [n[0] / norm, n[1] / norm, n[2] / norm];
        let half = lit::<T>(0.5);
        let p0 = ComplexOperator::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c(half * (T::one() + n[2])),
            (1, 1) => c(half * (T::one() - n[2])),
            (0, 1) => C::new(half * n[0], -half * n[1]),
            _ => C::new(half * n[0], half * n[1]),
        });
        Self::from_projector(p0)
    }

    /// Bloch vector from polar and azimuthal angles.
    pub fn from_bloch_angles(polar: T, azimuth: T) -> Self {
        let (sp, cp) = polar.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Self::from_bloch([sp * ca, sp * sa, cp]).expect("unit vector by construction")
    }

    /// Outcome fixed to `outcome` regardless of the state.
    pub fn constant(outcome: usize) -> Self {
        let (i, z) = (ComplexOperator::identity(2), ComplexOperator::zeros(2));
        let projectors = if outcome == 0 { [i, z] } else { [z, i] };
        QubitMeasurement { projectors }
    }

    pub fn projector(&self, outcome: usize) -> &ComplexOperator<T> {
        &self.projectors[outcome]
    }

    /// Rank of Π⁰ (0, 1 or 2).
    pub fn rank(&self) -> usize {
        let t = self.projectors[0].trace().re;
        t.round().to_usize().unwrap_or(0)
    }

    /// Unit Bloch vector of Π⁰ for rank-1 measurements.
    pub fn bloch_vector(&self) -> Option<[T; 3]> {
        if self.rank() != 1 {
            return None;
        }
        let p = &self.projectors[0];
        let two = lit::<T>(2.0);
        Some([
            two * p.get(0, 1).re,
            -two * p.get(0, 1).im,
            p.get(0, 0).re - p.get(1, 1).re,
        ])
    }

    /// (UΠ⁰U†, UΠ¹U†).
    pub fn conjugate(&self, u: &ComplexOperator<T>) -> Self {
        QubitMeasurement {
            projectors: [self.projectors[0].conjugate_by(u), self.projectors[1].conjugate_by(u)],
        }
    }
}

/// Shared state plus one measurement per player per type.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy<T> {
    pub state: QuantumState<T>,
    pub alice: [QubitMeasurement<T>; 2],
    pub bob: [QubitMeasurement<T>; 2],
}

impl<T: Real> QuantumStrategy<T> {
    pub fn new(state: QuantumState<T>, alice: [QubitMeasurement<T>; 2], bob: [QubitMeasurement<T>; 2]) -> Self {
        QuantumStrategy { state, alice, bob }
    }

    /// Real-plane measurements at the given angles.
    pub fn from_angles(state: QuantumState<T>, alice: [T; 2], bob: [T; 2]) -> Self {
        QuantumStrategy {
            state,
            alice: alice.map(QubitMeasurement::from_angle),
            bob: bob.map(QubitMeasurement::from_angle),
        }
    }

    pub fn measurements(&self, player: Player) -> &[QubitMeasurement<T>; 2] {
        match player {
            Player::Alice => &self.alice,
            Player::Bob => &self.bob,
        }
    }

    pub fn with_measurements(&self, player: Player, ms: [QubitMeasurement<T>; 2]) -> Self {
        let mut out = self.clone();
        match player {
            Player::Alice => out.alice = ms,
            Player::Bob => out.bob = ms,
        }
        out
    }

    pub fn with_state(&self, state: QuantumState<T>) -> Self {
        QuantumStrategy { state, ..self.clone() }
    }
}

/// Angles (A₀, A₁, B₀, B₁) = (0, π/4, π/8, −π/8).
pub fn fair_angles<T: Real>() -> ([T; 2], [T; 2]) {
    let pi = T::pi();
    let four = lit::<T>(4.0);
    let eight = lit::<T>(8.0);
    ([T::zero(), pi / four], [pi / eight, -pi / eight])
}

/// |φ⁺⟩ measured at the CHSH-optimal real-plane angles.
pub fn fair_strategy<T: Real>() -> QuantumStrategy<T> {
    let (a, b) = fair_angles();
    QuantumStrategy::from_angles(QuantumState::phi_plus(), a, b)
}

/// Local unitary on Bob's qubit mapping |φ⁺⟩ to Bell state `k`.
pub fn bell_rotation<T: Real>(k: usize) -> ComplexOperator<T> {
    match k {
        0 => pauli(0),
        1 => pauli(3),
        2 => pauli(1),
        _ => pauli(1).mul(&pauli(3)),
    }
}

/// The fair strategy moved to Bell state `k`: Bob's bases are rotated by
/// the same local unitary that maps φ⁺ to the target state.
pub fn bell_strategy<T: Real>(k: usize) -> Result<QuantumStrategy<T>> {
    let state = QuantumState::bell(k)?;
    let v = bell_rotation::<T>(k);
    let base = fair_strategy::<T>();
    Ok(QuantumStrategy {
        state,
        alice: base.alice,
        bob: [base.bob[0].conjugate(&v), base.bob[1].conjugate(&v)],
    })
}

/// p(y|x) = tr[(Π_A^{y_a}(x_a) ⊗ Π_B^{y_b}(x_b))·ρ].
pub fn behavior_of_quantum<T: Real>(m: &QuantumStrategy<T>) -> Result<Behavior<T>> {
    let rho = m.state.density();
    let mut p = [[[[T::zero(); 2]; 2]; 2]; 2];
    for (xa, xb, ya, yb) in cells() {
        let op = m.alice[xa].projector(ya).kron(m.bob[xb].projector(yb));
        p[xa][xb][ya][yb] = op.trace_product_re(rho);
    }
    Behavior::new(p)
}

/// S = Σ_x (−1)^{x_a x_b} E(x), E(x) = Σ_y (−1)^{y_a ⊕ y_b} p(y|x).
pub fn chsh_value<T: Scalar>(b: &Behavior<T>) -> T {
    let mut s = T::zero();
    for (xa, xb, ya, yb) in cells() {
        let p = b.get(xa, xb, ya, yb);
        let sign_pos = ((xa & xb) ^ ya ^ yb) == 0;
        s = if sign_pos { s + p } else { s - p };
    }
    s
}

/// ¼ Σ_x Pr[y_a ⊕ y_b = x_a ∧ x_b | x].
pub fn chsh_win_probability<T: Scalar>(b: &Behavior<T>) -> T {
    let mut w = T::zero();
    for (xa, xb, ya, yb) in cells() {
        if ya ^ yb == xa & xb {
            w = w + b.get(xa, xb, ya, yb);
        }
    }
    w / T::ratio(4, 1)
}
