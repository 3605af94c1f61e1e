//! Operators and states on the composite space qubit₀ ⊗ … ⊗ qubit_{N−1} ⊗ oscillator.
//!
//! Qubit basis order is (|↑⟩, |↓⟩) with σ_z|↑⟩ = +|↑⟩. The oscillator factor
//! is the Fock basis truncated at `n_max = fock_dim − 1`, and it is always the
//! last (fastest-varying) tensor factor.

use std::ops::{Add, Mul, Sub};

use ndarray::{s, Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::linalg::{self, dagger, hermiticity_defect};
use crate::{Error, Result, C64};

/// Hermiticity tolerance for density matrices.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Unit-trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-9;
/// Smallest admissible eigenvalue of a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Shape of a truncated qubit ⊗ Fock space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpec {
    n_qubits: usize,
    fock_dim: usize,
}

impl HilbertSpec {
    pub fn new(n_qubits: usize, fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidSpec(format!("fock_dim must be >= 2, got {fock_dim}")));
        }
        if n_qubits > 12 {
            return Err(Error::InvalidSpec(format!("{n_qubits} qubits is beyond dense storage")));
        }
        Ok(HilbertSpec { n_qubits, fock_dim })
    }

    /// Oscillator-only space.
    pub fn oscillator(fock_dim: usize) -> Result<Self> {
        Self::new(0, fock_dim)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn n_max(&self) -> usize {
        self.fock_dim - 1
    }

    pub fn qubit_dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.qubit_dim() * self.fock_dim
    }

    /// Same qubit count with a different Fock truncation.
    pub fn with_fock_dim(&self, fock_dim: usize) -> Result<Self> {
        Self::new(self.n_qubits, fock_dim)
    }

    /// Flat basis index of `|spins⟩ ⊗ |n⟩`.
    pub fn index(&self, spins: &[Spin], n: usize) -> usize {
        debug_assert_eq!(spins.len(), self.n_qubits);
        debug_assert!(n < self.fock_dim);
        let q = spins.iter().fold(0usize, |acc, s| 2 * acc + s.bit());
        q * self.fock_dim + n
    }

    fn check_qubit(&self, j: usize) -> Result<()> {
        if j >= self.n_qubits {
            return Err(Error::QubitIndex { index: j, n_qubits: self.n_qubits });
        }
        Ok(())
    }
}

/// Computational basis state of one qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    fn bit(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    /// σ_z eigenvalue.
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn ket(self) -> Array1<C64> {
        let mut v = Array1::zeros(2);
        v[self.bit()] = ONE;
        v
    }

    pub fn projector(self) -> Array2<C64> {
        let mut p = Array2::zeros((2, 2));
        p[[self.bit(), self.bit()]] = ONE;
        p
    }
}

/// Kronecker product of dense matrices.
pub fn kron(a: ArrayView2<'_, C64>, b: ArrayView2<'_, C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == ZERO {
            continue;
        }
        out.slice_mut(s![i * br..(i + 1) * br, j * bc..(j + 1) * bc]).assign(&b.mapv(|y| x * y));
    }
    out
}

fn kron_vec(a: &Array1<C64>, b: &Array1<C64>) -> Array1<C64> {
    let mut out = Array1::zeros(a.len() * b.len());
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i * b.len() + j] = x * y;
        }
    }
    out
}

/// Linear operator on a [`HilbertSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    spec: HilbertSpec,
    matrix: Array2<C64>,
}

impl Operator {
    pub fn new(spec: HilbertSpec, matrix: Array2<C64>) -> Result<Self> {
        if matrix.dim() != (spec.dim(), spec.dim()) {
            return Err(Error::SpecMismatch(format!(
                "matrix is {:?}, space has dimension {}",
                matrix.dim(),
                spec.dim()
            )));
        }
        Ok(Operator { spec, matrix })
    }

    pub fn zeros(spec: HilbertSpec) -> Self {
        Operator { spec, matrix: Array2::zeros((spec.dim(), spec.dim())) }
    }

    pub fn identity(spec: HilbertSpec) -> Self {
        Operator { spec, matrix: Array2::eye(spec.dim()) }
    }

    /// Places a single-qubit (2×2) matrix at slot `j`, identity elsewhere.
    pub fn embed_qubit(spec: HilbertSpec, j: usize, local: ArrayView2<'_, C64>) -> Result<Self> {
        spec.check_qubit(j)?;
        let mut m = Array2::<C64>::eye(1);
        for k in 0..spec.n_qubits() {
            m = if k == j { kron(m.view(), local) } else { kron(m.view(), Array2::eye(2).view()) };
        }
        let m = kron(m.view(), Array2::eye(spec.fock_dim()).view());
        Ok(Operator { spec, matrix: m })
    }

    /// Places a `fock_dim × fock_dim` matrix on the oscillator factor.
    pub fn embed_oscillator(spec: HilbertSpec, local: ArrayView2<'_, C64>) -> Result<Self> {
        if local.dim() != (spec.fock_dim(), spec.fock_dim()) {
            return Err(Error::SpecMismatch("oscillator factor has the wrong size".into()));
        }
        let m = kron(Array2::eye(spec.qubit_dim()).view(), local);
        Ok(Operator { spec, matrix: m })
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn dagger(&self) -> Self {
        Operator { spec: self.spec, matrix: dagger(self.matrix.view()) }
    }

    pub fn scale(&self, k: impl Into<C64>) -> Self {
        let k = k.into();
        Operator { spec: self.spec, matrix: self.matrix.mapv(|x| x * k) }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    /// Max elementwise |A − A†|.
    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(self.matrix.view())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Max elementwise modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalues, assuming the operator is Hermitian.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(self.matrix.view())
    }

    /// `U A U†` for a unitary `U`.
    pub fn conjugated_by(&self, u: &Operator) -> Self {
        let m = u.matrix.dot(&self.matrix).dot(&dagger(u.matrix.view()));
        Operator { spec: self.spec, matrix: m }
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.spec, rhs.spec, "operator spaces differ");
        Operator { spec: self.spec, matrix: &self.matrix + &rhs.matrix }
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.spec, rhs.spec, "operator spaces differ");
        Operator { spec: self.spec, matrix: &self.matrix - &rhs.matrix }
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        assert_eq!(self.spec, rhs.spec, "operator spaces differ");
        Operator { spec: self.spec, matrix: self.matrix.dot(&rhs.matrix) }
    }
}

/// Truncated ladder operators of the oscillator.
#[derive(Clone, Debug)]
pub struct FockOps {
    pub annihilation: Operator,
    pub creation: Operator,
    pub number: Operator,
}

/// `b`, `b†` and `b†b` embedded in `spec`.
pub fn fock_ops(spec: HilbertSpec) -> FockOps {
    let f = spec.fock_dim();
    let mut a = Array2::<C64>::zeros((f, f));
    for n in 0..f - 1 {
        a[[n, n + 1]] = C64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    let annihilation = Operator::embed_oscillator(spec, a.view()).expect("sizes match");
    let creation = annihilation.dagger();
    let number = &creation * &annihilation;
    FockOps { annihilation, creation, number }
}

/// Pauli operators of one qubit.
#[derive(Clone, Debug)]
pub struct PauliOps {
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub s_plus: Operator,
    pub s_minus: Operator,
}

pub fn pauli_x() -> Array2<C64> {
    ndarray::array![[ZERO, ONE], [ONE, ZERO]]
}

pub fn pauli_y() -> Array2<C64> {
    let i = C64::new(0.0, 1.0);
    ndarray::array![[ZERO, -i], [i, ZERO]]
}

pub fn pauli_z() -> Array2<C64> {
    ndarray::array![[ONE, ZERO], [ZERO, -ONE]]
}

/// Pauli matrices at slot `j`; σ_± = (σ_x ± iσ_y)/2.
pub fn qubit_ops(spec: HilbertSpec, j: usize) -> Result<PauliOps> {
    let i = C64::new(0.0, 1.0);
    let sp = (&pauli_x() + &pauli_y().mapv(|x| x * i)).mapv(|x| x * 0.5);
    let sm = (&pauli_x() - &pauli_y().mapv(|x| x * i)).mapv(|x| x * 0.5);
    Ok(PauliOps {
        sx: Operator::embed_qubit(spec, j, pauli_x().view())?,
        sy: Operator::embed_qubit(spec, j, pauli_y().view())?,
        sz: Operator::embed_qubit(spec, j, pauli_z().view())?,
        s_plus: Operator::embed_qubit(spec, j, sp.view())?,
        s_minus: Operator::embed_qubit(spec, j, sm.view())?,
    })
}

/// Pure state on a [`HilbertSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    spec: HilbertSpec,
    amplitudes: Array1<C64>,
}

impl StateVector {
    pub fn new(spec: HilbertSpec, amplitudes: Array1<C64>) -> Result<Self> {
        if amplitudes.len() != spec.dim() {
            return Err(Error::SpecMismatch(format!(
                "vector has length {}, space has dimension {}",
                amplitudes.len(),
                spec.dim()
            )));
        }
        Ok(StateVector { spec, amplitudes })
    }

    /// Basis state `|spins⟩ ⊗ |n⟩`.
    pub fn basis(spec: HilbertSpec, spins: &[Spin], n: usize) -> Result<Self> {
        if spins.len() != spec.n_qubits() || n >= spec.fock_dim() {
            return Err(Error::SpecMismatch("basis label does not fit the space".into()));
        }
        let mut v = Array1::zeros(spec.dim());
        v[spec.index(spins, n)] = ONE;
        Ok(StateVector { spec, amplitudes: v })
    }

    /// `|s₀⟩ ⊗ … ⊗ |s_{N−1}⟩ ⊗ |osc⟩`.
    pub fn product(spins: &[Array1<C64>], oscillator: &StateVector) -> Result<Self> {
        if oscillator.spec.n_qubits() != 0 {
            return Err(Error::SpecMismatch("oscillator factor must be qubit-free".into()));
        }
        let spec = HilbertSpec::new(spins.len(), oscillator.spec.fock_dim())?;
        let mut v = Array1::from_elem(1, ONE);
        for s in spins {
            v = kron_vec(&v, s);
        }
        Ok(StateVector { spec, amplitudes: kron_vec(&v, &oscillator.amplitudes) })
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("zero vector cannot be normalized".into()));
        }
        Ok(StateVector { spec: self.spec, amplitudes: self.amplitudes.mapv(|x| x / n) })
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &StateVector) -> C64 {
        linalg::inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn scale(&self, k: C64) -> Self {
        StateVector { spec: self.spec, amplitudes: self.amplitudes.mapv(|x| x * k) }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch("cannot add vectors from different spaces".into()));
        }
        Ok(StateVector { spec: self.spec, amplitudes: &self.amplitudes + &other.amplitudes })
    }

    pub fn apply(&self, op: &Operator) -> Result<Self> {
        if op.spec() != self.spec {
            return Err(Error::SpecMismatch("operator and state spaces differ".into()));
        }
        Ok(StateVector { spec: self.spec, amplitudes: op.matrix().dot(&self.amplitudes) })
    }

    pub fn density(&self) -> DensityMatrix {
        let v = &self.amplitudes;
        let m = Array2::from_shape_fn((v.len(), v.len()), |(i, j)| v[i] * v[j].conj());
        DensityMatrix { spec: self.spec, matrix: m }
    }
}

/// Density operator. Every public constructor checks Hermiticity, unit trace
/// and positivity against [`HERMITIAN_TOL`], [`TRACE_TOL`], [`POSITIVITY_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    spec: HilbertSpec,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(spec: HilbertSpec, matrix: Array2<C64>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(spec, matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Shape check only. Used by numerical routines that restore the
    /// invariants themselves.
    pub fn from_matrix_unchecked(spec: HilbertSpec, matrix: Array2<C64>) -> Result<Self> {
        if matrix.dim() != (spec.dim(), spec.dim()) {
            return Err(Error::SpecMismatch(format!(
                "matrix is {:?}, space has dimension {}",
                matrix.dim(),
                spec.dim()
            )));
        }
        Ok(DensityMatrix { spec, matrix })
    }

    pub fn pure(state: &StateVector) -> Result<Self> {
        let rho = state.normalized()?.density();
        Ok(rho)
    }

    /// Oscillator Gibbs state with mean occupation `nbar`, renormalized on
    /// the truncated space.
    pub fn thermal(spec: HilbertSpec, nbar: f64) -> Result<Self> {
        if spec.n_qubits() != 0 {
            return Err(Error::SpecMismatch("thermal state is oscillator-only".into()));
        }
        if !(nbar >= 0.0) {
            return Err(Error::InvalidArgument(format!("occupation {nbar} must be >= 0")));
        }
        let f = spec.fock_dim();
        let mut m = Array2::zeros((f, f));
        if nbar == 0.0 {
            m[[0, 0]] = ONE;
        } else {
            let r = nbar / (1.0 + nbar);
            let weights: Vec<f64> = (0..f).map(|n| r.powi(n as i32)).collect();
            let z: f64 = weights.iter().sum();
            for (n, w) in weights.iter().enumerate() {
                m[[n, n]] = C64::new(w / z, 0.0);
            }
        }
        Ok(DensityMatrix { spec, matrix: m })
    }

    /// `ρ_q₀ ⊗ … ⊗ ρ_m` from 2×2 qubit states and an oscillator state.
    pub fn product(qubits: &[Array2<C64>], oscillator: &DensityMatrix) -> Result<Self> {
        if oscillator.spec.n_qubits() != 0 {
            return Err(Error::SpecMismatch("oscillator factor must be qubit-free".into()));
        }
        let spec = HilbertSpec::new(qubits.len(), oscillator.spec.fock_dim())?;
        let mut m = Array2::<C64>::eye(1);
        for q in qubits {
            m = kron(m.view(), q.view());
        }
        DensityMatrix::new(spec, kron(m.view(), oscillator.matrix.view()))
    }

    pub fn spec(&self) -> HilbertSpec {
        self.spec
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(self.matrix.view())
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(self.matrix.view())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::eigvalsh(self.matrix.view())?.first().copied().unwrap_or(0.0))
    }

    /// Checks the three density-matrix invariants.
    pub fn validate(&self) -> Result<()> {
        let herm = self.hermiticity_defect();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {herm:e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `(ρ + ρ†)/2`
    pub fn hermitized(&self) -> Self {
        let m = (&self.matrix + &dagger(self.matrix.view())).mapv(|x| x * 0.5);
        DensityMatrix { spec: self.spec, matrix: m }
    }

    /// Divides by the trace.
    pub fn renormalized(&self) -> Result<Self> {
        let tr = self.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("cannot renormalize trace {tr}")));
        }
        Ok(DensityMatrix { spec: self.spec, matrix: self.matrix.mapv(|x| x / tr) })
    }

    /// `U ρ U†`
    pub fn conjugated_by(&self, u: &Operator) -> Result<Self> {
        if u.spec() != self.spec {
            return Err(Error::SpecMismatch("unitary acts on a different space".into()));
        }
        let m = u.matrix().dot(&self.matrix).dot(&dagger(u.matrix().view()));
        Ok(DensityMatrix { spec: self.spec, matrix: m })
    }

    /// Reduced state of the qubits (oscillator traced out), as a
    /// `2^N × 2^N` matrix.
    pub fn qubit_marginal(&self) -> Array2<C64> {
        let q = self.spec.qubit_dim();
        let f = self.spec.fock_dim();
        Array2::from_shape_fn((q, q), |(a, b)| (0..f).map(|n| self.matrix[[a * f + n, b * f + n]]).sum())
    }
}

/// `tr(op ρ)`
pub fn expectation(rho: &DensityMatrix, op: &Operator) -> Result<C64> {
    if rho.spec() != op.spec() {
        return Err(Error::SpecMismatch("operator and state spaces differ".into()));
    }
    let (a, r) = (op.matrix(), rho.matrix());
    let d = a.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += a[[i, k]] * r[[k, i]];
        }
    }
    Ok(acc)
}

/// Traces out every qubit, leaving the oscillator state.
pub fn partial_trace_to_oscillator(rho: &DensityMatrix) -> DensityMatrix {
    let spec = rho.spec();
    let f = spec.fock_dim();
    let mut m = Array2::<C64>::zeros((f, f));
    for q in 0..spec.qubit_dim() {
        m += &rho.matrix().slice(s![q * f..(q + 1) * f, q * f..(q + 1) * f]);
    }
    DensityMatrix { spec: HilbertSpec::oscillator(f).expect("fock_dim already validated"), matrix: m }
}

/// Smallest `n_max` that keeps a coherent amplitude's Poisson tail negligible.
pub fn truncation_guard(amplitude: f64) -> usize {
    (amplitude * amplitude + 5.0 * amplitude).ceil() as usize
}

/// Checks `n_max ≥ ⌈|α|² + 5|α|⌉`.
pub fn check_truncation(spec: HilbertSpec, amplitude: f64) -> Result<()> {
    let required = truncation_guard(amplitude);
    if spec.n_max() < required {
        return Err(Error::TruncationRisk { amplitude, required, n_max: spec.n_max() });
    }
    Ok(())
}

/// Coherent state `|α⟩` on an oscillator-only space, renormalized on the
/// truncated basis.
pub fn coherent_state(spec: HilbertSpec, alpha: C64) -> Result<StateVector> {
    if spec.n_qubits() != 0 {
        return Err(Error::SpecMismatch("coherent states live on the oscillator factor".into()));
    }
    check_truncation(spec, alpha.norm())?;
    let f = spec.fock_dim();
    let mut v = Array1::<C64>::zeros(f);
    v[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..f {
        v[n] = v[n - 1] * alpha / (n as f64).sqrt();
    }
    StateVector { spec, amplitudes: v }.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, f: usize) -> HilbertSpec {
        HilbertSpec::new(n, f).unwrap()
    }

    #[test]
    fn smallest_truncation_ladder() {
        let ops = fock_ops(spec(0, 2));
        let a = ops.annihilation.matrix();
        assert_eq!(a[[0, 1]], ONE);
        assert_eq!(a[[0, 0]], ZERO);
        assert_eq!(a[[1, 0]], ZERO);
        assert_eq!(a[[1, 1]], ZERO);
    }

    #[test]
    fn ladder_matrix_elements() {
        let ops = fock_ops(spec(0, 12));
        for n in 0..11 {
            assert_abs_diff_eq!(ops.annihilation.matrix()[[n, n + 1]].re, ((n + 1) as f64).sqrt());
        }
        assert_eq!(ops.creation, ops.annihilation.dagger());
        for n in 0..12 {
            assert_abs_diff_eq!(ops.number.matrix()[[n, n]].re, n as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn ladder_commutator_truncation_artifact() {
        let f = 9;
        let ops = fock_ops(spec(0, f));
        let c = ops.annihilation.commutator(&ops.creation);
        for i in 0..f {
            for j in 0..f {
                let expected = if i != j {
                    0.0
                } else if i < f - 1 {
                    1.0
                } else {
                    -((f - 1) as f64)
                };
                assert_abs_diff_eq!(c.matrix()[[i, j]].re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(c.matrix()[[i, j]].im, 0.0);
            }
        }
    }

    #[test]
    fn pauli_z_sign_convention() {
        // fock_dim is at least 2, so σ_z appears twice along the diagonal.
        let p = qubit_ops(spec(1, 2), 0).unwrap();
        let diag: Vec<f64> = p.sz.matrix().diag().iter().map(|x| x.re).collect();
        assert_eq!(diag, vec![1.0, 1.0, -1.0, -1.0]);
        let up = StateVector::basis(spec(1, 2), &[Spin::Up], 0).unwrap();
        let down = p.s_minus.matrix().dot(up.amplitudes());
        assert_eq!(down[spec(1, 2).index(&[Spin::Down], 0)], ONE);
    }

    #[test]
    fn pauli_involution_and_disjoint_commutation() {
        let sp = spec(2, 3);
        for j in 0..2 {
            let p = qubit_ops(sp, j).unwrap();
            let sq = &p.sx * &p.sx;
            assert_abs_diff_eq!((&sq - &Operator::identity(sp)).max_abs(), 0.0, epsilon = 1e-15);
        }
        let p0 = qubit_ops(sp, 0).unwrap();
        let p1 = qubit_ops(sp, 1).unwrap();
        assert_eq!(p0.sz.commutator(&p1.sx).max_abs(), 0.0);
        assert!(matches!(qubit_ops(sp, 2), Err(Error::QubitIndex { .. })));
    }

    #[test]
    fn expectation_basics() {
        let sp = spec(0, 40);
        let ops = fock_ops(sp);
        let vac = DensityMatrix::pure(&StateVector::basis(sp, &[], 0).unwrap()).unwrap();
        assert_abs_diff_eq!(expectation(&vac, &ops.number).unwrap().norm(), 0.0);
        let th = DensityMatrix::thermal(sp, 0.7).unwrap();
        let one = expectation(&th, &Operator::identity(sp)).unwrap();
        assert_abs_diff_eq!(one.re, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn thermal_number_oracle() {
        // Untruncated Gibbs mean is N̄; truncation at 40 levels with N̄ = 2
        // leaves a relative tail (2/3)^40 ≈ 1e-7.
        let sp = spec(0, 40);
        let th = DensityMatrix::thermal(sp, 2.0).unwrap();
        let n = expectation(&th, &fock_ops(sp).number).unwrap();
        assert_abs_diff_eq!(n.re, 2.0, epsilon = 1e-5);
        assert_abs_diff_eq!(n.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_of_product_and_bell_states() {
        let osc = spec(0, 4);
        let rho_m = DensityMatrix::thermal(osc, 0.4).unwrap();
        let rho_q = ndarray::array![[C64::new(0.3, 0.0), C64::new(0.1, 0.2)], [C64::new(0.1, -0.2), C64::new(0.7, 0.0)]];
        let prod = DensityMatrix::product(&[rho_q], &rho_m).unwrap();
        let red = partial_trace_to_oscillator(&prod);
        assert_abs_diff_eq!((red.matrix() - rho_m.matrix()).iter().map(|x| x.norm()).fold(0.0, f64::max), 0.0, epsilon = 1e-15);

        let sp = spec(1, 4);
        let a = StateVector::basis(sp, &[Spin::Up], 0).unwrap();
        let b = StateVector::basis(sp, &[Spin::Down], 1).unwrap();
        let bell = a.add(&b).unwrap().normalized().unwrap();
        let red = partial_trace_to_oscillator(&DensityMatrix::pure(&bell).unwrap());
        assert_abs_diff_eq!(red.matrix()[[0, 0]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[[1, 1]].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[[0, 1]].norm(), 0.0);
    }

    #[test]
    fn coherent_state_properties() {
        let sp = spec(0, 60);
        let vac = coherent_state(sp, ZERO).unwrap();
        assert_eq!(vac.amplitudes()[0], ONE);

        let alpha = C64::new(1.2, -0.7);
        let psi = coherent_state(sp, alpha).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-10);
        let a_psi = psi.apply(&fock_ops(sp).annihilation).unwrap();
        assert_abs_diff_eq!((psi.inner(&a_psi) - alpha).norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn coherent_overlap_closed_form() {
        let sp = spec(0, 80);
        let (a, b) = (C64::new(1.5, 0.5), C64::new(-0.3, 1.1));
        let got = coherent_state(sp, a).unwrap().inner(&coherent_state(sp, b).unwrap());
        let want = (-(a.norm_sqr() + b.norm_sqr()) / 2.0 + a.conj() * b).exp();
        assert_abs_diff_eq!((got - want).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn coherent_guard_rejects_small_truncation() {
        let err = coherent_state(spec(0, 20), C64::new(4.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::TruncationRisk { required: 36, .. }));
    }

    #[test]
    fn density_validation_rejects_bad_states() {
        let sp = spec(0, 2);
        let bad_trace = ndarray::array![[C64::new(0.6, 0.0), ZERO], [ZERO, C64::new(0.6, 0.0)]];
        assert!(DensityMatrix::new(sp, bad_trace).is_err());
        let negative = ndarray::array![[C64::new(1.1, 0.0), ZERO], [ZERO, C64::new(-0.1, 0.0)]];
        assert!(DensityMatrix::new(sp, negative).is_err());
        let nonherm = ndarray::array![[C64::new(0.5, 0.0), C64::new(0.1, 0.0)], [ZERO, C64::new(0.5, 0.0)]];
        assert!(DensityMatrix::new(sp, nonherm).is_err());
    }
}
