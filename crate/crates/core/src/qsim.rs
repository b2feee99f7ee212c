//! Dense statevector simulation of small qubit registers.
//!
//! Amplitudes are stored in computational-basis order with **qubit 0 as the
//! leftmost (most significant) bit** of the basis label: in a 3-qubit
//! register, index `0b110 = 6` is `|110>`, i.e. qubits 0 and 1 read 1 and
//! qubit 2 reads 0.
//!
//! All operations are pure: they take a state by reference and return a new
//! one. Global phase carries no meaning here; compare states through
//! [`QubitState::fidelity`], which is phase-blind, rather than amplitude by
//! amplitude.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Hard cap on register width. 2^20 amplitudes (16 MiB) is the largest
/// register this crate will allocate.
pub const MAX_QUBITS: usize = 20;

/// Tolerance for state normalisation checks.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for Hermiticity and unitarity checks on supplied matrices.
pub const MATRIX_TOL: f64 = 1e-10;
/// Norm below which an entangled combination is rejected as degenerate.
pub const ZERO_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("register width {0} outside supported range 1..={max}", max = MAX_QUBITS)]
    BadWidth(usize),
    #[error("qubit index {index} out of range for {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("gate targets must be distinct (qubit {0} repeats)")]
    DuplicateTarget(usize),
    #[error("amplitude vector of length {0} is not a power of two in 1..=2^{max}", max = MAX_QUBITS)]
    BadLength(usize),
    #[error("state norm {0} violates normalisation (tolerance {NORM_TOL})")]
    NotNormalized(f64),
    #[error("dimension mismatch: {left}-qubit state vs {right}-qubit operand")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{rows}x{cols} matrix cannot act on {targets} target qubit(s)")]
    BadMatrixDim { rows: usize, cols: usize, targets: usize },
    #[error("matrix is not unitary (max |U^H U - I| entry = {0:.3e})")]
    NotUnitary(f64),
    #[error("observable is not Hermitian (max |A - A^H| entry = {0:.3e})")]
    NotHermitian(f64),
    #[error("superposition weights have |a|^2 + |b|^2 = {0}, expected 1")]
    BadWeights(f64),
    #[error("combined state has vanishing norm; inputs cancel")]
    ZeroNorm,
}

type Result<T> = std::result::Result<T, QsimError>;

// ---------------------------------------------------------------------------
// Gates
// ---------------------------------------------------------------------------

/// A single gate application. Angles are radians.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// Z rotation, `diag(e^{-i th/2}, e^{+i th/2})`.
    Rz { theta: f64, target: usize },
    /// Y rotation, `[[cos th/2, -sin th/2], [sin th/2, cos th/2]]`.
    Ry { theta: f64, target: usize },
    /// Hadamard.
    H { target: usize },
    /// Controlled NOT: flips `target` where `control` reads 1.
    Cnot { control: usize, target: usize },
    /// Exchanges two qubits.
    Swap { a: usize, b: usize },
    /// Arbitrary unitary over `targets`. Row/column order treats the first
    /// listed target as the most significant bit of the local index.
    Unitary {
        matrix: DMatrix<Complex64>,
        targets: Vec<usize>,
    },
}

impl Gate {
    /// Qubits the gate touches, in declaration order.
    pub fn targets(&self) -> Vec<usize> {
        match self {
            Gate::Rz { target, .. } | Gate::Ry { target, .. } | Gate::H { target } => {
                vec![*target]
            }
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Swap { a, b } => vec![*a, *b],
            Gate::Unitary { targets, .. } => targets.clone(),
        }
    }
}

fn ry_matrix(theta: f64) -> [Complex64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ]
}

fn rz_matrix(theta: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

fn h_matrix() -> [Complex64; 4] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [
        Complex64::new(h, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
    ]
}

/// Largest entry of |U^H U - I|; zero for an exactly unitary matrix.
fn unitarity_defect(m: &DMatrix<Complex64>) -> f64 {
    let gram = m.adjoint() * m;
    let n = gram.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let expect = if r == c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            worst = worst.max((gram[(r, c)] - expect).norm());
        }
    }
    worst
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let diff = m - m.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Observables
// ---------------------------------------------------------------------------

/// A Hermitian operator, either over the full register (`targets = None`)
/// or embedded on a listed qubit subset.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: DMatrix<Complex64>,
    targets: Option<Vec<usize>>,
}

impl Observable {
    /// Builds an observable after checking Hermiticity to [`MATRIX_TOL`].
    pub fn new(matrix: DMatrix<Complex64>, targets: Option<Vec<usize>>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || !matrix.nrows().is_power_of_two() {
            return Err(QsimError::BadMatrixDim {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
                targets: targets.as_ref().map_or(0, |t| t.len()),
            });
        }
        if let Some(ts) = &targets {
            if matrix.nrows() != 1usize << ts.len() {
                return Err(QsimError::BadMatrixDim {
                    rows: matrix.nrows(),
                    cols: matrix.ncols(),
                    targets: ts.len(),
                });
            }
        }
        let defect = hermiticity_defect(&matrix);
        if defect > MATRIX_TOL {
            return Err(QsimError::NotHermitian(defect));
        }
        Ok(Self { matrix, targets })
    }

    /// Pauli-Z on a single qubit.
    pub fn pauli_z(target: usize) -> Self {
        let matrix = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0))
            .map_with_location(|r, _, v| if r == 1 { -v } else { v });
        Self {
            matrix,
            targets: Some(vec![target]),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn targets(&self) -> Option<&[usize]> {
        self.targets.as_deref()
    }
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// A pure state of `n_qubits` qubits: 2^n complex amplitudes with unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl QubitState {
    /// The all-zeros basis state `|0...0>`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QsimError::BadWidth(n_qubits));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// A single computational basis state, given per-qubit bits
    /// (`bits[0]` is qubit 0, the most significant).
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let mut state = Self::zero(bits.len())?;
        let mut index = 0usize;
        for &b in bits {
            index = (index << 1) | usize::from(b != 0);
        }
        state.amps[0] = Complex64::new(0.0, 0.0);
        state.amps[index] = Complex64::new(1.0, 0.0);
        Ok(state)
    }

    /// Builds a state from raw amplitudes, which must number a power of two
    /// and have unit norm within [`NORM_TOL`].
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > (1usize << MAX_QUBITS) {
            return Err(QsimError::BadLength(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(QsimError::NotNormalized(norm));
        }
        // Scrub rounding drift so downstream norm checks stay exact.
        let amps = amps.into_iter().map(|z| z / norm).collect();
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Measurement probabilities per basis label, in index order.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// |<self|other>|, invariant under global phase on either side.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.n_qubits != other.n_qubits {
            return Err(QsimError::DimensionMismatch {
                left: self.n_qubits,
                right: other.n_qubits,
            });
        }
        let inner: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(inner.norm())
    }

    /// Kronecker product `self (x) other`; `self`'s qubits become the
    /// high-order block of the combined register.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let n_qubits = self.n_qubits + other.n_qubits;
        if n_qubits > MAX_QUBITS {
            return Err(QsimError::BadWidth(n_qubits));
        }
        let mut amps = Vec::with_capacity(1usize << n_qubits);
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(Self { n_qubits, amps })
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(QsimError::QubitOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Bit mask selecting qubit `q` in a basis index (qubit 0 = MSB).
    fn mask(&self, q: usize) -> usize {
        1usize << (self.n_qubits - 1 - q)
    }

    /// Applies one gate, returning the evolved state.
    pub fn apply(&self, gate: &Gate) -> Result<Self> {
        let targets = gate.targets();
        for &t in &targets {
            self.check_qubit(t)?;
        }
        for (i, &t) in targets.iter().enumerate() {
            if targets[..i].contains(&t) {
                return Err(QsimError::DuplicateTarget(t));
            }
        }
        let mut out = self.clone();
        match gate {
            Gate::Rz { theta, target } => out.apply_single(&rz_matrix(*theta), *target),
            Gate::Ry { theta, target } => out.apply_single(&ry_matrix(*theta), *target),
            Gate::H { target } => out.apply_single(&h_matrix(), *target),
            Gate::Cnot { control, target } => {
                let (mc, mt) = (self.mask(*control), self.mask(*target));
                for i in 0..out.amps.len() {
                    if i & mc != 0 && i & mt == 0 {
                        out.amps.swap(i, i | mt);
                    }
                }
            }
            Gate::Swap { a, b } => {
                let (ma, mb) = (self.mask(*a), self.mask(*b));
                for i in 0..out.amps.len() {
                    if i & ma != 0 && i & mb == 0 {
                        out.amps.swap(i, i ^ ma ^ mb);
                    }
                }
            }
            Gate::Unitary { matrix, targets } => {
                let dim = 1usize << targets.len();
                if matrix.nrows() != dim || matrix.ncols() != dim {
                    return Err(QsimError::BadMatrixDim {
                        rows: matrix.nrows(),
                        cols: matrix.ncols(),
                        targets: targets.len(),
                    });
                }
                let defect = unitarity_defect(matrix);
                if defect > MATRIX_TOL {
                    return Err(QsimError::NotUnitary(defect));
                }
                out.apply_block(matrix, targets);
            }
        }
        Ok(out)
    }

    /// Runs a gate sequence left to right.
    pub fn apply_all(&self, gates: &[Gate]) -> Result<Self> {
        let mut state = self.clone();
        for g in gates {
            state = state.apply(g)?;
        }
        Ok(state)
    }

    fn apply_single(&mut self, u: &[Complex64; 4], target: usize) {
        let m = self.mask(target);
        for i in 0..self.amps.len() {
            if i & m == 0 {
                let j = i | m;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = u[0] * a + u[1] * b;
                self.amps[j] = u[2] * a + u[3] * b;
            }
        }
    }

    /// Applies a dense matrix over a qubit subset. The caller has validated
    /// dimensions; the matrix need not be unitary (expectation values reuse
    /// this path for Hermitian operators).
    fn apply_block(&mut self, m: &DMatrix<Complex64>, targets: &[usize]) {
        let k = targets.len();
        let sub_dim = 1usize << k;
        let masks: Vec<usize> = targets.iter().map(|&t| self.mask(t)).collect();
        let combined: usize = masks.iter().sum();
        let mut gathered = vec![Complex64::new(0.0, 0.0); sub_dim];
        let mut indices = vec![0usize; sub_dim];
        for base in 0..self.amps.len() {
            if base & combined != 0 {
                continue;
            }
            for sub in 0..sub_dim {
                let mut idx = base;
                for (j, mask) in masks.iter().enumerate() {
                    if sub >> (k - 1 - j) & 1 == 1 {
                        idx |= mask;
                    }
                }
                indices[sub] = idx;
                gathered[sub] = self.amps[idx];
            }
            for row in 0..sub_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for (col, g) in gathered.iter().enumerate() {
                    acc += m[(row, col)] * g;
                }
                self.amps[indices[row]] = acc;
            }
        }
    }

    /// <self| A |self> for a Hermitian observable. The imaginary residue is
    /// below [`MATRIX_TOL`] by Hermiticity and is discarded.
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        let applied = match obs.targets() {
            Some(ts) => {
                for &t in ts {
                    self.check_qubit(t)?;
                }
                for (i, &t) in ts.iter().enumerate() {
                    if ts[..i].contains(&t) {
                        return Err(QsimError::DuplicateTarget(t));
                    }
                }
                let mut out = self.clone();
                out.apply_block(obs.matrix(), ts);
                out
            }
            None => {
                if obs.matrix().nrows() != self.amps.len() {
                    return Err(QsimError::DimensionMismatch {
                        left: self.n_qubits,
                        right: obs.matrix().nrows().trailing_zeros() as usize,
                    });
                }
                let mut out = self.clone();
                let targets: Vec<usize> = (0..self.n_qubits).collect();
                out.apply_block(obs.matrix(), &targets);
                out
            }
        };
        let value: Complex64 = self
            .amps
            .iter()
            .zip(&applied.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        debug_assert!(value.im.abs() < MATRIX_TOL * self.amps.len() as f64);
        Ok(value.re)
    }
}

/// Weighted combination `alpha|a> + beta|b>`. The weights must satisfy
/// |alpha|^2 + |beta|^2 = 1; the result must come out normalised (it always
/// does for orthogonal inputs) and is rejected otherwise.
pub fn superpose(
    a: &QubitState,
    b: &QubitState,
    alpha: Complex64,
    beta: Complex64,
) -> Result<QubitState> {
    if a.n_qubits != b.n_qubits {
        return Err(QsimError::DimensionMismatch {
            left: a.n_qubits,
            right: b.n_qubits,
        });
    }
    let weight = alpha.norm_sqr() + beta.norm_sqr();
    if (weight - 1.0).abs() > NORM_TOL {
        return Err(QsimError::BadWeights(weight));
    }
    let amps: Vec<Complex64> = a
        .amps
        .iter()
        .zip(&b.amps)
        .map(|(x, y)| alpha * x + beta * y)
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(QsimError::NotNormalized(norm));
    }
    Ok(QubitState {
        n_qubits: a.n_qubits,
        amps: amps.into_iter().map(|z| z / norm).collect(),
    })
}

/// Symmetrised two-subsystem combination: normalise(|s1 s2> + |s2 s1>).
///
/// For unit-norm inputs the combined norm is sqrt(2 + 2|<s1|s2>|^2) and
/// never drops below sqrt(2); the zero-norm branch guards against
/// pathological (denormalised) callers rather than any reachable state of
/// valid inputs.
pub fn entangle_pair(s1: &QubitState, s2: &QubitState) -> Result<QubitState> {
    if s1.n_qubits != s2.n_qubits {
        return Err(QsimError::DimensionMismatch {
            left: s1.n_qubits,
            right: s2.n_qubits,
        });
    }
    let forward = s1.tensor(s2)?;
    let reverse = s2.tensor(s1)?;
    let amps: Vec<Complex64> = forward
        .amps
        .iter()
        .zip(&reverse.amps)
        .map(|(x, y)| x + y)
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < ZERO_NORM_TOL {
        return Err(QsimError::ZeroNorm);
    }
    Ok(QubitState {
        n_qubits: forward.n_qubits,
        amps: amps.into_iter().map(|z| z / norm).collect(),
    })
}
