//! Feature-to-state encoders and qubit budget arithmetic.
//!
//! Three encoders are provided:
//!
//! * **angle** — one qubit per feature, `RY(pi * x_i)` applied to `|0>`, for
//!   features already scaled to `[0, 1]`;
//! * **amplitude** — the feature vector itself becomes the amplitude vector,
//!   zero-padded at the tail to the next power of two and divided by its
//!   Euclidean norm;
//! * **basis** — a bit pattern selects a single computational basis state.
//!
//! The budget formulas count qubits for an encoder stage
//! (`ceil(log2(n_features))`), a layered variational stage, and their sum.

use crate::qsim::{Gate, QsimError, QubitState, MAX_QUBITS};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncodingError {
    #[error("feature vector must be non-empty")]
    Empty,
    #[error("feature {index} is {value}, not a finite number")]
    NotFinite { index: usize, value: f64 },
    #[error("feature {index} is {value}, outside [0, 1] required by the angle encoder")]
    OutOfRange { index: usize, value: f64 },
    #[error("feature vector norm is zero; amplitudes cannot be normalised")]
    ZeroNorm,
    #[error("bit {index} is {value}; basis encoding accepts only 0 or 1")]
    NotABit { index: usize, value: f64 },
    #[error("{needed} qubits needed, register cap is {max}", max = MAX_QUBITS)]
    TooWide { needed: usize },
    #[error(transparent)]
    Sim(#[from] QsimError),
}

type Result<T> = std::result::Result<T, EncodingError>;

/// A validated feature vector: finite entries, at least one of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(EncodingError::Empty);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(EncodingError::NotFinite { index, value });
            }
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // by construction
    }
}

/// Which encoder a model front-ends with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Angle,
    Amplitude,
    Basis,
}

impl EncoderKind {
    pub fn label(&self) -> &'static str {
        match self {
            EncoderKind::Angle => "angle",
            EncoderKind::Amplitude => "amplitude",
            EncoderKind::Basis => "basis",
        }
    }

    /// Register width this encoder needs for `n_features` inputs.
    pub fn width_for(&self, n_features: usize) -> usize {
        match self {
            EncoderKind::Angle | EncoderKind::Basis => n_features,
            // A lone feature still needs one qubit to hold a state.
            EncoderKind::Amplitude => ceil_log2(n_features).max(1),
        }
    }

    pub fn encode(&self, features: &FeatureVector) -> Result<QubitState> {
        match self {
            EncoderKind::Angle => angle_encode(features),
            EncoderKind::Amplitude => amplitude_encode(features),
            EncoderKind::Basis => basis_encode(features),
        }
    }
}

/// ceil(log2(n)) for positive n; 0 for n = 1.
fn ceil_log2(n: usize) -> usize {
    debug_assert!(n > 0);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

/// One qubit per feature: `RY(pi * x_i)|0>` on qubit `i`.
///
/// `x = 0` leaves the qubit in `|0>`, `x = 1` takes it to `|1>`, and values
/// in between interpolate on the Bloch meridian.
pub fn angle_encode(features: &FeatureVector) -> Result<QubitState> {
    let n = features.len();
    if n > MAX_QUBITS {
        return Err(EncodingError::TooWide { needed: n });
    }
    for (index, &value) in features.values().iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(EncodingError::OutOfRange { index, value });
        }
    }
    let mut state = QubitState::zero(n)?;
    for (i, &x) in features.values().iter().enumerate() {
        state = state.apply(&Gate::Ry {
            theta: std::f64::consts::PI * x,
            target: i,
        })?;
    }
    Ok(state)
}

/// Features as amplitudes: zero-pad at the tail to the next power of two,
/// then divide by the Euclidean norm.
pub fn amplitude_encode(features: &FeatureVector) -> Result<QubitState> {
    let n_qubits = EncoderKind::Amplitude.width_for(features.len());
    if n_qubits > MAX_QUBITS {
        return Err(EncodingError::TooWide { needed: n_qubits });
    }
    let dim = 1usize << n_qubits;
    let norm = features
        .values()
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(EncodingError::ZeroNorm);
    }
    let mut amps = vec![num_complex::Complex64::new(0.0, 0.0); dim];
    for (i, &x) in features.values().iter().enumerate() {
        amps[i] = num_complex::Complex64::new(x / norm, 0.0);
    }
    Ok(QubitState::from_amplitudes(amps)?)
}

/// Bit pattern to basis state; features must be exactly 0.0 or 1.0.
pub fn basis_encode(features: &FeatureVector) -> Result<QubitState> {
    let n = features.len();
    if n > MAX_QUBITS {
        return Err(EncodingError::TooWide { needed: n });
    }
    let mut bits = Vec::with_capacity(n);
    for (index, &value) in features.values().iter().enumerate() {
        if value == 0.0 {
            bits.push(0u8);
        } else if value == 1.0 {
            bits.push(1u8);
        } else {
            return Err(EncodingError::NotABit { index, value });
        }
    }
    Ok(QubitState::basis(&bits)?)
}

/// Qubit counts for an encoder stage, a layered variational stage, and the
/// architecture total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitBudget {
    /// `ceil(log2(n_features))` — compressed encoder register.
    pub encoder: usize,
    /// `encoder + layers * qubits_per_gate` — variational stage.
    pub variational: usize,
    /// `encoder + variational`.
    pub total: usize,
}

/// Budget arithmetic: `Q_enc = ceil(log2(N_f))`,
/// `Q_vqc = Q_enc + L * Q_gate`, `Q_total = Q_enc + Q_vqc`.
pub fn qubit_budget(n_features: usize, layers: usize, qubits_per_gate: usize) -> Result<QubitBudget> {
    if n_features == 0 {
        return Err(EncodingError::Empty);
    }
    let encoder = ceil_log2(n_features);
    let variational = encoder + layers * qubits_per_gate;
    Ok(QubitBudget {
        encoder,
        variational,
        total: encoder + variational,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::Observable;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn angle_encode_endpoints_hit_basis_states() {
        let s = angle_encode(&fv(&[0.0, 1.0])).unwrap();
        // Qubit 0 stays |0>, qubit 1 rotates to |1> (up to sign): |01>.
        let probs = s.probabilities();
        assert!((probs[0b01] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_encode_half_gives_balanced_qubit() {
        let s = angle_encode(&fv(&[0.5])).unwrap();
        let probs = s.probabilities();
        assert!((probs[0] - 0.5).abs() < 1e-12);
        assert!((probs[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn angle_encode_z_expectation_is_cos_pi_x() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let x: f64 = rng.gen_range(0.0..=1.0);
            let s = angle_encode(&fv(&[x])).unwrap();
            let z = s.expectation(&Observable::pauli_z(0)).unwrap();
            assert!((z - (std::f64::consts::PI * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_encode_rejects_out_of_range() {
        assert!(matches!(
            angle_encode(&fv(&[1.2])),
            Err(EncodingError::OutOfRange { index: 0, .. })
        ));
        assert!(matches!(
            angle_encode(&fv(&[-0.1, 0.5])),
            Err(EncodingError::OutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn angle_encode_distinct_inputs_give_distinct_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let a: f64 = rng.gen_range(0.0..0.999);
            let delta: f64 = rng.gen_range(1e-6..1e-3);
            let b = (a + delta).min(1.0);
            let sa = angle_encode(&fv(&[a, 0.3])).unwrap();
            let sb = angle_encode(&fv(&[b, 0.3])).unwrap();
            let f = sa.fidelity(&sb).unwrap();
            assert!(
                f < 1.0 - 1e-14,
                "states for {a} and {b} are indistinguishable (fidelity {f})"
            );
        }
    }

    #[test]
    fn amplitude_encode_two_features() {
        // [1, 0] is already normalised: |0>.
        let s = amplitude_encode(&fv(&[1.0, 0.0])).unwrap();
        assert_eq!(s.n_qubits(), 1);
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
        // [3, 4] normalises to [0.6, 0.8].
        let s = amplitude_encode(&fv(&[3.0, 4.0])).unwrap();
        assert!((s.amplitudes()[0].re - 0.6).abs() < 1e-12);
        assert!((s.amplitudes()[1].re - 0.8).abs() < 1e-12);
    }

    #[test]
    fn amplitude_encode_pads_tail_with_zeros() {
        let s = amplitude_encode(&fv(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(s.n_qubits(), 2);
        let inv_sqrt3 = 1.0 / 3.0f64.sqrt();
        for i in 0..3 {
            assert!((s.amplitudes()[i].re - inv_sqrt3).abs() < 1e-12);
        }
        assert_eq!(s.amplitudes()[3].norm(), 0.0);
    }

    #[test]
    fn amplitude_encode_single_feature_occupies_one_qubit() {
        let s = amplitude_encode(&fv(&[2.5])).unwrap();
        assert_eq!(s.n_qubits(), 1);
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitude_encode_rejects_zero_vector() {
        assert!(matches!(
            amplitude_encode(&fv(&[0.0, 0.0])),
            Err(EncodingError::ZeroNorm)
        ));
    }

    #[test]
    fn basis_encode_reads_bits_msb_first() {
        let s = basis_encode(&fv(&[1.0, 0.0, 1.0])).unwrap();
        assert!((s.probabilities()[0b101] - 1.0).abs() < 1e-12);
        assert!(matches!(
            basis_encode(&fv(&[0.5])),
            Err(EncodingError::NotABit { index: 0, .. })
        ));
    }

    #[test]
    fn feature_vector_validation() {
        assert!(matches!(
            FeatureVector::new(vec![]),
            Err(EncodingError::Empty)
        ));
        assert!(matches!(
            FeatureVector::new(vec![0.1, f64::NAN]),
            Err(EncodingError::NotFinite { index: 1, .. })
        ));
    }

    #[test]
    fn budget_matches_formulas() {
        // 8 features, 2 layers, 1 qubit per gate: enc 3, vqc 5, total 8.
        let b = qubit_budget(8, 2, 1).unwrap();
        assert_eq!((b.encoder, b.variational, b.total), (3, 5, 8));
        // 13 features, 3 layers, 2 per gate: enc 4, vqc 10, total 14.
        let b = qubit_budget(13, 3, 2).unwrap();
        assert_eq!((b.encoder, b.variational, b.total), (4, 10, 14));
        // Degenerate single feature: ceil(log2(1)) = 0.
        let b = qubit_budget(1, 0, 0).unwrap();
        assert_eq!((b.encoder, b.variational, b.total), (0, 0, 0));
    }

    #[test]
    fn width_cap_enforced() {
        let wide: Vec<f64> = vec![0.5; MAX_QUBITS + 1];
        assert!(matches!(
            angle_encode(&FeatureVector::new(wide).unwrap()),
            Err(EncodingError::TooWide { .. })
        ));
    }
}
