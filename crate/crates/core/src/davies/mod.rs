//! Explicit Davies generators for small stabilizer Hamiltonians.
//!
//! Operators are represented by their Pauli coefficients
//! `c_P = tr(P O) / 2^n` in lexicographic order, so that
//! `tr(A†B) = 2^n ⟨A|B⟩`. Superoperators act on these coefficient vectors.

mod blocks;
mod evolve;
mod factor;
mod generator;
mod support;

pub use blocks::{block_decompose, telescopic_check, BlockBasis, BlockDecomposition, BlockReport, CosetBlock};
pub use evolve::{evolve, EvolutionCurve, EvolutionPoint};
pub use factor::{
    assemble_awb, closed_form_row_norm, factorization_bound, AwbFactorization, ColumnKey, RowKey, RowNormCheck,
    FACTOR_MAX_QUBITS,
};
pub use generator::{build_davies, DaviesGenerator, DaviesOptions};
pub use support::{
    mixing_time_bound, support_number_blockwise, support_number_exact, support_number_flow_bound, FlowBound,
    MixingBoundReport, SupportMethod, SupportNumberResult,
};

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

use crate::flow::FlowError;
use crate::hamiltonian::{HamiltonianError, RateError};
use crate::pauli::PauliOperator;

pub type C64 = Complex<f64>;
/// Dense matrix over Pauli coefficients.
pub type SuperOpMatrix = DMatrix<C64>;
/// Pauli coefficient vector `|O⟩`.
pub type OperatorVector = DVector<C64>;

/// Largest qubit count for dense superoperators (`4^5 = 1024`).
pub const DEFAULT_MAX_QUBITS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DaviesError {
    #[error("n = {n} exceeds the dense cap of {cap} qubits")]
    CapExceeded { n: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("initial state is not a density operator: {0}")]
    NotDensity(String),
    #[error("the construction needs at least one stabilizer generator")]
    NoStabilizers,
    #[error("no flow supplied for target {0}")]
    MissingFlow(String),
    #[error("edge {0} is not used by any flow")]
    EdgeAbsent(String),
    #[error("certificate was issued at beta = {certificate} but the rate function uses beta = {rates}")]
    BetaMismatch { certificate: f64, rates: f64 },
    #[error("support number is infinite: ker(E) is not contained in ker(V)")]
    InfiniteSupportNumber,
    #[error("support-number certificate failed: {0}")]
    CertificateFailed(String),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

fn qubits_of_dim(dim: usize) -> Option<usize> {
    (dim.is_power_of_two() && dim > 0).then(|| dim.trailing_zeros() as usize)
}

/// `tr(P O)` in `O(2^n)` operations.
pub(crate) fn pauli_trace(p: &PauliOperator, o: &DMatrix<C64>) -> C64 {
    let (xm, zm, c) = p.monomial();
    let mut acc = C64::new(0.0, 0.0);
    for b in 0..o.nrows() {
        let v = o[(b, b ^ xm)];
        if (zm & b).count_ones() & 1 == 1 {
            acc -= v;
        } else {
            acc += v;
        }
    }
    acc * c
}

/// Pauli coefficients `tr(P O)/2^n` of a `2^n × 2^n` operator.
pub fn vectorize(o: &DMatrix<C64>) -> Result<OperatorVector, DaviesError> {
    if o.nrows() != o.ncols() {
        return Err(DaviesError::DimensionMismatch {
            expected: o.nrows(),
            found: o.ncols(),
        });
    }
    let n = qubits_of_dim(o.nrows()).ok_or(DaviesError::DimensionMismatch {
        expected: o.nrows().next_power_of_two(),
        found: o.nrows(),
    })?;
    if n > 2 * DEFAULT_MAX_QUBITS {
        return Err(DaviesError::CapExceeded {
            n,
            cap: 2 * DEFAULT_MAX_QUBITS,
        });
    }
    let scale = 1.0 / o.nrows() as f64;
    Ok(DVector::from_iterator(
        1 << (2 * n),
        PauliOperator::all(n).map(|p| pauli_trace(&p, o) * scale),
    ))
}

/// Inverse of [`vectorize`]: `Σ_P c_P P`.
pub fn devectorize(v: &OperatorVector) -> Result<DMatrix<C64>, DaviesError> {
    let len = v.len();
    let n = qubits_of_dim(len)
        .filter(|b| b % 2 == 0)
        .map(|b| b / 2)
        .ok_or(DaviesError::DimensionMismatch {
            expected: len.next_power_of_two(),
            found: len,
        })?;
    let dim = 1usize << n;
    let mut m = DMatrix::zeros(dim, dim);
    for (i, p) in PauliOperator::all(n).enumerate() {
        let c = v[i];
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        let (xm, zm, ph) = p.monomial();
        for b in 0..dim {
            let sign = if (zm & b).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
            m[(b ^ xm, b)] += c * ph * sign;
        }
    }
    Ok(m)
}

/// Largest entry of `M − M†`.
pub(crate) fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// `(M + M†)/2`.
pub(crate) fn hermitian_part(m: &DMatrix<C64>) -> DMatrix<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}
