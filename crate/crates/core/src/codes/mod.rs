//! Small reference Hamiltonians with unit couplings.

use crate::hamiltonian::StabilizerHamiltonian;
use crate::pauli::{Letter, PauliOperator};

/// Repetition code `-Σ_i Z_i Z_{i+1}` on `n ≥ 2` qubits; for `n = 1` the
/// single-qubit field `-Z`.
pub fn repetition(n: usize) -> StabilizerHamiltonian {
    assert!((1..=64).contains(&n));
    if n == 1 {
        return single_qubit_field();
    }
    let gens: Vec<_> = (0..n - 1)
        .map(|i| {
            let z = (1u64 << i) | (1u64 << (i + 1));
            PauliOperator::from_bits(n, 0, z).expect("sites within n")
        })
        .collect();
    StabilizerHamiltonian::from_generators(n, &gens).expect("repetition code is valid")
}

/// `H = -Z` on one qubit.
pub fn single_qubit_field() -> StabilizerHamiltonian {
    let z = PauliOperator::single(1, 0, Letter::Z).expect("site 0 exists");
    StabilizerHamiltonian::from_generators(1, &[z]).expect("single field is valid")
}

/// `H = -XXXX - ZZZZ`: four qubits, two stabilizers, two logical qubits.
pub fn four_qubit_two_stabilizer() -> StabilizerHamiltonian {
    let gens = [
        PauliOperator::from_bits(4, 0b1111, 0).expect("four sites"),
        PauliOperator::from_bits(4, 0, 0b1111).expect("four sites"),
    ];
    StabilizerHamiltonian::from_generators(4, &gens).expect("XXXX and ZZZZ commute")
}

/// `H = -XX - ZZ`: a single stabilized Bell state.
pub fn bell_pair() -> StabilizerHamiltonian {
    let gens = [
        PauliOperator::from_bits(2, 0b11, 0).expect("two sites"),
        PauliOperator::from_bits(2, 0, 0b11).expect("two sites"),
    ];
    StabilizerHamiltonian::from_generators(2, &gens).expect("XX and ZZ commute")
}

/// Looks up a shipped code by name: `rep1`..`rep64`, `four`, `bell`.
pub fn by_name(name: &str) -> Option<StabilizerHamiltonian> {
    match name {
        "four" | "four-qubit" => Some(four_qubit_two_stabilizer()),
        "bell" => Some(bell_pair()),
        _ => {
            let n: usize = name.strip_prefix("rep")?.parse().ok()?;
            (1..=64).contains(&n).then(|| repetition(n))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let h = repetition(3);
        assert_eq!((h.num_qubits(), h.rank(), h.logical_qubits()), (3, 2, 1));
        let h = four_qubit_two_stabilizer();
        assert_eq!((h.rank(), h.logical_qubits()), (2, 2));
        assert_eq!(repetition(1).rank(), 1);
        assert_eq!(bell_pair().logical_qubits(), 0);
        assert_eq!(by_name("rep5").unwrap().num_qubits(), 5);
        assert!(by_name("rep0").is_none());
    }
}
