use serde::{Deserialize, Serialize};

use super::{Edge, FlowError, PauliFlow};
use crate::hamiltonian::StabilizerHamiltonian;
use crate::pauli::{PauliError, PauliOperator};

/// One row of the per-edge table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub target: PauliOperator,
    pub edge: Edge,
    /// `ε̄_P(U_e)`.
    pub barrier: f64,
    pub omega_numer: u64,
    pub omega_denom: u64,
    /// `-(1/β) ln Ω_P(e)`.
    pub entropy: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub target: PauliOperator,
    pub edge: Edge,
}

/// Upper bound `f̄` on the free energy of a set of flows, with the table it
/// was maximized over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyCertificate {
    pub beta: f64,
    pub f_bar: f64,
    pub witness: Witness,
    pub entries: Vec<EdgeEntry>,
}

impl FreeEnergyCertificate {
    /// Recomputes the certificate from `flows` and compares `f_bar`.
    pub fn verify(&self, flows: &[PauliFlow], h: &StabilizerHamiltonian, tol: f64) -> Result<bool, FlowError> {
        let again = flow_free_energy(flows, h, self.beta)?;
        Ok((again.f_bar - self.f_bar).abs() <= tol && again.entries.len() == self.entries.len())
    }

    /// Largest `ε̄_P(U_e)` in the table: the pure energy barrier of the flows.
    pub fn energy_barrier(&self) -> f64 {
        self.entries.iter().map(|e| e.barrier).fold(0.0, f64::max)
    }
}

/// `f̄ = max_P max_e [ε̄_P(U_e) − (1/β) ln Ω_P(e)]` over every flow.
///
/// `beta = +∞` is accepted and drops the entropic term. Flows whose paths
/// are all empty (target identity) contribute no edges; if no edge exists
/// at all, `f̄ = 0` with an identity self-loop witness.
pub fn flow_free_energy(
    flows: &[PauliFlow],
    h: &StabilizerHamiltonian,
    beta: f64,
) -> Result<FreeEnergyCertificate, FlowError> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(FlowError::InvalidBeta(beta));
    }
    if flows.is_empty() {
        return Err(FlowError::EmptyFlow);
    }
    let n = h.num_qubits();
    let mut entries = Vec::new();
    for flow in flows {
        let target = *flow.target();
        if target.num_qubits() != n {
            return Err(PauliError::QubitMismatch(n, target.num_qubits()).into());
        }
        for (edge, count) in flow.edges_sorted() {
            let total = flow.num_paths() as u64;
            let omega = num_rational::Ratio::new(total, count);
            let barrier = h.step_barrier_unchecked(&target, &edge.from);
            let ln_omega = (*omega.numer() as f64).ln() - (*omega.denom() as f64).ln();
            let entropy = if beta.is_infinite() { 0.0 } else { -ln_omega / beta };
            entries.push(EdgeEntry {
                target,
                edge,
                barrier,
                omega_numer: *omega.numer(),
                omega_denom: *omega.denom(),
                entropy,
                value: barrier + entropy,
            });
        }
    }
    let identity = PauliOperator::identity(n);
    let (f_bar, witness) = entries
        .iter()
        .fold(None::<(f64, &EdgeEntry)>, |best, e| match best {
            Some((v, _)) if v >= e.value => best,
            _ => Some((e.value, e)),
        })
        .map(|(v, e)| {
            (
                v,
                Witness {
                    target: e.target,
                    edge: e.edge,
                },
            )
        })
        .unwrap_or((
            0.0,
            Witness {
                target: identity,
                edge: Edge {
                    from: identity,
                    to: identity,
                },
            },
        ));
    Ok(FreeEnergyCertificate {
        beta,
        f_bar,
        witness,
        entries,
    })
}
