use serde::Serialize;

use super::{FlowError, PauliFlow, PauliPath};
use crate::hamiltonian::StabilizerHamiltonian;
use crate::pauli::PauliOperator;

/// Result of completing coset-level paths into paths that end at the target.
#[derive(Debug, Clone)]
pub struct LiftedFlow {
    pub flow: PauliFlow,
    /// Largest `ε̄_P(U_e)` over edges of the appended stabilizer segments;
    /// zero when nothing was appended.
    pub zeta_cost: f64,
    /// Number of input paths that needed a stabilizer segment.
    pub lifted_paths: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftSummary {
    pub zeta_cost: f64,
    pub lifted_paths: usize,
}

/// Path `ζ(S)` from the identity to a stabilizer `S`: the letters of each
/// basis generator in `S`'s decomposition, generators in basis order and
/// sites ascending within a generator.
pub fn zeta_path(h: &StabilizerHamiltonian, s: &PauliOperator) -> Result<PauliPath, FlowError> {
    let n = h.num_qubits();
    let c = h
        .basis()
        .in_group(s)
        .ok_or_else(|| FlowError::NotStabilizerEquivalent {
            path: 0,
            target: PauliOperator::identity(n).to_string(),
            found: s.to_string(),
        })?;
    let mut letters = Vec::new();
    for (j, g) in h.basis().generators().iter().enumerate() {
        if (c >> j) & 1 == 1 {
            for site in g.support() {
                letters.push(PauliOperator::single(n, site, g.letter(site))?);
            }
        }
    }
    PauliPath::from_letters(n, &letters)
}

/// Turns each path `γ` ending at `S_γ P` into `γ` followed by `ζ(S_γ)`
/// applied on top of `S_γ P`, which ends at `P` because `S_γ² = 1`.
///
/// The original edges keep their barriers and the appended ones cost at
/// most `zeta_cost`, so the lifted flow has `f̄′ ≤ max(f̄, zeta_cost)`.
/// Lifted paths that coincide are merged.
pub fn degeneracy_lift(flow: &PauliFlow, h: &StabilizerHamiltonian) -> Result<LiftedFlow, FlowError> {
    let target = *flow.target();
    let mut out: Vec<PauliPath> = Vec::with_capacity(flow.num_paths());
    let mut seen = std::collections::HashSet::new();
    let mut zeta_cost = 0.0f64;
    let mut lifted_paths = 0;
    for (i, path) in flow.paths().iter().enumerate() {
        let end = *path.endpoint().expect("validated paths are non-empty");
        let s = end * target;
        let lifted = if s.is_identity() {
            path.clone()
        } else {
            let zeta = zeta_path(h, &s).map_err(|_| FlowError::NotStabilizerEquivalent {
                path: i,
                target: target.to_string(),
                found: end.to_string(),
            })?;
            lifted_paths += 1;
            let joined = path.concat(&zeta);
            for e in joined.edges().skip(path.len()) {
                zeta_cost = zeta_cost.max(h.step_barrier_unchecked(&target, &e.from));
            }
            joined
        };
        if seen.insert(lifted.clone()) {
            out.push(lifted);
        }
    }
    Ok(LiftedFlow {
        flow: PauliFlow::new(target, out)?,
        zeta_cost,
        lifted_paths,
    })
}

impl LiftedFlow {
    pub fn summary(&self) -> LiftSummary {
        LiftSummary {
            zeta_cost: self.zeta_cost,
            lifted_paths: self.lifted_paths,
        }
    }
}
