use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{classical_generator, compensated_sum, run_with_table, KmcError, MoveTable, TrajectoryConfig};
use crate::hamiltonian::{SpectralRateFunction, StabilizerHamiltonian};
use crate::pauli::{PauliOperator, Syndrome};

/// Per-site error probability of the depolarizing prior used to build the
/// decoder table.
pub const DEFAULT_DECODER_PRIOR: f64 = 0.05;
/// Largest `n` for the exhaustive decoder table.
pub const DECODER_MAX_QUBITS: usize = 10;

/// GF(2) span of phaseless Paulis with reduced-echelon representatives.
#[derive(Debug, Clone, Default)]
struct Span {
    rows: Vec<(u128, u32)>,
}

impl Span {
    fn row(p: &PauliOperator) -> u128 {
        p.x_bits() as u128 | ((p.z_bits() as u128) << 64)
    }

    fn reduce(&self, mut row: u128) -> u128 {
        for &(r, pivot) in &self.rows {
            if (row >> pivot) & 1 == 1 {
                row ^= r;
            }
        }
        row
    }

    fn insert(&mut self, p: &PauliOperator) {
        let row = self.reduce(Self::row(p));
        if row == 0 {
            return;
        }
        let pivot = row.trailing_zeros();
        for (r, _) in &mut self.rows {
            if (*r >> pivot) & 1 == 1 {
                *r ^= row;
            }
        }
        self.rows.push((row, pivot));
    }

    fn canonical(&self, p: &PauliOperator) -> PauliOperator {
        let row = self.reduce(Self::row(p));
        PauliOperator::from_bits(p.num_qubits(), row as u64, (row >> 64) as u64).expect("bits within n")
    }
}

/// Maximum-likelihood decoder under an i.i.d. depolarizing prior: for every
/// syndrome, the most probable error class.
///
/// Classes are taken modulo the stabilizer group together with every
/// logical operator that a single-site Pauli implements. Such logicals cost
/// no energy, so the readout ignores them; for the repetition code this
/// leaves exactly the bit-flip logical.
#[derive(Debug, Clone)]
pub struct MlDecoder {
    basis: crate::pauli::GeneratorBasis,
    quotient: Span,
    /// Most likely error class representative per syndrome.
    correction: Vec<PauliOperator>,
}

impl MlDecoder {
    pub fn new(h: &StabilizerHamiltonian, prior: f64) -> Result<Self, KmcError> {
        let n = h.num_qubits();
        if h.logical_qubits() == 0 {
            return Err(KmcError::NoLogicalQubit);
        }
        if n > DECODER_MAX_QUBITS {
            return Err(KmcError::CapExceeded {
                what: "decoder qubits",
                value: n,
                cap: DECODER_MAX_QUBITS,
            });
        }
        if !(prior > 0.0 && prior < 0.75) {
            return Err(KmcError::InvalidConfig(format!(
                "decoder prior must lie in (0, 3/4), got {prior}"
            )));
        }
        let basis = h.basis().clone();
        let mut quotient = Span::default();
        for g in basis.generators() {
            quotient.insert(g);
        }
        for a in PauliOperator::single_site_all(n) {
            if h.syndrome(&a).is_trivial() {
                quotient.insert(&a);
            }
        }
        let r = basis.rank();
        // Reference error per syndrome; classes are E·reference modulo the quotient.
        let mut reference: Vec<Option<PauliOperator>> = vec![None; 1 << r];
        let mut likelihood: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); 1 << r];
        let (p_site, p_idle) = (prior / 3.0, 1.0 - prior);
        for e in PauliOperator::all(n) {
            let s = h.syndrome(&e).index();
            let base = *reference[s].get_or_insert(e);
            let class = quotient.canonical(&(e * base));
            let w = e.weight() as i32;
            *likelihood[s].entry(class.index()).or_insert(0.0) += p_site.powi(w) * p_idle.powi(n as i32 - w);
        }
        let correction = likelihood
            .iter()
            .enumerate()
            .map(|(s, table)| {
                // BTreeMap iteration is by class index, so ties go to the smallest.
                let (best, _) =
                    table.iter().fold(
                        (usize::MAX, f64::NEG_INFINITY),
                        |acc, (&k, &v)| if v > acc.1 { (k, v) } else { acc },
                    );
                let base = reference[s].expect("every syndrome occurs");
                quotient.canonical(&(PauliOperator::from_index(n, best) * base))
            })
            .collect();
        Ok(Self {
            basis,
            quotient,
            correction,
        })
    }

    /// Correction applied for syndrome `s`.
    pub fn correction(&self, s: &Syndrome) -> &PauliOperator {
        &self.correction[s.index()]
    }

    /// Logical class of `error` after correction. The identity means no
    /// logical error.
    pub fn logical_class(&self, error: &PauliOperator) -> PauliOperator {
        let s = self.basis.syndrome_unchecked(error);
        self.quotient.canonical(&(*error * self.correction[s.index()]))
    }

    /// Number of distinguishable logical classes, `|N(𝒮)| / |quotient|`.
    pub fn num_classes(&self) -> usize {
        1 << (2 * self.basis.num_qubits() - self.basis.rank() - self.quotient.rows.len())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LifetimeEstimate {
    /// Mean first time the decoded logical class leaves the identity.
    pub mean: f64,
    pub stderr: f64,
    pub trajectories: u64,
    /// Runs that reached `t_max` without a logical flip; nonzero values bias
    /// `mean` low.
    pub censored: u64,
}

/// Monte Carlo logical lifetime from the error-free state. Each run stops at
/// its first logical flip or at `config.t_max`.
pub fn logical_lifetime_estimate(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    decoder: &MlDecoder,
    config: &TrajectoryConfig,
    count: u64,
) -> Result<LifetimeEstimate, KmcError> {
    if count < 2 {
        return Err(KmcError::InvalidConfig(
            "lifetime estimate needs at least 2 trajectories".into(),
        ));
    }
    let cfg = TrajectoryConfig {
        record_events: false,
        ..config.clone()
    };
    let table = MoveTable::new(h);
    let id = PauliOperator::identity(h.num_qubits());
    let stop = |s: &super::ErrorState| !decoder.logical_class(&s.error).is_identity();
    let results: Vec<(f64, bool)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let tr = run_with_table(h, rates, &table, &id, &cfg, i, &stop);
            let hit = stop(&tr.final_state);
            (if hit { tr.final_state.time() } else { cfg.t_max }, hit)
        })
        .collect();
    let censored = results.iter().filter(|(_, hit)| !hit).count() as u64;
    let n = count as f64;
    let mean = compensated_sum(results.iter().map(|(t, _)| *t)) / n;
    let var = compensated_sum(results.iter().map(|(t, _)| (t - mean).powi(2))) / (n - 1.0);
    Ok(LifetimeEstimate {
        mean,
        stderr: (var / n).sqrt(),
        trajectories: count,
        censored,
    })
}

/// Exact mean first-passage time from the identity to a nontrivial decoded
/// class, from the dense coset chain.
pub fn exact_lifetime(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    decoder: &MlDecoder,
) -> Result<f64, KmcError> {
    let g = classical_generator(h, rates)?;
    let transient: Vec<usize> = (0..g.states().len())
        .filter(|&i| decoder.logical_class(&g.states()[i]).is_identity())
        .collect();
    let k = transient.len();
    // Backward equation Σ_j G[j,i](m_j − m_i) = −1 on transient states.
    let a = DMatrix::from_fn(k, k, |x, y| g.matrix()[(transient[y], transient[x])]);
    let m = a
        .lu()
        .solve(&DVector::from_element(k, -1.0))
        .ok_or_else(|| KmcError::InvalidConfig("logical class is never left".into()))?;
    let start = g.state_index(&PauliOperator::identity(h.num_qubits()));
    let pos = transient
        .iter()
        .position(|&i| i == start)
        .expect("identity decodes to itself");
    Ok(m[pos])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes;
    use crate::hamiltonian::RateKind;

    #[test]
    fn decoder_corrects_single_flips_of_rep3() {
        let h = codes::repetition(3);
        let d = MlDecoder::new(&h, DEFAULT_DECODER_PRIOR).unwrap();
        for e in ["XII", "IXI", "IIX", "III"] {
            let e: PauliOperator = e.parse().unwrap();
            assert!(d.logical_class(&e).is_identity(), "{e}");
        }
        let two: PauliOperator = "XXI".parse().unwrap();
        assert!(!d.logical_class(&two).is_identity());
        assert!(d.logical_class(&"ZII".parse().unwrap()).is_identity());
        assert_eq!(d.num_classes(), 2);
        assert_eq!(
            MlDecoder::new(&codes::four_qubit_two_stabilizer(), 0.05)
                .unwrap()
                .num_classes(),
            16
        );
        assert!(matches!(
            MlDecoder::new(&codes::repetition(1), 0.05),
            Err(KmcError::NoLogicalQubit)
        ));
    }

    #[test]
    fn monte_carlo_matches_first_passage_solve() {
        let h = codes::repetition(2);
        for beta in [0.0, 1.0] {
            let rates = h.rate_function(RateKind::Glauber, beta).unwrap();
            let d = MlDecoder::new(&h, DEFAULT_DECODER_PRIOR).unwrap();
            let exact = exact_lifetime(&h, &rates, &d).unwrap();
            let est = logical_lifetime_estimate(&h, &rates, &d, &TrajectoryConfig::new(23, 1e4), 10_000).unwrap();
            assert_eq!(est.censored, 0);
            assert!(
                (est.mean - exact).abs() < 3.5 * est.stderr,
                "beta {beta}: {} vs {exact}",
                est.mean
            );
        }
    }
}
