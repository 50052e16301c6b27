//! Stabilizer Hamiltonians `H = -Σ_i J_i g_i` and the quantities derived
//! from their syndrome decomposition: energies, Gibbs weights, step
//! barriers and Bohr frequencies.

mod rates;

pub use rates::{RateError, RateKind, SpectralRateFunction};

use nalgebra::{Complex, DMatrix};
use serde::Serialize;
use thiserror::Error;

use crate::pauli::{GeneratorBasis, PauliError, PauliOperator, Syndrome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("term {term}: coupling must be a positive finite number, got {value}")]
    NonPositiveCoupling { term: usize, value: f64 },
    #[error("term {term}: the generated stabilizer group contains -identity")]
    ContainsMinusIdentity { term: usize },
    #[error("term {term} acts on {found} qubits, expected {expected}")]
    TermSize { term: usize, expected: usize, found: usize },
    #[error("a Hamiltonian needs at least one qubit")]
    NoQubits,
    #[error(transparent)]
    Rate(#[from] RateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Term {
    pub pauli: PauliOperator,
    pub coupling: f64,
}

/// A validated commuting-Pauli Hamiltonian.
#[derive(Debug, Clone)]
pub struct StabilizerHamiltonian {
    n: usize,
    terms: Vec<Term>,
    basis: GeneratorBasis,
    /// Exponent mask of each term over the basis generators.
    decompositions: Vec<u64>,
}

impl StabilizerHamiltonian {
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self, HamiltonianError> {
        if n == 0 {
            return Err(HamiltonianError::NoQubits);
        }
        for (i, t) in terms.iter().enumerate() {
            if t.pauli.num_qubits() != n {
                return Err(HamiltonianError::TermSize {
                    term: i,
                    expected: n,
                    found: t.pauli.num_qubits(),
                });
            }
            if !(t.coupling.is_finite() && t.coupling > 0.0) {
                return Err(HamiltonianError::NonPositiveCoupling {
                    term: i,
                    value: t.coupling,
                });
            }
        }
        let paulis: Vec<_> = terms.iter().map(|t| t.pauli).collect();
        let basis = GeneratorBasis::new(n, &paulis)?;
        let mut decompositions = Vec::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            let c = basis
                .in_group(&t.pauli)
                .expect("every term lies in the group it generates");
            // The phaseless decomposition must also hold with signs, otherwise
            // the group contains -1 (e.g. XX, ZZ, YY).
            let mut acc = PauliOperator::identity(n);
            let mut phase = 0u8;
            for (j, g) in basis.generators().iter().enumerate() {
                if (c >> j) & 1 == 1 {
                    phase = (phase + acc.product_phase(g)?) % 4;
                    acc = acc * *g;
                }
            }
            if phase != 0 {
                return Err(HamiltonianError::ContainsMinusIdentity { term: i });
            }
            decompositions.push(c);
        }
        Ok(Self {
            n,
            terms,
            basis,
            decompositions,
        })
    }

    /// Uniform couplings `J_i = 1`.
    pub fn from_generators(n: usize, generators: &[PauliOperator]) -> Result<Self, HamiltonianError> {
        Self::new(
            n,
            generators.iter().map(|&pauli| Term { pauli, coupling: 1.0 }).collect(),
        )
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn logical_qubits(&self) -> usize {
        self.basis.logical_qubits()
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn basis(&self) -> &GeneratorBasis {
        &self.basis
    }

    pub fn decompositions(&self) -> &[u64] {
        &self.decompositions
    }

    /// `Σ_i J_i`, an upper bound on `‖H‖_∞`.
    pub fn coupling_sum(&self) -> f64 {
        self.terms.iter().fold(0.0, |acc, t| acc + t.coupling)
    }

    /// Largest possible Bohr frequency magnitude, `2 Σ_i J_i`.
    pub fn max_frequency(&self) -> f64 {
        2.0 * self.coupling_sum()
    }

    pub fn syndrome(&self, p: &PauliOperator) -> Syndrome {
        self.basis.syndrome_unchecked(p)
    }

    /// `ε_s = -Σ_i J_i ∏_j s_j^{c_ij}`.
    pub fn syndrome_energy(&self, s: &Syndrome) -> Result<f64, HamiltonianError> {
        if s.len() != self.rank() {
            return Err(PauliError::SyndromeLength {
                expected: self.rank(),
                found: s.len(),
            }
            .into());
        }
        Ok(self.energy_unchecked(s))
    }

    #[inline]
    pub(crate) fn energy_unchecked(&self, s: &Syndrome) -> f64 {
        -self
            .terms
            .iter()
            .zip(&self.decompositions)
            .map(|(t, &c)| t.coupling * s.character(c) as f64)
            .sum::<f64>()
    }

    /// Energies of all `2^r` syndromes, indexed by [`Syndrome::index`].
    pub fn energy_table(&self) -> Vec<f64> {
        Syndrome::all(self.rank()).map(|s| self.energy_unchecked(&s)).collect()
    }

    pub fn ground_energy(&self) -> f64 {
        -self.coupling_sum()
    }

    /// Gibbs weights at inverse temperature `beta`.
    pub fn gibbs(&self, beta: f64) -> GibbsWeights {
        GibbsWeights::new(self, beta)
    }

    /// `(p(s), 2^{n-r} p(s))`: the per-state weight and the probability of
    /// the whole syndrome subspace.
    pub fn gibbs_weight(&self, s: &Syndrome, beta: f64) -> Result<(f64, f64), HamiltonianError> {
        self.syndrome_energy(s)?;
        let g = self.gibbs(beta);
        Ok((g.per_state(s), g.subspace(s)))
    }

    /// `ε̄_P(U) = 4 Σ J_i` over terms commuting with `P` and anticommuting
    /// with `U`. This equals `‖P†U†HUP + U†HU − P†HP − H‖_∞` exactly.
    pub fn step_barrier(&self, target: &PauliOperator, step: &PauliOperator) -> Result<f64, HamiltonianError> {
        if target.num_qubits() != self.n {
            return Err(PauliError::QubitMismatch(self.n, target.num_qubits()).into());
        }
        if step.num_qubits() != self.n {
            return Err(PauliError::QubitMismatch(self.n, step.num_qubits()).into());
        }
        Ok(self.step_barrier_unchecked(target, step))
    }

    #[inline]
    pub(crate) fn step_barrier_unchecked(&self, target: &PauliOperator, step: &PauliOperator) -> f64 {
        4.0 * self
            .terms
            .iter()
            .filter(|t| !t.pauli.anticommutes(target) && t.pauli.anticommutes(step))
            .fold(0.0, |acc, t| acc + t.coupling)
    }

    /// `ω^α(s) = ε_s − ε_{s⊕σ_α}`.
    pub fn bohr_frequency(&self, s: &Syndrome, alpha: &PauliOperator) -> Result<f64, HamiltonianError> {
        let e0 = self.syndrome_energy(s)?;
        if alpha.num_qubits() != self.n {
            return Err(PauliError::QubitMismatch(self.n, alpha.num_qubits()).into());
        }
        Ok(e0 - self.energy_unchecked(&(*s ^ self.syndrome(alpha))))
    }

    /// Worst single-step cost: the largest `4 Σ J_i` over terms that
    /// anticommute with one single-site Pauli.
    pub fn omega_impl(&self) -> f64 {
        PauliOperator::single_site_all(self.n)
            .iter()
            .map(|a| {
                4.0 * self
                    .terms
                    .iter()
                    .filter(|t| t.pauli.anticommutes(a))
                    .fold(0.0, |acc, t| acc + t.coupling)
            })
            .fold(0.0, f64::max)
    }

    pub fn rate_function(&self, kind: RateKind, beta: f64) -> Result<SpectralRateFunction, HamiltonianError> {
        Ok(SpectralRateFunction::new(kind, beta, self.max_frequency())?)
    }

    /// Dense `2^n × 2^n` matrix of `H`. Intended for small oracles.
    pub fn to_dense(&self) -> DMatrix<Complex<f64>> {
        assert!(self.n <= 12, "dense Hamiltonian limited to 12 qubits");
        let dim = 1usize << self.n;
        self.terms.iter().fold(DMatrix::zeros(dim, dim), |acc, t| {
            acc - t.pauli.to_dense() * Complex::from(t.coupling)
        })
    }

    /// Dense projector `Π_s = ∏_j (1 + s_j S_j)/2`.
    pub fn projector(&self, s: &Syndrome) -> DMatrix<Complex<f64>> {
        let dim = 1usize << self.n;
        let id = DMatrix::<Complex<f64>>::identity(dim, dim);
        self.basis
            .generators()
            .iter()
            .enumerate()
            .fold(id.clone(), |acc, (j, g)| {
                let factor = (&id + g.to_dense() * Complex::from(s.entry(j) as f64)) * Complex::from(0.5);
                acc * factor
            })
    }
}

/// Gibbs weights `p(s) = e^{-βε_s}/tr(e^{-βH})` over all syndromes.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsWeights {
    beta: f64,
    per_state: Vec<f64>,
    degeneracy: f64,
}

impl GibbsWeights {
    fn new(h: &StabilizerHamiltonian, beta: f64) -> Self {
        let energies = h.energy_table();
        let degeneracy = 2f64.powi((h.num_qubits() - h.rank()) as i32);
        let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
        let boltz: Vec<f64> = energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
        let z: f64 = boltz.iter().sum::<f64>() * degeneracy;
        Self {
            beta,
            per_state: boltz.iter().map(|b| b / z).collect(),
            degeneracy,
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn per_state(&self, s: &Syndrome) -> f64 {
        self.per_state[s.index()]
    }

    pub fn subspace(&self, s: &Syndrome) -> f64 {
        self.per_state[s.index()] * self.degeneracy
    }

    /// Per-state weights indexed by syndrome.
    pub fn table(&self) -> &[f64] {
        &self.per_state
    }

    /// Subspace probabilities indexed by syndrome; these sum to one.
    pub fn subspace_table(&self) -> Vec<f64> {
        self.per_state.iter().map(|p| p * self.degeneracy).collect()
    }

    /// `‖ρ_β^{-1}‖_∞ = 1 / min_s p(s)`.
    pub fn inverse_norm(&self) -> f64 {
        1.0 / self.per_state.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Dense Gibbs state `Σ_s p(s) Π_s`.
    pub fn to_dense(&self, h: &StabilizerHamiltonian) -> DMatrix<Complex<f64>> {
        let dim = 1usize << h.num_qubits();
        Syndrome::all(h.rank()).fold(DMatrix::zeros(dim, dim), |acc, s| {
            acc + h.projector(&s) * Complex::from(self.per_state(&s))
        })
    }
}
