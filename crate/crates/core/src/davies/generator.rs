use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{pauli_trace, vectorize, DaviesError, SuperOpMatrix, C64, DEFAULT_MAX_QUBITS};
use crate::hamiltonian::{GibbsWeights, SpectralRateFunction, StabilizerHamiltonian};
use crate::pauli::{PauliOperator, Syndrome};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaviesOptions {
    /// Include the coherent term `i[H, f]`.
    pub coherent: bool,
    pub max_qubits: usize,
}

impl Default for DaviesOptions {
    fn default() -> Self {
        Self {
            coherent: true,
            max_qubits: DEFAULT_MAX_QUBITS,
        }
    }
}

/// Jump operator `S_ω^α = Σ_{s: ω^α(s) = ω} α Π_s` with its rate.
#[derive(Debug, Clone)]
struct Jump {
    rate: f64,
    s: DMatrix<C64>,
    s_dag: DMatrix<C64>,
    /// `S†S = Σ_{s: ω^α(s) = ω} Π_s`.
    s_dag_s: DMatrix<C64>,
}

/// Davies generator with couplings to every single-site Pauli.
#[derive(Debug, Clone)]
pub struct DaviesGenerator {
    h: StabilizerHamiltonian,
    rates: SpectralRateFunction,
    opts: DaviesOptions,
    hamiltonian: DMatrix<C64>,
    gibbs: GibbsWeights,
    rho: DMatrix<C64>,
    jumps: Vec<Jump>,
}

/// Builds the generator and returns the Schrödinger- and Heisenberg-picture
/// matrices `(L̂, L̂*)`.
pub fn build_davies(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    opts: DaviesOptions,
) -> Result<(SuperOpMatrix, SuperOpMatrix), DaviesError> {
    let g = DaviesGenerator::new(h, rates, opts)?;
    Ok((g.liouvillian_matrix(), g.adjoint_matrix()))
}

impl DaviesGenerator {
    pub fn new(
        h: &StabilizerHamiltonian,
        rates: &SpectralRateFunction,
        opts: DaviesOptions,
    ) -> Result<Self, DaviesError> {
        let n = h.num_qubits();
        let cap = opts.max_qubits.min(DEFAULT_MAX_QUBITS);
        if n > cap {
            return Err(DaviesError::CapExceeded { n, cap });
        }
        let energies = h.energy_table();
        let projectors: Vec<_> = Syndrome::all(h.rank()).map(|s| h.projector(&s)).collect();
        let dim = 1usize << n;
        let mut jumps = Vec::new();
        for alpha in PauliOperator::single_site_all(n) {
            let flip = h.syndrome(&alpha);
            // Frequencies are sums of ±2J_i; bucket them on a fine grid.
            let mut buckets: BTreeMap<i64, (f64, Vec<usize>)> = BTreeMap::new();
            for s in Syndrome::all(h.rank()) {
                let omega = energies[s.index()] - energies[(s ^ flip).index()];
                let key = (omega * 1e9).round() as i64;
                buckets.entry(key).or_insert((omega, Vec::new())).1.push(s.index());
            }
            let a = alpha.to_dense();
            for (omega, members) in buckets.into_values() {
                let proj = members
                    .iter()
                    .fold(DMatrix::<C64>::zeros(dim, dim), |acc, &i| acc + &projectors[i]);
                let s = &a * &proj;
                jumps.push(Jump {
                    rate: rates.rate(omega)?,
                    s_dag: s.adjoint(),
                    s,
                    s_dag_s: proj,
                });
            }
        }
        let gibbs = h.gibbs(rates.beta());
        let rho = gibbs.to_dense(h);
        Ok(Self {
            h: h.clone(),
            rates: *rates,
            opts,
            hamiltonian: h.to_dense(),
            gibbs,
            rho,
            jumps,
        })
    }

    pub fn hamiltonian(&self) -> &StabilizerHamiltonian {
        &self.h
    }

    pub fn rates(&self) -> &SpectralRateFunction {
        &self.rates
    }

    pub fn options(&self) -> DaviesOptions {
        self.opts
    }

    pub fn num_qubits(&self) -> usize {
        self.h.num_qubits()
    }

    pub fn gibbs(&self) -> &GibbsWeights {
        &self.gibbs
    }

    /// Dense Gibbs state `ρ_β`.
    pub fn gibbs_state(&self) -> &DMatrix<C64> {
        &self.rho
    }

    /// Heisenberg picture `L*(f)`.
    pub fn apply_adjoint(&self, f: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(f.nrows(), f.ncols());
        if self.opts.coherent {
            let comm = &self.hamiltonian * f - f * &self.hamiltonian;
            out += comm * C64::new(0.0, 1.0);
        }
        for j in &self.jumps {
            let anti = &j.s_dag_s * f + f * &j.s_dag_s;
            out += (&j.s_dag * f * &j.s - anti * C64::new(0.5, 0.0)) * C64::new(j.rate, 0.0);
        }
        out
    }

    /// Schrödinger picture `L(ρ)`.
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
        if self.opts.coherent {
            let comm = &self.hamiltonian * rho - rho * &self.hamiltonian;
            out += comm * C64::new(0.0, -1.0);
        }
        for j in &self.jumps {
            let anti = &j.s_dag_s * rho + rho * &j.s_dag_s;
            out += (&j.s * rho * &j.s_dag - anti * C64::new(0.5, 0.0)) * C64::new(j.rate, 0.0);
        }
        out
    }

    fn superop<F: Fn(&DMatrix<C64>) -> DMatrix<C64>>(&self, f: F) -> SuperOpMatrix {
        let n = self.num_qubits();
        let cols: Vec<_> = PauliOperator::all(n)
            .map(|p| vectorize(&f(&p.to_dense())).expect("square power-of-two operator"))
            .collect();
        SuperOpMatrix::from_columns(&cols)
    }

    /// `L̂*` with entries `tr(P′ L*(P))/2^n`.
    pub fn adjoint_matrix(&self) -> SuperOpMatrix {
        self.superop(|f| self.apply_adjoint(f))
    }

    /// `L̂`, the Hilbert-Schmidt adjoint of `L̂*`.
    pub fn liouvillian_matrix(&self) -> SuperOpMatrix {
        self.superop(|r| self.apply(r))
    }

    /// Dirichlet form `Ê_{P′,P} = −tr(ρ P′ L*(P))` restricted to `paulis`,
    /// Hermitian-symmetrized.
    pub fn dirichlet_on(&self, paulis: &[PauliOperator]) -> SuperOpMatrix {
        let k = paulis.len();
        let mut m = SuperOpMatrix::zeros(k, k);
        for (j, p) in paulis.iter().enumerate() {
            let y = self.apply_adjoint(&p.to_dense()) * &self.rho;
            for (i, q) in paulis.iter().enumerate() {
                m[(i, j)] = -pauli_trace(q, &y);
            }
        }
        super::hermitian_part(&m)
    }

    /// Variance `V̂_{P′,P} = tr(ρ P′ P) − conj(tr ρP′)·tr(ρP)` restricted to
    /// `paulis`.
    pub fn variance_on(&self, paulis: &[PauliOperator]) -> SuperOpMatrix {
        let k = paulis.len();
        let means: Vec<C64> = paulis.iter().map(|p| pauli_trace(p, &self.rho)).collect();
        let mut m = SuperOpMatrix::zeros(k, k);
        for (j, p) in paulis.iter().enumerate() {
            let y = p.to_dense() * &self.rho;
            for (i, q) in paulis.iter().enumerate() {
                m[(i, j)] = pauli_trace(q, &y) - means[i].conj() * means[j];
            }
        }
        super::hermitian_part(&m)
    }

    pub fn dirichlet_matrix(&self) -> SuperOpMatrix {
        self.dirichlet_on(&PauliOperator::all(self.num_qubits()).collect::<Vec<_>>())
    }

    pub fn variance_matrix(&self) -> SuperOpMatrix {
        self.variance_on(&PauliOperator::all(self.num_qubits()).collect::<Vec<_>>())
    }

    /// `ℰ(f) = −tr(ρ f† L*(f))` evaluated directly.
    pub fn dirichlet_form(&self, f: &DMatrix<C64>) -> C64 {
        -(&self.rho * f.adjoint() * self.apply_adjoint(f)).trace()
    }

    /// `𝒱(f) = tr(ρ f†f) − |tr(ρ f)|²` evaluated directly.
    pub fn variance_form(&self, f: &DMatrix<C64>) -> C64 {
        let mean = (&self.rho * f).trace();
        (&self.rho * f.adjoint() * f).trace() - C64::new(mean.norm_sqr(), 0.0)
    }

    /// Smallest non-zero `|Re λ|` among the eigenvalues of `L̂`.
    pub fn spectral_gap(&self) -> f64 {
        let l = self.liouvillian_matrix();
        let ev = nalgebra::Schur::new(l).eigenvalues().expect("complex Schur converges");
        let scale = ev.iter().fold(0.0f64, |a, z| a.max(z.norm())).max(1.0);
        ev.iter()
            .map(|z| -z.re)
            .filter(|&g| g > 1e-9 * scale)
            .fold(f64::INFINITY, f64::min)
    }
}
