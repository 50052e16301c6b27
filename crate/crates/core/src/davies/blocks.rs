use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{devectorize, hermitian_eigenvalues, pauli_trace, vectorize, DaviesError, DaviesGenerator, OperatorVector};
use super::{SuperOpMatrix, C64, DEFAULT_MAX_QUBITS};
use crate::flow::{FlowError, PauliPath};
use crate::hamiltonian::{GibbsWeights, SpectralRateFunction, StabilizerHamiltonian};
use crate::pauli::{GeneratorBasis, PauliOperator, Syndrome};

/// One coset `Õ·𝒮` with the orthonormal vectors `|Õ_u⟩ = 2^{r/2}|ÕΠ_u⟩`
/// expressed over its members.
#[derive(Debug, Clone)]
pub struct CosetBlock {
    pub representative: PauliOperator,
    /// `Õ·S^c` in exponent-mask order `c`.
    pub members: Vec<PauliOperator>,
    /// Column `u` holds the coefficients of `|Õ_u⟩` on `members`.
    pub local: DMatrix<C64>,
}

/// Change of basis from Pauli coefficients to the coset-adapted basis
/// `{|Õ_u⟩}` in which `Ê` and `V̂` are block-diagonal.
#[derive(Debug, Clone)]
pub struct BlockBasis {
    n: usize,
    basis: GeneratorBasis,
    cosets: Vec<CosetBlock>,
    /// Coset index of each Pauli, by [`PauliOperator::index`].
    coset_of: Vec<usize>,
}

impl BlockBasis {
    pub fn new(h: &StabilizerHamiltonian) -> Result<Self, DaviesError> {
        let n = h.num_qubits();
        if n > DEFAULT_MAX_QUBITS {
            return Err(DaviesError::CapExceeded {
                n,
                cap: DEFAULT_MAX_QUBITS,
            });
        }
        let basis = h.basis().clone();
        let r = basis.rank();
        let group = basis.elements();
        let projectors: Vec<DMatrix<C64>> = Syndrome::all(r).map(|s| h.projector(&s)).collect();
        let norm = C64::new(2f64.powf(r as f64 / 2.0), 0.0);
        let dim_scale = 1.0 / (1usize << n) as f64;
        let mut coset_of = vec![usize::MAX; 1 << (2 * n)];
        let mut cosets = Vec::new();
        for p in PauliOperator::all(n) {
            if coset_of[p.index()] != usize::MAX {
                continue;
            }
            let rep = basis.canonical_representative(&p);
            let members: Vec<PauliOperator> = group.iter().map(|s| rep * *s).collect();
            for m in &members {
                coset_of[m.index()] = cosets.len();
            }
            let rep_dense = rep.to_dense();
            let mut local = DMatrix::zeros(members.len(), members.len());
            for (u, proj) in projectors.iter().enumerate() {
                let m_u = &rep_dense * proj * norm;
                for (i, q) in members.iter().enumerate() {
                    local[(i, u)] = pauli_trace(q, &m_u) * dim_scale;
                }
            }
            cosets.push(CosetBlock {
                representative: rep,
                members,
                local,
            });
        }
        Ok(Self {
            n,
            basis,
            cosets,
            coset_of,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn cosets(&self) -> &[CosetBlock] {
        &self.cosets
    }

    pub fn coset_index(&self, p: &PauliOperator) -> usize {
        self.coset_of[p.index()]
    }

    /// `|Õ_u⟩` as a full Pauli coefficient vector.
    pub fn vector(&self, coset: usize, u: &Syndrome) -> OperatorVector {
        let block = &self.cosets[coset];
        let mut v = DVector::zeros(1 << (2 * self.n));
        for (i, m) in block.members.iter().enumerate() {
            v[m.index()] = block.local[(i, u.index())];
        }
        v
    }

    /// `θ_{α,Õ}`: the commutation sign of `α` with the coset representative.
    pub fn theta(&self, alpha: &PauliOperator, coset: usize) -> i8 {
        if alpha.anticommutes(&self.cosets[coset].representative) {
            -1
        } else {
            1
        }
    }

    /// `|α∘Õ_u⟩ = (|Õ_u⟩ − |α Õ_u α⟩)/√2`, computed by conjugating the dense
    /// operator.
    pub fn circ_vector(&self, alpha: &PauliOperator, coset: usize, u: &Syndrome) -> OperatorVector {
        let v = self.vector(coset, u);
        let m = devectorize(&v).expect("valid coefficient vector");
        let a = alpha.to_dense();
        let conj = vectorize(&(&a * m * &a)).expect("square operator");
        (v - conj) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }

    /// Unitary whose columns are the `|Õ_u⟩`, coset-major.
    pub fn unitary(&self) -> SuperOpMatrix {
        let dim = 1 << (2 * self.n);
        let mut u = SuperOpMatrix::zeros(dim, dim);
        let width = 1 << self.rank();
        for (c, block) in self.cosets.iter().enumerate() {
            for (i, m) in block.members.iter().enumerate() {
                for k in 0..width {
                    u[(m.index(), c * width + k)] = block.local[(i, k)];
                }
            }
        }
        u
    }

    pub(crate) fn syndrome(&self, p: &PauliOperator) -> Syndrome {
        self.basis.syndrome_unchecked(p)
    }
}

/// `|α∘_u⟩ = (e_u − θ e_{u⊕σ_α})/√2` in label coordinates.
pub(crate) fn circ_label(r: usize, u: Syndrome, sigma_alpha: Syndrome, theta: i8) -> DVector<f64> {
    let mut v = DVector::zeros(1 << r);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    v[u.index()] += h;
    v[(u ^ sigma_alpha).index()] -= theta as f64 * h;
    v
}

/// Residual `‖|P∘Õ_{s⊕σ_Q}⟩ − Σ_t θ_{U_t,Õ}|α_{t+1}∘Õ_{s⊕σ_{U_tQ}}⟩‖` of the
/// telescoping identity along `path`, with `P` the path's endpoint.
pub fn telescopic_check(
    basis: &BlockBasis,
    path: &PauliPath,
    coset: usize,
    s: &Syndrome,
    q: &PauliOperator,
) -> Result<f64, DaviesError> {
    let end = *path.endpoint().ok_or(FlowError::EmptyFlow)?;
    path.validate(&end)?;
    if coset >= basis.cosets.len() {
        return Err(DaviesError::DimensionMismatch {
            expected: basis.cosets.len(),
            found: coset,
        });
    }
    let sq = *s ^ basis.syndrome(q);
    let lhs = basis.circ_vector(&end, coset, &sq);
    let mut rhs = DVector::zeros(lhs.len());
    for e in path.edges() {
        let theta = basis.theta(&e.from, coset) as f64;
        let label = *s ^ basis.syndrome(&(e.from * *q));
        rhs += basis.circ_vector(&e.step(), coset, &label) * C64::new(theta, 0.0);
    }
    Ok((lhs - rhs).norm())
}

/// Label-space Dirichlet block
/// `Ê′_Õ(s) = Σ_Q Σ_α ¼h(ω^α(s⊕σ_Q))p(s⊕σ_Q)|α∘_{s⊕σ_Q}⟩⟨α∘_{s⊕σ_Q}|`.
/// `Σ_Q` is carried out over syndromes, each hit by `4^n/2^r` Paulis.
pub(crate) fn label_dirichlet(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    gibbs: &GibbsWeights,
    rep: &PauliOperator,
    s: &Syndrome,
) -> Result<DMatrix<f64>, DaviesError> {
    let (n, r) = (h.num_qubits(), h.rank());
    let mult = (1u64 << (2 * n - r)) as f64;
    let mut m = DMatrix::zeros(1 << r, 1 << r);
    for x in Syndrome::all(r) {
        let sx = *s ^ x;
        for alpha in PauliOperator::single_site_all(n) {
            let w = 0.25 * rates.rate(h.bohr_frequency(&sx, &alpha)?)? * gibbs.per_state(&sx) * mult;
            let theta = if alpha.anticommutes(rep) { -1 } else { 1 };
            let v = circ_label(r, sx, h.syndrome(&alpha), theta);
            m += &v * v.transpose() * w;
        }
    }
    Ok(m)
}

/// Label-space variance block
/// `V̂_Õ(s) = Σ_Q Σ_P 2^{-n} p(s⊕σ_Q)p(s⊕σ_{PQ})|P∘_{s⊕σ_Q}⟩⟨P∘_{s⊕σ_Q}|`.
/// `Σ_P` is grouped by `(σ_P, θ_{P,Õ})`.
pub(crate) fn label_variance(
    h: &StabilizerHamiltonian,
    gibbs: &GibbsWeights,
    rep: &PauliOperator,
    s: &Syndrome,
) -> DMatrix<f64> {
    let (n, r) = (h.num_qubits(), h.rank());
    let mut counts = vec![[0u64; 2]; 1 << r];
    for p in PauliOperator::all(n) {
        counts[h.syndrome(&p).index()][p.anticommutes(rep) as usize] += 1;
    }
    let mult = (1u64 << (2 * n - r)) as f64;
    let inv_dim = 1.0 / (1u64 << n) as f64;
    let mut m = DMatrix::zeros(1 << r, 1 << r);
    for x in Syndrome::all(r) {
        let sx = *s ^ x;
        for sp in Syndrome::all(r) {
            for (anti, &count) in counts[sp.index()].iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let w = mult * count as f64 * inv_dim * gibbs.per_state(&sx) * gibbs.per_state(&(sx ^ sp));
                let v = circ_label(r, sx, sp, if anti == 1 { -1 } else { 1 });
                m += &v * v.transpose() * w;
            }
        }
    }
    m
}

fn to_complex(m: &DMatrix<f64>) -> SuperOpMatrix {
    m.map(|x| C64::new(x, 0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub representative: PauliOperator,
    #[serde(skip)]
    pub e_block: SuperOpMatrix,
    #[serde(skip)]
    pub v_block: SuperOpMatrix,
    #[serde(skip)]
    pub e_label: DMatrix<f64>,
    #[serde(skip)]
    pub v_label: DMatrix<f64>,
    /// `‖V̂_block − 2^{r−n}V̂_Õ(s)‖_F`.
    pub variance_residual: f64,
    /// Smallest eigenvalue of `Ê_block − 2^{r−n}Ê′_Õ(s)`.
    pub dirichlet_excess_min_eig: f64,
}

/// `Ê` and `V̂` in the coset-adapted basis, compared with the label-space
/// blocks at syndrome `s`.
#[derive(Debug, Clone, Serialize)]
pub struct BlockDecomposition {
    pub syndrome: Syndrome,
    /// `2^{r−n}`, the ratio between operator and label normalisations.
    pub scale: f64,
    /// Largest entry of `U†ÊU` outside the coset blocks.
    pub off_block_e: f64,
    pub off_block_v: f64,
    pub max_variance_residual: f64,
    pub min_dirichlet_excess: f64,
    pub blocks: Vec<BlockReport>,
}

pub fn block_decompose(
    g: &DaviesGenerator,
    basis: &BlockBasis,
    s: &Syndrome,
) -> Result<BlockDecomposition, DaviesError> {
    let h = g.hamiltonian();
    if s.len() != h.rank() {
        return Err(DaviesError::DimensionMismatch {
            expected: h.rank(),
            found: s.len(),
        });
    }
    let (n, r) = (h.num_qubits(), h.rank());
    let u = basis.unitary();
    let e_full = u.adjoint() * g.dirichlet_matrix() * &u;
    let v_full = u.adjoint() * g.variance_matrix() * &u;
    let width = 1usize << r;
    let off = |m: &SuperOpMatrix| {
        let mut worst = 0.0f64;
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if i / width != j / width {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    };
    let scale = 2f64.powi(r as i32 - n as i32);
    let mut blocks = Vec::with_capacity(basis.cosets.len());
    for (c, block) in basis.cosets.iter().enumerate() {
        let e_block = e_full.view((c * width, c * width), (width, width)).into_owned();
        let v_block = v_full.view((c * width, c * width), (width, width)).into_owned();
        let e_label = label_dirichlet(h, g.rates(), g.gibbs(), &block.representative, s)?;
        let v_label = label_variance(h, g.gibbs(), &block.representative, s);
        let variance_residual = (&v_block - to_complex(&v_label) * C64::new(scale, 0.0)).norm();
        let excess = super::hermitian_part(&(&e_block - to_complex(&e_label) * C64::new(scale, 0.0)));
        blocks.push(BlockReport {
            representative: block.representative,
            dirichlet_excess_min_eig: hermitian_eigenvalues(&excess)[0],
            e_block,
            v_block,
            e_label,
            v_label,
            variance_residual,
        });
    }
    Ok(BlockDecomposition {
        syndrome: *s,
        scale,
        off_block_e: off(&e_full),
        off_block_v: off(&v_full),
        max_variance_residual: blocks.iter().map(|b| b.variance_residual).fold(0.0, f64::max),
        min_dirichlet_excess: blocks
            .iter()
            .map(|b| b.dirichlet_excess_min_eig)
            .fold(f64::INFINITY, f64::min),
        blocks,
    })
}
