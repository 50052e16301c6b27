use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::blocks::{circ_label, label_dirichlet, label_variance};
use super::DaviesError;
use crate::flow::{Edge, FlowSet};
use crate::hamiltonian::{GibbsWeights, SpectralRateFunction, StabilizerHamiltonian};
use crate::pauli::{PauliOperator, Syndrome};

/// Largest `n` for which the factorization is assembled (`4^n·4^n·|Γ|`
/// columns).
pub const FACTOR_MAX_QUBITS: usize = 3;

/// Row `(X, α)` of `W`; the row's edge for a column with base `Q` is
/// `(XQ → αXQ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct RowKey {
    pub state: PauliOperator,
    pub letter: PauliOperator,
}

/// Column `(Q, P, γ)` of `B` and `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColumnKey {
    pub base: PauliOperator,
    pub target: PauliOperator,
    pub path: usize,
}

/// Squared norm of the `W` entries belonging to one base `Q` and one edge,
/// directly and in closed form.
#[derive(Debug, Clone, Serialize)]
pub struct RowNormCheck {
    pub base: PauliOperator,
    pub edge: Edge,
    pub direct: f64,
    pub closed_form: f64,
}

/// `A·W = B` for one coset representative `Õ` and syndrome `s`, in label
/// coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct AwbFactorization {
    pub representative: PauliOperator,
    pub syndrome: Syndrome,
    pub rows: Vec<RowKey>,
    pub columns: Vec<ColumnKey>,
    #[serde(skip)]
    pub a: DMatrix<f64>,
    #[serde(skip)]
    pub b: DMatrix<f64>,
    /// Sparse columns of `W` as `(row, value)`.
    #[serde(skip)]
    pub w: Vec<Vec<(usize, f64)>>,
    #[serde(skip)]
    pub e_label: DMatrix<f64>,
    #[serde(skip)]
    pub v_label: DMatrix<f64>,
    /// `‖AAᵀ − Ê′_Õ(s)‖_F`.
    pub residual_e: f64,
    /// `‖BBᵀ − V̂_Õ(s)‖_F`.
    pub residual_v: f64,
    /// `‖AW − B‖_F`.
    pub residual_awb: f64,
    pub row_checks: Vec<RowNormCheck>,
}

impl AwbFactorization {
    /// `‖w_k‖²` for every row.
    pub fn row_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows.len()];
        for col in &self.w {
            for &(k, v) in col {
                out[k] += v * v;
            }
        }
        out
    }

    /// `max_m Σ_{k: W_km ≠ 0} ‖w_k‖²`, an upper bound on the support number
    /// of the label-space pencil.
    pub fn tau_factorization(&self) -> f64 {
        let norms = self.row_norms();
        self.w
            .iter()
            .map(|col| col.iter().map(|&(k, _)| norms[k]).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_row_norm_mismatch(&self) -> f64 {
        self.row_checks
            .iter()
            .map(|c| (c.direct - c.closed_form).abs() / c.closed_form.abs().max(1e-300))
            .fold(0.0, f64::max)
    }

    /// Dense `W`.
    pub fn w_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.rows.len(), self.w.len());
        for (j, col) in self.w.iter().enumerate() {
            for &(k, v) in col {
                m[(k, j)] += v;
            }
        }
        m
    }
}

fn letter_index(alpha: &PauliOperator) -> usize {
    let site = alpha.support()[0];
    let (x, z) = alpha.letter(site).bits();
    // X, Y, Z in the order of `single_site_all`.
    3 * site
        + match (x, z) {
            (true, false) => 0,
            (true, true) => 1,
            _ => 2,
        }
}

struct Ctx<'a> {
    h: &'a StabilizerHamiltonian,
    rates: &'a SpectralRateFunction,
    gibbs: &'a GibbsWeights,
    s: Syndrome,
}

impl Ctx<'_> {
    fn p(&self, x: &PauliOperator) -> f64 {
        self.gibbs.per_state(&(self.s ^ self.h.syndrome(x)))
    }

    fn rate(&self, alpha: &PauliOperator, x: &PauliOperator) -> Result<f64, DaviesError> {
        let sx = self.s ^ self.h.syndrome(x);
        Ok(self.rates.rate(self.h.bohr_frequency(&sx, alpha)?)?)
    }

    /// `4/(2^n h(ω^α(s⊕σ_X)) p(s⊕σ_X)) · Σ_P p(s⊕σ_Q)p(s⊕σ_{PQ})/Ω_P(e)`
    /// with `X = U_eQ`.
    fn closed_form(&self, flows: &FlowSet, q: &PauliOperator, edge: &Edge) -> Result<f64, DaviesError> {
        let n = self.h.num_qubits();
        let x = edge.from * *q;
        let alpha = edge.step();
        let mut sum = 0.0;
        let mut used = false;
        for f in flows.flows() {
            if let Some(w) = f.index().omega(edge) {
                used = true;
                let omega = *w.numer() as f64 / *w.denom() as f64;
                sum += self.p(q) * self.p(&(*f.target() * *q)) / omega;
            }
        }
        if !used {
            return Err(DaviesError::EdgeAbsent(edge.to_string()));
        }
        Ok(4.0 / ((1u64 << n) as f64 * self.rate(&alpha, &x)? * self.p(&x)) * sum)
    }
}

/// Standalone closed-form squared row norm for base `Q` and edge `e`.
pub fn closed_form_row_norm(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    flows: &FlowSet,
    s: &Syndrome,
    q: &PauliOperator,
    edge: &Edge,
) -> Result<f64, DaviesError> {
    let gibbs = h.gibbs(rates.beta());
    Ctx {
        h,
        rates,
        gibbs: &gibbs,
        s: *s,
    }
    .closed_form(flows, q, edge)
}

/// Assembles `A`, `W` and `B` for representative `rep` at syndrome `s`.
pub fn assemble_awb(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    flows: &FlowSet,
    rep: &PauliOperator,
    s: &Syndrome,
) -> Result<AwbFactorization, DaviesError> {
    let (n, r) = (h.num_qubits(), h.rank());
    if r == 0 {
        return Err(DaviesError::NoStabilizers);
    }
    if n > FACTOR_MAX_QUBITS {
        return Err(DaviesError::CapExceeded {
            n,
            cap: FACTOR_MAX_QUBITS,
        });
    }
    if flows.num_qubits() != n || rep.num_qubits() != n {
        return Err(DaviesError::DimensionMismatch {
            expected: n,
            found: flows.num_qubits(),
        });
    }
    if s.len() != r {
        return Err(DaviesError::DimensionMismatch {
            expected: r,
            found: s.len(),
        });
    }
    let gibbs = h.gibbs(rates.beta());
    let ctx = Ctx {
        h,
        rates,
        gibbs: &gibbs,
        s: *s,
    };
    let theta = |p: &PauliOperator| if p.anticommutes(rep) { -1i8 } else { 1 };
    let letters = PauliOperator::single_site_all(n);
    let dim = 1usize << r;
    let inv_dim = 1.0 / (1u64 << n) as f64;

    let mut rows = Vec::with_capacity((1 << (2 * n)) * letters.len());
    let mut a = DMatrix::zeros(dim, (1 << (2 * n)) * letters.len());
    let mut row_scale = Vec::with_capacity(a.ncols());
    for x in PauliOperator::all(n) {
        for alpha in &letters {
            let k = rows.len();
            let weight = 0.25 * ctx.rate(alpha, &x)? * ctx.p(&x);
            let v = circ_label(r, *s ^ h.syndrome(&x), h.syndrome(alpha), theta(alpha));
            a.set_column(k, &(v * weight.sqrt()));
            rows.push(RowKey {
                state: x,
                letter: *alpha,
            });
            row_scale.push(weight);
        }
    }
    let row_of = |x: &PauliOperator, alpha: &PauliOperator| x.index() * letters.len() + letter_index(alpha);

    let mut columns = Vec::new();
    let mut b_cols: Vec<DVector<f64>> = Vec::new();
    let mut w = Vec::new();
    // (Q, edge) → Σ of squared W entries.
    let mut per_edge: HashMap<(PauliOperator, Edge), f64> = HashMap::new();
    for q in PauliOperator::all(n) {
        for f in flows.flows() {
            let p = *f.target();
            let gamma = f.num_paths() as f64;
            let pair = ctx.p(&q) * ctx.p(&(p * q));
            for (gi, path) in f.paths().iter().enumerate() {
                let end = *path.endpoint().expect("validated path");
                let b_weight = (pair * inv_dim).sqrt() / gamma.sqrt();
                b_cols.push(circ_label(r, *s ^ h.syndrome(&q), h.syndrome(&end), theta(&end)) * b_weight);
                let mut col = Vec::with_capacity(path.len());
                for e in path.edges() {
                    let x = e.from * q;
                    let alpha = e.step();
                    let coef = (4.0 * pair * inv_dim / (ctx.rate(&alpha, &x)? * ctx.p(&x))).sqrt();
                    let v = coef * theta(&e.from) as f64 / gamma.sqrt();
                    col.push((row_of(&x, &alpha), v));
                    *per_edge.entry((q, e)).or_insert(0.0) += v * v;
                }
                w.push(col);
                columns.push(ColumnKey {
                    base: q,
                    target: p,
                    path: gi,
                });
            }
        }
    }
    let b = DMatrix::from_columns(&b_cols);

    let mut aw = DMatrix::zeros(dim, w.len());
    for (j, col) in w.iter().enumerate() {
        for &(k, v) in col {
            let mut c = aw.column_mut(j);
            c.axpy(v, &a.column(k), 1.0);
        }
    }
    let e_label = label_dirichlet(h, rates, &gibbs, rep, s)?;
    let v_label = label_variance(h, &gibbs, rep, s);
    let mut row_checks = Vec::with_capacity(per_edge.len());
    let mut keys: Vec<_> = per_edge.keys().copied().collect();
    keys.sort_by_key(|(q, e)| (q.index(), *e));
    for (q, e) in keys {
        row_checks.push(RowNormCheck {
            base: q,
            edge: e,
            direct: per_edge[&(q, e)],
            closed_form: ctx.closed_form(flows, &q, &e)?,
        });
    }
    Ok(AwbFactorization {
        representative: *rep,
        syndrome: *s,
        residual_e: (&a * a.transpose() - &e_label).norm(),
        residual_v: (&b * b.transpose() - &v_label).norm(),
        residual_awb: (aw - &b).norm(),
        rows,
        columns,
        a,
        b,
        w,
        e_label,
        v_label,
        row_checks,
    })
}

/// `max_s τ_fact(s)`. The magnitudes of `W` do not depend on the coset
/// representative, so the identity coset suffices.
pub fn factorization_bound(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    flows: &FlowSet,
) -> Result<f64, DaviesError> {
    let id = PauliOperator::identity(h.num_qubits());
    let mut best = 0.0f64;
    for s in Syndrome::all(h.rank()) {
        best = best.max(assemble_awb(h, rates, flows, &id, &s)?.tau_factorization());
    }
    Ok(best)
}
