//! Pauli paths, flows and their free-energy functional.
//!
//! A path is a sequence of Paulis starting at the identity in which
//! consecutive entries differ by one single-site Pauli. A flow collects
//! distinct paths toward one target; the multiplicity `Ω_P(e)` of an edge is
//! the number of paths divided by the number of paths through `e`, kept as
//! an exact rational.

mod certificate;
mod layer;
mod lift;
mod search;

pub use certificate::{flow_free_energy, EdgeEntry, FreeEnergyCertificate, Witness};
pub use layer::{layer_flow_bound, synthetic_layer_flow, LayerBound, LayerEdge, SyntheticLayerFlow};
pub use lift::{degeneracy_lift, zeta_path, LiftedFlow};
pub use search::{bottleneck_path_search, ensemble_flow_generate, BottleneckPath, SearchOptions};

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::{GeneratorBasis, Letter, PauliError, PauliOperator};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("path does not start at the identity")]
    WrongStart,
    #[error("step {index} changes {weight} sites, expected exactly one")]
    NotSingleSite { index: usize, weight: usize },
    #[error("path ends at {found}, expected {expected}")]
    WrongEndpoint { expected: String, found: String },
    #[error("path {path} ends at {found}, which is not stabilizer-equivalent to {target}")]
    NotStabilizerEquivalent { path: usize, target: String, found: String },
    #[error("flow set has two flows for target {0}")]
    DuplicateTarget(String),
    #[error("flow set has no flow for target {0}")]
    MissingTarget(String),
    #[error("a flow needs at least one path")]
    EmptyFlow,
    #[error("path {0} duplicates an earlier path")]
    DuplicatePath(usize),
    #[error("edge {0} does not belong to any path of the flow")]
    EdgeAbsent(String),
    #[error("inverse temperature must be positive, got {0}")]
    InvalidBeta(f64),
    #[error("bad step token {0:?}; expected a letter and a 1-based site such as X3")]
    BadToken(String),
    #[error("{what} = {value} exceeds the cap {cap}")]
    CapExceeded { what: &'static str, value: u128, cap: u128 },
    #[error("invalid layer parameter: {0}")]
    InvalidLayerParameter(String),
    #[error("search budget of {budget} states exhausted; best path found has barrier {}", .best.barrier)]
    SearchBudgetExhausted { budget: usize, best: Box<BottleneckPath> },
}

/// Ordered pair of consecutive path entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Edge {
    pub from: PauliOperator,
    pub to: PauliOperator,
}

impl Edge {
    /// Single-site letter `α_e = U_e V_e`.
    pub fn step(&self) -> PauliOperator {
        self.from * self.to
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} -> {})", self.from, self.to)
    }
}

/// `(U_0 = 1, U_1, …, U_T)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PauliPath {
    steps: Vec<PauliOperator>,
}

impl PauliPath {
    /// Wraps a state sequence without validation; see [`PauliPath::validate`].
    pub fn from_states(steps: Vec<PauliOperator>) -> Self {
        Self { steps }
    }

    /// Builds the path obtained by applying `letters` in order from the
    /// identity.
    pub fn from_letters(n: usize, letters: &[PauliOperator]) -> Result<Self, FlowError> {
        let mut steps = Vec::with_capacity(letters.len() + 1);
        let mut cur = PauliOperator::identity(n);
        steps.push(cur);
        for (i, a) in letters.iter().enumerate() {
            cur = cur.multiply(a)?;
            if a.weight() != 1 {
                return Err(FlowError::NotSingleSite {
                    index: i,
                    weight: a.weight(),
                });
            }
            steps.push(cur);
        }
        Ok(Self { steps })
    }

    /// Parses step tokens such as `["X1", "Z3"]`.
    pub fn from_tokens<S: AsRef<str>>(n: usize, tokens: &[S]) -> Result<Self, FlowError> {
        let letters = tokens
            .iter()
            .map(|t| parse_token(n, t.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_letters(n, &letters)
    }

    /// The ascending-site path `P_1, P_1P_2, …` to `p`.
    pub fn ascending(p: &PauliOperator) -> Self {
        let n = p.num_qubits();
        let letters: Vec<_> = p
            .support()
            .into_iter()
            .map(|site| PauliOperator::single(n, site, p.letter(site)).expect("site in range"))
            .collect();
        Self::from_letters(n, &letters).expect("single-site letters")
    }

    pub fn states(&self) -> &[PauliOperator] {
        &self.steps
    }

    /// `|γ| = T`.
    pub fn len(&self) -> usize {
        self.steps.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn start(&self) -> Option<&PauliOperator> {
        self.steps.first()
    }

    pub fn endpoint(&self) -> Option<&PauliOperator> {
        self.steps.last()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.steps.windows(2).map(|w| Edge { from: w[0], to: w[1] })
    }

    /// Step letters `α_1..α_T`.
    pub fn letters(&self) -> Vec<PauliOperator> {
        self.edges().map(|e| e.step()).collect()
    }

    /// Tokens such as `X3`, inverse of [`PauliPath::from_tokens`].
    pub fn tokens(&self) -> Vec<String> {
        self.letters()
            .iter()
            .map(|a| {
                let site = a.support()[0];
                format!("{}{}", a.letter(site).as_char(), site + 1)
            })
            .collect()
    }

    /// Checks the structural conditions (identity start, single-site steps)
    /// and the endpoint.
    pub fn validate(&self, target: &PauliOperator) -> Result<(), FlowError> {
        self.validate_structure(target.num_qubits())?;
        let end = self.endpoint().expect("non-empty after structural check");
        if end != target {
            return Err(FlowError::WrongEndpoint {
                expected: target.to_string(),
                found: end.to_string(),
            });
        }
        Ok(())
    }

    fn validate_structure(&self, n: usize) -> Result<(), FlowError> {
        let first = self.start().ok_or(FlowError::WrongStart)?;
        if first.num_qubits() != n {
            return Err(PauliError::QubitMismatch(n, first.num_qubits()).into());
        }
        if !first.is_identity() {
            return Err(FlowError::WrongStart);
        }
        for (index, w) in self.steps.windows(2).enumerate() {
            let weight = w[0].multiply(&w[1])?.weight();
            if weight != 1 {
                return Err(FlowError::NotSingleSite { index, weight });
            }
        }
        Ok(())
    }

    /// `self` followed by `tail`'s steps, each multiplied onto the endpoint.
    pub fn concat(&self, tail: &PauliPath) -> PauliPath {
        let end = *self.endpoint().expect("non-empty path");
        let mut steps = self.steps.clone();
        steps.extend(tail.steps.iter().skip(1).map(|q| *q * end));
        PauliPath { steps }
    }
}

fn parse_token(n: usize, token: &str) -> Result<PauliOperator, FlowError> {
    let bad = || FlowError::BadToken(token.to_string());
    let mut chars = token.chars();
    let letter = chars.next().and_then(Letter::from_char).ok_or_else(bad)?;
    if letter == Letter::I {
        return Err(bad());
    }
    let site: usize = chars.as_str().parse().map_err(|_| bad())?;
    if site == 0 {
        return Err(bad());
    }
    Ok(PauliOperator::single(n, site - 1, letter)?)
}

impl FromStr for Edge {
    type Err = FlowError;

    /// Parses `FROM->TO`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once("->").ok_or_else(|| FlowError::BadToken(s.to_string()))?;
        Ok(Edge {
            from: a.trim().parse()?,
            to: b.trim().parse()?,
        })
    }
}

/// Counts how many items of a collection contain each label.
#[derive(Debug, Clone)]
pub struct EdgeIndex<E: Eq + Hash> {
    total: u64,
    counts: HashMap<E, u64>,
}

impl<E: Eq + Hash + Clone> EdgeIndex<E> {
    /// `items` yields, per path, the labels it contains; repeated labels
    /// within a path count once.
    pub fn build<I, J>(items: I) -> Self
    where
        I: IntoIterator<Item = J>,
        J: IntoIterator<Item = E>,
    {
        let mut total = 0;
        let mut counts = HashMap::new();
        for labels in items {
            total += 1;
            let mut seen = std::collections::HashSet::new();
            for e in labels {
                if seen.insert(e.clone()) {
                    *counts.entry(e).or_insert(0) += 1;
                }
            }
        }
        Self { total, counts }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, e: &E) -> Option<u64> {
        self.counts.get(e).copied()
    }

    /// `Ω(e) = total / count(e)`.
    pub fn omega(&self, e: &E) -> Option<Ratio<u64>> {
        self.count(e).map(|c| Ratio::new(self.total, c))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&E, u64)> {
        self.counts.iter().map(|(e, &c)| (e, c))
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Distinct paths toward one target, with their edge multiplicities.
#[derive(Debug, Clone)]
pub struct PauliFlow {
    target: PauliOperator,
    paths: Vec<PauliPath>,
    index: EdgeIndex<Edge>,
}

impl PauliFlow {
    /// Every path must end exactly at `target`.
    pub fn new(target: PauliOperator, paths: Vec<PauliPath>) -> Result<Self, FlowError> {
        for p in &paths {
            p.validate(&target)?;
        }
        Self::assemble(target, paths)
    }

    /// Paths may end anywhere in the coset `target·𝒮`; this is the input
    /// form of [`degeneracy_lift`].
    pub fn up_to_stabilizer(
        target: PauliOperator,
        paths: Vec<PauliPath>,
        basis: &GeneratorBasis,
    ) -> Result<Self, FlowError> {
        for (i, p) in paths.iter().enumerate() {
            p.validate_structure(target.num_qubits())?;
            let end = *p.endpoint().expect("validated");
            if basis.in_group(&(end * target)).is_none() {
                return Err(FlowError::NotStabilizerEquivalent {
                    path: i,
                    target: target.to_string(),
                    found: end.to_string(),
                });
            }
        }
        Self::assemble(target, paths)
    }

    fn assemble(target: PauliOperator, paths: Vec<PauliPath>) -> Result<Self, FlowError> {
        if paths.is_empty() {
            return Err(FlowError::EmptyFlow);
        }
        let mut seen = std::collections::HashSet::new();
        for (i, p) in paths.iter().enumerate() {
            if !seen.insert(p) {
                return Err(FlowError::DuplicatePath(i));
            }
        }
        let index = EdgeIndex::build(paths.iter().map(|p| p.edges().collect::<Vec<_>>()));
        Ok(Self { target, paths, index })
    }

    pub fn single(target: PauliOperator, path: PauliPath) -> Result<Self, FlowError> {
        Self::new(target, vec![path])
    }

    pub fn target(&self) -> &PauliOperator {
        &self.target
    }

    pub fn paths(&self) -> &[PauliPath] {
        &self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    pub fn index(&self) -> &EdgeIndex<Edge> {
        &self.index
    }

    /// `Ω_P(e)` for an edge used by at least one path.
    pub fn omega(&self, e: &Edge) -> Result<Ratio<u64>, FlowError> {
        self.index.omega(e).ok_or_else(|| FlowError::EdgeAbsent(e.to_string()))
    }

    /// Indexed edges in a deterministic order.
    pub fn edges_sorted(&self) -> Vec<(Edge, u64)> {
        let mut v: Vec<_> = self.index.iter().map(|(e, c)| (*e, c)).collect();
        v.sort();
        v
    }

    /// Largest `ε̄_P(U_e)` over the flow's edges.
    pub fn energy_barrier(&self, h: &crate::StabilizerHamiltonian) -> f64 {
        self.index
            .iter()
            .map(|(e, _)| h.step_barrier_unchecked(&self.target, &e.from))
            .fold(0.0, f64::max)
    }
}

/// One flow for every Pauli target, indexed by [`PauliOperator::index`].
#[derive(Debug, Clone)]
pub struct FlowSet {
    n: usize,
    flows: Vec<PauliFlow>,
}

/// Largest `n` for which a complete flow set is enumerated.
pub const FLOW_SET_MAX_QUBITS: usize = 8;

impl FlowSet {
    /// `flows` must contain exactly one flow per target, in any order.
    pub fn new(n: usize, flows: Vec<PauliFlow>) -> Result<Self, FlowError> {
        check_flow_set_size(n)?;
        let mut slots: Vec<Option<PauliFlow>> = vec![None; 1 << (2 * n)];
        for f in flows {
            if f.target().num_qubits() != n {
                return Err(PauliError::QubitMismatch(n, f.target().num_qubits()).into());
            }
            let i = f.target().index();
            if slots[i].is_some() {
                return Err(FlowError::DuplicateTarget(f.target().to_string()));
            }
            slots[i] = Some(f);
        }
        let flows = slots
            .into_iter()
            .enumerate()
            .map(|(i, f)| f.ok_or_else(|| FlowError::MissingTarget(PauliOperator::from_index(n, i).to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n, flows })
    }

    /// Bottleneck-optimal single path for every target.
    pub fn bottleneck(h: &crate::StabilizerHamiltonian, opts: SearchOptions) -> Result<Self, FlowError> {
        let n = h.num_qubits();
        check_flow_set_size(n)?;
        let flows = PauliOperator::all(n)
            .map(|t| {
                let b = match bottleneck_path_search(h, &t, opts) {
                    Ok(b) => b,
                    Err(FlowError::SearchBudgetExhausted { best, .. }) => *best,
                    Err(e) => return Err(e),
                };
                PauliFlow::single(t, b.path)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n, flows })
    }

    /// [`ensemble_flow_generate`] with the given budget for every target.
    pub fn ensemble(h: &crate::StabilizerHamiltonian, budget: usize, opts: SearchOptions) -> Result<Self, FlowError> {
        let n = h.num_qubits();
        check_flow_set_size(n)?;
        let flows = PauliOperator::all(n)
            .map(|t| ensemble_flow_generate(h, &t, budget, opts))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n, flows })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn get(&self, target: &PauliOperator) -> &PauliFlow {
        &self.flows[target.index()]
    }

    pub fn flows(&self) -> &[PauliFlow] {
        &self.flows
    }

    /// Longest path `L`.
    pub fn max_path_len(&self) -> usize {
        self.paths().map(|g| g.len()).max().unwrap_or(0)
    }

    /// Largest number of times one single-site letter occurs in one path.
    pub fn max_letter_repeats(&self) -> usize {
        self.paths()
            .map(|g| {
                let mut counts: HashMap<PauliOperator, usize> = HashMap::new();
                for a in g.letters() {
                    *counts.entry(a).or_insert(0) += 1;
                }
                counts.into_values().max().unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// `max(n, L·μ)`: the path-length factor of the support-number bound.
    pub fn effective_length(&self) -> usize {
        self.n.max(self.max_path_len() * self.max_letter_repeats())
    }

    pub fn free_energy(&self, h: &crate::StabilizerHamiltonian, beta: f64) -> Result<FreeEnergyCertificate, FlowError> {
        flow_free_energy(&self.flows, h, beta)
    }

    fn paths(&self) -> impl Iterator<Item = &PauliPath> {
        self.flows.iter().flat_map(|f| f.paths().iter())
    }
}

fn check_flow_set_size(n: usize) -> Result<(), FlowError> {
    if n > FLOW_SET_MAX_QUBITS {
        return Err(FlowError::CapExceeded {
            what: "n",
            value: n as u128,
            cap: FLOW_SET_MAX_QUBITS as u128,
        });
    }
    Ok(())
}
