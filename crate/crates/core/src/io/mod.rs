//! JSON formats for codes, flows and certificates.
//!
//! Code file: `{"n": 3, "terms": [{"pauli": "ZZI", "J": 1.0}, ...]}`.
//! Flow file: either one flow `{"target": "XX", "paths": [["X1", "X2"]]}`
//! or `{"flows": [...]}`; step tokens are a letter and a 1-based site.
//! Path endpoints may differ from the target by a stabilizer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::{flow_free_energy, FlowError, FreeEnergyCertificate, PauliFlow, PauliPath};
use crate::hamiltonian::{HamiltonianError, StabilizerHamiltonian, Term};
use crate::pauli::{PauliError, PauliOperator};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("term {term}: {source}")]
    Term { term: usize, source: PauliError },
    #[error("term {term}: qubit count {found} does not match n = {n}")]
    TermSize { term: usize, n: usize, found: usize },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error("flow {flow}: {source}")]
    Flow { flow: usize, source: FlowError },
    #[error("flow {flow}, path {path}: {source}")]
    Path {
        flow: usize,
        path: usize,
        source: FlowError,
    },
    #[error("unsupported schema {found:?}, expected {expected:?}")]
    Schema { found: String, expected: &'static str },
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> Self {
        IoError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub pauli: String,
    #[serde(rename = "J")]
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSpec {
    pub n: usize,
    pub terms: Vec<TermSpec>,
}

impl CodeSpec {
    pub fn from_hamiltonian(h: &StabilizerHamiltonian) -> Self {
        Self {
            n: h.num_qubits(),
            terms: h
                .terms()
                .iter()
                .map(|t| TermSpec {
                    pauli: t.pauli.to_string(),
                    coupling: t.coupling,
                })
                .collect(),
        }
    }

    pub fn build(&self) -> Result<StabilizerHamiltonian, IoError> {
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let pauli: PauliOperator = t.pauli.parse().map_err(|source| IoError::Term { term: i, source })?;
                if pauli.num_qubits() != self.n {
                    return Err(IoError::TermSize {
                        term: i,
                        n: self.n,
                        found: pauli.num_qubits(),
                    });
                }
                Ok(Term {
                    pauli,
                    coupling: t.coupling,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(StabilizerHamiltonian::new(self.n, terms)?)
    }
}

pub fn parse_code(json: &str) -> Result<StabilizerHamiltonian, IoError> {
    serde_json::from_str::<CodeSpec>(json)?.build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub target: String,
    pub paths: Vec<Vec<String>>,
}

impl FlowSpec {
    pub fn from_flow(f: &PauliFlow) -> Self {
        Self {
            target: f.target().to_string(),
            paths: f.paths().iter().map(|p| p.tokens()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlowFile {
    Many { flows: Vec<FlowSpec> },
    One(FlowSpec),
}

impl FlowFile {
    pub fn specs(&self) -> &[FlowSpec] {
        match self {
            FlowFile::Many { flows } => flows,
            FlowFile::One(f) => std::slice::from_ref(f),
        }
    }
}

/// Builds flows against `h`'s stabilizer group.
pub fn build_flows(specs: &[FlowSpec], h: &StabilizerHamiltonian) -> Result<Vec<PauliFlow>, IoError> {
    let n = h.num_qubits();
    specs
        .iter()
        .enumerate()
        .map(|(fi, spec)| {
            let target: PauliOperator = spec.target.parse().map_err(|e: PauliError| IoError::Flow {
                flow: fi,
                source: e.into(),
            })?;
            if target.num_qubits() != n {
                return Err(IoError::Flow {
                    flow: fi,
                    source: PauliError::QubitMismatch(n, target.num_qubits()).into(),
                });
            }
            let paths = spec
                .paths
                .iter()
                .enumerate()
                .map(|(pi, toks)| {
                    PauliPath::from_tokens(n, toks).map_err(|source| IoError::Path {
                        flow: fi,
                        path: pi,
                        source,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            PauliFlow::up_to_stabilizer(target, paths, h.basis()).map_err(|source| IoError::Flow { flow: fi, source })
        })
        .collect()
}

pub fn parse_flows(json: &str, h: &StabilizerHamiltonian) -> Result<Vec<PauliFlow>, IoError> {
    let file: FlowFile = serde_json::from_str(json)?;
    build_flows(file.specs(), h)
}

/// Self-contained certificate: the flows it was computed from, the code and
/// the per-edge table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub schema: String,
    pub code: CodeSpec,
    pub flows: Vec<FlowSpec>,
    pub certificate: FreeEnergyCertificate,
}

impl CertificateFile {
    pub fn new(h: &StabilizerHamiltonian, flows: &[PauliFlow], certificate: FreeEnergyCertificate) -> Self {
        Self {
            schema: SCHEMA_VERSION.to_string(),
            code: CodeSpec::from_hamiltonian(h),
            flows: flows.iter().map(FlowSpec::from_flow).collect(),
            certificate,
        }
    }

    pub fn parse(json: &str) -> Result<Self, IoError> {
        let c: Self = serde_json::from_str(json)?;
        if c.schema != SCHEMA_VERSION {
            return Err(IoError::Schema {
                found: c.schema,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(c)
    }

    /// Rebuilds code and flows and recomputes the certificate; returns the
    /// recomputed one and whether `f_bar` agrees within `tol`.
    pub fn verify(&self, tol: f64) -> Result<(FreeEnergyCertificate, bool), IoError> {
        let h = self.code.build()?;
        let flows = build_flows(&self.flows, &h)?;
        let again =
            flow_free_energy(&flows, &h, self.certificate.beta).map_err(|source| IoError::Flow { flow: 0, source })?;
        let ok = (again.f_bar - self.certificate.f_bar).abs() <= tol
            && again.entries.len() == self.certificate.entries.len();
        Ok((again, ok))
    }
}
