use std::process::ExitCode;

use febarrier::davies::DaviesError;
use febarrier::flow::FlowError;
use febarrier::io::IoError;
use febarrier::kmc::KmcError;
use febarrier::SCHEMA_VERSION;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Validation,
    Cap,
    Certificate,
}

impl Kind {
    fn code(self) -> u8 {
        match self {
            Kind::Validation => 1,
            Kind::Cap => 2,
            Kind::Certificate => 3,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Validation => "validation",
            Kind::Cap => "cap_exceeded",
            Kind::Certificate => "certificate_failure",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Validation,
            message: message.into(),
        }
    }

    pub fn cap(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Cap,
            message: message.into(),
        }
    }

    pub fn certificate(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Certificate,
            message: message.into(),
        }
    }

    /// Writes the machine-readable error to stderr and returns its exit code.
    pub fn report(&self) -> ExitCode {
        let body = json!({
            "schema": SCHEMA_VERSION,
            "error": { "kind": self.kind.name(), "exit_code": self.kind.code(), "message": self.message },
        });
        eprintln!("{body}");
        ExitCode::from(self.kind.code())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match &e {
            IoError::Flow {
                source: FlowError::CapExceeded { .. },
                ..
            } => Self::cap(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        match e {
            FlowError::CapExceeded { .. } | FlowError::SearchBudgetExhausted { .. } => Self::cap(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<DaviesError> for CliError {
    fn from(e: DaviesError) -> Self {
        match e {
            DaviesError::CapExceeded { .. } => Self::cap(e.to_string()),
            DaviesError::Flow(f) => f.into(),
            DaviesError::InfiniteSupportNumber | DaviesError::CertificateFailed(_) => Self::certificate(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<KmcError> for CliError {
    fn from(e: KmcError) -> Self {
        match e {
            KmcError::CapExceeded { .. } => Self::cap(e.to_string()),
            KmcError::FitFailure(_) => Self::certificate(e.to_string()),
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<febarrier::hamiltonian::HamiltonianError> for CliError {
    fn from(e: febarrier::hamiltonian::HamiltonianError) -> Self {
        Self::validation(e.to_string())
    }
}

impl From<febarrier::PauliError> for CliError {
    fn from(e: febarrier::PauliError) -> Self {
        Self::validation(e.to_string())
    }
}
