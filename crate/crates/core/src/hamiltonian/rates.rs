//! Bath rate functions `h(ω)` satisfying the KMS condition
//! `h(-ω) = h(ω)·e^{-βω}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateKind {
    #[default]
    Glauber,
    Metropolis,
}

impl std::str::FromStr for RateKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "glauber" => Ok(RateKind::Glauber),
            "metropolis" => Ok(RateKind::Metropolis),
            other => Err(format!("unknown rate kind {other:?} (glauber|metropolis)")),
        }
    }
}

impl std::fmt::Display for RateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RateKind::Glauber => "glauber",
            RateKind::Metropolis => "metropolis",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    #[error("frequency {omega} outside the declared range [-{max}, {max}]")]
    OutOfRange { omega: f64, max: f64 },
    #[error("inverse temperature must be finite and non-negative, got {0}")]
    InvalidBeta(f64),
    #[error("frequency range must be finite and non-negative, got {0}")]
    InvalidRange(f64),
}

/// A rate function on `[-Δmax, Δmax]` with its extremal values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralRateFunction {
    kind: RateKind,
    beta: f64,
    max_frequency: f64,
    c_lower: f64,
    c_upper: f64,
}

impl SpectralRateFunction {
    pub fn new(kind: RateKind, beta: f64, max_frequency: f64) -> Result<Self, RateError> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(RateError::InvalidBeta(beta));
        }
        if !max_frequency.is_finite() || max_frequency < 0.0 {
            return Err(RateError::InvalidRange(max_frequency));
        }
        // Both kinds are non-decreasing in ω, so the extremes sit at the ends.
        let lo = Self::eval(kind, beta, -max_frequency);
        let hi = Self::eval(kind, beta, max_frequency);
        Ok(Self {
            kind,
            beta,
            max_frequency,
            c_lower: lo,
            c_upper: hi,
        })
    }

    fn eval(kind: RateKind, beta: f64, omega: f64) -> f64 {
        let x = beta * omega;
        match kind {
            RateKind::Glauber => {
                if x >= 0.0 {
                    1.0 / (1.0 + (-x).exp())
                } else {
                    let e = x.exp();
                    e / (1.0 + e)
                }
            }
            RateKind::Metropolis => x.min(0.0).exp(),
        }
    }

    pub fn kind(&self) -> RateKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn max_frequency(&self) -> f64 {
        self.max_frequency
    }

    /// Infimum of the rate over the declared range (`c_∘`).
    pub fn c_lower(&self) -> f64 {
        self.c_lower
    }

    /// Supremum of the rate over the declared range (`C_∘`).
    pub fn c_upper(&self) -> f64 {
        self.c_upper
    }

    pub fn rate(&self, omega: f64) -> Result<f64, RateError> {
        let slack = 1e-12 * (1.0 + self.max_frequency);
        if !omega.is_finite() || omega.abs() > self.max_frequency + slack {
            return Err(RateError::OutOfRange {
                omega,
                max: self.max_frequency,
            });
        }
        Ok(Self::eval(self.kind, self.beta, omega))
    }
}
