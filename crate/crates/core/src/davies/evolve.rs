use std::collections::HashMap;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{devectorize, hermitian_deviation, hermitian_eigenvalues, vectorize, DaviesError, DaviesGenerator, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionPoint {
    pub t: f64,
    pub trace_distance: f64,
    /// `√‖ρ_β^{-1}‖_∞ e^{−t/τ}`, when `τ` was supplied.
    pub envelope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionCurve {
    pub tau: Option<f64>,
    pub inverse_gibbs_norm: f64,
    pub points: Vec<EvolutionPoint>,
}

impl EvolutionCurve {
    /// True when the distance never grows by more than `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.points
            .windows(2)
            .all(|w| w[1].trace_distance <= w[0].trace_distance + tol)
    }

    /// True when every point lies on or below the envelope (up to `tol`).
    pub fn under_envelope(&self, tol: f64) -> bool {
        self.points
            .iter()
            .all(|p| p.envelope.is_none_or(|e| p.trace_distance <= e + tol))
    }

    /// First grid time with distance at most `threshold`.
    pub fn crossing_time(&self, threshold: f64) -> Option<f64> {
        self.points.iter().find(|p| p.trace_distance <= threshold).map(|p| p.t)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,trace_distance,envelope\n");
        for p in &self.points {
            let env = p.envelope.map_or(String::new(), |e| format!("{e:.12e}"));
            out.push_str(&format!("{:.12e},{:.12e},{}\n", p.t, p.trace_distance, env));
        }
        out
    }
}

fn check_density(sigma: &DMatrix<C64>, dim: usize) -> Result<(), DaviesError> {
    if sigma.nrows() != dim || sigma.ncols() != dim {
        return Err(DaviesError::DimensionMismatch {
            expected: dim,
            found: sigma.nrows(),
        });
    }
    let tol = 1e-10;
    if hermitian_deviation(sigma) > tol {
        return Err(DaviesError::NotDensity("not Hermitian".into()));
    }
    let tr = sigma.trace();
    if (tr - C64::new(1.0, 0.0)).norm() > tol {
        return Err(DaviesError::NotDensity(format!("trace {tr}")));
    }
    let min = hermitian_eigenvalues(sigma)[0];
    if min < -tol {
        return Err(DaviesError::NotDensity(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// `‖e^{tL}σ_0 − ρ_β‖_1` on an increasing time grid. Propagators are cached
/// per distinct step, so uniform grids cost one matrix exponential.
pub fn evolve(
    g: &DaviesGenerator,
    sigma0: &DMatrix<C64>,
    times: &[f64],
    tau: Option<f64>,
) -> Result<EvolutionCurve, DaviesError> {
    let dim = 1usize << g.num_qubits();
    check_density(sigma0, dim)?;
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(DaviesError::NotDensity(
            "times must be finite, non-negative and sorted".into(),
        ));
    }
    let l = g.liouvillian_matrix();
    let rho = g.gibbs_state();
    let inv = g.gibbs().inverse_norm();
    let mut cache: HashMap<u64, DMatrix<C64>> = HashMap::new();
    let mut state = vectorize(sigma0)?;
    let mut now = 0.0;
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - now;
        if dt > 0.0 {
            // Round the step so floating noise in grids shares one propagator.
            let key = (dt * 1e12).round() as u64;
            let prop = cache.entry(key).or_insert_with(|| (&l * C64::new(dt, 0.0)).exp());
            state = &*prop * state;
            now = t;
        }
        let diff = devectorize(&state)? - rho;
        let distance = hermitian_eigenvalues(&super::hermitian_part(&diff))
            .iter()
            .map(|x| x.abs())
            .sum();
        points.push(EvolutionPoint {
            t,
            trace_distance: distance,
            envelope: tau.map(|tau| inv.sqrt() * (-t / tau).exp()),
        });
    }
    Ok(EvolutionCurve {
        tau,
        inverse_gibbs_norm: inv,
        points,
    })
}
