use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{compensated_sum, run_ensemble, ErrorState, KmcError, Trajectory, TrajectoryConfig};
use crate::hamiltonian::{SpectralRateFunction, StabilizerHamiltonian};
use crate::pauli::PauliOperator;

/// Smallest ensemble accepted by [`relaxation_estimate`].
pub const MIN_TRAJECTORIES: usize = 100;
const BATCHES: usize = 10;
const BURN_IN: f64 = 0.1;
/// Points whose deviation is within this many standard errors of zero are
/// treated as noise.
const NOISE_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationEstimate {
    /// Fitted decay rate `λ̂`.
    pub rate: f64,
    /// Standard error from independent batches of trajectories.
    pub stderr: f64,
    pub points_used: usize,
    pub batches_used: usize,
    pub window: (f64, f64),
    pub trajectories: usize,
}

/// Weighted least squares of `ln|m_k − m_∞|` on `t_k` over the leading run
/// of points that stand clear of the noise floor.
fn fit_decay(times: &[f64], means: &[f64], ses: &[f64], stationary: f64) -> Option<(f64, usize)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for ((&t, &m), &se) in times.iter().zip(means).zip(ses) {
        let d = (m - stationary).abs();
        if d <= NOISE_SIGMAS * se || d == 0.0 {
            break;
        }
        xs.push(t);
        ys.push(d.ln());
        ws.push(if se > 0.0 { (d / se).powi(2) } else { 1.0 });
    }
    if xs.len() < 3 {
        return None;
    }
    let sw = compensated_sum(ws.iter().copied());
    let xbar = compensated_sum(xs.iter().zip(&ws).map(|(x, w)| x * w)) / sw;
    let ybar = compensated_sum(ys.iter().zip(&ws).map(|(y, w)| y * w)) / sw;
    let sxx = compensated_sum(xs.iter().zip(&ws).map(|(x, w)| w * (x - xbar).powi(2)));
    let sxy = compensated_sum(
        xs.iter()
            .zip(&ys)
            .zip(&ws)
            .map(|((x, y), w)| w * (x - xbar) * (y - ybar)),
    );
    let rate = -sxy / sxx;
    (rate.is_finite() && rate > 0.0).then_some((rate, xs.len()))
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

/// Exponential decay rate of the ensemble mean of `observable` toward
/// `stationary`, fitted on `grid` equally spaced times after discarding the
/// first 10% of `t_max`.
pub fn relaxation_estimate<F>(
    trajectories: &[Trajectory],
    observable: F,
    stationary: f64,
    grid: usize,
) -> Result<RelaxationEstimate, KmcError>
where
    F: Fn(&ErrorState) -> f64,
{
    if trajectories.len() < MIN_TRAJECTORIES {
        return Err(KmcError::InvalidConfig(format!(
            "relaxation fit needs at least {MIN_TRAJECTORIES} trajectories, got {}",
            trajectories.len()
        )));
    }
    if grid < 3 {
        return Err(KmcError::InvalidConfig("fit grid needs at least 3 points".into()));
    }
    let t_max = trajectories[0].t_max;
    if trajectories.iter().any(|t| t.t_max != t_max) {
        return Err(KmcError::InvalidConfig("trajectories have different t_max".into()));
    }
    let t0 = BURN_IN * t_max;
    let times: Vec<f64> = (0..grid)
        .map(|k| t0 + (t_max - t0) * k as f64 / (grid - 1) as f64)
        .collect();
    // samples[k][i] = observable of trajectory i at time k.
    let samples: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| trajectories.iter().map(|tr| observable(tr.state_at(t))).collect())
        .collect();
    let fit_range = |lo: usize, hi: usize| {
        let (means, ses): (Vec<f64>, Vec<f64>) = samples.iter().map(|row| mean_and_se(&row[lo..hi])).unzip();
        fit_decay(&times, &means, &ses, stationary)
    };
    let (rate, points_used) = fit_range(0, trajectories.len())
        .ok_or_else(|| KmcError::FitFailure("ensemble mean does not decay above the noise floor".into()))?;
    let size = trajectories.len() / BATCHES;
    let batch_rates: Vec<f64> = (0..BATCHES)
        .filter_map(|b| fit_range(b * size, (b + 1) * size))
        .map(|(r, _)| r)
        .collect();
    if batch_rates.len() < 2 {
        return Err(KmcError::FitFailure("too few batches produced a fit".into()));
    }
    let (_, stderr) = mean_and_se(&batch_rates);
    Ok(RelaxationEstimate {
        rate,
        stderr,
        points_used,
        batches_used: batch_rates.len(),
        window: (t0, t_max),
        trajectories: trajectories.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `p ≥ 0.01`.
    pub passed: bool,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
}

/// Pearson χ² of counts against probabilities. Bins with expectation below 5
/// are pooled.
pub fn chi_square_test(observed: &[u64], probabilities: &[f64]) -> ChiSquareReport {
    let total: u64 = observed.iter().sum();
    let expected: Vec<f64> = probabilities.iter().map(|p| p * total as f64).collect();
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut pool = (0.0, 0.0);
    for (&o, &e) in observed.iter().zip(&expected) {
        if e < 5.0 {
            pool.0 += o as f64;
            pool.1 += e;
        } else {
            bins.push((o as f64, e));
        }
    }
    if pool.1 > 0.0 {
        if pool.1 >= 5.0 || bins.is_empty() {
            bins.push(pool);
        } else {
            let k = (0..bins.len())
                .min_by(|&a, &b| bins[a].1.total_cmp(&bins[b].1))
                .expect("non-empty");
            bins[k].0 += pool.0;
            bins[k].1 += pool.1;
        }
    }
    let statistic = compensated_sum(bins.iter().map(|(o, e)| (o - e).powi(2) / e));
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    ChiSquareReport {
        statistic,
        dof,
        p_value,
        passed: p_value >= 0.01,
        observed: observed.to_vec(),
        expected,
    }
}

/// Histogram of final syndromes of `count` independent runs from `initial`
/// against the Gibbs syndrome probabilities. `config.t_max` should exceed
/// the relaxation time many times over.
pub fn stationary_chi_square(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    initial: &PauliOperator,
    config: &TrajectoryConfig,
    count: u64,
) -> Result<ChiSquareReport, KmcError> {
    let cfg = TrajectoryConfig {
        record_events: false,
        ..config.clone()
    };
    let runs = run_ensemble(h, rates, initial, &cfg, count)?;
    let mut observed = vec![0u64; 1 << h.rank()];
    for r in &runs {
        observed[r.final_state.syndrome.index()] += 1;
    }
    let probs = h.gibbs(rates.beta()).subspace_table();
    Ok(chi_square_test(&observed, &probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes;
    use crate::hamiltonian::RateKind;
    use crate::kmc::classical_generator;

    #[test]
    fn chi_square_reference_values() {
        let r = chi_square_test(&[50, 50], &[0.5, 0.5]);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        // χ² = 4 at one degree of freedom: p = 0.0455.
        let r = chi_square_test(&[60, 40], &[0.5, 0.5]);
        assert!((r.statistic - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.045500263896358).abs() < 1e-9);
        assert!(r.passed);
        assert!(!chi_square_test(&[80, 20], &[0.5, 0.5]).passed);
    }

    #[test]
    fn constant_observable_fails_to_fit() {
        let h = codes::repetition(1);
        let rates = h.rate_function(RateKind::Glauber, 1.0).unwrap();
        let trs = run_ensemble(
            &h,
            &rates,
            &PauliOperator::identity(1),
            &TrajectoryConfig::new(3, 5.0),
            200,
        )
        .unwrap();
        assert!(matches!(
            relaxation_estimate(&trs, |_| 1.0, 1.0, 20),
            Err(KmcError::FitFailure(_))
        ));
        assert!(matches!(
            relaxation_estimate(&trs[..50], |_| 1.0, 1.0, 20),
            Err(KmcError::InvalidConfig(_))
        ));
    }

    #[test]
    fn single_qubit_rate_is_two() {
        let h = codes::repetition(1);
        let rates = h.rate_function(RateKind::Glauber, 1.0).unwrap();
        let g = classical_generator(&h, &rates).unwrap();
        let f = g.slowest_mode();
        let x: PauliOperator = "X".parse().unwrap();
        let trs = run_ensemble(&h, &rates, &x, &TrajectoryConfig::new(11, 2.5), 10_000).unwrap();
        let est = relaxation_estimate(&trs, |s| f[g.state_index(&s.error)], 0.0, 30).unwrap();
        assert!((est.rate - 2.0).abs() < 0.2 * 2.0, "{est:?}");
    }

    #[test]
    fn stationary_histogram_matches_gibbs() {
        let h = codes::repetition(2);
        let rates = h.rate_function(RateKind::Glauber, 1.0).unwrap();
        let gap = classical_generator(&h, &rates).unwrap().spectral_gap();
        let cfg = TrajectoryConfig::new(19, 20.0 / gap);
        let r = stationary_chi_square(&h, &rates, &PauliOperator::identity(2), &cfg, 10_000).unwrap();
        assert!(r.passed, "{r:?}");
    }
}
