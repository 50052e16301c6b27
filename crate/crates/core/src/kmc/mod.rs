//! Kinetic Monte Carlo of the population sector of the Davies generator.
//!
//! The state is an error coset `Q·𝒮`; the single-site Pauli `α` moves it to
//! `αQ·𝒮` at rate `h(ω^α(σ_Q))`. Populations `QρQ` of any state `ρ`
//! supported on the code space close under the generator, so the chain is
//! an exact reduction for the syndrome, energy and logical-class
//! observables.

mod fit;
mod lifetime;

pub use fit::{relaxation_estimate, stationary_chi_square, ChiSquareReport, RelaxationEstimate};
pub use lifetime::{exact_lifetime, logical_lifetime_estimate, LifetimeEstimate, MlDecoder, DEFAULT_DECODER_PRIOR};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hamiltonian::{HamiltonianError, RateError, SpectralRateFunction, StabilizerHamiltonian};
use crate::pauli::{PauliOperator, Syndrome};

/// Largest number of coset states for the dense classical generator.
pub const CHAIN_STATE_CAP: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KmcError {
    #[error("{what} = {value} exceeds the cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: usize,
        cap: usize,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("relaxation fit failed: {0}")]
    FitFailure(String),
    #[error("the code has no logical qubit")]
    NoLogicalQubit,
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Per-letter rates out of one syndrome, with the letters' syndromes.
#[derive(Debug, Clone)]
pub(crate) struct MoveTable {
    letters: Vec<PauliOperator>,
    flips: Vec<Syndrome>,
}

impl MoveTable {
    /// Single-site stabilizers leave the coset unchanged and are omitted.
    pub(crate) fn new(h: &StabilizerHamiltonian) -> Self {
        let letters: Vec<_> = PauliOperator::single_site_all(h.num_qubits())
            .into_iter()
            .filter(|a| h.basis().in_group(a).is_none())
            .collect();
        let flips = letters.iter().map(|a| h.syndrome(a)).collect();
        Self { letters, flips }
    }

    fn rates(&self, h: &StabilizerHamiltonian, rates: &SpectralRateFunction, s: &Syndrome) -> Vec<f64> {
        let e0 = h.energy_unchecked(s);
        self.flips
            .iter()
            .map(|f| {
                let omega = e0 - h.energy_unchecked(&(*s ^ *f));
                rates
                    .rate(omega)
                    .expect("Bohr frequencies lie within the declared range")
            })
            .collect()
    }
}

/// Dense rate matrix over coset states; `matrix[(to, from)]`.
#[derive(Debug, Clone)]
pub struct ClassicalGenerator {
    states: Vec<PauliOperator>,
    syndromes: Vec<Syndrome>,
    lookup: Vec<usize>,
    matrix: DMatrix<f64>,
    stationary: DVector<f64>,
}

/// Population-sector generator over error cosets.
pub fn classical_generator(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
) -> Result<ClassicalGenerator, KmcError> {
    let (n, r) = (h.num_qubits(), h.rank());
    let count = 1usize
        .checked_shl((2 * n - r) as u32)
        .filter(|_| 2 * n - r < 20)
        .unwrap_or(usize::MAX);
    if count > CHAIN_STATE_CAP {
        return Err(KmcError::CapExceeded {
            what: "coset states",
            value: count,
            cap: CHAIN_STATE_CAP,
        });
    }
    let mut lookup = vec![usize::MAX; 1 << (2 * n)];
    let mut states = Vec::with_capacity(count);
    for p in PauliOperator::all(n) {
        let rep = h.basis().canonical_representative(&p);
        if lookup[rep.index()] == usize::MAX {
            lookup[rep.index()] = states.len();
            states.push(rep);
        }
        lookup[p.index()] = lookup[rep.index()];
    }
    let syndromes: Vec<Syndrome> = states.iter().map(|q| h.syndrome(q)).collect();
    let table = MoveTable::new(h);
    let mut matrix = DMatrix::zeros(states.len(), states.len());
    for (j, q) in states.iter().enumerate() {
        for (a, rate) in table.letters.iter().zip(table.rates(h, rates, &syndromes[j])) {
            let i = lookup[(*a * *q).index()];
            if i != j {
                matrix[(i, j)] += rate;
                matrix[(j, j)] -= rate;
            }
        }
    }
    let gibbs = h.gibbs(rates.beta());
    let weights: Vec<f64> = syndromes.iter().map(|s| gibbs.per_state(s)).collect();
    let total = compensated_sum(weights.iter().copied());
    let stationary = DVector::from_iterator(states.len(), weights.iter().map(|w| w / total));
    Ok(ClassicalGenerator {
        states,
        syndromes,
        lookup,
        matrix,
        stationary,
    })
}

impl ClassicalGenerator {
    pub fn states(&self) -> &[PauliOperator] {
        &self.states
    }

    pub fn syndromes(&self) -> &[Syndrome] {
        &self.syndromes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Stationary distribution `π(Q) ∝ p(σ_Q)`.
    pub fn stationary(&self) -> &DVector<f64> {
        &self.stationary
    }

    pub fn state_index(&self, p: &PauliOperator) -> usize {
        self.lookup[p.index()]
    }

    /// Eigen-decomposition of the detailed-balance symmetrization
    /// `D^{-1/2} G D^{1/2}`, eigenvalues descending (`0` first).
    fn symmetric_modes(&self) -> (Vec<f64>, DMatrix<f64>) {
        let d: Vec<f64> = self.stationary.iter().map(|p| p.sqrt()).collect();
        let k = self.states.len();
        let sym = DMatrix::from_fn(k, k, |i, j| self.matrix[(i, j)] * d[j] / d[i]);
        let sym = (&sym + sym.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(k, k, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    /// Smallest non-zero `−λ`.
    pub fn spectral_gap(&self) -> f64 {
        let (values, _) = self.symmetric_modes();
        let scale = values.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
        values
            .iter()
            .map(|x| -x)
            .filter(|&g| g > 1e-10 * scale)
            .fold(f64::INFINITY, f64::min)
    }

    /// Left eigenvector `f` with `fᵀG = −gap·fᵀ`, normalized to `max|f| = 1`.
    /// Its ensemble mean decays as a single exponential with `π(f) = 0`.
    pub fn slowest_mode(&self) -> Vec<f64> {
        let (values, vectors) = self.symmetric_modes();
        let scale = values.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
        let j = values.iter().position(|x| -x > 1e-10 * scale).unwrap_or(0);
        let f: Vec<f64> = (0..self.states.len())
            .map(|i| vectors[(i, j)] / self.stationary[i].sqrt())
            .collect();
        let m = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        f.iter().map(|x| x / m).collect()
    }

    /// Largest `|p(σ_Q) rate(Q→Q′) − p(σ_{Q′}) rate(Q′→Q)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let k = self.states.len();
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let a = self.stationary[j] * self.matrix[(i, j)];
                    let b = self.stationary[i] * self.matrix[(j, i)];
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }
}

/// One simulation request. `rate_scale` multiplies every rate; zero freezes
/// the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    pub seed: u64,
    pub t_max: f64,
    #[serde(default = "one")]
    pub rate_scale: f64,
    /// Keep every event rather than only the final state.
    #[serde(default = "yes")]
    pub record_events: bool,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

impl TrajectoryConfig {
    pub fn new(seed: u64, t_max: f64) -> Self {
        Self {
            seed,
            t_max,
            rate_scale: 1.0,
            record_events: true,
        }
    }

    fn validate(&self) -> Result<(), KmcError> {
        if !(self.t_max.is_finite() && self.t_max >= 0.0) {
            return Err(KmcError::InvalidConfig(format!(
                "t_max must be finite and >= 0, got {}",
                self.t_max
            )));
        }
        if !(self.rate_scale.is_finite() && self.rate_scale >= 0.0) {
            return Err(KmcError::InvalidConfig(format!(
                "rate_scale must be >= 0, got {}",
                self.rate_scale
            )));
        }
        Ok(())
    }
}

/// Current error (canonical coset representative), its syndrome, and the
/// time it was entered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ErrorState {
    pub error: PauliOperator,
    pub syndrome: Syndrome,
    #[serde(skip)]
    time_bits: u64,
}

impl ErrorState {
    pub fn time(&self) -> f64 {
        f64::from_bits(self.time_bits)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub index: u64,
    /// Entered states in time order, starting with the initial state at `t = 0`.
    pub events: Vec<ErrorState>,
    pub t_max: f64,
    pub final_state: ErrorState,
    pub num_events: u64,
}

impl Trajectory {
    /// State occupied at time `t` (requires recorded events).
    pub fn state_at(&self, t: f64) -> &ErrorState {
        let k = self.events.partition_point(|e| e.time() <= t);
        &self.events[k.saturating_sub(1)]
    }

    /// Time of the first event, if any.
    pub fn first_event_time(&self) -> Option<f64> {
        self.events.get(1).map(|e| e.time())
    }

    /// Rows `t,syndrome,energy,class`; `class` is the decoded logical class
    /// when a decoder is supplied.
    pub fn to_csv(&self, h: &StabilizerHamiltonian, decoder: Option<&MlDecoder>) -> String {
        let mut out = String::from("t,syndrome,energy,class\n");
        for e in &self.events {
            let class = decoder.map_or(String::new(), |d| d.logical_class(&e.error).to_string());
            out.push_str(&format!(
                "{:.12e},{},{:.12e},{}\n",
                e.time(),
                e.syndrome,
                h.energy_unchecked(&e.syndrome),
                class
            ));
        }
        out
    }
}

/// Gillespie simulation from `initial`. The stream is
/// `ChaCha8(seed)` on stream `index`, so a trajectory does not depend on
/// which thread runs it.
pub fn gillespie_run(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    initial: &PauliOperator,
    config: &TrajectoryConfig,
    index: u64,
) -> Result<Trajectory, KmcError> {
    config.validate()?;
    let table = MoveTable::new(h);
    Ok(run_with_table(h, rates, &table, initial, config, index, &|_| false))
}

pub(crate) fn run_with_table(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    table: &MoveTable,
    initial: &PauliOperator,
    config: &TrajectoryConfig,
    index: u64,
    stop: &(dyn Fn(&ErrorState) -> bool + Sync),
) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index);
    let canon = |p: &PauliOperator| h.basis().canonical_representative(p);
    let mut state = ErrorState {
        error: canon(initial),
        syndrome: h.syndrome(initial),
        time_bits: 0f64.to_bits(),
    };
    let mut events = vec![state];
    let mut t = 0.0f64;
    let mut num_events = 0;
    let mut cumulative = Vec::with_capacity(table.letters.len());
    loop {
        cumulative.clear();
        let mut acc = 0.0;
        for r in table.rates(h, rates, &state.syndrome) {
            acc += r * config.rate_scale;
            cumulative.push(acc);
        }
        if acc <= 0.0 {
            break;
        }
        // 1 − U lies in (0, 1], so the logarithm is finite.
        let u: f64 = 1.0 - rng.gen::<f64>();
        t += -u.ln() / acc;
        if t > config.t_max {
            break;
        }
        let target = rng.gen::<f64>() * acc;
        let k = cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1);
        let next = canon(&(table.letters[k] * state.error));
        state = ErrorState {
            error: next,
            syndrome: state.syndrome ^ table.flips[k],
            time_bits: t.to_bits(),
        };
        num_events += 1;
        if config.record_events {
            events.push(state);
        }
        if stop(&state) {
            break;
        }
    }
    if !config.record_events {
        events = vec![state];
    }
    Trajectory {
        index,
        events,
        t_max: config.t_max,
        final_state: state,
        num_events,
    }
}

/// `count` independent trajectories, run in parallel with streams `0..count`.
pub fn run_ensemble(
    h: &StabilizerHamiltonian,
    rates: &SpectralRateFunction,
    initial: &PauliOperator,
    config: &TrajectoryConfig,
    count: u64,
) -> Result<Vec<Trajectory>, KmcError> {
    config.validate()?;
    let table = MoveTable::new(h);
    Ok((0..count)
        .into_par_iter()
        .map(|i| run_with_table(h, rates, &table, initial, config, i, &|_| false))
        .collect())
}
