//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use febarrier::codes;
use febarrier::davies::{
    assemble_awb, evolve, mixing_time_bound, support_number_exact, support_number_flow_bound, telescopic_check,
    BlockBasis, DaviesGenerator, DaviesOptions, SupportMethod, C64,
};
use febarrier::flow::{
    degeneracy_lift, flow_free_energy, layer_flow_bound, synthetic_layer_flow, FlowSet, LayerEdge, PauliFlow,
    PauliPath, SearchOptions,
};
use febarrier::kmc::{classical_generator, relaxation_estimate, run_ensemble, stationary_chi_square, TrajectoryConfig};
use febarrier::{PauliOperator, RateKind, StabilizerHamiltonian, Syndrome};

// Tolerances and limits, one block per criterion.
const BARRIER_TOL: f64 = 1e-9;
const BARRIER_RANDOM_PAIRS: usize = 200;
const BARRIER_LIMIT: Duration = Duration::from_secs(10);

const TELESCOPE_TOL: f64 = 1e-12;
const TELESCOPE_PATHS: usize = 100;
const TELESCOPE_LIMIT: Duration = Duration::from_secs(30);

const FACTOR_TOL: f64 = 1e-9;
const FACTOR_LIMIT: Duration = Duration::from_secs(60);

const ROW_NORM_TOL: f64 = 1e-9;

const SANDWICH_LIMIT: Duration = Duration::from_secs(300);

const ENVELOPE_TOL: f64 = 1e-10;
const ENVELOPE_GRID: usize = 200;
const ENVELOPE_LIMIT: Duration = Duration::from_secs(120);

const SINGLE_PATH_REL_TOL: f64 = 1e-12;

const LAYER_MAX_M: u32 = 4;
const LAYER_MAX_L: usize = 6;
const LAYER_SWEEP: usize = 20;

const KMC_TRAJECTORIES: u64 = 10_000;
const KMC_REL_TOL: f64 = 0.2;
const KMC_LIMIT: Duration = Duration::from_secs(300);

const LIFT_TRIALS: usize = 100;
const LIFT_TOL: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
    info: Vec<String>,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self {
            pass,
            detail,
            info: Vec::new(),
        }
    }
}

/// `‖(UP)†H(UP) + U†HU − P†HP − H‖` by dense diagonalization.
fn dense_barrier(h: &StabilizerHamiltonian, target: &PauliOperator, step: &PauliOperator) -> f64 {
    let hd = h.to_dense();
    let (pd, ud) = (target.to_dense(), step.to_dense());
    let up = &ud * &pd;
    let m = up.adjoint() * &hd * &up + ud.adjoint() * &hd * &ud - pd.adjoint() * &hd * &pd - &hd;
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()))
}

fn random_pauli(rng: &mut ChaCha8Rng, n: usize) -> PauliOperator {
    PauliOperator::from_index(n, rng.gen_range(0..1usize << (2 * n)))
}

fn letters_of(p: &PauliOperator) -> Vec<PauliOperator> {
    let n = p.num_qubits();
    p.support()
        .into_iter()
        .map(|s| PauliOperator::single(n, s, p.letter(s)).unwrap())
        .collect()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for h in [codes::repetition(2), codes::bell_pair()] {
        for target in PauliOperator::all(2) {
            for step in PauliOperator::all(2) {
                let d = (h.step_barrier(&target, &step).unwrap() - dense_barrier(&h, &target, &step)).abs();
                worst = worst.max(d);
                pairs += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1);
    let h3 = [codes::repetition(3), random_code(&mut rng, 3)];
    for k in 0..BARRIER_RANDOM_PAIRS {
        let h = &h3[k % 2];
        let (target, step) = (random_pauli(&mut rng, 3), random_pauli(&mut rng, 3));
        let d = (h.step_barrier(&target, &step).unwrap() - dense_barrier(h, &target, &step)).abs();
        worst = worst.max(d);
        pairs += 1;
    }
    Outcome::new(
        worst <= BARRIER_TOL,
        format!("{pairs} pairs, max deviation {worst:.2e} (tol {BARRIER_TOL:.0e})"),
    )
}

/// Random commuting terms with random couplings, built from a random
/// symplectic-orthogonal set.
fn random_code(rng: &mut ChaCha8Rng, n: usize) -> StabilizerHamiltonian {
    loop {
        let mut gens: Vec<PauliOperator> = Vec::new();
        for _ in 0..4 * n {
            let c = random_pauli(rng, n);
            if !c.is_identity() && gens.iter().all(|g| !g.anticommutes(&c)) && gens.len() < n - 1 {
                gens.push(c);
            }
        }
        let mut terms: Vec<febarrier::Term> = gens
            .iter()
            .map(|g| febarrier::Term {
                pauli: *g,
                coupling: rng.gen_range(0.5..2.0),
            })
            .collect();
        // A redundant product term exercises non-basis decompositions.
        if gens.len() >= 2 {
            terms.push(febarrier::Term {
                pauli: gens[0] * gens[1],
                coupling: rng.gen_range(0.5..2.0),
            });
        }
        if let Ok(h) = StabilizerHamiltonian::new(n, terms) {
            if h.rank() >= 1 {
                return h;
            }
        }
    }
}

/// Random path to `target`: its letters shuffled, with an occasional
/// back-and-forth detour.
fn random_path(rng: &mut ChaCha8Rng, target: &PauliOperator) -> PauliPath {
    let n = target.num_qubits();
    let mut letters = letters_of(target);
    letters.shuffle(rng);
    if rng.gen_bool(0.5) {
        let a = PauliOperator::single_site_all(n)[rng.gen_range(0..3 * n)];
        let i = rng.gen_range(0..=letters.len());
        letters.insert(i, a);
        let j = rng.gen_range(i + 1..=letters.len());
        letters.insert(j, a);
    }
    PauliPath::from_letters(n, &letters).unwrap()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7E1);
    let mut worst = 0.0f64;
    let mut checks = 0;
    for h in [codes::repetition(3), codes::four_qubit_two_stabilizer()] {
        let n = h.num_qubits();
        let basis = BlockBasis::new(&h).unwrap();
        for _ in 0..TELESCOPE_PATHS {
            let target = random_pauli(&mut rng, n);
            let path = random_path(&mut rng, &target);
            let coset = rng.gen_range(0..basis.cosets().len());
            let s = Syndrome::from_bits(h.rank(), rng.gen_range(0..1u64 << h.rank()));
            let q = random_pauli(&mut rng, n);
            worst = worst.max(telescopic_check(&basis, &path, coset, &s, &q).unwrap());
            checks += 1;
        }
    }
    Outcome::new(
        worst <= TELESCOPE_TOL,
        format!("{checks} paths, max residual {worst:.2e} (tol {TELESCOPE_TOL:.0e})"),
    )
}

/// Two distinct paths for every non-identity target of a two-qubit code:
/// both site orders for weight two, a direct step and a two-letter detour
/// for weight one.
fn two_path_flows(h: &StabilizerHamiltonian) -> FlowSet {
    let n = h.num_qubits();
    let flows = PauliOperator::all(n)
        .map(|t| {
            let letters = letters_of(&t);
            let paths = match letters.len() {
                0 => vec![PauliPath::from_states(vec![t])],
                1 => {
                    let site = t.support()[0];
                    let others: Vec<_> = PauliOperator::single_site_all(n)
                        .into_iter()
                        .filter(|a| a.support()[0] == site && *a != t)
                        .collect();
                    vec![
                        PauliPath::from_letters(n, &letters).unwrap(),
                        PauliPath::from_letters(n, &others).unwrap(),
                    ]
                }
                _ => {
                    let mut rev = letters.clone();
                    rev.reverse();
                    vec![
                        PauliPath::from_letters(n, &letters).unwrap(),
                        PauliPath::from_letters(n, &rev).unwrap(),
                    ]
                }
            };
            PauliFlow::new(t, paths).unwrap()
        })
        .collect();
    FlowSet::new(n, flows).unwrap()
}

struct FactorStats {
    blocks: usize,
    worst: f64,
    row_mismatch: f64,
    rows: usize,
}

fn factor_stats() -> FactorStats {
    let h = codes::repetition(2);
    let rates = h.rate_function(RateKind::Glauber, 1.0).unwrap();
    let basis = BlockBasis::new(&h).unwrap();
    let single = FlowSet::bottleneck(&h, SearchOptions::default()).unwrap();
    let double = two_path_flows(&h);
    let mut stats = FactorStats {
        blocks: 0,
        worst: 0.0,
        row_mismatch: 0.0,
        rows: 0,
    };
    for flows in [&single, &double] {
        for block in basis.cosets() {
            for s in Syndrome::all(h.rank()) {
                let f = assemble_awb(&h, &rates, flows, &block.representative, &s).unwrap();
                stats.blocks += 1;
                stats.worst = stats.worst.max(f.residual_e).max(f.residual_v).max(f.residual_awb);
                for c in &f.row_checks {
                    let rel = (c.direct - c.closed_form).abs() / c.closed_form.abs().max(1.0);
                    stats.row_mismatch = stats.row_mismatch.max(rel);
                }
                stats.rows += f.row_checks.len();
            }
        }
    }
    stats
}

fn criterion_3(stats: &FactorStats) -> Outcome {
    Outcome::new(
        stats.worst <= FACTOR_TOL,
        format!(
            "{} blocks (single- and two-path flows), max residual {:.2e} (tol {FACTOR_TOL:.0e})",
            stats.blocks, stats.worst
        ),
    )
}

fn criterion_4(stats: &FactorStats) -> Outcome {
    Outcome::new(
        stats.row_mismatch <= ROW_NORM_TOL,
        format!(
            "{} (base, edge) rows, max relative mismatch {:.2e} (tol {ROW_NORM_TOL:.0e})",
            stats.rows, stats.row_mismatch
        ),
    )
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

fn criterion_5() -> Outcome {
    let mut violations = 0;
    let mut configs = 0;
    let mut worst_ratio = 0.0f64;
    let mut info = Vec::new();
    for (name, h) in [
        ("rep2", codes::repetition(2)),
        ("rep3", codes::repetition(3)),
        ("four", codes::four_qubit_two_stabilizer()),
    ] {
        let n = h.num_qubits();
        let flows = FlowSet::bottleneck(&h, SearchOptions::default()).unwrap();
        let n_eff = flows.effective_length();
        for kind in [RateKind::Glauber, RateKind::Metropolis] {
            for beta in [0.5, 1.0, 2.0] {
                let rates = h.rate_function(kind, beta).unwrap();
                let g = DaviesGenerator::new(&h, &rates, DaviesOptions::default()).unwrap();
                let exact = support_number_exact(&g.dirichlet_matrix(), &g.variance_matrix()).unwrap();
                let cert = flows.free_energy(&h, beta).unwrap();
                let bound = support_number_flow_bound(&cert, &rates, n).unwrap();
                configs += 1;
                if !(exact.certified && exact.tau <= bound.tau_bound) {
                    violations += 1;
                }
                worst_ratio = worst_ratio.max(exact.tau / bound.tau_bound);
                let mut line = format!(
                    "{name} {kind} beta={beta}: tau={:.4} <= {:.4} (n={n}, n_eff={n_eff})",
                    exact.tau, bound.tau_bound
                );
                if n <= 3 {
                    // Label-space chain: max_Õ,s τ_Õ(s) and the factorization bound.
                    let basis = BlockBasis::new(&h).unwrap();
                    let mut tau_blocks = 0.0f64;
                    let mut tau_fact = 0.0f64;
                    for block in basis.cosets() {
                        for s in Syndrome::all(h.rank()) {
                            let f = assemble_awb(&h, &rates, &flows, &block.representative, &s).unwrap();
                            let t = support_number_exact(&to_complex(&f.e_label), &to_complex(&f.v_label)).unwrap();
                            tau_blocks = tau_blocks.max(t.tau);
                            tau_fact = tau_fact.max(f.tau_factorization());
                        }
                    }
                    let chain = exact.tau <= tau_blocks * (1.0 + 1e-9) && tau_blocks <= tau_fact * (1.0 + 1e-9);
                    line.push_str(&format!(
                        "; blocks {tau_blocks:.4}, factorization {tau_fact:.4}, chain {}",
                        if chain { "holds" } else { "BROKEN" }
                    ));
                    if !chain {
                        violations += 1;
                    }
                }
                info.push(line);
            }
        }
    }
    let mut o = Outcome::new(
        violations == 0,
        format!("{configs} configurations, {violations} violations, max tau/bound {worst_ratio:.3e}"),
    );
    o.info = info;
    o
}

fn criterion_6() -> Outcome {
    let h = codes::repetition(2);
    let beta = 1.0;
    let rates = h.rate_function(RateKind::Glauber, beta).unwrap();
    let g = DaviesGenerator::new(&h, &rates, DaviesOptions::default()).unwrap();
    let tau = support_number_exact(&g.dirichlet_matrix(), &g.variance_matrix())
        .unwrap()
        .tau;
    let report = mixing_time_bound(tau, &h, beta, SupportMethod::ExactPencil).unwrap();
    let times: Vec<f64> = (0..ENVELOPE_GRID)
        .map(|k| 3.0 * report.t_mix * k as f64 / (ENVELOPE_GRID - 1) as f64)
        .collect();
    let basis_state = |k: usize| {
        let mut m = DMatrix::zeros(4, 4);
        m[(k, k)] = C64::new(1.0, 0.0);
        m
    };
    let plus = DMatrix::from_element(4, 4, C64::new(0.25, 0.0));
    let mut ok = true;
    let mut worst_cross = 0.0f64;
    for (label, sigma) in [("|01>", basis_state(1)), ("|11>", basis_state(3)), ("|++>", plus)] {
        let curve = evolve(&g, &sigma, &times, Some(tau)).unwrap();
        let under = curve.under_envelope(ENVELOPE_TOL);
        let cross = curve.crossing_time(0.25);
        ok &= under && cross.is_some_and(|t| t <= report.t_mix);
        worst_cross = worst_cross.max(cross.unwrap_or(f64::INFINITY));
        if !under {
            eprintln!("  envelope violated for {label}");
        }
    }
    Outcome::new(
        ok,
        format!(
            "3 initial states, tau={tau:.4}, t_mix={:.4}, latest 1/4-crossing {worst_cross:.4}",
            report.t_mix
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut count = 0;
    for h in [
        codes::repetition(2),
        codes::repetition(3),
        codes::bell_pair(),
        codes::four_qubit_two_stabilizer(),
    ] {
        let n = h.num_qubits();
        let flows = FlowSet::bottleneck(&h, SearchOptions::default()).unwrap();
        let barrier = flows.flows().iter().map(|f| f.energy_barrier(&h)).fold(0.0, f64::max);
        for kind in [RateKind::Glauber, RateKind::Metropolis] {
            for beta in [0.5, 1.0, 2.0] {
                let cert = flows.free_energy(&h, beta).unwrap();
                let rates = h.rate_function(kind, beta).unwrap();
                let bound = support_number_flow_bound(&cert, &rates, n).unwrap();
                let arrhenius = 4.0 * n as f64 / rates.c_lower() * (beta * barrier).exp();
                ok &= cert.f_bar == barrier;
                ok &= (bound.tau_bound - arrhenius).abs() <= SINGLE_PATH_REL_TOL * arrhenius;
                count += 1;
            }
        }
    }
    Outcome::new(
        ok,
        format!("{count} code/rate/beta combinations, f_bar equals the step barrier"),
    )
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut flows = 0;
    for m in 1..=LAYER_MAX_M {
        for l in 1..=LAYER_MAX_L {
            let f = synthetic_layer_flow(m, l, 1 << 20).unwrap();
            flows += 1;
            ok &= f.num_paths() == (m as u64).pow(l as u32);
            for (lp, w) in f.omega_by_layer().into_iter().enumerate() {
                ok &= w == Some(Ratio::from_integer((m as u64).pow(lp as u32 + 1)));
            }
            // Spot-check one concrete edge per layer.
            for lp in 1..=l {
                let e = LayerEdge {
                    layer: lp,
                    prefix: vec![0; lp],
                };
                ok &= f.omega(&e) == Some(Ratio::from_integer((m as u64).pow(lp as u32)));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1A7);
    let mut sweep_ok = true;
    for _ in 0..LAYER_SWEEP {
        let a: f64 = rng.gen_range(0.1..2.0);
        let beta: f64 = rng.gen_range(0.2..2.0);
        let m = (a * beta).exp().ceil() as u64 + rng.gen_range(0..4);
        let l = rng.gen_range(2..40);
        let base = layer_flow_bound(a, m, 1, beta).unwrap();
        for lp in 1..=l {
            let b = layer_flow_bound(a, m, lp, beta).unwrap();
            sweep_ok &= b.f == base.f && b.argmax == 1;
        }
        sweep_ok &= base.f <= a;
    }
    Outcome::new(
        ok && sweep_ok,
        format!("{flows} synthetic flows with Omega = m^l'; {LAYER_SWEEP}-point sweep independent of l"),
    )
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for h in [codes::repetition(1), codes::repetition(2)] {
        let n = h.num_qubits();
        let rates = h.rate_function(RateKind::Glauber, 1.0).unwrap();
        let chain = classical_generator(&h, &rates).unwrap();
        let gap = chain.spectral_gap();
        let f = chain.slowest_mode();
        let start = (0..f.len()).max_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs())).unwrap();
        let initial = chain.states()[start];
        let trs = run_ensemble(
            &h,
            &rates,
            &initial,
            &TrajectoryConfig::new(0x9A + n as u64, 4.0 / gap),
            KMC_TRAJECTORIES,
        )
        .unwrap();
        let est = relaxation_estimate(&trs, |s| f[chain.state_index(&s.error)], 0.0, 40).unwrap();
        let rel = (est.rate - gap).abs() / gap;
        let chi = stationary_chi_square(
            &h,
            &rates,
            &PauliOperator::identity(n),
            &TrajectoryConfig::new(0x5EED + n as u64, 20.0 / gap),
            KMC_TRAJECTORIES,
        )
        .unwrap();
        ok &= rel <= KMC_REL_TOL && chi.passed;
        parts.push(format!(
            "n={n}: rate {:.3}±{:.3} vs gap {gap:.3} ({:.1}%), chi2 p={:.3}",
            est.rate,
            est.stderr,
            100.0 * rel,
            chi.p_value
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x11F7);
    let pool = [
        codes::repetition(2),
        codes::repetition(3),
        codes::bell_pair(),
        codes::four_qubit_two_stabilizer(),
    ];
    let mut violations = 0;
    let mut lifted_total = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..LIFT_TRIALS {
        let h = &pool[rng.gen_range(0..pool.len())];
        let n = h.num_qubits();
        let group = h.basis().elements();
        let target = loop {
            let t = random_pauli(&mut rng, n);
            if !t.is_identity() {
                break t;
            }
        };
        let mut paths = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let s = group[rng.gen_range(0..group.len())];
            let end = target * s;
            if end.is_identity() {
                continue;
            }
            let path = random_path(&mut rng, &end);
            if !paths.contains(&path) {
                paths.push(path);
            }
        }
        if paths.is_empty() {
            paths.push(PauliPath::ascending(&target));
        }
        let flow = PauliFlow::up_to_stabilizer(target, paths, h.basis()).unwrap();
        let beta = rng.gen_range(0.3..3.0);
        let before = flow_free_energy(std::slice::from_ref(&flow), h, beta).unwrap().f_bar;
        let lifted = degeneracy_lift(&flow, h).unwrap();
        lifted_total += lifted.lifted_paths;
        let valid = lifted.flow.paths().iter().all(|g| g.validate(&target).is_ok());
        let after = flow_free_energy(std::slice::from_ref(&lifted.flow), h, beta)
            .unwrap()
            .f_bar;
        worst_excess = worst_excess.max(after - before - h.omega_impl());
        if !valid || after > before + h.omega_impl() + LIFT_TOL {
            violations += 1;
        }
    }
    Outcome::new(
        violations == 0,
        format!(
            "{LIFT_TRIALS} trials ({lifted_total} lifted paths), {violations} violations, max f'-f-omega_impl {worst_excess:.3}"
        ),
    )
}

fn main() {
    let mut all_pass = true;
    let mut report = |id: usize, name: &str, limit: Option<Duration>, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= l);
        let pass = out.pass && in_time;
        all_pass &= pass;
        let limit_note = limit.map_or(String::new(), |l| format!(", limit {}s", l.as_secs()));
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.2}s{limit_note}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
        for line in out.info {
            println!("       {line}");
        }
    };
    report(1, "barrier exactness", Some(BARRIER_LIMIT), &mut criterion_1);
    report(2, "telescoping identity", Some(TELESCOPE_LIMIT), &mut criterion_2);
    let start = Instant::now();
    let stats = factor_stats();
    let factor_time = start.elapsed();
    report(
        3,
        "A/W/B factorization",
        Some(FACTOR_LIMIT.saturating_sub(factor_time)),
        &mut || criterion_3(&stats),
    );
    report(4, "row-norm closed form", None, &mut || criterion_4(&stats));
    report(5, "support-number sandwich", Some(SANDWICH_LIMIT), &mut criterion_5);
    report(6, "mixing envelope", Some(ENVELOPE_LIMIT), &mut criterion_6);
    report(7, "single-path reduction", None, &mut criterion_7);
    report(8, "layer-model bound", None, &mut criterion_8);
    report(9, "KMC consistency", Some(KMC_LIMIT), &mut criterion_9);
    report(10, "degeneracy lift", None, &mut criterion_10);
    if !all_pass {
        std::process::exit(1);
    }
}
