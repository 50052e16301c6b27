use std::path::Path;

use febarrier::davies::{
    assemble_awb, evolve, mixing_time_bound, support_number_exact, support_number_flow_bound, BlockBasis,
    DaviesGenerator, DaviesOptions, SupportMethod, C64, DEFAULT_MAX_QUBITS,
};
use febarrier::flow::{bottleneck_path_search, layer_flow_bound, FlowSet, PauliFlow, SearchOptions};
use febarrier::io::{self, CertificateFile, FlowSpec};
use febarrier::kmc::{
    classical_generator, exact_lifetime, logical_lifetime_estimate, relaxation_estimate, run_ensemble,
    stationary_chi_square, MlDecoder, TrajectoryConfig, DEFAULT_DECODER_PRIOR,
};
use febarrier::{PauliOperator, SpectralRateFunction, StabilizerHamiltonian, Syndrome, SCHEMA_VERSION};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::config::{read_file, CommonArgs, Format, RunConfig};
use crate::error::CliError;
use crate::{DaviesAction, SearchMode};

/// Tolerance for re-verified certificates and factorization residuals.
const VERIFY_TOL: f64 = 1e-12;
const FACTOR_TOL: f64 = 1e-9;

fn emit_json(cfg: &RunConfig, mut body: Value) -> Result<(), CliError> {
    body.as_object_mut()
        .expect("reports are objects")
        .insert("schema".into(), json!(SCHEMA_VERSION));
    cfg.emit(&serde_json::to_string_pretty(&body).expect("reports serialize"))
}

fn parse_pauli(s: &str, n: usize) -> Result<PauliOperator, CliError> {
    let p: PauliOperator = s.parse()?;
    if p.num_qubits() != n {
        return Err(CliError::validation(format!(
            "{s}: expected {n} qubits, got {}",
            p.num_qubits()
        )));
    }
    Ok(p)
}

fn rates(cfg: &RunConfig, h: &StabilizerHamiltonian) -> Result<SpectralRateFunction, CliError> {
    Ok(h.rate_function(cfg.rate, cfg.beta)?)
}

/// Flows from `--flows` with bottleneck flows for any missing target, or
/// bottleneck flows throughout. Returns the set and the number filled in.
fn flow_set(cfg: &RunConfig, h: &StabilizerHamiltonian) -> Result<(FlowSet, usize), CliError> {
    let n = h.num_qubits();
    let Some(path) = &cfg.flows else {
        return Ok((FlowSet::bottleneck(h, SearchOptions::default())?, 1 << (2 * n)));
    };
    let given = io::parse_flows(&read_file(path)?, h)?;
    let mut slots: Vec<Option<PauliFlow>> = vec![None; 1 << (2 * n)];
    for f in given {
        let i = f.target().index();
        if slots[i].is_some() {
            return Err(CliError::validation(format!("two flows for target {}", f.target())));
        }
        slots[i] = Some(f);
    }
    let mut filled = 0;
    let mut flows = Vec::with_capacity(slots.len());
    for (i, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(f) => flows.push(f),
            None => {
                let t = PauliOperator::from_index(n, i);
                let b = bottleneck_path_search(h, &t, SearchOptions::default())?;
                flows.push(PauliFlow::single(t, b.path)?);
                filled += 1;
            }
        }
    }
    Ok((FlowSet::new(n, flows)?, filled))
}

pub fn spectrum(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "spectrum")?;
    cfg.require_json()?;
    let h = cfg.hamiltonian()?;
    let g = h.gibbs(cfg.beta);
    let rows = Syndrome::all(h.rank())
        .map(|s| {
            Ok(json!({
                "syndrome": s,
                "energy": h.syndrome_energy(&s)?,
                "gibbs_per_state": g.per_state(&s),
                "gibbs_subspace": g.subspace(&s),
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    emit_json(
        &cfg,
        json!({
            "n": h.num_qubits(),
            "rank": h.rank(),
            "logical_qubits": h.logical_qubits(),
            "beta": cfg.beta,
            "ground_energy": h.ground_energy(),
            "coupling_sum": h.coupling_sum(),
            "inverse_gibbs_norm": g.inverse_norm(),
            "syndromes": rows,
        }),
    )
}

pub fn barrier(args: &CommonArgs, target: Option<&str>, step: Option<&str>) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "barrier")?;
    cfg.require_json()?;
    let h = cfg.hamiltonian()?;
    let n = h.num_qubits();
    let body = match (target, step) {
        (Some(t), Some(u)) => {
            let (t, u) = (parse_pauli(t, n)?, parse_pauli(u, n)?);
            json!({ "target": t, "step": u, "barrier": h.step_barrier(&t, &u)? })
        }
        (Some(t), None) => {
            let t = parse_pauli(t, n)?;
            let b = bottleneck_path_search(&h, &t, SearchOptions::default())?;
            json!({
                "target": t,
                "barrier": b.barrier,
                "path": b.path.tokens(),
                "optimal": b.optimal,
                "expanded": b.expanded,
            })
        }
        (None, Some(_)) => return Err(CliError::validation("--step needs --target")),
        (None, None) => {
            let flows = FlowSet::bottleneck(&h, SearchOptions::default())?;
            let rows: Vec<Value> = flows
                .flows()
                .iter()
                .map(|f| {
                    json!({
                        "target": f.target(),
                        "barrier": f.energy_barrier(&h),
                        "path": f.paths()[0].tokens(),
                    })
                })
                .collect();
            let max = flows.flows().iter().map(|f| f.energy_barrier(&h)).fold(0.0, f64::max);
            json!({ "max_barrier": max, "targets": rows })
        }
    };
    emit_json(&cfg, body)
}

pub fn flow_energy(args: &CommonArgs, verify: Option<&Path>) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "flow-energy")?;
    cfg.require_json()?;
    if let Some(path) = verify {
        let file = CertificateFile::parse(&read_file(path)?)?;
        if file.code.n > cfg.cap_n {
            return Err(CliError::cap(format!(
                "certificate code has n = {}, above cap-n = {}",
                file.code.n, cfg.cap_n
            )));
        }
        let (again, ok) = file.verify(VERIFY_TOL)?;
        emit_json(
            &cfg,
            json!({
                "verified": ok,
                "tolerance": VERIFY_TOL,
                "f_bar": file.certificate.f_bar,
                "recomputed_f_bar": again.f_bar,
            }),
        )?;
        return if ok {
            Ok(())
        } else {
            Err(CliError::certificate(format!(
                "recomputed f_bar {} differs from recorded {}",
                again.f_bar, file.certificate.f_bar
            )))
        };
    }
    let h = cfg.hamiltonian()?;
    let path = cfg
        .flows
        .as_ref()
        .ok_or_else(|| CliError::validation("flow-energy needs --flows or --verify"))?;
    let flows = io::parse_flows(&read_file(path)?, &h)?;
    let cert = febarrier::flow::flow_free_energy(&flows, &h, cfg.beta)?;
    let file = CertificateFile::new(&h, &flows, cert);
    cfg.emit(&serde_json::to_string_pretty(&file).expect("certificates serialize"))
}

pub fn flow_search(args: &CommonArgs, mode: SearchMode) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "flow-search")?;
    cfg.require_json()?;
    let h = cfg.hamiltonian()?;
    let flows = match mode {
        SearchMode::Bottleneck => FlowSet::bottleneck(&h, SearchOptions::default())?,
        SearchMode::Ensemble => FlowSet::ensemble(&h, cfg.budget, SearchOptions::default())?,
    };
    let cert = flows.free_energy(&h, cfg.beta)?;
    emit_json(
        &cfg,
        json!({
            "mode": match mode { SearchMode::Bottleneck => "bottleneck", SearchMode::Ensemble => "ensemble" },
            "beta": cfg.beta,
            "f_bar": cert.f_bar,
            "energy_barrier": cert.energy_barrier(),
            "witness": cert.witness,
            "max_path_len": flows.max_path_len(),
            "effective_length": flows.effective_length(),
            "flows": flows.flows().iter().map(FlowSpec::from_flow).collect::<Vec<_>>(),
        }),
    )
}

fn initial_state(spec: &str, n: usize) -> Result<DMatrix<C64>, CliError> {
    let dim = 1usize << n;
    if spec == "plus" {
        return Ok(DMatrix::from_element(dim, dim, C64::new(1.0 / dim as f64, 0.0)));
    }
    if spec.len() != n || !spec.chars().all(|c| c == '0' || c == '1') {
        return Err(CliError::validation(format!(
            "initial state {spec:?} must be `plus` or a bitstring of length {n}"
        )));
    }
    let k = usize::from_str_radix(spec, 2).expect("checked binary digits");
    let mut m = DMatrix::zeros(dim, dim);
    m[(k, k)] = C64::new(1.0, 0.0);
    Ok(m)
}

pub fn davies(args: &CommonArgs, action: DaviesAction, initial: &str, points: usize) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "davies")?;
    if action != DaviesAction::Evolve {
        cfg.require_json()?;
    }
    let h = cfg.hamiltonian()?;
    let r = rates(&cfg, &h)?;
    if action == DaviesAction::VerifyFactorization {
        return verify_factorization(&cfg, &h, &r);
    }
    let g = DaviesGenerator::new(&h, &r, DaviesOptions::default())?;
    match action {
        DaviesAction::Build => {
            let dim = 1usize << h.num_qubits();
            let fixed_point = g.apply(g.gibbs_state()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let unital = g
                .apply_adjoint(&DMatrix::identity(dim, dim))
                .iter()
                .fold(0.0f64, |a, z| a.max(z.norm()));
            let l = g.liouvillian_matrix();
            emit_json(
                &cfg,
                json!({
                    "n": h.num_qubits(),
                    "superoperator_dimension": l.nrows(),
                    "rate": cfg.rate,
                    "beta": cfg.beta,
                    "c_lower": r.c_lower(),
                    "c_upper": r.c_upper(),
                    "gibbs_fixed_point_residual": fixed_point,
                    "trace_preservation_residual": unital,
                }),
            )
        }
        DaviesAction::Gap => {
            let exact = support_number_exact(&g.dirichlet_matrix(), &g.variance_matrix())?;
            emit_json(
                &cfg,
                json!({
                    "n": h.num_qubits(),
                    "rate": cfg.rate,
                    "beta": cfg.beta,
                    "spectral_gap": g.spectral_gap(),
                    "support_number": exact,
                }),
            )
        }
        DaviesAction::Evolve => {
            if points < 2 {
                return Err(CliError::validation("evolve needs at least 2 time points"));
            }
            let sigma = initial_state(initial, h.num_qubits())?;
            let exact = support_number_exact(&g.dirichlet_matrix(), &g.variance_matrix())?;
            let mix = mixing_time_bound(exact.tau, &h, cfg.beta, SupportMethod::ExactPencil)?;
            let t_max = cfg.t_max.unwrap_or(3.0 * mix.t_mix);
            let times: Vec<f64> = (0..points).map(|k| t_max * k as f64 / (points - 1) as f64).collect();
            let curve = evolve(&g, &sigma, &times, Some(exact.tau))?;
            match cfg.format {
                Format::Csv => cfg.emit(&curve.to_csv()),
                Format::Json => emit_json(
                    &cfg,
                    json!({
                        "initial": initial,
                        "mixing": mix,
                        "crossing_quarter": curve.crossing_time(0.25),
                        "under_envelope": curve.under_envelope(1e-10),
                        "curve": curve,
                    }),
                ),
            }
        }
        DaviesAction::VerifyFactorization => unreachable!("handled above"),
    }
}

fn verify_factorization(cfg: &RunConfig, h: &StabilizerHamiltonian, r: &SpectralRateFunction) -> Result<(), CliError> {
    let (flows, filled) = flow_set(cfg, h)?;
    let basis = BlockBasis::new(h)?;
    let mut blocks = Vec::new();
    let (mut worst, mut worst_rows, mut tau_fact) = (0.0f64, 0.0f64, 0.0f64);
    for block in basis.cosets() {
        for s in Syndrome::all(h.rank()) {
            let f = assemble_awb(h, r, &flows, &block.representative, &s)?;
            let residual = f.residual_e.max(f.residual_v).max(f.residual_awb);
            worst = worst.max(residual);
            worst_rows = worst_rows.max(f.max_row_norm_mismatch());
            tau_fact = tau_fact.max(f.tau_factorization());
            blocks.push(json!({
                "representative": block.representative,
                "syndrome": s,
                "residual_e": f.residual_e,
                "residual_v": f.residual_v,
                "residual_awb": f.residual_awb,
                "row_norm_mismatch": f.max_row_norm_mismatch(),
                "tau_factorization": f.tau_factorization(),
            }));
        }
    }
    let ok = worst <= FACTOR_TOL && worst_rows <= FACTOR_TOL;
    emit_json(
        cfg,
        json!({
            "verified": ok,
            "tolerance": FACTOR_TOL,
            "max_residual": worst,
            "max_row_norm_mismatch": worst_rows,
            "tau_factorization": tau_fact,
            "bottleneck_filled_targets": filled,
            "blocks": blocks,
        }),
    )?;
    if ok {
        Ok(())
    } else {
        Err(CliError::certificate(format!(
            "factorization residual {worst:e} or row-norm mismatch {worst_rows:e} exceeds {FACTOR_TOL:e}"
        )))
    }
}

pub fn bound(args: &CommonArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "bound")?;
    cfg.require_json()?;
    let h = cfg.hamiltonian()?;
    let r = rates(&cfg, &h)?;
    let (flows, filled) = flow_set(&cfg, &h)?;
    let cert = flows.free_energy(&h, cfg.beta)?;
    let length = flows.effective_length();
    let fb = support_number_flow_bound(&cert, &r, length)?;
    let mix = mixing_time_bound(fb.tau_bound, &h, cfg.beta, SupportMethod::FlowBound)?;
    // The dense cross-check runs whenever the generator fits.
    let mut exact_ok = true;
    let exact = if h.num_qubits() <= DEFAULT_MAX_QUBITS {
        let g = DaviesGenerator::new(&h, &r, DaviesOptions::default())?;
        let e = support_number_exact(&g.dirichlet_matrix(), &g.variance_matrix())?;
        let m = mixing_time_bound(e.tau, &h, cfg.beta, SupportMethod::ExactPencil)?;
        exact_ok = e.certified && e.tau <= fb.tau_bound;
        json!({ "support_number": e, "mixing": m, "within_bound": exact_ok })
    } else {
        Value::Null
    };
    emit_json(
        &cfg,
        json!({
            "n": h.num_qubits(),
            "rate": cfg.rate,
            "beta": cfg.beta,
            "f_bar": cert.f_bar,
            "energy_barrier": cert.energy_barrier(),
            "witness": cert.witness,
            "bottleneck_filled_targets": filled,
            "flow_bound": fb,
            "mixing": mix,
            "exact": exact,
        }),
    )?;
    if exact_ok {
        Ok(())
    } else {
        Err(CliError::certificate("exact support number exceeds the flow bound"))
    }
}

pub fn kmc(args: &CommonArgs, initial: Option<&str>, grid: usize) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "kmc")?;
    let h = cfg.hamiltonian()?;
    let n = h.num_qubits();
    let r = rates(&cfg, &h)?;
    let chain = classical_generator(&h, &r)?;
    let gap = chain.spectral_gap();
    let decoder = if h.logical_qubits() > 0 {
        Some(MlDecoder::new(&h, DEFAULT_DECODER_PRIOR)?)
    } else {
        None
    };
    if cfg.format == Format::Csv {
        let start = match initial {
            Some(s) => parse_pauli(s, n)?,
            None => PauliOperator::identity(n),
        };
        let t_max = cfg.t_max.unwrap_or(4.0 / gap);
        let tr = febarrier::kmc::gillespie_run(&h, &r, &start, &TrajectoryConfig::new(cfg.seed, t_max), 0)?;
        return cfg.emit(&tr.to_csv(&h, decoder.as_ref()));
    }
    // Relaxation of the slowest chain mode from the state where it is largest.
    let f = chain.slowest_mode();
    let top = (0..f.len())
        .max_by(|&a, &b| f[a].abs().total_cmp(&f[b].abs()))
        .expect("chain has states");
    let relax_cfg = TrajectoryConfig::new(cfg.seed, cfg.t_max.unwrap_or(4.0 / gap));
    let trs = run_ensemble(&h, &r, &chain.states()[top], &relax_cfg, cfg.trajectories)?;
    let relax = relaxation_estimate(&trs, |s| f[chain.state_index(&s.error)], 0.0, grid)?;
    drop(trs);
    let chi_cfg = TrajectoryConfig::new(cfg.seed.wrapping_add(1), 20.0 / gap);
    let chi = stationary_chi_square(&h, &r, &PauliOperator::identity(n), &chi_cfg, cfg.trajectories)?;
    let lifetime = match &decoder {
        Some(d) => {
            let exact = exact_lifetime(&h, &r, d)?;
            let life_cfg = TrajectoryConfig::new(cfg.seed.wrapping_add(2), cfg.t_max.unwrap_or(50.0 * exact));
            let est = logical_lifetime_estimate(&h, &r, d, &life_cfg, cfg.trajectories)?;
            json!({ "estimate": est, "exact": exact, "decoder_prior": DEFAULT_DECODER_PRIOR })
        }
        None => Value::Null,
    };
    emit_json(
        &cfg,
        json!({
            "n": n,
            "rate": cfg.rate,
            "beta": cfg.beta,
            "seed": cfg.seed,
            "trajectories": cfg.trajectories,
            "chain_gap": gap,
            "relaxation": relax,
            "relative_deviation": (relax.rate - gap).abs() / gap,
            "stationary_chi_square": {
                "statistic": chi.statistic,
                "dof": chi.dof,
                "p_value": chi.p_value,
                "passed": chi.passed,
            },
            "lifetime": lifetime,
        }),
    )
}

fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| CliError::validation(format!("{key}: cannot parse {v:?}")))
        })
        .collect()
}

pub fn layer_bound(
    args: &CommonArgs,
    a: Option<&str>,
    m: Option<&str>,
    l: Option<&str>,
    params: &[String],
) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args, "layer-bound")?;
    cfg.require_json()?;
    let (mut a, mut m, mut l) = (a.map(str::to_owned), m.map(str::to_owned), l.map(str::to_owned));
    let mut betas = vec![cfg.beta];
    for p in params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("expected key=value, got {p:?}")))?;
        match k {
            "a" => a = Some(v.into()),
            "m" => m = Some(v.into()),
            "l" => l = Some(v.into()),
            "beta" => betas = parse_list("beta", v)?,
            _ => return Err(CliError::validation(format!("unknown parameter {k:?} (a, m, l, beta)"))),
        }
    }
    let missing = |k: &str| CliError::validation(format!("layer-bound needs {k}"));
    let a: Vec<f64> = parse_list("a", &a.ok_or_else(|| missing("a"))?)?;
    let m: Vec<u64> = parse_list("m", &m.ok_or_else(|| missing("m"))?)?;
    let l: Vec<usize> = parse_list("l", &l.ok_or_else(|| missing("l"))?)?;
    let mut results = Vec::new();
    for &a in &a {
        for &m in &m {
            for &l in &l {
                for &beta in &betas {
                    let b = layer_flow_bound(a, m, l, beta)?;
                    results.push(json!({ "a": a, "m": m, "l": l, "beta": beta, "F": b.f, "argmax": b.argmax }));
                }
            }
        }
    }
    let body = if results.len() == 1 {
        results.pop().expect("one result")
    } else {
        json!({ "results": results })
    };
    emit_json(&cfg, body)
}
