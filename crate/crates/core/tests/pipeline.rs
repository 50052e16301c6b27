//! Cross-module consistency: file formats, certificates, dense generators
//! and the classical chain.

use febarrier::codes;
use febarrier::davies::{
    block_decompose, factorization_bound, mixing_time_bound, support_number_blockwise, support_number_exact,
    support_number_flow_bound, BlockBasis, DaviesGenerator, DaviesOptions, SupportMethod,
};
use febarrier::flow::{FlowSet, SearchOptions};
use febarrier::io::{parse_code, parse_flows, CertificateFile};
use febarrier::kmc::classical_generator;
use febarrier::{RateKind, Syndrome};

#[test]
fn files_to_verified_certificate() {
    let h = parse_code(r#"{"n": 3, "terms": [{"pauli": "ZZI", "J": 1.0}, {"pauli": "IZZ", "J": 1.5}]}"#).unwrap();
    let flows = parse_flows(
        r#"{"flows": [
            {"target": "XXX", "paths": [["X1", "X2", "X3"], ["X3", "X2", "X1"]]},
            {"target": "ZII", "paths": [["Z1"], ["X1", "Y1"]]}
        ]}"#,
        &h,
    )
    .unwrap();
    let beta = 1.2;
    let cert = febarrier::flow::flow_free_energy(&flows, &h, beta).unwrap();
    // Two orders of XXX: the middle edges are used once each, the ends twice.
    assert!(cert.f_bar < cert.energy_barrier());
    let file = CertificateFile::new(&h, &flows, cert.clone());
    let (again, ok) = CertificateFile::parse(&serde_json::to_string(&file).unwrap())
        .unwrap()
        .verify(1e-12)
        .unwrap();
    assert!(ok);
    assert_eq!(again, cert);
}

#[test]
fn davies_gap_is_inverse_support_number() {
    for h in [codes::repetition(2), codes::bell_pair(), codes::repetition(3)] {
        for kind in [RateKind::Glauber, RateKind::Metropolis] {
            let rates = h.rate_function(kind, 0.8).unwrap();
            let g = DaviesGenerator::new(&h, &rates, DaviesOptions::default()).unwrap();
            let tau = support_number_exact(&g.dirichlet_matrix(), &g.variance_matrix())
                .unwrap()
                .tau;
            let gap = g.spectral_gap();
            assert!((gap * tau - 1.0).abs() < 1e-8, "gap {gap}, tau {tau}");
        }
    }
}

#[test]
fn population_chain_gap_dominates_full_gap() {
    // The chain is a restriction of the generator, so its gap cannot be
    // smaller than the full one.
    for h in [codes::repetition(1), codes::repetition(2), codes::repetition(3)] {
        let rates = h.rate_function(RateKind::Glauber, 1.0).unwrap();
        let g = DaviesGenerator::new(&h, &rates, DaviesOptions::default()).unwrap();
        let chain = classical_generator(&h, &rates).unwrap();
        assert!(g.spectral_gap() <= chain.spectral_gap() + 1e-9);
        assert!(chain.detailed_balance_residual() < 1e-12);
    }
}

#[test]
fn support_number_chain_on_rep3() {
    let h = codes::repetition(3);
    let flows = FlowSet::bottleneck(&h, SearchOptions::default()).unwrap();
    let basis = BlockBasis::new(&h).unwrap();
    for beta in [0.5, 1.5] {
        let rates = h.rate_function(RateKind::Glauber, beta).unwrap();
        let g = DaviesGenerator::new(&h, &rates, DaviesOptions::default()).unwrap();
        let exact = support_number_exact(&g.dirichlet_matrix(), &g.variance_matrix()).unwrap();
        let blockwise = support_number_blockwise(&g, &basis).unwrap();
        assert!((exact.tau - blockwise.tau).abs() < 1e-8 * exact.tau);
        let fact = factorization_bound(&h, &rates, &flows).unwrap();
        let cert = flows.free_energy(&h, beta).unwrap();
        let bound = support_number_flow_bound(&cert, &rates, h.num_qubits()).unwrap();
        assert!(exact.tau <= fact + 1e-9 && fact <= bound.tau_bound);
        let mix = mixing_time_bound(bound.tau_bound, &h, beta, SupportMethod::FlowBound).unwrap();
        assert!(mix.t_mix > 0.0 && mix.envelope(mix.t_mix) <= 0.25 + 1e-12);
    }
}

#[test]
fn blocks_are_diagonal_on_the_four_qubit_code() {
    let h = codes::four_qubit_two_stabilizer();
    let rates = h.rate_function(RateKind::Metropolis, 1.0).unwrap();
    let g = DaviesGenerator::new(&h, &rates, DaviesOptions::default()).unwrap();
    let basis = BlockBasis::new(&h).unwrap();
    let d = block_decompose(&g, &basis, &Syndrome::trivial(h.rank())).unwrap();
    assert!(d.off_block_e < 1e-10 && d.off_block_v < 1e-10);
    assert!(d.max_variance_residual < 1e-10);
    assert!(d.min_dirichlet_excess > -1e-10);
}
