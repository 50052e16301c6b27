use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use super::{hermitian_deviation, hermitian_eigenvalues, BlockBasis, DaviesError, DaviesGenerator, SuperOpMatrix, C64};
use crate::flow::FreeEnergyCertificate;
use crate::hamiltonian::{SpectralRateFunction, StabilizerHamiltonian};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupportMethod {
    ExactPencil,
    Blockwise,
    FlowBound,
    Factorization,
}

/// `τ = min{τ : τÊ − V̂ ⪰ 0}` with its certificate data.
#[derive(Debug, Clone, Serialize)]
pub struct SupportNumberResult {
    pub tau: f64,
    pub infinite: bool,
    pub method: SupportMethod,
    pub kernel_dim_e: usize,
    pub kernel_dim_v: usize,
    /// Smallest eigenvalue of `τÊ − V̂`, expected `≥ −1e−8‖V̂‖`.
    pub certificate_min_eig: f64,
    /// Smallest eigenvalue of `(τ − δ)Ê − V̂` with `δ = 1e−3 τ`,
    /// expected negative.
    pub minimality_min_eig: f64,
    pub certified: bool,
    pub v_norm: f64,
    #[serde(skip)]
    pub extremal: Option<DVector<C64>>,
}

const KERNEL_TOL: f64 = 1e-10;
const CERT_TOL: f64 = 1e-8;

fn check_hermitian(m: &SuperOpMatrix) -> Result<(), DaviesError> {
    let dev = hermitian_deviation(m);
    if dev > 1e-9 * m.norm().max(1.0) {
        return Err(DaviesError::NotHermitian(dev));
    }
    Ok(())
}

/// Exact support number of a Hermitian positive semidefinite pencil via the
/// pseudo-inverse square root of `Ê` on its range.
pub fn support_number_exact(e: &SuperOpMatrix, v: &SuperOpMatrix) -> Result<SupportNumberResult, DaviesError> {
    if e.shape() != v.shape() || e.nrows() != e.ncols() {
        return Err(DaviesError::DimensionMismatch {
            expected: e.nrows(),
            found: v.nrows(),
        });
    }
    check_hermitian(e)?;
    check_hermitian(v)?;
    let dim = e.nrows();
    let eig = SymmetricEigen::new(super::hermitian_part(e));
    let e_norm = eig.eigenvalues.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let v_eigs = hermitian_eigenvalues(v);
    let v_norm = v_eigs.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let kernel_dim_v = v_eigs
        .iter()
        .filter(|x| x.abs() <= KERNEL_TOL * v_norm.max(f64::MIN_POSITIVE))
        .count();
    let tol = KERNEL_TOL * e_norm.max(f64::MIN_POSITIVE);
    let (range, kernel): (Vec<usize>, Vec<usize>) = (0..dim).partition(|&i| eig.eigenvalues[i] > tol);
    let mut result = SupportNumberResult {
        tau: 0.0,
        infinite: false,
        method: SupportMethod::ExactPencil,
        kernel_dim_e: kernel.len(),
        kernel_dim_v,
        certificate_min_eig: 0.0,
        minimality_min_eig: 0.0,
        certified: true,
        v_norm,
        extremal: None,
    };
    if v_norm == 0.0 {
        return Ok(result);
    }
    for &k in &kernel {
        let col = eig.eigenvectors.column(k);
        if (v * col).norm() > CERT_TOL * v_norm {
            result.tau = f64::INFINITY;
            result.infinite = true;
            result.certified = false;
            return Ok(result);
        }
    }
    let r = DMatrix::from_fn(dim, range.len(), |i, j| {
        eig.eigenvectors[(i, range[j])] / eig.eigenvalues[range[j]].sqrt()
    });
    let m = super::hermitian_part(&(r.adjoint() * v * &r));
    let inner = SymmetricEigen::new(m);
    let (imax, tau) =
        inner.eigenvalues.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) },
        );
    let tau = tau.max(0.0);
    result.tau = tau;
    result.extremal = Some(&r * inner.eigenvectors.column(imax));
    let pencil = |t: f64| hermitian_eigenvalues(&(e * C64::new(t, 0.0) - v))[0];
    result.certificate_min_eig = pencil(tau);
    result.minimality_min_eig = pencil(tau * (1.0 - 1e-3));
    result.certified = result.certificate_min_eig >= -CERT_TOL * v_norm && result.minimality_min_eig < 0.0;
    Ok(result)
}

/// Exact support number computed coset by coset; `Ê` and `V̂` are
/// block-diagonal over the cosets of the stabilizer group.
pub fn support_number_blockwise(g: &DaviesGenerator, basis: &BlockBasis) -> Result<SupportNumberResult, DaviesError> {
    let mut worst: Option<SupportNumberResult> = None;
    let mut kernel_e = 0;
    let mut kernel_v = 0;
    let mut certified = true;
    for block in basis.cosets() {
        let e = g.dirichlet_on(&block.members);
        let v = g.variance_on(&block.members);
        let res = support_number_exact(&e, &v)?;
        kernel_e += res.kernel_dim_e;
        kernel_v += res.kernel_dim_v;
        // Blocks with V̂ = 0 carry no constraint and no minimality witness.
        if res.v_norm > 0.0 {
            certified &= res.certified;
        }
        if worst.as_ref().is_none_or(|w| res.tau > w.tau) {
            worst = Some(res);
        }
    }
    let mut out = worst.expect("at least one coset");
    out.method = SupportMethod::Blockwise;
    out.kernel_dim_e = kernel_e;
    out.kernel_dim_v = kernel_v;
    out.certified = certified && !out.infinite;
    out.extremal = None;
    Ok(out)
}

/// `τ ≤ (4·length/c_∘)·e^{βf̄}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowBound {
    pub tau_bound: f64,
    pub length_factor: usize,
    pub c_lower: f64,
    pub f_bar: f64,
    pub beta: f64,
}

/// Support-number bound from a free-energy certificate. `length_factor` is
/// `n` for flows whose paths have at most `n` steps and never repeat a
/// letter; in general pass `max(n, L·μ)`.
pub fn support_number_flow_bound(
    cert: &FreeEnergyCertificate,
    rates: &SpectralRateFunction,
    length_factor: usize,
) -> Result<FlowBound, DaviesError> {
    let (cb, rb) = (cert.beta, rates.beta());
    if (cb - rb).abs() > 1e-12 * cb.abs().max(1.0) {
        return Err(DaviesError::BetaMismatch {
            certificate: cb,
            rates: rb,
        });
    }
    Ok(FlowBound {
        tau_bound: 4.0 * length_factor as f64 / rates.c_lower() * (rb * cert.f_bar).exp(),
        length_factor,
        c_lower: rates.c_lower(),
        f_bar: cert.f_bar,
        beta: rb,
    })
}

/// `t_mix = τ(½ ln‖ρ_β^{-1}‖_∞ + ln 4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingBoundReport {
    pub tau: f64,
    pub inverse_gibbs_norm: f64,
    pub t_mix: f64,
    pub beta: f64,
    pub method: SupportMethod,
}

impl MixingBoundReport {
    /// `√‖ρ_β^{-1}‖_∞ · e^{−t/τ}`.
    pub fn envelope(&self, t: f64) -> f64 {
        self.inverse_gibbs_norm.sqrt() * (-t / self.tau).exp()
    }
}

pub fn mixing_time_bound(
    tau: f64,
    h: &StabilizerHamiltonian,
    beta: f64,
    method: SupportMethod,
) -> Result<MixingBoundReport, DaviesError> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(DaviesError::InfiniteSupportNumber);
    }
    let inv = h.gibbs(beta).inverse_norm();
    Ok(MixingBoundReport {
        tau,
        inverse_gibbs_norm: inv,
        t_mix: tau * (0.5 * inv.ln() + 4f64.ln()),
        beta,
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes;
    use crate::davies::{DaviesGenerator, DaviesOptions};
    use crate::hamiltonian::RateKind;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> SuperOpMatrix {
        let a = DMatrix::from_fn(dim, rank, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        &a * a.adjoint()
    }

    #[test]
    fn pencil_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let e = random_psd(&mut rng, 6, 6);
        let same = support_number_exact(&e, &e).unwrap();
        assert!((same.tau - 1.0).abs() < 1e-9);
        let v = random_psd(&mut rng, 6, 3);
        let base = support_number_exact(&e, &v).unwrap();
        assert!(base.certified);
        for c in [0.1, 10.0] {
            let scaled = support_number_exact(&(&e * C64::new(c, 0.0)), &(&v * C64::new(c, 0.0))).unwrap();
            assert!((scaled.tau - base.tau).abs() < 1e-9 * base.tau);
        }
    }

    #[test]
    fn kernel_violation_gives_infinity() {
        let mut e = SuperOpMatrix::identity(3, 3);
        e[(2, 2)] = C64::new(0.0, 0.0);
        let v = SuperOpMatrix::identity(3, 3);
        let r = support_number_exact(&e, &v).unwrap();
        assert!(r.infinite && r.tau.is_infinite());
        assert!(support_number_exact(&e, &SuperOpMatrix::zeros(3, 3)).unwrap().tau == 0.0);
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut e = SuperOpMatrix::identity(2, 2);
        e[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            support_number_exact(&e, &SuperOpMatrix::identity(2, 2)),
            Err(DaviesError::NotHermitian(_))
        ));
    }

    /// Smallest `τ` on a bisection grid with `τE − V ⪰ 0`, an oracle that
    /// never forms `E^{-1/2}`.
    fn bisect_support(e: &SuperOpMatrix, v: &SuperOpMatrix) -> f64 {
        let scale = v.norm().max(1e-300);
        let ok = |t: f64| hermitian_eigenvalues(&(e * C64::new(t, 0.0) - v))[0] >= -1e-11 * scale;
        let (mut lo, mut hi) = (0.0, 1.0);
        while !ok(hi) {
            hi *= 2.0;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn exact_matches_bisection_on_small_codes() {
        for (name, beta) in [("rep1", 1.0), ("rep2", 0.7), ("bell", 1.3)] {
            let h = codes::by_name(name).unwrap();
            let rates = h.rate_function(RateKind::Glauber, beta).unwrap();
            let g = DaviesGenerator::new(&h, &rates, DaviesOptions::default()).unwrap();
            let (e, v) = (g.dirichlet_matrix(), g.variance_matrix());
            let res = support_number_exact(&e, &v).unwrap();
            let oracle = bisect_support(&e, &v);
            assert!(res.certified, "{name}");
            assert!(
                (res.tau - oracle).abs() < 1e-6 * oracle,
                "{name}: {} vs {oracle}",
                res.tau
            );
            let basis = BlockBasis::new(&h).unwrap();
            let blk = support_number_blockwise(&g, &basis).unwrap();
            assert!((blk.tau - res.tau).abs() < 1e-8 * res.tau, "{name}");
        }
    }

    #[test]
    fn mixing_time_formula() {
        let h = codes::repetition(2);
        let r = mixing_time_bound(2.0, &h, 1.0, SupportMethod::ExactPencil).unwrap();
        let inv = h.gibbs(1.0).inverse_norm();
        assert!((r.t_mix - 2.0 * (0.5 * inv.ln() + 4f64.ln())).abs() < 1e-12);
        assert!((r.envelope(0.0) - inv.sqrt()).abs() < 1e-12);
        assert!(mixing_time_bound(f64::INFINITY, &h, 1.0, SupportMethod::ExactPencil).is_err());
    }
}
