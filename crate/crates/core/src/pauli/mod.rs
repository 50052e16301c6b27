//! Phaseless n-qubit Pauli algebra in symplectic (x, z) bit form.
//!
//! Site `i` of an operator is stored in bit `i` of both bit planes. In the
//! text format the leftmost character is site 0 (qubit 1).

mod basis;
mod syndrome;

pub use basis::GeneratorBasis;
pub use syndrome::Syndrome;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

/// Largest qubit count representable by a single machine word per bit plane.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PauliError {
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),
    #[error("invalid character {found:?} at position {position} (expected one of I, X, Y, Z)")]
    InvalidCharacter { position: usize, found: char },
    #[error("empty Pauli string")]
    Empty,
    #[error("{0} qubits exceeds the supported maximum of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("site {site} out of range for {n} qubits")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("generators {0} and {1} anticommute")]
    AnticommutingPair(usize, usize),
    #[error("syndrome length {found} does not match basis rank {expected}")]
    SyndromeLength { expected: usize, found: usize },
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const NON_IDENTITY: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    /// Digit used by the lexicographic Pauli index (I < X < Y < Z).
    fn digit(self) -> usize {
        match self {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        }
    }

    fn from_digit(d: usize) -> Self {
        match d & 3 {
            0 => Letter::I,
            1 => Letter::X,
            2 => Letter::Y,
            _ => Letter::Z,
        }
    }
}

/// A phaseless Pauli operator on `n` qubits.
///
/// Multiplication is the XOR of both bit planes, so the group is abelian
/// and every element is an involution.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliOperator {
    n: usize,
    x: u64,
    z: u64,
}

fn mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits are supported");
        Self { n, x: 0, z: 0 }
    }

    /// Builds an operator from its bit planes; bits above `n` are rejected.
    pub fn from_bits(n: usize, x: u64, z: u64) -> Result<Self, PauliError> {
        if n > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(n));
        }
        let m = mask(n);
        if x & !m != 0 || z & !m != 0 {
            let high = ((x | z) & !m).trailing_zeros() as usize;
            return Err(PauliError::SiteOutOfRange { site: high, n });
        }
        Ok(Self { n, x, z })
    }

    /// Operator acting as `letter` on `site` and as the identity elsewhere.
    pub fn single(n: usize, site: usize, letter: Letter) -> Result<Self, PauliError> {
        if site >= n {
            return Err(PauliError::SiteOutOfRange { site, n });
        }
        let (xb, zb) = letter.bits();
        Self::from_bits(n, (xb as u64) << site, (zb as u64) << site)
    }

    /// All `3n` single-site Paulis, ordered by site then letter (X, Y, Z).
    pub fn single_site_all(n: usize) -> Vec<PauliOperator> {
        (0..n)
            .flat_map(|site| {
                Letter::NON_IDENTITY
                    .iter()
                    .map(move |&l| PauliOperator::single(n, site, l).expect("site < n"))
            })
            .collect()
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_bits(&self) -> u64 {
        self.x
    }

    pub fn z_bits(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn letter(&self, site: usize) -> Letter {
        Letter::from_bits((self.x >> site) & 1 == 1, (self.z >> site) & 1 == 1)
    }

    /// Number of non-identity sites.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    /// Sites carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut s = self.x | self.z;
        let mut out = Vec::with_capacity(s.count_ones() as usize);
        while s != 0 {
            out.push(s.trailing_zeros() as usize);
            s &= s - 1;
        }
        out
    }

    fn check_n(&self, other: &Self) -> Result<(), PauliError> {
        if self.n != other.n {
            Err(PauliError::QubitMismatch(self.n, other.n))
        } else {
            Ok(())
        }
    }

    /// Phaseless product.
    pub fn multiply(&self, other: &Self) -> Result<Self, PauliError> {
        self.check_n(other)?;
        Ok(Self {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        })
    }

    /// Group commutator `[P, Q] = PQP⁻¹Q⁻¹`, which is `+1` or `-1`.
    pub fn commutator_sign(&self, other: &Self) -> Result<i8, PauliError> {
        self.check_n(other)?;
        Ok(if self.anticommutes(other) { -1 } else { 1 })
    }

    /// Symplectic form; callers guarantee equal qubit counts.
    #[inline]
    pub fn anticommutes(&self, other: &Self) -> bool {
        debug_assert_eq!(self.n, other.n);
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) & 1 == 1
    }

    /// Power of `i` (mod 4) picked up when the Hermitian operators for `self`
    /// and `other` are multiplied: `P·Q = i^k · (P·Q)_phaseless`.
    pub fn product_phase(&self, other: &Self) -> Result<u8, PauliError> {
        self.check_n(other)?;
        let a1 = (self.x & self.z).count_ones();
        let a2 = (other.x & other.z).count_ones();
        let x3 = self.x ^ other.x;
        let z3 = self.z ^ other.z;
        let a3 = (x3 & z3).count_ones();
        let swap = (self.z & other.x).count_ones();
        Ok(((a1 + a2 + 2 * swap + 4 * 64 - a3) % 4) as u8)
    }

    /// Position in the lexicographic enumeration of all `4^n` Paulis
    /// (I < X < Y < Z, qubit 1 most significant).
    pub fn index(&self) -> usize {
        debug_assert!(self.n <= 31, "index only defined for n <= 31");
        (0..self.n).fold(0usize, |acc, site| (acc << 2) | self.letter(site).digit())
    }

    pub fn from_index(n: usize, mut idx: usize) -> Self {
        let mut x = 0u64;
        let mut z = 0u64;
        for site in (0..n).rev() {
            let (xb, zb) = Letter::from_digit(idx & 3).bits();
            x |= (xb as u64) << site;
            z |= (zb as u64) << site;
            idx >>= 2;
        }
        Self { n, x, z }
    }

    /// Iterator over all `4^n` Paulis in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = PauliOperator> {
        assert!(n <= 15, "enumerating 4^n Paulis is only supported for n <= 15");
        (0..1usize << (2 * n)).map(move |i| PauliOperator::from_index(n, i))
    }

    /// Dense Hermitian matrix, with `Y = iXZ` on each site and qubit 1 as the
    /// most significant tensor factor.
    pub fn to_dense(&self) -> DMatrix<Complex<f64>> {
        let dim = 1usize << self.n;
        let (xm, zm) = (self.basis_mask(self.x), self.basis_mask(self.z));
        let ys = (self.x & self.z).count_ones();
        let base = i_pow(ys);
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            let sign = if (zm & b).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
            m[(b ^ xm, b)] = base * sign;
        }
        m
    }

    /// `(xm, zm, c)` with `P = c · Σ_b (-1)^{|zm ∧ b|} |b ⊕ xm⟩⟨b|` over
    /// computational basis indices `b`.
    pub fn monomial(&self) -> (usize, usize, Complex<f64>) {
        (
            self.basis_mask(self.x),
            self.basis_mask(self.z),
            i_pow((self.x & self.z).count_ones()),
        )
    }

    fn basis_mask(&self, bits: u64) -> usize {
        (0..self.n)
            .filter(|&site| (bits >> site) & 1 == 1)
            .fold(0usize, |acc, site| acc | 1 << (self.n - 1 - site))
    }
}

pub(crate) fn i_pow(k: u32) -> Complex<f64> {
    match k % 4 {
        0 => Complex::new(1.0, 0.0),
        1 => Complex::new(0.0, 1.0),
        2 => Complex::new(-1.0, 0.0),
        _ => Complex::new(0.0, -1.0),
    }
}

impl std::ops::Mul for PauliOperator {
    type Output = PauliOperator;

    /// Phaseless product. Panics on a qubit-count mismatch; use
    /// [`PauliOperator::multiply`] for the fallible form.
    fn mul(self, rhs: Self) -> Self {
        assert_eq!(self.n, rhs.n, "qubit count mismatch");
        Self {
            n: self.n,
            x: self.x ^ rhs.x,
            z: self.z ^ rhs.z,
        }
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for site in 0..self.n {
            write!(f, "{}", self.letter(site).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pauli({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().collect();
        if chars.is_empty() {
            return Err(PauliError::Empty);
        }
        if chars.len() > MAX_QUBITS {
            return Err(PauliError::TooManyQubits(chars.len()));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (site, &c) in chars.iter().enumerate() {
            let letter = Letter::from_char(c).ok_or(PauliError::InvalidCharacter {
                position: site + 1,
                found: c,
            })?;
            let (xb, zb) = letter.bits();
            x |= (xb as u64) << site;
            z |= (zb as u64) << site;
        }
        Ok(Self { n: chars.len(), x, z })
    }
}

impl serde::Serialize for PauliOperator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    fn dense_commutes(a: &PauliOperator, b: &PauliOperator) -> bool {
        let (ma, mb) = (a.to_dense(), b.to_dense());
        let c = &ma * &mb - &mb * &ma;
        c.iter().all(|v| v.norm() < 1e-12)
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(p("XX").multiply(&p("ZZ")).unwrap(), p("YY"));
        assert_eq!(p("IX").multiply(&p("ZI")).unwrap(), p("ZX"));
        for q in PauliOperator::all(2) {
            assert!((q * q).is_identity());
        }
        assert_eq!(p("XX").multiply(&p("X")), Err(PauliError::QubitMismatch(2, 1)));
    }

    #[test]
    fn commutator_examples() {
        assert_eq!(p("X").commutator_sign(&p("Z")).unwrap(), -1);
        assert_eq!(p("XX").commutator_sign(&p("ZZ")).unwrap(), 1);
        assert_eq!(p("XYZ").commutator_sign(&p("ZZI")).unwrap(), 1);
        assert!(dense_commutes(&p("XYZ"), &p("ZZI")));
    }

    #[test]
    fn commutator_matches_dense_oracle_n2() {
        for a in PauliOperator::all(2) {
            for b in PauliOperator::all(2) {
                assert_eq!(!a.anticommutes(&b), dense_commutes(&a, &b), "{a} {b}");
            }
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(PauliOperator::identity(3).weight(), 0);
        assert_eq!(p("XIZ").weight(), 2);
        assert_eq!(p("YYY").weight(), 3);
    }

    #[test]
    fn parse_rejects_bad_characters() {
        assert_eq!(
            "XQZ".parse::<PauliOperator>(),
            Err(PauliError::InvalidCharacter {
                position: 2,
                found: 'Q'
            })
        );
        assert_eq!("".parse::<PauliOperator>(), Err(PauliError::Empty));
        assert!("xyz".parse::<PauliOperator>().is_err());
    }

    #[test]
    fn index_round_trip_and_order() {
        let all: Vec<_> = PauliOperator::all(2).collect();
        assert_eq!(all[0], p("II"));
        assert_eq!(all[1], p("IX"));
        assert_eq!(all[4], p("XI"));
        assert_eq!(all[15], p("ZZ"));
        for (i, q) in all.iter().enumerate() {
            assert_eq!(q.index(), i);
        }
    }

    #[test]
    fn product_phase_matches_dense() {
        for a in PauliOperator::all(2) {
            for b in PauliOperator::all(2) {
                let k = a.product_phase(&b).unwrap();
                let lhs = a.to_dense() * b.to_dense();
                let rhs = (a * b).to_dense() * i_pow(k as u32);
                assert!((lhs - rhs).norm() < 1e-12, "{a}·{b}");
            }
        }
    }

    #[test]
    fn dense_y_is_hermitian() {
        let y = p("Y").to_dense();
        assert!((y.adjoint() - &y).norm() < 1e-15);
        assert_eq!(y[(1, 0)], Complex::new(0.0, 1.0));
    }
}
