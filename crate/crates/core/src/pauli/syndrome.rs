use std::fmt;

/// Syndrome vector over `{+1, -1}^r`, packed so that bit `j` set means
/// entry `j` is `-1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syndrome {
    r: usize,
    bits: u64,
}

impl Syndrome {
    pub fn trivial(r: usize) -> Self {
        Self { r, bits: 0 }
    }

    pub fn from_bits(r: usize, bits: u64) -> Self {
        debug_assert!(r == 64 || bits >> r == 0);
        Self { r, bits }
    }

    /// Builds a syndrome from explicit `±1` entries.
    pub fn from_entries(entries: &[i8]) -> Option<Self> {
        let mut bits = 0u64;
        for (j, &e) in entries.iter().enumerate() {
            match e {
                1 => {}
                -1 => bits |= 1 << j,
                _ => return None,
            }
        }
        Some(Self { r: entries.len(), bits })
    }

    /// Enumerates all `2^r` syndromes in index order.
    pub fn all(r: usize) -> impl Iterator<Item = Syndrome> {
        assert!(r < 32, "syndrome enumeration needs r < 32");
        (0..1u64 << r).map(move |bits| Syndrome { r, bits })
    }

    pub fn len(&self) -> usize {
        self.r
    }

    pub fn is_empty(&self) -> bool {
        self.r == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Table index of this syndrome, `0..2^r`.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    pub fn entry(&self, j: usize) -> i8 {
        if (self.bits >> j) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn entries(&self) -> Vec<i8> {
        (0..self.r).map(|j| self.entry(j)).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.bits == 0
    }

    /// Componentwise product `s ⊕ u`.
    pub fn combine(&self, other: &Syndrome) -> Syndrome {
        debug_assert_eq!(self.r, other.r);
        Syndrome {
            r: self.r,
            bits: self.bits ^ other.bits,
        }
    }

    /// `∏_j s_j^{c_j}` for an exponent mask `c`.
    pub fn character(&self, exponents: u64) -> i8 {
        if (self.bits & exponents).count_ones() & 1 == 1 {
            -1
        } else {
            1
        }
    }
}

impl std::ops::BitXor for Syndrome {
    type Output = Syndrome;

    fn bitxor(self, rhs: Self) -> Syndrome {
        self.combine(&rhs)
    }
}

impl fmt::Debug for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Syndrome({self})")
    }
}

impl fmt::Display for Syndrome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.r {
            f.write_str(if self.entry(j) == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl serde::Serialize for Syndrome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
