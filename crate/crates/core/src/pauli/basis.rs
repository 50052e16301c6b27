use super::{PauliError, PauliOperator, Syndrome};

/// Symplectic row with columns ordered x_0..x_{n-1}, z_0..z_{n-1}.
type Row = u128;

fn to_row(p: &PauliOperator) -> Row {
    (p.x_bits() as u128) | ((p.z_bits() as u128) << 64)
}

fn from_row(n: usize, row: Row) -> PauliOperator {
    PauliOperator::from_bits(n, row as u64, (row >> 64) as u64).expect("row stays within n sites")
}

#[derive(Debug, Clone)]
struct ReducedRow {
    row: Row,
    pivot: u32,
    /// Which generators S_j were combined into this row.
    combo: u64,
}

/// Independent generating set `S_1..S_r` of an abelian Pauli group, together
/// with a reduced row-echelon witness used for membership tests and coset
/// canonicalization.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    n: usize,
    generators: Vec<PauliOperator>,
    source_indices: Vec<usize>,
    reduced: Vec<ReducedRow>,
}

impl GeneratorBasis {
    /// Selects an independent subset of `generators` (greedy, input order).
    ///
    /// Fails on the first anticommuting pair or on mixed qubit counts.
    pub fn new(n: usize, generators: &[PauliOperator]) -> Result<Self, PauliError> {
        for g in generators {
            if g.num_qubits() != n {
                return Err(PauliError::QubitMismatch(n, g.num_qubits()));
            }
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                if generators[i].anticommutes(&generators[j]) {
                    return Err(PauliError::AnticommutingPair(i, j));
                }
            }
        }
        let mut basis = GeneratorBasis {
            n,
            generators: Vec::new(),
            source_indices: Vec::new(),
            reduced: Vec::new(),
        };
        for (i, g) in generators.iter().enumerate() {
            let (rem, combo) = basis.reduce(to_row(g));
            if rem != 0 {
                let j = basis.generators.len();
                basis.generators.push(*g);
                basis.source_indices.push(i);
                basis.insert(rem, combo ^ (1u64 << j));
            }
        }
        Ok(basis)
    }

    /// Reduces `row` against the current echelon rows, returning the
    /// remainder and the generator combination that was cancelled.
    fn reduce(&self, mut row: Row) -> (Row, u64) {
        let mut combo = 0u64;
        for r in &self.reduced {
            if (row >> r.pivot) & 1 == 1 {
                row ^= r.row;
                combo ^= r.combo;
            }
        }
        (row, combo)
    }

    fn insert(&mut self, row: Row, combo: u64) {
        let pivot = row.trailing_zeros();
        for r in &mut self.reduced {
            if (r.row >> pivot) & 1 == 1 {
                r.row ^= row;
                r.combo ^= combo;
            }
        }
        let pos = self
            .reduced
            .iter()
            .position(|r| r.pivot > pivot)
            .unwrap_or(self.reduced.len());
        self.reduced.insert(pos, ReducedRow { row, pivot, combo });
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    /// Rank `r` of the group.
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    /// Number of logical qubits `k = n - r`.
    pub fn logical_qubits(&self) -> usize {
        self.n - self.rank()
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    /// Positions in the constructor input of the selected generators.
    pub fn source_indices(&self) -> &[usize] {
        &self.source_indices
    }

    /// Exponent mask `c` with `P = ∏_j S_j^{c_j}` (phaseless), or `None`
    /// when `P` is not in the group.
    pub fn in_group(&self, p: &PauliOperator) -> Option<u64> {
        if p.num_qubits() != self.n {
            return None;
        }
        let (rem, combo) = self.reduce(to_row(p));
        (rem == 0).then_some(combo)
    }

    /// Phaseless product `∏_j S_j^{c_j}`.
    pub fn element(&self, exponents: u64) -> PauliOperator {
        self.generators
            .iter()
            .enumerate()
            .filter(|(j, _)| (exponents >> j) & 1 == 1)
            .fold(PauliOperator::identity(self.n), |acc, (_, g)| acc * *g)
    }

    /// `σ_P`, entry `j` being the commutator of `P` with `S_j`.
    pub fn syndrome(&self, p: &PauliOperator) -> Result<Syndrome, PauliError> {
        if p.num_qubits() != self.n {
            return Err(PauliError::QubitMismatch(self.n, p.num_qubits()));
        }
        Ok(self.syndrome_unchecked(p))
    }

    #[inline]
    pub(crate) fn syndrome_unchecked(&self, p: &PauliOperator) -> Syndrome {
        let bits = self
            .generators
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, g)| acc | ((p.anticommutes(g) as u64) << j));
        Syndrome::from_bits(self.rank(), bits)
    }

    /// Deterministic representative of the coset `P·𝒮`: the remainder of
    /// `P` after clearing every pivot column of the echelon basis.
    pub fn canonical_representative(&self, p: &PauliOperator) -> PauliOperator {
        from_row(self.n, self.reduce(to_row(p)).0)
    }

    /// Every element of the group, indexed by exponent mask.
    pub fn elements(&self) -> Vec<PauliOperator> {
        assert!(self.rank() < 32);
        (0..1u64 << self.rank()).map(|c| self.element(c)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn p(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    fn gf2_rank(rows: &[PauliOperator]) -> usize {
        // Plain Gaussian elimination, independent of the echelon witness.
        let mut rows: Vec<u128> = rows.iter().map(to_row).collect();
        let mut rank = 0;
        for col in 0..128 {
            if let Some(i) = (rank..rows.len()).find(|&i| (rows[i] >> col) & 1 == 1) {
                rows.swap(rank, i);
                for k in 0..rows.len() {
                    if k != rank && (rows[k] >> col) & 1 == 1 {
                        rows[k] ^= rows[rank];
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn dependent_generators_are_dropped() {
        let gens = [p("ZZI"), p("IZZ"), p("ZIZ")];
        let b = GeneratorBasis::new(3, &gens).unwrap();
        assert_eq!(b.rank(), 2);
        assert_eq!(gf2_rank(&gens), 2);
        assert_eq!(b.source_indices(), &[0, 1]);
        assert_eq!(GeneratorBasis::new(2, &[p("ZZ")]).unwrap().rank(), 1);
    }

    #[test]
    fn anticommuting_input_is_reported() {
        assert_eq!(
            GeneratorBasis::new(2, &[p("XI"), p("ZI")]).unwrap_err(),
            PauliError::AnticommutingPair(0, 1)
        );
    }

    #[test]
    fn membership() {
        let b = GeneratorBasis::new(3, &[p("ZZI"), p("IZZ")]).unwrap();
        assert_eq!(b.in_group(&p("ZIZ")), Some(0b11));
        assert_eq!(b.in_group(&PauliOperator::identity(3)), Some(0));
        assert_eq!(b.in_group(&p("XII")), None);
        for c in 0..4 {
            assert_eq!(b.in_group(&b.element(c)), Some(c));
        }
    }

    #[test]
    fn syndrome_examples() {
        let b = GeneratorBasis::new(3, &[p("ZZI"), p("IZZ")]).unwrap();
        assert_eq!(b.syndrome(&p("XII")).unwrap().entries(), vec![-1, 1]);
        assert!(b.syndrome(&PauliOperator::identity(3)).unwrap().is_trivial());
        for s in b.elements() {
            assert!(b.syndrome(&s).unwrap().is_trivial());
        }
    }

    #[test]
    fn canonical_representatives_count_cosets() {
        let b = GeneratorBasis::new(2, &[p("ZZ")]).unwrap();
        let reps: HashSet<_> = PauliOperator::all(2).map(|q| b.canonical_representative(&q)).collect();
        assert_eq!(reps.len(), 8);
        assert_eq!(
            b.canonical_representative(&PauliOperator::identity(2)),
            PauliOperator::identity(2)
        );
    }

    #[test]
    fn canonical_representative_is_stabilizer_invariant() {
        let b = GeneratorBasis::new(3, &[p("XXX"), p("ZZI"), p("IZZ")]).unwrap();
        let elems = b.elements();
        for q in PauliOperator::all(3) {
            let rep = b.canonical_representative(&q);
            for s in &elems {
                assert_eq!(b.canonical_representative(&(q * *s)), rep);
            }
        }
    }
}
