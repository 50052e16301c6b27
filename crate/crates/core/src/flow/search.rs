use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::Serialize;

use super::{Edge, FlowError, PauliFlow, PauliPath};
use crate::hamiltonian::StabilizerHamiltonian;
use crate::pauli::{Letter, PauliError, PauliOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Settled-state budget of the bottleneck search; also bounds the number
    /// of partial orderings explored by the ensemble generator.
    pub max_states: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_states: 1 << 20 }
    }
}

/// A single path with its largest step barrier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BottleneckPath {
    pub target: PauliOperator,
    pub path: PauliPath,
    pub barrier: f64,
    /// True when the search finished; false for a budget fallback.
    pub optimal: bool,
    pub expanded: usize,
}

fn path_barrier(h: &StabilizerHamiltonian, target: &PauliOperator, path: &PauliPath) -> f64 {
    path.edges()
        .map(|e| h.step_barrier_unchecked(target, &e.from))
        .fold(0.0, f64::max)
}

/// Minimizes the largest step barrier `max_t ε̄_P(U_t)` over all paths to
/// `target`, breaking ties by length.
///
/// States are full Paulis and the cost of leaving `U` is `ε̄_P(U)`. When the
/// settled-state budget runs out the error carries the ascending-site path
/// as a non-optimal fallback.
pub fn bottleneck_path_search(
    h: &StabilizerHamiltonian,
    target: &PauliOperator,
    opts: SearchOptions,
) -> Result<BottleneckPath, FlowError> {
    let n = h.num_qubits();
    if target.num_qubits() != n {
        return Err(PauliError::QubitMismatch(n, target.num_qubits()).into());
    }
    let start = PauliOperator::identity(n);
    let moves = PauliOperator::single_site_all(n);
    // Barriers are non-negative, so their bit patterns sort like the values.
    let mut best: HashMap<PauliOperator, ((u64, usize), Option<PauliOperator>)> = HashMap::new();
    let mut settled: HashSet<PauliOperator> = HashSet::new();
    let mut heap = BinaryHeap::new();
    best.insert(start, ((0.0f64.to_bits(), 0), None));
    heap.push(Reverse(((0.0f64.to_bits(), 0usize), start)));
    while let Some(Reverse((key, u))) = heap.pop() {
        if !settled.insert(u) {
            continue;
        }
        if u == *target {
            let mut states = vec![u];
            let mut cur = u;
            while let Some(prev) = best[&cur].1 {
                states.push(prev);
                cur = prev;
            }
            states.reverse();
            return Ok(BottleneckPath {
                target: *target,
                path: PauliPath::from_states(states),
                barrier: f64::from_bits(key.0),
                optimal: true,
                expanded: settled.len(),
            });
        }
        if settled.len() >= opts.max_states {
            let path = PauliPath::ascending(target);
            let barrier = path_barrier(h, target, &path);
            return Err(FlowError::SearchBudgetExhausted {
                budget: opts.max_states,
                best: Box::new(BottleneckPath {
                    target: *target,
                    path,
                    barrier,
                    optimal: false,
                    expanded: settled.len(),
                }),
            });
        }
        let leave = h.step_barrier_unchecked(target, &u);
        let next_key = (f64::from_bits(key.0).max(leave).to_bits(), key.1 + 1);
        for a in &moves {
            let v = u * *a;
            if settled.contains(&v) {
                continue;
            }
            let improve = best.get(&v).is_none_or(|(k, _)| next_key < *k);
            if improve {
                best.insert(v, (next_key, Some(u)));
                heap.push(Reverse((next_key, v)));
            }
        }
    }
    unreachable!("every Pauli is reachable by single-site steps")
}

/// Builds up to `budget` distinct paths to `target` whose step barriers
/// never exceed that of the bottleneck seed path.
///
/// Variants, in order: reorderings of the seed's letters; the seed's letters
/// with the letters of one basis generator inserted twice; the seed's
/// letters with one letter split into the other two on the same site. No
/// path repeats an edge. Fewer than `budget` paths may be returned.
pub fn ensemble_flow_generate(
    h: &StabilizerHamiltonian,
    target: &PauliOperator,
    budget: usize,
    opts: SearchOptions,
) -> Result<PauliFlow, FlowError> {
    let seed = match bottleneck_path_search(h, target, opts) {
        Ok(b) => b,
        Err(FlowError::SearchBudgetExhausted { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let n = h.num_qubits();
    let ceiling = seed.barrier;
    let mut paths = vec![seed.path.clone()];
    let mut seen: HashSet<PauliPath> = paths.iter().cloned().collect();
    if budget <= 1 || seed.path.is_empty() {
        return PauliFlow::new(*target, paths);
    }
    let base = seed.path.letters();
    let mut multisets = vec![base.clone()];
    for g in h.basis().generators() {
        let letters: Vec<_> = g
            .support()
            .into_iter()
            .map(|s| PauliOperator::single(n, s, g.letter(s)).expect("site in range"))
            .collect();
        let mut m = base.clone();
        m.extend(letters.iter().copied());
        m.extend(letters.iter().copied());
        multisets.push(m);
    }
    for (i, a) in base.iter().enumerate() {
        let site = a.support()[0];
        let parts: Vec<_> = Letter::NON_IDENTITY
            .iter()
            .filter(|&&l| l != a.letter(site))
            .map(|&l| PauliOperator::single(n, site, l).expect("site in range"))
            .collect();
        let mut m = base.clone();
        m.remove(i);
        m.extend(parts);
        multisets.push(m);
    }
    let mut explored = 0usize;
    for mut letters in multisets {
        letters.sort();
        let mut dfs = Orderings {
            h,
            target: *target,
            ceiling,
            budget,
            max_nodes: opts.max_states,
        };
        dfs.run(&mut letters, &mut paths, &mut seen, &mut explored);
        if paths.len() >= budget || explored >= opts.max_states {
            break;
        }
    }
    PauliFlow::new(*target, paths)
}

struct Orderings<'a> {
    h: &'a StabilizerHamiltonian,
    target: PauliOperator,
    ceiling: f64,
    budget: usize,
    max_nodes: usize,
}

impl Orderings<'_> {
    fn run(
        &mut self,
        letters: &mut [PauliOperator],
        paths: &mut Vec<PauliPath>,
        seen: &mut HashSet<PauliPath>,
        explored: &mut usize,
    ) {
        let n = self.target.num_qubits();
        let mut remaining: Vec<(PauliOperator, usize)> = Vec::new();
        for a in letters.iter() {
            match remaining.last_mut() {
                Some((b, c)) if b == a => *c += 1,
                _ => remaining.push((*a, 1)),
            }
        }
        let total = letters.len();
        let mut states = vec![PauliOperator::identity(n)];
        let mut edges = HashSet::new();
        self.descend(&mut remaining, total, &mut states, &mut edges, paths, seen, explored);
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &mut self,
        remaining: &mut [(PauliOperator, usize)],
        left: usize,
        states: &mut Vec<PauliOperator>,
        edges: &mut HashSet<Edge>,
        paths: &mut Vec<PauliPath>,
        seen: &mut HashSet<PauliPath>,
        explored: &mut usize,
    ) {
        if paths.len() >= self.budget || *explored >= self.max_nodes {
            return;
        }
        *explored += 1;
        let u = *states.last().expect("starts at identity");
        if left == 0 {
            debug_assert_eq!(u, self.target);
            let path = PauliPath::from_states(states.clone());
            if seen.insert(path.clone()) {
                paths.push(path);
            }
            return;
        }
        if self.h.step_barrier_unchecked(&self.target, &u) > self.ceiling + 1e-12 {
            return;
        }
        for i in 0..remaining.len() {
            if remaining[i].1 == 0 {
                continue;
            }
            let a = remaining[i].0;
            let e = Edge { from: u, to: u * a };
            if !edges.insert(e) {
                continue;
            }
            remaining[i].1 -= 1;
            states.push(e.to);
            self.descend(remaining, left - 1, states, edges, paths, seen, explored);
            states.pop();
            remaining[i].1 += 1;
            edges.remove(&e);
        }
    }
}
