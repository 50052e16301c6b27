use num_rational::Ratio;
use serde::Serialize;

use super::{EdgeIndex, FlowError};

/// Maximum of `l′(a − ln(m)/β)` over `1 ≤ l′ ≤ l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerBound {
    #[serde(rename = "F")]
    pub f: f64,
    pub argmax: usize,
}

/// Free-energy bound of the layered flow model in which crossing `l′`
/// layers costs `a·l′` and each layer offers `m` interchangeable strings.
/// Ties resolve to the smallest `l′`.
pub fn layer_flow_bound(a: f64, m: u64, l: usize, beta: f64) -> Result<LayerBound, FlowError> {
    if !(a.is_finite() && a >= 0.0) {
        return Err(FlowError::InvalidLayerParameter(format!(
            "a must be finite and >= 0, got {a}"
        )));
    }
    if m == 0 || l == 0 {
        return Err(FlowError::InvalidLayerParameter("m and l must be at least 1".into()));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(FlowError::InvalidBeta(beta));
    }
    let slope = a - (m as f64).ln() / beta;
    let mut best = LayerBound { f: slope, argmax: 1 };
    for lp in 2..=l {
        let v = lp as f64 * slope;
        if v > best.f {
            best = LayerBound { f: v, argmax: lp };
        }
    }
    Ok(best)
}

/// Formal edge of the layer model: crossing layer `layer` after choosing
/// strings `prefix[0..layer]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LayerEdge {
    pub layer: usize,
    pub prefix: Vec<u32>,
}

/// All `m^l` string choices of the layer model as formal paths.
#[derive(Debug, Clone)]
pub struct SyntheticLayerFlow {
    m: u32,
    l: usize,
    index: EdgeIndex<LayerEdge>,
}

/// Enumerates the `m^l` index tuples; fails when `m^l > cap`.
pub fn synthetic_layer_flow(m: u32, l: usize, cap: u64) -> Result<SyntheticLayerFlow, FlowError> {
    if m == 0 || l == 0 {
        return Err(FlowError::InvalidLayerParameter("m and l must be at least 1".into()));
    }
    let total = (m as u128).checked_pow(l as u32).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(FlowError::CapExceeded {
            what: "m^l",
            value: total,
            cap: cap as u128,
        });
    }
    let paths = (0..total as u64).map(|mut k| {
        let mut digits = vec![0u32; l];
        for d in digits.iter_mut().rev() {
            *d = (k % m as u64) as u32;
            k /= m as u64;
        }
        (1..=l)
            .map(|layer| LayerEdge {
                layer,
                prefix: digits[..layer].to_vec(),
            })
            .collect::<Vec<_>>()
    });
    Ok(SyntheticLayerFlow {
        m,
        l,
        index: EdgeIndex::build(paths),
    })
}

impl SyntheticLayerFlow {
    pub fn num_paths(&self) -> u64 {
        self.index.total()
    }

    pub fn strings_per_layer(&self) -> u32 {
        self.m
    }

    pub fn layers(&self) -> usize {
        self.l
    }

    pub fn index(&self) -> &EdgeIndex<LayerEdge> {
        &self.index
    }

    pub fn omega(&self, e: &LayerEdge) -> Option<Ratio<u64>> {
        self.index.omega(e)
    }

    /// Common `Ω` of each layer, or `None` for a layer whose edges disagree.
    pub fn omega_by_layer(&self) -> Vec<Option<Ratio<u64>>> {
        let mut out: Vec<Option<Option<Ratio<u64>>>> = vec![None; self.l];
        for (e, _) in self.index.iter() {
            let w = self.index.omega(e).expect("indexed edge");
            let slot = &mut out[e.layer - 1];
            *slot = match *slot {
                None => Some(Some(w)),
                Some(Some(v)) if v == w => Some(Some(v)),
                _ => Some(None),
            };
        }
        out.into_iter().map(|s| s.flatten()).collect()
    }

    /// `max_e [a·layer(e) − ln Ω(e)/β]`, the flow's free energy when
    /// crossing into layer `l′` costs `a·l′`.
    pub fn free_energy(&self, a: f64, beta: f64) -> f64 {
        self.index
            .iter()
            .map(|(e, _)| {
                let w = self.index.omega(e).expect("indexed edge");
                let ln = (*w.numer() as f64).ln() - (*w.denom() as f64).ln();
                a * e.layer as f64 - ln / beta
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
