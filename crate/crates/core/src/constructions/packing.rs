use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{self, streams};

/// Nonnegative vectors of norm `1/sqrt(n)` with pairwise dot products at
/// most `1/n - 1/q`.
///
/// On that sphere `v.w = 1/n - |v - w|^2 / 2`, so the dot bound is the same
/// as keeping the tips at distance at least `sqrt(2/q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PackedVectorSet {
    pub n: usize,
    pub q: f64,
    pub vectors: Vec<Vec<f64>>,
}

impl PackedVectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dot_bound(&self) -> f64 {
        1.0 / self.n as f64 - 1.0 / self.q
    }

    /// Largest pairwise dot product (`-inf` for fewer than two vectors).
    pub fn max_pairwise_dot(&self) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (i, v) in self.vectors.iter().enumerate() {
            for w in &self.vectors[i + 1..] {
                best = best.max(dot(v, w));
            }
        }
        best
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy packing over `candidate_budget` random directions in the positive orthant.
///
/// A candidate is kept iff its dot product with every kept vector is at most
/// `1/n - 1/q`. Deterministic in `seed`.
pub fn pack_vectors(n: usize, q: f64, candidate_budget: usize, seed: u64) -> Result<PackedVectorSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if !(q >= 2.0 * n as f64) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("q = {q} must be at least 2n = {}", 2 * n)));
    }
    if candidate_budget == 0 {
        return Err(Error::InvalidParameter("candidate budget must be positive".into()));
    }
    let radius = 1.0 / (n as f64).sqrt();
    let bound = 1.0 / n as f64 - 1.0 / q;
    let mut rng = rng::stream(seed, streams::PACKING);
    let mut kept: Vec<f64> = Vec::new();
    let mut candidate = vec![0.0; n];
    for _ in 0..candidate_budget {
        for c in candidate.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c = z.abs();
        }
        let norm = candidate.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        candidate.iter_mut().for_each(|c| *c *= radius / norm);
        if kept.chunks_exact(n).all(|w| dot(w, &candidate) <= bound) {
            kept.extend_from_slice(&candidate);
        }
    }
    Ok(PackedVectorSet { n, q, vectors: kept.chunks_exact(n).map(<[f64]>::to_vec).collect() })
}
