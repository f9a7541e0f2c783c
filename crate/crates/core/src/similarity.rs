//! Path-based similarity between color regions: all-pairs minimum-weight
//! paths over the HyAB-weighted network, mapped through 1/(1+l).

use crate::artifacts;
use crate::error::{Error, Result};
use crate::mapper::ColorNetwork;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

/// Dense symmetric region-similarity matrix with unit diagonal. Entries
/// lie in [0, 1]; disconnected pairs map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    pub n_c: usize,
    /// Row-major n_c x n_c entries.
    pub delta: Vec<f64>,
    /// Digest of the network this matrix was computed from.
    pub network_hash: String,
}

impl SimilarityMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.delta[i * self.n_c + j]
    }

    pub fn identity(n_c: usize) -> Self {
        let mut delta = vec![0.0; n_c * n_c];
        for i in 0..n_c {
            delta[i * n_c + i] = 1.0;
        }
        Self { n_c, delta, network_hash: String::new() }
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((self.n_c, self.n_c), &self.delta)
            .expect("delta length always matches n_c^2")
    }

    pub fn to_file(&self) -> artifacts::DeltaFile {
        artifacts::DeltaFile {
            version: artifacts::DELTA_FILE_VERSION,
            network_hash: self.network_hash.clone(),
            n_c: self.n_c,
            delta: self.delta.clone(),
        }
    }

    /// Load from file form, checking the binding against the network the
    /// caller actually holds.
    pub fn from_file(file: artifacts::DeltaFile, network: &ColorNetwork) -> Result<Self> {
        if file.version != artifacts::DELTA_FILE_VERSION {
            return Err(Error::ArtifactMismatch(format!(
                "similarity file version {} (expected {})",
                file.version,
                artifacts::DELTA_FILE_VERSION
            )));
        }
        if file.network_hash != network.hash() {
            return Err(Error::ArtifactMismatch(
                "similarity matrix was computed from a different network".into(),
            ));
        }
        if file.n_c != network.n_regions() || file.delta.len() != file.n_c * file.n_c {
            return Err(Error::ArtifactMismatch(
                "similarity matrix dimension does not match the network".into(),
            ));
        }
        Ok(Self { n_c: file.n_c, delta: file.delta, network_hash: file.network_hash })
    }
}

/// All-pairs minimum path weights by Floyd-Warshall. Edges are
/// undirected with nonnegative weights; unreachable pairs stay at
/// infinity and the diagonal is zero.
pub fn min_weight_paths(n: usize, edges: &[(u32, u32, f64)]) -> Vec<f64> {
    let mut l = vec![f64::INFINITY; n * n];
    for i in 0..n {
        l[i * n + i] = 0.0;
    }
    for &(a, b, w) in edges {
        let (a, b) = (a as usize, b as usize);
        if w < l[a * n + b] {
            l[a * n + b] = w;
            l[b * n + a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let lik = l[i * n + k];
            if lik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = lik + l[k * n + j];
                if via < l[i * n + j] {
                    l[i * n + j] = via;
                }
            }
        }
    }
    l
}

/// Map path weights to similarities 1/(1+l), sending infinity to 0.
pub fn similarity_from_paths(l: &[f64]) -> Vec<f64> {
    l.iter().map(|&w| if w.is_infinite() { 0.0 } else { 1.0 / (1.0 + w) }).collect()
}

/// Compute the similarity matrix of a finished color network.
pub fn from_network(network: &ColorNetwork) -> SimilarityMatrix {
    let edges: Vec<(u32, u32, f64)> =
        network.edges.iter().map(|e| (e.a, e.b, e.weight)).collect();
    let l = min_weight_paths(network.n_regions(), &edges);
    SimilarityMatrix {
        n_c: network.n_regions(),
        delta: similarity_from_paths(&l),
        network_hash: network.hash().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paths(n: usize, edges: &[(u32, u32, f64)]) -> Vec<f64> {
        min_weight_paths(n, edges)
    }

    #[test]
    fn path_graph_sums_weights() {
        let l = paths(3, &[(0, 1, 2.0), (1, 2, 3.0)]);
        assert_eq!(l[0 * 3 + 2], 5.0);
        assert_eq!(l[2 * 3 + 0], 5.0);
        assert_eq!(l[1 * 3 + 1], 0.0);
    }

    #[test]
    fn detour_beats_heavy_edge() {
        let l = paths(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 10.0)]);
        assert_eq!(l[0 * 3 + 2], 2.0);
    }

    #[test]
    fn disconnected_pairs_are_infinite_then_zero_similarity() {
        let l = paths(3, &[(0, 1, 1.0)]);
        assert!(l[0 * 3 + 2].is_infinite());
        let d = similarity_from_paths(&l);
        assert_eq!(d[0 * 3 + 2], 0.0);
        assert_eq!(d[0 * 3 + 0], 1.0);
        assert_eq!(d[0 * 3 + 1], 0.5);
    }

    #[test]
    fn direct_edge_bounds_similarity_from_below() {
        let edges = [(0u32, 1u32, 4.0), (1, 2, 1.0), (0, 2, 2.0)];
        let l = paths(3, &edges);
        for &(a, b, w) in &edges {
            let got = l[a as usize * 3 + b as usize];
            assert!(got <= w);
            let delta = 1.0 / (1.0 + got);
            assert!(delta >= 1.0 / (1.0 + w));
        }
    }

    fn random_edges(n: usize, seed: u64, p_num: u64) -> Vec<(u32, u32, f64)> {
        let mut state = seed.max(1);
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut edges = Vec::new();
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                if next() % 100 < p_num {
                    edges.push((a, b, (next() % 50) as f64));
                }
            }
        }
        edges
    }

    #[test]
    fn matrix_is_symmetric_with_unit_diagonal_and_bounded_entries() {
        for seed in 1..20 {
            let n = 9;
            let l = paths(n, &random_edges(n, seed, 30));
            let d = similarity_from_paths(&l);
            for i in 0..n {
                assert_eq!(d[i * n + i], 1.0);
                for j in 0..n {
                    assert_eq!(d[i * n + j].to_bits(), d[j * n + i].to_bits());
                    assert!((0.0..=1.0).contains(&d[i * n + j]));
                }
            }
        }
    }

    #[test]
    fn adding_an_edge_never_decreases_similarity() {
        for seed in 1..20 {
            let n = 8;
            let mut edges = random_edges(n, seed, 25);
            let before = similarity_from_paths(&paths(n, &edges));
            edges.push((0, (n - 1) as u32, 3.0));
            let after = similarity_from_paths(&paths(n, &edges));
            for (b, a) in before.iter().zip(&after) {
                assert!(a >= b);
            }
        }
    }

    proptest! {
        // Power-of-two factors scale every finite float exactly, so the
        // covariance property can be asserted without tolerance.
        #[test]
        fn scaling_weights_scales_paths_exactly(seed in 1u64..500, exp in -3i32..4) {
            let c = (2.0f64).powi(exp);
            let n = 7;
            let edges = random_edges(n, seed, 35);
            let scaled: Vec<(u32, u32, f64)> =
                edges.iter().map(|&(a, b, w)| (a, b, w * c)).collect();
            let l = paths(n, &edges);
            let ls = paths(n, &scaled);
            for (a, b) in l.iter().zip(&ls) {
                if a.is_infinite() {
                    prop_assert!(b.is_infinite());
                } else {
                    prop_assert_eq!(a * c, *b);
                }
            }
        }
    }
}
