//! Density-based clustering over an arbitrary distance function.
//!
//! Classic DBSCAN with neighborhood queries done by linear scan. The
//! caller supplies a point count and a symmetric distance closure over
//! indices, so any metric works. The radius test is inclusive (d <= eps)
//! and `min_pts` counts the query point itself. Points are visited in
//! index order and clusters grown breadth-first, so output labels are
//! fully determined by the input order.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assignment {
    Noise,
    Cluster(usize),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Label {
    Unvisited,
    Noise,
    Cluster(usize),
}

/// Cluster `n` points with DBSCAN. Returns one assignment per point and
/// cluster ids are contiguous from 0 in order of discovery.
pub fn dbscan<D>(n: usize, dist: D, eps: f64, min_pts: usize) -> Vec<Assignment>
where
    D: Fn(usize, usize) -> f64,
{
    let query = |p: usize| -> Vec<usize> {
        (0..n).filter(|&q| dist(p, q) <= eps).collect()
    };

    let mut labels = vec![Label::Unvisited; n];
    let mut next_cluster = 0;

    for p in 0..n {
        if labels[p] != Label::Unvisited {
            continue;
        }
        let neighbors = query(p);
        if neighbors.len() < min_pts {
            labels[p] = Label::Noise;
            continue;
        }

        let cid = next_cluster;
        next_cluster += 1;
        labels[p] = Label::Cluster(cid);

        let mut queue: VecDeque<usize> = neighbors.into();
        while let Some(q) = queue.pop_front() {
            match labels[q] {
                Label::Cluster(_) => {}
                // A former noise point inside a core neighborhood becomes
                // a border point of this cluster; it never expands further.
                Label::Noise => labels[q] = Label::Cluster(cid),
                Label::Unvisited => {
                    labels[q] = Label::Cluster(cid);
                    let q_neighbors = query(q);
                    if q_neighbors.len() >= min_pts {
                        queue.extend(
                            q_neighbors
                                .into_iter()
                                .filter(|&r| labels[r] == Label::Unvisited || labels[r] == Label::Noise),
                        );
                    }
                }
            }
        }
    }

    labels
        .into_iter()
        .map(|l| match l {
            Label::Noise => Assignment::Noise,
            Label::Cluster(c) => Assignment::Cluster(c),
            Label::Unvisited => unreachable!("every point is visited"),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster_1d(values: &[f64], eps: f64, min_pts: usize) -> Vec<Assignment> {
        dbscan(values.len(), |i, j| (values[i] - values[j]).abs(), eps, min_pts)
    }

    #[test]
    fn separates_two_blobs() {
        let values = [0.0, 0.1, 0.2, 0.3, 10.0, 10.1, 10.2, 10.3];
        let labels = cluster_1d(&values, 0.5, 3);
        assert!(labels[..4].iter().all(|&l| l == Assignment::Cluster(0)));
        assert!(labels[4..].iter().all(|&l| l == Assignment::Cluster(1)));
    }

    #[test]
    fn min_pts_one_clusters_everything() {
        let values = [0.0, 100.0, 200.0];
        let labels = cluster_1d(&values, f64::INFINITY, 1);
        assert!(labels.iter().all(|&l| l == Assignment::Cluster(0)));
    }

    #[test]
    fn sparse_points_are_noise() {
        let values = [0.0, 0.1, 0.2, 0.3, 50.0];
        let labels = cluster_1d(&values, 0.5, 3);
        assert_eq!(labels[4], Assignment::Noise);
    }

    #[test]
    fn radius_test_is_inclusive_and_counts_self() {
        // Exactly eps apart and min_pts=2 including self: one chain cluster.
        let values = [0.0, 1.0, 2.0];
        let labels = cluster_1d(&values, 1.0, 2);
        assert!(labels.iter().all(|&l| l == Assignment::Cluster(0)));
    }

    #[test]
    fn density_chain_links_into_one_cluster() {
        let values: Vec<f64> = (0..20).map(|i| i as f64 * 0.4).collect();
        let labels = cluster_1d(&values, 0.5, 2);
        assert!(labels.iter().all(|&l| l == Assignment::Cluster(0)));
    }

    #[test]
    fn output_is_deterministic() {
        let values: Vec<f64> = (0..50).map(|i| ((i * 7919) % 100) as f64).collect();
        let a = cluster_1d(&values, 3.0, 4);
        let b = cluster_1d(&values, 3.0, 4);
        assert_eq!(a, b);
    }
}
