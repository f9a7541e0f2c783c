//! 0-dimensional persistence of single-linkage merging over a slice's
//! (x, y) points, rendered as a persistence image.
//!
//! All births are at 0, so each feature is determined by its death: the
//! n-1 component-merge distances plus one essential feature whose death
//! is set to the slice diameter. The merge distances equal the minimum
//! spanning tree edge weights of the complete pairwise-distance graph.

use serde::{Deserialize, Serialize};

/// Gaussian rendering parameters for the image grid. The grid covers
/// [0, range] on both the birth and persistence axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiParams {
    pub range: f64,
    pub sigma: f64,
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt()
}

/// Deaths of the 0-dimensional diagram: merge distances in ascending
/// order followed by the essential feature's death (the diameter). An
/// empty point set has no components and yields an empty diagram.
pub fn slice_diagram(points: &[(f64, f64)]) -> Vec<f64> {
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }

    // Prim's algorithm over the complete graph.
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = dist(points[0], points[j]);
    }
    let mut merges = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && best[j] < next_d {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        merges.push(next_d);
        for j in 0..n {
            if !in_tree[j] {
                let d = dist(points[next], points[j]);
                if d < best[j] {
                    best[j] = d;
                }
            }
        }
    }
    merges.sort_by(f64::total_cmp);

    let mut diameter = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            diameter = diameter.max(dist(points[i], points[j]));
        }
    }
    merges.push(diameter);
    merges
}

/// Render a diagram to a p x p grid, row-major with the persistence axis
/// as rows. Each feature (birth 0, persistence d) adds a Gaussian of
/// spread sigma weighted linearly by its persistence, evaluated at pixel
/// centers.
pub fn persistence_image(deaths: &[f64], p: usize, params: PiParams) -> Vec<f64> {
    let mut grid = vec![0.0f64; p * p];
    if p == 0 {
        return grid;
    }
    let step = params.range / p as f64;
    let two_sigma_sq = 2.0 * params.sigma * params.sigma;
    for &d in deaths {
        if d == 0.0 {
            continue;
        }
        for iy in 0..p {
            let cy = (iy as f64 + 0.5) * step;
            for ix in 0..p {
                let cx = (ix as f64 + 0.5) * step;
                let sq = cx * cx + (cy - d) * (cy - d);
                grid[iy * p + ix] += d * (-sq / two_sigma_sq).exp();
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    const PARAMS: PiParams = PiParams { range: 1.0, sigma: 0.1 };

    /// Naive agglomerative single-linkage: repeatedly merge the pair of
    /// clusters at minimum cross distance, recording the heights.
    fn dendrogram_heights(points: &[(f64, f64)]) -> Vec<f64> {
        let mut clusters: Vec<Vec<usize>> = (0..points.len()).map(|i| vec![i]).collect();
        let mut heights = Vec::new();
        while clusters.len() > 1 {
            let mut best = (0, 1, f64::INFINITY);
            for a in 0..clusters.len() {
                for b in (a + 1)..clusters.len() {
                    let d = clusters[a]
                        .iter()
                        .flat_map(|&i| clusters[b].iter().map(move |&j| dist(points[i], points[j])))
                        .fold(f64::INFINITY, f64::min);
                    if d < best.2 {
                        best = (a, b, d);
                    }
                }
            }
            heights.push(best.2);
            let merged = clusters.remove(best.1);
            clusters[best.0].extend(merged);
        }
        heights.sort_by(f64::total_cmp);
        heights
    }

    fn pseudo_points(n: usize, mut state: u64) -> Vec<(f64, f64)> {
        let mut unit = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n).map(|_| (unit(), unit())).collect()
    }

    #[test]
    fn empty_and_single_point_give_zero_images() {
        assert_eq!(slice_diagram(&[]), Vec::<f64>::new());
        let one = slice_diagram(&[(0.3, 0.4)]);
        assert_eq!(one, vec![0.0]);
        assert!(persistence_image(&one, 8, PARAMS).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_points_merge_at_their_distance() {
        let d = slice_diagram(&[(0.0, 0.0), (3.0, 4.0)]);
        assert_eq!(d, vec![5.0, 5.0]);
    }

    #[test]
    fn image_mass_grows_with_separation() {
        let masses: Vec<f64> = [0.2, 0.4, 0.6]
            .iter()
            .map(|&d| {
                let diag = slice_diagram(&[(0.0, 0.0), (d, 0.0)]);
                persistence_image(&diag, 8, PARAMS).iter().sum()
            })
            .collect();
        assert!(masses[0] < masses[1] && masses[1] < masses[2]);
    }

    #[test]
    fn merges_match_dendrogram_oracle() {
        for seed in 1..=20u64 {
            let pts = pseudo_points(10, seed.wrapping_mul(0x9E3779B97F4A7C15));
            let diagram = slice_diagram(&pts);
            let merges = &diagram[..diagram.len() - 1];
            let oracle = dendrogram_heights(&pts);
            assert_eq!(merges, oracle.as_slice(), "seed {seed}");
        }
    }

    #[test]
    fn essential_death_is_the_diameter() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0), (5.0, 0.0)];
        let diagram = slice_diagram(&pts);
        let expect: f64 = dist((0.0, 2.0), (5.0, 0.0));
        assert_eq!(*diagram.last().unwrap(), expect);
    }

    #[test]
    fn collinear_ties_match_oracle() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.0)).collect();
        let diagram = slice_diagram(&pts);
        assert_eq!(&diagram[..5], &[1.0; 5]);
        assert_eq!(diagram[5], 5.0);
        assert_eq!(&diagram[..5], dendrogram_heights(&pts).as_slice());
    }

    #[test]
    fn image_layout_is_persistence_major() {
        // A single feature at persistence 0.5 peaks in the row whose
        // center is nearest 0.5 and the column nearest birth 0.
        let img = persistence_image(&[0.5], 8, PARAMS);
        let (mut arg, mut max) = (0, f64::NEG_INFINITY);
        for (i, &v) in img.iter().enumerate() {
            if v > max {
                max = v;
                arg = i;
            }
        }
        assert_eq!(arg % 8, 0);
        let row = arg / 8;
        assert!(row == 3 || row == 4, "row {row}");
    }

    #[test]
    fn image_entries_are_nonnegative() {
        let pts = pseudo_points(30, 7);
        let diagram = slice_diagram(&pts);
        let img = persistence_image(&diagram, 8, PARAMS);
        assert_eq!(img.len(), 64);
        assert!(img.iter().all(|&v| v >= 0.0));
    }
}
