//! Colored point clouds and the deterministic transforms that prepare
//! them for slicing: uniform scaling, PCA view normalization, rotation
//! about the y axis, the occlusion flip about z, and partitioning into
//! z slices and x strips.

pub mod ply;
pub mod segmentation;

use crate::colorspace::RgbColor;
use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColoredPoint {
    pub pos: [f64; 3],
    pub color: RgbColor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Raw,
    ViewNormalized,
    Aligned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoredCloud {
    pub points: Vec<ColoredPoint>,
    pub frame: Frame,
}

impl ColoredCloud {
    pub fn new(points: Vec<ColoredPoint>) -> Self {
        Self { points, frame: Frame::Raw }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// (min, max) corners of the axis-aligned bounding box.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let first = self.points.first()?;
        let mut lo = first.pos;
        let mut hi = first.pos;
        for p in &self.points {
            for k in 0..3 {
                lo[k] = lo[k].min(p.pos[k]);
                hi[k] = hi[k].max(p.pos[k]);
            }
        }
        Some((lo, hi))
    }
}

/// Multiply all coordinates by `sigma_s`, keeping colors and frame.
pub fn scale(cloud: &ColoredCloud, sigma_s: f64) -> Result<ColoredCloud> {
    if !(sigma_s > 0.0) {
        return Err(Error::Config("scale factor must be positive".into()));
    }
    Ok(ColoredCloud {
        points: cloud
            .points
            .iter()
            .map(|p| ColoredPoint {
                pos: [p.pos[0] * sigma_s, p.pos[1] * sigma_s, p.pos[2] * sigma_s],
                color: p.color,
            })
            .collect(),
        frame: cloud.frame,
    })
}

/// Reorient a cloud to its canonical frame: centroid at the origin and
/// principal axes along x, y, z in descending-eigenvalue order. The sign
/// of each axis is fixed so the coordinate skewness along it is
/// nonnegative; when the skewness is exactly zero the eigenvector is
/// oriented so its largest-magnitude component is positive.
pub fn view_normalize(cloud: &ColoredCloud) -> Result<ColoredCloud> {
    let n = cloud.len();
    if n < 3 {
        return Err(Error::DegenerateCloud("view normalization needs at least 3 points".into()));
    }
    let nf = n as f64;
    let mut centroid = Vector3::zeros();
    for p in &cloud.points {
        centroid += Vector3::new(p.pos[0], p.pos[1], p.pos[2]);
    }
    centroid /= nf;

    let mut cov = Matrix3::zeros();
    for p in &cloud.points {
        let d = Vector3::new(p.pos[0], p.pos[1], p.pos[2]) - centroid;
        cov += d * d.transpose();
    }
    cov /= nf;

    let eigen = cov.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let lambda_max = eigen.eigenvalues[order[0]].max(0.0);
    let lambda_mid = eigen.eigenvalues[order[1]].max(0.0);
    if lambda_max <= 0.0 || lambda_mid <= lambda_max * 1e-12 {
        return Err(Error::DegenerateCloud("covariance rank below 2".into()));
    }

    let centered: Vec<Vector3<f64>> = cloud
        .points
        .iter()
        .map(|p| Vector3::new(p.pos[0], p.pos[1], p.pos[2]) - centroid)
        .collect();

    let mut axes = [Vector3::zeros(); 3];
    for (k, &col) in order.iter().enumerate() {
        let mut axis: Vector3<f64> = eigen.eigenvectors.column(col).into();
        let skew: f64 = centered.iter().map(|d| d.dot(&axis).powi(3)).sum();
        if skew < 0.0 {
            axis = -axis;
        } else if skew == 0.0 {
            let dominant = (0..3).max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs())).unwrap();
            if axis[dominant] < 0.0 {
                axis = -axis;
            }
        }
        axes[k] = axis;
    }

    Ok(ColoredCloud {
        points: cloud
            .points
            .iter()
            .zip(&centered)
            .map(|(p, d)| ColoredPoint {
                pos: [axes[0].dot(d), axes[1].dot(d), axes[2].dot(d)],
                color: p.color,
            })
            .collect(),
        frame: Frame::ViewNormalized,
    })
}

/// Right-handed rotation by `alpha` about the y axis.
pub fn align(cloud: &ColoredCloud, alpha: f64) -> ColoredCloud {
    let (s, c) = alpha.sin_cos();
    ColoredCloud {
        points: cloud
            .points
            .iter()
            .map(|p| ColoredPoint {
                pos: [c * p.pos[0] + s * p.pos[2], p.pos[1], -s * p.pos[0] + c * p.pos[2]],
                color: p.color,
            })
            .collect(),
        frame: Frame::Aligned,
    }
}

/// Alignment angle that minimizes the bounding-box x extent, chosen from
/// {0, pi/2}. Rotating by pi/2 about y swaps the x and z extents.
pub fn choose_alpha(cloud: &ColoredCloud) -> f64 {
    match cloud.bounds() {
        Some((lo, hi)) if hi[2] - lo[2] < hi[0] - lo[0] => std::f64::consts::FRAC_PI_2,
        _ => 0.0,
    }
}

/// Rotation by pi about the z axis, moving the occluded end of an object
/// away from the leading strips. An involution; the frame is preserved.
pub fn flip_for_occlusion(cloud: &ColoredCloud) -> ColoredCloud {
    ColoredCloud {
        points: cloud
            .points
            .iter()
            .map(|p| ColoredPoint { pos: [-p.pos[0], -p.pos[1], p.pos[2]], color: p.color })
            .collect(),
        frame: cloud.frame,
    }
}

/// One x interval of a slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub points: Vec<ColoredPoint>,
}

/// One z interval of the cloud, flattened and partitioned into strips.
/// Interior slices with no points carry an empty strip list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub strips: Vec<Strip>,
}

impl Slice {
    pub fn points(&self) -> impl Iterator<Item = &ColoredPoint> {
        self.strips.iter().flat_map(|s| s.points.iter())
    }

    pub fn len(&self) -> usize {
        self.strips.iter().map(|s| s.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.strips.iter().all(|s| s.points.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicedCloud {
    pub slices: Vec<Slice>,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Bounding-box extent along z of the aligned cloud.
    pub h: f64,
    /// Bounding-box extent along x of the aligned cloud.
    pub w: f64,
}

impl SlicedCloud {
    pub fn n_points(&self) -> usize {
        self.slices.iter().map(|s| s.len()).sum()
    }

    pub fn max_strips(&self) -> usize {
        self.slices.iter().map(|s| s.strips.len()).max().unwrap_or(0)
    }
}

const MAX_BINS: usize = 1_000_000;

/// Partition an aligned cloud into slices along z and strips along x.
///
/// Slice i covers z in [z_min + i*sigma1, z_min + (i+1)*sigma1), with
/// indices running over [0, floor(h/sigma1)] so a point exactly at z_max
/// lands in the last slice. Every point's z is then flattened to
/// i*sigma1. Strips subdivide each slice the same way along x using the
/// slice's own x range.
pub fn slice_and_strip(cloud: &ColoredCloud, sigma1: f64, sigma2: f64) -> Result<SlicedCloud> {
    if !(sigma1 > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::Config("slice and strip widths must be positive".into()));
    }
    if cloud.is_empty() {
        return Err(Error::DegenerateCloud("cannot slice an empty cloud".into()));
    }
    let (lo, hi) = cloud.bounds().unwrap();
    let (z_min, h) = (lo[2], hi[2] - lo[2]);
    let n_slices = (h / sigma1).floor() as usize + 1;
    if n_slices > MAX_BINS {
        return Err(Error::Config(format!(
            "sigma1 = {sigma1} yields {n_slices} slices for extent {h}"
        )));
    }

    let mut slice_points: Vec<Vec<ColoredPoint>> = vec![Vec::new(); n_slices];
    for p in &cloud.points {
        let i = ((p.pos[2] - z_min) / sigma1).floor() as usize;
        slice_points[i].push(ColoredPoint {
            pos: [p.pos[0], p.pos[1], i as f64 * sigma1],
            color: p.color,
        });
    }

    let mut slices = Vec::with_capacity(n_slices);
    for points in slice_points {
        if points.is_empty() {
            slices.push(Slice { strips: Vec::new() });
            continue;
        }
        let x_min = points.iter().map(|p| p.pos[0]).fold(f64::INFINITY, f64::min);
        let x_max = points.iter().map(|p| p.pos[0]).fold(f64::NEG_INFINITY, f64::max);
        let w = x_max - x_min;
        let n_strips = (w / sigma2).floor() as usize + 1;
        if n_strips > MAX_BINS {
            return Err(Error::Config(format!(
                "sigma2 = {sigma2} yields {n_strips} strips for extent {w}"
            )));
        }
        let mut strips = vec![Strip { points: Vec::new() }; n_strips];
        for p in points {
            let j = ((p.pos[0] - x_min) / sigma2).floor() as usize;
            strips[j].points.push(p);
        }
        slices.push(Slice { strips });
    }

    Ok(SlicedCloud { slices, sigma1, sigma2, h, w: hi[0] - lo[0] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn cloud(points: &[[f64; 3]]) -> ColoredCloud {
        ColoredCloud::new(
            points
                .iter()
                .map(|&pos| ColoredPoint { pos, color: RgbColor::new(255, 0, 0) })
                .collect(),
        )
    }

    /// Deterministic box-shaped test cloud with distinct side lengths and
    /// nonzero skewness along every axis.
    fn skewed_box(extents: [f64; 3]) -> ColoredCloud {
        let mut points = Vec::new();
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut unit = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..400 {
            // Squaring skews each coordinate toward the low end.
            let u = unit().powi(2);
            let v = unit().powi(2);
            let w = unit().powi(2);
            points.push([u * extents[0], v * extents[1], w * extents[2]]);
        }
        cloud(&points)
    }

    #[test]
    fn scale_multiplies_extents() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        let s = scale(&c, 2.0).unwrap();
        let (lo, hi) = s.bounds().unwrap();
        assert_eq!(lo, [0.0, 0.0, 0.0]);
        assert_eq!(hi, [2.0, 2.0, 2.0]);
        assert!(scale(&c, 0.0).is_err());
        assert_eq!(scale(&c, 1.0).unwrap(), c);
    }

    #[test]
    fn view_normalize_sorts_extents_descending() {
        let c = skewed_box([1.0, 4.0, 2.0]);
        let n = view_normalize(&c).unwrap();
        let (lo, hi) = n.bounds().unwrap();
        let ext = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        assert!(ext[0] >= ext[1] && ext[1] >= ext[2]);
        // Centroid moves to the origin.
        let mean: f64 = n.points.iter().map(|p| p.pos[0] + p.pos[1] + p.pos[2]).sum();
        assert!((mean / n.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn view_normalize_is_idempotent() {
        let c = skewed_box([3.0, 1.0, 0.5]);
        let once = view_normalize(&c).unwrap();
        let twice = view_normalize(&once).unwrap();
        for (a, b) in once.points.iter().zip(&twice.points) {
            for k in 0..3 {
                assert!((a.pos[k] - b.pos[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn view_normalize_cancels_prior_rotation() {
        let c = skewed_box([3.0, 1.0, 0.5]);
        // An arbitrary fixed rotation: Rz(0.7) * Ry(-1.1).
        let (s1, c1) = (0.7f64).sin_cos();
        let (s2, c2) = (-1.1f64).sin_cos();
        let rotated = ColoredCloud::new(
            c.points
                .iter()
                .map(|p| {
                    let [x, y, z] = p.pos;
                    let (x1, z1) = (c2 * x + s2 * z, -s2 * x + c2 * z);
                    ColoredPoint {
                        pos: [c1 * x1 - s1 * y, s1 * x1 + c1 * y, z1],
                        color: p.color,
                    }
                })
                .collect(),
        );
        let a = view_normalize(&c).unwrap();
        let b = view_normalize(&rotated).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            for k in 0..3 {
                assert!((p.pos[k] - q.pos[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn view_normalize_rejects_degenerate_clouds() {
        let line = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]);
        assert!(matches!(view_normalize(&line), Err(Error::DegenerateCloud(_))));
        let pair = cloud(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]]);
        assert!(view_normalize(&pair).is_err());
    }

    #[test]
    fn align_rotates_about_y() {
        let c = cloud(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]);
        let r = align(&c, FRAC_PI_2);
        assert!((r.points[0].pos[0]).abs() < 1e-12);
        assert!((r.points[0].pos[2] + 1.0).abs() < 1e-12);
        assert_eq!(r.points[1].pos[1], 2.0);

        let full = align(&c, 2.0 * PI);
        for (a, b) in full.points.iter().zip(&c.points) {
            for k in 0..3 {
                assert!((a.pos[k] - b.pos[k]).abs() < 1e-9);
            }
        }
        assert_eq!(align(&c, 0.0).points, c.points);
    }

    #[test]
    fn choose_alpha_minimizes_x_extent() {
        let wide = cloud(&[[0.0, 0.0, 0.0], [4.0, 0.0, 0.0], [0.0, 1.0, 1.0]]);
        assert_eq!(choose_alpha(&wide), FRAC_PI_2);
        let deep = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 4.0]]);
        assert_eq!(choose_alpha(&deep), 0.0);
    }

    #[test]
    fn flip_negates_x_and_y() {
        let c = cloud(&[[1.0, 2.0, 3.0]]);
        let f = flip_for_occlusion(&c);
        assert_eq!(f.points[0].pos, [-1.0, -2.0, 3.0]);
        assert_eq!(flip_for_occlusion(&f).points, c.points);
    }

    #[test]
    fn slicing_flattens_z_to_slice_offsets() {
        let c = cloud(&[[0.0, 0.0, 0.1], [0.0, 0.0, 1.1]]);
        let s = slice_and_strip(&c, 1.0, 1.0).unwrap();
        assert_eq!(s.slices.len(), 2);
        assert_eq!(s.slices[0].strips[0].points[0].pos[2], 0.0);
        assert_eq!(s.slices[1].strips[0].points[0].pos[2], 1.0);
    }

    #[test]
    fn single_interval_clouds_get_one_slice() {
        let c = cloud(&[[0.0, 0.0, 0.2], [0.5, 0.0, 0.4], [0.9, 0.0, 0.3]]);
        let s = slice_and_strip(&c, 1.0, 10.0).unwrap();
        assert_eq!(s.slices.len(), 1);
        assert_eq!(s.slices[0].strips.len(), 1);
        assert_eq!(s.n_points(), 3);
    }

    #[test]
    fn grid_cube_slices_match_direct_binning() {
        // 10x10x10 grid of cell centers, side 10, slicing at one fifth of
        // the side: five slices of five strips, 40 points each.
        let mut pts = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                for k in 0..10 {
                    pts.push([i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5]);
                }
            }
        }
        let c = cloud(&pts);
        let s = slice_and_strip(&c, 2.0, 2.0).unwrap();
        assert_eq!(s.slices.len(), 5);
        for slice in &s.slices {
            assert_eq!(slice.strips.len(), 5);
            for strip in &slice.strips {
                assert_eq!(strip.points.len(), 40);
            }
        }

        // Direct binning oracle over the raw coordinates.
        for (i, slice) in s.slices.iter().enumerate() {
            for (j, strip) in slice.strips.iter().enumerate() {
                let expected = pts
                    .iter()
                    .filter(|p| {
                        ((p[2] - 0.5) / 2.0).floor() as usize == i
                            && ((p[0] - 0.5) / 2.0).floor() as usize == j
                    })
                    .count();
                assert_eq!(strip.points.len(), expected);
            }
        }
    }

    #[test]
    fn slicing_partitions_every_point() {
        let c = skewed_box([2.0, 1.0, 1.5]);
        let s = slice_and_strip(&c, 0.3, 0.25).unwrap();
        assert_eq!(s.n_points(), c.len());
    }

    #[test]
    fn interior_gaps_keep_their_slice_indices() {
        let c = cloud(&[[0.0, 0.0, 0.0], [0.0, 0.0, 0.1], [0.0, 0.0, 2.6]]);
        let s = slice_and_strip(&c, 1.0, 1.0).unwrap();
        assert_eq!(s.slices.len(), 3);
        assert!(s.slices[1].is_empty());
        assert_eq!(s.slices[2].strips[0].points[0].pos[2], 2.0);
    }

    #[test]
    fn truncation_preserves_leading_slices_bitwise() {
        let c = skewed_box([1.0, 0.8, 2.4]);
        let full = slice_and_strip(&c, 0.25, 0.2).unwrap();
        // Cut in the middle of slice 5: slices 0..5 must be untouched.
        let (lo, _) = c.bounds().unwrap();
        let z_cut = lo[2] + 5.5 * 0.25;
        let truncated = ColoredCloud::new(
            c.points.iter().copied().filter(|p| p.pos[2] <= z_cut).collect(),
        );
        let partial = slice_and_strip(&truncated, 0.25, 0.2).unwrap();
        let keep = 5;
        assert!(partial.slices.len() >= keep);
        for i in 0..keep {
            assert_eq!(full.slices[i], partial.slices[i]);
        }
    }

    #[test]
    fn slicing_rejects_bad_input() {
        let c = cloud(&[[0.0, 0.0, 0.0]]);
        assert!(slice_and_strip(&c, 0.0, 1.0).is_err());
        assert!(slice_and_strip(&c, 1.0, -1.0).is_err());
        let empty = ColoredCloud::new(Vec::new());
        assert!(slice_and_strip(&empty, 1.0, 1.0).is_err());
    }
}
