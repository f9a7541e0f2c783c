//! Per-slice shape and color descriptors.
//!
//! Each slice yields a vectorized persistence image (shape) and a color
//! embedding built from per-strip color vectors and the region
//! similarity matrix. TOPS concatenates the shape segments; TOPS2
//! concatenates [shape | color] blocks. Both are zero-padded to a fixed
//! slice count so every object under one configuration has the same
//! descriptor length.

pub mod persistence;

pub use persistence::{persistence_image, slice_diagram, PiParams};

use crate::colorspace::{srgb_to_lab, RgbColor};
use crate::error::{Error, Result};
use crate::geometry::{Slice, SlicedCloud, Strip};
use crate::mapper::ColorNetwork;
use crate::similarity::SimilarityMatrix;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Fixed dimensions a descriptor is built against. Train and test must
/// share one layout; lengths are derived, never stored separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorLayout {
    /// Region count of the color network.
    pub n_c: usize,
    /// Persistence image side length.
    pub p: usize,
    /// Strip capacity per slice.
    pub n_s_max: usize,
    /// Slice capacity per object.
    pub n_slices_max: usize,
}

impl DescriptorLayout {
    pub fn pi_len(&self) -> usize {
        self.p * self.p
    }

    pub fn embed_len(&self) -> usize {
        self.n_c * self.n_s_max
    }

    pub fn block_len(&self) -> usize {
        self.pi_len() + self.embed_len()
    }

    pub fn tops_len(&self) -> usize {
        self.n_slices_max * self.pi_len()
    }

    pub fn tops2_len(&self) -> usize {
        self.n_slices_max * self.block_len()
    }
}

/// Memoized color-to-regions lookup. Region membership of a color is the
/// membership of its nearest network sample under HyAB, so distinct
/// points sharing a color resolve once.
#[derive(Debug, Clone)]
pub struct MembershipTable {
    map: BTreeMap<RgbColor, Vec<u32>>,
    n_c: usize,
}

impl MembershipTable {
    /// Resolve every color in `colors` against the network.
    pub fn build(network: &ColorNetwork, colors: impl IntoIterator<Item = RgbColor>) -> Self {
        let mut map = BTreeMap::new();
        for color in colors {
            map.entry(color).or_insert_with(|| {
                let sample = network.nearest_sample(srgb_to_lab(color));
                network.regions_of_sample(sample).to_vec()
            });
        }
        Self { map, n_c: network.n_regions() }
    }

    /// Table with explicit memberships, for callers that already know
    /// them (and for tests exercising exact arithmetic).
    pub fn from_map(map: BTreeMap<RgbColor, Vec<u32>>, n_c: usize) -> Self {
        Self { map, n_c }
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    /// Region ids for a color; empty when the color resolved to noise or
    /// was never registered.
    pub fn regions_of(&self, color: RgbColor) -> &[u32] {
        self.map.get(&color).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Per-strip color vector: each point with membership set M contributes
/// 1/|M| to every entry in M; membership-less points contribute nothing.
pub fn color_vector(strip: &Strip, table: &MembershipTable) -> Vec<f64> {
    let mut phi = vec![0.0f64; table.n_c()];
    for point in &strip.points {
        let members = table.regions_of(point.color);
        if members.is_empty() {
            continue;
        }
        let share = 1.0 / members.len() as f64;
        for &region in members {
            phi[region as usize] += share;
        }
    }
    phi
}

/// Stack a slice's strip vectors into an n_s_max x n_c matrix, zero rows
/// padding past the actual strip count.
pub fn color_matrix(slice: &Slice, table: &MembershipTable, n_s_max: usize) -> Result<Array2<f64>> {
    let n_s = slice.strips.len();
    if n_s > n_s_max {
        return Err(Error::ShapeMismatch(format!(
            "strip overflow: slice has {n_s} strips, capacity is {n_s_max}"
        )));
    }
    let mut rows = Array2::zeros((n_s_max, table.n_c()));
    for (j, strip) in slice.strips.iter().enumerate() {
        let phi = color_vector(strip, table);
        for (lambda, &v) in phi.iter().enumerate() {
            rows[(j, lambda)] = v;
        }
    }
    Ok(rows)
}

/// Color embedding (C * Delta) transposed: n_c x n_s_max.
pub fn embed(cmatrix: &Array2<f64>, delta: &SimilarityMatrix) -> Result<Array2<f64>> {
    if cmatrix.ncols() != delta.n_c {
        return Err(Error::ShapeMismatch(format!(
            "embedding dimension mismatch: color matrix has {} columns, similarity matrix is {}x{}",
            cmatrix.ncols(),
            delta.n_c,
            delta.n_c
        )));
    }
    Ok(cmatrix.dot(&delta.view()).reversed_axes())
}

/// Shape-only and shape+color descriptors of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptors {
    pub tops: Vec<f64>,
    pub tops2: Vec<f64>,
}

/// Assemble both descriptors over the slices in index order. Each TOPS2
/// block is the vectorized persistence image followed by the embedding's
/// rows; missing trailing slices become zero blocks.
pub fn descriptors(
    sliced: &SlicedCloud,
    table: &MembershipTable,
    delta: &SimilarityMatrix,
    layout: &DescriptorLayout,
    pi: PiParams,
) -> Result<Descriptors> {
    let n_slices = sliced.slices.len();
    if n_slices > layout.n_slices_max {
        return Err(Error::ShapeMismatch(format!(
            "slice overflow: object has {n_slices} slices, capacity is {}",
            layout.n_slices_max
        )));
    }
    if table.n_c() != layout.n_c {
        return Err(Error::ShapeMismatch(format!(
            "membership table covers {} regions, layout expects {}",
            table.n_c(),
            layout.n_c
        )));
    }

    let mut tops = Vec::with_capacity(layout.tops_len());
    let mut tops2 = Vec::with_capacity(layout.tops2_len());
    for slice in &sliced.slices {
        let planar: Vec<(f64, f64)> =
            slice.points().map(|p| (p.pos[0], p.pos[1])).collect();
        let image = persistence_image(&slice_diagram(&planar), layout.p, pi);
        let embedding = embed(&color_matrix(slice, table, layout.n_s_max)?, delta)?;

        tops.extend_from_slice(&image);
        tops2.extend_from_slice(&image);
        tops2.extend(embedding.iter().copied());
    }
    tops.resize(layout.tops_len(), 0.0);
    tops2.resize(layout.tops2_len(), 0.0);
    Ok(Descriptors { tops, tops2 })
}
