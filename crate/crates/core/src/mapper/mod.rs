//! Construction of the color network: sample the sRGB cube, project the
//! samples through the chroma/hue lens, cover the lens image with
//! overlapping rectangular cells, cluster each cell's preimage with
//! DBSCAN under HyAB, and connect clusters that share samples. The hue
//! seam is closed with flagged cyclic edges and vertices whose member
//! sets are contained in another vertex are eliminated.

pub mod dbscan;

use crate::artifacts;
use crate::colorspace::{hyab, lens, srgb_to_lab, LabColor, LensPoint, RgbColor};
use crate::config::MapperConfig;
use crate::error::{Error, Result};
use dbscan::Assignment;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Provenance of a network's sample set. Grid networks regenerate their
/// samples from the stride on load; explicit networks carry the colors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SampleSource {
    Grid { stride: u32 },
    Explicit { colors: Vec<RgbColor> },
}

/// Overlapping interval cover of the lens image, one interval list per
/// lens dimension. Intervals are closed on both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    pub chroma_intervals: Vec<(f64, f64)>,
    pub hue_intervals: Vec<(f64, f64)>,
}

impl Cover {
    pub fn n_cells(&self) -> usize {
        self.chroma_intervals.len() * self.hue_intervals.len()
    }

    /// Indices of the lens points falling inside cell (ci, hi), ascending.
    pub fn cell_preimage(&self, lens_points: &[LensPoint], ci: usize, hi: usize) -> Vec<u32> {
        let (c_lo, c_hi) = self.chroma_intervals[ci];
        let (h_lo, h_hi) = self.hue_intervals[hi];
        lens_points
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                p.chroma >= c_lo && p.chroma <= c_hi && p.hue_shifted >= h_lo && p.hue_shifted <= h_hi
            })
            .map(|(i, _)| i as u32)
            .collect()
    }
}

/// One Mapper cluster: a set of sample indices from a single cover cell,
/// with the arithmetic CIELAB mean of its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorRegion {
    pub id: u32,
    /// Sorted indices into the network's sample list.
    pub members: Vec<u32>,
    pub mean_color: LabColor,
    pub chroma_idx: u32,
    pub hue_idx: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkEdge {
    /// Region ids with a < b.
    pub a: u32,
    pub b: u32,
    /// HyAB distance between the two regions' mean colors.
    pub weight: f64,
    /// True for hue-seam closure edges added without member overlap.
    pub cyclic: bool,
}

/// The finished color network plus the sample grid it was built from.
#[derive(Debug, Clone)]
pub struct ColorNetwork {
    pub regions: Vec<ColorRegion>,
    pub edges: Vec<NetworkEdge>,
    pub config: MapperConfig,
    pub source: SampleSource,
    /// Digest of the mapper configuration and sample source.
    pub config_hash: String,
    samples: Vec<(RgbColor, LabColor)>,
    /// sample index -> sorted ids of regions containing it.
    region_index: Vec<Vec<u32>>,
    /// Digest of the canonical serialized form; binds downstream artifacts.
    hash: String,
}

impl ColorNetwork {
    pub fn n_regions(&self) -> usize {
        self.regions.len()
    }

    pub fn samples(&self) -> &[(RgbColor, LabColor)] {
        &self.samples
    }

    pub fn cyclic_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.cyclic).count()
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Index of the sample nearest to `lab` in HyAB; ties go to the
    /// lowest sample index.
    pub fn nearest_sample(&self, lab: LabColor) -> u32 {
        let mut best = 0u32;
        let mut best_d = f64::INFINITY;
        for (i, &(_, s)) in self.samples.iter().enumerate() {
            let d = hyab(lab, s);
            if d < best_d {
                best_d = d;
                best = i as u32;
            }
        }
        best
    }

    pub fn regions_of_sample(&self, sample: u32) -> &[u32] {
        &self.region_index[sample as usize]
    }

    /// Region ids of the sample nearest to `c`. Empty only when that
    /// sample was clustering noise.
    pub fn membership_of(&self, c: RgbColor) -> &[u32] {
        let nearest = self.nearest_sample(srgb_to_lab(c));
        self.regions_of_sample(nearest)
    }

    pub fn to_file(&self) -> artifacts::NetworkFile {
        artifacts::NetworkFile {
            version: artifacts::NETWORK_FILE_VERSION,
            config: self.config.clone(),
            source: self.source.clone(),
            config_hash: self.config_hash.clone(),
            regions: self.regions.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn from_file(file: artifacts::NetworkFile) -> Result<Self> {
        if file.version != artifacts::NETWORK_FILE_VERSION {
            return Err(Error::ArtifactMismatch(format!(
                "network file version {} (expected {})",
                file.version,
                artifacts::NETWORK_FILE_VERSION
            )));
        }
        file.config.validate()?;
        let expected = config_digest(&file.config, &file.source)?;
        if expected != file.config_hash {
            return Err(Error::ArtifactMismatch(
                "network config_hash does not match its parameters".into(),
            ));
        }
        let samples = resolve_samples(&file.source)?;
        for r in &file.regions {
            if r.members.is_empty() {
                return Err(Error::ArtifactMismatch(format!("region {} has no members", r.id)));
            }
            if r.members.iter().any(|&m| m as usize >= samples.len()) {
                return Err(Error::ArtifactMismatch(format!(
                    "region {} references a sample outside the grid",
                    r.id
                )));
            }
        }
        let region_index = invert_members(&file.regions, samples.len());
        let hash = artifacts::hash_json(&file)?;
        Ok(Self {
            regions: file.regions,
            edges: file.edges,
            config: file.config,
            source: file.source,
            config_hash: file.config_hash,
            samples,
            region_index,
            hash,
        })
    }
}

/// Regular grid over the 8-bit sRGB cube paired with CIELAB images.
/// Axis values are multiples of `stride` plus the 255 endpoint, so
/// stride 8 yields 33^3 samples.
pub fn sample_srgb_cube(stride: u32) -> Result<Vec<(RgbColor, LabColor)>> {
    if stride == 0 || stride > 256 {
        return Err(Error::Config("sample stride must be in 1..=256".into()));
    }
    let mut axis: Vec<u8> = (0..256u32).step_by(stride as usize).map(|v| v as u8).collect();
    if *axis.last().unwrap() != 255 {
        axis.push(255);
    }
    let mut out = Vec::with_capacity(axis.len().pow(3));
    for &r in &axis {
        for &g in &axis {
            for &b in &axis {
                let c = RgbColor::new(r, g, b);
                out.push((c, srgb_to_lab(c)));
            }
        }
    }
    Ok(out)
}

fn resolve_samples(source: &SampleSource) -> Result<Vec<(RgbColor, LabColor)>> {
    match source {
        SampleSource::Grid { stride } => sample_srgb_cube(*stride),
        SampleSource::Explicit { colors } => {
            if colors.is_empty() {
                return Err(Error::Config("explicit sample set is empty".into()));
            }
            Ok(colors.iter().map(|&c| (c, srgb_to_lab(c))).collect())
        }
    }
}

fn config_digest(cfg: &MapperConfig, source: &SampleSource) -> Result<String> {
    #[derive(Serialize)]
    struct Digest<'a> {
        config: &'a MapperConfig,
        source: &'a SampleSource,
    }
    artifacts::hash_json(&Digest { config: cfg, source })
}

/// `n` equal-length intervals over [min, max] where consecutive intervals
/// overlap by `gain` percent of the interval length. A degenerate range
/// collapses to a single interval.
fn cover_intervals(min: f64, max: f64, n: usize, gain: f64) -> Vec<(f64, f64)> {
    if n <= 1 || max <= min {
        return vec![(min, max)];
    }
    let nf = n as f64;
    let r = (max - min) / (nf - (nf - 1.0) * gain / 100.0);
    let step = r * (1.0 - gain / 100.0);
    (0..n)
        .map(|i| {
            let start = min + i as f64 * step;
            // The last interval ends exactly at max so boundary points
            // always fall inside the cover.
            let end = if i == n - 1 { max } else { start + r };
            (start, end)
        })
        .collect()
}

/// Rectangular cover of the lens image per the configured interval
/// counts and gains. Interval ranges follow the observed data range in
/// each dimension.
pub fn build_cover(lens_points: &[LensPoint], cfg: &MapperConfig) -> Result<Cover> {
    if lens_points.is_empty() {
        return Err(Error::Config("cannot build a cover over zero lens points".into()));
    }
    let (mut c_min, mut c_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut h_min, mut h_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in lens_points {
        c_min = c_min.min(p.chroma);
        c_max = c_max.max(p.chroma);
        h_min = h_min.min(p.hue_shifted);
        h_max = h_max.max(p.hue_shifted);
    }
    Ok(Cover {
        chroma_intervals: cover_intervals(c_min, c_max, cfg.chroma_intervals, cfg.chroma_gain),
        hue_intervals: cover_intervals(h_min, h_max, cfg.hue_intervals, cfg.hue_gain),
    })
}

/// Cluster every cover cell's preimage with DBSCAN under HyAB. Each
/// cluster becomes a region; noise points belong to no region. Region
/// ids run over cells in (chroma, hue) row-major order, then clusters in
/// discovery order.
pub fn refine_pullback(
    labs: &[LabColor],
    lens_points: &[LensPoint],
    cover: &Cover,
    eps: f64,
    min_pts: usize,
) -> Vec<ColorRegion> {
    let cells: Vec<(u32, u32)> = (0..cover.chroma_intervals.len() as u32)
        .flat_map(|ci| (0..cover.hue_intervals.len() as u32).map(move |hi| (ci, hi)))
        .collect();

    let per_cell: Vec<Vec<(Vec<u32>, u32, u32)>> = cells
        .par_iter()
        .map(|&(ci, hi)| {
            let idx = cover.cell_preimage(lens_points, ci as usize, hi as usize);
            if idx.is_empty() {
                return Vec::new();
            }
            let assign = dbscan::dbscan(
                idx.len(),
                |i, j| hyab(labs[idx[i] as usize], labs[idx[j] as usize]),
                eps,
                min_pts,
            );
            let n_clusters = assign
                .iter()
                .filter_map(|a| match a {
                    Assignment::Cluster(c) => Some(c + 1),
                    Assignment::Noise => None,
                })
                .max()
                .unwrap_or(0);
            let mut clusters = vec![Vec::new(); n_clusters];
            for (k, a) in assign.iter().enumerate() {
                if let Assignment::Cluster(c) = a {
                    clusters[*c].push(idx[k]);
                }
            }
            clusters.into_iter().map(|members| (members, ci, hi)).collect()
        })
        .collect();

    let mut regions = Vec::new();
    for cell_clusters in per_cell {
        for (members, ci, hi) in cell_clusters {
            let mean = member_mean(labs, &members);
            regions.push(ColorRegion {
                id: regions.len() as u32,
                members,
                mean_color: mean,
                chroma_idx: ci,
                hue_idx: hi,
            });
        }
    }
    regions
}

fn member_mean(labs: &[LabColor], members: &[u32]) -> LabColor {
    let n = members.len() as f64;
    let (mut l, mut a, mut b) = (0.0, 0.0, 0.0);
    for &m in members {
        let k = labs[m as usize];
        l += k.l;
        a += k.a;
        b += k.b;
    }
    LabColor::new(l / n, a / n, b / n)
}

fn invert_members(regions: &[ColorRegion], n_samples: usize) -> Vec<Vec<u32>> {
    let mut index = vec![Vec::new(); n_samples];
    for r in regions {
        for &m in &r.members {
            index[m as usize].push(r.id);
        }
    }
    index
}

/// Unordered pairs of regions sharing at least one sample (the nerve
/// 1-skeleton). Pairs are returned sorted with a < b.
pub fn build_nerve(regions: &[ColorRegion], n_samples: usize) -> Vec<(u32, u32)> {
    let index = invert_members(regions, n_samples);
    let mut pairs = BTreeSet::new();
    for list in &index {
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                pairs.insert((list[i], list[j]));
            }
        }
    }
    pairs.into_iter().collect()
}

/// Extra edges closing the hue seam: every (first hue interval, last hue
/// interval) region pair in the same chroma band that is not already
/// connected by an overlap edge. No-op when the hue cover has a single
/// interval.
pub fn close_hue_cycle(
    regions: &[ColorRegion],
    overlap: &[(u32, u32)],
    n_hue_intervals: usize,
) -> Vec<(u32, u32)> {
    if n_hue_intervals < 2 {
        return Vec::new();
    }
    let last = (n_hue_intervals - 1) as u32;
    let existing: BTreeSet<(u32, u32)> = overlap.iter().copied().collect();
    let mut out = BTreeSet::new();
    for r in regions.iter().filter(|r| r.hue_idx == 0) {
        for s in regions.iter().filter(|s| s.hue_idx == last && s.chroma_idx == r.chroma_idx) {
            let pair = (r.id.min(s.id), r.id.max(s.id));
            if pair.0 != pair.1 && !existing.contains(&pair) {
                out.insert(pair);
            }
        }
    }
    out.into_iter().collect()
}

/// Remove every region whose member set is contained in another region's
/// member set (duplicates keep the lowest id), re-attach edges to the
/// surviving superset, and re-compact ids. Returns the surviving regions
/// and the unified edge list as (a, b, cyclic) with a < b.
pub fn eliminate_redundant(
    regions: Vec<ColorRegion>,
    overlap: Vec<(u32, u32)>,
    cyclic: Vec<(u32, u32)>,
    n_samples: usize,
) -> (Vec<ColorRegion>, Vec<(u32, u32, bool)>) {
    let n = regions.len();
    debug_assert!(regions.iter().enumerate().all(|(i, r)| r.id == i as u32));
    let index = invert_members(&regions, n_samples);

    // supersets[u] = regions whose member set contains region u's.
    let mut supersets: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut counts = vec![0u32; n];
    for (u, region) in regions.iter().enumerate() {
        let mut touched = Vec::new();
        for &m in &region.members {
            for &v in &index[m as usize] {
                if counts[v as usize] == 0 {
                    touched.push(v);
                }
                counts[v as usize] += 1;
            }
        }
        for &v in &touched {
            if v != u as u32 && counts[v as usize] as usize == region.members.len() {
                supersets[u].push(v);
            }
            counts[v as usize] = 0;
        }
        supersets[u].sort_unstable();
    }

    let eliminated: Vec<bool> = (0..n)
        .map(|u| {
            supersets[u].iter().any(|&v| {
                let lv = regions[v as usize].members.len();
                let lu = regions[u].members.len();
                lv > lu || (lv == lu && v < u as u32)
            })
        })
        .collect();

    // Survivor each eliminated region is absorbed into: its lowest-id
    // surviving superset. One always exists because maximal member sets
    // survive.
    let rep: Vec<u32> = (0..n)
        .map(|u| {
            if !eliminated[u] {
                u as u32
            } else {
                *supersets[u]
                    .iter()
                    .find(|&&v| !eliminated[v as usize])
                    .expect("an eliminated region always has a surviving superset")
            }
        })
        .collect();

    let mut new_id = vec![u32::MAX; n];
    let mut survivors = Vec::new();
    for (u, region) in regions.into_iter().enumerate() {
        if !eliminated[u] {
            new_id[u] = survivors.len() as u32;
            survivors.push(ColorRegion { id: survivors.len() as u32, ..region });
        }
    }

    let mut edge_map: BTreeMap<(u32, u32), bool> = BTreeMap::new();
    let remap = |a: u32, b: u32| {
        let (x, y) = (new_id[rep[a as usize] as usize], new_id[rep[b as usize] as usize]);
        if x == y {
            None
        } else {
            Some((x.min(y), x.max(y)))
        }
    };
    for (a, b) in overlap {
        if let Some(pair) = remap(a, b) {
            edge_map.insert(pair, false);
        }
    }
    for (a, b) in cyclic {
        if let Some(pair) = remap(a, b) {
            // An overlap edge on the same pair takes precedence.
            edge_map.entry(pair).or_insert(true);
        }
    }

    let edges = edge_map.into_iter().map(|((a, b), cyclic)| (a, b, cyclic)).collect();
    (survivors, edges)
}

/// Run the full construction pipeline over the given sample source.
pub fn build_network(source: SampleSource, cfg: &MapperConfig) -> Result<ColorNetwork> {
    cfg.validate()?;
    let samples = resolve_samples(&source)?;
    let labs: Vec<LabColor> = samples.iter().map(|&(_, lab)| lab).collect();
    let lens_points: Vec<LensPoint> = labs.iter().map(|&lab| lens(lab, cfg.xi)).collect();

    let cover = build_cover(&lens_points, cfg)?;
    let regions = refine_pullback(&labs, &lens_points, &cover, cfg.dbscan_eps, cfg.dbscan_min_pts);
    let overlap = build_nerve(&regions, samples.len());
    let cyclic = close_hue_cycle(&regions, &overlap, cover.hue_intervals.len());
    let (regions, edge_list) = eliminate_redundant(regions, overlap, cyclic, samples.len());

    let edges: Vec<NetworkEdge> = edge_list
        .into_iter()
        .map(|(a, b, cyclic)| NetworkEdge {
            a,
            b,
            weight: hyab(regions[a as usize].mean_color, regions[b as usize].mean_color),
            cyclic,
        })
        .collect();

    let config_hash = config_digest(cfg, &source)?;
    let region_index = invert_members(&regions, samples.len());
    let mut network = ColorNetwork {
        regions,
        edges,
        config: cfg.clone(),
        source,
        config_hash,
        samples,
        region_index,
        hash: String::new(),
    };
    network.hash = artifacts::hash_json(&network.to_file())?;
    Ok(network)
}

/// Convenience wrapper: build from the sRGB grid at the configured stride.
pub fn build_grid_network(cfg: &MapperConfig) -> Result<ColorNetwork> {
    build_network(SampleSource::Grid { stride: cfg.stride }, cfg)
}
