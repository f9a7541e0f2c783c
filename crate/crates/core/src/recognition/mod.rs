//! Occlusion-aware recognition: train the shape-only and shape+color
//! classifiers, detect occlusion from an instance segmentation map, and
//! fuse per-object predictions by maximum probability.

pub mod mlp;

pub use mlp::{argmax, MlpClassifier};

use crate::artifacts::{hash_json, load_json, save_json};
use crate::config::{DescriptorConfig, PipelineConfig, SlicingConfig};
use crate::descriptor::{descriptors, DescriptorLayout, Descriptors, MembershipTable, PiParams};
use crate::error::{Error, Result};
use crate::geometry::segmentation::SegmentationMap;
use crate::geometry::{align, flip_for_occlusion, scale, slice_and_strip, view_normalize, ColoredCloud, SlicedCloud};
use crate::mapper::ColorNetwork;
use crate::similarity::SimilarityMatrix;
use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

pub const MODEL_FILE_VERSION: u32 = 1;

/// Everything needed to rebuild a training-time descriptor at test time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessMeta {
    pub slicing: SlicingConfig,
    pub descriptor: DescriptorConfig,
    pub layout: DescriptorLayout,
    pub network_hash: String,
    pub delta_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecognitionModel {
    pub version: u32,
    pub labels: Vec<String>,
    pub preprocess: PreprocessMeta,
    pub m1: MlpClassifier,
    pub m2: MlpClassifier,
}

impl RecognitionModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_json(path.as_ref(), self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let model: Self = load_json(path.as_ref())?;
        if model.version != MODEL_FILE_VERSION {
            return Err(Error::ArtifactMismatch(format!(
                "model file version {} (expected {MODEL_FILE_VERSION})",
                model.version
            )));
        }
        if model.m1.n_inputs() != model.preprocess.layout.tops_len()
            || model.m2.n_inputs() != model.preprocess.layout.tops2_len()
            || model.m1.n_classes() != model.labels.len()
            || model.m2.n_classes() != model.labels.len()
        {
            return Err(Error::ArtifactMismatch(
                "model classifier dimensions disagree with its layout".into(),
            ));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSource {
    M1,
    M2,
}

impl std::fmt::Display for ModelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::M1 => "m1",
            Self::M2 => "m2",
        })
    }
}

/// Which classifier(s) drive the final prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionMode {
    M1Only,
    M2Only,
    Fused,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: String,
    pub probability: f64,
    pub source: ModelSource,
}

/// Content fingerprint of a similarity matrix, as serialized to disk.
pub fn delta_fingerprint(delta: &SimilarityMatrix) -> Result<String> {
    hash_json(&delta.to_file())
}

/// Scale, view-normalize, optionally flip for occlusion, align, and
/// slice one cloud.
pub fn prepare_cloud(
    cloud: &ColoredCloud,
    slicing: &SlicingConfig,
    occluded: bool,
) -> Result<SlicedCloud> {
    let scaled = scale(cloud, slicing.sigma_s)?;
    let mut normalized = view_normalize(&scaled)?;
    if occluded {
        normalized = flip_for_occlusion(&normalized);
    }
    let aligned = align(&normalized, slicing.alpha);
    slice_and_strip(&aligned, slicing.sigma1, slicing.sigma2)
}

/// Both descriptors of one cloud under a fixed layout.
pub fn describe_cloud(
    cloud: &ColoredCloud,
    occluded: bool,
    network: &ColorNetwork,
    delta: &SimilarityMatrix,
    layout: &DescriptorLayout,
    slicing: &SlicingConfig,
    descriptor: &DescriptorConfig,
) -> Result<Descriptors> {
    let sliced = prepare_cloud(cloud, slicing, occluded)?;
    let table = MembershipTable::build(network, cloud.points.iter().map(|p| p.color));
    let pi = PiParams {
        range: descriptor.pi_range,
        sigma: descriptor.sigma_pi_factor * slicing.sigma2,
    };
    descriptors(&sliced, &table, delta, layout, pi)
}

/// Train both classifiers on unoccluded views.
pub fn train(
    dataset: &[(ColoredCloud, String)],
    network: &ColorNetwork,
    delta: &SimilarityMatrix,
    config: &PipelineConfig,
    seed: u64,
) -> Result<RecognitionModel> {
    config.validate()?;
    if delta.network_hash != network.hash() {
        return Err(Error::ArtifactMismatch(
            "similarity matrix was computed for a different network".into(),
        ));
    }
    let labels: Vec<String> =
        dataset.iter().map(|(_, l)| l.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    if labels.len() < 2 {
        return Err(Error::Config(format!(
            "training needs at least 2 classes, found {}",
            labels.len()
        )));
    }

    let sliced: Vec<SlicedCloud> = dataset
        .par_iter()
        .map(|(cloud, _)| prepare_cloud(cloud, &config.slicing, false))
        .collect::<Result<_>>()?;
    let n_s_max = sliced.iter().map(SlicedCloud::max_strips).max().unwrap_or(0).max(1);
    let n_slices_max = sliced.iter().map(|s| s.slices.len()).max().unwrap_or(0).max(1);
    let layout = DescriptorLayout {
        n_c: network.n_regions(),
        p: config.descriptor.grid_size,
        n_s_max,
        n_slices_max,
    };
    let pi = PiParams {
        range: config.descriptor.pi_range,
        sigma: config.descriptor.sigma_pi_factor * config.slicing.sigma2,
    };

    let descs: Vec<Descriptors> = dataset
        .par_iter()
        .zip(sliced.par_iter())
        .map(|((cloud, _), sliced)| {
            let table = MembershipTable::build(network, cloud.points.iter().map(|p| p.color));
            descriptors(sliced, &table, delta, &layout, pi)
        })
        .collect::<Result<_>>()?;

    let n = descs.len();
    let x1 = Array2::from_shape_vec(
        (n, layout.tops_len()),
        descs.iter().flat_map(|d| d.tops.iter().copied()).collect(),
    )
    .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let x2 = Array2::from_shape_vec(
        (n, layout.tops2_len()),
        descs.iter().flat_map(|d| d.tops2.iter().copied()).collect(),
    )
    .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let y: Vec<usize> = dataset
        .iter()
        .map(|(_, l)| labels.binary_search(l).expect("label table covers the dataset"))
        .collect();

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let seed_m1 = rng.next_u64();
    let seed_m2 = rng.next_u64();

    // Fusion compares the two maximum probabilities, so each classifier
    // must report confidence it can back on data it has not seen. A
    // fifth of each label's views (at least one) is withheld, scratch
    // models trained on the rest fit their softmax temperatures on the
    // withheld views, and the temperatures transfer to final models
    // trained on everything. A label with a single view cannot spare
    // it, so calibration is skipped and temperatures stay at one.
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); labels.len()];
    for (row, &label) in y.iter().enumerate() {
        by_label[label].push(row);
    }
    let temperatures = if by_label.iter().all(|rows| rows.len() >= 2) {
        let mut fit_rows = Vec::new();
        let mut held_rows = Vec::new();
        for rows in &mut by_label {
            rows.shuffle(&mut rng);
            let held = (rows.len() / 5).max(1);
            held_rows.extend_from_slice(&rows[..held]);
            fit_rows.extend_from_slice(&rows[held..]);
        }
        fit_rows.sort_unstable();
        held_rows.sort_unstable();
        let y_fit: Vec<usize> = fit_rows.iter().map(|&r| y[r]).collect();
        let y_held: Vec<usize> = held_rows.iter().map(|&r| y[r]).collect();
        let fit = |x: &Array2<f64>, seed_m: u64| -> Result<f64> {
            let mut scratch = MlpClassifier::train(
                x.select(Axis(0), &fit_rows).view(),
                &y_fit,
                labels.len(),
                &config.model,
                seed_m,
            )?;
            scratch.fit_temperature(x.select(Axis(0), &held_rows).view(), &y_held)
        };
        Some((fit(&x1, seed_m1)?, fit(&x2, seed_m2)?))
    } else {
        None
    };

    let mut m1 = MlpClassifier::train(x1.view(), &y, labels.len(), &config.model, seed_m1)?;
    let mut m2 = MlpClassifier::train(x2.view(), &y, labels.len(), &config.model, seed_m2)?;
    if let Some((t1, t2)) = temperatures {
        m1.set_temperature(t1);
        m2.set_temperature(t2);
    }

    Ok(RecognitionModel {
        version: MODEL_FILE_VERSION,
        labels,
        preprocess: PreprocessMeta {
            slicing: config.slicing.clone(),
            descriptor: config.descriptor.clone(),
            layout,
            network_hash: network.hash().to_string(),
            delta_hash: delta_fingerprint(delta)?,
        },
        m1,
        m2,
    })
}

/// True iff the instance's mask touches the image border or is
/// 8-adjacent to a different instance.
pub fn detect_occlusion(map: &SegmentationMap, instance: u8) -> Result<bool> {
    if instance == 0 {
        return Err(Error::Config("instance 0 is background, not a mask".into()));
    }
    let (w, h) = (map.width, map.height);
    let mut seen = false;
    for y in 0..h {
        for x in 0..w {
            if map.get(x, y) != instance {
                continue;
            }
            seen = true;
            if x == 0 || y == 0 || x == w - 1 || y == h - 1 {
                return Ok(true);
            }
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let v = map.get((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                    if v != 0 && v != instance {
                        return Ok(true);
                    }
                }
            }
        }
    }
    if !seen {
        return Err(Error::Config(format!("segmentation map has no pixels of instance {instance}")));
    }
    Ok(false)
}

fn fuse(p1: &[f64], p2: &[f64], mode: FusionMode) -> (usize, f64, ModelSource) {
    let i1 = argmax(p1);
    let i2 = argmax(p2);
    match mode {
        FusionMode::M1Only => (i1, p1[i1], ModelSource::M1),
        FusionMode::M2Only => (i2, p2[i2], ModelSource::M2),
        FusionMode::Fused => {
            if p2[i2] >= p1[i1] {
                (i2, p2[i2], ModelSource::M2)
            } else {
                (i1, p1[i1], ModelSource::M1)
            }
        }
    }
}

/// Classify one cloud. The occlusion flag applies the pre-slicing flip
/// and is recorded by the caller, not here.
pub fn predict(
    cloud: &ColoredCloud,
    occluded: bool,
    model: &RecognitionModel,
    network: &ColorNetwork,
    delta: &SimilarityMatrix,
    mode: FusionMode,
) -> Result<Prediction> {
    if network.hash() != model.preprocess.network_hash {
        return Err(Error::ArtifactMismatch(
            "color network differs from the one the model was trained with".into(),
        ));
    }
    if delta_fingerprint(delta)? != model.preprocess.delta_hash {
        return Err(Error::ArtifactMismatch(
            "similarity matrix differs from the one the model was trained with".into(),
        ));
    }
    let descs = describe_cloud(
        cloud,
        occluded,
        network,
        delta,
        &model.preprocess.layout,
        &model.preprocess.slicing,
        &model.preprocess.descriptor,
    )?;
    let p1 = model.m1.predict_proba(ArrayView1::from(&descs.tops[..]))?;
    let p2 = model.m2.predict_proba(ArrayView1::from(&descs.tops2[..]))?;
    let (idx, probability, source) = fuse(&p1, &p2, mode);
    Ok(Prediction { label: model.labels[idx].clone(), probability, source })
}

/// One labeled test object.
#[derive(Debug, Clone)]
pub struct EvalCase {
    pub cloud: ColoredCloud,
    pub label: String,
    pub occluded: bool,
    pub split: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitAccuracy {
    pub split: String,
    pub accuracy: f64,
    pub n: usize,
}

/// Accuracy per split plus an `overall` row. Prediction errors count as
/// misclassifications.
pub fn evaluate(
    cases: &[EvalCase],
    model: &RecognitionModel,
    network: &ColorNetwork,
    delta: &SimilarityMatrix,
    mode: FusionMode,
) -> Vec<SplitAccuracy> {
    let hits: Vec<(String, bool)> = cases
        .par_iter()
        .map(|case| {
            let hit = predict(&case.cloud, case.occluded, model, network, delta, mode)
                .map(|p| p.label == case.label)
                .unwrap_or(false);
            (case.split.clone(), hit)
        })
        .collect();

    let splits: BTreeSet<&String> = hits.iter().map(|(s, _)| s).collect();
    let mut rows = Vec::with_capacity(splits.len() + 1);
    for split in splits {
        let total = hits.iter().filter(|(s, _)| s == split).count();
        let correct = hits.iter().filter(|(s, hit)| s == split && *hit).count();
        rows.push(SplitAccuracy {
            split: split.clone(),
            accuracy: correct as f64 / total as f64,
            n: total,
        });
    }
    let correct = hits.iter().filter(|(_, hit)| *hit).count();
    rows.push(SplitAccuracy {
        split: "overall".into(),
        accuracy: correct as f64 / hits.len().max(1) as f64,
        n: hits.len(),
    });
    rows
}
