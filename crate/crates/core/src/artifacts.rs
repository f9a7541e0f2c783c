//! On-disk artifact formats and the hashing that chains them together.
//!
//! Every stage output (network, similarity matrix, descriptors, model)
//! is a versioned JSON document. Hashes are SHA-256 over the canonical
//! serialized bytes, so identical inputs produce byte-identical files
//! and any cross-stage mismatch is detectable before real work starts.

use crate::config::MapperConfig;
use crate::descriptor::DescriptorLayout;
use crate::error::{Error, Result};
use crate::mapper::{ColorRegion, NetworkEdge, SampleSource};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

pub const NETWORK_FILE_VERSION: u32 = 1;
pub const DELTA_FILE_VERSION: u32 = 1;
pub const DESCRIPTOR_FILE_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// SHA-256 of a value's canonical JSON serialization.
pub fn hash_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(value)?))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    Ok(fs::write(path, serde_json::to_vec(value)?)?)
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// Serialized color network. Samples are regenerated from `source` on
/// load; `config_hash` covers the construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub version: u32,
    pub config: MapperConfig,
    pub source: SampleSource,
    pub config_hash: String,
    pub regions: Vec<ColorRegion>,
    pub edges: Vec<NetworkEdge>,
}

/// Serialized similarity matrix, bound to its network by hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaFile {
    pub version: u32,
    pub network_hash: String,
    pub n_c: usize,
    /// Row-major n_c x n_c entries.
    pub delta: Vec<f64>,
}

/// Serialized descriptor pair for one object.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DescriptorFile {
    pub version: u32,
    pub network_hash: String,
    pub layout: DescriptorLayout,
    pub tops: Vec<f64>,
    pub tops2: Vec<f64>,
}

impl DescriptorFile {
    pub fn validate(&self) -> Result<()> {
        if self.version != DESCRIPTOR_FILE_VERSION {
            return Err(Error::ArtifactMismatch(format!(
                "descriptor file version {} (expected {DESCRIPTOR_FILE_VERSION})",
                self.version
            )));
        }
        if self.tops.len() != self.layout.tops_len() || self.tops2.len() != self.layout.tops2_len() {
            return Err(Error::ArtifactMismatch(
                "descriptor length does not match its declared layout".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input_matches_reference() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn hash_json_is_stable_across_calls() {
        let cfg = MapperConfig::default();
        assert_eq!(hash_json(&cfg).unwrap(), hash_json(&cfg).unwrap());
    }

    #[test]
    fn hash_json_distinguishes_configs() {
        let a = MapperConfig::default();
        let b = MapperConfig { stride: 16, ..Default::default() };
        assert_ne!(hash_json(&a).unwrap(), hash_json(&b).unwrap());
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("delta.json");
        let delta = DeltaFile {
            version: DELTA_FILE_VERSION,
            network_hash: "abc".into(),
            n_c: 2,
            delta: vec![1.0, 0.5, 0.5, 1.0],
        };
        save_json(&path, &delta).unwrap();
        let loaded: DeltaFile = load_json(&path).unwrap();
        assert_eq!(loaded.delta, delta.delta);
        assert_eq!(loaded.network_hash, delta.network_hash);
    }
}
