//! Instance segmentation maps: 8-bit single-channel images where each
//! pixel holds an instance id and 0 marks background.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentationMap {
    pub width: usize,
    pub height: usize,
    /// Row-major pixel data, `height * width` entries.
    pub data: Vec<u8>,
}

impl SegmentationMap {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Config(format!(
                "segmentation map is {} pixels, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Distinct non-background instance ids, ascending.
    pub fn instance_ids(&self) -> Vec<u8> {
        let mut seen = [false; 256];
        for &v in &self.data {
            seen[v as usize] = true;
        }
        (1..=255).filter(|&id| seen[id as usize]).collect()
    }

    pub fn pixel_count(&self, id: u8) -> usize {
        self.data.iter().filter(|&&v| v == id).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_dimensions() {
        assert!(SegmentationMap::new(2, 2, vec![0, 1, 1, 0]).is_ok());
        assert!(SegmentationMap::new(3, 2, vec![0; 5]).is_err());
    }

    #[test]
    fn instance_ids_skip_background() {
        let map = SegmentationMap::new(2, 2, vec![0, 3, 1, 3]).unwrap();
        assert_eq!(map.instance_ids(), vec![1, 3]);
        assert_eq!(map.pixel_count(3), 2);
        assert_eq!(map.pixel_count(2), 0);
    }
}
