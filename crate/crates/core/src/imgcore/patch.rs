use std::collections::HashSet;

use super::image::Image;
use crate::error::{Error, Result};

/// Side of a full texture image.
pub const IMAGE_SIDE: usize = 800;
/// Side of one patch.
pub const PATCH_SIDE: usize = 200;
/// Patches per row/column of the grid.
pub const GRID: usize = 4;

/// Position of a patch in the 4x4 tiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridPos {
    pub row: u8,
    pub col: u8,
}

impl GridPos {
    pub fn new(row: u8, col: u8) -> Self {
        GridPos { row, col }
    }

    /// Linear index `row * 4 + col`.
    pub fn index(self) -> u8 {
        self.row * GRID as u8 + self.col
    }

    pub fn from_index(i: u8) -> Result<Self> {
        if i as usize >= GRID * GRID {
            return Err(Error::invalid(format!("grid index {i} out of range")));
        }
        Ok(GridPos::new(i / GRID as u8, i % GRID as u8))
    }

    /// Training cells are those with even coordinate parity.
    pub fn is_train(self) -> bool {
        (self.row + self.col) % 2 == 0
    }

    pub fn all() -> impl Iterator<Item = GridPos> {
        (0..(GRID * GRID) as u8).map(|i| GridPos::new(i / GRID as u8, i % GRID as u8))
    }
}

/// A 200x200 tile cut from one (class, condition) image.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub image: Image,
    pub class_id: u16,
    /// Stable lighting-condition id (see `lightsim::condition_catalog`).
    pub condition: String,
    pub grid_pos: GridPos,
}

/// Cuts an 800x800 image into the 4x4 grid of non-overlapping 200x200 patches.
pub fn extract_patches(img: &Image, class_id: u16, condition: &str) -> Result<Vec<Patch>> {
    if img.width() != IMAGE_SIDE || img.height() != IMAGE_SIDE {
        return Err(Error::invalid(format!(
            "patch extraction needs {IMAGE_SIDE}x{IMAGE_SIDE}, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    GridPos::all()
        .map(|pos| {
            let image = img.crop(
                pos.col as usize * PATCH_SIDE,
                pos.row as usize * PATCH_SIDE,
                PATCH_SIDE,
                PATCH_SIDE,
            )?;
            Ok(Patch {
                image,
                class_id,
                condition: condition.to_string(),
                grid_pos: pos,
            })
        })
        .collect()
}

/// Splits the 16 patches of one image into chessboard train/test halves.
pub fn chessboard_split(patches: Vec<Patch>) -> Result<(Vec<Patch>, Vec<Patch>)> {
    if patches.len() != GRID * GRID {
        return Err(Error::invalid(format!(
            "chessboard split needs {} patches, got {}",
            GRID * GRID,
            patches.len()
        )));
    }
    let mut seen = HashSet::new();
    for p in &patches {
        if p.grid_pos.row as usize >= GRID || p.grid_pos.col as usize >= GRID {
            return Err(Error::invalid(format!("grid position {:?} outside 4x4", p.grid_pos)));
        }
        if !seen.insert(p.grid_pos) {
            return Err(Error::invalid(format!("duplicate grid position {:?}", p.grid_pos)));
        }
    }
    Ok(patches.into_iter().partition(|p| p.grid_pos.is_train()))
}
