//! 2D-to-1D image preparation: zero padding, flattening strategies, and
//! gradient-magnitude images.

use crate::error::{FdaError, Result};
use crate::hilbert::HilbertMap;
use serde::{Deserialize, Serialize};

/// A grayscale image, row-major, intensities normalized to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Self {
        assert!(height >= 1 && width >= 1);
        assert_eq!(values.len(), height * width);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self {
            height,
            width,
            values,
        }
    }

    /// Builds from raw bytes, scaling intensities into `[0, 1]`.
    pub fn from_bytes(height: usize, width: usize, bytes: &[u8]) -> Self {
        Self::new(
            height,
            width,
            bytes.iter().map(|&b| b as f64 / 255.0).collect(),
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> GrayImage {
        let mut values = vec![0.0; self.values.len()];
        for r in 0..self.height {
            for c in 0..self.width {
                values[c * self.height + r] = self.get(r, c);
            }
        }
        GrayImage::new(self.width, self.height, values)
    }
}

/// Pads an image with zeros to the smallest containing `2^m x 2^m` square,
/// centering the content; an odd surplus leaves the extra pixel on the
/// bottom/right.
pub fn pad_to_pow2(img: &GrayImage) -> GrayImage {
    let side = img.height.max(img.width).next_power_of_two();
    if img.height == side && img.width == side {
        return img.clone();
    }
    let top = (side - img.height) / 2;
    let left = (side - img.width) / 2;
    let mut values = vec![0.0; side * side];
    for r in 0..img.height {
        for c in 0..img.width {
            values[(r + top) * side + (c + left)] = img.get(r, c);
        }
    }
    GrayImage::new(side, side, values)
}

/// Gradient-magnitude image: central differences at interior pixels,
/// one-sided differences on the borders.
pub fn gradient_image(img: &GrayImage) -> GrayImage {
    let (h, w) = (img.height, img.width);
    let mut values = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let dx = if h == 1 {
                0.0
            } else if i == 0 {
                img.get(1, j) - img.get(0, j)
            } else if i == h - 1 {
                img.get(h - 1, j) - img.get(h - 2, j)
            } else {
                (img.get(i + 1, j) - img.get(i - 1, j)) / 2.0
            };
            let dy = if w == 1 {
                0.0
            } else if j == 0 {
                img.get(i, 1) - img.get(i, 0)
            } else if j == w - 1 {
                img.get(i, w - 1) - img.get(i, w - 2)
            } else {
                (img.get(i, j + 1) - img.get(i, j - 1)) / 2.0
            };
            values[i * w + j] = (dx * dx + dy * dy).sqrt();
        }
    }
    GrayImage::new(h, w, values)
}

/// A named 2D-to-1D linearization strategy, selected at runtime.
pub trait Flattener: Send + Sync {
    fn name(&self) -> &'static str;

    /// Whether the flattened curves benefit from data-driven knots; purely
    /// informational.
    fn flatten(&self, img: &GrayImage) -> Result<Vec<f64>>;
}

/// Hilbert-curve traversal; the image must be a power-of-two square
/// (see [`pad_to_pow2`]).
pub struct HilbertFlattener;

impl Flattener for HilbertFlattener {
    fn name(&self) -> &'static str {
        "hilbert"
    }

    fn flatten(&self, img: &GrayImage) -> Result<Vec<f64>> {
        let side = img.height;
        if img.width != side || !side.is_power_of_two() {
            return Err(FdaError::NotPowerOfTwoSquare {
                height: img.height,
                width: img.width,
            });
        }
        let map = HilbertMap::new(side.trailing_zeros());
        Ok((0..map.len())
            .map(|d| {
                let (r, c) = map.inverse(d);
                img.get(r, c)
            })
            .collect())
    }
}

/// Rows concatenated in index order.
pub struct ByRowFlattener;

impl Flattener for ByRowFlattener {
    fn name(&self) -> &'static str {
        "by-row"
    }

    fn flatten(&self, img: &GrayImage) -> Result<Vec<f64>> {
        Ok(img.values.clone())
    }
}

/// Columns concatenated in index order.
pub struct ByColumnFlattener;

impl Flattener for ByColumnFlattener {
    fn name(&self) -> &'static str {
        "by-column"
    }

    fn flatten(&self, img: &GrayImage) -> Result<Vec<f64>> {
        Ok(img.transpose().values.clone())
    }
}

static FLATTENERS: &[&dyn Flattener] = &[&HilbertFlattener, &ByRowFlattener, &ByColumnFlattener];

/// Looks up a registered flattener by name.
pub fn flattener(name: &str) -> Result<&'static dyn Flattener> {
    FLATTENERS
        .iter()
        .copied()
        .find(|f| f.name() == name)
        .ok_or_else(|| FdaError::UnknownFlattener(name.to_string()))
}

pub fn flatteners() -> &'static [&'static dyn Flattener] {
    FLATTENERS
}

/// The argument grid attached to a flattened image: `d / (len - 1)` in `[0, 1]`.
pub fn unit_grid(len: usize) -> Vec<f64> {
    let denom = (len - 1) as f64;
    (0..len).map(|d| d as f64 / denom).collect()
}
