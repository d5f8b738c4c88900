//! Hilbert space-filling curve on a `2^m x 2^m` grid.
//!
//! The canonical orientation starts at cell `(0, 0)`; consecutive curve
//! positions are always 4-adjacent pixels, which is what makes the
//! linearization preserve image locality.

use serde::{Deserialize, Serialize};

/// Bijection between curve positions `d` in `[0, 4^m)` and grid cells
/// `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HilbertMap {
    order: u32,
}

impl HilbertMap {
    pub fn new(order: u32) -> Self {
        assert!(order <= 15, "grid side 2^{order} overflows the index math");
        Self { order }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Grid side `2^m`.
    pub fn side(&self) -> usize {
        1usize << self.order
    }

    /// Number of cells `4^m`.
    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Curve position of cell `(row, col)`.
    pub fn forward(&self, row: usize, col: usize) -> usize {
        let n = self.side();
        debug_assert!(row < n && col < n);
        let (mut x, mut y) = (row, col);
        let mut d = 0usize;
        let mut s = n / 2;
        while s > 0 {
            let rx = usize::from(x & s > 0);
            let ry = usize::from(y & s > 0);
            d += s * s * ((3 * rx) ^ ry);
            // rotate the remaining quadrant; the reflection uses the full
            // side on this path
            if ry == 0 {
                if rx == 1 {
                    x = n - 1 - x;
                    y = n - 1 - y;
                }
                std::mem::swap(&mut x, &mut y);
            }
            s /= 2;
        }
        d
    }

    /// Cell `(row, col)` of curve position `d`.
    pub fn inverse(&self, d: usize) -> (usize, usize) {
        let n = self.side();
        debug_assert!(d < n * n);
        let (mut x, mut y) = (0usize, 0usize);
        let mut t = d;
        let mut s = 1usize;
        while s < n {
            let rx = 1 & (t / 2);
            let ry = 1 & (t ^ rx);
            if ry == 0 {
                if rx == 1 {
                    x = s - 1 - x;
                    y = s - 1 - y;
                }
                std::mem::swap(&mut x, &mut y);
            }
            x += s * rx;
            y += s * ry;
            t /= 4;
            s *= 2;
        }
        (x, y)
    }
}
