//! Dense binary rasters, one instance per canvas.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A binary mask on a fixed `width` x `height` canvas.
///
/// Pixels are packed row-major into 64-bit words: pixel `(x, y)` lives at
/// flat index `y * width + x`. Bits past `width * height` are always zero, so
/// equality, hashing and popcounts can work on whole words.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl BinaryMask {
    /// All-background mask. Panics if either dimension is zero.
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "mask dimensions must be >= 1");
        let n = width * height;
        BinaryMask {
            width,
            height,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn filled(width: usize, height: usize) -> Self {
        let mut m = Self::new(width, height);
        for w in m.words.iter_mut() {
            *w = u64::MAX;
        }
        m.clear_tail();
        m
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    /// Builds a mask from set pixel coordinates. Out-of-canvas pixels are ignored.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: impl IntoIterator<Item = (usize, usize)>,
    ) -> Self {
        let mut m = Self::new(width, height);
        for (x, y) in pixels {
            if x < width && y < height {
                m.set(x, y, true);
            }
        }
        m
    }

    /// Parses rows of text where `#`, `1` or `x` mark foreground.
    ///
    /// ```
    /// use lareval::BinaryMask;
    /// let m = BinaryMask::from_ascii(&["#.", ".#"]).unwrap();
    /// assert_eq!(m.area(), 2);
    /// ```
    pub fn from_ascii(rows: &[&str]) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.chars().count());
        if width == 0 || height == 0 {
            return Err(Error::Shape("ascii mask must be non-empty".into()));
        }
        let mut m = Self::new(width, height);
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Shape(format!("ascii row {y} has ragged width")));
            }
            for (x, c) in row.chars().enumerate() {
                if matches!(c, '#' | '1' | 'x' | 'X') {
                    m.set(x, y, true);
                }
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.get_index(y * self.width + x)
    }

    /// Like [`get`](Self::get) but treats out-of-canvas coordinates as background.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return false;
        }
        self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        assert!(x < self.width && y < self.height, "pixel ({x},{y}) out of canvas");
        self.set_index(y * self.width + x, value);
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, value: bool) {
        let bit = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= bit;
        } else {
            self.words[i >> 6] &= !bit;
        }
    }

    pub fn area(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn same_shape(&self, other: &BinaryMask) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &BinaryMask) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "canvas mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_shape(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_shape(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            words,
        })
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.same_shape(other) && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Set pixels as `(x, y)` in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let width = self.width;
        self.words.iter().enumerate().flat_map(move |(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                let i = wi * 64 + bit;
                Some((i % width, i / width))
            })
        })
    }

    /// Translates the mask; pixels shifted off the canvas are lost.
    pub fn shifted(&self, dx: i64, dy: i64) -> BinaryMask {
        let mut out = BinaryMask::new(self.width, self.height);
        for (x, y) in self.iter_ones() {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
                out.set(nx as usize, ny as usize, true);
            }
        }
        out
    }

    pub fn invert(&self) -> BinaryMask {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        out.clear_tail();
        out
    }

    fn clear_tail(&mut self) {
        let n = self.len();
        if !n.is_multiple_of(64) {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << (n % 64)) - 1;
        }
    }

    /// Tightest inclusive box around the set pixels, `None` when empty.
    pub fn bbox(&self) -> Option<PixelBox> {
        let mut it = self.iter_ones();
        let (x0, y0) = it.next()?;
        let mut b = PixelBox {
            x_min: x0,
            y_min: y0,
            x_max: x0,
            y_max: y0,
        };
        for (x, y) in it {
            b.x_min = b.x_min.min(x);
            b.x_max = b.x_max.max(x);
            b.y_max = y;
        }
        Some(b)
    }

    /// Renders rows of `#` and `.`, handy in assertion messages.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(if self.get(x, y) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BinaryMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("area", &self.area())
            .finish()
    }
}

/// Inclusive pixel-index box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelBox {
    pub x_min: usize,
    pub y_min: usize,
    pub x_max: usize,
    pub y_max: usize,
}

impl PixelBox {
    pub fn new(x_min: usize, y_min: usize, x_max: usize, y_max: usize) -> Result<Self> {
        if x_min > x_max || y_min > y_max {
            return Err(Error::Geometry(format!(
                "invalid box ({x_min},{y_min},{x_max},{y_max})"
            )));
        }
        Ok(PixelBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> usize {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> usize {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn intersection(&self, other: &PixelBox) -> Option<PixelBox> {
        let x_min = self.x_min.max(other.x_min);
        let y_min = self.y_min.max(other.y_min);
        let x_max = self.x_max.min(other.x_max);
        let y_max = self.y_max.min(other.y_max);
        (x_min <= x_max && y_min <= y_max).then_some(PixelBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    /// Grows the box by `margin` on every side, clipped to a `width` x `height` canvas.
    pub fn expanded(&self, margin: usize, width: usize, height: usize) -> PixelBox {
        PixelBox {
            x_min: self.x_min.saturating_sub(margin),
            y_min: self.y_min.saturating_sub(margin),
            x_max: (self.x_max + margin).min(width - 1),
            y_max: (self.y_max + margin).min(height - 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_are_row_major() {
        let m = BinaryMask::from_pixels(70, 3, [(69, 0), (1, 1), (0, 2), (3, 0)]);
        let v: Vec<_> = m.iter_ones().collect();
        assert_eq!(v, vec![(3, 0), (69, 0), (1, 1), (0, 2)]);
        assert_eq!(m.area(), 4);
    }

    #[test]
    fn filled_and_invert_keep_padding_clear() {
        let m = BinaryMask::filled(5, 3);
        assert_eq!(m.area(), 15);
        assert!(m.invert().is_empty());
        assert_eq!(BinaryMask::new(5, 3).invert(), m);
    }

    #[test]
    fn shifted_drops_pixels_off_canvas() {
        let m = BinaryMask::from_pixels(4, 4, [(0, 0), (3, 3)]);
        let s = m.shifted(1, 0);
        assert_eq!(s.iter_ones().collect::<Vec<_>>(), vec![(1, 0)]);
    }

    #[test]
    fn ascii_round_trip() {
        let rows = ["#..#", ".##."];
        let m = BinaryMask::from_ascii(&rows).unwrap();
        assert_eq!(m.to_ascii(), "#..#\n.##.\n");
        assert!(BinaryMask::from_ascii(&["##", "#"]).is_err());
    }
}
