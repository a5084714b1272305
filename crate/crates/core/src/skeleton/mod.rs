//! One-pixel-wide skeletons and line-length estimation.

mod polyline;
mod thin;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

pub use polyline::{polyline_length, simplify_polyline};

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::mask_ops::{component_pixels, Connectivity};

pub const DEFAULT_POLYLINE_EPSILON: f64 = 1.5;

/// A thinned mask together with the area of the mask it came from.
///
/// Skeletons contain no 2x2 block of set pixels, lie inside their source and
/// have the same number of 8-connected components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub mask: BinaryMask,
    pub source_area: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthEstimator {
    /// Number of skeleton pixels.
    PixelCount,
    /// Weighted diameter of the largest component (axial step 1, diagonal √2).
    #[default]
    GeodesicChain,
    /// Diameter path simplified by Douglas-Peucker, summed segment lengths.
    PolylineFit { epsilon: f64 },
}

impl LengthEstimator {
    pub fn polyline() -> Self {
        LengthEstimator::PolylineFit {
            epsilon: DEFAULT_POLYLINE_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LengthEstimator::PolylineFit { epsilon } if epsilon.is_nan() || epsilon <= 0.0 => {
                Err(Error::Range(format!("polyline epsilon must be > 0, got {epsilon}")))
            }
            _ => Ok(()),
        }
    }
}

pub fn skeletonize(m: &BinaryMask) -> Skeleton {
    Skeleton {
        mask: thin::thin(m),
        source_area: m.area(),
    }
}

pub fn skeleton_length(s: &Skeleton, estimator: LengthEstimator) -> f64 {
    match estimator {
        LengthEstimator::PixelCount => s.mask.area() as f64,
        LengthEstimator::GeodesicChain => largest_component_diameter(&s.mask).map_or(0.0, |d| d.length),
        LengthEstimator::PolylineFit { epsilon } => match largest_component_diameter(&s.mask) {
            Some(d) if d.path.len() >= 2 => {
                let pts: Vec<(f64, f64)> = d.path.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
                simplify_polyline(&pts, epsilon)
                    .map(|v| polyline_length(&v))
                    .unwrap_or(0.0)
            }
            _ => 0.0,
        },
    }
}

/// Skeletonizes `m` and returns the greatest per-component length, so a
/// fractured mask is measured by its longest piece.
pub fn longest_fragment_length(m: &BinaryMask, estimator: LengthEstimator) -> f64 {
    let skel = skeletonize(m);
    fragment_lengths(&skel, estimator).into_iter().fold(0.0, f64::max)
}

/// Length of each 8-connected skeleton component, largest component first.
pub fn fragment_lengths(s: &Skeleton, estimator: LengthEstimator) -> Vec<f64> {
    let comps = component_pixels(&s.mask, Connectivity::Eight);
    if comps.len() <= 1 {
        return if comps.is_empty() {
            Vec::new()
        } else {
            vec![skeleton_length(s, estimator)]
        };
    }
    comps
        .into_iter()
        .map(|pixels| {
            let part = Skeleton {
                mask: BinaryMask::from_pixels(s.mask.width(), s.mask.height(), pixels),
                source_area: s.source_area,
            };
            skeleton_length(&part, estimator)
        })
        .collect()
}

/// Ordered pixels realizing the weighted diameter of the largest component.
pub fn trace_diameter_path(s: &Skeleton) -> Result<Vec<(usize, usize)>> {
    largest_component_diameter(&s.mask)
        .map(|d| d.path)
        .ok_or(Error::Empty("diameter path of an empty skeleton"))
}

struct Diameter {
    length: f64,
    path: Vec<(usize, usize)>,
}

#[derive(Clone, Copy)]
struct Frontier {
    cost: f64,
    node: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost, then node index
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

const TIE_EPS: f64 = 1e-9;

fn largest_component_diameter(m: &BinaryMask) -> Option<Diameter> {
    let mut pixels = component_pixels(m, Connectivity::Eight).into_iter().next()?;
    pixels.sort_by_key(|&(x, y)| (y, x));
    let n = pixels.len();
    if n == 1 {
        return Some(Diameter {
            length: 0.0,
            path: pixels,
        });
    }
    let (x0, y0) = (
        pixels.iter().map(|p| p.0).min()?,
        pixels.iter().map(|p| p.1).min()?,
    );
    let bw = pixels.iter().map(|p| p.0).max()? - x0 + 1;
    let bh = pixels.iter().map(|p| p.1).max()? - y0 + 1;
    let mut index = vec![u32::MAX; bw * bh];
    for (k, &(x, y)) in pixels.iter().enumerate() {
        index[(y - y0) * bw + (x - x0)] = k as u32;
    }
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (k, &(x, y)) in pixels.iter().enumerate() {
        for &(dx, dy) in Connectivity::Eight.offsets() {
            let nx = x as i64 + dx - x0 as i64;
            let ny = y as i64 + dy - y0 as i64;
            if nx < 0 || ny < 0 || nx >= bw as i64 || ny >= bh as i64 {
                continue;
            }
            let j = index[ny as usize * bw + nx as usize];
            if j != u32::MAX {
                let w = if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                adjacency[k].push((j as usize, w));
            }
        }
    }
    let mut sources: Vec<usize> = (0..n).filter(|&k| adjacency[k].len() <= 1).collect();
    if sources.is_empty() {
        sources.push(0);
    }
    let mut best: Option<(f64, Vec<usize>, usize)> = None;
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for &src in &sources {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        dist[src] = 0.0;
        heap.push(Frontier { cost: 0.0, node: src });
        while let Some(Frontier { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            for &(next, w) in &adjacency[node] {
                let c = cost + w;
                if c < dist[next] {
                    dist[next] = c;
                    prev[next] = node;
                    heap.push(Frontier { cost: c, node: next });
                }
            }
        }
        // first maximum in raster order
        let mut far = src;
        for k in 0..n {
            if dist[k] > dist[far] + TIE_EPS {
                far = k;
            }
        }
        if best.as_ref().is_none_or(|b| dist[far] > b.0 + TIE_EPS) {
            best = Some((dist[far], prev.clone(), far));
        }
    }
    let (length, prev, far) = best?;
    let mut path = Vec::new();
    let mut cur = far;
    while cur != usize::MAX {
        path.push(pixels[cur]);
        cur = prev[cur];
    }
    path.reverse();
    Some(Diameter { length, path })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(w: usize, h: usize, pts: impl IntoIterator<Item = (usize, usize)>) -> Skeleton {
        let mask = BinaryMask::from_pixels(w, h, pts);
        Skeleton {
            source_area: mask.area(),
            mask,
        }
    }

    #[test]
    fn single_pixel() {
        let m = BinaryMask::from_pixels(5, 5, [(2, 3)]);
        let s = skeletonize(&m);
        assert_eq!(s.mask, m);
        assert_eq!(skeleton_length(&s, LengthEstimator::PixelCount), 1.0);
        assert_eq!(skeleton_length(&s, LengthEstimator::GeodesicChain), 0.0);
        assert_eq!(skeleton_length(&s, LengthEstimator::polyline()), 0.0);
        assert_eq!(trace_diameter_path(&s).unwrap(), vec![(2, 3)]);
    }

    #[test]
    fn empty_mask() {
        let s = skeletonize(&BinaryMask::new(8, 8));
        assert!(s.mask.is_empty());
        assert_eq!(skeleton_length(&s, LengthEstimator::GeodesicChain), 0.0);
        assert_eq!(longest_fragment_length(&BinaryMask::new(8, 8), LengthEstimator::PixelCount), 0.0);
        assert!(matches!(trace_diameter_path(&s), Err(Error::Empty(_))));
    }

    #[test]
    fn horizontal_path() {
        let s = line(120, 5, (10..110).map(|x| (x, 2)));
        assert_eq!(skeleton_length(&s, LengthEstimator::PixelCount), 100.0);
        assert!((skeleton_length(&s, LengthEstimator::GeodesicChain) - 99.0).abs() < 1e-9);
        assert!((skeleton_length(&s, LengthEstimator::polyline()) - 99.0).abs() < 1e-9);
        let path = trace_diameter_path(&s).unwrap();
        assert_eq!(path, (10..110).map(|x| (x, 2)).collect::<Vec<_>>());
    }

    #[test]
    fn diagonal_path() {
        let s = line(110, 110, (0..100).map(|i| (i + 3, i + 3)));
        let g = skeleton_length(&s, LengthEstimator::GeodesicChain);
        assert!((g - 99.0 * std::f64::consts::SQRT_2).abs() < 1e-9, "{g}");
    }

    #[test]
    fn cycle_uses_smallest_pixel_as_source() {
        // a diamond ring has no end points
        let ring = BinaryMask::from_ascii(&["..#..", ".#.#.", "#...#", ".#.#.", "..#.."]).unwrap();
        let s = Skeleton {
            mask: ring,
            source_area: 8,
        };
        let g = skeleton_length(&s, LengthEstimator::GeodesicChain);
        assert!((g - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
        assert_eq!(trace_diameter_path(&s).unwrap()[0], (2, 0));
    }

    #[test]
    fn bar_thins_to_a_line() {
        let bar = BinaryMask::from_fn(110, 9, |x, y| (4..105).contains(&x) && (3..6).contains(&y));
        let s = skeletonize(&bar);
        assert!(s.mask.is_subset_of(&bar));
        let n = s.mask.area();
        assert!((95..=105).contains(&n), "{n}");
        assert!(s.mask.iter_ones().all(|(_, y)| y == 4));
    }

    #[test]
    fn fragments() {
        let m = BinaryMask::from_fn(200, 20, |x, y| {
            (3..6).contains(&y) && ((5..105).contains(&x) || (120..170).contains(&x))
        });
        let s = skeletonize(&m);
        let lens = fragment_lengths(&s, LengthEstimator::GeodesicChain);
        assert_eq!(lens.len(), 2);
        assert!(lens[0] > lens[1]);
        assert_eq!(longest_fragment_length(&m, LengthEstimator::GeodesicChain), lens[0]);
    }

    #[test]
    fn estimator_validation() {
        assert!(LengthEstimator::PolylineFit { epsilon: 0.0 }.validate().is_err());
        assert!(LengthEstimator::polyline().validate().is_ok());
    }
}
