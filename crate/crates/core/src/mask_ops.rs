//! Binary-mask algebra: overlap measures, components and post-processing.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, PixelBox};

/// Pixel adjacency used for component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(i64, i64)] {
        const FOUR: [(i64, i64); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
        const EIGHT: [(i64, i64); 8] = [
            (-1, -1),
            (0, -1),
            (1, -1),
            (-1, 0),
            (1, 0),
            (-1, 1),
            (0, 1),
            (1, 1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Mask intersection over union; 0 when both masks are empty.
pub fn iou_mask(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.check_shape(b)?;
    let (mut inter, mut union) = (0u64, 0u64);
    for (x, y) in a.words().iter().zip(b.words()) {
        inter += (x & y).count_ones() as u64;
        union += (x | y).count_ones() as u64;
    }
    Ok(if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    })
}

/// Box IoU counting pixels inclusively.
pub fn iou_box(a: &PixelBox, b: &PixelBox) -> f64 {
    let inter = a.intersection(b).map_or(0, |i| i.area());
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

pub fn bounding_box(m: &BinaryMask) -> Result<PixelBox> {
    m.bbox().ok_or(Error::Empty("bounding box of an empty mask"))
}

/// Pixel lists of each component, largest first; ties keep raster order of
/// each component's first pixel.
pub(crate) fn component_pixels(m: &BinaryMask, connectivity: Connectivity) -> Vec<Vec<(usize, usize)>> {
    let Some(bbox) = m.bbox() else {
        return Vec::new();
    };
    let (bw, bh) = (bbox.width(), bbox.height());
    let mut seen = vec![false; bw * bh];
    let local = |x: usize, y: usize| (y - bbox.y_min) * bw + (x - bbox.x_min);
    let mut comps: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut queue = VecDeque::new();
    for (x, y) in m.iter_ones() {
        if seen[local(x, y)] {
            continue;
        }
        seen[local(x, y)] = true;
        let mut comp = Vec::new();
        queue.push_back((x, y));
        while let Some((cx, cy)) = queue.pop_front() {
            comp.push((cx, cy));
            for &(dx, dy) in connectivity.offsets() {
                let nx = cx as i64 + dx;
                let ny = cy as i64 + dy;
                if nx < bbox.x_min as i64
                    || ny < bbox.y_min as i64
                    || nx > bbox.x_max as i64
                    || ny > bbox.y_max as i64
                {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let li = local(nx, ny);
                if !seen[li] && m.get(nx, ny) {
                    seen[li] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
        comps.push(comp);
    }
    // stable: equal areas stay in discovery (raster) order
    comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
    comps
}

/// Splits a mask into its connected components, each on the original canvas.
pub fn connected_components(m: &BinaryMask, connectivity: Connectivity) -> Vec<BinaryMask> {
    component_pixels(m, connectivity)
        .into_iter()
        .map(|pixels| BinaryMask::from_pixels(m.width(), m.height(), pixels))
        .collect()
}

/// Sets every background pixel that cannot reach the canvas border through
/// 4-connected background.
pub fn fill_holes(m: &BinaryMask) -> BinaryMask {
    let (w, h) = (m.width(), m.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    let seed = |x: usize, y: usize, outside: &mut Vec<bool>, queue: &mut VecDeque<(usize, usize)>| {
        let i = y * w + x;
        if !m.get_index(i) && !outside[i] {
            outside[i] = true;
            queue.push_back((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut outside, &mut queue);
        seed(x, h - 1, &mut outside, &mut queue);
    }
    for y in 0..h {
        seed(0, y, &mut outside, &mut queue);
        seed(w - 1, y, &mut outside, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        for &(dx, dy) in Connectivity::Four.offsets() {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            seed(nx as usize, ny as usize, &mut outside, &mut queue);
        }
    }
    let mut out = m.clone();
    for (i, &o) in outside.iter().enumerate() {
        if !o {
            out.set_index(i, true);
        }
    }
    out
}

/// Offsets `(dx, dy)` with `dx² + dy² <= radius²`.
pub fn disc_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut v = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                v.push((dx, dy));
            }
        }
    }
    v
}

/// Disc dilation; results are clipped to the canvas.
pub fn dilate(m: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return m.clone();
    }
    let se = disc_offsets(radius);
    let mut out = BinaryMask::new(m.width(), m.height());
    for (x, y) in m.iter_ones() {
        for &(dx, dy) in &se {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < m.width() && (ny as usize) < m.height() {
                out.set(nx as usize, ny as usize, true);
            }
        }
    }
    out
}

/// Disc erosion. Structuring-element positions that fall outside the canvas
/// are ignored, which makes this the exact adjoint of [`dilate`].
pub fn erode(m: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return m.clone();
    }
    let se = disc_offsets(radius);
    let (w, h) = (m.width() as i64, m.height() as i64);
    let mut out = BinaryMask::new(m.width(), m.height());
    for (x, y) in m.iter_ones() {
        let keep = se.iter().all(|&(dx, dy)| {
            let nx = x as i64 + dx;
            let ny = y as i64 + dy;
            nx < 0 || ny < 0 || nx >= w || ny >= h || m.get(nx as usize, ny as usize)
        });
        if keep {
            out.set(x, y, true);
        }
    }
    out
}

/// Dilation followed by erosion with a disc of the given radius.
pub fn morphological_close(m: &BinaryMask, radius: usize) -> BinaryMask {
    erode(&dilate(m, radius), radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> BinaryMask {
        BinaryMask::from_ascii(rows).unwrap()
    }

    #[test]
    fn iou_examples() {
        let a = mask(&["##..", "##..", "....", "...."]);
        assert_eq!(iou_mask(&a, &a).unwrap(), 1.0);
        let b = mask(&["....", "....", "..##", "..##"]);
        assert_eq!(iou_mask(&a, &b).unwrap(), 0.0);
        let c = mask(&[".##.", ".##.", "....", "...."]);
        assert!((iou_mask(&a, &c).unwrap() - 2.0 / 6.0).abs() < 1e-12);
        let empty = BinaryMask::new(4, 4);
        assert_eq!(iou_mask(&empty, &empty).unwrap(), 0.0);
        assert!(matches!(
            iou_mask(&a, &BinaryMask::new(3, 4)),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn box_iou_examples() {
        let a = PixelBox::new(0, 0, 9, 9).unwrap();
        assert_eq!(iou_box(&a, &a), 1.0);
        let touching = PixelBox::new(10, 0, 19, 9).unwrap();
        assert_eq!(iou_box(&a, &touching), 0.0);
        let b = PixelBox::new(5, 0, 14, 9).unwrap();
        assert!((iou_box(&a, &b) - 50.0 / 150.0).abs() < 1e-12);
    }

    #[test]
    fn bbox_examples() {
        let m = BinaryMask::from_pixels(10, 10, [(3, 7)]);
        assert_eq!(bounding_box(&m).unwrap(), PixelBox::new(3, 7, 3, 7).unwrap());
        let full = BinaryMask::filled(6, 4);
        assert_eq!(bounding_box(&full).unwrap(), PixelBox::new(0, 0, 5, 3).unwrap());
        let diag = BinaryMask::from_pixels(10, 10, [(0, 0), (4, 4)]);
        assert_eq!(bounding_box(&diag).unwrap(), PixelBox::new(0, 0, 4, 4).unwrap());
        assert!(matches!(bounding_box(&BinaryMask::new(3, 3)), Err(Error::Empty(_))));
    }

    #[test]
    fn component_examples() {
        assert!(connected_components(&BinaryMask::new(5, 5), Connectivity::Eight).is_empty());
        let two = BinaryMask::from_pixels(5, 5, [(0, 0), (3, 3)]);
        let cc = connected_components(&two, Connectivity::Eight);
        assert_eq!(cc.len(), 2);
        assert!(cc.iter().all(|c| c.area() == 1));
        let diag = BinaryMask::from_pixels(5, 5, [(1, 1), (2, 2)]);
        assert_eq!(connected_components(&diag, Connectivity::Four).len(), 2);
        assert_eq!(connected_components(&diag, Connectivity::Eight).len(), 1);
    }

    #[test]
    fn component_order_is_area_then_position() {
        let m = mask(&["#..##", "....#", "#....", "#...#"]);
        let cc = connected_components(&m, Connectivity::Eight);
        let firsts: Vec<_> = cc.iter().map(|c| (c.area(), c.iter_ones().next().unwrap())).collect();
        assert_eq!(firsts, vec![(3, (3, 0)), (2, (0, 2)), (1, (0, 0)), (1, (4, 3))]);
    }

    #[test]
    fn fill_ring() {
        let ring = mask(&[".....", ".###.", ".#.#.", ".###.", "....."]);
        let filled = fill_holes(&ring);
        assert_eq!(filled, mask(&[".....", ".###.", ".###.", ".###.", "....."]));
        assert_eq!(fill_holes(&filled), filled);
    }

    #[test]
    fn fill_leaves_open_curve() {
        let c = mask(&["......", ".####.", ".#....", ".#....", ".####.", "......"]);
        assert_eq!(fill_holes(&c), c);
    }

    #[test]
    fn fill_uses_four_connected_background() {
        // the centre is enclosed for 4-connected background even though it
        // touches the outside diagonally through the corner gap
        let m = mask(&["....", ".##.", "#..#", ".##."]);
        let f = fill_holes(&m);
        assert!(f.get(1, 2) && f.get(2, 2));
    }

    #[test]
    fn closing_examples() {
        let sq = mask(&["......", ".###..", ".###..", ".###..", "......"]);
        assert_eq!(morphological_close(&sq, 0), sq);
        for r in 1..4 {
            assert!(sq.is_subset_of(&morphological_close(&sq, r)));
        }
    }

    #[test]
    fn disc_has_expected_size() {
        assert_eq!(disc_offsets(0).len(), 1);
        assert_eq!(disc_offsets(1).len(), 5);
        assert_eq!(disc_offsets(2).len(), 13);
    }
}
