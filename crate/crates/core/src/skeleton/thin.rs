//! Topology-preserving thinning.
//!
//! Border pixels are peeled in four directional sub-passes (north, south,
//! east, west). Within a sub-pass candidates are deleted one at a time and
//! re-checked at deletion, so every removed pixel is simple with respect to
//! the current image (8-connected foreground, 4-connected background) and
//! topology is preserved. Pixels with fewer than two neighbours are line
//! ends and stay. Once peeling converges, any remaining 2x2 block loses a
//! pixel whose removal keeps its neighbourhood 8-connected.

use std::sync::OnceLock;

use crate::mask::BinaryMask;

// Neighbour bits, clockwise from north.
const N: u8 = 1;
#[cfg(test)]
const NE: u8 = 1 << 1;
const E: u8 = 1 << 2;
#[cfg(test)]
const SE: u8 = 1 << 3;
const S: u8 = 1 << 4;
#[cfg(test)]
const SW: u8 = 1 << 5;
const W: u8 = 1 << 6;
#[cfg(test)]
const NW: u8 = 1 << 7;

/// Ring positions `(dx, dy)` in bit order.
const RING: [(i64, i64); 8] = [(0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1)];

struct Tables {
    simple: [bool; 256],
    /// Number of 8-connected foreground groups within the ring.
    fg_groups: [u8; 256],
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut simple = [false; 256];
        let mut fg_groups = [0u8; 256];
        for code in 0..256usize {
            let fg = |i: usize| code >> i & 1 == 1;
            let adjacent8 = |a: usize, b: usize| {
                let (pa, pb) = (RING[a], RING[b]);
                (pa.0 - pb.0).abs() <= 1 && (pa.1 - pb.1).abs() <= 1
            };
            let adjacent4 = |a: usize, b: usize| {
                let (pa, pb) = (RING[a], RING[b]);
                (pa.0 - pb.0).abs() + (pa.1 - pb.1).abs() == 1
            };
            let groups = |member: &dyn Fn(usize) -> bool, adj: &dyn Fn(usize, usize) -> bool| {
                let mut label = [usize::MAX; 8];
                let mut out: Vec<Vec<usize>> = Vec::new();
                for start in 0..8 {
                    if !member(start) || label[start] != usize::MAX {
                        continue;
                    }
                    let id = out.len();
                    let mut stack = vec![start];
                    label[start] = id;
                    let mut group = Vec::new();
                    while let Some(a) = stack.pop() {
                        group.push(a);
                        for b in 0..8 {
                            if member(b) && label[b] == usize::MAX && adj(a, b) {
                                label[b] = id;
                                stack.push(b);
                            }
                        }
                    }
                    out.push(group);
                }
                out
            };
            let fg8 = groups(&|i| fg(i), &adjacent8);
            let bg4 = groups(&|i| !fg(i), &adjacent4);
            // only background groups touching a 4-neighbour of the centre count
            let bg_touching = bg4.iter().filter(|g| g.iter().any(|&i| i % 2 == 0)).count();
            fg_groups[code] = fg8.len() as u8;
            simple[code] = fg8.len() == 1 && bg_touching == 1;
        }
        Tables { simple, fg_groups }
    })
}

/// Working copy of the mask cropped to its bounding box with a one-pixel
/// background frame, so neighbour lookups never leave the buffer.
struct Grid {
    stride: usize,
    cells: Vec<u8>,
}

impl Grid {
    #[inline]
    fn code(&self, i: usize) -> u8 {
        let s = self.stride;
        let c = &self.cells;
        (c[i - s] & 1)
            | (c[i - s + 1] & 1) << 1
            | (c[i + 1] & 1) << 2
            | (c[i + s + 1] & 1) << 3
            | (c[i + s] & 1) << 4
            | (c[i + s - 1] & 1) << 5
            | (c[i - 1] & 1) << 6
            | (c[i - s - 1] & 1) << 7
    }
}

pub(crate) fn thin(m: &BinaryMask) -> BinaryMask {
    let Some(bbox) = m.bbox() else {
        return m.clone();
    };
    let stride = bbox.width() + 2;
    let rows = bbox.height() + 2;
    let mut grid = Grid {
        stride,
        cells: vec![0; stride * rows],
    };
    let to_local = |x: usize, y: usize| (y - bbox.y_min + 1) * stride + (x - bbox.x_min + 1);
    let mut active: Vec<usize> = m.iter_ones().map(|(x, y)| to_local(x, y)).collect();
    for &i in &active {
        grid.cells[i] = 1;
    }
    let t = tables();
    loop {
        loop {
            let mut changed = false;
            for dir in [N, S, E, W] {
                let candidates: Vec<usize> = active
                    .iter()
                    .copied()
                    .filter(|&i| {
                        let c = grid.code(i);
                        grid.cells[i] == 1 && c & dir == 0 && c.count_ones() >= 2 && t.simple[c as usize]
                    })
                    .collect();
                for i in candidates {
                    let c = grid.code(i);
                    if c.count_ones() >= 2 && t.simple[c as usize] {
                        grid.cells[i] = 0;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
            active.retain(|&i| grid.cells[i] == 1);
        }
        if !break_blocks(&mut grid, &active, t) {
            break;
        }
        active.retain(|&i| grid.cells[i] == 1);
    }
    let mut out = BinaryMask::new(m.width(), m.height());
    for &i in &active {
        let (ly, lx) = (i / stride, i % stride);
        out.set(lx - 1 + bbox.x_min, ly - 1 + bbox.y_min, true);
    }
    out
}

/// Removes one pixel from each 2x2 block where that keeps the block's
/// neighbourhood connected. Returns whether anything changed.
fn break_blocks(grid: &mut Grid, active: &[usize], t: &Tables) -> bool {
    let s = grid.stride;
    let mut changed = false;
    for &i in active {
        // i is the top-left of a candidate block
        let block = [i, i + 1, i + s, i + s + 1];
        if block.iter().any(|&j| grid.cells[j] == 0) {
            continue;
        }
        for j in block {
            let c = grid.code(j);
            if t.fg_groups[c as usize] == 1 {
                grid.cells[j] = 0;
                changed = true;
                break;
            }
        }
    }
    changed
}
