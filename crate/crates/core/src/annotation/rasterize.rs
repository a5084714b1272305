use super::rle::rle_decode;
use super::SegmentationGeometry;
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

/// Converts annotation geometry to a mask on a `width` x `height` canvas.
///
/// Polygon rings are filled with the even-odd rule sampled at pixel centres:
/// pixel `(i, j)` is set iff `(i + 0.5, j + 0.5)` is inside. Several rings
/// are unioned. RLE geometry must match the canvas.
pub fn rasterize(geometry: &SegmentationGeometry, width: usize, height: usize) -> Result<BinaryMask> {
    if width == 0 || height == 0 {
        return Err(Error::Shape("canvas must be at least 1x1".into()));
    }
    match geometry {
        SegmentationGeometry::Polygons(rings) => {
            let mut mask = BinaryMask::new(width, height);
            for ring in rings {
                rasterize_polygon(ring, &mut mask)?;
            }
            Ok(mask)
        }
        SegmentationGeometry::Rle(rle) => {
            if rle.width != width || rle.height != height {
                return Err(Error::Shape(format!(
                    "rle size {}x{} does not match canvas {width}x{height}",
                    rle.width, rle.height
                )));
            }
            rle_decode(rle)
        }
    }
}

/// Fills one even-odd ring into `mask` (union with what is already set).
pub fn rasterize_polygon(ring: &[(f64, f64)], mask: &mut BinaryMask) -> Result<()> {
    if ring.len() < 3 {
        return Err(Error::Geometry(format!(
            "polygon ring needs at least 3 vertices, got {}",
            ring.len()
        )));
    }
    let (w, h) = (mask.width(), mask.height());
    let y_lo = ring.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y_hi = ring.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let row_start = ((y_lo - 0.5).ceil().max(0.0)) as usize;
    let row_end = ((y_hi - 0.5).floor().min(h as f64 - 1.0)).max(-1.0);
    if row_end < row_start as f64 {
        return Ok(());
    }
    let mut xs: Vec<f64> = Vec::new();
    for j in row_start..=row_end as usize {
        let yc = j as f64 + 0.5;
        xs.clear();
        for k in 0..ring.len() {
            let (x0, y0) = ring[k];
            let (x1, y1) = ring[(k + 1) % ring.len()];
            if (y0 > yc) != (y1 > yc) {
                xs.push(x0 + (yc - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // centres c with pair[0] <= c < pair[1]
            let first = (pair[0] - 0.5).ceil().max(0.0);
            let last = (pair[1] - 0.5).ceil() - 1.0;
            if last < first {
                continue;
            }
            let last = last.min(w as f64 - 1.0);
            let mut i = first as usize;
            while (i as f64) <= last {
                mask.set(i, j, true);
                i += 1;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(points: &[(f64, f64)]) -> SegmentationGeometry {
        SegmentationGeometry::Polygons(vec![points.to_vec()])
    }

    #[test]
    fn rectangle_area() {
        let g = poly(&[(0.0, 0.0), (10.0, 0.0), (10.0, 5.0), (0.0, 5.0)]);
        assert_eq!(rasterize(&g, 20, 20).unwrap().area(), 50);
    }

    #[test]
    fn triangle_excludes_centres_on_hypotenuse() {
        let g = poly(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]);
        assert_eq!(rasterize(&g, 10, 10).unwrap().area(), 6);
    }

    #[test]
    fn rings_are_unioned() {
        let g = SegmentationGeometry::Polygons(vec![
            vec![(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)],
            vec![(2.0, 2.0), (6.0, 2.0), (6.0, 6.0), (2.0, 6.0)],
        ]);
        assert_eq!(rasterize(&g, 8, 8).unwrap().area(), 16 + 16 - 4);
    }

    #[test]
    fn self_overlapping_ring_is_even_odd() {
        // two loops of a figure drawn twice over the same square: the overlap cancels
        let g = poly(&[
            (0.0, 0.0),
            (4.0, 0.0),
            (4.0, 4.0),
            (0.0, 4.0),
            (0.0, 0.0),
            (4.0, 0.0),
            (4.0, 4.0),
            (0.0, 4.0),
        ]);
        assert_eq!(rasterize(&g, 8, 8).unwrap().area(), 0);
    }

    #[test]
    fn degenerate_ring() {
        let g = poly(&[(0.0, 0.0), (4.0, 0.0)]);
        assert!(matches!(rasterize(&g, 8, 8), Err(Error::Geometry(_))));
    }

    #[test]
    fn polygon_outside_canvas_is_clipped() {
        let g = poly(&[(-5.0, -5.0), (3.0, -5.0), (3.0, 2.0), (-5.0, 2.0)]);
        assert_eq!(rasterize(&g, 10, 10).unwrap().area(), 6);
    }
}
