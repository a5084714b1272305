use serde::{Deserialize, Serialize};

use crate::mask::BinaryMask;

pub type Point = (f64, f64);

/// Parameters of one synthetic curvilinear instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    /// Control polygon of the composite quadratic curve, at least 3 points.
    pub control_points: Vec<Point>,
    /// Stroke width in pixels (odd).
    pub width: usize,
    pub canvas: (usize, usize),
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QuadBezier {
    p0: Point,
    p1: Point,
    p2: Point,
}

impl QuadBezier {
    fn at(&self, t: f64) -> Point {
        let u = 1.0 - t;
        (
            u * u * self.p0.0 + 2.0 * u * t * self.p1.0 + t * t * self.p2.0,
            u * u * self.p0.1 + 2.0 * u * t * self.p1.1 + t * t * self.p2.1,
        )
    }

    fn derivative(&self, t: f64) -> Point {
        let u = 1.0 - t;
        (
            2.0 * u * (self.p1.0 - self.p0.0) + 2.0 * t * (self.p2.0 - self.p1.0),
            2.0 * u * (self.p1.1 - self.p0.1) + 2.0 * t * (self.p2.1 - self.p1.1),
        )
    }

    fn sampled_length(&self, samples: usize) -> f64 {
        let mut len = 0.0;
        let mut prev = self.p0;
        for i in 1..=samples {
            let p = self.at(i as f64 / samples as f64);
            len += (p.0 - prev.0).hypot(p.1 - prev.1);
            prev = p;
        }
        len
    }
}

fn mid(a: Point, b: Point) -> Point {
    ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0)
}

/// Smooth centreline made of quadratic Bézier pieces joined with matching
/// tangents. Interior control points act as the pieces' middle handles and
/// the joins sit at edge midpoints of the control polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    segments: Vec<QuadBezier>,
    /// Cumulative arc length at the end of each segment.
    cumulative: Vec<f64>,
}

/// Relative change below which the sampled arc length is considered converged.
const LENGTH_TOLERANCE: f64 = 1e-4;

impl Centerline {
    /// Panics on fewer than 3 control points.
    pub fn from_control_points(q: &[Point]) -> Self {
        assert!(q.len() >= 3, "need at least 3 control points");
        let m = q.len() - 1;
        let mut segments = Vec::with_capacity(m - 1);
        if m == 2 {
            segments.push(QuadBezier {
                p0: q[0],
                p1: q[1],
                p2: q[2],
            });
        } else {
            for k in 1..m {
                let p0 = if k == 1 { q[0] } else { mid(q[k - 1], q[k]) };
                let p2 = if k == m - 1 { q[m] } else { mid(q[k], q[k + 1]) };
                segments.push(QuadBezier { p0, p1: q[k], p2 });
            }
        }
        let mut cumulative = Vec::with_capacity(segments.len());
        let mut total = 0.0;
        for s in &segments {
            total += converged_length(s);
            cumulative.push(total);
        }
        Centerline {
            segments,
            cumulative,
        }
    }

    /// Arc length, sampled until doubling the sample count changes it by
    /// less than 0.01%.
    pub fn length(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Point and unit tangent at the given fraction of arc length.
    pub fn point_at_fraction(&self, fraction: f64) -> (Point, Point) {
        let target = fraction.clamp(0.0, 1.0) * self.length();
        let k = self
            .cumulative
            .iter()
            .position(|&c| c >= target)
            .unwrap_or(self.segments.len() - 1);
        let seg = &self.segments[k];
        let start = if k == 0 { 0.0 } else { self.cumulative[k - 1] };
        let mut remaining = target - start;
        // walk the segment in small parameter steps
        const STEPS: usize = 2048;
        let mut prev = seg.p0;
        let mut t_hit = 1.0;
        for i in 1..=STEPS {
            let t = i as f64 / STEPS as f64;
            let p = seg.at(t);
            let d = (p.0 - prev.0).hypot(p.1 - prev.1);
            if d >= remaining {
                t_hit = t - (1.0 - remaining / d.max(f64::MIN_POSITIVE)) / STEPS as f64;
                break;
            }
            remaining -= d;
            prev = p;
        }
        let p = seg.at(t_hit);
        let d = seg.derivative(t_hit);
        let n = d.0.hypot(d.1).max(f64::MIN_POSITIVE);
        (p, (d.0 / n, d.1 / n))
    }

    /// Dense polyline with at most `step` pixels between consecutive points.
    pub fn sample(&self, step: f64) -> Vec<Point> {
        let mut pts = vec![self.segments[0].p0];
        for (k, seg) in self.segments.iter().enumerate() {
            let seg_len = self.cumulative[k] - if k == 0 { 0.0 } else { self.cumulative[k - 1] };
            let n = ((seg_len / step).ceil() as usize).max(1) * 2;
            for i in 1..=n {
                pts.push(seg.at(i as f64 / n as f64));
            }
        }
        pts
    }

    /// Axis-aligned bounds `(min, max)` of the sampled curve.
    pub fn bounds(&self) -> (Point, Point) {
        let pts = self.sample(1.0);
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in pts {
            lo = (lo.0.min(p.0), lo.1.min(p.1));
            hi = (hi.0.max(p.0), hi.1.max(p.1));
        }
        (lo, hi)
    }

    pub fn transformed(&self, f: impl Fn(Point) -> Point) -> Centerline {
        let segments: Vec<QuadBezier> = self
            .segments
            .iter()
            .map(|s| QuadBezier {
                p0: f(s.p0),
                p1: f(s.p1),
                p2: f(s.p2),
            })
            .collect();
        let mut cumulative = Vec::with_capacity(segments.len());
        let mut total = 0.0;
        for s in &segments {
            total += converged_length(s);
            cumulative.push(total);
        }
        Centerline {
            segments,
            cumulative,
        }
    }

    /// Stroke of the given width: pixels whose centre lies within `width / 2`
    /// of the centreline (round caps).
    pub fn render(&self, width: usize, canvas: (usize, usize)) -> BinaryMask {
        let r = width as f64 / 2.0;
        let mut mask = BinaryMask::new(canvas.0, canvas.1);
        let pts = self.sample(0.5);
        for w in pts.windows(2) {
            stamp_capsule(&mut mask, w[0], w[1], r);
        }
        mask
    }
}

fn converged_length(s: &QuadBezier) -> f64 {
    let mut n = 16;
    let mut len = s.sampled_length(n);
    loop {
        n *= 2;
        let next = s.sampled_length(n);
        if (next - len).abs() <= LENGTH_TOLERANCE * next || n >= 1 << 20 {
            return next;
        }
        len = next;
    }
}

fn stamp_capsule(mask: &mut BinaryMask, a: Point, b: Point, r: f64) {
    let x_lo = ((a.0.min(b.0) - r - 0.5).floor().max(0.0)) as usize;
    let y_lo = ((a.1.min(b.1) - r - 0.5).floor().max(0.0)) as usize;
    let x_hi = (a.0.max(b.0) + r).ceil().min(mask.width() as f64 - 1.0);
    let y_hi = (a.1.max(b.1) + r).ceil().min(mask.height() as f64 - 1.0);
    if x_hi < 0.0 || y_hi < 0.0 {
        return;
    }
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    for y in y_lo..=y_hi as usize {
        for x in x_lo..=x_hi as usize {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = if len2 == 0.0 {
                0.0
            } else {
                (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
            };
            let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
            if (px - cx).hypot(py - cy) <= r {
                mask.set(x, y, true);
            }
        }
    }
}
