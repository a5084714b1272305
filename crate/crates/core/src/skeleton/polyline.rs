use crate::error::{Error, Result};

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return (p.0 - a.0).hypot(p.1 - a.1);
    }
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    (p.0 - a.0 - t * dx).hypot(p.1 - a.1 - t * dy)
}

/// Douglas-Peucker simplification. Endpoints are kept and every input point
/// ends up within `epsilon` of the output polyline.
pub fn simplify_polyline(path: &[(f64, f64)], epsilon: f64) -> Result<Vec<(f64, f64)>> {
    if path.len() < 2 {
        return Err(Error::DegeneratePath(path.len()));
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Range(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mut keep = vec![false; path.len()];
    keep[0] = true;
    keep[path.len() - 1] = true;
    let mut stack = vec![(0, path.len() - 1)];
    while let Some((first, last)) = stack.pop() {
        if last <= first + 1 {
            continue;
        }
        let (mut worst, mut worst_d) = (first, -1.0);
        for i in first + 1..last {
            let d = segment_distance(path[i], path[first], path[last]);
            if d > worst_d {
                worst = i;
                worst_d = d;
            }
        }
        if worst_d > epsilon {
            keep[worst] = true;
            stack.push((first, worst));
            stack.push((worst, last));
        }
    }
    Ok(path
        .iter()
        .zip(keep)
        .filter_map(|(&p, k)| k.then_some(p))
        .collect())
}

pub fn polyline_length(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_collapses_to_endpoints() {
        let path: Vec<_> = (0..20).map(|i| (i as f64, 2.0 * i as f64)).collect();
        let s = simplify_polyline(&path, 0.01).unwrap();
        assert_eq!(s, vec![(0.0, 0.0), (19.0, 38.0)]);
    }

    #[test]
    fn right_angle_keeps_corner() {
        let mut path: Vec<_> = (0..=10).map(|i| (i as f64, 0.0)).collect();
        path.extend((1..=10).map(|i| (10.0, i as f64)));
        let s = simplify_polyline(&path, 0.5).unwrap();
        assert_eq!(s, vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)]);
        assert_eq!(polyline_length(&s), 20.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(simplify_polyline(&[(0.0, 0.0)], 1.0), Err(Error::DegeneratePath(1))));
        assert!(matches!(
            simplify_polyline(&[(0.0, 0.0), (1.0, 0.0)], 0.0),
            Err(Error::Range(_))
        ));
    }
}
