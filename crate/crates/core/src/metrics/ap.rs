use serde::{Deserialize, Serialize};

use super::{score_order, IouKind, IouMatrix, ScoredMask};
use crate::error::Result;
use crate::mask::BinaryMask;

/// IoU thresholds 0.50, 0.55, ..., 0.90.
pub const MAP_THRESHOLDS: [f64; 9] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90];

/// `(recall, precision)` after each prediction in descending score order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApResult {
    pub ap: f64,
    pub curve: PrCurve,
    /// Why the AP was defined rather than computed, if it was.
    pub diagnostic: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSummary {
    pub map50: f64,
    pub map50_90: f64,
    /// `(threshold, AP)` in threshold order.
    pub ap_by_threshold: Vec<(f64, f64)>,
}

impl MapSummary {
    pub(crate) fn from_aps(aps: &[f64]) -> Self {
        MapSummary {
            map50: aps[0],
            map50_90: aps.iter().sum::<f64>() / aps.len() as f64,
            ap_by_threshold: MAP_THRESHOLDS.iter().copied().zip(aps.iter().copied()).collect(),
        }
    }
}

/// True-positive flag of each prediction on one image. Predictions are
/// visited in `order` and take the unmatched ground truth they overlap most.
pub(crate) fn true_positives(ious: &IouMatrix, order: &[usize], threshold: f64) -> Vec<bool> {
    // ious: rows are predictions, columns ground truth
    let mut gt_taken = vec![false; ious.cols()];
    let mut tp = vec![false; ious.rows()];
    for &p in order {
        let mut best: Option<usize> = None;
        for g in 0..ious.cols() {
            if !gt_taken[g] && best.is_none_or(|b| ious.get(p, g) > ious.get(p, b)) {
                best = Some(g);
            }
        }
        if let Some(g) = best {
            if ious.get(p, g) >= threshold {
                gt_taken[g] = true;
                tp[p] = true;
            }
        }
    }
    tp
}

/// PR curve from true-positive flags already in descending score order.
pub(crate) fn curve_from_flags(flags: impl IntoIterator<Item = bool>, n_gt: usize) -> PrCurve {
    let (mut tp, mut fp) = (0usize, 0usize);
    let points = flags
        .into_iter()
        .map(|hit| {
            if hit {
                tp += 1;
            } else {
                fp += 1;
            }
            (tp as f64 / n_gt as f64, tp as f64 / (tp + fp) as f64)
        })
        .collect();
    PrCurve { points }
}

/// 101-point interpolated area under a PR curve.
pub(crate) fn interpolated_ap(curve: &PrCurve) -> f64 {
    let pts = &curve.points;
    let mut envelope: Vec<f64> = pts.iter().map(|p| p.1).collect();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut sum = 0.0;
    let mut idx = 0;
    for r in 0..=100 {
        let level = r as f64 / 100.0;
        while idx < pts.len() && pts[idx].0 < level {
            idx += 1;
        }
        if idx < pts.len() {
            sum += envelope[idx];
        }
    }
    sum / 101.0
}

pub(crate) fn ap_from_flags(flags: impl IntoIterator<Item = bool>, n_gt: usize) -> ApResult {
    if n_gt == 0 {
        return ApResult {
            ap: 0.0,
            curve: PrCurve::default(),
            diagnostic: Some("no ground truth: AP defined as 0"),
        };
    }
    let curve = curve_from_flags(flags, n_gt);
    ApResult {
        ap: interpolated_ap(&curve),
        curve,
        diagnostic: None,
    }
}

fn pred_gt_ious(gts: &[BinaryMask], preds: &[ScoredMask], kind: IouKind) -> Result<IouMatrix> {
    let p: Vec<&BinaryMask> = preds.iter().map(|s| &s.mask).collect();
    let g: Vec<&BinaryMask> = gts.iter().collect();
    IouMatrix::compute(&p, &g, kind)
}

fn ap_at(ious: &IouMatrix, preds: &[ScoredMask], n_gt: usize, threshold: f64) -> ApResult {
    let order = score_order(preds.iter().map(|p| p.score));
    let tp = true_positives(ious, &order, threshold);
    ap_from_flags(order.iter().map(|&p| tp[p]), n_gt)
}

/// PR curve of `preds` against `gts` at one IoU threshold.
pub fn pr_curve(gts: &[BinaryMask], preds: &[ScoredMask], threshold: f64, kind: IouKind) -> Result<PrCurve> {
    let ious = pred_gt_ious(gts, preds, kind)?;
    let order = score_order(preds.iter().map(|p| p.score));
    let tp = true_positives(&ious, &order, threshold);
    Ok(curve_from_flags(order.iter().map(|&p| tp[p]), gts.len()))
}

pub fn average_precision(
    gts: &[BinaryMask],
    preds: &[ScoredMask],
    threshold: f64,
    kind: IouKind,
) -> Result<ApResult> {
    let ious = pred_gt_ious(gts, preds, kind)?;
    Ok(ap_at(&ious, preds, gts.len(), threshold))
}

pub fn map_summary(gts: &[BinaryMask], preds: &[ScoredMask], kind: IouKind) -> Result<MapSummary> {
    let ious = pred_gt_ious(gts, preds, kind)?;
    let aps: Vec<f64> = MAP_THRESHOLDS
        .iter()
        .map(|&t| ap_at(&ious, preds, gts.len(), t).ap)
        .collect();
    Ok(MapSummary::from_aps(&aps))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(x0: usize, w: usize) -> BinaryMask {
        BinaryMask::from_fn(40, 10, |x, y| (x0..x0 + w).contains(&x) && y < 5)
    }

    #[test]
    fn perfect_and_disjoint() {
        let g = vec![block(0, 10)];
        let ok = vec![ScoredMask::new(block(0, 10), 0.9)];
        assert_eq!(average_precision(&g, &ok, 0.5, IouKind::Mask).unwrap().ap, 1.0);
        let bad = vec![ScoredMask::new(block(20, 10), 0.9)];
        assert_eq!(average_precision(&g, &bad, 0.5, IouKind::Mask).unwrap().ap, 0.0);
    }

    #[test]
    fn only_the_middle_prediction_matches() {
        let g = vec![block(0, 10), block(20, 10)];
        let preds = vec![
            ScoredMask::new(block(12, 4), 0.9),
            ScoredMask::new(block(0, 10), 0.8),
            ScoredMask::new(block(34, 4), 0.7),
        ];
        let r = average_precision(&g, &preds, 0.5, IouKind::Mask).unwrap();
        assert_eq!(r.curve.points, vec![(0.0, 0.0), (0.5, 0.5), (0.5, 1.0 / 3.0)]);
        // envelope 0.5 for recall levels 0..=0.5 (51 levels), 0 above
        assert!((r.ap - 51.0 * 0.5 / 101.0).abs() < 1e-12);
    }

    #[test]
    fn empty_ground_truth() {
        let preds = vec![ScoredMask::new(block(0, 10), 0.9)];
        let r = average_precision(&[], &preds, 0.5, IouKind::Mask).unwrap();
        assert_eq!(r.ap, 0.0);
        assert!(r.diagnostic.is_some());
        assert!(average_precision(&[], &[], 0.5, IouKind::Mask).unwrap().diagnostic.is_some());
    }

    #[test]
    fn map_of_perfect_and_missing() {
        let g = vec![block(0, 10), block(20, 10)];
        let perfect: Vec<ScoredMask> = g.iter().map(|m| ScoredMask::new(m.clone(), 1.0)).collect();
        let s = map_summary(&g, &perfect, IouKind::Mask).unwrap();
        assert_eq!((s.map50, s.map50_90), (1.0, 1.0));
        let none = map_summary(&g, &[], IouKind::Box).unwrap();
        assert_eq!((none.map50, none.map50_90), (0.0, 0.0));
        assert_eq!(none.ap_by_threshold.len(), 9);
    }

    #[test]
    fn iou_of_exactly_point_seven() {
        // 7 of 10 columns overlap: IoU 0.7
        let g = vec![block(0, 10)];
        let p = vec![ScoredMask::new(block(0, 7), 1.0)];
        let s = map_summary(&g, &p, IouKind::Mask).unwrap();
        for &(t, ap) in &s.ap_by_threshold {
            assert_eq!(ap, if t <= 0.70 { 1.0 } else { 0.0 }, "{t}");
        }
        assert!((s.map50_90 - 5.0 / 9.0).abs() < 1e-12);
    }
}
