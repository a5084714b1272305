use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

use super::{IouKind, IouMatrix, MatchConfig, MatchingMode};
use crate::error::Result;
use crate::mask::BinaryMask;
use crate::skeleton::{longest_fragment_length, skeleton_length, skeletonize};

/// Matching outcome for one ground-truth instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub gt_index: usize,
    pub matched_pred_index: Option<usize>,
    /// IoU with the matched prediction, or the best IoU left over when
    /// unmatched.
    pub iou: f64,
    pub gt_length: f64,
    pub pred_length: Option<f64>,
    pub relative_error: Option<f64>,
    pub lar: f64,
    /// The ground truth skeleton is empty, so no length comparison was made.
    pub degenerate_gt: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LarResult {
    pub records: Vec<MatchRecord>,
    /// Mean of `lar` over all ground truth; 0 when there is none.
    pub mean_lar: f64,
}

/// Length-aware recall of `preds` against `gts` on one canvas.
pub fn match_lar(gts: &[BinaryMask], preds: &[BinaryMask], config: &MatchConfig) -> Result<LarResult> {
    config.validate()?;
    let g: Vec<&BinaryMask> = gts.iter().collect();
    let p: Vec<&BinaryMask> = preds.iter().collect();
    let ious = IouMatrix::compute(&g, &p, IouKind::Mask)?;
    let records = match_with_ious(&g, &p, &ious, config);
    let lars: Vec<f64> = records.iter().map(|r| r.lar).collect();
    Ok(LarResult {
        mean_lar: mean(&lars),
        records,
    })
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Ground truth index -> (prediction index, IoU) for every matched pair.
fn assign(ious: &IouMatrix, mode: MatchingMode, t: f64) -> Vec<Option<usize>> {
    let (n_gt, n_pred) = (ious.rows(), ious.cols());
    let mut assigned = vec![None; n_gt];
    let mut taken = vec![false; n_pred];
    match mode {
        MatchingMode::PaperOrder | MatchingMode::StrictPaper => {
            for (i, slot) in assigned.iter_mut().enumerate() {
                let Some(j) = best_remaining(ious, i, &taken) else {
                    continue;
                };
                let iou = ious.get(i, j);
                if iou >= t {
                    *slot = Some(j);
                    taken[j] = true;
                } else if mode == MatchingMode::StrictPaper && iou > 0.0 {
                    taken[j] = true;
                }
            }
        }
        MatchingMode::GlobalGreedy => {
            let mut pairs: Vec<(usize, usize)> = (0..n_gt)
                .flat_map(|i| (0..n_pred).map(move |j| (i, j)))
                .filter(|&(i, j)| ious.get(i, j) >= t)
                .collect();
            // stable, so equal IoU keeps (gt, pred) order
            pairs.sort_by(|a, b| ious.get(b.0, b.1).total_cmp(&ious.get(a.0, a.1)));
            for (i, j) in pairs {
                if assigned[i].is_none() && !taken[j] {
                    assigned[i] = Some(j);
                    taken[j] = true;
                }
            }
        }
    }
    assigned
}

/// Highest-IoU prediction not yet taken; ties go to the lowest index.
fn best_remaining(ious: &IouMatrix, row: usize, taken: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for j in 0..ious.cols() {
        if taken[j] {
            continue;
        }
        if best.is_none_or(|b| ious.get(row, j) > ious.get(row, b)) {
            best = Some(j);
        }
    }
    best
}

pub(crate) fn match_with_ious(
    gts: &[&BinaryMask],
    preds: &[&BinaryMask],
    ious: &IouMatrix,
    config: &MatchConfig,
) -> Vec<MatchRecord> {
    let t = config.iou_threshold;
    let assigned = assign(ious, config.matching_mode, t);
    let pred_lengths: Vec<OnceCell<f64>> = vec![OnceCell::new(); preds.len()];
    let mut matched_preds = vec![false; preds.len()];
    for j in assigned.iter().flatten() {
        matched_preds[*j] = true;
    }
    gts.iter()
        .enumerate()
        .map(|(i, gt)| {
            let skeleton = skeletonize(gt);
            let degenerate = skeleton.mask.is_empty();
            let gt_length = skeleton_length(&skeleton, config.estimator);
            let Some(j) = assigned[i] else {
                // best overlap among predictions nobody claimed
                let iou = (0..preds.len())
                    .filter(|&j| !matched_preds[j])
                    .map(|j| ious.get(i, j))
                    .fold(0.0, f64::max);
                return MatchRecord {
                    gt_index: i,
                    matched_pred_index: None,
                    iou,
                    gt_length,
                    pred_length: None,
                    relative_error: None,
                    lar: 0.0,
                    degenerate_gt: degenerate,
                };
            };
            let pred_length = *pred_lengths[j].get_or_init(|| longest_fragment_length(preds[j], config.estimator));
            let relative_error = if degenerate {
                None
            } else if gt_length == 0.0 {
                Some(if pred_length == 0.0 { 0.0 } else { f64::INFINITY })
            } else {
                Some((gt_length - pred_length).abs() / gt_length)
            };
            let lar = relative_error.map_or(0.0, |e| (1.0 - e).max(0.0));
            MatchRecord {
                gt_index: i,
                matched_pred_index: Some(j),
                iou: ious.get(i, j),
                gt_length,
                pred_length: Some(pred_length),
                relative_error,
                lar,
                degenerate_gt: degenerate,
            }
        })
        .collect()
}
