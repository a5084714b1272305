use super::{score_order, IouKind, IouMatrix, ScoredMask};
use crate::error::Result;
use crate::mask::BinaryMask;

/// Greedy non-maximum suppression. Returns the indices of the kept
/// predictions in descending score order; a prediction is suppressed when
/// its IoU with an already kept one exceeds `threshold`.
pub fn nms_indices(preds: &[ScoredMask], threshold: f64, level: IouKind) -> Result<Vec<usize>> {
    let masks: Vec<&BinaryMask> = preds.iter().map(|p| &p.mask).collect();
    let ious = IouMatrix::compute(&masks, &masks, level)?;
    let mut kept: Vec<usize> = Vec::new();
    for i in score_order(preds.iter().map(|p| p.score)) {
        if kept.iter().all(|&k| ious.get(k, i) <= threshold) {
            kept.push(i);
        }
    }
    Ok(kept)
}

pub fn mask_nms(preds: &[ScoredMask], threshold: f64, level: IouKind) -> Result<Vec<ScoredMask>> {
    Ok(nms_indices(preds, threshold, level)?
        .into_iter()
        .map(|i| preds[i].clone())
        .collect())
}
