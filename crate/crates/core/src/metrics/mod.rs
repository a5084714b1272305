//! Length-aware recall, COCO-style average precision and non-maximum
//! suppression.

mod ap;
mod evaluate;
mod lar;
mod nms;

use serde::{Deserialize, Serialize};

pub use ap::{average_precision, map_summary, pr_curve, ApResult, MapSummary, PrCurve, MAP_THRESHOLDS};
pub use evaluate::{evaluate_dataset, Counts, EvaluationReport, ImageReport, InstanceRecord, REPORT_SCHEMA_VERSION};
pub use lar::{match_lar, LarResult, MatchRecord};
pub use nms::{mask_nms, nms_indices};

use crate::error::{Error, Result};
use crate::mask::{BinaryMask, PixelBox};
use crate::mask_ops::{iou_box, iou_mask};
use crate::skeleton::LengthEstimator;

/// How a ground-truth instance claims a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingMode {
    /// Ground truth in list order; a prediction is removed only when matched.
    #[default]
    PaperOrder,
    /// Ground truth in list order; the best-overlapping prediction is removed
    /// whether or not it reaches the threshold.
    StrictPaper,
    /// All pairs by descending IoU, independent of list order.
    GlobalGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub iou_threshold: f64,
    pub matching_mode: MatchingMode,
    pub estimator: LengthEstimator,
    /// Predictions scoring below this are ignored.
    pub score_threshold: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            iou_threshold: 0.5,
            matching_mode: MatchingMode::PaperOrder,
            estimator: LengthEstimator::GeodesicChain,
            score_threshold: 0.0,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            return Err(Error::Range(format!(
                "iou threshold must be in (0, 1], got {}",
                self.iou_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::Range(format!(
                "score threshold must be in [0, 1], got {}",
                self.score_threshold
            )));
        }
        self.estimator.validate()
    }
}

/// Overlap measured on masks or on their bounding boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IouKind {
    #[default]
    Mask,
    Box,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMask {
    pub mask: BinaryMask,
    pub score: f64,
}

impl ScoredMask {
    pub fn new(mask: BinaryMask, score: f64) -> Self {
        ScoredMask { mask, score }
    }
}

/// Dense `rows x cols` IoU table.
#[derive(Debug, Clone)]
pub(crate) struct IouMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl IouMatrix {
    pub(crate) fn compute(rows: &[&BinaryMask], cols: &[&BinaryMask], kind: IouKind) -> Result<Self> {
        if let Some(first) = rows.first().or(cols.first()) {
            for m in rows.iter().chain(cols) {
                first.check_shape(m)?;
            }
        }
        let row_boxes: Vec<Option<PixelBox>> = rows.iter().map(|m| m.bbox()).collect();
        let col_boxes: Vec<Option<PixelBox>> = cols.iter().map(|m| m.bbox()).collect();
        let mut values = vec![0.0; rows.len() * cols.len()];
        for (i, rb) in row_boxes.iter().enumerate() {
            for (j, cb) in col_boxes.iter().enumerate() {
                let (Some(rb), Some(cb)) = (rb, cb) else {
                    continue;
                };
                if rb.intersection(cb).is_none() {
                    continue;
                }
                values[i * cols.len() + j] = match kind {
                    IouKind::Mask => iou_mask(rows[i], cols[j])?,
                    IouKind::Box => iou_box(rb, cb),
                };
            }
        }
        Ok(IouMatrix {
            rows: rows.len(),
            cols: cols.len(),
            values,
        })
    }

    #[inline]
    pub(crate) fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub(crate) fn transposed(&self) -> IouMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.get(i, j));
            }
        }
        IouMatrix {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    pub(crate) fn rows(&self) -> usize {
        self.rows
    }

    pub(crate) fn cols(&self) -> usize {
        self.cols
    }
}

/// Indices sorted by descending score; equal scores keep input order.
pub(crate) fn score_order(scores: impl IntoIterator<Item = f64>) -> Vec<usize> {
    let scores: Vec<f64> = scores.into_iter().collect();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}
