use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ap::{ap_from_flags, true_positives, MapSummary, MAP_THRESHOLDS};
use super::lar::{match_with_ious, mean};
use super::{score_order, IouKind, IouMatrix, MatchConfig};
use crate::annotation::{DatasetDescriptor, GtInstance, ImageInfo, PredInstance};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub image_id: i64,
    pub gt_id: i64,
    /// Position of the matched prediction in the prediction input.
    pub matched_pred_index: Option<usize>,
    pub iou: f64,
    pub gt_length: f64,
    pub pred_length: Option<f64>,
    pub relative_error: Option<f64>,
    pub lar: f64,
    pub degenerate_gt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub image_id: i64,
    pub n_gt: usize,
    pub n_pred: usize,
    pub records: Vec<InstanceRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub n_images: usize,
    pub n_gt: usize,
    /// Predictions at or above the score threshold.
    pub n_pred: usize,
    pub n_matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub config: MatchConfig,
    pub counts: Counts,
    pub mean_lar: f64,
    /// Mask AP at 0.50.
    pub map50: f64,
    /// Mean mask AP over 0.50..=0.90.
    pub map50_90: f64,
    pub mask: MapSummary,
    #[serde(rename = "box")]
    pub bbox: MapSummary,
    pub images: Vec<ImageReport>,
    pub diagnostics: Vec<String>,
}

#[derive(Serialize)]
struct CsvRow {
    image_id: i64,
    gt_id: i64,
    matched: bool,
    iou: f64,
    gt_length: f64,
    pred_length: Option<f64>,
    e_i: Option<f64>,
    lar_i: f64,
}

impl EvaluationReport {
    pub fn records(&self) -> impl Iterator<Item = &InstanceRecord> {
        self.images.iter().flat_map(|i| i.records.iter())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per ground-truth instance.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in self.records() {
            w.serialize(CsvRow {
                image_id: r.image_id,
                gt_id: r.gt_id,
                matched: r.matched_pred_index.is_some(),
                iou: r.iou,
                gt_length: r.gt_length,
                pred_length: r.pred_length,
                e_i: r.relative_error,
                lar_i: r.lar,
            })
            .expect("csv row");
        }
        if self.counts.n_gt == 0 {
            // serde-driven headers are only written with the first row
            return "image_id,gt_id,matched,iou,gt_length,pred_length,e_i,lar_i\n".into();
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8")
    }
}

struct ImageOutcome {
    report: ImageReport,
    /// Per threshold: `(score, true positive)` in descending score order.
    mask_hits: Vec<Vec<(f64, bool)>>,
    box_hits: Vec<Vec<(f64, bool)>>,
}

fn evaluate_image(
    image: &ImageInfo,
    gts: &[&GtInstance],
    preds: &[(usize, &PredInstance)],
    config: &MatchConfig,
) -> Result<ImageOutcome> {
    let (w, h) = (image.width, image.height);
    let gt_masks = gts
        .iter()
        .map(|g| g.geometry.rasterize(w, h))
        .collect::<Result<Vec<BinaryMask>>>()?;
    let pred_masks = preds
        .iter()
        .map(|(_, p)| p.geometry.rasterize(w, h))
        .collect::<Result<Vec<BinaryMask>>>()?;
    let g: Vec<&BinaryMask> = gt_masks.iter().collect();
    let p: Vec<&BinaryMask> = pred_masks.iter().collect();
    let mask_ious = IouMatrix::compute(&g, &p, IouKind::Mask)?;
    let records = match_with_ious(&g, &p, &mask_ious, config)
        .into_iter()
        .map(|r| InstanceRecord {
            image_id: image.image_id,
            gt_id: gts[r.gt_index].annotation_id,
            matched_pred_index: r.matched_pred_index.map(|j| preds[j].0),
            iou: r.iou,
            gt_length: r.gt_length,
            pred_length: r.pred_length,
            relative_error: r.relative_error,
            lar: r.lar,
            degenerate_gt: r.degenerate_gt,
        })
        .collect();

    let order = score_order(preds.iter().map(|(_, p)| p.score));
    let hits = |pred_gt: &IouMatrix| -> Vec<Vec<(f64, bool)>> {
        MAP_THRESHOLDS
            .iter()
            .map(|&t| {
                let tp = true_positives(pred_gt, &order, t);
                order.iter().map(|&j| (preds[j].1.score, tp[j])).collect()
            })
            .collect()
    };
    let mask_hits = hits(&mask_ious.transposed());
    let box_hits = hits(&IouMatrix::compute(&p, &g, IouKind::Box)?);
    Ok(ImageOutcome {
        report: ImageReport {
            image_id: image.image_id,
            n_gt: gts.len(),
            n_pred: preds.len(),
            records,
        },
        mask_hits,
        box_hits,
    })
}

fn dataset_map(outcomes: &[ImageOutcome], n_gt: usize, pick: impl Fn(&ImageOutcome) -> &Vec<Vec<(f64, bool)>>) -> MapSummary {
    let aps: Vec<f64> = (0..MAP_THRESHOLDS.len())
        .map(|k| {
            let mut all: Vec<(f64, bool)> = outcomes.iter().flat_map(|o| pick(o)[k].iter().copied()).collect();
            // stable: ties stay in image order, then score order within the image
            all.sort_by(|a, b| b.0.total_cmp(&a.0));
            ap_from_flags(all.into_iter().map(|(_, hit)| hit), n_gt).ap
        })
        .collect();
    MapSummary::from_aps(&aps)
}

/// Evaluates every image of `descriptor`: length-aware recall per ground
/// truth instance and dataset-wide mask and box AP. Images are processed
/// independently (in parallel with the `parallel` feature); the report is
/// the same either way.
pub fn evaluate_dataset(
    descriptor: &DatasetDescriptor,
    gts: &[GtInstance],
    preds: &[PredInstance],
    config: &MatchConfig,
) -> Result<EvaluationReport> {
    config.validate()?;
    let slot: HashMap<i64, usize> = descriptor
        .images
        .iter()
        .enumerate()
        .map(|(k, img)| (img.image_id, k))
        .collect();
    let mut gt_groups: Vec<Vec<&GtInstance>> = vec![Vec::new(); descriptor.images.len()];
    let mut pred_groups: Vec<Vec<(usize, &PredInstance)>> = vec![Vec::new(); descriptor.images.len()];
    let mut categories = BTreeSet::new();
    for g in gts {
        let k = *slot.get(&g.image_id).ok_or(Error::Reference {
            kind: "image",
            id: g.image_id,
        })?;
        gt_groups[k].push(g);
        categories.insert(g.category_id);
    }
    let mut n_pred = 0;
    for (j, p) in preds.iter().enumerate() {
        let k = *slot.get(&p.image_id).ok_or(Error::Reference {
            kind: "image",
            id: p.image_id,
        })?;
        categories.insert(p.category_id);
        if p.score >= config.score_threshold {
            pred_groups[k].push((j, p));
            n_pred += 1;
        }
    }

    let work = |k: usize| evaluate_image(&descriptor.images[k], &gt_groups[k], &pred_groups[k], config);
    #[cfg(feature = "parallel")]
    let outcomes: Vec<ImageOutcome> = {
        use rayon::prelude::*;
        (0..descriptor.images.len()).into_par_iter().map(work).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<ImageOutcome> = (0..descriptor.images.len()).map(work).collect::<Result<_>>()?;

    let mut diagnostics = Vec::new();
    if categories.len() > 1 {
        diagnostics.push(format!(
            "{} categories present; evaluated class-agnostically",
            categories.len()
        ));
    }
    if gts.is_empty() {
        diagnostics.push("no ground truth: AP defined as 0".into());
    }
    let mut n_matched = 0;
    for r in outcomes.iter().flat_map(|o| &o.report.records) {
        if r.degenerate_gt {
            diagnostics.push(format!(
                "image {} annotation {}: empty skeleton, LAR set to 0",
                r.image_id, r.gt_id
            ));
        }
        n_matched += usize::from(r.matched_pred_index.is_some());
    }
    let lars: Vec<f64> = outcomes.iter().flat_map(|o| &o.report.records).map(|r| r.lar).collect();
    let mean_lar = mean(&lars);
    let mask = dataset_map(&outcomes, gts.len(), |o| &o.mask_hits);
    let bbox = dataset_map(&outcomes, gts.len(), |o| &o.box_hits);
    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: *config,
        counts: Counts {
            n_images: descriptor.images.len(),
            n_gt: gts.len(),
            n_pred,
            n_matched,
        },
        mean_lar,
        map50: mask.map50,
        map50_90: mask.map50_90,
        mask,
        bbox,
        images: outcomes.into_iter().map(|o| o.report).collect(),
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{rle_encode, Category, SegmentationGeometry};

    fn descriptor(n: usize) -> DatasetDescriptor {
        DatasetDescriptor {
            images: (1..=n as i64)
                .map(|id| ImageInfo {
                    image_id: id,
                    width: 120,
                    height: 40,
                    file_name: format!("{id}.png"),
                })
                .collect(),
            categories: vec![Category {
                category_id: 1,
                name: "dislocation".into(),
            }],
        }
    }

    fn bar(row: usize) -> SegmentationGeometry {
        SegmentationGeometry::Polygons(vec![vec![
            (10.0, row as f64),
            (110.0, row as f64),
            (110.0, row as f64 + 3.0),
            (10.0, row as f64 + 3.0),
        ]])
    }

    fn gt(id: i64, image_id: i64, row: usize) -> GtInstance {
        GtInstance {
            annotation_id: id,
            image_id,
            category_id: 1,
            geometry: bar(row),
        }
    }

    fn pred(g: &GtInstance, score: f64) -> PredInstance {
        PredInstance {
            image_id: g.image_id,
            category_id: 1,
            geometry: g.geometry.clone(),
            score,
        }
    }

    #[test]
    fn perfect_predictions() {
        let gts = vec![gt(1, 1, 5), gt(2, 1, 20), gt(3, 2, 8)];
        let preds: Vec<_> = gts.iter().map(|g| pred(g, 1.0)).collect();
        let r = evaluate_dataset(&descriptor(2), &gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(r.mean_lar, 1.0);
        assert_eq!(r.map50, 1.0);
        assert_eq!(r.bbox.map50_90, 1.0);
        assert_eq!(r.counts.n_matched, 3);
        assert_eq!(r.images[1].records[0].gt_id, 3);
        assert_eq!(r.images[1].records[0].matched_pred_index, Some(2));
    }

    #[test]
    fn no_predictions() {
        let gts = vec![gt(1, 1, 5)];
        let r = evaluate_dataset(&descriptor(1), &gts, &[], &MatchConfig::default()).unwrap();
        assert_eq!((r.mean_lar, r.map50, r.map50_90), (0.0, 0.0, 0.0));
        assert_eq!(r.counts.n_matched, 0);
    }

    #[test]
    fn one_dropped_of_four() {
        let gts = vec![gt(1, 1, 5), gt(2, 1, 20), gt(3, 2, 8), gt(4, 2, 30)];
        let preds: Vec<_> = gts[..3].iter().map(|g| pred(g, 1.0)).collect();
        let r = evaluate_dataset(&descriptor(2), &gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(r.mean_lar, 0.75);
    }

    #[test]
    fn unknown_image_is_a_reference_error() {
        let gts = vec![gt(1, 9, 5)];
        let r = evaluate_dataset(&descriptor(1), &gts, &[], &MatchConfig::default());
        assert!(matches!(r, Err(Error::Reference { id: 9, .. })));
        let p = vec![pred(&gt(1, 7, 5), 0.5)];
        let r = evaluate_dataset(&descriptor(1), &[], &p, &MatchConfig::default());
        assert!(matches!(r, Err(Error::Reference { id: 7, .. })));
    }

    #[test]
    fn score_threshold_filters() {
        let gts = vec![gt(1, 1, 5)];
        let preds = vec![pred(&gts[0], 0.2)];
        let c = MatchConfig {
            score_threshold: 0.5,
            ..MatchConfig::default()
        };
        let r = evaluate_dataset(&descriptor(1), &gts, &preds, &c).unwrap();
        assert_eq!(r.counts.n_pred, 0);
        assert_eq!(r.mean_lar, 0.0);
    }

    #[test]
    fn csv_layout() {
        let gts = vec![gt(1, 1, 5), gt(2, 1, 20)];
        let preds = vec![pred(&gts[0], 1.0)];
        let r = evaluate_dataset(&descriptor(1), &gts, &preds, &MatchConfig::default()).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "image_id,gt_id,matched,iou,gt_length,pred_length,e_i,lar_i");
        assert!(lines[1].starts_with("1,1,true,1.0,"));
        assert!(lines[2].starts_with("1,2,false,0.0,") && lines[2].ends_with(",,,0.0"));
        let empty = evaluate_dataset(&descriptor(1), &[], &[], &MatchConfig::default()).unwrap();
        assert_eq!(empty.to_csv().lines().count(), 1);
    }

    #[test]
    fn json_is_stable() {
        let gts = vec![gt(1, 1, 5)];
        let preds = vec![PredInstance {
            geometry: SegmentationGeometry::Rle(rle_encode(&gts[0].geometry.rasterize(120, 40).unwrap())),
            ..pred(&gts[0], 0.7)
        }];
        let a = evaluate_dataset(&descriptor(1), &gts, &preds, &MatchConfig::default()).unwrap();
        let b = evaluate_dataset(&descriptor(1), &gts, &preds, &MatchConfig::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["box"]["ap_by_threshold"][0][0], 0.5);
        assert_eq!(v["config"]["iou_threshold"], 0.5);
    }
}
