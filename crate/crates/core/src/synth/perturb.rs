use serde::{Deserialize, Serialize};

use super::scene::SynthInstance;
use crate::annotation::{rle_encode, PredInstance, SegmentationGeometry};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::mask_ops::{dilate, erode};

/// Failure modes applied to a ground-truth instance to make a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationSpec {
    Erode { radius: usize },
    Dilate { radius: usize },
    /// Clears a `gap_px` band across the centreline at `position_fraction`
    /// of its arc length.
    Fracture { gap_px: f64, position_fraction: f64 },
    Shift { dx: i64, dy: i64 },
    Drop,
    /// Two copies scored 1.0 and `1.0 - score_delta`.
    Duplicate { score_delta: f64 },
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PerturbationSpec::Fracture {
                gap_px,
                position_fraction,
            } => {
                if gap_px.is_nan() || gap_px < 0.0 {
                    return Err(Error::Range(format!("fracture gap {gap_px} must be >= 0")));
                }
                if !(position_fraction > 0.0 && position_fraction < 1.0) {
                    return Err(Error::Range(format!(
                        "fracture position {position_fraction} must be in (0, 1)"
                    )));
                }
            }
            PerturbationSpec::Duplicate { score_delta } if !(0.0..=1.0).contains(&score_delta) => {
                return Err(Error::Range(format!("duplicate score delta {score_delta} outside [0, 1]")));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Perturbed {
    pub predictions: Vec<PredInstance>,
    /// Set when the perturbation emptied the mask and the instance was omitted.
    pub diagnostic: Option<String>,
}

/// Clears the band across the centreline used by [`PerturbationSpec::Fracture`].
pub fn fracture_mask(instance: &SynthInstance, gap_px: f64, position_fraction: f64) -> BinaryMask {
    let (p, t) = instance.centerline.point_at_fraction(position_fraction);
    let reach = instance.width as f64 + 2.0;
    let mut out = instance.mask.clone();
    for (x, y) in instance.mask.iter_ones() {
        let (dx, dy) = (x as f64 + 0.5 - p.0, y as f64 + 0.5 - p.1);
        let along = dx * t.0 + dy * t.1;
        let across = -dx * t.1 + dy * t.0;
        if along.abs() <= gap_px / 2.0 && across.abs() <= reach {
            out.set(x, y, false);
        }
    }
    out
}

pub fn perturb(instance: &SynthInstance, spec: &PerturbationSpec) -> Result<Perturbed> {
    spec.validate()?;
    let pred = |mask: &BinaryMask, score: f64| PredInstance {
        image_id: instance.gt.image_id,
        category_id: instance.gt.category_id,
        geometry: SegmentationGeometry::Rle(rle_encode(mask)),
        score,
    };
    let mask = match *spec {
        PerturbationSpec::Drop => {
            return Ok(Perturbed {
                predictions: Vec::new(),
                diagnostic: None,
            })
        }
        PerturbationSpec::Duplicate { score_delta } => {
            return Ok(Perturbed {
                predictions: vec![pred(&instance.mask, 1.0), pred(&instance.mask, 1.0 - score_delta)],
                diagnostic: None,
            })
        }
        PerturbationSpec::Erode { radius } => erode(&instance.mask, radius),
        PerturbationSpec::Dilate { radius } => dilate(&instance.mask, radius),
        PerturbationSpec::Shift { dx, dy } => instance.mask.shifted(dx, dy),
        PerturbationSpec::Fracture {
            gap_px,
            position_fraction,
        } => fracture_mask(instance, gap_px, position_fraction),
    };
    if mask.is_empty() {
        return Ok(Perturbed {
            predictions: Vec::new(),
            diagnostic: Some(format!(
                "annotation {}: {spec:?} produced an empty mask, omitted",
                instance.gt.annotation_id
            )),
        });
    }
    Ok(Perturbed {
        predictions: vec![pred(&mask, 1.0)],
        diagnostic: None,
    })
}
