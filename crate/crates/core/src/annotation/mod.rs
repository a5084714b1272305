//! Annotation and prediction input: COCO JSON, YOLO segmentation text and
//! PNG raster manifests, plus the geometry-to-mask bridge.

mod coco;
mod manifest;
mod png_io;
mod rasterize;
pub mod rle;
mod yolo;

pub use coco::{
    ground_truth_to_json, parse_coco_ground_truth, parse_coco_predictions, predictions_to_json, CocoGroundTruth,
    CocoPredictions,
};
pub use manifest::{load_raster_manifest, RasterManifest};
pub use png_io::{read_mask_png, write_mask_png};
pub use rasterize::{rasterize, rasterize_polygon};
pub use rle::{rle_decode, rle_encode, Rle, RleCounts};
pub use yolo::{normalize_polygon, parse_yolo_segmentation, YoloInstance, YoloParse};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub image_id: i64,
    pub width: usize,
    pub height: usize,
    pub file_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub category_id: i64,
    pub name: String,
}

/// Images and categories that annotations are resolved against.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub images: Vec<ImageInfo>,
    pub categories: Vec<Category>,
}

impl DatasetDescriptor {
    pub fn image(&self, image_id: i64) -> Option<&ImageInfo> {
        self.images.iter().find(|i| i.image_id == image_id)
    }

    pub fn has_category(&self, category_id: i64) -> bool {
        self.categories.iter().any(|c| c.category_id == category_id)
    }
}

/// Instance geometry as it appears in annotation files.
#[derive(Debug, Clone, PartialEq)]
pub enum SegmentationGeometry {
    /// One or more rings of `(x, y)` vertices in pixel units; rings are unioned.
    Polygons(Vec<Vec<(f64, f64)>>),
    Rle(Rle),
}

impl SegmentationGeometry {
    pub fn rasterize(&self, width: usize, height: usize) -> Result<BinaryMask> {
        rasterize(self, width, height)
    }

    /// Clamps polygon vertices into `[0, width] x [0, height]`. Returns the
    /// number of coordinates that had to move.
    pub fn clamp_to(&mut self, width: usize, height: usize) -> usize {
        let mut moved = 0;
        if let SegmentationGeometry::Polygons(rings) = self {
            for ring in rings {
                for (x, y) in ring.iter_mut() {
                    let cx = x.clamp(0.0, width as f64);
                    let cy = y.clamp(0.0, height as f64);
                    moved += usize::from(cx != *x) + usize::from(cy != *y);
                    *x = cx;
                    *y = cy;
                }
            }
        }
        moved
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtInstance {
    pub annotation_id: i64,
    pub image_id: i64,
    pub category_id: i64,
    pub geometry: SegmentationGeometry,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredInstance {
    pub image_id: i64,
    pub category_id: i64,
    pub geometry: SegmentationGeometry,
    pub score: f64,
}
