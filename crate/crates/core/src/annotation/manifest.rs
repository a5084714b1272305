use std::path::Path;

use serde::Deserialize;

use super::png_io::read_mask_png;
use super::rle::rle_encode;
use super::{Category, DatasetDescriptor, GtInstance, ImageInfo, PredInstance, SegmentationGeometry};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Deserialize)]
struct ManifestFile {
    #[serde(default)]
    images: Vec<ManifestImage>,
    instances: Vec<ManifestInstance>,
}

#[derive(Debug, Deserialize)]
struct ManifestImage {
    id: i64,
    width: usize,
    height: usize,
    #[serde(default)]
    file_name: String,
}

#[derive(Debug, Deserialize)]
struct ManifestInstance {
    image_id: i64,
    path: String,
    #[serde(default)]
    score: Option<f64>,
    #[serde(default = "default_category")]
    category_id: i64,
}

fn default_category() -> i64 {
    1
}

#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub image_id: i64,
    pub category_id: i64,
    pub score: Option<f64>,
    pub mask: BinaryMask,
}

/// Instance masks listed by a JSON manifest, one PNG per instance.
///
/// ```json
/// {"images": [{"id": 1, "width": 64, "height": 64}],
///  "instances": [{"image_id": 1, "path": "1_0.png", "score": 0.9}]}
/// ```
///
/// `images` is optional; image sizes are taken from the PNGs otherwise.
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone)]
pub struct RasterManifest {
    pub descriptor: DatasetDescriptor,
    pub entries: Vec<ManifestEntry>,
    /// Empty PNGs are skipped and reported here.
    pub diagnostics: Vec<String>,
}

impl RasterManifest {
    pub fn ground_truth(&self) -> Vec<GtInstance> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| GtInstance {
                annotation_id: i as i64 + 1,
                image_id: e.image_id,
                category_id: e.category_id,
                geometry: SegmentationGeometry::Rle(rle_encode(&e.mask)),
            })
            .collect()
    }

    /// Entries without a score get 1.0.
    pub fn predictions(&self) -> Vec<PredInstance> {
        self.entries
            .iter()
            .map(|e| PredInstance {
                image_id: e.image_id,
                category_id: e.category_id,
                geometry: SegmentationGeometry::Rle(rle_encode(&e.mask)),
                score: e.score.unwrap_or(1.0),
            })
            .collect()
    }
}

pub fn load_raster_manifest(path: impl AsRef<Path>) -> Result<RasterManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ManifestFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        offset: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut images: Vec<ImageInfo> = file
        .images
        .into_iter()
        .map(|im| ImageInfo {
            image_id: im.id,
            width: im.width,
            height: im.height,
            file_name: im.file_name,
        })
        .collect();
    let mut categories: Vec<Category> = Vec::new();
    let mut entries = Vec::with_capacity(file.instances.len());
    let mut diagnostics = Vec::new();
    for inst in file.instances {
        if let Some(s) = inst.score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Range(format!("{}: score {s} outside [0, 1]", inst.path)));
            }
        }
        let mask = read_mask_png(base.join(&inst.path))?;
        match images.iter().find(|im| im.image_id == inst.image_id) {
            Some(im) if (im.width, im.height) != (mask.width(), mask.height()) => {
                return Err(Error::Shape(format!(
                    "{} is {}x{} but image {} is {}x{}",
                    inst.path,
                    mask.width(),
                    mask.height(),
                    im.image_id,
                    im.width,
                    im.height
                )));
            }
            Some(_) => {}
            None => images.push(ImageInfo {
                image_id: inst.image_id,
                width: mask.width(),
                height: mask.height(),
                file_name: String::new(),
            }),
        }
        if !categories.iter().any(|c| c.category_id == inst.category_id) {
            categories.push(Category {
                category_id: inst.category_id,
                name: String::new(),
            });
        }
        if mask.is_empty() {
            diagnostics.push(format!("{}: empty mask skipped", inst.path));
            continue;
        }
        entries.push(ManifestEntry {
            image_id: inst.image_id,
            category_id: inst.category_id,
            score: inst.score,
            mask,
        });
    }
    Ok(RasterManifest {
        descriptor: DatasetDescriptor { images, categories },
        entries,
        diagnostics,
    })
}
