//! Reading ground truth and predictions in the supported input formats.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use lareval::annotation::{
    load_raster_manifest, parse_coco_ground_truth, parse_coco_predictions, parse_yolo_segmentation, Category,
    DatasetDescriptor, GtInstance, ImageInfo, PredInstance, SegmentationGeometry,
};
use lareval::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Coco,
    Yolo,
    RasterManifest,
}

pub struct GroundTruth {
    pub descriptor: DatasetDescriptor,
    pub instances: Vec<GtInstance>,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Parses `WxH`.
pub fn parse_size(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    if w == 0 || h == 0 {
        return Err(format!("image size must be positive, got {s:?}"));
    }
    Ok((w, h))
}

/// `.txt` label files of a YOLO directory, sorted by file name. A single
/// file is accepted as a one-image dataset.
fn yolo_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let entries = fs::read_dir(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn require_size(size: Option<(usize, usize)>) -> Result<(usize, usize)> {
    size.ok_or_else(|| Error::Range("--image-size WxH is required for yolo input".into()))
}

fn yolo_descriptor(files: &[PathBuf], (w, h): (usize, usize)) -> DatasetDescriptor {
    DatasetDescriptor {
        images: files
            .iter()
            .enumerate()
            .map(|(i, f)| ImageInfo {
                image_id: i as i64 + 1,
                width: w,
                height: h,
                file_name: stem(f),
            })
            .collect(),
        categories: Vec::new(),
    }
}

fn with_categories(mut d: DatasetDescriptor, ids: impl IntoIterator<Item = i64>) -> DatasetDescriptor {
    let mut ids: Vec<i64> = ids.into_iter().collect();
    ids.sort_unstable();
    ids.dedup();
    d.categories = ids
        .into_iter()
        .map(|id| Category {
            category_id: id,
            name: format!("class_{id}"),
        })
        .collect();
    d
}

pub fn load_ground_truth(
    format: InputFormat,
    path: &Path,
    image_size: Option<(usize, usize)>,
    diagnostics: &mut Vec<String>,
) -> Result<GroundTruth> {
    match format {
        InputFormat::Coco => {
            let gt = parse_coco_ground_truth(&read_text(path)?)?;
            diagnostics.extend(gt.diagnostics);
            Ok(GroundTruth {
                descriptor: gt.descriptor,
                instances: gt.instances,
            })
        }
        InputFormat::Yolo => {
            let size = require_size(image_size)?;
            let files = yolo_files(path)?;
            let descriptor = yolo_descriptor(&files, size);
            let mut instances = Vec::new();
            for (img, file) in descriptor.images.iter().zip(&files) {
                let parsed = parse_yolo_segmentation(&read_text(file)?, size.0, size.1, false)?;
                if parsed.clamped > 0 {
                    diagnostics.push(format!("{}: {} coordinates clamped to [0, 1]", file.display(), parsed.clamped));
                }
                for inst in parsed.instances {
                    instances.push(GtInstance {
                        annotation_id: instances.len() as i64 + 1,
                        image_id: img.image_id,
                        category_id: inst.class_id,
                        geometry: SegmentationGeometry::Polygons(vec![inst.polygon]),
                    });
                }
            }
            let descriptor = with_categories(descriptor, instances.iter().map(|i| i.category_id));
            Ok(GroundTruth { descriptor, instances })
        }
        InputFormat::RasterManifest => {
            let m = load_raster_manifest(path)?;
            diagnostics.extend(m.diagnostics.iter().cloned());
            Ok(GroundTruth {
                instances: m.ground_truth(),
                descriptor: m.descriptor,
            })
        }
    }
}

/// Loads predictions against the images of `descriptor`.
pub fn load_predictions(
    format: InputFormat,
    path: &Path,
    descriptor: &DatasetDescriptor,
    diagnostics: &mut Vec<String>,
) -> Result<Vec<PredInstance>> {
    match format {
        InputFormat::Coco => {
            let p = parse_coco_predictions(&read_text(path)?, descriptor)?;
            diagnostics.extend(p.diagnostics);
            Ok(p.instances)
        }
        InputFormat::Yolo => {
            // prediction files pair with ground truth images by file stem
            let mut out = Vec::new();
            for file in yolo_files(path)? {
                let name = stem(&file);
                let img = descriptor
                    .images
                    .iter()
                    .find(|i| i.file_name == name)
                    .ok_or_else(|| Error::Range(format!("prediction file {} has no ground-truth image", file.display())))?;
                let parsed = parse_yolo_segmentation(&read_text(&file)?, img.width, img.height, true)?;
                if parsed.clamped > 0 {
                    diagnostics.push(format!("{}: {} coordinates clamped to [0, 1]", file.display(), parsed.clamped));
                }
                out.extend(parsed.instances.into_iter().map(|inst| PredInstance {
                    image_id: img.image_id,
                    category_id: inst.class_id,
                    geometry: SegmentationGeometry::Polygons(vec![inst.polygon]),
                    score: inst.score,
                }));
            }
            Ok(out)
        }
        InputFormat::RasterManifest => {
            let m = load_raster_manifest(path)?;
            diagnostics.extend(m.diagnostics.iter().cloned());
            let preds = m.predictions();
            for p in &preds {
                let Some(img) = descriptor.image(p.image_id) else {
                    return Err(Error::Reference {
                        kind: "image_id",
                        id: p.image_id,
                    });
                };
                let own = m.descriptor.image(p.image_id).expect("manifest image");
                if (own.width, own.height) != (img.width, img.height) {
                    return Err(Error::Shape(format!(
                        "image {}: prediction masks are {}x{}, ground truth is {}x{}",
                        p.image_id, own.width, own.height, img.width, img.height
                    )));
                }
            }
            Ok(preds)
        }
    }
}

/// Predictions on their own, for commands that need no ground truth. COCO
/// results carry no image sizes, so they still need a ground-truth file.
pub fn load_predictions_alone(
    format: InputFormat,
    path: &Path,
    gt: Option<&Path>,
    image_size: Option<(usize, usize)>,
    diagnostics: &mut Vec<String>,
) -> Result<(DatasetDescriptor, Vec<PredInstance>)> {
    if let Some(gt) = gt {
        let g = load_ground_truth(format, gt, image_size, diagnostics)?;
        let preds = load_predictions(format, path, &g.descriptor, diagnostics)?;
        return Ok((g.descriptor, preds));
    }
    match format {
        InputFormat::Coco => Err(Error::Range("--gt is required to size coco predictions".into())),
        InputFormat::Yolo => {
            let files = yolo_files(path)?;
            let descriptor = yolo_descriptor(&files, require_size(image_size)?);
            let preds = load_predictions(format, path, &descriptor, diagnostics)?;
            Ok((descriptor, preds))
        }
        InputFormat::RasterManifest => {
            let m = load_raster_manifest(path)?;
            diagnostics.extend(m.diagnostics.iter().cloned());
            Ok((m.descriptor.clone(), m.predictions()))
        }
    }
}
