use serde_json::{json, Map, Value};

use super::rle::{Rle, RleCounts};
use super::{Category, DatasetDescriptor, GtInstance, ImageInfo, PredInstance, SegmentationGeometry};
use crate::error::{Error, Result};

/// Parsed COCO instance file. Annotations whose geometry rasterizes to
/// nothing are left out and reported in `diagnostics`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocoGroundTruth {
    pub descriptor: DatasetDescriptor,
    pub instances: Vec<GtInstance>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocoPredictions {
    pub instances: Vec<PredInstance>,
    pub diagnostics: Vec<String>,
}

fn parse_json(document: &str) -> Result<Value> {
    serde_json::from_str(document).map_err(|e| Error::Parse {
        offset: byte_offset(document, e.line(), e.column()),
        message: e.to_string(),
    })
}

fn byte_offset(document: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = document
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(document.len())
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, context: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| Error::schema(key, context))
}

fn int_field(obj: &Map<String, Value>, key: &str, context: &str) -> Result<i64> {
    let v = field(obj, key, context)?;
    v.as_i64()
        .or_else(|| v.as_f64().filter(|f| f.fract() == 0.0).map(|f| f as i64))
        .ok_or_else(|| Error::schema(key, context))
}

fn array_field<'a>(obj: &'a Map<String, Value>, key: &str, context: &str) -> Result<&'a Vec<Value>> {
    field(obj, key, context)?
        .as_array()
        .ok_or_else(|| Error::schema(key, context))
}

fn as_object<'a>(v: &'a Value, context: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| Error::schema("<object>", context))
}

fn parse_descriptor(root: &Map<String, Value>) -> Result<DatasetDescriptor> {
    let mut images: Vec<ImageInfo> = Vec::new();
    for (i, v) in array_field(root, "images", "document")?.iter().enumerate() {
        let ctx = format!("images[{i}]");
        let obj = as_object(v, &ctx)?;
        let image_id = int_field(obj, "id", &ctx)?;
        let width = int_field(obj, "width", &ctx)?;
        let height = int_field(obj, "height", &ctx)?;
        if width < 1 || height < 1 {
            return Err(Error::Range(format!("{ctx}: image dimensions must be >= 1")));
        }
        if images.iter().any(|im| im.image_id == image_id) {
            return Err(Error::schema("id", format!("{ctx} (duplicate image id {image_id})")));
        }
        let file_name = obj
            .get("file_name")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        images.push(ImageInfo {
            image_id,
            width: width as usize,
            height: height as usize,
            file_name,
        });
    }
    let mut categories = Vec::new();
    for (i, v) in array_field(root, "categories", "document")?.iter().enumerate() {
        let ctx = format!("categories[{i}]");
        let obj = as_object(v, &ctx)?;
        categories.push(Category {
            category_id: int_field(obj, "id", &ctx)?,
            name: obj
                .get("name")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string(),
        });
    }
    Ok(DatasetDescriptor { images, categories })
}

fn parse_segmentation(v: &Value, image: &ImageInfo, ctx: &str) -> Result<SegmentationGeometry> {
    match v {
        Value::Array(rings) => {
            let mut out = Vec::with_capacity(rings.len());
            for (r, ring) in rings.iter().enumerate() {
                let coords = ring
                    .as_array()
                    .ok_or_else(|| Error::schema("segmentation", format!("{ctx} ring {r}")))?;
                let flat: Vec<f64> = coords
                    .iter()
                    .map(|c| c.as_f64())
                    .collect::<Option<_>>()
                    .ok_or_else(|| Error::schema("segmentation", format!("{ctx} ring {r}")))?;
                if !flat.len().is_multiple_of(2) {
                    return Err(Error::Geometry(format!(
                        "{ctx} ring {r}: odd coordinate count {}",
                        flat.len()
                    )));
                }
                if flat.len() < 6 {
                    return Err(Error::Geometry(format!(
                        "{ctx} ring {r}: polygon ring needs at least 3 vertices"
                    )));
                }
                out.push(flat.chunks_exact(2).map(|p| (p[0], p[1])).collect());
            }
            let mut geometry = SegmentationGeometry::Polygons(out);
            geometry.clamp_to(image.width, image.height);
            Ok(geometry)
        }
        Value::Object(obj) => {
            let size = array_field(obj, "size", ctx)?;
            let dims: Vec<usize> = size
                .iter()
                .map(|d| d.as_u64().map(|d| d as usize))
                .collect::<Option<_>>()
                .filter(|d: &Vec<usize>| d.len() == 2)
                .ok_or_else(|| Error::schema("size", ctx))?;
            let (height, width) = (dims[0], dims[1]);
            if (height, width) != (image.height, image.width) {
                return Err(Error::Shape(format!(
                    "{ctx}: rle size {height}x{width} (h x w) does not match image {} ({}x{})",
                    image.image_id, image.height, image.width
                )));
            }
            let counts = match field(obj, "counts", ctx)? {
                Value::String(s) => RleCounts::Compressed(s.clone()),
                Value::Array(a) => RleCounts::Runs(
                    a.iter()
                        .map(|c| c.as_u64().and_then(|c| u32::try_from(c).ok()))
                        .collect::<Option<_>>()
                        .ok_or_else(|| Error::schema("counts", ctx))?,
                ),
                _ => return Err(Error::schema("counts", ctx)),
            };
            let rle = Rle {
                height,
                width,
                counts,
            };
            rle.validated_runs()?;
            Ok(SegmentationGeometry::Rle(rle))
        }
        _ => Err(Error::schema("segmentation", ctx)),
    }
}

fn geometry_is_empty(g: &SegmentationGeometry, image: &ImageInfo) -> Result<bool> {
    Ok(match g {
        SegmentationGeometry::Rle(rle) => rle.area()? == 0,
        SegmentationGeometry::Polygons(_) => g.rasterize(image.width, image.height)?.is_empty(),
    })
}

/// Parses a COCO instance-segmentation document (`images`, `annotations`,
/// `categories`). Instances keep file order.
pub fn parse_coco_ground_truth(document: &str) -> Result<CocoGroundTruth> {
    let value = parse_json(document)?;
    let root = as_object(&value, "document")?;
    let descriptor = parse_descriptor(root)?;
    let mut instances = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, v) in array_field(root, "annotations", "document")?.iter().enumerate() {
        let ctx = format!("annotations[{i}]");
        let obj = as_object(v, &ctx)?;
        let annotation_id = int_field(obj, "id", &ctx)?;
        let image_id = int_field(obj, "image_id", &ctx)?;
        let category_id = int_field(obj, "category_id", &ctx)?;
        let image = descriptor.image(image_id).ok_or(Error::Reference {
            kind: "image_id",
            id: image_id,
        })?;
        if !descriptor.has_category(category_id) {
            return Err(Error::Reference {
                kind: "category_id",
                id: category_id,
            });
        }
        let geometry = parse_segmentation(field(obj, "segmentation", &ctx)?, image, &ctx)?;
        if geometry_is_empty(&geometry, image)? {
            diagnostics.push(format!("{ctx} (id {annotation_id}): empty geometry skipped"));
            continue;
        }
        instances.push(GtInstance {
            annotation_id,
            image_id,
            category_id,
            geometry,
        });
    }
    Ok(CocoGroundTruth {
        descriptor,
        instances,
        diagnostics,
    })
}

/// Parses a COCO results array against the images of `descriptor`.
pub fn parse_coco_predictions(document: &str, descriptor: &DatasetDescriptor) -> Result<CocoPredictions> {
    let value = parse_json(document)?;
    let records = value
        .as_array()
        .ok_or_else(|| Error::schema("<array>", "results document"))?;
    let mut instances = Vec::with_capacity(records.len());
    let mut diagnostics = Vec::new();
    for (i, v) in records.iter().enumerate() {
        let ctx = format!("results[{i}]");
        let obj = as_object(v, &ctx)?;
        let image_id = int_field(obj, "image_id", &ctx)?;
        let category_id = int_field(obj, "category_id", &ctx)?;
        let score = field(obj, "score", &ctx)?
            .as_f64()
            .ok_or_else(|| Error::schema("score", &ctx))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Range(format!("{ctx}: score {score} outside [0, 1]")));
        }
        let image = descriptor.image(image_id).ok_or(Error::Reference {
            kind: "image_id",
            id: image_id,
        })?;
        let geometry = parse_segmentation(field(obj, "segmentation", &ctx)?, image, &ctx)?;
        if geometry_is_empty(&geometry, image)? {
            diagnostics.push(format!("{ctx}: empty geometry skipped"));
            continue;
        }
        instances.push(PredInstance {
            image_id,
            category_id,
            geometry,
            score,
        });
    }
    Ok(CocoPredictions {
        instances,
        diagnostics,
    })
}

pub(crate) fn geometry_to_json(g: &SegmentationGeometry) -> Value {
    match g {
        SegmentationGeometry::Polygons(rings) => Value::Array(
            rings
                .iter()
                .map(|r| r.iter().flat_map(|&(x, y)| [json!(x), json!(y)]).collect())
                .collect(),
        ),
        SegmentationGeometry::Rle(rle) => {
            let counts = match &rle.counts {
                RleCounts::Runs(r) => json!(r),
                RleCounts::Compressed(s) => json!(s),
            };
            json!({ "size": [rle.height, rle.width], "counts": counts })
        }
    }
}

/// Serializes predictions as a COCO results array.
pub fn predictions_to_json(preds: &[PredInstance]) -> Value {
    Value::Array(
        preds
            .iter()
            .map(|p| {
                json!({
                    "image_id": p.image_id,
                    "category_id": p.category_id,
                    "segmentation": geometry_to_json(&p.geometry),
                    "score": p.score,
                })
            })
            .collect(),
    )
}

/// Serializes a ground-truth set as a COCO instance document. Used to write
/// synthetic fixtures.
pub fn ground_truth_to_json(descriptor: &DatasetDescriptor, gts: &[GtInstance]) -> Value {
    let images: Vec<Value> = descriptor
        .images
        .iter()
        .map(|im| {
            json!({
                "id": im.image_id,
                "width": im.width,
                "height": im.height,
                "file_name": im.file_name,
            })
        })
        .collect();
    let categories: Vec<Value> = descriptor
        .categories
        .iter()
        .map(|c| json!({ "id": c.category_id, "name": c.name }))
        .collect();
    let annotations: Vec<Value> = gts
        .iter()
        .map(|g| {
            json!({
                "id": g.annotation_id,
                "image_id": g.image_id,
                "category_id": g.category_id,
                "segmentation": geometry_to_json(&g.geometry),
                "iscrowd": 0,
            })
        })
        .collect();
    json!({ "images": images, "annotations": annotations, "categories": categories })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "images": [{"id": 1, "width": 100, "height": 100, "file_name": "a.png"}],
        "categories": [{"id": 1, "name": "dislocation"}],
        "annotations": [{"id": 7, "image_id": 1, "category_id": 1,
                         "segmentation": [[10, 10, 60, 10, 60, 20, 10, 20]]}]
    }"#;

    #[test]
    fn minimal_document() {
        let gt = parse_coco_ground_truth(MINIMAL).unwrap();
        assert_eq!(gt.descriptor.images.len(), 1);
        assert_eq!(gt.instances.len(), 1);
        assert_eq!(gt.instances[0].annotation_id, 7);
        let m = gt.instances[0].geometry.rasterize(100, 100).unwrap();
        assert_eq!(m.area(), 500);
    }

    #[test]
    fn rle_length_mismatch_is_rejected() {
        let doc = MINIMAL.replace(
            r#""segmentation": [[10, 10, 60, 10, 60, 20, 10, 20]]"#,
            r#""segmentation": {"size": [100, 100], "counts": [10, 20, 30]}"#,
        );
        let err = parse_coco_ground_truth(&doc).unwrap_err();
        assert!(err.to_string().contains("rle length mismatch"), "{err}");
    }

    #[test]
    fn malformed_json_reports_offset() {
        let doc = "{\n  \"images\": [,]\n}";
        match parse_coco_ground_truth(doc) {
            Err(Error::Parse { offset, .. }) => assert_eq!(&doc[offset..offset + 1], ","),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_key_is_named() {
        let doc = r#"{"images": [], "categories": []}"#;
        match parse_coco_ground_truth(doc) {
            Err(Error::Schema { key, .. }) => assert_eq!(key, "annotations"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_image_is_a_reference_error() {
        let doc = MINIMAL.replace(r#""image_id": 1"#, r#""image_id": 42"#);
        match parse_coco_ground_truth(&doc) {
            Err(Error::Reference { kind, id }) => {
                assert_eq!((kind, id), ("image_id", 42));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_vertices_are_clamped() {
        let doc = MINIMAL.replace("[[10, 10, 60, 10, 60, 20, 10, 20]]", "[[-3, -2, 5, -2, 5, 4, -3, 4]]");
        let gt = parse_coco_ground_truth(&doc).unwrap();
        match &gt.instances[0].geometry {
            SegmentationGeometry::Polygons(r) => assert_eq!(r[0][0], (0.0, 0.0)),
            g => panic!("{g:?}"),
        }
    }

    #[test]
    fn empty_geometry_is_skipped_with_diagnostic() {
        let doc = MINIMAL.replace("[[10, 10, 60, 10, 60, 20, 10, 20]]", "[[10, 10, 20, 10, 30, 10]]");
        let gt = parse_coco_ground_truth(&doc).unwrap();
        assert!(gt.instances.is_empty());
        assert_eq!(gt.diagnostics.len(), 1);
    }

    #[test]
    fn predictions() {
        let gt = parse_coco_ground_truth(MINIMAL).unwrap();
        assert!(parse_coco_predictions("[]", &gt.descriptor).unwrap().instances.is_empty());
        let one = r#"[{"image_id": 1, "category_id": 1, "score": 0.9,
                       "segmentation": [[0, 0, 10, 0, 0, 10]]}]"#;
        let p = parse_coco_predictions(one, &gt.descriptor).unwrap();
        assert_eq!(p.instances.len(), 1);
        assert_eq!(p.instances[0].score, 0.9);
        let bad = one.replace("0.9", "1.5");
        assert!(matches!(parse_coco_predictions(&bad, &gt.descriptor), Err(Error::Range(_))));
        let unknown = one.replace(r#""image_id": 1"#, r#""image_id": 3"#);
        assert!(matches!(
            parse_coco_predictions(&unknown, &gt.descriptor),
            Err(Error::Reference { kind: "image_id", id: 3 })
        ));
    }

    #[test]
    fn ground_truth_json_round_trip() {
        let gt = parse_coco_ground_truth(MINIMAL).unwrap();
        let doc = ground_truth_to_json(&gt.descriptor, &gt.instances).to_string();
        assert_eq!(parse_coco_ground_truth(&doc).unwrap(), gt);
    }
}
