//! WebAssembly bindings for the browser demo in `www/`. Each demo has a
//! plain Rust function returning a serializable result, plus a thin
//! `wasm_bindgen` export that hands it to JavaScript as JSON.

use lareval::mask_ops::{iou_box, iou_mask};
use lareval::metrics::{match_lar, nms_indices, IouKind, MatchConfig, ScoredMask};
use lareval::skeleton::{
    longest_fragment_length, simplify_polyline, skeleton_length, skeletonize, trace_diameter_path,
};
use lareval::synth::{fracture_mask, generate_scene, SceneConfig};
use lareval::{BinaryMask, LengthEstimator};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Row-major indices of set pixels; compact for thin shapes.
fn set_indices(m: &BinaryMask) -> Vec<u32> {
    m.iter_ones().map(|(x, y)| (y * m.width() + x) as u32).collect()
}

fn mask_from_bytes(pixels: &[u8], width: usize, height: usize) -> Result<BinaryMask, String> {
    if pixels.len() != width * height {
        return Err(format!("expected {} pixels for {width}x{height}, got {}", width * height, pixels.len()));
    }
    Ok(BinaryMask::from_fn(width, height, |x, y| pixels[y * width + x] != 0))
}

#[derive(Debug, Serialize)]
pub struct SkeletonReport {
    pub area: usize,
    pub skeleton: Vec<u32>,
    /// Diameter path of the largest skeleton component, as `[x, y]`.
    pub path: Vec<(usize, usize)>,
    /// Douglas-Peucker vertices of that path.
    pub polyline: Vec<(f64, f64)>,
    pub pixel_count: f64,
    pub geodesic_chain: f64,
    pub polyline_fit: f64,
    pub components: usize,
}

/// Thins a drawn mask and measures it with all three estimators.
pub fn skeleton_report(pixels: &[u8], width: usize, height: usize, epsilon: f64) -> Result<SkeletonReport, String> {
    let mask = mask_from_bytes(pixels, width, height)?;
    let est = LengthEstimator::PolylineFit { epsilon };
    est.validate().map_err(|e| e.to_string())?;
    let s = skeletonize(&mask);
    let path = trace_diameter_path(&s).unwrap_or_default();
    let points: Vec<(f64, f64)> = path.iter().map(|&(x, y)| (x as f64, y as f64)).collect();
    let polyline = if points.len() >= 2 {
        simplify_polyline(&points, epsilon).map_err(|e| e.to_string())?
    } else {
        points
    };
    Ok(SkeletonReport {
        area: mask.area(),
        skeleton: set_indices(&s.mask),
        components: lareval::mask_ops::connected_components(&s.mask, lareval::mask_ops::Connectivity::Eight).len(),
        pixel_count: skeleton_length(&s, LengthEstimator::PixelCount),
        geodesic_chain: skeleton_length(&s, LengthEstimator::GeodesicChain),
        polyline_fit: skeleton_length(&s, est),
        path,
        polyline,
    })
}

#[derive(Debug, Serialize)]
pub struct NmsDemo {
    pub width: usize,
    pub height: usize,
    pub first: Vec<u32>,
    pub second: Vec<u32>,
    pub box_iou: f64,
    pub mask_iou: f64,
    pub kept_by_box: usize,
    pub kept_by_mask: usize,
}

/// Two parallel diagonal bars `offset` pixels apart, suppressed at
/// `threshold` by box IoU and by mask IoU.
pub fn nms_demo(offset: usize, thickness: usize, threshold: f64) -> Result<NmsDemo, String> {
    const SIZE: usize = 160;
    const LEN: usize = 110;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(format!("threshold must be in (0, 1], got {threshold}"));
    }
    let offset = offset.min(40);
    let half = thickness.clamp(1, 9) / 2;
    let bar = |start: usize| {
        BinaryMask::from_fn(SIZE, SIZE, move |x, y| {
            let x0 = 20 + start;
            (20..20 + LEN).contains(&y) && x >= x0 && x < x0 + LEN && (x - x0).abs_diff(y - 20) <= half
        })
    };
    let (a, b) = (bar(0), bar(offset));
    let box_iou = match (a.bbox(), b.bbox()) {
        (Some(p), Some(q)) => iou_box(&p, &q),
        _ => 0.0,
    };
    let mask_iou = iou_mask(&a, &b).map_err(|e| e.to_string())?;
    let preds = vec![ScoredMask::new(a.clone(), 0.9), ScoredMask::new(b.clone(), 0.8)];
    let kept = |level| nms_indices(&preds, threshold, level).map(|k| k.len()).map_err(|e| e.to_string());
    Ok(NmsDemo {
        width: SIZE,
        height: SIZE,
        first: set_indices(&a),
        second: set_indices(&b),
        box_iou,
        mask_iou,
        kept_by_box: kept(IouKind::Box)?,
        kept_by_mask: kept(IouKind::Mask)?,
    })
}

#[derive(Debug, Serialize)]
pub struct FractureDemo {
    pub width: usize,
    pub height: usize,
    pub ground_truth: Vec<u32>,
    pub prediction: Vec<u32>,
    pub analytic_length: f64,
    pub gt_length: f64,
    pub pred_length: f64,
    pub iou: f64,
    pub matched: bool,
    pub lar: f64,
}

/// One synthetic curve with a gap of `gap_px` at `position` of its length,
/// scored against the intact curve.
pub fn fracture_demo(seed: u64, gap_px: f64, position: f64, stroke: usize) -> Result<FractureDemo, String> {
    let stroke = stroke.clamp(1, 9) | 1;
    let cfg = SceneConfig {
        n_instances: 1,
        canvas: (240, 240),
        width_range: (stroke, stroke),
        length_range: (120.0, 200.0),
    };
    let scene = generate_scene(seed, &cfg).map_err(|e| e.to_string())?;
    let inst = &scene.instances[0];
    let position = position.clamp(0.01, 0.99);
    let pred = fracture_mask(inst, gap_px.max(0.0), position);
    let config = MatchConfig::default();
    let result = match_lar(std::slice::from_ref(&inst.mask), std::slice::from_ref(&pred), &config)
        .map_err(|e| e.to_string())?;
    let rec = &result.records[0];
    Ok(FractureDemo {
        width: 240,
        height: 240,
        ground_truth: set_indices(&inst.mask),
        prediction: set_indices(&pred),
        analytic_length: inst.analytic_length,
        gt_length: rec.gt_length,
        pred_length: longest_fragment_length(&pred, config.estimator),
        iou: rec.iou,
        matched: rec.matched_pred_index.is_some(),
        lar: rec.lar,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = skeletonReport)]
pub fn skeleton_report_js(pixels: &[u8], width: usize, height: usize, epsilon: f64) -> Result<String, JsError> {
    to_json(skeleton_report(pixels, width, height, epsilon))
}

#[wasm_bindgen(js_name = nmsDemo)]
pub fn nms_demo_js(offset: usize, thickness: usize, threshold: f64) -> Result<String, JsError> {
    to_json(nms_demo(offset, thickness, threshold))
}

#[wasm_bindgen(js_name = fractureDemo)]
pub fn fracture_demo_js(seed: u32, gap_px: f64, position: f64, stroke: usize) -> Result<String, JsError> {
    to_json(fracture_demo(seed as u64, gap_px, position, stroke))
}
