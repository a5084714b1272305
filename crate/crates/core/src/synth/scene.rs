use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::curve::{Centerline, CurveSpec, Point};
use crate::annotation::{rle_encode, Category, DatasetDescriptor, GtInstance, ImageInfo, SegmentationGeometry};
use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::mask_ops::iou_mask;

/// Largest control-polygon turn between consecutive edges, in degrees.
pub const MAX_TURN_DEGREES: f64 = 40.0;
/// Distinct instances in a scene must overlap less than this.
pub const MAX_PAIRWISE_IOU: f64 = 0.3;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub n_instances: usize,
    pub canvas: (usize, usize),
    /// Inclusive stroke-width range; widths are drawn odd.
    pub width_range: (usize, usize),
    pub length_range: (f64, f64),
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            n_instances: 5,
            canvas: (512, 512),
            width_range: (3, 7),
            length_range: (80.0, 200.0),
        }
    }
}

/// One generated instance with its ground truth geometry and known length.
#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub gt: GtInstance,
    pub mask: BinaryMask,
    pub spec: CurveSpec,
    pub centerline: Centerline,
    pub width: usize,
    pub analytic_length: f64,
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub image: ImageInfo,
    pub instances: Vec<SynthInstance>,
}

impl Scene {
    pub fn gt_instances(&self) -> Vec<GtInstance> {
        self.instances.iter().map(|i| i.gt.clone()).collect()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.instances.iter().map(|i| i.analytic_length).collect()
    }

    pub fn masks(&self) -> Vec<BinaryMask> {
        self.instances.iter().map(|i| i.mask.clone()).collect()
    }
}

fn validate(config: &SceneConfig) -> Result<()> {
    let (w_lo, w_hi) = config.width_range;
    let (l_lo, l_hi) = config.length_range;
    if w_lo == 0 || w_lo > w_hi || (w_lo..=w_hi).all(|w| w % 2 == 0) {
        return Err(Error::Range(format!(
            "width range {w_lo}..={w_hi} must contain an odd width >= 1"
        )));
    }
    if !(l_lo > 0.0 && l_lo <= l_hi) {
        return Err(Error::Range(format!("length range {l_lo}..={l_hi} is empty")));
    }
    if config.canvas.0 == 0 || config.canvas.1 == 0 {
        return Err(Error::Range("canvas must be at least 1x1".into()));
    }
    Ok(())
}

fn odd_width(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    let odds: Vec<usize> = (lo..=hi).filter(|w| w % 2 == 1).collect();
    odds[rng.gen_range(0..odds.len())]
}

/// Random control polygon with bounded turning, scaled so the curve has
/// `length` pixels of arc length, anchored at the origin.
pub fn random_control_polygon(rng: &mut impl Rng, length: f64) -> Vec<Point> {
    let n_points = rng.gen_range(3..=5);
    let max_turn = MAX_TURN_DEGREES.to_radians();
    let mut heading = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut pts = vec![(0.0, 0.0)];
    for _ in 1..n_points {
        let last = *pts.last().unwrap();
        pts.push((last.0 + heading.cos(), last.1 + heading.sin()));
        heading += rng.gen_range(-max_turn..=max_turn);
    }
    let unit = Centerline::from_control_points(&pts).length();
    let scale = length / unit;
    pts.iter().map(|&(x, y)| (x * scale, y * scale)).collect()
}

/// Places one curve of the given width/length on the canvas, or `None` if it
/// cannot fit with a margin of `width` around the stroke.
fn place(rng: &mut ChaCha8Rng, control: &[Point], width: usize, canvas: (usize, usize)) -> Option<Vec<Point>> {
    let line = Centerline::from_control_points(control);
    let (lo, hi) = line.bounds();
    let margin = width as f64 / 2.0 + width as f64 + 1.0;
    let free_x = canvas.0 as f64 - 2.0 * margin - (hi.0 - lo.0);
    let free_y = canvas.1 as f64 - 2.0 * margin - (hi.1 - lo.1);
    if free_x < 0.0 || free_y < 0.0 {
        return None;
    }
    let ox = margin - lo.0 + rng.gen_range(0.0..=free_x);
    let oy = margin - lo.1 + rng.gen_range(0.0..=free_y);
    Some(control.iter().map(|&(x, y)| (x + ox, y + oy)).collect())
}

/// Generates a single-image scene of smooth curves with known lengths.
/// Deterministic in `seed`; instances get image id 1 and annotation ids 1..=n.
pub fn generate_scene(seed: u64, config: &SceneConfig) -> Result<Scene> {
    generate_scene_for_image(seed, config, 1, 1)
}

pub(crate) fn generate_scene_for_image(
    seed: u64,
    config: &SceneConfig,
    image_id: i64,
    first_annotation_id: i64,
) -> Result<Scene> {
    validate(config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances: Vec<SynthInstance> = Vec::with_capacity(config.n_instances);
    for index in 0..config.n_instances {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let width = odd_width(&mut rng, config.width_range);
            let (l_lo, l_hi) = config.length_range;
            let length = if l_lo == l_hi { l_lo } else { rng.gen_range(l_lo..=l_hi) };
            let control = random_control_polygon(&mut rng, length);
            let Some(control) = place(&mut rng, &control, width, config.canvas) else {
                continue;
            };
            let centerline = Centerline::from_control_points(&control);
            let mask = centerline.render(width, config.canvas);
            let overlaps = instances
                .iter()
                .any(|other| iou_mask(&other.mask, &mask).map_or(true, |iou| iou >= MAX_PAIRWISE_IOU));
            if overlaps {
                continue;
            }
            placed = Some((control, centerline, mask, width));
            break;
        }
        let (control, centerline, mask, width) = placed.ok_or(Error::Placement {
            index,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        let gt = GtInstance {
            annotation_id: first_annotation_id + index as i64,
            image_id,
            category_id: 1,
            geometry: SegmentationGeometry::Rle(rle_encode(&mask)),
        };
        instances.push(SynthInstance {
            gt,
            analytic_length: centerline.length(),
            spec: CurveSpec {
                control_points: control,
                width,
                canvas: config.canvas,
                seed,
            },
            centerline,
            mask,
            width,
        });
    }
    Ok(Scene {
        image: ImageInfo {
            image_id,
            width: config.canvas.0,
            height: config.canvas.1,
            file_name: format!("synth_{image_id:04}.png"),
        },
        instances,
    })
}

/// Several scenes, one per image, with dataset-unique annotation ids.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub descriptor: DatasetDescriptor,
    pub scenes: Vec<Scene>,
}

impl SynthDataset {
    pub fn gt_instances(&self) -> Vec<GtInstance> {
        self.scenes.iter().flat_map(|s| s.gt_instances()).collect()
    }

    pub fn instances(&self) -> impl Iterator<Item = &SynthInstance> {
        self.scenes.iter().flat_map(|s| s.instances.iter())
    }
}

pub fn image_seed(seed: u64, image_index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(image_index as u64)
        .rotate_left(17)
}

pub fn generate_dataset(seed: u64, n_images: usize, config: &SceneConfig) -> Result<SynthDataset> {
    let mut scenes = Vec::with_capacity(n_images);
    let mut next_id = 1;
    for i in 0..n_images {
        let scene = generate_scene_for_image(image_seed(seed, i), config, i as i64 + 1, next_id)?;
        next_id += scene.instances.len() as i64;
        scenes.push(scene);
    }
    Ok(SynthDataset {
        descriptor: DatasetDescriptor {
            images: scenes.iter().map(|s| s.image.clone()).collect(),
            categories: vec![Category {
                category_id: 1,
                name: "dislocation".into(),
            }],
        },
        scenes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene() {
        let cfg = SceneConfig {
            n_instances: 0,
            ..SceneConfig::default()
        };
        assert!(generate_scene(3, &cfg).unwrap().instances.is_empty());
    }

    #[test]
    fn deterministic() {
        let cfg = SceneConfig::default();
        let a = generate_scene(11, &cfg).unwrap();
        let b = generate_scene(11, &cfg).unwrap();
        assert_eq!(a.masks(), b.masks());
        assert_eq!(a.lengths(), b.lengths());
        assert_ne!(generate_scene(12, &cfg).unwrap().masks(), a.masks());
    }

    #[test]
    fn respects_ranges_and_overlap() {
        let cfg = SceneConfig::default();
        let s = generate_scene(5, &cfg).unwrap();
        for inst in &s.instances {
            assert!(inst.width % 2 == 1 && (3..=7).contains(&inst.width));
            assert!((inst.analytic_length - 80.0) > -1e-6 && inst.analytic_length < 200.0 + 1e-6);
            let b = inst.mask.bbox().unwrap();
            assert!(b.x_min >= inst.width && b.y_min >= inst.width);
            assert!(b.x_max + inst.width < 512 && b.y_max + inst.width < 512);
        }
        for i in 0..s.instances.len() {
            for j in i + 1..s.instances.len() {
                assert!(iou_mask(&s.instances[i].mask, &s.instances[j].mask).unwrap() < MAX_PAIRWISE_IOU);
            }
        }
    }

    #[test]
    fn crowded_canvas_fails_placement() {
        let cfg = SceneConfig {
            n_instances: 1,
            canvas: (40, 40),
            width_range: (5, 5),
            length_range: (200.0, 200.0),
        };
        assert!(matches!(generate_scene(0, &cfg), Err(Error::Placement { .. })));
    }

    #[test]
    fn invalid_ranges() {
        let cfg = SceneConfig {
            width_range: (4, 4),
            ..SceneConfig::default()
        };
        assert!(matches!(generate_scene(0, &cfg), Err(Error::Range(_))));
    }
}
