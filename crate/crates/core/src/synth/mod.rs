//! Synthetic scenes of smooth curvilinear instances with known centreline
//! lengths, and controlled perturbations that turn them into predictions.

mod curve;
mod perturb;
mod scene;

pub use curve::{Centerline, CurveSpec, Point};
pub use perturb::{fracture_mask, perturb, PerturbationSpec, Perturbed};
pub use scene::{
    generate_dataset, generate_scene, image_seed, random_control_polygon, Scene, SceneConfig, SynthDataset,
    SynthInstance, MAX_PAIRWISE_IOU, MAX_PLACEMENT_ATTEMPTS, MAX_TURN_DEGREES,
};
