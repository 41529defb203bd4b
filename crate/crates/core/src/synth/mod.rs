//! Synthetic scene generation: ground-truth spectral-3D models, camera and
//! light trajectories, and rendered multi-illuminant image sets.

pub mod curves;
pub mod dataset;
pub mod scene;

pub use curves::{camera_sensitivity, colorchart_24, led_illuminants, reflectance_dataset};
pub use dataset::{load_dataset, render_views, write_dataset, LoadedDataset};
pub use scene::{
    build_scene, make_camera_ring, make_chart_model, perturb_vertices, spherical_assignment,
    stripe_assignment, RingParams, SyntheticScene, SynthError,
};
