//! File formats: meshes, spectra, images, configs, and manifests.

pub mod config;
pub mod image_io;
pub mod mesh_io;
pub mod scene_io;
pub mod spectra_io;

pub use config::{
    AssignmentKind, CostsConfig, InitConfig, MeshSpec, RunConfig, SolverConfig, SynthConfig,
    CONFIG_SCHEMA_VERSION,
};
pub use image_io::{colormap, read_pfm, srgb_encode, write_colormap_legend, write_pfm, write_png_srgb};
pub use mesh_io::{read_obj, read_ply, write_obj, write_ply};
pub use scene_io::{
    read_cameras, read_light_solution, write_cameras, write_light_solution, DatasetManifest,
    FixedLights, IlluminantFile, LightSolution, SensitivityFiles, MANIFEST_SCHEMA_VERSION,
};
pub use spectra_io::{
    dataset_hash, read_basis_csv, read_curve_csv, read_matrix_csv, write_basis_csv,
    write_curve_csv, write_matrix_csv, BasisSidecar,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}:{line}: {what}")]
    Malformed {
        path: String,
        line: usize,
        what: String,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("image error: {0}")]
    Image(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Spectra(#[from] crate::spectra::SpectraError),
}
