//! Joint refinement of mesh geometry and per-vertex spectral reflectance
//! from multi-view RGB images captured under known illumination spectra,
//! together with the forward renderer used to synthesize test scenes and
//! perform spectral relighting.
//!
//! The numerical core is generic over the scalar type ([`real::Real`], i.e.
//! `f32` or `f64`); the pipeline, file formats, and CLI run on `f64` via the
//! aliases below.

pub mod costs;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod real;
pub mod rendering;
pub mod solver;
pub mod synth;
pub mod spectra;

pub use real::Real;

/// Scalar used by the pipeline entry points and the file formats.
pub type Scalar = f64;

pub type SpectralCurve64 = spectra::SpectralCurve<Scalar>;
pub type SpectralBasis64 = spectra::SpectralBasis<Scalar>;
pub type SceneMesh64 = geometry::SceneMesh<Scalar>;
pub type CameraPose64 = geometry::CameraPose<Scalar>;
