//! Triangle meshes, cameras, ray casting, visibility, and shadow masks.

pub mod camera;
pub mod mesh;
pub mod plane;
pub mod raycast;
pub mod shapes;
pub mod subdivide;
pub mod visibility;

pub use camera::{look_at, CameraPose, CameraRecord};
pub use mesh::{skew, SceneMesh};
pub use plane::{local_plane_distance, LocalPlaneFit};
pub use raycast::{intersect_brute_force, intersect_triangle, Bvh, RayHit};
pub use subdivide::subdivide_sqrt3;
pub use visibility::{
    compute_shadow_masks, compute_visibility, ShadowMaskMatrix, VisibilitySet,
    RAY_OFFSET_REL, VISIBILITY_MARGIN_PX,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
    #[error("face {0} references a vertex out of range")]
    FaceIndexOutOfRange(usize),
    #[error("face {0} repeats a vertex index")]
    DegenerateFace(usize),
    #[error("face {0} shares an edge with the same winding as its neighbor")]
    InconsistentWinding(usize),
    #[error("edge ({0}, {1}) is shared by more than two faces")]
    NonManifoldEdge(usize, usize),
    #[error("mesh topology is not supported by this operation")]
    UnsupportedTopology,
    #[error("vertex {0} has no incident face")]
    IsolatedVertex(usize),
    #[error("vertex {0} has a zero-area neighborhood")]
    DegenerateNormal(usize),
    #[error("vertex {vertex} has only {count} neighbors; at least 3 required")]
    TooFewNeighbors { vertex: usize, count: usize },
    #[error("vertex {0} has a degenerate neighborhood")]
    DegenerateNeighborhood(usize),
    #[error("rotation matrix is not orthonormal with determinant +1")]
    NotARotation,
    #[error("intrinsics are invalid (non-positive focal length or principal point outside image)")]
    BadIntrinsics,
    #[error("vertex count changed: expected {expected}, got {got}")]
    VertexCountChanged { expected: usize, got: usize },
}
