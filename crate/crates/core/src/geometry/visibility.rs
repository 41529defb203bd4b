//! Per-vertex camera visibility and cast-shadow masks.
//!
//! Both tests shoot a segment from the vertex, offset by a small multiple of
//! the mean edge length along the vertex normal, and exclude the vertex's
//! own incident faces so tangent faces cannot self-occlude.

use nalgebra::{Vector2, Vector3};

use crate::real::{real, Real};

use super::camera::CameraPose;
use super::mesh::SceneMesh;
use super::raycast::Bvh;

/// Relative ray offset: `eps_ray = RAY_OFFSET_REL * mean_edge_length`.
pub const RAY_OFFSET_REL: f64 = 1e-4;

/// Margin (pixels) required between a projection and the image border, so a
/// visible vertex can always be sampled bilinearly.
pub const VISIBILITY_MARGIN_PX: f64 = 1.0;

/// For each vertex, the sorted list of camera indices it is visible from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VisibilitySet {
    sets: Vec<Vec<u32>>,
}

impl VisibilitySet {
    pub fn new(sets: Vec<Vec<u32>>) -> Self {
        Self { sets }
    }

    pub fn visible_cameras(&self, vertex: usize) -> &[u32] {
        &self.sets[vertex]
    }

    pub fn count(&self, vertex: usize) -> usize {
        self.sets[vertex].len()
    }

    pub fn n_vertices(&self) -> usize {
        self.sets.len()
    }

    pub fn is_visible(&self, vertex: usize, camera: u32) -> bool {
        self.sets[vertex].binary_search(&camera).is_ok()
    }

    /// Vertices visible from no camera; excluded from the rendering term.
    pub fn empty_vertices(&self) -> Vec<usize> {
        self.sets
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_empty())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Binary vertex-times-view shadow matrix; bit 0 means the segment from the
/// vertex to that view's light position is blocked by the mesh.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowMaskMatrix {
    n_vertices: usize,
    n_views: usize,
    bits: Vec<bool>,
}

impl ShadowMaskMatrix {
    pub fn all_lit(n_vertices: usize, n_views: usize) -> Self {
        Self {
            n_vertices,
            n_views,
            bits: vec![true; n_vertices * n_views],
        }
    }

    pub fn get(&self, vertex: usize, view: usize) -> bool {
        self.bits[vertex * self.n_views + view]
    }

    pub fn set(&mut self, vertex: usize, view: usize, lit: bool) {
        self.bits[vertex * self.n_views + view] = lit;
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    pub fn lit_count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Number of entries that differ from `other`.
    pub fn diff_count(&self, other: &Self) -> usize {
        assert_eq!(self.bits.len(), other.bits.len());
        self.bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// Ray origin for self-occlusion tests at vertex `i`, or `None` when the
/// vertex has no usable normal.
fn offset_origin<T: Real>(mesh: &SceneMesh<T>, i: usize, eps: T) -> Option<Vector3<T>> {
    let n = mesh.vertex_normal(i).ok()?;
    Some(mesh.vertex(i) + n * eps)
}

/// A camera sees a vertex when the projection lands inside the image with a
/// margin, depth is positive, and the segment to the camera center is free.
pub fn compute_visibility<T: Real>(
    mesh: &SceneMesh<T>,
    poses: &[CameraPose<T>],
    bvh: &Bvh<T>,
) -> VisibilitySet {
    let eps = real::<T>(RAY_OFFSET_REL) * mesh.mean_edge_length();
    let margin = real::<T>(VISIBILITY_MARGIN_PX);
    let sets = (0..mesh.n_vertices())
        .map(|i| {
            let mut cams = Vec::new();
            let Some(origin) = offset_origin(mesh, i, eps) else {
                return cams;
            };
            let exclude = mesh.incident_faces(i);
            for (c, pose) in poses.iter().enumerate() {
                let Some((pixel, _)) = pose.project(&mesh.vertex(i)) else {
                    continue;
                };
                if !pose.in_bounds(&Vector2::new(pixel.x, pixel.y), margin) {
                    continue;
                }
                let to_cam = pose.center() - origin;
                let dist = to_cam.norm();
                if dist <= eps {
                    continue;
                }
                let dir = to_cam / dist;
                if !bvh.occluded(mesh, &origin, &dir, eps, dist - eps, exclude) {
                    cams.push(c as u32);
                }
            }
            cams
        })
        .collect();
    VisibilitySet::new(sets)
}

/// Shadow bit per (vertex, view): lit iff the segment from the vertex to the
/// view's light position is unoccluded.
pub fn compute_shadow_masks<T: Real>(
    mesh: &SceneMesh<T>,
    light_positions: &[Vector3<T>],
    bvh: &Bvh<T>,
) -> ShadowMaskMatrix {
    let eps = real::<T>(RAY_OFFSET_REL) * mesh.mean_edge_length();
    let n_views = light_positions.len();
    let mut masks = ShadowMaskMatrix::all_lit(mesh.n_vertices(), n_views);
    for i in 0..mesh.n_vertices() {
        let Some(origin) = offset_origin(mesh, i, eps) else {
            for c in 0..n_views {
                masks.set(i, c, false);
            }
            continue;
        };
        let exclude = mesh.incident_faces(i);
        for (c, light) in light_positions.iter().enumerate() {
            let to_light = light - origin;
            let dist = to_light.norm();
            if dist <= eps {
                continue; // light on the surface: keep lit
            }
            let dir = to_light / dist;
            if bvh.occluded(mesh, &origin, &dir, eps, dist - eps, exclude) {
                masks.set(i, c, false);
            }
        }
    }
    masks
}
