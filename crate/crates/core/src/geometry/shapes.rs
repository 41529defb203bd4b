//! Procedural test meshes.

use nalgebra::Vector3;
use std::collections::HashMap;

use crate::real::{real, Real};

use super::mesh::SceneMesh;

pub fn single_triangle<T: Real>() -> SceneMesh<T> {
    SceneMesh::new(
        vec![
            Vector3::new(T::zero(), T::zero(), T::zero()),
            Vector3::new(T::one(), T::zero(), T::zero()),
            Vector3::new(T::zero(), T::one(), T::zero()),
        ],
        vec![[0, 1, 2]],
    )
    .expect("valid triangle")
}

/// Regular icosahedron with outward winding.
pub fn icosahedron<T: Real>(radius: T) -> SceneMesh<T> {
    let phi = real::<T>((1.0 + 5.0f64.sqrt()) / 2.0);
    let raw = [
        (-T::one(), phi, T::zero()),
        (T::one(), phi, T::zero()),
        (-T::one(), -phi, T::zero()),
        (T::one(), -phi, T::zero()),
        (T::zero(), -T::one(), phi),
        (T::zero(), T::one(), phi),
        (T::zero(), -T::one(), -phi),
        (T::zero(), T::one(), -phi),
        (phi, T::zero(), -T::one()),
        (phi, T::zero(), T::one()),
        (-phi, T::zero(), -T::one()),
        (-phi, T::zero(), T::one()),
    ];
    let vertices: Vec<Vector3<T>> = raw
        .iter()
        .map(|&(x, y, z)| Vector3::new(x, y, z).normalize() * radius)
        .collect();
    let faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    SceneMesh::new(vertices, faces).expect("valid icosahedron")
}

/// Icosphere: icosahedron with `subdivisions` rounds of 1-to-4 midpoint
/// refinement, vertices projected onto the sphere.
pub fn icosphere<T: Real>(subdivisions: u32, radius: T) -> SceneMesh<T> {
    let base = icosahedron(radius);
    let mut vertices = base.vertices().to_vec();
    let mut faces = base.faces().to_vec();
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for face in &faces {
            let [a, b, c] = *face;
            let mut midpoint = |u: u32, v: u32, vertices: &mut Vec<Vector3<T>>| -> u32 {
                let key = (u.min(v), u.max(v));
                *midpoints.entry(key).or_insert_with(|| {
                    let m = (vertices[u as usize] + vertices[v as usize]) * real::<T>(0.5);
                    vertices.push(m.normalize() * radius);
                    (vertices.len() - 1) as u32
                })
            };
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next_faces.push([a, ab, ca]);
            next_faces.push([b, bc, ab]);
            next_faces.push([c, ca, bc]);
            next_faces.push([ab, bc, ca]);
        }
        faces = next_faces;
    }
    SceneMesh::new(vertices, faces).expect("valid icosphere")
}

/// Open grid in the z=0 plane; `nx` by `ny` vertices spaced by `spacing`,
/// centered at the origin, normals +z.
pub fn plane_grid<T: Real>(nx: usize, ny: usize, spacing: T) -> SceneMesh<T> {
    assert!(nx >= 2 && ny >= 2);
    let half_x = real::<T>((nx - 1) as f64 / 2.0) * spacing;
    let half_y = real::<T>((ny - 1) as f64 / 2.0) * spacing;
    let mut vertices = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            vertices.push(Vector3::new(
                real::<T>(i as f64) * spacing - half_x,
                real::<T>(j as f64) * spacing - half_y,
                T::zero(),
            ));
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    let idx = |i: usize, j: usize| (j * nx + i) as u32;
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    SceneMesh::new(vertices, faces).expect("valid grid")
}

/// Closed tube swept along a (p, q) torus knot; a compact self-shadowing
/// test object.
pub fn tube_knot<T: Real>(
    p: u32,
    q: u32,
    segments: usize,
    ring: usize,
    tube_radius: T,
    scale: T,
) -> SceneMesh<T> {
    assert!(segments >= 8 && ring >= 3);
    let tau = real::<T>(std::f64::consts::TAU);
    let pf = real::<T>(p as f64);
    let qf = real::<T>(q as f64);
    let center = |t: T| -> Vector3<T> {
        let r = real::<T>(2.0) + (qf * t).cos();
        Vector3::new(r * (pf * t).cos(), r * (pf * t).sin(), (qf * t).sin()) * scale
    };
    let mut vertices = Vec::with_capacity(segments * ring);
    for s in 0..segments {
        let t = tau * real::<T>(s as f64) / real::<T>(segments as f64);
        let dt = tau / real::<T>(segments as f64 * 64.0);
        let c = center(t);
        let tangent = (center(t + dt) - center(t - dt)).normalize();
        let mut side = tangent.cross(&Vector3::z());
        if side.norm() < real(1e-6) {
            side = tangent.cross(&Vector3::x());
        }
        let side = side.normalize();
        let up = tangent.cross(&side).normalize();
        for k in 0..ring {
            let a = tau * real::<T>(k as f64) / real::<T>(ring as f64);
            vertices.push(c + (side * a.cos() + up * a.sin()) * tube_radius);
        }
    }
    let mut faces = Vec::with_capacity(2 * segments * ring);
    let idx = |s: usize, k: usize| ((s % segments) * ring + (k % ring)) as u32;
    for s in 0..segments {
        for k in 0..ring {
            let a = idx(s, k);
            let b = idx(s + 1, k);
            let c = idx(s + 1, k + 1);
            let d = idx(s, k + 1);
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    SceneMesh::new(vertices, faces).expect("valid tube knot")
}
