//! Kobbelt sqrt(3) subdivision.
//!
//! One new vertex per face at the centroid, smoothing of the original
//! interior vertices, and flipping of the original interior edges. Face
//! count triples per round; boundary edges keep their two endpoints and
//! connect to the single adjacent centroid.

use nalgebra::Vector3;
use std::collections::HashMap;

use crate::real::{real, Real};

use super::mesh::SceneMesh;
use super::GeometryError;

pub fn subdivide_sqrt3<T: Real>(mesh: &SceneMesh<T>) -> Result<SceneMesh<T>, GeometryError> {
    let n_v = mesh.n_vertices();
    let n_f = mesh.n_faces();

    // Map each undirected edge to its adjacent faces, rechecking manifoldness
    // for callers that bypass `SceneMesh::new` validation invariants.
    let mut edge_faces: HashMap<(u32, u32), Vec<(u32, bool)>> = HashMap::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        let [a, b, c] = *face;
        for (u, v) in [(a, b), (b, c), (c, a)] {
            let key = (u.min(v), u.max(v));
            let forward = u < v;
            let entry = edge_faces.entry(key).or_default();
            entry.push((f as u32, forward));
            if entry.len() > 2 {
                return Err(GeometryError::UnsupportedTopology);
            }
        }
    }
    for (_, faces) in edge_faces.iter() {
        if faces.len() == 2 && faces[0].1 == faces[1].1 {
            return Err(GeometryError::UnsupportedTopology);
        }
    }

    let mut boundary = vec![false; n_v];
    for (&(u, v), faces) in &edge_faces {
        if faces.len() == 1 {
            boundary[u as usize] = true;
            boundary[v as usize] = true;
        }
    }

    // Smoothed positions for original vertices; boundary vertices stay put.
    let mut vertices: Vec<Vector3<T>> = Vec::with_capacity(n_v + n_f);
    for i in 0..n_v {
        let neighbors = mesh.neighbors(i);
        if boundary[i] || neighbors.is_empty() {
            vertices.push(mesh.vertex(i));
            continue;
        }
        let n = neighbors.len();
        let a_n = real::<T>((4.0 - 2.0 * (2.0 * std::f64::consts::PI / n as f64).cos()) / 9.0);
        let mut sum = Vector3::zeros();
        for &j in neighbors {
            sum += mesh.vertex(j as usize);
        }
        let smoothed =
            mesh.vertex(i) * (T::one() - a_n) + sum * (a_n / real::<T>(n as f64));
        vertices.push(smoothed);
    }
    // Centroids of the original faces.
    for f in 0..n_f {
        let [a, b, c] = mesh.face_positions(f);
        vertices.push((a + b + c) / real::<T>(3.0));
    }
    let centroid_index = |f: u32| n_v as u32 + f;

    // Post-flip connectivity is built directly per original edge.
    let mut faces: Vec<[u32; 3]> = Vec::with_capacity(3 * n_f);
    let mut sorted_edges: Vec<(&(u32, u32), &Vec<(u32, bool)>)> = edge_faces.iter().collect();
    sorted_edges.sort_unstable_by_key(|(k, _)| **k);
    for (&(u, v), adjacent) in sorted_edges {
        match adjacent.as_slice() {
            [(f, forward)] => {
                // Boundary edge: one triangle from edge to the centroid, with
                // the winding of the owning face.
                let (a, b) = if *forward { (u, v) } else { (v, u) };
                faces.push([a, b, centroid_index(*f)]);
            }
            [(f0, forward0), (f1, _)] => {
                // Interior edge flipped to connect the two centroids.
                let (a, b) = if *forward0 { (u, v) } else { (v, u) };
                let (cf, cg) = (centroid_index(*f0), centroid_index(*f1));
                faces.push([cf, a, cg]);
                faces.push([cg, b, cf]);
            }
            _ => return Err(GeometryError::UnsupportedTopology),
        }
    }

    SceneMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;
    use approx::assert_relative_eq;

    fn euler_characteristic<T: Real>(mesh: &SceneMesh<T>) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for face in mesh.faces() {
            let [a, b, c] = *face;
            for (u, v) in [(a, b), (b, c), (c, a)] {
                edges.insert((u.min(v), u.max(v)));
            }
        }
        mesh.n_vertices() as i64 - edges.len() as i64 + mesh.n_faces() as i64
    }

    #[test]
    fn single_triangle_becomes_three() {
        let mesh = shapes::single_triangle::<f64>();
        let out = subdivide_sqrt3(&mesh).unwrap();
        assert_eq!(out.n_vertices(), 4);
        assert_eq!(out.n_faces(), 3);
    }

    #[test]
    fn icosahedron_triples_and_keeps_euler() {
        let mesh = shapes::icosahedron::<f64>(1.0);
        assert_eq!(mesh.n_faces(), 20);
        assert_eq!(euler_characteristic(&mesh), 2);
        let out = subdivide_sqrt3(&mesh).unwrap();
        assert_eq!(out.n_faces(), 60);
        assert_eq!(euler_characteristic(&out), 2);
        let again = subdivide_sqrt3(&out).unwrap();
        assert_eq!(again.n_faces(), 180);
        assert_eq!(euler_characteristic(&again), 2);
    }

    #[test]
    fn closed_mesh_stays_watertight() {
        let mesh = shapes::icosahedron::<f64>(1.0);
        let out = subdivide_sqrt3(&mesh).unwrap();
        // No boundary edges: every undirected edge is shared by two faces.
        let mut counts = std::collections::HashMap::new();
        for face in out.faces() {
            let [a, b, c] = *face;
            for (u, v) in [(a, b), (b, c), (c, a)] {
                *counts.entry((u.min(v), u.max(v))).or_insert(0) += 1;
            }
        }
        assert!(counts.values().all(|&c| c == 2));
    }

    #[test]
    fn smoothing_preserves_planar_interior() {
        // Flat fan: the interior vertex must stay in the plane.
        let grid = shapes::plane_grid::<f64>(4, 4, 0.5);
        let out = subdivide_sqrt3(&grid).unwrap();
        for v in out.vertices() {
            assert_relative_eq!(v.z, 0.0, epsilon = 1e-14);
        }
    }
}
