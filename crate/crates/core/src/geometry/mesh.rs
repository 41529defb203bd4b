//! Triangle mesh storage with validated topology.

use nalgebra::{Matrix3, Vector3};
use std::collections::HashMap;

use crate::real::{real, Real};

use super::GeometryError;

/// Skew-symmetric matrix such that `skew(a) * b == a.cross(&b)`.
pub fn skew<T: Real>(a: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -a.z,
        a.y,
        a.z,
        T::zero(),
        -a.x,
        -a.y,
        a.x,
        T::zero(),
    )
}

/// A triangle mesh with counterclockwise (outward) face winding.
///
/// Topology is validated at construction: indices in range, no degenerate
/// faces, every undirected edge shared by at most two faces with opposite
/// winding. Adjacency structures are derived from the face list and stay
/// immutable; only vertex positions may be replaced afterwards.
#[derive(Clone, Debug)]
pub struct SceneMesh<T: Real> {
    vertices: Vec<Vector3<T>>,
    faces: Vec<[u32; 3]>,
    vertex_adjacency: Vec<Vec<u32>>,
    vertex_faces: Vec<Vec<u32>>,
    mean_edge_length: T,
}

impl<T: Real> SceneMesh<T> {
    pub fn new(vertices: Vec<Vector3<T>>, faces: Vec<[u32; 3]>) -> Result<Self, GeometryError> {
        let n_v = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(GeometryError::NonFiniteVertex(i));
            }
        }
        let mut directed: HashMap<(u32, u32), u32> = HashMap::new();
        let mut undirected: HashMap<(u32, u32), u32> = HashMap::new();
        for (f, face) in faces.iter().enumerate() {
            let [a, b, c] = *face;
            if a as usize >= n_v || b as usize >= n_v || c as usize >= n_v {
                return Err(GeometryError::FaceIndexOutOfRange(f));
            }
            if a == b || b == c || a == c {
                return Err(GeometryError::DegenerateFace(f));
            }
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if directed.insert((u, v), f as u32).is_some() {
                    // Same directed edge twice means two faces share an edge
                    // with the same winding.
                    return Err(GeometryError::InconsistentWinding(f));
                }
                let key = (u.min(v), u.max(v));
                let count = undirected.entry(key).or_insert(0);
                *count += 1;
                if *count > 2 {
                    return Err(GeometryError::NonManifoldEdge(u as usize, v as usize));
                }
            }
        }

        let mut vertex_adjacency = vec![Vec::new(); n_v];
        for &(u, v) in undirected.keys() {
            vertex_adjacency[u as usize].push(v);
            vertex_adjacency[v as usize].push(u);
        }
        for adj in &mut vertex_adjacency {
            adj.sort_unstable();
        }
        let mut vertex_faces = vec![Vec::new(); n_v];
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                vertex_faces[v as usize].push(f as u32);
            }
        }

        let mut mesh = Self {
            vertices,
            faces,
            vertex_adjacency,
            vertex_faces,
            mean_edge_length: T::zero(),
        };
        mesh.mean_edge_length = mesh.compute_mean_edge_length();
        Ok(mesh)
    }

    fn compute_mean_edge_length(&self) -> T {
        let mut total = T::zero();
        let mut count = 0usize;
        for (i, adj) in self.vertex_adjacency.iter().enumerate() {
            for &j in adj {
                if (j as usize) > i {
                    total += (self.vertices[i] - self.vertices[j as usize]).norm();
                    count += 1;
                }
            }
        }
        if count == 0 {
            T::zero()
        } else {
            total / real(count as f64)
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vector3<T>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Vector3<T> {
        self.vertices[i]
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [u32; 3] {
        self.faces[f]
    }

    pub fn face_positions(&self, f: usize) -> [Vector3<T>; 3] {
        let [a, b, c] = self.faces[f];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    /// Sorted neighbor vertex indices of `i`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.vertex_adjacency[i]
    }

    /// Faces incident to vertex `i`.
    pub fn incident_faces(&self, i: usize) -> &[u32] {
        &self.vertex_faces[i]
    }

    pub fn mean_edge_length(&self) -> T {
        self.mean_edge_length
    }

    /// Replaces vertex positions, keeping topology. Invalidates any
    /// acceleration structure built on the old positions.
    pub fn set_vertices(&mut self, vertices: Vec<Vector3<T>>) -> Result<(), GeometryError> {
        if vertices.len() != self.vertices.len() {
            return Err(GeometryError::VertexCountChanged {
                expected: self.vertices.len(),
                got: vertices.len(),
            });
        }
        for (i, v) in vertices.iter().enumerate() {
            if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
                return Err(GeometryError::NonFiniteVertex(i));
            }
        }
        self.vertices = vertices;
        self.mean_edge_length = self.compute_mean_edge_length();
        Ok(())
    }

    pub fn bounding_box(&self) -> (Vector3<T>, Vector3<T>) {
        let mut lo = Vector3::from_element(T::max_value().unwrap());
        let mut hi = Vector3::from_element(T::min_value().unwrap());
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> T {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Unnormalized area-weighted normal: half the sum of incident-face edge
    /// cross products.
    pub fn area_weighted_normal(&self, i: usize) -> Result<Vector3<T>, GeometryError> {
        if self.vertex_faces[i].is_empty() {
            return Err(GeometryError::IsolatedVertex(i));
        }
        let half = real::<T>(0.5);
        let mut m = Vector3::zeros();
        for &f in &self.vertex_faces[i] {
            let [p, q, r] = self.face_positions(f as usize);
            m += (q - p).cross(&(r - p)) * half;
        }
        Ok(m)
    }

    /// Area-weighted vertex normal, unit length.
    pub fn vertex_normal(&self, i: usize) -> Result<Vector3<T>, GeometryError> {
        let m = self.area_weighted_normal(i)?;
        let norm = m.norm();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(GeometryError::DegenerateNormal(i));
        }
        Ok(m / norm)
    }

    /// Vertex normal together with its derivative with respect to every
    /// vertex of the closed 1-ring (including `i` itself). Entry `(k, J)`
    /// means `d n / d x_k = J`.
    pub fn vertex_normal_with_jacobian(
        &self,
        i: usize,
    ) -> Result<(Vector3<T>, Vec<(u32, Matrix3<T>)>), GeometryError> {
        if self.vertex_faces[i].is_empty() {
            return Err(GeometryError::IsolatedVertex(i));
        }
        let half = real::<T>(0.5);
        let mut m = Vector3::zeros();
        let mut dm: Vec<(u32, Matrix3<T>)> = Vec::with_capacity(self.vertex_adjacency[i].len() + 1);
        let add = |dm: &mut Vec<(u32, Matrix3<T>)>, v: u32, contrib: Matrix3<T>| {
            if let Some(entry) = dm.iter_mut().find(|(k, _)| *k == v) {
                entry.1 += contrib;
            } else {
                dm.push((v, contrib));
            }
        };
        for &f in &self.vertex_faces[i] {
            let [a, b, c] = self.faces[f as usize];
            let p = self.vertices[a as usize];
            let q = self.vertices[b as usize];
            let r = self.vertices[c as usize];
            let u = q - p;
            let v = r - p;
            m += u.cross(&v) * half;
            // d(u x v)/du = -skew(v), d(u x v)/dv = skew(u).
            let du = skew(&v) * (-half);
            let dv = skew(&u) * half;
            add(&mut dm, a, -du - dv);
            add(&mut dm, b, du);
            add(&mut dm, c, dv);
        }
        let norm = m.norm();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(GeometryError::DegenerateNormal(i));
        }
        let n = m / norm;
        let projector = (Matrix3::identity() - n * n.transpose()) / norm;
        let mut jac: Vec<(u32, Matrix3<T>)> = dm
            .into_iter()
            .map(|(k, d)| (k, projector * d))
            .collect();
        jac.sort_unstable_by_key(|(k, _)| *k);
        Ok((n, jac))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square() -> SceneMesh<f64> {
        // Unit square in the z=0 plane, two CCW triangles, normal +z.
        SceneMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = SceneMesh::new(vec![Vector3::<f64>::zeros()], vec![[0, 0, 1]]).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateFace(0) | GeometryError::FaceIndexOutOfRange(0)));
    }

    #[test]
    fn rejects_inconsistent_winding() {
        let err = SceneMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
            ],
            // Second face repeats the directed edge (0, 1).
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap_err();
        assert!(matches!(err, GeometryError::InconsistentWinding(1)));
    }

    #[test]
    fn rejects_nonmanifold_edge() {
        let err = SceneMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
                Vector3::new(0.0, -1.0, 0.0),
            ],
            vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            GeometryError::NonManifoldEdge(..) | GeometryError::InconsistentWinding(_)
        ));
    }

    #[test]
    fn adjacency_is_sorted_and_complete() {
        let mesh = square();
        assert_eq!(mesh.neighbors(0), &[1, 2, 3]);
        assert_eq!(mesh.neighbors(1), &[0, 2]);
        assert_eq!(mesh.incident_faces(2), &[0, 1]);
    }

    #[test]
    fn planar_patch_normal() {
        let mesh = square();
        for i in 0..4 {
            let n = mesh.vertex_normal(i).unwrap();
            assert_relative_eq!((n - Vector3::new(0.0, 0.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cube_corner_normal_is_diagonal() {
        // Three orthogonal unit right triangles of equal area meeting at the
        // origin, outward normals +x, +y, +z.
        let mesh = SceneMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3], [0, 3, 1]],
        )
        .unwrap();
        let n = mesh.vertex_normal(0).unwrap();
        let expected = Vector3::new(1.0, 1.0, 1.0) / 3.0f64.sqrt();
        assert_relative_eq!((n - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn isolated_vertex_has_no_normal() {
        let mesh = SceneMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(5.0, 5.0, 5.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            mesh.vertex_normal(3),
            Err(GeometryError::IsolatedVertex(3))
        ));
    }

    #[test]
    fn zero_area_neighborhood_is_degenerate() {
        let mesh = SceneMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(2.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            mesh.vertex_normal(0),
            Err(GeometryError::DegenerateNormal(0))
        ));
    }

    #[test]
    fn normal_jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut verts: Vec<Vector3<f64>> = vec![
                Vector3::new(0.0, 0.0, 0.2),
                Vector3::new(1.0, 0.1, 0.0),
                Vector3::new(0.4, 1.0, -0.1),
                Vector3::new(-0.8, 0.6, 0.05),
                Vector3::new(-0.5, -0.9, 0.0),
            ];
            for v in &mut verts {
                *v += Vector3::new(
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                    rng.random_range(-0.05..0.05),
                );
            }
            let faces = vec![[0u32, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
            let mesh = SceneMesh::new(verts.clone(), faces.clone()).unwrap();
            let (_, jac) = mesh.vertex_normal_with_jacobian(0).unwrap();
            let h = 1e-6;
            for (k, j) in &jac {
                for axis in 0..3 {
                    let mut plus = verts.clone();
                    plus[*k as usize][axis] += h;
                    let mut minus = verts.clone();
                    minus[*k as usize][axis] -= h;
                    let np = SceneMesh::new(plus, faces.clone())
                        .unwrap()
                        .vertex_normal(0)
                        .unwrap();
                    let nm = SceneMesh::new(minus, faces.clone())
                        .unwrap()
                        .vertex_normal(0)
                        .unwrap();
                    let fd = (np - nm) / (2.0 * h);
                    let ana = j.column(axis);
                    assert_relative_eq!((fd - ana).norm(), 0.0, epsilon = 1e-6);
                }
            }
        }
    }
}
