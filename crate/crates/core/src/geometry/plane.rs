//! Least-squares local plane through a vertex's neighbors, with derivatives.
//!
//! The plane normal is the eigenvector of the smallest eigenvalue of the
//! neighbor covariance; its sign is fixed toward the vertex normal so the
//! signed distance is smooth almost everywhere. The scale is the mean
//! incident edge length, which makes the distance ratio dimensionless.

use nalgebra::{Matrix3, RowVector3, SymmetricEigen, Vector3};

use crate::real::{real, Real};

use super::mesh::SceneMesh;
use super::GeometryError;

/// Signed distance of vertex `i` to the least-squares plane of its
/// neighbors, and the mean incident edge length used as the scale.
pub fn local_plane_distance<T: Real>(
    mesh: &SceneMesh<T>,
    i: usize,
) -> Result<(T, T), GeometryError> {
    let fit = LocalPlaneFit::compute(mesh, i, false)?;
    Ok((fit.distance, fit.scale))
}

/// Plane fit with derivatives of distance and scale with respect to the
/// vertex and each neighbor position.
#[derive(Clone, Debug)]
pub struct LocalPlaneFit<T: Real> {
    pub distance: T,
    pub scale: T,
    /// `(vertex index, d distance / d x)` rows; first entry is `i` itself.
    pub d_distance: Vec<(u32, RowVector3<T>)>,
    /// `(vertex index, d scale / d x)` rows; first entry is `i` itself.
    pub d_scale: Vec<(u32, RowVector3<T>)>,
}

impl<T: Real> LocalPlaneFit<T> {
    pub fn compute(mesh: &SceneMesh<T>, i: usize, with_jacobian: bool) -> Result<Self, GeometryError> {
        let neighbors = mesh.neighbors(i);
        let n = neighbors.len();
        if n < 3 {
            return Err(GeometryError::TooFewNeighbors { vertex: i, count: n });
        }
        let x = mesh.vertex(i);
        let inv_n = T::one() / real::<T>(n as f64);

        let mut centroid = Vector3::zeros();
        for &j in neighbors {
            centroid += mesh.vertex(j as usize);
        }
        centroid *= inv_n;

        let mut cov = Matrix3::zeros();
        for &j in neighbors {
            let d = mesh.vertex(j as usize) - centroid;
            cov += d * d.transpose();
        }

        let eigen = SymmetricEigen::new(cov);
        let mut min_k = 0;
        for k in 1..3 {
            if eigen.eigenvalues[k] < eigen.eigenvalues[min_k] {
                min_k = k;
            }
        }
        let mut normal: Vector3<T> = eigen.eigenvectors.column(min_k).into_owned();
        // Orient toward the vertex normal when available, else toward the
        // vertex side of the plane.
        let reference = mesh
            .vertex_normal(i)
            .unwrap_or_else(|_| {
                let d = x - centroid;
                if d.norm() > T::zero() {
                    d.normalize()
                } else {
                    Vector3::z()
                }
            });
        if normal.dot(&reference) < T::zero() {
            normal = -normal;
        }

        let distance = normal.dot(&(x - centroid));

        let mut scale = T::zero();
        for &j in neighbors {
            scale += (mesh.vertex(j as usize) - x).norm();
        }
        scale *= inv_n;
        if scale <= T::zero() {
            return Err(GeometryError::DegenerateNeighborhood(i));
        }

        if !with_jacobian {
            return Ok(Self {
                distance,
                scale,
                d_distance: Vec::new(),
                d_scale: Vec::new(),
            });
        }

        // Eigenvector perturbation: d u = (mu I - C)^+ dC u, where the
        // pseudo-inverse spans the two larger eigenpairs.
        let mu = eigen.eigenvalues[min_k];
        let mut pinv = Matrix3::zeros();
        for k in 0..3 {
            if k == min_k {
                continue;
            }
            let gap = mu - eigen.eigenvalues[k];
            // Nearly repeated smallest eigenvalue: plane direction is not
            // differentiable; damp the response instead of dividing by ~0.
            let gap = if gap.abs() < real(1e-300) { -real::<T>(1e-300) } else { gap };
            let v: Vector3<T> = eigen.eigenvectors.column(k).into_owned();
            pinv += v * v.transpose() / gap;
        }

        let mut d_distance = Vec::with_capacity(n + 1);
        let mut d_scale = Vec::with_capacity(n + 1);

        // d distance / d x_i: the plane does not depend on x_i.
        d_distance.push((i as u32, normal.transpose()));
        // d scale / d x_i.
        let mut ds_dx = RowVector3::zeros();
        for &j in neighbors {
            let d = x - mesh.vertex(j as usize);
            let norm = d.norm();
            if norm > T::zero() {
                ds_dx += d.transpose() * (inv_n / norm);
            }
        }
        d_scale.push((i as u32, ds_dx));

        let offset = x - centroid;
        for &j in neighbors {
            let xj = mesh.vertex(j as usize);
            let dj = xj - centroid;
            let mut d_dist = RowVector3::zeros();
            for axis in 0..3 {
                // dC for a unit move of x_j along `axis`; centroid terms
                // cancel because the centered neighbors sum to zero.
                let mut e = Vector3::zeros();
                e[axis] = T::one();
                let dc = e * dj.transpose() + dj * e.transpose();
                let du = pinv * (dc * normal);
                // distance = u . (x - centroid); d centroid / d x_j = I/n.
                d_dist[axis] = du.dot(&offset) - normal[axis] * inv_n;
            }
            d_distance.push((j, d_dist));

            let d = xj - x;
            let norm = d.norm();
            let d_sc = if norm > T::zero() {
                d.transpose() * (inv_n / norm)
            } else {
                RowVector3::zeros()
            };
            d_scale.push((j, d_sc));
        }

        Ok(Self {
            distance,
            scale,
            d_distance,
            d_scale,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hex_fan(height: f64) -> SceneMesh<f64> {
        let mut verts = vec![Vector3::new(0.0, 0.0, height)];
        for k in 0..6 {
            let a = k as f64 * std::f64::consts::PI / 3.0;
            verts.push(Vector3::new(a.cos(), a.sin(), 0.0));
        }
        let mut faces = Vec::new();
        for k in 0..6u32 {
            faces.push([0, 1 + k, 1 + (k + 1) % 6]);
        }
        SceneMesh::new(verts, faces).unwrap()
    }

    #[test]
    fn coplanar_vertex_has_zero_distance() {
        let mesh = hex_fan(0.0);
        let (dist, _) = local_plane_distance(&mesh, 0).unwrap();
        assert_relative_eq!(dist, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lifted_vertex_distance_is_height() {
        let h = 0.37;
        let mesh = hex_fan(h);
        let (dist, scale) = local_plane_distance(&mesh, 0).unwrap();
        assert_relative_eq!(dist, h, epsilon = 1e-12);
        assert_relative_eq!(scale, (1.0 + h * h).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn too_few_neighbors_is_an_error() {
        let mesh = SceneMesh::new(
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert!(matches!(
            local_plane_distance(&mesh, 0),
            Err(GeometryError::TooFewNeighbors { vertex: 0, count: 2 })
        ));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..15 {
            let mut verts = vec![Vector3::new(0.0, 0.0, 0.3)];
            for k in 0..6 {
                let a = k as f64 * std::f64::consts::PI / 3.0;
                verts.push(Vector3::new(
                    a.cos() + rng.random_range(-0.1..0.1),
                    a.sin() + rng.random_range(-0.1..0.1),
                    rng.random_range(-0.15..0.15),
                ));
            }
            let mut faces = Vec::new();
            for k in 0..6u32 {
                faces.push([0, 1 + k, 1 + (k + 1) % 6]);
            }
            let mesh = SceneMesh::new(verts.clone(), faces.clone()).unwrap();
            let fit = LocalPlaneFit::compute(&mesh, 0, true).unwrap();
            let h = 1e-6;
            for (entries, select) in [
                (&fit.d_distance, 0usize),
                (&fit.d_scale, 1usize),
            ] {
                for (k, row) in entries {
                    for axis in 0..3 {
                        let mut plus = verts.clone();
                        plus[*k as usize][axis] += h;
                        let mut minus = verts.clone();
                        minus[*k as usize][axis] -= h;
                        let fp = LocalPlaneFit::compute(
                            &SceneMesh::new(plus, faces.clone()).unwrap(),
                            0,
                            false,
                        )
                        .unwrap();
                        let fm = LocalPlaneFit::compute(
                            &SceneMesh::new(minus, faces.clone()).unwrap(),
                            0,
                            false,
                        )
                        .unwrap();
                        let (vp, vm) = if select == 0 {
                            (fp.distance, fm.distance)
                        } else {
                            (fp.scale, fm.scale)
                        };
                        let fd = (vp - vm) / (2.0 * h);
                        assert_relative_eq!(fd, row[axis], epsilon = 2e-5, max_relative = 2e-5);
                    }
                }
            }
        }
    }
}
