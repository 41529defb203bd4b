//! Z-buffered rasterization of a mesh with per-vertex reflectance weights.
//!
//! Vertex positions, normals, and weights are interpolated with
//! perspective-correct barycentrics; shading and the shadow ray are
//! evaluated per pixel. Output is linear RGB; background pixels are zero.

use nalgebra::{DVector, Vector2, Vector3};

use crate::geometry::{Bvh, CameraPose, SceneMesh, RAY_OFFSET_REL};
use crate::real::{real, Real};
use crate::spectra::SpectralBasis;

use super::image::Image;
use super::{CameraSensitivity, Illuminant, ReflectanceField, RenderContext, RenderError};

/// Per-pixel camera-space depth; `T::max_value()` marks background.
#[derive(Clone, Debug)]
pub struct DepthBuffer<T: Real> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Real> DepthBuffer<T> {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![T::max_value().unwrap(); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] < T::max_value().unwrap()
    }

    pub fn foreground_count(&self) -> usize {
        let bg = T::max_value().unwrap();
        self.data.iter().filter(|d| **d < bg).count()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RasterOptions<T: Real> {
    /// Cast per-pixel shadow rays toward the light.
    pub shadows: bool,
    /// Ray offset override; defaults to `RAY_OFFSET_REL * mean_edge_length`.
    pub eps_ray: Option<T>,
}

impl<T: Real> Default for RasterOptions<T> {
    fn default() -> Self {
        Self {
            shadows: true,
            eps_ray: None,
        }
    }
}

fn edge<T: Real>(a: &Vector2<T>, b: &Vector2<T>, p: &Vector2<T>) -> T {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Renders one view of the scene under a point light at `light_pos`.
#[allow(clippy::too_many_arguments)]
pub fn render_image<T: Real>(
    mesh: &SceneMesh<T>,
    field: &ReflectanceField<T>,
    pose: &CameraPose<T>,
    illuminant: &Illuminant<T>,
    sensitivity: &CameraSensitivity<T>,
    light_pos: &Vector3<T>,
    basis: &SpectralBasis<T>,
    bvh: &Bvh<T>,
    opts: &RasterOptions<T>,
) -> Result<(Image<T>, DepthBuffer<T>), RenderError> {
    if mesh.n_faces() == 0 {
        return Err(RenderError::EmptyScene);
    }
    let n_b = basis.n_b();
    let ctx = RenderContext::new(sensitivity, std::slice::from_ref(illuminant), basis);
    let g = &ctx.ct_l_b[0];

    let width = pose.width as usize;
    let height = pose.height as usize;
    let mut image = Image::new(width, height);
    let mut depth_buffer = DepthBuffer::new(width, height);

    let projections: Vec<Option<(Vector2<T>, T)>> = (0..mesh.n_vertices())
        .map(|i| pose.project(&mesh.vertex(i)))
        .collect();
    let normals: Vec<Option<Vector3<T>>> = (0..mesh.n_vertices())
        .map(|i| mesh.vertex_normal(i).ok())
        .collect();

    let eps = opts
        .eps_ray
        .unwrap_or_else(|| real::<T>(RAY_OFFSET_REL) * mesh.mean_edge_length());
    let mut alpha = DVector::<T>::zeros(n_b);

    for f in 0..mesh.n_faces() {
        let [ia, ib, ic] = mesh.face(f);
        let (Some((pa, za)), Some((pb, zb)), Some((pc, zc))) = (
            projections[ia as usize],
            projections[ib as usize],
            projections[ic as usize],
        ) else {
            continue; // face extends behind the camera plane
        };
        let (Some(na), Some(nb), Some(nc)) = (
            normals[ia as usize],
            normals[ib as usize],
            normals[ic as usize],
        ) else {
            continue;
        };
        let area = edge(&pa, &pb, &pc);
        if area.abs() < real(1e-12) {
            continue;
        }
        let xa = mesh.vertex(ia as usize);
        let xb = mesh.vertex(ib as usize);
        let xc = mesh.vertex(ic as usize);
        let face_normal = {
            let n = (xb - xa).cross(&(xc - xa));
            let norm = n.norm();
            if norm <= T::zero() {
                continue;
            }
            n / norm
        };

        let min_x = pa.x.min(pb.x).min(pc.x).floor().max(T::zero());
        let max_x = pa.x.max(pb.x).max(pc.x).ceil().min(real((width - 1) as f64));
        let min_y = pa.y.min(pb.y).min(pc.y).floor().max(T::zero());
        let max_y = pa.y.max(pb.y).max(pc.y).ceil().min(real((height - 1) as f64));
        if min_x > max_x || min_y > max_y {
            continue;
        }
        let (x0, x1) = (min_x.to_usize().unwrap(), max_x.to_usize().unwrap());
        let (y0, y1) = (min_y.to_usize().unwrap(), max_y.to_usize().unwrap());

        for iy in y0..=y1 {
            for ix in x0..=x1 {
                let p = Vector2::new(real::<T>(ix as f64), real::<T>(iy as f64));
                // Signed barycentrics normalized by the signed area work for
                // either screen orientation.
                let l0 = edge(&pb, &pc, &p) / area;
                let l1 = edge(&pc, &pa, &p) / area;
                let l2 = edge(&pa, &pb, &p) / area;
                if l0 < T::zero() || l1 < T::zero() || l2 < T::zero() {
                    continue;
                }
                let q0 = l0 / za;
                let q1 = l1 / zb;
                let q2 = l2 / zc;
                let inv_z = q0 + q1 + q2;
                let z = T::one() / inv_z;
                if z >= depth_buffer.data[iy * width + ix] {
                    continue;
                }
                let w0 = q0 * z;
                let w1 = q1 * z;
                let w2 = q2 * z;
                let pos = xa * w0 + xb * w1 + xc * w2;
                let n_interp = na * w0 + nb * w1 + nc * w2;
                let n_len = n_interp.norm();
                let normal = if n_len > T::zero() {
                    n_interp / n_len
                } else {
                    face_normal
                };

                depth_buffer.data[iy * width + ix] = z;

                let lit = if opts.shadows {
                    let origin = pos + face_normal * eps;
                    let to_light = light_pos - origin;
                    let dist = to_light.norm();
                    if dist <= eps {
                        true
                    } else {
                        let dir = to_light / dist;
                        !bvh.occluded(mesh, &origin, &dir, eps, dist - eps, &[f as u32])
                    }
                } else {
                    true
                };

                let pixel = if lit {
                    match super::shading_factor(&pos, &normal, light_pos) {
                        Ok(s) if s > T::zero() => {
                            for k in 0..n_b {
                                alpha[k] = field.weights[(ia as usize, k)] * w0
                                    + field.weights[(ib as usize, k)] * w1
                                    + field.weights[(ic as usize, k)] * w2;
                            }
                            g * &alpha * s
                        }
                        _ => Vector3::zeros(),
                    }
                } else {
                    Vector3::zeros()
                };
                *image.pixel_mut(ix, iy) = pixel;
            }
        }
    }

    Ok((image, depth_buffer))
}
