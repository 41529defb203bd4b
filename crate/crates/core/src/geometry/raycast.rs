//! Ray-triangle intersection and a bounding volume hierarchy.
//!
//! The BVH is contracted to return exactly the same hits as the brute-force
//! scan over all faces: both paths share the per-triangle test and the same
//! nearest-hit selection rule (smaller `t` wins, ties broken by smaller face
//! index).

use nalgebra::Vector3;

use crate::real::{real, Real};

use super::mesh::SceneMesh;

/// Nearest intersection along a ray.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit<T: Real> {
    pub t: T,
    pub face: u32,
}

/// Watertight-enough Moller-Trumbore; returns the ray parameter of the hit.
pub fn intersect_triangle<T: Real>(
    origin: &Vector3<T>,
    dir: &Vector3<T>,
    v0: &Vector3<T>,
    v1: &Vector3<T>,
    v2: &Vector3<T>,
) -> Option<T> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < real(1e-14) {
        return None;
    }
    let inv_det = T::one() / det;
    let s = origin - v0;
    let u = s.dot(&p) * inv_det;
    if u < T::zero() || u > T::one() {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv_det;
    if v < T::zero() || u + v > T::one() {
        return None;
    }
    Some(e2.dot(&q) * inv_det)
}

fn better<T: Real>(best: &Option<RayHit<T>>, t: T, face: u32) -> bool {
    match best {
        None => true,
        Some(hit) => t < hit.t || (t == hit.t && face < hit.face),
    }
}

/// Brute-force nearest hit over all faces; the oracle path.
pub fn intersect_brute_force<T: Real>(
    mesh: &SceneMesh<T>,
    origin: &Vector3<T>,
    dir: &Vector3<T>,
    t_min: T,
    t_max: T,
    exclude_faces: &[u32],
) -> Option<RayHit<T>> {
    let mut best: Option<RayHit<T>> = None;
    for f in 0..mesh.n_faces() as u32 {
        if exclude_faces.contains(&f) {
            continue;
        }
        let [v0, v1, v2] = mesh.face_positions(f as usize);
        if let Some(t) = intersect_triangle(origin, dir, &v0, &v1, &v2) {
            if t > t_min && t < t_max && better(&best, t, f) {
                best = Some(RayHit { t, face: f });
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug)]
struct Aabb<T: Real> {
    lo: Vector3<T>,
    hi: Vector3<T>,
}

impl<T: Real> Aabb<T> {
    fn empty() -> Self {
        Self {
            lo: Vector3::from_element(T::max_value().unwrap()),
            hi: Vector3::from_element(T::min_value().unwrap()),
        }
    }

    fn grow_point(&mut self, p: &Vector3<T>) {
        for k in 0..3 {
            self.lo[k] = self.lo[k].min(p[k]);
            self.hi[k] = self.hi[k].max(p[k]);
        }
    }

    fn grow(&mut self, other: &Aabb<T>) {
        self.grow_point(&other.lo.clone());
        self.grow_point(&other.hi.clone());
    }

    /// Slab test over (t_min, t_max); conservative for axis-parallel rays.
    fn hit(&self, origin: &Vector3<T>, inv_dir: &Vector3<T>, t_min: T, t_max: T) -> bool {
        let mut lo = t_min;
        let mut hi = t_max;
        for k in 0..3 {
            let t0 = (self.lo[k] - origin[k]) * inv_dir[k];
            let t1 = (self.hi[k] - origin[k]) * inv_dir[k];
            let (near, far) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            if near.is_finite() {
                lo = lo.max(near);
            }
            if far.is_finite() {
                hi = hi.min(far);
            }
            if lo > hi {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Debug)]
struct BvhNode<T: Real> {
    aabb: Aabb<T>,
    /// Leaf: index of the first face in `order`; inner: index of left child.
    first: u32,
    /// Leaf: number of faces (> 0); inner: 0 and right child = first + 1 is
    /// not assumed, see `right`.
    count: u32,
    right: u32,
}

/// Median-split BVH over face bounding boxes.
pub struct Bvh<T: Real> {
    nodes: Vec<BvhNode<T>>,
    order: Vec<u32>,
}

const LEAF_SIZE: usize = 4;

impl<T: Real> Bvh<T> {
    pub fn build(mesh: &SceneMesh<T>) -> Self {
        let n = mesh.n_faces();
        let mut boxes = Vec::with_capacity(n);
        let mut centers = Vec::with_capacity(n);
        for f in 0..n {
            let [a, b, c] = mesh.face_positions(f);
            let mut bb = Aabb::empty();
            bb.grow_point(&a);
            bb.grow_point(&b);
            bb.grow_point(&c);
            boxes.push(bb);
            centers.push((a + b + c) / real::<T>(3.0));
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        if n > 0 {
            Self::split(&boxes, &centers, &mut order, 0, n, &mut nodes);
        }
        Self { nodes, order }
    }

    fn split(
        boxes: &[Aabb<T>],
        centers: &[Vector3<T>],
        order: &mut [u32],
        start: usize,
        end: usize,
        nodes: &mut Vec<BvhNode<T>>,
    ) -> u32 {
        let mut aabb = Aabb::empty();
        for &f in &order[start..end] {
            aabb.grow(&boxes[f as usize]);
        }
        let index = nodes.len() as u32;
        nodes.push(BvhNode {
            aabb,
            first: start as u32,
            count: (end - start) as u32,
            right: 0,
        });
        if end - start <= LEAF_SIZE {
            return index;
        }
        // Longest axis of the centroid extent.
        let mut c_lo = Vector3::from_element(T::max_value().unwrap());
        let mut c_hi = Vector3::from_element(T::min_value().unwrap());
        for &f in &order[start..end] {
            for k in 0..3 {
                c_lo[k] = c_lo[k].min(centers[f as usize][k]);
                c_hi[k] = c_hi[k].max(centers[f as usize][k]);
            }
        }
        let extent = c_hi - c_lo;
        let mut axis = 0;
        if extent.y > extent[axis] {
            axis = 1;
        }
        if extent.z > extent[axis] {
            axis = 2;
        }
        if extent[axis] <= T::zero() {
            return index; // all centroids equal: keep as leaf
        }
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centers[a as usize][axis]
                .partial_cmp(&centers[b as usize][axis])
                .unwrap()
                .then(a.cmp(&b))
        });
        let left = Self::split(boxes, centers, order, start, mid, nodes);
        let right = Self::split(boxes, centers, order, mid, end, nodes);
        nodes[index as usize].count = 0;
        nodes[index as usize].first = left;
        nodes[index as usize].right = right;
        index
    }

    /// Nearest hit with `t` in `(t_min, t_max)`, skipping `exclude_faces`.
    pub fn intersect(
        &self,
        mesh: &SceneMesh<T>,
        origin: &Vector3<T>,
        dir: &Vector3<T>,
        t_min: T,
        t_max: T,
        exclude_faces: &[u32],
    ) -> Option<RayHit<T>> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv_dir = Vector3::new(T::one() / dir.x, T::one() / dir.y, T::one() / dir.z);
        let mut best: Option<RayHit<T>> = None;
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            let limit = best.map_or(t_max, |h| h.t.min(t_max));
            if !node.aabb.hit(origin, &inv_dir, t_min, limit) {
                continue;
            }
            if node.count > 0 {
                for &f in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    if exclude_faces.contains(&f) {
                        continue;
                    }
                    let [v0, v1, v2] = mesh.face_positions(f as usize);
                    if let Some(t) = intersect_triangle(origin, dir, &v0, &v1, &v2) {
                        if t > t_min && t < t_max && better(&best, t, f) {
                            best = Some(RayHit { t, face: f });
                        }
                    }
                }
            } else {
                stack[top] = node.first;
                top += 1;
                stack[top] = node.right;
                top += 1;
            }
        }
        best
    }

    /// True when any face intersects the open segment `(t_min, t_max)`.
    pub fn occluded(
        &self,
        mesh: &SceneMesh<T>,
        origin: &Vector3<T>,
        dir: &Vector3<T>,
        t_min: T,
        t_max: T,
        exclude_faces: &[u32],
    ) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let inv_dir = Vector3::new(T::one() / dir.x, T::one() / dir.y, T::one() / dir.z);
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if !node.aabb.hit(origin, &inv_dir, t_min, t_max) {
                continue;
            }
            if node.count > 0 {
                for &f in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    if exclude_faces.contains(&f) {
                        continue;
                    }
                    let [v0, v1, v2] = mesh.face_positions(f as usize);
                    if let Some(t) = intersect_triangle(origin, dir, &v0, &v1, &v2) {
                        if t > t_min && t < t_max {
                            return true;
                        }
                    }
                }
            } else {
                stack[top] = node.first;
                top += 1;
                stack[top] = node.right;
                top += 1;
            }
        }
        false
    }
}
