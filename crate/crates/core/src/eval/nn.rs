//! Small 3D kd-tree for nearest-neighbor queries; contracted to return
//! exactly the brute-force nearest distance.

use nalgebra::Vector3;

use crate::real::Real;

pub struct KdTree<T: Real> {
    points: Vec<Vector3<T>>,
    /// Point indices, partitioned recursively by the nodes.
    order: Vec<u32>,
    nodes: Vec<Node<T>>,
}

#[derive(Clone, Copy, Debug)]
enum Node<T> {
    Leaf {
        start: u32,
        len: u32,
    },
    Inner {
        axis: u8,
        /// Median coordinate captured at build time: the left subtree is
        /// entirely at or below it, the right subtree at or above.
        split: T,
        left: u32,
        right: u32,
    },
}

const LEAF: usize = 16;

impl<T: Real> KdTree<T> {
    pub fn build(points: Vec<Vector3<T>>) -> Self {
        assert!(!points.is_empty(), "kd-tree needs at least one point");
        let mut order: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        Self::split(&points, &mut order, 0, points.len(), &mut nodes);
        Self {
            points,
            order,
            nodes,
        }
    }

    fn split(
        points: &[Vector3<T>],
        order: &mut [u32],
        start: usize,
        end: usize,
        nodes: &mut Vec<Node<T>>,
    ) -> u32 {
        let index = nodes.len() as u32;
        nodes.push(Node::Leaf {
            start: start as u32,
            len: (end - start) as u32,
        });
        if end - start <= LEAF {
            return index;
        }
        let mut lo = Vector3::from_element(T::max_value().unwrap());
        let mut hi = Vector3::from_element(T::min_value().unwrap());
        for &p in &order[start..end] {
            for a in 0..3 {
                lo[a] = lo[a].min(points[p as usize][a]);
                hi[a] = hi[a].max(points[p as usize][a]);
            }
        }
        let extent = hi - lo;
        let mut axis = 0usize;
        if extent.y > extent[axis] {
            axis = 1;
        }
        if extent.z > extent[axis] {
            axis = 2;
        }
        if extent[axis] <= T::zero() {
            return index; // all points coincide on every axis: stay a leaf
        }
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize][axis]
                .partial_cmp(&points[b as usize][axis])
                .unwrap()
                .then(a.cmp(&b))
        });
        let split = points[order[mid] as usize][axis];
        let left = Self::split(points, order, start, mid, nodes);
        let right = Self::split(points, order, mid, end, nodes);
        nodes[index as usize] = Node::Inner {
            axis: axis as u8,
            split,
            left,
            right,
        };
        index
    }

    /// Index and distance of the nearest stored point; distance ties break
    /// toward the smaller index, matching the brute-force oracle.
    pub fn nearest(&self, query: &Vector3<T>) -> (u32, T) {
        let mut best = (u32::MAX, T::max_value().unwrap());
        self.search(0, query, &mut best);
        (best.0, best.1.sqrt())
    }

    fn search(&self, node_idx: u32, query: &Vector3<T>, best: &mut (u32, T)) {
        match self.nodes[node_idx as usize] {
            Node::Leaf { start, len } => {
                let start = start as usize;
                for &p in &self.order[start..start + len as usize] {
                    let d2 = (self.points[p as usize] - query).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && p < best.0) {
                        *best = (p, d2);
                    }
                }
            }
            Node::Inner {
                axis,
                split,
                left,
                right,
            } => {
                let d = query[axis as usize] - split;
                let (near, far) = if d < T::zero() { (left, right) } else { (right, left) };
                self.search(near, query, best);
                if d * d <= best.1 {
                    self.search(far, query, best);
                }
            }
        }
    }
}

/// Brute-force oracle: nearest distance by full scan.
pub fn brute_force_nearest<T: Real>(points: &[Vector3<T>], query: &Vector3<T>) -> (u32, T) {
    let mut best = (u32::MAX, T::max_value().unwrap());
    for (i, p) in points.iter().enumerate() {
        let d2 = (p - query).norm_squared();
        if d2 < best.1 || (d2 == best.1 && (i as u32) < best.0) {
            best = (i as u32, d2);
        }
    }
    (best.0, best.1.sqrt())
}
