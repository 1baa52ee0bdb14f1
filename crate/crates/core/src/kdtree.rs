//! Exact nearest-neighbor search over 3D points with a static k-d tree.
//!
//! The tree stores a permutation of the input indices; each subtree is a
//! contiguous slice whose median element is the splitting node, split axis
//! cycling x, y, z with depth.

use crate::Point3;

pub struct KdTree<'a> {
    points: &'a [Point3],
    order: Vec<usize>,
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [Point3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(points, &mut order, 0);
        Self { points, order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Index and squared distance of the nearest stored point. Among equally
    /// near points any one may be returned; the distance is exact.
    pub fn nearest(&self, query: &Point3) -> Option<(usize, f64)> {
        if self.order.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(&self.order, 0, query, &mut best);
        Some(best)
    }

    fn search(&self, slice: &[usize], depth: usize, query: &Point3, best: &mut (usize, f64)) {
        if slice.is_empty() {
            return;
        }
        let mid = slice.len() / 2;
        let node = slice[mid];
        let p = &self.points[node];
        let d2 = (p - query).norm_squared();
        if d2 < best.1 {
            *best = (node, d2);
        }
        let axis = depth % 3;
        let diff = query[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (&slice[..mid], &slice[mid + 1..])
        } else {
            (&slice[mid + 1..], &slice[..mid])
        };
        self.search(near, depth + 1, query, best);
        if diff * diff <= best.1 {
            self.search(far, depth + 1, query, best);
        }
    }
}

fn build(points: &[Point3], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}
