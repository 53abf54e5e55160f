//! Bounding volume hierarchy over per-primitive boxes.
//!
//! Built top-down from one split key per primitive (the box centroid unless
//! the caller supplies its own point), either by median split on the longest
//! axis of the key extent or by Morton code bits. Nodes are laid out in
//! depth-first preorder. Traversal is iterative with a fixed stack and
//! reports every primitive whose box the query touches (any-hit semantics),
//! which is what the neighbor encodings need.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use arrayvec::ArrayVec;

use crate::geom::{ray_aabb, Aabb, Hit, RaySeg, Vec3};
use crate::morton;
use crate::{Error, Result};

/// Deepest tree the traversal stack can handle.
pub const MAX_DEPTH: usize = 64;

pub const DEFAULT_LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Internal { left: u32, right: u32 },
    Leaf { first_prim: u32, prim_count: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    /// `prim_order[k]` is the primitive stored at leaf slot `k`.
    prim_order: Vec<u32>,
    /// Primitive boxes in leaf-slot order.
    prim_boxes: Vec<Aabb>,
    leaf_size: usize,
    depth: usize,
}

impl Bvh {
    /// Median-split build over box centroids.
    pub fn build(boxes: &[Aabb], leaf_size: usize) -> Result<Self> {
        let centroids: Vec<Vec3> = boxes.iter().map(Aabb::centroid).collect();
        Self::build_keyed(&centroids, leaf_size, Split::Median, |_, i| boxes[i as usize])
    }

    /// Builds from one split key per primitive, in primitive order, and a
    /// function giving the box of a primitive from its key and index. The
    /// key must lie inside the box. Partitioning uses keys only.
    pub fn build_keyed<F>(keys: &[Vec3], leaf_size: usize, split: Split, bounds: F) -> Result<Self>
    where
        F: Fn(Vec3, u32) -> Aabb,
    {
        if leaf_size == 0 {
            return Err(Error::InvalidLeafSize);
        }
        if keys.is_empty() {
            return Err(Error::EmptyScene);
        }
        let (mut nodes, order, depth) = match split {
            Split::Median => top_down(keys.len(), leaf_size, MedianSplitter::new(keys)),
            Split::Morton => top_down(keys.len(), leaf_size, MortonSplitter::new(keys)),
        };
        let prim_boxes: Vec<Aabb> = order.iter().map(|&i| bounds(keys[i as usize], i)).collect();
        if depth > MAX_DEPTH {
            return Err(Error::DepthExceeded(depth));
        }

        // children always come after their parent, so a reverse sweep sees
        // both child boxes before the parent
        for i in (0..nodes.len()).rev() {
            nodes[i].bounds = match nodes[i].kind {
                NodeKind::Leaf {
                    first_prim,
                    prim_count,
                } => prim_boxes[first_prim as usize..(first_prim + prim_count) as usize]
                    .iter()
                    .fold(Aabb::EMPTY, |b, &p| b.union(p)),
                NodeKind::Internal { left, right } => {
                    nodes[left as usize].bounds.union(nodes[right as usize].bounds)
                }
            };
        }

        Ok(Self {
            nodes,
            prim_order: order,
            prim_boxes,
            leaf_size,
            depth,
        })
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn prim_order(&self) -> &[u32] {
        &self.prim_order
    }

    pub fn leaf_size(&self) -> usize {
        self.leaf_size
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn root_bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    pub fn len(&self) -> usize {
        self.prim_order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prim_order.is_empty()
    }

    /// Calls `visitor` once for every primitive whose box intersects `seg`
    /// until it returns `Break`. Returns the number of calls made.
    pub fn traverse_anyhit<F>(&self, seg: &RaySeg, visitor: F) -> usize
    where
        F: FnMut(u32) -> ControlFlow<()>,
    {
        self.traverse(|b| ray_aabb(seg, b).is_some(), visitor)
    }

    /// Point query: visits every primitive whose closed box contains `p`.
    pub fn traverse_point<F>(&self, p: Vec3, visitor: F) -> usize
    where
        F: FnMut(u32) -> ControlFlow<()>,
    {
        self.traverse(|b| b.contains_point(p), visitor)
    }

    fn traverse<T, F>(&self, overlaps: T, mut visitor: F) -> usize
    where
        T: Fn(&Aabb) -> bool,
        F: FnMut(u32) -> ControlFlow<()>,
    {
        let mut visits = 0;
        let mut stack: ArrayVec<u32, MAX_DEPTH> = ArrayVec::new();
        if !overlaps(&self.nodes[0].bounds) {
            return 0;
        }
        stack.push(0);
        while let Some(idx) = stack.pop() {
            match self.nodes[idx as usize].kind {
                NodeKind::Leaf {
                    first_prim,
                    prim_count,
                } => {
                    let range = first_prim as usize..(first_prim + prim_count) as usize;
                    for slot in range {
                        if !overlaps(&self.prim_boxes[slot]) {
                            continue;
                        }
                        visits += 1;
                        if visitor(self.prim_order[slot]).is_break() {
                            return visits;
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    // at most one pending sibling per level, so depth bounds the stack
                    if overlaps(&self.nodes[right as usize].bounds) {
                        stack.push(right);
                    }
                    if overlaps(&self.nodes[left as usize].bounds) {
                        stack.push(left);
                    }
                }
            }
        }
        visits
    }

    /// Closest hit along `seg` using `intersect` as the primitive test. The
    /// segment is clipped as hits are found.
    pub fn closest_hit<F>(&self, seg: &RaySeg, mut intersect: F) -> Option<Hit>
    where
        F: FnMut(u32, &RaySeg) -> Option<Hit>,
    {
        let mut best: Option<Hit> = None;
        let mut clipped = *seg;
        let mut stack: ArrayVec<u32, MAX_DEPTH> = ArrayVec::new();
        stack.push(0);
        while let Some(idx) = stack.pop() {
            let node = &self.nodes[idx as usize];
            if ray_aabb(&clipped, &node.bounds).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf {
                    first_prim,
                    prim_count,
                } => {
                    for slot in first_prim as usize..(first_prim + prim_count) as usize {
                        if ray_aabb(&clipped, &self.prim_boxes[slot]).is_none() {
                            continue;
                        }
                        if let Some(h) = intersect(self.prim_order[slot], &clipped) {
                            if best.is_none_or(|b| h.t < b.t) {
                                best = Some(h);
                                clipped.t_end = h.t;
                            }
                        }
                    }
                }
                NodeKind::Internal { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }
}

/// How a node's primitives are divided between its two children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Split {
    /// Median along the longest axis of the node's key extent, ties by
    /// index. Identical keys split by index halves.
    #[default]
    Median,
    /// At the highest bit where the 30-bit Morton codes of the node's keys
    /// differ, with primitives ordered by code (a linear BVH). Runs of equal
    /// codes split in half.
    Morton,
}

trait Splitter {
    /// Reorders slots `start..end` and returns the first slot of the right
    /// child. Only called with at least two slots; both sides non-empty.
    fn split(&mut self, start: usize, end: usize) -> usize;
    /// Final slot -> primitive map.
    fn into_order(self) -> Vec<u32>;
}

/// Lays nodes out in depth-first preorder. Returns nodes with their kinds
/// set (bounds left empty), the slot order and the depth.
fn top_down<S: Splitter>(n: usize, leaf_size: usize, mut splitter: S) -> (Vec<BvhNode>, Vec<u32>, usize) {
    let mut nodes: Vec<BvhNode> = Vec::with_capacity(2 * n.div_ceil(leaf_size));
    let mut depth = 0;
    // (node index, start, end, depth)
    let mut work: Vec<(usize, usize, usize, usize)> = Vec::new();
    nodes.push(placeholder());
    work.push((0, 0, n, 1));
    while let Some((node, start, end, level)) = work.pop() {
        depth = depth.max(level);
        if end - start <= leaf_size {
            nodes[node].kind = NodeKind::Leaf {
                first_prim: start as u32,
                prim_count: (end - start) as u32,
            };
            continue;
        }
        let mid = splitter.split(start, end);
        let left = nodes.len();
        nodes.push(placeholder());
        let right = nodes.len();
        nodes.push(placeholder());
        nodes[node].kind = NodeKind::Internal {
            left: left as u32,
            right: right as u32,
        };
        // right first so the left subtree is laid out next (preorder)
        work.push((right, mid, end, level + 1));
        work.push((left, start, mid, level + 1));
    }
    (nodes, splitter.into_order(), depth)
}

/// Quickselect on contiguous `(key, index)` pairs.
struct MedianSplitter {
    items: Vec<(Vec3, u32)>,
}

impl MedianSplitter {
    fn new(keys: &[Vec3]) -> Self {
        Self {
            items: keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect(),
        }
    }
}

impl Splitter for MedianSplitter {
    fn split(&mut self, start: usize, end: usize) -> usize {
        let slice = &mut self.items[start..end];
        let kb = slice.iter().fold(Aabb::EMPTY, |b, &(k, _)| b.grow(k));
        let ext = kb.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let half = slice.len() / 2;
        if ext[axis] > 0.0 {
            let by = |a: &(Vec3, u32), b: &(Vec3, u32), v: fn(&Vec3) -> f32| {
                v(&a.0).total_cmp(&v(&b.0)).then(a.1.cmp(&b.1))
            };
            match axis {
                0 => slice.select_nth_unstable_by(half, |a, b| by(a, b, |k| k.x)),
                1 => slice.select_nth_unstable_by(half, |a, b| by(a, b, |k| k.y)),
                _ => slice.select_nth_unstable_by(half, |a, b| by(a, b, |k| k.z)),
            };
        } else {
            // identical keys: split by index halves
            slice.sort_unstable_by_key(|&(_, i)| i);
        }
        start + half
    }

    fn into_order(self) -> Vec<u32> {
        self.items.into_iter().map(|(_, i)| i).collect()
    }
}

/// Primitives sorted by `code << 32 | index`.
struct MortonSplitter {
    packed: Vec<u64>,
}

impl MortonSplitter {
    fn new(keys: &[Vec3]) -> Self {
        let quantizer = morton::Quantizer::new(&Aabb::from_points(keys));
        let mut packed: Vec<u64> = keys
            .iter()
            .enumerate()
            .map(|(i, &k)| ((quantizer.code(k) as u64) << 32) | i as u64)
            .collect();
        packed.sort_unstable();
        Self { packed }
    }
}

impl Splitter for MortonSplitter {
    fn split(&mut self, start: usize, end: usize) -> usize {
        let code = |v: u64| (v >> 32) as u32;
        let (first, last) = (code(self.packed[start]), code(self.packed[end - 1]));
        if first == last {
            return start + (end - start) / 2;
        }
        // codes in the range agree above this bit, and are sorted
        let bit = 1u32 << (31 - (first ^ last).leading_zeros());
        start + self.packed[start..end].partition_point(|&v| code(v) & bit == 0)
    }

    fn into_order(self) -> Vec<u32> {
        self.packed.into_iter().map(|v| v as u32).collect()
    }
}

fn placeholder() -> BvhNode {
    BvhNode {
        bounds: Aabb::EMPTY,
        kind: NodeKind::Leaf {
            first_prim: 0,
            prim_count: 0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{ray_sphere, Axis, SpherePrim};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;
    use std::vec;

    fn unit_box(c: Vec3) -> Aabb {
        Aabb::around(c, Vec3::splat(0.5))
    }

    fn corner_boxes() -> Vec<Aabb> {
        let mut boxes = Vec::new();
        for i in 0..8 {
            let c = Vec3::new((i & 1) as f32, ((i >> 1) & 1) as f32, ((i >> 2) & 1) as f32);
            boxes.push(unit_box(c));
        }
        boxes
    }

    fn random_boxes(rng: &mut ChaCha8Rng, n: usize) -> Vec<Aabb> {
        (0..n)
            .map(|_| {
                let c = Vec3::new(rng.random(), rng.random(), rng.random());
                let h = Vec3::new(
                    rng.random_range(0.0..0.05),
                    rng.random_range(0.0..0.05),
                    rng.random_range(0.0..0.05),
                );
                Aabb::around(c, h)
            })
            .collect()
    }

    fn check_containment(bvh: &Bvh, idx: usize, boxes: &[Aabb]) {
        let node = bvh.nodes[idx];
        match node.kind {
            NodeKind::Internal { left, right } => {
                assert!(node.bounds.contains(&bvh.nodes[left as usize].bounds));
                assert!(node.bounds.contains(&bvh.nodes[right as usize].bounds));
                check_containment(bvh, left as usize, boxes);
                check_containment(bvh, right as usize, boxes);
            }
            NodeKind::Leaf { first_prim, prim_count } => {
                for slot in first_prim..first_prim + prim_count {
                    let prim = bvh.prim_order[slot as usize] as usize;
                    assert!(node.bounds.contains(&boxes[prim]));
                }
            }
        }
    }

    fn collect_leaf_prims(bvh: &Bvh) -> Vec<u32> {
        let mut out = Vec::new();
        for n in &bvh.nodes {
            if let NodeKind::Leaf { first_prim, prim_count } = n.kind {
                out.extend_from_slice(&bvh.prim_order[first_prim as usize..(first_prim + prim_count) as usize]);
            }
        }
        out
    }

    #[test]
    fn empty_and_bad_leaf_size() {
        assert_eq!(Bvh::build(&[], 4), Err(Error::EmptyScene));
        assert_eq!(Bvh::build(&[unit_box(Vec3::ZERO)], 0), Err(Error::InvalidLeafSize));
    }

    #[test]
    fn single_box_is_single_leaf() {
        let b = unit_box(Vec3::new(1.0, 2.0, 3.0));
        let bvh = Bvh::build(&[b], 4).unwrap();
        assert_eq!(bvh.nodes.len(), 1);
        assert_eq!(bvh.root_bounds(), b);
        assert!(matches!(bvh.nodes[0].kind, NodeKind::Leaf { prim_count: 1, .. }));
    }

    #[test]
    fn eight_corners_full_tree() {
        let boxes = corner_boxes();
        let bvh = Bvh::build(&boxes, 1).unwrap();
        assert_eq!(bvh.nodes.len(), 15);
        assert_eq!(bvh.root_bounds(), Aabb::new(Vec3::splat(-0.5), Vec3::splat(1.5)));
        check_containment(&bvh, 0, &boxes);
    }

    #[test]
    fn every_prim_in_exactly_one_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &n in &[1usize, 2, 3, 17, 500, 2000] {
            for leaf in [1, 4, 7] {
                let boxes = random_boxes(&mut rng, n);
                let bvh = Bvh::build(&boxes, leaf).unwrap();
                let mut prims = collect_leaf_prims(&bvh);
                prims.sort_unstable();
                assert_eq!(prims, (0..n as u32).collect::<Vec<_>>());
                check_containment(&bvh, 0, &boxes);
            }
        }
    }

    #[test]
    fn identical_centroids_terminate() {
        let boxes = vec![unit_box(Vec3::ZERO); 100];
        let bvh = Bvh::build(&boxes, 4).unwrap();
        let mut prims = collect_leaf_prims(&bvh);
        prims.sort_unstable();
        assert_eq!(prims.len(), 100);
        assert!(bvh.depth() <= 7);
    }

    fn morton(boxes: &[Aabb], leaf_size: usize) -> Bvh {
        let keys: Vec<Vec3> = boxes.iter().map(Aabb::centroid).collect();
        Bvh::build_keyed(&keys, leaf_size, Split::Morton, |_, i| boxes[i as usize]).unwrap()
    }

    #[test]
    fn morton_split_keeps_the_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [1, 2, 7, 100, 3000] {
            let boxes = random_boxes(&mut rng, n);
            for leaf in [1, 4] {
                let bvh = morton(&boxes, leaf);
                check_containment(&bvh, 0, &boxes);
                let mut prims = collect_leaf_prims(&bvh);
                prims.sort_unstable();
                assert_eq!(prims, (0..n as u32).collect::<Vec<_>>());
                assert_eq!(bvh, morton(&boxes, leaf));
                for _ in 0..200 {
                    let p = Vec3::new(rng.random(), rng.random(), rng.random());
                    let mut got = BTreeSet::new();
                    bvh.traverse_point(p, |i| {
                        assert!(got.insert(i));
                        ControlFlow::Continue(())
                    });
                    let want: BTreeSet<u32> =
                        (0..n as u32).filter(|&i| boxes[i as usize].contains_point(p)).collect();
                    assert_eq!(got, want);
                }
            }
        }
        assert_eq!(morton(&corner_boxes(), 1).nodes().len(), 15);
    }

    #[test]
    fn morton_split_handles_duplicate_codes() {
        let boxes = vec![unit_box(Vec3::splat(0.25)); 100];
        let bvh = morton(&boxes, 4);
        assert_eq!(collect_leaf_prims(&bvh), (0..100).collect::<Vec<u32>>());
        assert!(bvh.depth() <= 7);
    }

    #[test]
    fn build_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let boxes = random_boxes(&mut rng, 1000);
        assert_eq!(Bvh::build(&boxes, 4).unwrap(), Bvh::build(&boxes, 4).unwrap());
    }

    #[test]
    fn anyhit_examples() {
        let boxes = corner_boxes();
        let bvh = Bvh::build(&boxes, 1).unwrap();
        let miss = RaySeg::along(Vec3::new(5.0, 5.0, 5.0), Axis::X, 0.0, 1.0);
        assert_eq!(bvh.traverse_anyhit(&miss, |_| ControlFlow::Continue(())), 0);

        // a row along x at y = 0, z = 0 crosses exactly boxes 0 and 1; add a
        // third box on that row to get three
        let mut boxes = boxes;
        boxes.push(unit_box(Vec3::new(2.0, 0.0, 0.0)));
        let bvh = Bvh::build(&boxes, 1).unwrap();
        let seg = RaySeg::along(Vec3::new(-1.0, 0.0, 0.0), Axis::X, 0.0, 4.0);
        let mut seen = BTreeSet::new();
        let n = bvh.traverse_anyhit(&seg, |p| {
            seen.insert(p);
            ControlFlow::Continue(())
        });
        let linear: BTreeSet<u32> = (0..boxes.len() as u32)
            .filter(|&i| ray_aabb(&seg, &boxes[i as usize]).is_some())
            .collect();
        assert_eq!(n, 3);
        assert_eq!(seen, linear);
        assert_eq!(seen, BTreeSet::from([0, 1, 8]));

        assert_eq!(bvh.traverse_anyhit(&seg, |_| ControlFlow::Break(())), 1);
    }

    #[test]
    fn point_examples() {
        let a = Aabb::new(Vec3::ZERO, Vec3::splat(1.0));
        let b = Aabb::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 1.0, 1.0));
        let bvh = Bvh::build(&[a, b], 1).unwrap();
        let count = |p| bvh.traverse_point(p, |_| ControlFlow::Continue(()));
        assert_eq!(count(Vec3::splat(-1.0)), 0);
        let mut hit = vec![];
        bvh.traverse_point(Vec3::splat(0.5), |i| {
            hit.push(i);
            ControlFlow::Continue(())
        });
        assert_eq!(hit, vec![0]);
        assert_eq!(count(Vec3::new(1.0, 0.5, 0.5)), 2);
    }

    #[test]
    fn traversal_matches_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut scenes = Vec::new();
        for _ in 0..10 {
            let n = rng.random_range(1..=2000);
            let boxes = random_boxes(&mut rng, n);
            let bvh = Bvh::build(&boxes, 4).unwrap();
            scenes.push((boxes, bvh));
        }
        for q in 0..10_000 {
            let (boxes, bvh) = &scenes[q % scenes.len()];
            let origin = Vec3::new(rng.random(), rng.random(), rng.random());
            let axis = Axis::ALL[rng.random_range(0..3)];
            let len = rng.random_range(0.0f32..0.5);
            let seg = RaySeg::along(origin, axis, -len, len);
            let mut got = BTreeSet::new();
            bvh.traverse_anyhit(&seg, |p| {
                assert!(got.insert(p), "primitive {p} visited twice");
                ControlFlow::Continue(())
            });
            let want: BTreeSet<u32> = (0..boxes.len() as u32)
                .filter(|&i| ray_aabb(&seg, &boxes[i as usize]).is_some())
                .collect();
            assert_eq!(got, want);

            let mut got = BTreeSet::new();
            bvh.traverse_point(origin, |p| {
                got.insert(p);
                ControlFlow::Continue(())
            });
            let want: BTreeSet<u32> = (0..boxes.len() as u32)
                .filter(|&i| boxes[i as usize].contains_point(origin))
                .collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn closest_hit_examples() {
        let spheres = [
            SpherePrim { center: Vec3::new(2.5, 0.0, 0.0), radius: 0.5, particle_id: 0 },
            SpherePrim { center: Vec3::new(1.5, 0.0, 0.0), radius: 0.5, particle_id: 1 },
        ];
        let boxes: Vec<Aabb> = spheres.iter().map(SpherePrim::bounds).collect();
        let bvh = Bvh::build(&boxes, 1).unwrap();
        let isect = |p: u32, s: &RaySeg| ray_sphere(s, &spheres[p as usize]).first().copied();
        let seg = RaySeg::along(Vec3::ZERO, Axis::X, 0.0, 10.0);
        let h = bvh.closest_hit(&seg, isect).unwrap();
        assert_eq!((h.t, h.prim_idx), (1.0, 1));
        let seg = RaySeg::along(Vec3::new(0.0, 3.0, 0.0), Axis::X, 0.0, 10.0);
        assert!(bvh.closest_hit(&seg, isect).is_none());
    }

    #[test]
    fn closest_hit_matches_linear_argmin() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spheres: Vec<SpherePrim> = (0..300)
            .map(|i| SpherePrim {
                center: Vec3::new(rng.random(), rng.random(), rng.random()),
                radius: rng.random_range(0.01..0.05),
                particle_id: i,
            })
            .collect();
        let boxes: Vec<Aabb> = spheres.iter().map(SpherePrim::bounds).collect();
        let bvh = Bvh::build(&boxes, 4).unwrap();
        for _ in 0..2000 {
            let seg = RaySeg::along(Vec3::new(-0.1, rng.random(), rng.random()), Axis::X, 0.0, 1.2);
            let got = bvh.closest_hit(&seg, |p, s| ray_sphere(s, &spheres[p as usize]).first().copied());
            let want = spheres
                .iter()
                .filter_map(|s| ray_sphere(&seg, s).first().copied())
                .min_by(|a, b| a.t.total_cmp(&b.t));
            assert_eq!(got.map(|h| h.t), want.map(|h| h.t));
        }
    }
}
