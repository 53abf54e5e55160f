//! Double-squares encoding.
//!
//! Each particle owns two squares facing along x at `x ± C/2`, each made of
//! two triangles, with half-extent `C/2 + ε` in y and z. A target casts four
//! +x rays along the edges of its own `(C+ε) × (C+ε) × C` box, at y/z
//! offsets `±C/2`. Two boxes overlap iff some ray of one crosses a face of
//! the other, so every pair within the cutoff is detected. The ray-index
//! rule then picks exactly one ray per pair.
//!
//! Ray index map: 0 → (+y, +z), 1 → (−y, +z), 2 → (+y, −z), 3 → (−y, −z).

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::bvh::{Bvh, Split, DEFAULT_LEAF_SIZE};
use crate::engine::within_cutoff;
use crate::geom::{ray_aabb, ray_triangle, Aabb, Axis, Hit, RaySeg, TrianglePrim, Vec3};
use crate::Result;

/// `(sy, sz)` offsets of each ray index.
pub const RAY_SIGNS: [(f32, f32); 4] = [(1.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)];

/// Corner indices of the four triangles: two on the −x face, two on +x.
pub const TRIANGLE_CORNERS: [[usize; 3]; 4] = [[0, 1, 3], [0, 2, 3], [4, 5, 7], [4, 6, 7]];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaresParams {
    pub cutoff: f32,
    pub epsilon: f32,
    /// Distance of each face from the particle along x, `C/2`.
    pub half_x: f32,
    /// Half-extent of the squares in y and z, `C/2 + ε`.
    pub half_yz: f32,
    /// Magnitude of the rays' y/z offsets, `C/2`.
    pub ray_offset: f32,
    /// Rays span `[−(C+ε)/2, (C+ε)/2]` in x around the target.
    pub ray_half_span: f32,
}

impl SquaresParams {
    pub fn new(cutoff: f32, epsilon: f32) -> Self {
        Self {
            cutoff,
            epsilon,
            half_x: cutoff / 2.0,
            half_yz: cutoff / 2.0 + epsilon,
            ray_offset: cutoff / 2.0,
            ray_half_span: (cutoff + epsilon) / 2.0,
        }
    }

    /// |Δ| at or below this counts as "equal coordinates" in the ray-index
    /// rule. Half of ε keeps the chosen ray at least ε/2 inside the squares.
    pub fn equal_tolerance(&self) -> f32 {
        self.epsilon / 2.0
    }
}

/// The eight box corners of a particle: bit 0 selects +z, bit 1 +y, bit 2 +x.
pub fn square_corners(p: Vec3, params: &SquaresParams) -> [Vec3; 8] {
    core::array::from_fn(|i| {
        let pick = |bit: usize, half: f32| if i & bit != 0 { half } else { -half };
        Vec3::new(
            p.x + pick(4, params.half_x),
            p.y + pick(2, params.half_yz),
            p.z + pick(1, params.half_yz),
        )
    })
}

/// Triangles `4·particle_id .. 4·particle_id + 4` of one particle.
pub fn particle_triangles(p: Vec3, particle_id: u32, params: &SquaresParams) -> [TrianglePrim; 4] {
    let c = square_corners(p, params);
    core::array::from_fn(|k| {
        let [a, b, d] = TRIANGLE_CORNERS[k];
        TrianglePrim {
            v0: c[a],
            v1: c[b],
            v2: c[d],
            prim_idx: 4 * particle_id + k as u32,
        }
    })
}

/// The four +x rays of a target, indexed per [`RAY_SIGNS`].
pub fn squares_rays(target: Vec3, params: &SquaresParams) -> [RaySeg; 4] {
    let span = params.ray_half_span;
    RAY_SIGNS.map(|(sy, sz)| {
        let origin = Vec3::new(
            target.x - span,
            target.y + sy * params.ray_offset,
            target.z + sz * params.ray_offset,
        );
        RaySeg::along(origin, Axis::X, 0.0, 2.0 * span)
    })
}

/// Rebuilds the generating particle from a triangle's vertices: y and z are
/// the midpoints of the vertex extremes, x is shifted back by `C/2` toward
/// the particle depending on which face the triangle belongs to.
pub fn squares_recover_source(tri: &TrianglePrim, cutoff: f32) -> Vec3 {
    let v = tri.vertices();
    let mid = |f: fn(&Vec3) -> f32| {
        let (lo, hi) = v
            .iter()
            .map(f)
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        (hi + lo) / 2.0
    };
    let x = if tri.prim_idx % 4 < 2 {
        v[0].x + cutoff / 2.0
    } else {
        v[0].x - cutoff / 2.0
    };
    Vec3::new(x, mid(|p| p.y), mid(|p| p.z))
}

/// The ray index responsible for the pair `(target, source)`:
///
/// * y and z both differ: the ray on the source's side in both;
/// * y equal: index 0 if the target's z is smaller, else 2;
/// * z equal: index 0 if the target's y is smaller, else 1;
/// * both equal: index 0.
pub fn responsible_ray(target: Vec3, source: Vec3, tolerance: f32) -> usize {
    let dy = source.y - target.y;
    let dz = source.z - target.z;
    let y_eq = dy.abs() <= tolerance;
    let z_eq = dz.abs() <= tolerance;
    match (y_eq, z_eq) {
        (true, true) => 0,
        (true, false) => {
            if dz > 0.0 {
                0
            } else {
                2
            }
        }
        (false, true) => {
            if dy > 0.0 {
                0
            } else {
                1
            }
        }
        (false, false) => match (dy > 0.0, dz > 0.0) {
            (true, true) => 0,
            (false, true) => 1,
            (true, false) => 2,
            (false, false) => 3,
        },
    }
}

/// Distance and ray-index test for a triangle hit of ray `ray_idx` on the
/// squares of `source`.
pub fn squares_filter_accept(target: Vec3, source: Vec3, ray_idx: usize, cutoff: f32, epsilon: f32) -> bool {
    let params = SquaresParams::new(cutoff, epsilon);
    within_cutoff(target, source, cutoff * cutoff).is_some()
        && responsible_ray(target, source, params.equal_tolerance()) == ray_idx
}

#[derive(Debug, Clone)]
pub struct SquaresScene {
    params: SquaresParams,
    positions: Vec<Vec3>,
    triangles: Vec<TrianglePrim>,
    boxes: Vec<Aabb>,
    bvh: Option<Bvh>,
}

impl SquaresScene {
    pub fn build(positions: &[Vec3], cutoff: f32, epsilon: f32) -> Result<Self> {
        Self::build_with(positions, cutoff, epsilon, Split::default())
    }

    pub fn build_with(positions: &[Vec3], cutoff: f32, epsilon: f32, split: Split) -> Result<Self> {
        let params = SquaresParams::new(cutoff, epsilon);
        let mut triangles = Vec::with_capacity(4 * positions.len());
        for (i, &p) in positions.iter().enumerate() {
            triangles.extend(particle_triangles(p, i as u32, &params));
        }
        let boxes: Vec<Aabb> = triangles.iter().map(TrianglePrim::bounds).collect();
        let bvh = if boxes.is_empty() {
            None
        } else {
            let centroids: Vec<Vec3> = boxes.iter().map(Aabb::centroid).collect();
            Some(Bvh::build_keyed(&centroids, DEFAULT_LEAF_SIZE, split, |_, i| {
                boxes[i as usize]
            })?)
        };
        Ok(Self {
            params,
            positions: positions.to_vec(),
            triangles,
            boxes,
            bvh,
        })
    }

    pub fn params(&self) -> &SquaresParams {
        &self.params
    }

    pub fn triangles(&self) -> &[TrianglePrim] {
        &self.triangles
    }

    pub fn bvh(&self) -> Option<&Bvh> {
        self.bvh.as_ref()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn rays(&self, target: usize) -> [RaySeg; 4] {
        squares_rays(self.positions[target], &self.params)
    }

    /// Box test followed by the triangle test, exactly as traversal applies
    /// them.
    fn hit_prim(&self, seg: &RaySeg, prim: u32) -> Option<Hit> {
        let p = prim as usize;
        ray_aabb(seg, &self.boxes[p])?;
        ray_triangle(seg, &self.triangles[p])
    }

    /// Whether `prim` is the lowest-indexed triangle of its particle that
    /// `seg` hits. A ray can cross both faces, or the shared diagonal of a
    /// face; only one of those crossings may count.
    pub fn is_first_triangle_hit(&self, seg: &RaySeg, prim: u32) -> bool {
        let base = prim - prim % 4;
        (base..prim).all(|sibling| self.hit_prim(seg, sibling).is_none())
    }

    /// Every triangle hit of the target's rays, self hits included.
    pub fn raw_hits<F: FnMut(usize, &RaySeg, &TrianglePrim, Hit)>(&self, target: usize, mut f: F) {
        let Some(bvh) = &self.bvh else { return };
        for (ray_idx, seg) in self.rays(target).iter().enumerate() {
            bvh.traverse_anyhit(seg, |prim| {
                if let Some(hit) = ray_triangle(seg, &self.triangles[prim as usize]) {
                    f(ray_idx, seg, &self.triangles[prim as usize], hit);
                }
                ControlFlow::Continue(())
            });
        }
    }

    pub fn for_each_neighbor<F: FnMut(u32, f32)>(&self, target: usize, mut f: F) {
        let p = self.params;
        let cutoff_sq = p.cutoff * p.cutoff;
        let tol = p.equal_tolerance();
        let me = self.positions[target];
        self.raw_hits(target, |ray_idx, seg, tri, _| {
            let source_id = tri.particle_id();
            if source_id as usize == target {
                return;
            }
            let source = self.positions[source_id as usize];
            let Some(d2) = within_cutoff(me, source, cutoff_sq) else {
                return;
            };
            if responsible_ray(me, source, tol) == ray_idx && self.is_first_triangle_hit(seg, tri.prim_idx) {
                f(source_id, d2);
            }
        });
    }

    pub fn closest_hit(&self, seg: &RaySeg) -> Option<Hit> {
        self.bvh
            .as_ref()?
            .closest_hit(seg, |prim, s| ray_triangle(s, &self.triangles[prim as usize]))
    }
}
