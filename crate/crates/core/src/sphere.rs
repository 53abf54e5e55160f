//! Sphere encoding.
//!
//! Every particle carries a sphere of radius `r = C·√(2/3) + ε`. Each target
//! casts three axis-aligned rays through itself, spanning `[−l, l]` with
//! `l = C·√(2/3)`, the distance from any coordinate axis to the corners of
//! the cube inscribed in the cutoff sphere. A source within the cutoff is
//! always hit by the ray of the axis closest to it, so accepting a pair only
//! on that ray (and only on its first surface hit) counts it exactly once.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::bvh::{Bvh, Split, DEFAULT_LEAF_SIZE};
use crate::engine::within_cutoff;
use crate::geom::{ray_sphere, Axis, Hit, RaySeg, SpherePrim, Vec3};
use crate::Result;

/// √(2/3).
pub const SQRT_2_3: f64 = 0.816_496_580_927_726;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereParams {
    pub radius: f32,
    pub half_length: f32,
}

impl SphereParams {
    pub fn new(cutoff: f32, epsilon: f32) -> Self {
        let half_length = (cutoff as f64 * SQRT_2_3) as f32;
        Self {
            radius: half_length + epsilon,
            half_length,
        }
    }
}

/// Coordinate of the cube corner `x = y = z` on the cutoff sphere, `C/√3`.
pub fn corner_coordinate(cutoff: f32) -> f32 {
    (cutoff as f64 / libm::sqrt(3.0)) as f32
}

/// The three rays of a target: along x, y and z through `target`, with
/// `t ∈ [−l, l]`.
pub fn sphere_rays(target: Vec3, params: &SphereParams) -> [RaySeg; 3] {
    let l = params.half_length;
    Axis::ALL.map(|axis| RaySeg::along(target, axis, -l, l))
}

/// Axis with the smallest perpendicular distance to `source` among the lines
/// through `target`. Ties go to the earlier axis (x before y before z).
pub fn closest_axis(target: Vec3, source: Vec3) -> Axis {
    let d = source - target;
    let (dx2, dy2, dz2) = (d.x * d.x, d.y * d.y, d.z * d.z);
    let per_axis = [dy2 + dz2, dx2 + dz2, dx2 + dy2];
    let mut best = 0;
    for i in 1..3 {
        if per_axis[i] < per_axis[best] {
            best = i;
        }
    }
    Axis::ALL[best]
}

/// Distance and closest-axis test for a surface hit of `ray_axis` on the
/// sphere of `source`.
pub fn sphere_filter_accept(target: Vec3, source: Vec3, ray_axis: Axis, cutoff: f32) -> bool {
    within_cutoff(target, source, cutoff * cutoff).is_some() && closest_axis(target, source) == ray_axis
}

/// Whether `hit` is the first surface hit of `seg` on `sphere`.
///
/// A ray on the closest axis can cross a sphere twice when the source is
/// near the cutoff along a cube diagonal; only the first crossing counts.
pub fn is_first_surface_hit(seg: &RaySeg, sphere: &SpherePrim, hit: &Hit) -> bool {
    ray_sphere(seg, sphere)
        .first()
        .is_some_and(|first| first.front_face == hit.front_face)
}

#[derive(Debug, Clone)]
pub struct SphereScene {
    params: SphereParams,
    cutoff: f32,
    spheres: Vec<SpherePrim>,
    bvh: Option<Bvh>,
}

impl SphereScene {
    pub fn build(positions: &[Vec3], cutoff: f32, epsilon: f32) -> Result<Self> {
        Self::build_with(positions, cutoff, epsilon, Split::default())
    }

    pub fn build_with(positions: &[Vec3], cutoff: f32, epsilon: f32, split: Split) -> Result<Self> {
        let params = SphereParams::new(cutoff, epsilon);
        let spheres: Vec<SpherePrim> = positions
            .iter()
            .enumerate()
            .map(|(i, &center)| SpherePrim {
                center,
                radius: params.radius,
                particle_id: i as u32,
            })
            .collect();
        let bvh = if spheres.is_empty() {
            None
        } else {
            let radius = params.radius;
            Some(Bvh::build_keyed(positions, DEFAULT_LEAF_SIZE, split, |center, i| {
                SpherePrim { center, radius, particle_id: i }.bounds()
            })?)
        };
        Ok(Self {
            params,
            cutoff,
            spheres,
            bvh,
        })
    }

    pub fn params(&self) -> &SphereParams {
        &self.params
    }

    pub fn spheres(&self) -> &[SpherePrim] {
        &self.spheres
    }

    pub fn bvh(&self) -> Option<&Bvh> {
        self.bvh.as_ref()
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn rays(&self, target: usize) -> [RaySeg; 3] {
        sphere_rays(self.spheres[target].center, &self.params)
    }

    /// Every surface hit of the target's rays, self hits included, before
    /// any filtering.
    pub fn raw_hits<F: FnMut(Axis, &RaySeg, &SpherePrim, Hit)>(&self, target: usize, mut f: F) {
        let Some(bvh) = &self.bvh else { return };
        for (axis, seg) in Axis::ALL.into_iter().zip(self.rays(target)) {
            bvh.traverse_anyhit(&seg, |prim| {
                let sphere = &self.spheres[prim as usize];
                for hit in ray_sphere(&seg, sphere) {
                    f(axis, &seg, sphere, hit);
                }
                ControlFlow::Continue(())
            });
        }
    }

    pub fn for_each_neighbor<F: FnMut(u32, f32)>(&self, target: usize, mut f: F) {
        let cutoff_sq = self.cutoff * self.cutoff;
        let center = self.spheres[target].center;
        self.raw_hits(target, |axis, seg, sphere, hit| {
            if sphere.particle_id as usize == target {
                return;
            }
            let Some(d2) = within_cutoff(center, sphere.center, cutoff_sq) else {
                return;
            };
            if closest_axis(center, sphere.center) == axis && is_first_surface_hit(seg, sphere, &hit) {
                f(sphere.particle_id, d2);
            }
        });
    }

    /// Closest surface hit along `seg`, for rendering.
    pub fn closest_hit(&self, seg: &RaySeg) -> Option<Hit> {
        self.bvh.as_ref()?.closest_hit(seg, |prim, s| {
            ray_sphere(s, &self.spheres[prim as usize]).first().copied()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Aabb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::vec;

    #[test]
    fn radius_and_length() {
        let p = SphereParams::new(1.0, 1e-4);
        assert!((p.half_length - 0.816_496_6).abs() < 1e-6);
        assert!((p.radius - 0.816_596_6).abs() < 1e-6);
        assert!(p.radius > p.half_length);
        assert!((corner_coordinate(1.0) - 0.577_35).abs() < 1e-5);
    }

    #[test]
    fn single_sphere_root_box() {
        let s = SphereScene::build(&[Vec3::new(1.0, 2.0, 3.0)], 1.0, 1e-4).unwrap();
        let r = s.params().radius;
        assert_eq!(s.bvh().unwrap().root_bounds(), Aabb::around(Vec3::new(1.0, 2.0, 3.0), Vec3::splat(r)));
    }

    #[test]
    fn rays_through_target() {
        let p = SphereParams::new(1.0, 1e-4);
        let rays = sphere_rays(Vec3::ZERO, &p);
        assert_eq!(rays[0].start(), Vec3::new(-p.half_length, 0.0, 0.0));
        assert_eq!(rays[0].end(), Vec3::new(p.half_length, 0.0, 0.0));
        let dirs: vec::Vec<Vec3> = rays.iter().map(|r| r.dir).collect();
        assert_eq!(dirs, vec![Vec3::unit(Axis::X), Vec3::unit(Axis::Y), Vec3::unit(Axis::Z)]);
        for r in &rays {
            assert_eq!(r.point_at(0.0), Vec3::ZERO);
        }
    }

    #[test]
    fn filter_examples() {
        let t = Vec3::ZERO;
        let s = Vec3::new(0.5, 0.2, 0.1);
        // axis distances² = {0.05, 0.26, 0.29}
        assert!(sphere_filter_accept(t, s, Axis::X, 1.0));
        assert!(!sphere_filter_accept(t, s, Axis::Y, 1.0));
        assert!(!sphere_filter_accept(t, s, Axis::Z, 1.0));

        let tie = Vec3::new(0.3, -0.3, 0.1);
        assert_eq!(closest_axis(t, tie), Axis::X);
        assert!(sphere_filter_accept(t, tie, Axis::X, 1.0));
        assert!(!sphere_filter_accept(t, tie, Axis::Y, 1.0));
    }

    #[test]
    fn far_aligned_source_is_hit_but_rejected() {
        let p = SphereParams::new(1.0, 1e-4);
        let far = Vec3::new(p.half_length + p.radius - 1e-5, 0.0, 0.0);
        let rays = sphere_rays(Vec3::ZERO, &p);
        let sphere = SpherePrim { center: far, radius: p.radius, particle_id: 1 };
        assert_eq!(ray_sphere(&rays[0], &sphere).len(), 1);
        assert!(!sphere_filter_accept(Vec3::ZERO, far, Axis::X, 1.0));
    }

    #[test]
    fn self_sphere_is_silent() {
        let s = SphereScene::build(&[Vec3::new(0.3, 0.3, 0.3)], 0.2, 2e-5).unwrap();
        let mut hits = 0;
        s.raw_hits(0, |_, _, _, _| hits += 1);
        assert_eq!(hits, 0);
    }

    /// Accepted (ray, hit) events for a pair at offset `d` from the target.
    fn accepted(d: Vec3, c: f32, eps: f32) -> (usize, usize) {
        let scene = SphereScene::build(&[Vec3::ZERO, d], c, eps).unwrap();
        let mut n = 0;
        scene.for_each_neighbor(0, |_, _| n += 1);
        let mut raw = 0;
        scene.raw_hits(0, |_, _, s, _| raw += (s.particle_id == 1) as usize);
        (n, raw)
    }

    #[test]
    fn exactly_once_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (c, eps) = (1.0f32, 1e-4f32);
        for _ in 0..10_000 {
            let d = loop {
                let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let len = d.length();
                if len < c && len > 2.0 * eps {
                    break d;
                }
            };
            let (n, raw) = accepted(d, c, eps);
            assert_eq!(n, 1, "offset {d:?}");
            assert!(raw >= 1);
        }
    }

    #[test]
    fn diagonal_near_cutoff_needs_first_hit_rule() {
        // the closest-axis ray crosses this sphere twice
        let c = 1.0;
        let d = Vec3::new(0.57, 0.56, 0.55);
        let p = SphereParams::new(c, 1e-4);
        let sphere = SpherePrim { center: d, radius: p.radius, particle_id: 1 };
        let x_ray = sphere_rays(Vec3::ZERO, &p)[0];
        assert_eq!(closest_axis(Vec3::ZERO, d), Axis::X);
        assert_eq!(ray_sphere(&x_ray, &sphere).len(), 2);
        assert_eq!(accepted(d, c, 1e-4).0, 1);
    }
}
