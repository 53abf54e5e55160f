//! Custom-AABB encoding: a box of half-width `C` around every particle and a
//! point query at each target. The interaction is evaluated directly in the
//! traversal visitor, reading source positions from the particle array.

use alloc::vec::Vec;
use core::ops::ControlFlow;

use crate::bvh::{Bvh, Split, DEFAULT_LEAF_SIZE};
use crate::engine::within_cutoff;
use crate::geom::{Aabb, Vec3};
use crate::Result;

/// `a + b` and its exact rounding error.
#[inline]
fn two_sum(a: f32, b: f32) -> (f32, f32) {
    let s = a + b;
    let a1 = s - b;
    let b1 = s - a1;
    (s, (a - a1) + (b - b1))
}

/// One ulp towards −∞ for a finite `s`, without the special cases of
/// `f32::next_down`.
#[inline]
fn step_down(s: f32) -> f32 {
    let b = s.to_bits();
    f32::from_bits(if s > 0.0 {
        b - 1
    } else if s < 0.0 {
        b + 1
    } else {
        0x8000_0001
    })
}

#[inline]
fn step_up(s: f32) -> f32 {
    -step_down(-s)
}

/// `[p − C, p + C]` per axis, rounded outward when `p ± C` is inexact in
/// `f32` so the box always contains every point within `C` of `p`.
#[inline]
pub fn particle_box(p: Vec3, cutoff: f32) -> Aabb {
    let lo = |v: f32| match two_sum(v, -cutoff) {
        (s, e) if e < 0.0 => step_down(s),
        (s, _) => s,
    };
    let hi = |v: f32| match two_sum(v, cutoff) {
        (s, e) if e > 0.0 => step_up(s),
        (s, _) => s,
    };
    Aabb::new(Vec3::new(lo(p.x), lo(p.y), lo(p.z)), Vec3::new(hi(p.x), hi(p.y), hi(p.z)))
}

#[derive(Debug, Clone)]
pub struct AabbScene {
    cutoff: f32,
    positions: Vec<Vec3>,
    bvh: Option<Bvh>,
}

impl AabbScene {
    pub fn build(positions: &[Vec3], cutoff: f32) -> Result<Self> {
        Self::build_with(positions, cutoff, Split::default())
    }

    pub fn build_with(positions: &[Vec3], cutoff: f32, split: Split) -> Result<Self> {
        let bvh = if positions.is_empty() {
            None
        } else {
            Some(Bvh::build_keyed(positions, DEFAULT_LEAF_SIZE, split, |p, _| {
                particle_box(p, cutoff)
            })?)
        };
        Ok(Self {
            cutoff,
            positions: positions.to_vec(),
            bvh,
        })
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

    /// Every source whose box contains the target, self included.
    pub fn visit_candidates<F: FnMut(u32)>(&self, target: usize, mut f: F) -> usize {
        let Some(bvh) = &self.bvh else { return 0 };
        bvh.traverse_point(self.positions[target], |prim| {
            f(prim);
            ControlFlow::Continue(())
        })
    }

    pub fn for_each_neighbor<F: FnMut(u32, f32)>(&self, target: usize, mut f: F) {
        let cutoff_sq = self.cutoff * self.cutoff;
        let me = self.positions[target];
        self.visit_candidates(target, |prim| {
            if prim as usize == target {
                return;
            }
            if let Some(d2) = within_cutoff(me, self.positions[prim as usize], cutoff_sq) {
                f(prim, d2);
            }
        });
    }
}
