//! 30-bit Morton (Z-order) codes used to reorder particles so that spatial
//! neighbors sit close in memory.

use alloc::vec::Vec;

use crate::geom::{Aabb, Vec3};

pub const BITS_PER_AXIS: u32 = 10;
const CELLS: u32 = 1 << BITS_PER_AXIS;

/// Spreads the low 10 bits of `v` so that bit `i` lands at bit `3i`.
pub fn spread_bits(v: u32) -> u32 {
    let mut x = v & 0x3ff;
    x = (x | (x << 16)) & 0x0300_00ff;
    x = (x | (x << 8)) & 0x0300_f00f;
    x = (x | (x << 4)) & 0x030c_30c3;
    x = (x | (x << 2)) & 0x0924_9249;
    x
}

/// Interleaves three 10-bit cell coordinates, x in the lowest bit.
pub fn encode(ix: u32, iy: u32, iz: u32) -> u32 {
    spread_bits(ix) | (spread_bits(iy) << 1) | (spread_bits(iz) << 2)
}

/// Maps points in a box to 10-bit cell coordinates per axis.
#[derive(Debug, Clone, Copy)]
pub struct Quantizer {
    lo: [f64; 3],
    /// Cells per unit length; zero along flat axes.
    scale: [f64; 3],
}

impl Quantizer {
    pub fn new(bounds: &Aabb) -> Self {
        let ext = bounds.extent();
        Self {
            lo: core::array::from_fn(|a| bounds.min[a] as f64),
            scale: core::array::from_fn(|a| {
                if ext[a] > 0.0 {
                    CELLS as f64 / ext[a] as f64
                } else {
                    0.0
                }
            }),
        }
    }

    #[inline]
    fn cell(&self, v: f32, a: usize) -> u32 {
        // `as` saturates, so points below the box land in cell 0
        let q = ((v as f64 - self.lo[a]) * self.scale[a]) as u32;
        q.min(CELLS - 1)
    }

    #[inline]
    pub fn code(&self, p: Vec3) -> u32 {
        encode(self.cell(p.x, 0), self.cell(p.y, 1), self.cell(p.z, 2))
    }
}

/// Morton code of `p` within `bounds`, 10 bits per axis.
pub fn code(p: Vec3, bounds: &Aabb) -> u32 {
    Quantizer::new(bounds).code(p)
}

/// Sorts positions by Morton code over their bounding box. Returns the
/// sorted positions and the permutation `new index -> original index`.
/// The sort is stable, so equal codes keep their input order.
pub fn morton_sort(positions: &[Vec3]) -> (Vec<Vec3>, Vec<u32>) {
    let quantizer = Quantizer::new(&Aabb::from_points(positions));
    let mut keyed: Vec<(u32, u32)> = positions
        .iter()
        .enumerate()
        .map(|(i, &p)| (quantizer.code(p), i as u32))
        .collect();
    keyed.sort_by_key(|&(c, _)| c);
    let perm: Vec<u32> = keyed.iter().map(|&(_, i)| i).collect();
    let sorted = perm.iter().map(|&i| positions[i as usize]).collect();
    (sorted, perm)
}
