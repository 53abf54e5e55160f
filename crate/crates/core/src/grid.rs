//! Uniform grid of cells with width `C`. Particles are binned with a
//! three-pass counting sort and each target scans the 27 cells around its
//! own. Building costs `O(N + cells)`, so a large, mostly empty grid is
//! expensive even when few particles are present.

use alloc::vec;
use alloc::vec::Vec;

use crate::engine::within_cutoff;
use crate::geom::{Aabb, Vec3};
use crate::{Error, Result};

/// Upper bound on the number of cells a grid may allocate.
pub const MAX_CELLS: u64 = 1 << 30;

/// Relative slack under which `extent / C` counts as an integer, so that a
/// unit box with `C = 1/β` yields exactly β cells per axis.
const DIM_SLACK: f64 = 1e-6;

fn axis_dim(extent: f32, cutoff: f32) -> u64 {
    let q = extent as f64 / cutoff as f64;
    let r = libm::round(q);
    let n = if (q - r).abs() <= DIM_SLACK * r.max(1.0) { r } else { libm::ceil(q) };
    (n as u64).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub origin: Vec3,
    pub cell_width: f32,
    pub dims: [u32; 3],
    /// Exclusive prefix sums of the cell histogram, `cells + 1` entries.
    pub cell_offsets: Vec<u32>,
    /// Slot -> particle index, grouped by cell.
    pub particle_order: Vec<u32>,
    /// Positions in slot order.
    pub sorted_positions: Vec<Vec3>,
    /// Particle index -> linear cell index.
    pub particle_cell: Vec<u32>,
}

impl Grid {
    pub fn build(positions: &[Vec3], cutoff: f32, bounds: &Aabb) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::InvalidCutoff(cutoff));
        }
        for (i, p) in positions.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinitePosition(i));
            }
            if !bounds.contains_point(*p) {
                return Err(Error::OutOfBounds(i));
            }
        }
        let (origin, dims) = if bounds.is_valid() {
            let ext = bounds.extent();
            let d = [axis_dim(ext.x, cutoff), axis_dim(ext.y, cutoff), axis_dim(ext.z, cutoff)];
            let cells = d[0] as u128 * d[1] as u128 * d[2] as u128;
            if cells > MAX_CELLS as u128 {
                return Err(Error::GridTooLarge(cells));
            }
            (bounds.min, d.map(|v| v as u32))
        } else {
            (Vec3::ZERO, [1, 1, 1])
        };
        let cells = dims.iter().map(|&d| d as usize).product::<usize>();

        let mut grid = Grid {
            origin,
            cell_width: cutoff,
            dims,
            cell_offsets: vec![0; cells + 1],
            particle_order: vec![0; positions.len()],
            sorted_positions: vec![Vec3::ZERO; positions.len()],
            particle_cell: Vec::with_capacity(positions.len()),
        };

        // histogram: offsets[c] counts cell c
        for &p in positions {
            let c = grid.linear(grid.cell_coords(p));
            grid.particle_cell.push(c as u32);
            grid.cell_offsets[c] += 1;
        }
        // inclusive prefix sum: offsets[c] is the end of cell c
        let mut running = 0;
        for o in &mut grid.cell_offsets[..cells] {
            running += *o;
            *o = running;
        }
        grid.cell_offsets[cells] = running;
        // reverse scatter; each cell's end moves down to its start, and
        // walking particles backwards keeps every cell in input order
        for (i, &p) in positions.iter().enumerate().rev() {
            let c = grid.particle_cell[i] as usize;
            grid.cell_offsets[c] -= 1;
            let slot = grid.cell_offsets[c] as usize;
            grid.particle_order[slot] = i as u32;
            grid.sorted_positions[slot] = p;
        }
        Ok(grid)
    }

    pub fn cell_count(&self) -> usize {
        self.cell_offsets.len() - 1
    }

    /// Cell of `p`, `floor((p − origin) / C)` per axis, clamped to the grid.
    pub fn cell_coords(&self, p: Vec3) -> [u32; 3] {
        let w = self.cell_width as f64;
        let mut out = [0u32; 3];
        for (a, o) in out.iter_mut().enumerate() {
            let q = libm::floor((p[a] as f64 - self.origin[a] as f64) / w);
            *o = q.clamp(0.0, (self.dims[a] - 1) as f64) as u32;
        }
        out
    }

    pub fn linear(&self, c: [u32; 3]) -> usize {
        let [nx, ny, _] = self.dims.map(|d| d as usize);
        c[0] as usize + nx * (c[1] as usize + ny * c[2] as usize)
    }

    /// Particle indices binned into linear cell `cell`.
    pub fn cell(&self, cell: usize) -> &[u32] {
        let (a, b) = (self.cell_offsets[cell] as usize, self.cell_offsets[cell + 1] as usize);
        &self.particle_order[a..b]
    }

    /// Visits `(slot range)` of each of the up to 27 cells around `c`.
    fn for_each_adjacent<F: FnMut(usize, usize)>(&self, c: [u32; 3], mut f: F) {
        let lo = c.map(|v| v.saturating_sub(1));
        let hi: [u32; 3] = core::array::from_fn(|a| (c[a] + 1).min(self.dims[a] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                // cells along x are contiguous, so the row is one slot range
                let first = self.linear([lo[0], y, z]);
                let last = self.linear([hi[0], y, z]);
                f(self.cell_offsets[first] as usize, self.cell_offsets[last + 1] as usize);
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridScene {
    grid: Grid,
    cutoff: f32,
    positions: Vec<Vec3>,
}

impl GridScene {
    pub fn build(positions: &[Vec3], cutoff: f32, bounds: &Aabb) -> Result<Self> {
        Ok(Self {
            grid: Grid::build(positions, cutoff, bounds)?,
            cutoff,
            positions: positions.to_vec(),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn for_each_neighbor<F: FnMut(u32, f32)>(&self, target: usize, mut f: F) {
        let g = &self.grid;
        let cutoff_sq = self.cutoff * self.cutoff;
        let me = self.positions[target];
        let c = g.cell_coords(me);
        g.for_each_adjacent(c, |a, b| {
            for slot in a..b {
                let source = g.particle_order[slot];
                if source as usize == target {
                    continue;
                }
                if let Some(d2) = within_cutoff(me, g.sorted_positions[slot], cutoff_sq) {
                    f(source, d2);
                }
            }
        });
    }
}
