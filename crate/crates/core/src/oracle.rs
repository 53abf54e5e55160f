//! Brute-force reference. Every pair is tested with the shared predicate;
//! potentials use 64-bit distances.

use alloc::vec::Vec;

use crate::engine::{potential_weight, within_cutoff, Accumulators, Kernel, ProblemSpec, TargetAccumulator};
use crate::geom::Vec3;
use crate::{Error, Result};

pub const DEFAULT_CAP: usize = 50_000;

fn dist_f64(a: Vec3, b: Vec3) -> f64 {
    let d = |x: f32, y: f32| x as f64 - y as f64;
    let (dx, dy, dz) = (d(a.x, b.x), d(a.y, b.y), d(a.z, b.z));
    libm::sqrt(dx * dx + dy * dy + dz * dz)
}

#[derive(Debug, Clone)]
pub struct OracleScene {
    cutoff: f32,
    positions: Vec<Vec3>,
}

impl OracleScene {
    pub fn build(positions: &[Vec3], cutoff: f32) -> Result<Self> {
        Self::build_capped(positions, cutoff, DEFAULT_CAP)
    }

    pub fn build_capped(positions: &[Vec3], cutoff: f32, cap: usize) -> Result<Self> {
        if positions.len() > cap {
            return Err(Error::OracleCapExceeded {
                n: positions.len(),
                cap,
            });
        }
        Ok(Self {
            cutoff,
            positions: positions.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn for_each_neighbor<F: FnMut(u32, f32)>(&self, target: usize, mut f: F) {
        let cutoff_sq = self.cutoff * self.cutoff;
        let me = self.positions[target];
        for (j, &p) in self.positions.iter().enumerate() {
            if j == target {
                continue;
            }
            if let Some(d2) = within_cutoff(me, p, cutoff_sq) {
                f(j as u32, d2);
            }
        }
    }
}

/// Exact double loop over all ordered pairs, capped at [`DEFAULT_CAP`]
/// particles.
pub fn brute_force(spec: &ProblemSpec, kernel: Kernel) -> Result<Accumulators> {
    brute_force_capped(spec, kernel, DEFAULT_CAP)
}

pub fn brute_force_capped(spec: &ProblemSpec, kernel: Kernel, cap: usize) -> Result<Accumulators> {
    spec.validate()?;
    let scene = OracleScene::build_capped(&spec.positions, spec.cutoff, cap)?;
    let pos = &spec.positions;
    let cutoff = spec.cutoff as f64;
    let values = (0..scene.len())
        .map(|t| {
            let mut acc = TargetAccumulator::new(kernel, spec.cutoff);
            scene.for_each_neighbor(t, |s, _| {
                acc.push_weight(s, potential_weight(dist_f64(pos[t], pos[s as usize]), cutoff))
            });
            acc.finish()
        })
        .collect();
    Ok(Accumulators::from_values(kernel, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec;

    #[test]
    fn trivial_sizes() {
        for n in 0..2 {
            let spec = ProblemSpec::new(vec![Vec3::ZERO; n], 1.0);
            let r = brute_force(&spec, Kernel::Record).unwrap();
            assert_eq!(r.counts, vec![0; n]);
            assert_eq!(r.pair_visits(), 0);
        }
    }

    #[test]
    fn collinear_chain() {
        let pts = (0..3).map(|i| Vec3::new(0.6 * i as f32, 0.0, 0.0)).collect();
        let spec = ProblemSpec::new(pts, 1.0);
        let r = brute_force(&spec, Kernel::Record).unwrap();
        assert_eq!(r.counts, vec![1, 2, 1]);
        assert_eq!(r.lists().unwrap(), &[vec![1], vec![0, 2], vec![1]]);
    }

    #[test]
    fn potential_weights() {
        let spec = ProblemSpec::new(vec![Vec3::ZERO, Vec3::new(0.5, 0.0, 0.0)], 1.0);
        let r = brute_force(&spec, Kernel::Potential).unwrap();
        assert_eq!(r.potentials().unwrap(), &[0.25, 0.25]);
    }

    #[test]
    fn cap() {
        let spec = ProblemSpec::new(vec![Vec3::ZERO; 4], 1.0);
        assert_eq!(
            brute_force_capped(&spec, Kernel::Count, 3),
            Err(Error::OracleCapExceeded { n: 4, cap: 3 })
        );
    }
}
