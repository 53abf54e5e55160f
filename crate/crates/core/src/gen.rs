//! Workload generators: uniform points in the unit box and points on the
//! unit sphere surface.
//!
//! Both draw from ChaCha8 seeded with `seed_from_u64`, so a seed fixes the
//! point set on every platform. Points closer than
//! `SEPARATION_FACTOR · ε` to an earlier point are redrawn.

use alloc::vec::Vec;

use hashbrown::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{ProblemSpec, DEFAULT_EPSILON_RATIO};
use crate::geom::{Aabb, Vec3};
use crate::{Error, Result};

pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Minimum separation in units of ε. The sphere encoding can miss pairs
/// closer than `√3·ε`.
pub const SEPARATION_FACTOR: f32 = 2.0;

pub const MAX_ATTEMPTS: u32 = 100;

/// Largest particle count a generator will produce.
pub const MAX_PARTICLES: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformConfig {
    pub beta: u32,
    pub p: u32,
    pub seed: u64,
}

impl UniformConfig {
    pub fn particle_count(&self) -> u64 {
        self.p as u64 * (self.beta as u64).pow(3)
    }

    pub fn cutoff(&self) -> f32 {
        1.0 / self.beta as f32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceConfig {
    pub alpha: u32,
    pub p: u32,
    pub seed: u64,
}

impl SurfaceConfig {
    pub fn particle_count(&self) -> u64 {
        self.p as u64 * (self.alpha as u64).pow(3)
    }
}

/// A generated particle set and the parameters it was generated for.
#[derive(Debug, Clone, PartialEq)]
pub struct Workload {
    pub positions: Vec<Vec3>,
    pub cutoff: f32,
    pub epsilon: f32,
    pub domain: Aabb,
}

impl Workload {
    pub fn to_spec(&self) -> ProblemSpec {
        ProblemSpec::new(self.positions.clone(), self.cutoff)
            .with_epsilon(self.epsilon)
            .with_domain(self.domain)
    }
}

/// Cutoff on the unit sphere that gives about `9p` neighbors per particle:
/// the polar angle of a cap holding `9p` of `n` uniformly spread points.
pub fn surface_cutoff(n: u64, p: u32) -> f32 {
    let expected = 9.0 * p as f64;
    let coef = (1.0 - 2.0 * expected / n as f64).clamp(-1.0, 1.0);
    libm::acos(coef) as f32
}

fn check_len(n: u64) -> Result<usize> {
    if n > MAX_PARTICLES {
        return Err(Error::InvalidConfig("particle count too large"));
    }
    Ok(n as usize)
}

/// Rejects points within `min_dist` of an accepted point using a hash grid
/// with cell width `min_dist`.
struct Separation {
    min_dist: f32,
    cells: HashMap<[i64; 3], Vec<Vec3>>,
}

impl Separation {
    fn new(min_dist: f32) -> Self {
        Self {
            min_dist,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: Vec3) -> [i64; 3] {
        p.to_array().map(|v| libm::floor(v as f64 / self.min_dist as f64) as i64)
    }

    fn is_clear(&self, p: Vec3) -> bool {
        let k = self.key(p);
        let lim = self.min_dist * self.min_dist;
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let Some(pts) = self.cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) else {
                        continue;
                    };
                    if pts.iter().any(|&q| (q - p).length_squared() <= lim) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn insert(&mut self, p: Vec3) {
        self.cells.entry(self.key(p)).or_default().push(p);
    }
}

fn generate<F: FnMut(&mut ChaCha8Rng) -> Vec3>(n: usize, seed: u64, epsilon: f32, mut draw: F) -> Result<Vec<Vec3>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let separation = SEPARATION_FACTOR * epsilon;
    let mut sep = Separation::new(separation);
    let mut out = Vec::with_capacity(n);
    for index in 0..n {
        let mut attempts = 0;
        let p = loop {
            if attempts == MAX_ATTEMPTS {
                return Err(Error::SeparationFailed {
                    index,
                    separation,
                    attempts,
                });
            }
            attempts += 1;
            let p = draw(&mut rng);
            if sep.is_clear(p) {
                break p;
            }
        };
        sep.insert(p);
        out.push(p);
    }
    Ok(out)
}

/// `p·β³` points uniform in `[0, 1)³` with cutoff `1/β`.
pub fn gen_uniform(cfg: &UniformConfig) -> Result<Workload> {
    if cfg.beta == 0 || cfg.p == 0 {
        return Err(Error::InvalidConfig("beta and p must be positive"));
    }
    let n = check_len(cfg.particle_count())?;
    let cutoff = cfg.cutoff();
    let epsilon = cutoff * DEFAULT_EPSILON_RATIO;
    let positions = generate(n, cfg.seed, epsilon, |rng| Vec3::new(rng.random(), rng.random(), rng.random()))?;
    Ok(Workload {
        positions,
        cutoff,
        epsilon,
        domain: Aabb::new(Vec3::ZERO, Vec3::splat(1.0)),
    })
}

/// `p·α³` points uniform on the unit sphere, with [`surface_cutoff`]. The
/// grid domain is the cube `[−1, 1]³`.
pub fn gen_surface(cfg: &SurfaceConfig) -> Result<Workload> {
    if cfg.alpha == 0 || cfg.p == 0 {
        return Err(Error::InvalidConfig("alpha and p must be positive"));
    }
    let n = check_len(cfg.particle_count())?;
    let cutoff = surface_cutoff(cfg.particle_count(), cfg.p);
    let epsilon = cutoff * DEFAULT_EPSILON_RATIO;
    let positions = generate(n, cfg.seed, epsilon, |rng| {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let theta = 2.0 * core::f64::consts::PI * u;
        let phi = libm::acos(1.0 - 2.0 * v);
        let s = libm::sin(phi);
        Vec3::new(
            (s * libm::cos(theta)) as f32,
            (s * libm::sin(theta)) as f32,
            libm::cos(phi) as f32,
        )
    })?;
    Ok(Workload {
        positions,
        cutoff,
        epsilon,
        domain: Aabb::new(Vec3::splat(-1.0), Vec3::splat(1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_parameters() {
        let w = gen_uniform(&UniformConfig { beta: 4, p: 2, seed: 1 }).unwrap();
        assert_eq!((w.positions.len(), w.cutoff), (128, 0.25));
        let w = gen_uniform(&UniformConfig { beta: 2, p: 1, seed: 1 }).unwrap();
        assert_eq!((w.positions.len(), w.cutoff), (8, 0.5));
        assert!(w.positions.iter().all(|p| p.to_array().iter().all(|&v| (0.0..1.0).contains(&v))));
    }

    #[test]
    fn same_seed_same_points() {
        let a = gen_uniform(&UniformConfig { beta: 8, p: 2, seed: 7 }).unwrap();
        let b = gen_uniform(&UniformConfig { beta: 8, p: 2, seed: 7 }).unwrap();
        let c = gen_uniform(&UniformConfig { beta: 8, p: 2, seed: 8 }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.positions, c.positions);
        let s = SurfaceConfig { alpha: 8, p: 1, seed: 3 };
        assert_eq!(gen_surface(&s).unwrap(), gen_surface(&s).unwrap());
    }

    #[test]
    fn surface_cutoff_formula() {
        // acos(1 − 18/512), evaluated in f64
        let c = surface_cutoff(512, 1);
        assert!((c - 0.265_948_1).abs() < 1e-6, "{c}");
        assert_eq!(surface_cutoff(16384, 32), c);
        assert_eq!(surface_cutoff(4, 1), core::f32::consts::PI);
    }

    #[test]
    fn surface_points_are_unit() {
        let w = gen_surface(&SurfaceConfig { alpha: 8, p: 2, seed: 5 }).unwrap();
        assert_eq!(w.positions.len(), 1024);
        for p in &w.positions {
            assert!((p.length() - 1.0).abs() <= 1e-6);
            assert!(w.domain.contains_point(*p));
        }
    }

    #[test]
    fn separation_holds() {
        let w = gen_uniform(&UniformConfig { beta: 4, p: 8, seed: 2 }).unwrap();
        let min = SEPARATION_FACTOR * w.epsilon;
        for (i, &a) in w.positions.iter().enumerate() {
            for &b in &w.positions[..i] {
                assert!((a - b).length() > min);
            }
        }
    }

    #[test]
    fn crowded_draws_fail() {
        let r = generate(3, 0, 0.1, |_| Vec3::ZERO);
        assert_eq!(
            r,
            Err(Error::SeparationFailed {
                index: 1,
                separation: 0.2,
                attempts: MAX_ATTEMPTS
            })
        );
    }

    #[test]
    fn rejects_bad_config() {
        assert!(gen_uniform(&UniformConfig { beta: 0, p: 1, seed: 0 }).is_err());
        assert!(gen_surface(&SurfaceConfig { alpha: 4, p: 0, seed: 0 }).is_err());
        assert!(gen_uniform(&UniformConfig { beta: 1024, p: 1, seed: 0 }).is_err());
    }
}
