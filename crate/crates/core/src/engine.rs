//! The build/compute contract shared by every neighbor method.
//!
//! [`Engine::build`] does everything that is timed as "build" (optional
//! Morton pre-sort, scene or grid construction). [`Engine::compute`] runs the
//! queries and the interaction kernel. Each target owns its accumulator, so
//! targets can be processed in any order or in parallel and assembled with
//! [`Engine::assemble`] into identical results.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::aabb::AabbScene;
use crate::bvh::Split;
use crate::geom::{Aabb, Vec3};
use crate::grid::GridScene;
use crate::morton::morton_sort;
use crate::oracle::OracleScene;
use crate::sphere::SphereScene;
use crate::squares::SquaresScene;
use crate::{Error, Result};

/// Default tolerance relative to the cutoff.
pub const DEFAULT_EPSILON_RATIO: f32 = 1e-4;

/// Split rule used by the ray-traced methods unless a spec overrides it.
pub const DEFAULT_SPLIT: Split = Split::Median;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub positions: Vec<Vec3>,
    pub cutoff: f32,
    /// Minimum particle separation the encodings may rely on; also the
    /// margin added to sphere radii and square extents.
    pub epsilon: f32,
    /// Morton pre-sort before building.
    pub sort: bool,
    /// Simulation box for the grid method. Defaults to the bounding box of
    /// the particles.
    pub domain: Option<Aabb>,
    /// Split rule of the BVH behind the ray-traced methods.
    pub split: Split,
}

impl ProblemSpec {
    pub fn new(positions: Vec<Vec3>, cutoff: f32) -> Self {
        Self {
            positions,
            cutoff,
            epsilon: cutoff * DEFAULT_EPSILON_RATIO,
            sort: false,
            domain: None,
            split: DEFAULT_SPLIT,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f32) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_sort(mut self, sort: bool) -> Self {
        self.sort = sort;
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn with_domain(mut self, domain: Aabb) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn cutoff_sq(&self) -> f32 {
        self.cutoff * self.cutoff
    }

    /// Checks the cheap invariants. Pairwise separation above `epsilon` is a
    /// precondition that is not checked here.
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::InvalidCutoff(self.cutoff));
        }
        let limit = self.cutoff / 100.0;
        if !(self.epsilon > 0.0 && self.epsilon <= limit) {
            return Err(Error::InvalidEpsilon {
                epsilon: self.epsilon,
                limit,
            });
        }
        if let Some(i) = self.positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinitePosition(i));
        }
        Ok(())
    }
}

/// The neighbor predicate every method shares: `|source − target|² < C²`,
/// evaluated identically everywhere so that all methods agree bit for bit.
/// Returns the squared distance when the pair interacts.
#[inline]
pub fn within_cutoff(target: Vec3, source: Vec3, cutoff_sq: f32) -> Option<f32> {
    let d2 = (source - target).length_squared();
    (d2 < cutoff_sq).then_some(d2)
}

/// Short-range weight `(1 − d/C)²`.
#[inline]
pub fn potential_weight(dist: f64, cutoff: f64) -> f64 {
    let x = 1.0 - dist / cutoff;
    x * x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    /// Neighbor tally per target.
    Count,
    /// Neighbor index list per target.
    Record,
    /// Sum of [`potential_weight`] over the neighbors of each target.
    Potential,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Count => "count",
            Kernel::Record => "record",
            Kernel::Potential => "potential",
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = UnknownName;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "count" => Ok(Kernel::Count),
            "record" => Ok(Kernel::Record),
            "potential" => Ok(Kernel::Potential),
            _ => Err(UnknownName),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownName;

impl fmt::Display for UnknownName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown name")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Sphere,
    Squares,
    CustomAabb,
    Grid,
    Oracle,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Sphere,
        Method::Squares,
        Method::CustomAabb,
        Method::Grid,
        Method::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sphere => "sphere",
            Method::Squares => "squares",
            Method::CustomAabb => "aabb",
            Method::Grid => "grid",
            Method::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = UnknownName;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or(UnknownName)
    }
}

/// Result of one target's queries.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetValue {
    Count(u32),
    List(Vec<u32>),
    Potential { sum: f64, count: u32 },
}

impl TargetValue {
    pub fn count(&self) -> u32 {
        match self {
            TargetValue::Count(c) => *c,
            TargetValue::List(l) => l.len() as u32,
            TargetValue::Potential { count, .. } => *count,
        }
    }
}

/// Per-target accumulator for one kernel.
#[derive(Debug, Clone)]
pub struct TargetAccumulator {
    kernel: Kernel,
    cutoff: f64,
    count: u32,
    list: Vec<u32>,
    sum: f64,
}

impl TargetAccumulator {
    pub fn new(kernel: Kernel, cutoff: f32) -> Self {
        Self {
            kernel,
            cutoff: cutoff as f64,
            count: 0,
            list: Vec::new(),
            sum: 0.0,
        }
    }

    #[inline]
    pub fn push(&mut self, source: u32, dist_sq: f32) {
        self.count += 1;
        match self.kernel {
            Kernel::Count => {}
            Kernel::Record => self.list.push(source),
            Kernel::Potential => {
                self.sum += potential_weight(libm::sqrt(dist_sq as f64), self.cutoff)
            }
        }
    }

    pub fn push_weight(&mut self, source: u32, weight: f64) {
        self.count += 1;
        match self.kernel {
            Kernel::Count => {}
            Kernel::Record => self.list.push(source),
            Kernel::Potential => self.sum += weight,
        }
    }

    pub fn finish(self) -> TargetValue {
        match self.kernel {
            Kernel::Count => TargetValue::Count(self.count),
            Kernel::Record => TargetValue::List(self.list),
            Kernel::Potential => TargetValue::Potential {
                sum: self.sum,
                count: self.count,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detail {
    None,
    /// Ascending neighbor indices per target.
    Lists(Vec<Vec<u32>>),
    Potentials(Vec<f64>),
}

/// Per-target results in original particle order.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulators {
    pub kernel: Kernel,
    pub counts: Vec<u32>,
    pub detail: Detail,
}

impl Accumulators {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Total accepted interactions (each unordered pair counts twice, once
    /// per endpoint).
    pub fn pair_visits(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn lists(&self) -> Option<&[Vec<u32>]> {
        match &self.detail {
            Detail::Lists(l) => Some(l),
            _ => None,
        }
    }

    pub fn potentials(&self) -> Option<&[f64]> {
        match &self.detail {
            Detail::Potentials(p) => Some(p),
            _ => None,
        }
    }

    /// Builds accumulators from values already in original index order.
    pub fn from_values(kernel: Kernel, values: Vec<TargetValue>) -> Self {
        let counts = values.iter().map(TargetValue::count).collect();
        let detail = match kernel {
            Kernel::Count => Detail::None,
            Kernel::Record => Detail::Lists(
                values
                    .into_iter()
                    .map(|v| match v {
                        TargetValue::List(mut l) => {
                            l.sort_unstable();
                            l
                        }
                        _ => Vec::new(),
                    })
                    .collect(),
            ),
            Kernel::Potential => Detail::Potentials(
                values
                    .into_iter()
                    .map(|v| match v {
                        TargetValue::Potential { sum, .. } => sum,
                        _ => 0.0,
                    })
                    .collect(),
            ),
        };
        Self {
            kernel,
            counts,
            detail,
        }
    }
}

/// A built neighbor structure, one variant per method.
#[derive(Debug, Clone)]
pub enum Scene {
    Sphere(SphereScene),
    Squares(SquaresScene),
    CustomAabb(AabbScene),
    Grid(GridScene),
    Oracle(OracleScene),
}

impl Scene {
    pub fn build(method: Method, spec: &ProblemSpec) -> Result<Self> {
        let (pos, c, eps, split) = (&spec.positions, spec.cutoff, spec.epsilon, spec.split);
        Ok(match method {
            Method::Sphere => Scene::Sphere(SphereScene::build_with(pos, c, eps, split)?),
            Method::Squares => Scene::Squares(SquaresScene::build_with(pos, c, eps, split)?),
            Method::CustomAabb => Scene::CustomAabb(AabbScene::build_with(pos, c, split)?),
            Method::Grid => {
                let bounds = spec.domain.unwrap_or_else(|| Aabb::from_points(pos));
                Scene::Grid(GridScene::build(pos, c, &bounds)?)
            }
            Method::Oracle => Scene::Oracle(OracleScene::build(pos, c)?),
        })
    }

    pub fn len(&self) -> usize {
        match self {
            Scene::Sphere(s) => s.len(),
            Scene::Squares(s) => s.len(),
            Scene::CustomAabb(s) => s.len(),
            Scene::Grid(s) => s.len(),
            Scene::Oracle(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(source, dist_sq)` once for every neighbor of `target`.
    #[inline]
    pub fn for_each_neighbor<F: FnMut(u32, f32)>(&self, target: usize, f: F) {
        match self {
            Scene::Sphere(s) => s.for_each_neighbor(target, f),
            Scene::Squares(s) => s.for_each_neighbor(target, f),
            Scene::CustomAabb(s) => s.for_each_neighbor(target, f),
            Scene::Grid(s) => s.for_each_neighbor(target, f),
            Scene::Oracle(s) => s.for_each_neighbor(target, f),
        }
    }
}

/// A method bound to one particle set after the build phase.
#[derive(Debug, Clone)]
pub struct Engine {
    method: Method,
    scene: Scene,
    cutoff: f32,
    /// Scene index -> original index, when the particles were Morton sorted.
    permutation: Option<Vec<u32>>,
}

impl Engine {
    pub fn build(method: Method, spec: &ProblemSpec) -> Result<Self> {
        spec.validate()?;
        if spec.sort {
            let (sorted, perm) = morton_sort(&spec.positions);
            let sorted_spec = ProblemSpec {
                positions: sorted,
                sort: false,
                ..spec.clone()
            };
            Ok(Self {
                method,
                scene: Scene::build(method, &sorted_spec)?,
                cutoff: spec.cutoff,
                permutation: Some(perm),
            })
        } else {
            Ok(Self {
                method,
                scene: Scene::build(method, spec)?,
                cutoff: spec.cutoff,
                permutation: None,
            })
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn permutation(&self) -> Option<&[u32]> {
        self.permutation.as_deref()
    }

    pub fn len(&self) -> usize {
        self.scene.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scene.is_empty()
    }

    /// Runs the queries for one target, given in scene index space.
    pub fn compute_target(&self, kernel: Kernel, target: usize) -> TargetValue {
        let mut acc = TargetAccumulator::new(kernel, self.cutoff);
        self.scene
            .for_each_neighbor(target, |source, d2| acc.push(source, d2));
        acc.finish()
    }

    /// Maps per-target values in scene order back to original order.
    pub fn assemble(&self, kernel: Kernel, values: Vec<TargetValue>) -> Accumulators {
        let Some(perm) = &self.permutation else {
            return Accumulators::from_values(kernel, values);
        };
        let mut original: Vec<TargetValue> = (0..values.len()).map(|_| TargetValue::Count(0)).collect();
        for (i, v) in values.into_iter().enumerate() {
            let v = match v {
                TargetValue::List(l) => TargetValue::List(l.into_iter().map(|s| perm[s as usize]).collect()),
                other => other,
            };
            original[perm[i] as usize] = v;
        }
        Accumulators::from_values(kernel, original)
    }

    /// Single-threaded compute over all targets.
    pub fn compute(&self, kernel: Kernel) -> Accumulators {
        let values = (0..self.len())
            .map(|t| self.compute_target(kernel, t))
            .collect();
        self.assemble(kernel, values)
    }
}
