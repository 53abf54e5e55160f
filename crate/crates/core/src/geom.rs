//! Vectors, boxes, ray segments and the ray/primitive intersection tests.
//!
//! Every test is boundary inclusive: a segment that touches a box face, a
//! sphere tangentially or a triangle edge counts as an intersection. The
//! encoding filters rely on that.
//!
//! Geometry is stored in `f32`. The sphere and triangle tests promote their
//! inputs to `f64` internally so that the same inputs always produce the same
//! answer and shared triangle edges never leak.

use core::ops::{Add, Index, Mul, Neg, Sub};

use arrayvec::ArrayVec;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f32,
    pub y: f32,
    pub z: f32,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f32, y: f32, z: f32) -> Self {
        Self { x, y, z }
    }

    pub const fn splat(v: f32) -> Self {
        Self::new(v, v, v)
    }

    pub fn unit(axis: Axis) -> Self {
        match axis {
            Axis::X => Self::new(1.0, 0.0, 0.0),
            Axis::Y => Self::new(0.0, 1.0, 0.0),
            Axis::Z => Self::new(0.0, 0.0, 1.0),
        }
    }

    pub fn dot(self, o: Vec3) -> f32 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn length_squared(self) -> f32 {
        self.dot(self)
    }

    pub fn length(self) -> f32 {
        libm::sqrtf(self.length_squared())
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f32; 3] {
        [self.x, self.y, self.z]
    }

    pub(crate) fn to_f64(self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }
}

impl From<[f32; 3]> for Vec3 {
    fn from(a: [f32; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Index<Axis> for Vec3 {
    type Output = f32;

    fn index(&self, axis: Axis) -> &f32 {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
        }
    }
}

impl Index<usize> for Vec3 {
    type Output = f32;

    fn index(&self, i: usize) -> &f32 {
        &self[Axis::ALL[i]]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f32> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f32) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Coordinate axis. The derived ordering `X < Y < Z` is the tie-break
/// priority used by the sphere filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Closed axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    /// An "inverted" box that is the identity for [`Aabb::union`].
    pub const EMPTY: Aabb = Aabb {
        min: Vec3::splat(f32::INFINITY),
        max: Vec3::splat(f32::NEG_INFINITY),
    };

    pub fn new(min: Vec3, max: Vec3) -> Self {
        debug_assert!(min.x <= max.x && min.y <= max.y && min.z <= max.z);
        Self { min, max }
    }

    pub fn around(center: Vec3, half: Vec3) -> Self {
        Self::new(center - half, center + half)
    }

    pub fn from_points(points: &[Vec3]) -> Self {
        points.iter().fold(Aabb::EMPTY, |b, &p| b.grow(p))
    }

    pub fn grow(self, p: Vec3) -> Aabb {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.min.x <= self.max.x && self.min.y <= self.max.y && self.min.z <= self.max.z
    }

    pub fn contains_point(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn contains(&self, o: &Aabb) -> bool {
        o.min.x >= self.min.x
            && o.min.y >= self.min.y
            && o.min.z >= self.min.z
            && o.max.x <= self.max.x
            && o.max.y <= self.max.y
            && o.max.z <= self.max.z
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn centroid(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

/// Ray segment `origin + t·dir` for `t ∈ [t_start, t_end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySeg {
    pub origin: Vec3,
    pub dir: Vec3,
    pub t_start: f32,
    pub t_end: f32,
}

impl RaySeg {
    pub fn new(origin: Vec3, dir: Vec3, t_start: f32, t_end: f32) -> Self {
        debug_assert!(t_start <= t_end);
        debug_assert!((dir.length() - 1.0).abs() <= 1e-6);
        Self {
            origin,
            dir,
            t_start,
            t_end,
        }
    }

    pub fn along(origin: Vec3, axis: Axis, t_start: f32, t_end: f32) -> Self {
        Self::new(origin, Vec3::unit(axis), t_start, t_end)
    }

    /// Degenerate segment standing for a point query.
    pub fn point(p: Vec3) -> Self {
        Self::along(p, Axis::X, 0.0, 0.0)
    }

    pub fn point_at(&self, t: f32) -> Vec3 {
        self.origin + self.dir * t
    }

    pub fn start(&self) -> Vec3 {
        self.point_at(self.t_start)
    }

    pub fn end(&self) -> Vec3 {
        self.point_at(self.t_end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePrim {
    pub center: Vec3,
    pub radius: f32,
    pub particle_id: u32,
}

impl SpherePrim {
    pub fn bounds(&self) -> Aabb {
        Aabb::around(self.center, Vec3::splat(self.radius))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrianglePrim {
    pub v0: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
    pub prim_idx: u32,
}

impl TrianglePrim {
    pub fn particle_id(&self) -> u32 {
        self.prim_idx / 4
    }

    pub fn vertices(&self) -> [Vec3; 3] {
        [self.v0, self.v1, self.v2]
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f32,
    pub prim_idx: u32,
    /// The ray crosses the surface from outside to inside. Sphere hits use it
    /// to tell the entry root from the exit root; single tangent hits count
    /// as entries.
    pub front_face: bool,
}

/// Slab test. Returns the closed parameter interval where `seg` is inside
/// `b`, or `None` when the per-axis intervals do not overlap.
///
/// Axes with a zero direction component reduce to a containment test of the
/// origin coordinate.
pub fn ray_aabb(seg: &RaySeg, b: &Aabb) -> Option<(f32, f32)> {
    let mut lo = seg.t_start;
    let mut hi = seg.t_end;
    for axis in Axis::ALL {
        let o = seg.origin[axis];
        let d = seg.dir[axis];
        let (bmin, bmax) = (b.min[axis], b.max[axis]);
        if d == 0.0 {
            if o < bmin || o > bmax {
                return None;
            }
            continue;
        }
        let mut t0 = (bmin - o) / d;
        let mut t1 = (bmax - o) / d;
        if t0 > t1 {
            core::mem::swap(&mut t0, &mut t1);
        }
        lo = lo.max(t0);
        hi = hi.min(t1);
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

/// Roots `(entry, exit)` of `|origin + t·dir − center|² = radius²` on the
/// infinite line, or `None` when the line misses the sphere.
///
/// The discriminant is formed from the perpendicular distance of the center
/// to the line, which avoids the cancellation of the textbook `b² − ac` form.
pub fn sphere_roots(seg: &RaySeg, center: Vec3, radius: f32) -> Option<(f64, f64)> {
    let o = seg.origin.to_f64();
    let d = seg.dir.to_f64();
    let c = center.to_f64();
    let oc = [o[0] - c[0], o[1] - c[1], o[2] - c[2]];
    let a = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
    let b = oc[0] * d[0] + oc[1] * d[1] + oc[2] * d[2];
    let k = b / a;
    let perp = [oc[0] - k * d[0], oc[1] - k * d[1], oc[2] - k * d[2]];
    let perp2 = perp[0] * perp[0] + perp[1] * perp[1] + perp[2] * perp[2];
    let r = radius as f64;
    let disc = a * (r * r - perp2);
    if disc < 0.0 {
        return None;
    }
    let s = libm::sqrt(disc);
    Some(((-b - s) / a, (-b + s) / a))
}

/// Surface hits of `seg` on a sphere, ascending in `t`. A segment lying
/// entirely inside the sphere has no surface hit; a tangent line yields a
/// single hit.
pub fn ray_sphere(seg: &RaySeg, s: &SpherePrim) -> ArrayVec<Hit, 2> {
    let mut hits = ArrayVec::new();
    let Some((t0, t1)) = sphere_roots(seg, s.center, s.radius) else {
        return hits;
    };
    let (lo, hi) = (seg.t_start as f64, seg.t_end as f64);
    let in_range = |t: f64| t >= lo && t <= hi;
    if in_range(t0) {
        hits.push(Hit {
            t: t0 as f32,
            prim_idx: s.particle_id,
            front_face: true,
        });
    }
    if t1 != t0 && in_range(t1) {
        hits.push(Hit {
            t: t1 as f32,
            prim_idx: s.particle_id,
            front_face: false,
        });
    }
    hits
}

/// Determinants below this fraction of `|e1|·|e2|` are treated as a ray
/// parallel to the triangle plane.
pub const TRIANGLE_DET_EPS: f64 = 1e-9;

/// Ray/triangle intersection over the closed triangle.
///
/// Uses the shear-and-scale formulation: vertices are moved into a frame
/// where the ray runs along +z from the origin, and the three 2D edge
/// functions decide containment. Triangles sharing an edge evaluate that edge
/// with identical operands, so no ray can slip between them.
pub fn ray_triangle(seg: &RaySeg, tri: &TrianglePrim) -> Option<Hit> {
    let d = seg.dir.to_f64();
    let kz = argmax_abs(d);
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if d[kz] < 0.0 {
        core::mem::swap(&mut kx, &mut ky);
    }
    let sx = d[kx] / d[kz];
    let sy = d[ky] / d[kz];
    let sz = 1.0 / d[kz];

    let o = seg.origin.to_f64();
    let rel = |v: Vec3| {
        let v = v.to_f64();
        [v[0] - o[0], v[1] - o[1], v[2] - o[2]]
    };
    let (a, b, c) = (rel(tri.v0), rel(tri.v1), rel(tri.v2));

    let ax = a[kx] - sx * a[kz];
    let ay = a[ky] - sy * a[kz];
    let bx = b[kx] - sx * b[kz];
    let by = b[ky] - sy * b[kz];
    let cx = c[kx] - sx * c[kz];
    let cy = c[ky] - sy * c[kz];

    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;
    if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
        return None;
    }

    let det = u + v + w;
    let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let scale = libm::sqrt(dot64(e1, e1) * dot64(e2, e2));
    if det.abs() <= TRIANGLE_DET_EPS * scale {
        return None;
    }

    let t = (u * sz * a[kz] + v * sz * b[kz] + w * sz * c[kz]) / det;
    if t < seg.t_start as f64 || t > seg.t_end as f64 {
        return None;
    }
    Some(Hit {
        t: t as f32,
        prim_idx: tri.prim_idx,
        front_face: det < 0.0,
    })
}

fn argmax_abs(d: [f64; 3]) -> usize {
    let (ax, ay, az) = (d[0].abs(), d[1].abs(), d[2].abs());
    if ax >= ay && ax >= az {
        0
    } else if ay >= az {
        1
    } else {
        2
    }
}

fn dot64(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
