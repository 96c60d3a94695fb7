//! Scalar/vector primitives and the ray/box/triangle tests everything else
//! builds on.

use std::ops::{Add, Div, Index, Mul, Neg, Sub};

/// Three-component f64 vector. Scene-facing values must stay finite.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub const fn splat(v: f64) -> Self {
        Vec3::new(v, v, v)
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn length(self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn normalized(self) -> Vec3 {
        self / self.length()
    }

    #[inline]
    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    #[inline]
    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    #[inline]
    pub fn clamp(self, lo: Vec3, hi: Vec3) -> Vec3 {
        self.max(lo).min(hi)
    }

    #[inline]
    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    /// Largest component value.
    #[inline]
    pub fn max_component(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Vec3 {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis out of range: {i}"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Parametric ray segment over `[t_min, t_max]`. Direction need not be unit
/// length but must not be the zero vector.
#[derive(Clone, Copy, Debug)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    #[inline]
    pub fn new(origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Ray {
        debug_assert!(t_min <= t_max);
        debug_assert!(dir != Vec3::ZERO);
        Ray {
            origin,
            dir,
            t_min,
            t_max,
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// Axis-aligned box, `lower <= upper` componentwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub lower: Vec3,
    pub upper: Vec3,
}

impl Aabb {
    /// Empty box: union identity.
    pub const EMPTY: Aabb = Aabb {
        lower: Vec3::splat(f64::INFINITY),
        upper: Vec3::splat(f64::NEG_INFINITY),
    };

    #[inline]
    pub fn new(lower: Vec3, upper: Vec3) -> Aabb {
        Aabb { lower, upper }
    }

    #[inline]
    pub fn from_points(points: &[Vec3]) -> Aabb {
        let mut b = Aabb::EMPTY;
        for &p in points {
            b = b.include(p);
        }
        b
    }

    #[inline]
    pub fn include(self, p: Vec3) -> Aabb {
        Aabb::new(self.lower.min(p), self.upper.max(p))
    }

    #[inline]
    pub fn union(self, o: Aabb) -> Aabb {
        Aabb::new(self.lower.min(o.lower), self.upper.max(o.upper))
    }

    #[inline]
    pub fn extent(self) -> Vec3 {
        self.upper - self.lower
    }

    #[inline]
    pub fn center(self) -> Vec3 {
        (self.lower + self.upper) * 0.5
    }

    #[inline]
    pub fn is_valid(self) -> bool {
        self.lower.x <= self.upper.x && self.lower.y <= self.upper.y && self.lower.z <= self.upper.z
    }

    /// Closed-set overlap: touching faces count.
    #[inline]
    pub fn overlaps(self, o: Aabb) -> bool {
        self.lower.x <= o.upper.x
            && o.lower.x <= self.upper.x
            && self.lower.y <= o.upper.y
            && o.lower.y <= self.upper.y
            && self.lower.z <= o.upper.z
            && o.lower.z <= self.upper.z
    }

    #[inline]
    pub fn contains(self, p: Vec3) -> bool {
        p.x >= self.lower.x
            && p.x <= self.upper.x
            && p.y >= self.lower.y
            && p.y <= self.upper.y
            && p.z >= self.lower.z
            && p.z <= self.upper.z
    }

    #[inline]
    pub fn dilated(self, eps: Vec3) -> Aabb {
        Aabb::new(self.lower - eps, self.upper + eps)
    }

    /// Full surface area `2(wh + wd + hd)`.
    #[inline]
    pub fn surface_area(self) -> f64 {
        let e = self.extent();
        2.0 * (e.x * e.y + e.x * e.z + e.y * e.z)
    }
}

/// Triangle with a stable scene-wide primitive id.
#[derive(Clone, Copy, Debug)]
pub struct Triangle {
    pub v0: Vec3,
    pub v1: Vec3,
    pub v2: Vec3,
    pub primitive_id: u32,
}

impl Triangle {
    #[inline]
    pub fn new(v0: Vec3, v1: Vec3, v2: Vec3, primitive_id: u32) -> Triangle {
        Triangle {
            v0,
            v1,
            v2,
            primitive_id,
        }
    }

    #[inline]
    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(&[self.v0, self.v1, self.v2])
    }

    #[inline]
    pub fn centroid(&self) -> Vec3 {
        (self.v0 + self.v1 + self.v2) / 3.0
    }

    /// Unnormalized geometric normal.
    #[inline]
    pub fn normal(&self) -> Vec3 {
        (self.v1 - self.v0).cross(self.v2 - self.v0)
    }
}

/// Ray/box slab test. Returns clamped entry/exit parameters together with the
/// entry/exit points, both clamped componentwise into the box so downstream
/// grid index math cannot leave the cell range.
///
/// When the origin is inside the box the entry parameter is `ray.t_min` and
/// the entry point is the origin. Slab ordering uses f64 min/max, which drop
/// NaN operands, so rays lying in the plane of a degenerate box axis resolve
/// conservatively.
#[inline]
pub fn intersect_ray_aabb(ray: &Ray, b: &Aabb) -> Option<(f64, f64, Vec3, Vec3)> {
    let mut t_enter = ray.t_min;
    let mut t_exit = ray.t_max;
    for axis in 0..3 {
        let inv = 1.0 / ray.dir[axis];
        let t0 = (b.lower[axis] - ray.origin[axis]) * inv;
        let t1 = (b.upper[axis] - ray.origin[axis]) * inv;
        // 0 * inf = NaN happens only when the origin sits exactly on a slab
        // plane with a parallel direction; the ray then grazes the slab and
        // the axis imposes no constraint (conservative).
        if t0.is_nan() || t1.is_nan() {
            continue;
        }
        t_enter = t_enter.max(t0.min(t1));
        t_exit = t_exit.min(t0.max(t1));
    }
    if t_enter > t_exit {
        return None;
    }
    let p0 = ray.at(t_enter).clamp(b.lower, b.upper);
    let p1 = ray.at(t_exit).clamp(b.lower, b.upper);
    Some((t_enter, t_exit, p0, p1))
}

/// Hit parameter plus barycentric coordinates `(u, v)` of `v1`/`v2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TriangleHit {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Moller-Trumbore ray/triangle test. Degenerate (zero-area) triangles always
/// miss; identical inputs produce bit-identical results.
#[inline]
pub fn intersect_ray_triangle(ray: &Ray, tri: &Triangle) -> Option<TriangleHit> {
    let e1 = tri.v1 - tri.v0;
    let e2 = tri.v2 - tri.v0;
    let pvec = ray.dir.cross(e2);
    let det = e1.dot(pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = ray.origin - tri.v0;
    let u = tvec.dot(pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(e1);
    let v = ray.dir.dot(qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(qvec) * inv_det;
    if t < ray.t_min || t > ray.t_max || !t.is_finite() {
        return None;
    }
    Some(TriangleHit { t, u, v })
}

/// True iff `moving` translated along `displacement` over `t in [0, 1]` ever
/// overlaps `static_box`. Closed-set semantics: touching counts, so the test
/// is conservative. Implemented as per-axis interval overlap of the relative
/// motion.
pub fn sweep_box_overlap(moving: &Aabb, displacement: Vec3, static_box: &Aabb) -> bool {
    let mut t_enter: f64 = 0.0;
    let mut t_exit: f64 = 1.0;
    for axis in 0..3 {
        let m0 = moving.lower[axis];
        let m1 = moving.upper[axis];
        let s0 = static_box.lower[axis];
        let s1 = static_box.upper[axis];
        let d = displacement[axis];
        if d == 0.0 {
            if m0 > s1 || s0 > m1 {
                return false;
            }
            continue;
        }
        // overlap(t) <=> s0 - m1 <= t*d <= s1 - m0
        let ta = (s0 - m1) / d;
        let tb = (s1 - m0) / d;
        let (lo, hi) = if ta <= tb { (ta, tb) } else { (tb, ta) };
        t_enter = t_enter.max(lo);
        t_exit = t_exit.min(hi);
        if t_enter > t_exit {
            return false;
        }
    }
    true
}
