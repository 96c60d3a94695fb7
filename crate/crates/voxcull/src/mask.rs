//! Binary voxel occupancy masks: the R^3-bit grid attached to a box, the
//! conservative triangle voxelizer that fills it, and the exact grid walk
//! used as the ideal culling baseline.

use std::fmt;

use crate::geometry::{Aabb, Triangle, Vec3};

/// Maximum words an occupancy mask can need (R = 8 -> 512 bits).
pub const MAX_MASK_WORDS: usize = 8;

/// Cells per axis of an occupancy grid. `R in 2..=8` so `R^3 <= 512` bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MaskResolution(u32);

impl MaskResolution {
    pub fn new(r: u32) -> Result<MaskResolution, InvalidResolution> {
        if (2..=8).contains(&r) {
            Ok(MaskResolution(r))
        } else {
            Err(InvalidResolution(r))
        }
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Total cell count `R^3`.
    #[inline]
    pub fn cell_count(self) -> usize {
        (self.0 as usize).pow(3)
    }

    /// Words needed to hold `R^3` bits.
    #[inline]
    pub fn word_count(self) -> usize {
        self.cell_count().div_ceil(64)
    }

    /// Linear bit index of cell `(x, y, z)`: `x + R*y + R^2*z`.
    #[inline]
    pub fn bit_index(self, c: [u32; 3]) -> usize {
        let r = self.0 as usize;
        c[0] as usize + r * (c[1] as usize + r * c[2] as usize)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("mask resolution {0} out of range (expected 2..=8)")]
pub struct InvalidResolution(pub u32);

/// `R^3`-bit occupancy grid packed into 64-bit words. Bits at positions
/// `>= R^3` stay zero. Cell `(x, y, z)` maps to bit `x + R*y + R^2*z`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccupancyMask {
    words: [u64; MAX_MASK_WORDS],
}

impl OccupancyMask {
    pub const ZERO: OccupancyMask = OccupancyMask {
        words: [0; MAX_MASK_WORDS],
    };

    /// Mask with every cell of an `R` grid set.
    pub fn full(res: MaskResolution) -> OccupancyMask {
        let mut m = OccupancyMask::ZERO;
        let bits = res.cell_count();
        for w in 0..res.word_count() {
            let remaining = bits - w * 64;
            m.words[w] = if remaining >= 64 {
                u64::MAX
            } else {
                (1u64 << remaining) - 1
            };
        }
        m
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize) {
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn get_bit(&self, i: usize) -> bool {
        (self.words[i >> 6] >> (i & 63)) & 1 != 0
    }

    #[inline]
    pub fn set_cell(&mut self, res: MaskResolution, c: [u32; 3]) {
        self.set_bit(res.bit_index(c));
    }

    #[inline]
    pub fn get_cell(&self, res: MaskResolution, c: [u32; 3]) -> bool {
        self.get_bit(res.bit_index(c))
    }

    #[inline]
    pub fn or_assign(&mut self, o: &OccupancyMask) {
        for w in 0..MAX_MASK_WORDS {
            self.words[w] |= o.words[w];
        }
    }

    #[inline]
    pub fn popcount(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// True iff every set bit of `self` is also set in `o`.
    #[inline]
    pub fn is_subset_of(&self, o: &OccupancyMask) -> bool {
        self.words
            .iter()
            .zip(o.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    #[inline]
    pub fn words(&self) -> &[u64; MAX_MASK_WORDS] {
        &self.words
    }

    /// Rebuild from little-endian word order; missing words are zero.
    pub fn from_words(words: &[u64]) -> OccupancyMask {
        let mut m = OccupancyMask::ZERO;
        m.words[..words.len()].copy_from_slice(words);
        m
    }

    /// Big-integer comparison of the raw bit pattern (most significant word
    /// first). Used as a deterministic tie-break when sorting masks.
    pub fn cmp_value(&self, o: &OccupancyMask) -> std::cmp::Ordering {
        for w in (0..MAX_MASK_WORDS).rev() {
            match self.words[w].cmp(&o.words[w]) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        std::cmp::Ordering::Equal
    }
}

impl fmt::Debug for OccupancyMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OccupancyMask[")?;
        for (i, w) in self.words.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{w:016x}")?;
        }
        write!(f, "]")
    }
}

/// True iff `a AND b` has any set bit.
#[inline]
pub fn mask_and_nonzero(a: &OccupancyMask, b: &OccupancyMask) -> bool {
    for w in 0..MAX_MASK_WORDS {
        if a.words[w] & b.words[w] != 0 {
            return true;
        }
    }
    false
}

/// AND of a mask against a raw word slice (e.g. a packed LUT entry).
#[inline]
pub fn mask_and_words_nonzero(a: &OccupancyMask, words: &[u64]) -> bool {
    for (w, &b) in words.iter().enumerate() {
        if a.words[w] & b != 0 {
            return true;
        }
    }
    false
}

/// A box subdivided into an `R`-per-axis uniform grid. Degenerate axes
/// (zero extent) are expanded so index math never divides by zero.
#[derive(Clone, Copy, Debug)]
pub struct GridFrame {
    lower: Vec3,
    extent: Vec3,
    res: u32,
}

impl GridFrame {
    /// `res` is the cells-per-axis count; callers pass `MaskResolution::get()`
    /// or a ray-LUT key resolution.
    pub fn with_res(b: Aabb, res: u32) -> GridFrame {
        debug_assert!(b.is_valid());
        let mut extent = b.extent();
        let max_extent = extent.max_component();
        let eps = if max_extent > 0.0 {
            1e-6 * max_extent
        } else {
            1e-6
        };
        if extent.x <= 0.0 {
            extent.x = eps;
        }
        if extent.y <= 0.0 {
            extent.y = eps;
        }
        if extent.z <= 0.0 {
            extent.z = eps;
        }
        GridFrame {
            lower: b.lower,
            extent,
            res,
        }
    }

    pub fn new(b: Aabb, res: MaskResolution) -> GridFrame {
        GridFrame::with_res(b, res.get())
    }

    #[inline]
    pub fn res(&self) -> u32 {
        self.res
    }

    #[inline]
    pub fn lower(&self) -> Vec3 {
        self.lower
    }

    #[inline]
    pub fn extent(&self) -> Vec3 {
        self.extent
    }

    /// Cell edge lengths.
    #[inline]
    pub fn cell_size(&self) -> Vec3 {
        self.extent / self.res as f64
    }

    /// Snap a point to its cell: `min(floor((R/extent)*(p - lower)), R-1)`,
    /// additionally clamped at zero against floating-point drift.
    #[inline]
    pub fn cell_of(&self, p: Vec3) -> [u32; 3] {
        let mut c = [0u32; 3];
        for axis in 0..3 {
            let scaled = (self.res as f64 / self.extent[axis]) * (p[axis] - self.lower[axis]);
            let idx = scaled.floor() as i64;
            c[axis] = idx.clamp(0, self.res as i64 - 1) as u32;
        }
        c
    }

    /// Box of cell `(x, y, z)`.
    #[inline]
    pub fn cell_box(&self, c: [u32; 3]) -> Aabb {
        let cs = self.cell_size();
        let lo = Vec3::new(
            self.lower.x + c[0] as f64 * cs.x,
            self.lower.y + c[1] as f64 * cs.y,
            self.lower.z + c[2] as f64 * cs.z,
        );
        Aabb::new(lo, lo + cs)
    }
}

/// Conservatively voxelize a triangle: every cell whose closed box intersects
/// the triangle gets its bit set. Cells are dilated by `1e-7 * cell_extent`
/// before the separating-axis test so touching contacts survive floating
/// point. A triangle entirely outside the frame yields the zero mask.
pub fn voxelize_triangle(frame: &GridFrame, tri: &Triangle) -> OccupancyMask {
    let res = frame.res();
    let mut mask = OccupancyMask::ZERO;
    let cell = frame.cell_size();
    let eps = cell * 1e-7;

    let tri_box = tri.aabb();
    if !tri_box
        .dilated(eps)
        .overlaps(Aabb::new(frame.lower(), frame.lower() + frame.extent()))
    {
        return mask;
    }
    let lo = frame.cell_of(tri_box.lower - eps);
    let hi = frame.cell_of(tri_box.upper + eps);

    let mres = MaskResolution(res);
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let cb = frame.cell_box([x, y, z]).dilated(eps);
                if tri_box_overlap(&cb, tri) {
                    mask.set_cell(mres, [x, y, z]);
                }
            }
        }
    }
    mask
}

/// Separating-axis triangle/box overlap (box normals, triangle plane, nine
/// edge cross products). Degenerate triangles fall back to their AABB, which
/// is conservative.
fn tri_box_overlap(b: &Aabb, tri: &Triangle) -> bool {
    let center = b.center();
    let half = b.extent() * 0.5;
    let v0 = tri.v0 - center;
    let v1 = tri.v1 - center;
    let v2 = tri.v2 - center;

    // Box face normals: AABB overlap of the triangle.
    for axis in 0..3 {
        let lo = v0[axis].min(v1[axis]).min(v2[axis]);
        let hi = v0[axis].max(v1[axis]).max(v2[axis]);
        if lo > half[axis] || hi < -half[axis] {
            return false;
        }
    }

    let e0 = v1 - v0;
    let e1 = v2 - v1;
    let e2 = v0 - v2;

    // Triangle plane.
    let n = e0.cross(e1);
    let d = n.dot(v0);
    let r = half.x * n.x.abs() + half.y * n.y.abs() + half.z * n.z.abs();
    if d.abs() > r {
        return false;
    }

    // Nine cross-product axes: edge x box axis.
    let axes_of = |e: Vec3| {
        [
            Vec3::new(0.0, -e.z, e.y),
            Vec3::new(e.z, 0.0, -e.x),
            Vec3::new(-e.y, e.x, 0.0),
        ]
    };
    for e in [e0, e1, e2] {
        for a in axes_of(e) {
            let p0 = a.dot(v0);
            let p1 = a.dot(v1);
            let p2 = a.dot(v2);
            let lo = p0.min(p1).min(p2);
            let hi = p0.max(p1).max(p2);
            let r = half.x * a.x.abs() + half.y * a.y.abs() + half.z * a.z.abs();
            if lo > r || hi < -r {
                return false;
            }
        }
    }
    true
}

/// Exact cells a segment passes through, endpoint cells included. Endpoint
/// snapping uses the same scaled-floor indexing as the ray-mask LUT so both
/// discretizations agree. The walk handles exact boundary ties by stepping
/// every tied axis at once, and endpoints are ordered canonically so the
/// result is identical for `(p0, p1)` and `(p1, p0)`.
pub fn dda_ray_cells(frame: &GridFrame, p0: Vec3, p1: Vec3) -> OccupancyMask {
    // Canonical endpoint order: the visited set must not depend on direction.
    let (p0, p1) = if (p1.x, p1.y, p1.z) < (p0.x, p0.y, p0.z) {
        (p1, p0)
    } else {
        (p0, p1)
    };

    let res = MaskResolution(frame.res());
    let mut mask = OccupancyMask::ZERO;
    let c0 = frame.cell_of(p0);
    let c1 = frame.cell_of(p1);
    mask.set_cell(res, c0);
    mask.set_cell(res, c1);
    if c0 == c1 {
        return mask;
    }

    let d = p1 - p0;
    let cell = frame.cell_size();
    let mut cur = c0;
    let mut step = [0i64; 3];
    let mut t_next = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for axis in 0..3 {
        if c0[axis] == c1[axis] || d[axis] == 0.0 {
            continue;
        }
        step[axis] = if d[axis] > 0.0 { 1 } else { -1 };
        let next_boundary = if d[axis] > 0.0 {
            frame.lower()[axis] + (c0[axis] as f64 + 1.0) * cell[axis]
        } else {
            frame.lower()[axis] + c0[axis] as f64 * cell[axis]
        };
        t_next[axis] = (next_boundary - p0[axis]) / d[axis];
        t_delta[axis] = (cell[axis] / d[axis]).abs();
    }

    // Each iteration advances at least one axis toward the end cell, so the
    // walk takes at most 3(R-1) steps.
    let max_steps = 3 * frame.res() as usize + 3;
    for _ in 0..max_steps {
        if cur == c1 {
            break;
        }
        let mut t_min = f64::INFINITY;
        for axis in 0..3 {
            if cur[axis] != c1[axis] && t_next[axis] < t_min {
                t_min = t_next[axis];
            }
        }
        if !t_min.is_finite() {
            break;
        }
        for axis in 0..3 {
            if cur[axis] != c1[axis] && t_next[axis] == t_min {
                cur[axis] = (cur[axis] as i64 + step[axis]) as u32;
                t_next[axis] += t_delta[axis];
            }
        }
        mask.set_cell(res, cur);
    }
    mask
}
