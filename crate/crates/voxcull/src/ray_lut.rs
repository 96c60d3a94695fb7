//! Precomputed ray masks: a six-dimensional lookup table keyed by the
//! discretized entry/exit cells of a segment inside a box.
//!
//! Keys live on an `R_ray`-per-axis grid over the unit cube; each entry is an
//! `R^3`-bit occupancy mask covering every cell that any segment between the
//! two key cells can pass through. Entries are built by sweeping the begin
//! key cell toward the end key cell, because the swept volume contains every
//! such segment.

use std::io::{self, Read, Write};

use rayon::prelude::*;

use crate::geometry::{Aabb, Vec3};
use crate::mask::{GridFrame, MaskResolution, OccupancyMask};

const LUT_MAGIC: &[u8; 8] = b"VXRAYLUT";
const LUT_VERSION: u32 = 1;

/// Key-grid resolution. Only `R` and `2R` are supported; coarser or
/// misaligned key grids overlap several mask cells and lose tightness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RayLutResolution(u32);

impl RayLutResolution {
    pub fn new(
        res: MaskResolution,
        ray_res: u32,
    ) -> Result<RayLutResolution, InvalidRayResolution> {
        if ray_res == res.get() || ray_res == 2 * res.get() {
            Ok(RayLutResolution(ray_res))
        } else {
            Err(InvalidRayResolution {
                ray_res,
                res: res.get(),
            })
        }
    }

    /// `factor` is 1 or 2 (the CLI's `1x` / `2x`).
    pub fn of_factor(
        res: MaskResolution,
        factor: u32,
    ) -> Result<RayLutResolution, InvalidRayResolution> {
        RayLutResolution::new(res, res.get() * factor)
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }
}

#[derive(Debug, thiserror::Error)]
#[error("ray LUT resolution {ray_res} invalid for mask resolution {res} (expected {res} or {})", 2 * res)]
pub struct InvalidRayResolution {
    pub ray_res: u32,
    pub res: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum LutIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic: not a ray LUT dump")]
    BadMagic,
    #[error("unsupported ray LUT version {0}")]
    BadVersion(u32),
    #[error("corrupt ray LUT header: {0}")]
    BadHeader(String),
}

/// The `R_ray^6`-entry table. Entries are stored contiguously as packed
/// little-endian words, `ceil(R^3/64)` words each, in the fixed linear order
/// `beg.x + R_ray*(beg.y + R_ray*(beg.z + R_ray*(end.x + R_ray*(end.y + R_ray*end.z))))`.
pub struct RayMaskLut {
    res: MaskResolution,
    ray_res: RayLutResolution,
    stride: usize,
    words: Vec<u64>,
}

impl RayMaskLut {
    /// Precompute all entries. The table is symmetric in (beg, end), so only
    /// half the entries are swept; the rest are mirrored.
    pub fn build(res: MaskResolution, ray_res: RayLutResolution) -> RayMaskLut {
        let rr = ray_res.get() as usize;
        let n_keys = rr * rr * rr;
        let stride = res.word_count();
        let mut words = vec![0u64; n_keys * n_keys * stride];

        words
            .par_chunks_mut(n_keys * stride)
            .enumerate()
            .for_each(|(end_lin, row)| {
                let end = decode_key(end_lin, rr);
                for beg_lin in 0..=end_lin {
                    let beg = decode_key(beg_lin, rr);
                    let mask = sweep_entry(res, ray_res, beg, end);
                    row[beg_lin * stride..(beg_lin + 1) * stride]
                        .copy_from_slice(&mask.words()[..stride]);
                }
            });

        // Mirror entry(beg, end) -> entry(end, beg).
        for end_lin in 0..n_keys {
            for beg_lin in end_lin + 1..n_keys {
                let src = (end_lin + n_keys * beg_lin) * stride;
                let dst = (beg_lin + n_keys * end_lin) * stride;
                words.copy_within(src..src + stride, dst);
            }
        }

        RayMaskLut {
            res,
            ray_res,
            stride,
            words,
        }
    }

    #[inline]
    pub fn res(&self) -> MaskResolution {
        self.res
    }

    #[inline]
    pub fn ray_res(&self) -> RayLutResolution {
        self.ray_res
    }

    #[inline]
    pub fn entry_count(&self) -> usize {
        let rr = self.ray_res.get() as usize;
        rr.pow(6)
    }

    /// Linear entry index for a (beg, end) key-cell pair.
    #[inline]
    pub fn key_index(&self, beg: [u32; 3], end: [u32; 3]) -> usize {
        let rr = self.ray_res.get() as usize;
        let b = beg[0] as usize + rr * (beg[1] as usize + rr * beg[2] as usize);
        let e = end[0] as usize + rr * (end[1] as usize + rr * end[2] as usize);
        b + rr * rr * rr * e
    }

    /// Entry index for a segment inside `b`, using the same scaled-floor
    /// snapping as the grid walk.
    #[inline]
    pub fn lookup_index(&self, b: &Aabb, p0: Vec3, p1: Vec3) -> usize {
        let frame = GridFrame::with_res(*b, self.ray_res.get());
        self.key_index(frame.cell_of(p0), frame.cell_of(p1))
    }

    #[inline]
    pub fn entry_words(&self, index: usize) -> &[u64] {
        &self.words[index * self.stride..(index + 1) * self.stride]
    }

    /// Conservative ray mask for the segment `p0 -> p1` inside `b`.
    #[inline]
    pub fn lookup(&self, b: &Aabb, p0: Vec3, p1: Vec3) -> OccupancyMask {
        OccupancyMask::from_words(self.entry_words(self.lookup_index(b, p0, p1)))
    }

    /// `R_ray^6 * ceil(R^3/64) * 8`.
    pub fn memory_bytes(&self) -> usize {
        self.words.len() * 8
    }

    /// Binary dump: magic, version, R, R_ray, then entries in linear order as
    /// little-endian words. A reload is bit-identical to a rebuild.
    pub fn save<W: Write>(&self, w: &mut W) -> Result<(), LutIoError> {
        w.write_all(LUT_MAGIC)?;
        w.write_all(&LUT_VERSION.to_le_bytes())?;
        w.write_all(&self.res.get().to_le_bytes())?;
        w.write_all(&self.ray_res.get().to_le_bytes())?;
        for word in &self.words {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load<R: Read>(r: &mut R) -> Result<RayMaskLut, LutIoError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != LUT_MAGIC {
            return Err(LutIoError::BadMagic);
        }
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        let version = u32::from_le_bytes(buf);
        if version != LUT_VERSION {
            return Err(LutIoError::BadVersion(version));
        }
        r.read_exact(&mut buf)?;
        let res = MaskResolution::new(u32::from_le_bytes(buf))
            .map_err(|e| LutIoError::BadHeader(e.to_string()))?;
        r.read_exact(&mut buf)?;
        let ray_res = RayLutResolution::new(res, u32::from_le_bytes(buf))
            .map_err(|e| LutIoError::BadHeader(e.to_string()))?;

        let rr = ray_res.get() as usize;
        let stride = res.word_count();
        let n_words = rr.pow(6) * stride;
        let mut words = vec![0u64; n_words];
        let mut wbuf = [0u8; 8];
        for word in words.iter_mut() {
            r.read_exact(&mut wbuf)?;
            *word = u64::from_le_bytes(wbuf);
        }
        Ok(RayMaskLut {
            res,
            ray_res,
            stride,
            words,
        })
    }
}

#[inline]
fn decode_key(lin: usize, rr: usize) -> [u32; 3] {
    [
        (lin % rr) as u32,
        ((lin / rr) % rr) as u32,
        (lin / (rr * rr)) as u32,
    ]
}

/// One LUT entry: sweep the begin key cell toward the end key cell over the
/// unit cube and mark every mask cell the swept volume overlaps.
///
/// Key cells are half-open on their upper faces (endpoints snapped by floor
/// never land there) except at the grid boundary, where the clamp makes the
/// last cell closed. Mask cells are closed. This keeps a zero-length sweep
/// that exactly fills a mask cell from spilling into the neighbor it merely
/// touches, while staying conservative for every snappable segment.
///
/// The upper face counts as closed when either key cell sits at the grid
/// boundary: the clamped cell's closure must travel with the sweep in both
/// directions, otherwise endpoints snapped onto the boundary escape the
/// entry and the (beg, end) symmetry breaks.
fn sweep_entry(
    res: MaskResolution,
    ray_res: RayLutResolution,
    beg: [u32; 3],
    end: [u32; 3],
) -> OccupancyMask {
    let rr = ray_res.get();
    let inv_rr = 1.0 / rr as f64;
    let r = res.get();
    let inv_r = 1.0 / r as f64;

    let mut a_lo = [0.0f64; 3];
    let mut a_hi = [0.0f64; 3];
    let mut hi_closed = [false; 3];
    let mut d = [0.0f64; 3];
    for axis in 0..3 {
        a_lo[axis] = beg[axis] as f64 * inv_rr;
        a_hi[axis] = (beg[axis] + 1) as f64 * inv_rr;
        hi_closed[axis] = beg[axis] == rr - 1 || end[axis] == rr - 1;
        d[axis] = (end[axis] as f64 - beg[axis] as f64) * inv_rr;
    }

    // Candidate mask cells: those near the AABB of the swept volume.
    let mut c_lo = [0u32; 3];
    let mut c_hi = [0u32; 3];
    for axis in 0..3 {
        let lo = a_lo[axis].min(a_lo[axis] + d[axis]) - 1e-9;
        let hi = a_hi[axis].max(a_hi[axis] + d[axis]) + 1e-9;
        c_lo[axis] = ((lo * r as f64).floor() as i64).clamp(0, r as i64 - 1) as u32;
        c_hi[axis] = ((hi * r as f64).floor() as i64).clamp(0, r as i64 - 1) as u32;
    }

    let mut mask = OccupancyMask::ZERO;
    for z in c_lo[2]..=c_hi[2] {
        for y in c_lo[1]..=c_hi[1] {
            for x in c_lo[0]..=c_hi[0] {
                let cell = [x, y, z];
                let mut s_lo = [0.0f64; 3];
                let mut s_hi = [0.0f64; 3];
                let mut s_hi_closed = [false; 3];
                for axis in 0..3 {
                    s_lo[axis] = cell[axis] as f64 * inv_r;
                    s_hi[axis] = (cell[axis] + 1) as f64 * inv_r;
                    s_hi_closed[axis] = cell[axis] == r - 1;
                }
                if half_open_sweep_overlap(&a_lo, &a_hi, &hi_closed, &d, &s_lo, &s_hi, &s_hi_closed)
                {
                    mask.set_cell(res, cell);
                }
            }
        }
    }
    mask
}

/// Sweep overlap where both boxes are half-open on their upper faces
/// (`hi_closed` / `s_hi_closed` reopen them at the respective grid
/// boundaries). This matches floor snapping exactly: a segment point on a
/// shared plane belongs to the upper cell on both grids, so touching
/// contacts across that plane are not overlaps.
fn half_open_sweep_overlap(
    m_lo: &[f64; 3],
    m_hi: &[f64; 3],
    hi_closed: &[bool; 3],
    d: &[f64; 3],
    s_lo: &[f64; 3],
    s_hi: &[f64; 3],
    s_hi_closed: &[bool; 3],
) -> bool {
    // Running t-interval with per-end openness. Tightening an end to an
    // equal value keeps it open if either bound is open.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut lo_open = false;
    let mut hi_open = false;

    fn tighten_lower(lo: &mut f64, lo_open: &mut bool, v: f64, open: bool) {
        if v > *lo {
            *lo = v;
            *lo_open = open;
        } else if v == *lo {
            *lo_open = *lo_open || open;
        }
    }
    fn tighten_upper(hi: &mut f64, hi_open: &mut bool, v: f64, open: bool) {
        if v < *hi {
            *hi = v;
            *hi_open = open;
        } else if v == *hi {
            *hi_open = *hi_open || open;
        }
    }

    for axis in 0..3 {
        // overlap(t) <=> m_lo + t*d < s_hi  AND  m_hi + t*d > s_lo, with each
        // strict comparison relaxing to inclusive when that upper face is
        // closed at its grid boundary.
        let open_a = !s_hi_closed[axis];
        let open_b = !hi_closed[axis];
        if d[axis] == 0.0 {
            let ok_a = if open_a {
                m_lo[axis] < s_hi[axis]
            } else {
                m_lo[axis] <= s_hi[axis]
            };
            let ok_b = if open_b {
                s_lo[axis] < m_hi[axis]
            } else {
                s_lo[axis] <= m_hi[axis]
            };
            if !ok_a || !ok_b {
                return false;
            }
            continue;
        }
        let t_a = (s_hi[axis] - m_lo[axis]) / d[axis];
        let t_b = (s_lo[axis] - m_hi[axis]) / d[axis];
        if d[axis] > 0.0 {
            // t < t_a, t > t_b
            tighten_upper(&mut hi, &mut hi_open, t_a, open_a);
            tighten_lower(&mut lo, &mut lo_open, t_b, open_b);
        } else {
            // t > t_a, t < t_b
            tighten_lower(&mut lo, &mut lo_open, t_a, open_a);
            tighten_upper(&mut hi, &mut hi_open, t_b, open_b);
        }
        if lo > hi || (lo == hi && (lo_open || hi_open)) {
            return false;
        }
    }
    true
}
