//! Stack-based 4-wide BVH traversal with optional occupancy-mask culling.
//!
//! Each popped inner node tests its four child boxes as one counted batch;
//! children that survive the box test (and, when culling is on, the
//! object-mask x ray-mask test computed from that box test's entry/exit
//! points) are pushed nearest-first. Counters follow the four-box-batch /
//! single-triangle measurement unit.

use crate::bvh::{Bvh, ChildRef, BVH_WIDTH};
use crate::compress::RayObjectBitTable;
use crate::geometry::{intersect_ray_aabb, intersect_ray_triangle, Aabb, Ray, Vec3};
use crate::mask::{dda_ray_cells, mask_and_nonzero, mask_and_words_nonzero, GridFrame};
use crate::ray_lut::RayMaskLut;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CullingMode {
    Off,
    IdealDda,
    RayMaskLut,
    CompressedBitTable,
}

impl CullingMode {
    /// Stable name used by the CLI and CSV reports.
    pub fn name(self) -> &'static str {
        match self {
            CullingMode::Off => "off",
            CullingMode::IdealDda => "ideal",
            CullingMode::RayMaskLut => "lut",
            CullingMode::CompressedBitTable => "compressed",
        }
    }
}

/// Culling context carrying exactly the artifacts its mode needs.
#[derive(Clone, Copy)]
pub enum Culling<'a> {
    Off,
    IdealDda,
    RayMaskLut(&'a RayMaskLut),
    Compressed {
        ray_lut: &'a RayMaskLut,
        indices: &'a [[u8; BVH_WIDTH]],
        bit_table: &'a RayObjectBitTable,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CullingSetupError {
    #[error("culling mode {0} requires object masks attached to the BVH")]
    MasksMissing(&'static str),
    #[error("culling mode {0} requires a ray-mask LUT")]
    RayLutMissing(&'static str),
    #[error("culling mode {0} requires compression artifacts")]
    CompressionMissing(&'static str),
    #[error("ray-mask LUT resolution {lut} does not match BVH mask resolution {bvh}")]
    ResolutionMismatch { lut: u32, bvh: u32 },
}

impl std::fmt::Debug for Culling<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Culling::{}", self.mode().name())
    }
}

impl<'a> Culling<'a> {
    /// Check mode requirements against the available artifacts.
    pub fn for_mode(
        mode: CullingMode,
        bvh: &Bvh,
        ray_lut: Option<&'a RayMaskLut>,
        compression: Option<(&'a [[u8; BVH_WIDTH]], &'a RayObjectBitTable)>,
    ) -> Result<Culling<'a>, CullingSetupError> {
        let name = mode.name();
        if mode != CullingMode::Off && !bvh.masks_attached() {
            return Err(CullingSetupError::MasksMissing(name));
        }
        let check_lut = |lut: &RayMaskLut| {
            if lut.res() != bvh.config.res {
                Err(CullingSetupError::ResolutionMismatch {
                    lut: lut.res().get(),
                    bvh: bvh.config.res.get(),
                })
            } else {
                Ok(())
            }
        };
        match mode {
            CullingMode::Off => Ok(Culling::Off),
            CullingMode::IdealDda => Ok(Culling::IdealDda),
            CullingMode::RayMaskLut => {
                let lut = ray_lut.ok_or(CullingSetupError::RayLutMissing(name))?;
                check_lut(lut)?;
                Ok(Culling::RayMaskLut(lut))
            }
            CullingMode::CompressedBitTable => {
                let lut = ray_lut.ok_or(CullingSetupError::RayLutMissing(name))?;
                check_lut(lut)?;
                let (indices, bit_table) =
                    compression.ok_or(CullingSetupError::CompressionMissing(name))?;
                if indices.len() != bvh.nodes.len() {
                    return Err(CullingSetupError::CompressionMissing(name));
                }
                Ok(Culling::Compressed {
                    ray_lut: lut,
                    indices,
                    bit_table,
                })
            }
        }
    }

    pub fn mode(&self) -> CullingMode {
        match self {
            Culling::Off => CullingMode::Off,
            Culling::IdealDda => CullingMode::IdealDda,
            Culling::RayMaskLut(_) => CullingMode::RayMaskLut,
            Culling::Compressed { .. } => CullingMode::CompressedBitTable,
        }
    }
}

/// Intersection counters in the paper-style measurement unit: one 4-wide
/// box batch or one ray-triangle test each.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub node_tests: u64,
    pub triangle_tests: u64,
}

impl TraversalStats {
    #[inline]
    pub fn units(&self) -> u64 {
        self.node_tests + self.triangle_tests
    }
}

impl std::ops::AddAssign for TraversalStats {
    fn add_assign(&mut self, o: TraversalStats) {
        self.node_tests += o.node_tests;
        self.triangle_tests += o.triangle_tests;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HitRecord {
    pub t: f64,
    pub primitive_id: u32,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum TraverseError {
    #[error("traversal stack overflow")]
    StackOverflow,
}

/// Stack entries: up to three residual children per level against the
/// depth-64 build bound.
const MAX_STACK: usize = 192;

#[derive(Clone, Copy)]
enum Entry {
    Node {
        index: u32,
        t_enter: f64,
    },
    Leaf {
        first: u32,
        count: u32,
        t_enter: f64,
    },
}

struct Stack {
    entries: [Entry; MAX_STACK],
    len: usize,
}

impl Stack {
    fn new() -> Stack {
        Stack {
            entries: [Entry::Node {
                index: 0,
                t_enter: 0.0,
            }; MAX_STACK],
            len: 0,
        }
    }

    #[inline]
    fn push(&mut self, e: Entry) -> Result<(), TraverseError> {
        if self.len >= MAX_STACK {
            return Err(TraverseError::StackOverflow);
        }
        self.entries[self.len] = e;
        self.len += 1;
        Ok(())
    }

    #[inline]
    fn pop(&mut self) -> Option<Entry> {
        if self.len == 0 {
            None
        } else {
            self.len -= 1;
            Some(self.entries[self.len])
        }
    }
}

/// Does the surviving-child test for one slot. `p0`/`p1` are the clamped
/// entry/exit points of the box test, reused as the ray-mask key.
#[inline]
fn mask_test(
    culling: &Culling,
    bvh: &Bvh,
    node_index: u32,
    slot: usize,
    child_box: &Aabb,
    p0: Vec3,
    p1: Vec3,
) -> bool {
    match culling {
        Culling::Off => true,
        Culling::IdealDda => {
            let frame = GridFrame::new(*child_box, bvh.config.res);
            let ray_mask = dda_ray_cells(&frame, p0, p1);
            mask_and_nonzero(&ray_mask, &bvh.nodes[node_index as usize].child_mask[slot])
        }
        Culling::RayMaskLut(lut) => {
            let idx = lut.lookup_index(child_box, p0, p1);
            mask_and_words_nonzero(
                &bvh.nodes[node_index as usize].child_mask[slot],
                lut.entry_words(idx),
            )
        }
        Culling::Compressed {
            ray_lut,
            indices,
            bit_table,
        } => {
            let ray_idx = ray_lut.lookup_index(child_box, p0, p1);
            let mask_idx = indices[node_index as usize][slot] as usize;
            bit_table.get(ray_idx, mask_idx)
        }
    }
}

/// Closest hit over the BVH. Conservative masks only remove subtrees that
/// cannot contain a hit on the current segment, so every mode returns the
/// same record as `Off`.
pub fn traverse(
    bvh: &Bvh,
    ray: &Ray,
    culling: &Culling,
    stats: &mut TraversalStats,
) -> Result<Option<HitRecord>, TraverseError> {
    let mut best: Option<HitRecord> = None;
    let mut t_best = ray.t_max;

    // Root box is tested (and counted) before any node pops.
    stats.node_tests += 1;
    let root_box = bvh.scene_bounds();
    if intersect_ray_aabb(ray, &root_box).is_none() {
        return Ok(None);
    }

    let mut stack = Stack::new();
    stack.push(Entry::Node {
        index: bvh.root(),
        t_enter: ray.t_min,
    })?;

    while let Some(entry) = stack.pop() {
        match entry {
            Entry::Leaf {
                first,
                count,
                t_enter,
            } => {
                if t_enter > t_best {
                    continue;
                }
                for i in first..first + count {
                    stats.triangle_tests += 1;
                    let tri = &bvh.triangles[i as usize];
                    let clipped = Ray {
                        t_max: t_best,
                        ..*ray
                    };
                    if let Some(hit) = intersect_ray_triangle(&clipped, tri) {
                        if hit.t < t_best || best.is_none() {
                            t_best = hit.t;
                            best = Some(HitRecord {
                                t: hit.t,
                                primitive_id: tri.primitive_id,
                                u: hit.u,
                                v: hit.v,
                            });
                        }
                    }
                }
            }
            Entry::Node { index, t_enter } => {
                if t_enter > t_best {
                    continue;
                }
                stats.node_tests += 1;
                let node = &bvh.nodes[index as usize];
                let clipped = Ray {
                    t_max: t_best,
                    ..*ray
                };

                let mut hits: [(f64, usize); BVH_WIDTH] = [(0.0, 0); BVH_WIDTH];
                let mut n_hits = 0;
                for slot in 0..BVH_WIDTH {
                    if matches!(node.child[slot], ChildRef::Empty) {
                        continue;
                    }
                    let child_box = node.child_aabb[slot].to_aabb();
                    let Some((te, _tx, p0, p1)) = intersect_ray_aabb(&clipped, &child_box) else {
                        continue;
                    };
                    if !mask_test(culling, bvh, index, slot, &child_box, p0, p1) {
                        continue;
                    }
                    hits[n_hits] = (te, slot);
                    n_hits += 1;
                }
                // Nearest first, ties by slot. Push in reverse so the nearest
                // child is popped first.
                hits[..n_hits].sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                for &(te, slot) in hits[..n_hits].iter().rev() {
                    match node.child[slot] {
                        ChildRef::Inner(c) => stack.push(Entry::Node {
                            index: c,
                            t_enter: te,
                        })?,
                        ChildRef::Leaf { first, count } => stack.push(Entry::Leaf {
                            first,
                            count,
                            t_enter: te,
                        })?,
                        ChildRef::Empty => unreachable!(),
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Any-hit query: true as soon as one triangle intersects the segment. Equals
/// `traverse(..).is_some()` for every ray; may do less work.
pub fn traverse_any(
    bvh: &Bvh,
    ray: &Ray,
    culling: &Culling,
    stats: &mut TraversalStats,
) -> Result<bool, TraverseError> {
    stats.node_tests += 1;
    let root_box = bvh.scene_bounds();
    if intersect_ray_aabb(ray, &root_box).is_none() {
        return Ok(false);
    }

    let mut stack = Stack::new();
    stack.push(Entry::Node {
        index: bvh.root(),
        t_enter: ray.t_min,
    })?;

    while let Some(entry) = stack.pop() {
        match entry {
            Entry::Leaf { first, count, .. } => {
                for i in first..first + count {
                    stats.triangle_tests += 1;
                    if intersect_ray_triangle(ray, &bvh.triangles[i as usize]).is_some() {
                        return Ok(true);
                    }
                }
            }
            Entry::Node { index, .. } => {
                stats.node_tests += 1;
                let node = &bvh.nodes[index as usize];
                let mut hits: [(f64, usize); BVH_WIDTH] = [(0.0, 0); BVH_WIDTH];
                let mut n_hits = 0;
                for slot in 0..BVH_WIDTH {
                    if matches!(node.child[slot], ChildRef::Empty) {
                        continue;
                    }
                    let child_box = node.child_aabb[slot].to_aabb();
                    let Some((te, _tx, p0, p1)) = intersect_ray_aabb(ray, &child_box) else {
                        continue;
                    };
                    if !mask_test(culling, bvh, index, slot, &child_box, p0, p1) {
                        continue;
                    }
                    hits[n_hits] = (te, slot);
                    n_hits += 1;
                }
                hits[..n_hits].sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                for &(te, slot) in hits[..n_hits].iter().rev() {
                    let _ = te;
                    match node.child[slot] {
                        ChildRef::Inner(c) => stack.push(Entry::Node {
                            index: c,
                            t_enter: 0.0,
                        })?,
                        ChildRef::Leaf { first, count } => stack.push(Entry::Leaf {
                            first,
                            count,
                            t_enter: 0.0,
                        })?,
                        ChildRef::Empty => unreachable!(),
                    }
                }
            }
        }
    }
    Ok(false)
}
