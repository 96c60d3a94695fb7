//! Object masks for every BVH child slot: exact voxelization at leaves,
//! approximate occupancy propagation at inner slots.
//!
//! An inner slot's mask gathers occupancy from the slots exactly `L` levels
//! below it (leaf slots closer than `L` contribute too), each projected
//! directly into the gathering slot's grid: a set cell of a frontier mask
//! maps to the box-shaped pattern spanned by the projections of its min and
//! max corners. Deeper frontiers have smaller boxes, hence smaller cells and
//! tighter patterns, so larger `L` buys tightness for build time. Every leaf
//! projects into at most `L` ancestors and every inner slot into one, which
//! keeps the cost linear in `L`. `L = infinity` skips projection entirely
//! and voxelizes all descendant triangles directly into the node's grid.

use crate::bvh::{ApproxLevel, Bvh, ChildRef, MaskProvenance, BVH_WIDTH};
use crate::geometry::Aabb;
use crate::mask::{voxelize_triangle, GridFrame, MaskResolution, OccupancyMask};

/// All `R^6` box-shaped fill patterns, indexed by the (min, max) cell index
/// pair. `pattern(i, i)` is a single bit; inverted pairs yield the zero mask.
pub struct FillingPatternTable {
    res: MaskResolution,
    patterns: Vec<OccupancyMask>,
}

impl FillingPatternTable {
    pub fn new(res: MaskResolution) -> FillingPatternTable {
        let r = res.get();
        let n = (r as usize).pow(6);
        let mut patterns = vec![OccupancyMask::ZERO; n];
        for idx in 0..n {
            let (i_min, i_max) = Self::decode(idx, r);
            let mut m = OccupancyMask::ZERO;
            if i_min[0] <= i_max[0] && i_min[1] <= i_max[1] && i_min[2] <= i_max[2] {
                for z in i_min[2]..=i_max[2] {
                    for y in i_min[1]..=i_max[1] {
                        for x in i_min[0]..=i_max[0] {
                            m.set_cell(res, [x, y, z]);
                        }
                    }
                }
            }
            patterns[idx] = m;
        }
        FillingPatternTable { res, patterns }
    }

    #[inline]
    pub fn res(&self) -> MaskResolution {
        self.res
    }

    #[inline]
    fn encode(i_min: [u32; 3], i_max: [u32; 3], r: u32) -> usize {
        let r = r as usize;
        let a = i_min[0] as usize + r * (i_min[1] as usize + r * i_min[2] as usize);
        let b = i_max[0] as usize + r * (i_max[1] as usize + r * i_max[2] as usize);
        a + r * r * r * b
    }

    #[inline]
    fn decode(idx: usize, r: u32) -> ([u32; 3], [u32; 3]) {
        let r = r as usize;
        let a = idx % (r * r * r);
        let b = idx / (r * r * r);
        (
            [(a % r) as u32, ((a / r) % r) as u32, (a / (r * r)) as u32],
            [(b % r) as u32, ((b / r) % r) as u32, (b / (r * r)) as u32],
        )
    }

    #[inline]
    pub fn pattern(&self, i_min: [u32; 3], i_max: [u32; 3]) -> &OccupancyMask {
        &self.patterns[Self::encode(i_min, i_max, self.res.get())]
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// Project a child mask into a parent grid and OR it onto `mask`. Border
/// indices are precomputed per axis and clamped to `[0, R-1]`; each set child
/// cell then ORs the box pattern spanned by its corner indices.
///
/// A min corner snaps by floor; a max corner snaps to the last cell the
/// border actually covers (`ceil - 1`), so a border sitting exactly on a
/// parent boundary does not spill into the untouched neighbor and coincident
/// grids project as the identity. Geometry genuinely touching a boundary
/// occupies both child cells after dilated voxelization, so the projection
/// stays conservative.
pub fn fill_by_approximated_occupancy(
    mask: &OccupancyMask,
    parent_box: &Aabb,
    child_mask: &OccupancyMask,
    child_box: &Aabb,
    res: MaskResolution,
    table: &FillingPatternTable,
) -> OccupancyMask {
    let r = res.get();
    let child_frame = GridFrame::new(*child_box, res);
    let parent_frame = GridFrame::new(*parent_box, res);
    let c_lo = child_frame.lower();
    let c_ext = child_frame.extent();
    let p_lo = parent_frame.lower();
    let p_ext = parent_frame.extent();

    // Border indices per axis for i in 0..=R, reused across all child cells.
    let mut snap_min = [[0u32; 9]; 3];
    let mut snap_max = [[0u32; 9]; 3];
    for axis in 0..3 {
        for i in 0..=r {
            let border = c_lo[axis] + (i as f64 / r as f64) * c_ext[axis];
            let s = (r as f64) * (border - p_lo[axis]) / p_ext[axis];
            let lo = s.floor() as i64;
            let hi = s.ceil() as i64 - 1;
            snap_min[axis][i as usize] = lo.clamp(0, r as i64 - 1) as u32;
            snap_max[axis][i as usize] = hi.clamp(0, r as i64 - 1) as u32;
        }
    }

    let mut out = *mask;
    for z in 0..r {
        for y in 0..r {
            for x in 0..r {
                if !child_mask.get_cell(res, [x, y, z]) {
                    continue;
                }
                let i_min = [
                    snap_min[0][x as usize],
                    snap_min[1][y as usize],
                    snap_min[2][z as usize],
                ];
                let i_max = [
                    snap_max[0][x as usize + 1].max(i_min[0]),
                    snap_max[1][y as usize + 1].max(i_min[1]),
                    snap_max[2][z as usize + 1].max(i_min[2]),
                ];
                out.or_assign(table.pattern(i_min, i_max));
            }
        }
    }
    out
}

/// Attach object masks to every child slot. Leaf slots get exact
/// voxelizations of their triangles into their own grid; inner slots get the
/// level-controlled approximation (or direct voxelization for
/// `ApproxLevel::Infinite`). Empty slots keep the zero mask.
pub fn attach_masks(bvh: &mut Bvh, level: ApproxLevel, table: &FillingPatternTable) {
    let res = bvh.config.res;
    debug_assert_eq!(table.res(), res);
    match level {
        ApproxLevel::Infinite => {
            attach_exact(bvh, bvh.root(), res);
        }
        ApproxLevel::Finite(l) => {
            let l = l.max(1) as usize;
            attach_approx(bvh, bvh.root(), res, l, table);
        }
    }
    bvh.config.level = level;
    bvh.masks_attached = true;
}

/// Voxelize all descendant triangles of every slot directly. Returns the
/// node's contiguous triangle range (subtrees are contiguous by DFS order).
fn attach_exact(bvh: &mut Bvh, node_idx: u32, res: MaskResolution) -> (u32, u32) {
    let mut lo = u32::MAX;
    let mut hi = 0u32;
    for slot in 0..BVH_WIDTH {
        let child = bvh.nodes[node_idx as usize].child[slot];
        let slot_box = bvh.nodes[node_idx as usize].child_aabb[slot];
        let (first, end) = match child {
            ChildRef::Empty => continue,
            ChildRef::Leaf { first, count } => (first, first + count),
            ChildRef::Inner(c) => {
                let (a, b) = attach_exact(bvh, c, res);
                (a, b)
            }
        };
        let frame = GridFrame::new(slot_box.to_aabb(), res);
        let mut m = OccupancyMask::ZERO;
        for t in first..end {
            let tri = bvh.triangles[t as usize];
            m.or_assign(&voxelize_triangle(&frame, &tri));
        }
        let node = &mut bvh.nodes[node_idx as usize];
        node.child_mask[slot] = m;
        node.provenance[slot] = MaskProvenance::Exact;
        lo = lo.min(first);
        hi = hi.max(end);
    }
    (lo, hi)
}

/// Post-order attachment for finite `L`. Leaf slots voxelize exactly and
/// project that mask into every ancestor slot within `L` hops; an inner slot,
/// once its own accumulation is complete, projects it into the ancestor
/// exactly `L` hops above. Each gathering slot therefore sees the masks of
/// its depth-`L` frontier (plus any closer leaves), one direct projection
/// each.
fn attach_approx(
    bvh: &mut Bvh,
    root: u32,
    res: MaskResolution,
    l: usize,
    table: &FillingPatternTable,
) {
    let mut acc: Vec<[OccupancyMask; BVH_WIDTH]> =
        vec![[OccupancyMask::ZERO; BVH_WIDTH]; bvh.nodes.len()];
    let mut ancestors: Vec<(u32, usize, Aabb)> = Vec::new();
    dfs_attach(bvh, root, res, l, table, &mut ancestors, &mut acc);
}

fn contribute(
    acc: &mut [[OccupancyMask; BVH_WIDTH]],
    ancestors: &[(u32, usize, Aabb)],
    targets: impl Iterator<Item = usize>,
    mask: &OccupancyMask,
    mask_box: &Aabb,
    res: MaskResolution,
    table: &FillingPatternTable,
) {
    for idx in targets {
        let (a_node, a_slot, a_box) = &ancestors[idx];
        let current = acc[*a_node as usize][*a_slot];
        acc[*a_node as usize][*a_slot] =
            fill_by_approximated_occupancy(&current, a_box, mask, mask_box, res, table);
    }
}

fn dfs_attach(
    bvh: &mut Bvh,
    node_idx: u32,
    res: MaskResolution,
    l: usize,
    table: &FillingPatternTable,
    ancestors: &mut Vec<(u32, usize, Aabb)>,
    acc: &mut Vec<[OccupancyMask; BVH_WIDTH]>,
) {
    for slot in 0..BVH_WIDTH {
        let child = bvh.nodes[node_idx as usize].child[slot];
        let slot_box = bvh.nodes[node_idx as usize].child_aabb[slot].to_aabb();
        match child {
            ChildRef::Empty => {}
            ChildRef::Leaf { first, count } => {
                let frame = GridFrame::new(slot_box, res);
                let mut m = OccupancyMask::ZERO;
                for t in first..first + count {
                    let tri = bvh.triangles[t as usize];
                    m.or_assign(&voxelize_triangle(&frame, &tri));
                }
                let node = &mut bvh.nodes[node_idx as usize];
                node.child_mask[slot] = m;
                node.provenance[slot] = MaskProvenance::Exact;
                // A leaf is its own frontier for every ancestor within L hops.
                let lo = ancestors.len().saturating_sub(l);
                contribute(
                    acc,
                    ancestors,
                    lo..ancestors.len(),
                    &m,
                    &slot_box,
                    res,
                    table,
                );
            }
            ChildRef::Inner(c) => {
                ancestors.push((node_idx, slot, slot_box));
                dfs_attach(bvh, c, res, l, table, ancestors, acc);
                ancestors.pop();

                let m = acc[node_idx as usize][slot];
                debug_assert!(!m.is_zero(), "inner slot gathered no occupancy");
                let node = &mut bvh.nodes[node_idx as usize];
                node.child_mask[slot] = m;
                node.provenance[slot] = MaskProvenance::Approx(l as u32);
                // This slot is the depth-L frontier of exactly one ancestor.
                if ancestors.len() >= l {
                    let idx = ancestors.len() - l;
                    contribute(acc, ancestors, idx..idx + 1, &m, &slot_box, res, table);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::{build_bvh, BuildConfig};
    use crate::geometry::{Triangle, Vec3};

    fn r(n: u32) -> MaskResolution {
        MaskResolution::new(n).unwrap()
    }

    #[test]
    fn pattern_table_full_box() {
        let table = FillingPatternTable::new(r(4));
        assert_eq!(table.len(), 4096);
        assert_eq!(table.pattern([0, 0, 0], [3, 3, 3]).popcount(), 64);
    }

    #[test]
    fn pattern_table_single_cell() {
        let table = FillingPatternTable::new(r(4));
        let p = table.pattern([1, 1, 1], [1, 1, 1]);
        assert_eq!(p.popcount(), 1);
        assert!(p.get_cell(r(4), [1, 1, 1]));
    }

    #[test]
    fn pattern_table_2x2x1_box() {
        let table = FillingPatternTable::new(r(4));
        let p = table.pattern([0, 0, 0], [1, 1, 0]);
        assert_eq!(p.popcount(), 4);
        for c in [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]] {
            assert!(p.get_cell(r(4), c));
        }
    }

    #[test]
    fn fill_coincident_boxes_is_identity() {
        let table = FillingPatternTable::new(r(4));
        let b = Aabb::new(Vec3::ZERO, Vec3::splat(1.0));
        let mut child = OccupancyMask::ZERO;
        child.set_cell(r(4), [0, 2, 3]);
        child.set_cell(r(4), [3, 1, 0]);
        let mut base = OccupancyMask::ZERO;
        base.set_cell(r(4), [1, 1, 1]);
        let out = fill_by_approximated_occupancy(&base, &b, &child, &b, r(4), &table);
        let mut expected = base;
        expected.or_assign(&child);
        assert_eq!(out, expected);
    }

    #[test]
    fn fill_straddle_one_axis_sets_two_bits() {
        let table = FillingPatternTable::new(r(4));
        let parent = Aabb::new(Vec3::ZERO, Vec3::splat(1.0));
        // Child x spans [0.1, 0.6]: its cell x=1 covers [0.225, 0.35], which
        // crosses the parent boundary at 0.25.
        let child_box = Aabb::new(Vec3::new(0.1, 0.0, 0.0), Vec3::new(0.6, 0.2, 0.2));
        let mut child = OccupancyMask::ZERO;
        child.set_cell(r(4), [1, 0, 0]);
        let out = fill_by_approximated_occupancy(
            &OccupancyMask::ZERO,
            &parent,
            &child,
            &child_box,
            r(4),
            &table,
        );
        assert_eq!(out.popcount(), 2, "{out:?}");
        assert!(out.get_cell(r(4), [0, 0, 0]));
        assert!(out.get_cell(r(4), [1, 0, 0]));
    }

    #[test]
    fn fill_straddle_two_axes_sets_four_bits() {
        let table = FillingPatternTable::new(r(4));
        let parent = Aabb::new(Vec3::ZERO, Vec3::splat(1.0));
        let child_box = Aabb::new(Vec3::new(0.1, 0.1, 0.0), Vec3::new(0.6, 0.6, 0.2));
        let mut child = OccupancyMask::ZERO;
        child.set_cell(r(4), [1, 1, 0]);
        let out = fill_by_approximated_occupancy(
            &OccupancyMask::ZERO,
            &parent,
            &child,
            &child_box,
            r(4),
            &table,
        );
        assert_eq!(out.popcount(), 4, "{out:?}");
    }

    #[test]
    fn single_leaf_bvh_mask_is_exact_for_any_level() {
        let tri = Triangle::new(
            Vec3::new(0.1, 0.1, 0.1),
            Vec3::new(0.9, 0.2, 0.1),
            Vec3::new(0.3, 0.8, 0.9),
            0,
        );
        let config = BuildConfig::new(r(4));
        let table = FillingPatternTable::new(r(4));
        let mut exact = build_bvh(&[tri], config).unwrap();
        attach_masks(&mut exact, ApproxLevel::Infinite, &table);
        for level in [ApproxLevel::Finite(1), ApproxLevel::Finite(3)] {
            let mut b = build_bvh(&[tri], config).unwrap();
            attach_masks(&mut b, level, &table);
            assert_eq!(b.nodes[0].child_mask[0], exact.nodes[0].child_mask[0]);
            assert_eq!(b.nodes[0].provenance[0], MaskProvenance::Exact);
        }
    }
}
