//! 4-wide BVH: binned-SAH binary construction collapsed to branching factor
//! four, per-child-slot occupancy masks, SAH cost evaluation, and the binary
//! node dump.

use crate::compress::CompressionLut;
use crate::geometry::{Aabb, Triangle, Vec3};
use crate::mask::{MaskResolution, OccupancyMask};

pub const BVH_WIDTH: usize = 4;

const DUMP_MAGIC: &[u8; 8] = b"VXCLBVH1";
const DUMP_VERSION: u32 = 1;
/// magic + version + R + node count + layout flag.
pub const NODE_DUMP_HEADER_BYTES: usize = 8 + 4 + 4 + 4 + 4;

/// How many levels below a node contribute occupancy before hop-by-hop
/// projection. `Infinite` voxelizes all descendant triangles directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproxLevel {
    Finite(u32),
    Infinite,
}

impl std::fmt::Display for ApproxLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ApproxLevel::Finite(l) => write!(f, "{l}"),
            ApproxLevel::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BuildConfig {
    pub res: MaskResolution,
    /// SAH centroid bins along the split axis.
    pub bins: usize,
    pub max_leaf_tris: usize,
    /// Inner-node intersection cost (C_T in the SAH).
    pub traversal_cost: f64,
    /// Per-primitive intersection cost (C_I).
    pub intersection_cost: f64,
    pub level: ApproxLevel,
}

impl BuildConfig {
    pub fn new(res: MaskResolution) -> BuildConfig {
        BuildConfig {
            res,
            bins: 16,
            max_leaf_tris: 4,
            traversal_cost: 1.0,
            intersection_cost: 1.0,
            level: ApproxLevel::Finite(3),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("empty scene")]
    EmptyScene,
    #[error("build configuration invalid: {0}")]
    BadConfig(String),
}

#[derive(Debug, thiserror::Error)]
pub enum SerializeError {
    #[error("compressed layout requires a compression LUT and per-node indices")]
    MissingCompression,
    #[error("node ref out of encodable range: {0}")]
    RefOutOfRange(String),
}

/// Child bounds stored at f32, rounded outward from the f64 build bounds so
/// containment stays conservative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb32 {
    pub lower: [f32; 3],
    pub upper: [f32; 3],
}

impl Aabb32 {
    pub const EMPTY: Aabb32 = Aabb32 {
        lower: [f32::INFINITY; 3],
        upper: [f32::NEG_INFINITY; 3],
    };

    pub fn from_f64_outward(b: &Aabb) -> Aabb32 {
        Aabb32 {
            lower: [
                f32_round_down(b.lower.x),
                f32_round_down(b.lower.y),
                f32_round_down(b.lower.z),
            ],
            upper: [
                f32_round_up(b.upper.x),
                f32_round_up(b.upper.y),
                f32_round_up(b.upper.z),
            ],
        }
    }

    #[inline]
    pub fn to_aabb(self) -> Aabb {
        Aabb::new(
            Vec3::new(
                self.lower[0] as f64,
                self.lower[1] as f64,
                self.lower[2] as f64,
            ),
            Vec3::new(
                self.upper[0] as f64,
                self.upper[1] as f64,
                self.upper[2] as f64,
            ),
        )
    }
}

fn f32_round_down(x: f64) -> f32 {
    let f = x as f32;
    if f as f64 > x {
        f.next_down()
    } else {
        f
    }
}

fn f32_round_up(x: f64) -> f32 {
    let f = x as f32;
    if (f as f64) < x {
        f.next_up()
    } else {
        f
    }
}

/// What a child slot points at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChildRef {
    Empty,
    Inner(u32),
    /// Contiguous range in the reordered triangle array.
    Leaf {
        first: u32,
        count: u32,
    },
}

/// Where a slot's mask came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskProvenance {
    Unset,
    Exact,
    Approx(u32),
}

#[derive(Clone, Debug)]
pub struct WideNode {
    pub child_aabb: [Aabb32; BVH_WIDTH],
    pub child: [ChildRef; BVH_WIDTH],
    pub child_mask: [OccupancyMask; BVH_WIDTH],
    pub provenance: [MaskProvenance; BVH_WIDTH],
}

impl WideNode {
    fn empty() -> WideNode {
        WideNode {
            child_aabb: [Aabb32::EMPTY; BVH_WIDTH],
            child: [ChildRef::Empty; BVH_WIDTH],
            child_mask: [OccupancyMask::ZERO; BVH_WIDTH],
            provenance: [MaskProvenance::Unset; BVH_WIDTH],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Bvh {
    pub nodes: Vec<WideNode>,
    /// Triangles reordered so every subtree's range is contiguous (DFS).
    pub triangles: Vec<Triangle>,
    pub config: BuildConfig,
    scene_bounds: Aabb32,
    pub(crate) masks_attached: bool,
}

impl Bvh {
    #[inline]
    pub fn root(&self) -> u32 {
        0
    }

    #[inline]
    pub fn scene_bounds(&self) -> Aabb {
        self.scene_bounds.to_aabb()
    }

    #[inline]
    pub fn masks_attached(&self) -> bool {
        self.masks_attached
    }

    /// Tree depth in wide-node levels (root is depth 1).
    pub fn depth(&self) -> usize {
        fn walk(bvh: &Bvh, node: u32) -> usize {
            let mut deepest = 1;
            for slot in 0..BVH_WIDTH {
                if let ChildRef::Inner(c) = bvh.nodes[node as usize].child[slot] {
                    deepest = deepest.max(1 + walk(bvh, c));
                }
            }
            deepest
        }
        walk(self, self.root())
    }
}

struct BuildTri {
    aabb: Aabb,
    centroid: Vec3,
    index: usize,
}

enum BinaryNode {
    Inner {
        aabb: Aabb,
        left: Box<BinaryNode>,
        right: Box<BinaryNode>,
    },
    Leaf {
        aabb: Aabb,
        tris: Vec<usize>,
    },
}

impl BinaryNode {
    fn aabb(&self) -> Aabb {
        match self {
            BinaryNode::Inner { aabb, .. } | BinaryNode::Leaf { aabb, .. } => *aabb,
        }
    }
}

/// Binned-SAH binary build collapsed greedily to a 4-wide BVH. Deterministic
/// for identical input order: split ties break toward the lower bin index and
/// lower axis, and the collapse expands the largest-area inner child first.
pub fn build_bvh(triangles: &[Triangle], config: BuildConfig) -> Result<Bvh, BuildError> {
    if triangles.is_empty() {
        return Err(BuildError::EmptyScene);
    }
    if config.bins < 2 || config.max_leaf_tris < 1 {
        return Err(BuildError::BadConfig(format!(
            "bins {} (>= 2), max_leaf_tris {} (>= 1)",
            config.bins, config.max_leaf_tris
        )));
    }
    let cost_ok = |c: f64| c.is_finite() && c > 0.0;
    if !cost_ok(config.traversal_cost) || !cost_ok(config.intersection_cost) {
        return Err(BuildError::BadConfig("costs must be positive".into()));
    }

    let mut build: Vec<BuildTri> = triangles
        .iter()
        .enumerate()
        .map(|(i, t)| BuildTri {
            aabb: t.aabb(),
            centroid: t.centroid(),
            index: i,
        })
        .collect();

    let root = build_binary(&mut build, &config);
    let scene_bounds = Aabb32::from_f64_outward(&root.aabb());

    let mut nodes = Vec::new();
    let mut reordered = Vec::with_capacity(triangles.len());
    flatten_wide(&root, triangles, &mut nodes, &mut reordered);

    Ok(Bvh {
        nodes,
        triangles: reordered,
        config,
        scene_bounds,
        masks_attached: false,
    })
}

fn build_binary(tris: &mut [BuildTri], config: &BuildConfig) -> BinaryNode {
    let mut aabb = Aabb::EMPTY;
    let mut centroid_bounds = Aabb::EMPTY;
    for t in tris.iter() {
        aabb = aabb.union(t.aabb);
        centroid_bounds = centroid_bounds.include(t.centroid);
    }
    let n = tris.len();
    if n <= config.max_leaf_tris {
        if let Some(split) = choose_split(tris, &aabb, &centroid_bounds, config) {
            // A split cheaper than the leaf still wins below the leaf cap.
            if split.cost < config.intersection_cost * n as f64 {
                return split_and_recurse(tris, aabb, split, config);
            }
        }
        return BinaryNode::Leaf {
            aabb,
            tris: tris.iter().map(|t| t.index).collect(),
        };
    }

    let split = choose_split(tris, &aabb, &centroid_bounds, config).unwrap_or(Split {
        axis: 0,
        bin: 0,
        cost: f64::INFINITY,
        mid: n / 2,
        by_bin: false,
    });
    split_and_recurse(tris, aabb, split, config)
}

struct Split {
    axis: usize,
    bin: usize,
    cost: f64,
    mid: usize,
    by_bin: bool,
}

fn choose_split(
    tris: &[BuildTri],
    aabb: &Aabb,
    centroid_bounds: &Aabb,
    config: &BuildConfig,
) -> Option<Split> {
    let extent = centroid_bounds.extent();
    // Largest centroid extent, ties to the lower axis.
    let mut axis = 0;
    for a in 1..3 {
        if extent[a] > extent[axis] {
            axis = a;
        }
    }
    if extent[axis] <= 0.0 || !extent[axis].is_finite() {
        return None;
    }

    let bins = config.bins;
    let mut bin_aabb = vec![Aabb::EMPTY; bins];
    let mut bin_count = vec![0usize; bins];
    let scale = bins as f64 / extent[axis];
    let bin_of = |c: &Vec3| -> usize {
        let i = (scale * (c[axis] - centroid_bounds.lower[axis])).floor() as i64;
        i.clamp(0, bins as i64 - 1) as usize
    };
    for t in tris {
        let b = bin_of(&t.centroid);
        bin_aabb[b] = bin_aabb[b].union(t.aabb);
        bin_count[b] += 1;
    }

    // Sweep: cost(k) = C_T + C_I * (SA_L*n_L + SA_R*n_R) / SA(parent).
    let mut right_sa = vec![0.0f64; bins];
    let mut acc = Aabb::EMPTY;
    let mut acc_n = 0usize;
    let mut right_n = vec![0usize; bins];
    for k in (1..bins).rev() {
        acc = acc.union(bin_aabb[k]);
        acc_n += bin_count[k];
        right_sa[k] = if acc_n > 0 { acc.surface_area() } else { 0.0 };
        right_n[k] = acc_n;
    }

    let parent_sa = aabb.surface_area();
    let mut best: Option<(f64, usize)> = None;
    let mut left = Aabb::EMPTY;
    let mut left_n = 0usize;
    for k in 0..bins - 1 {
        left = left.union(bin_aabb[k]);
        left_n += bin_count[k];
        let rn = right_n[k + 1];
        if left_n == 0 || rn == 0 {
            continue;
        }
        let cost = config.traversal_cost
            + config.intersection_cost
                * (left.surface_area() * left_n as f64 + right_sa[k + 1] * rn as f64)
                / parent_sa;
        // Strict < keeps the lowest bin index on ties.
        if best.map_or(true, |(c, _)| cost < c) {
            best = Some((cost, k));
        }
    }

    let (cost, bin) = best?;
    Some(Split {
        axis,
        bin,
        cost,
        mid: 0,
        by_bin: true,
    })
}

fn split_and_recurse(
    tris: &mut [BuildTri],
    aabb: Aabb,
    split: Split,
    config: &BuildConfig,
) -> BinaryNode {
    let n = tris.len();
    let mid = if split.by_bin {
        let mut centroid_lo = f64::INFINITY;
        let mut centroid_hi = f64::NEG_INFINITY;
        for t in tris.iter() {
            centroid_lo = centroid_lo.min(t.centroid[split.axis]);
            centroid_hi = centroid_hi.max(t.centroid[split.axis]);
        }
        let scale = config.bins as f64 / (centroid_hi - centroid_lo);
        let bin_of = |t: &BuildTri| -> usize {
            let i = (scale * (t.centroid[split.axis] - centroid_lo)).floor() as i64;
            i.clamp(0, config.bins as i64 - 1) as usize
        };
        // Stable partition keeps determinism.
        let (left, right): (Vec<_>, Vec<_>) = tris
            .iter()
            .map(|t| BuildTri {
                aabb: t.aabb,
                centroid: t.centroid,
                index: t.index,
            })
            .partition(|t| bin_of(t) <= split.bin);
        let mid = left.len();
        if mid == 0 || mid == n {
            n / 2
        } else {
            for (i, t) in left.into_iter().chain(right).enumerate() {
                tris[i] = t;
            }
            mid
        }
    } else {
        split.mid
    };

    let (l, r) = tris.split_at_mut(mid);
    let left = build_binary(l, config);
    let right = build_binary(r, config);
    BinaryNode::Inner {
        aabb,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Collapse a binary node into up to four wide children: repeatedly expand
/// the inner child with the largest surface area while slots remain.
fn collect_wide_children<'a>(node: &'a BinaryNode) -> Vec<&'a BinaryNode> {
    let mut children: Vec<&BinaryNode> = match node {
        BinaryNode::Inner { left, right, .. } => vec![left, right],
        leaf @ BinaryNode::Leaf { .. } => vec![leaf],
    };
    while children.len() < BVH_WIDTH {
        let mut pick: Option<(usize, f64)> = None;
        for (i, c) in children.iter().enumerate() {
            if let BinaryNode::Inner { aabb, .. } = c {
                let sa = aabb.surface_area();
                if pick.map_or(true, |(_, best)| sa > best) {
                    pick = Some((i, sa));
                }
            }
        }
        let Some((i, _)) = pick else { break };
        let BinaryNode::Inner { left, right, .. } = children[i] else {
            unreachable!()
        };
        children[i] = left;
        children.insert(i + 1, right);
    }
    children
}

fn flatten_wide(
    node: &BinaryNode,
    input: &[Triangle],
    nodes: &mut Vec<WideNode>,
    reordered: &mut Vec<Triangle>,
) -> u32 {
    let children = collect_wide_children(node);
    let my_index = nodes.len() as u32;
    nodes.push(WideNode::empty());

    let mut wide = WideNode::empty();
    for (slot, child) in children.iter().enumerate() {
        wide.child_aabb[slot] = Aabb32::from_f64_outward(&child.aabb());
        match child {
            BinaryNode::Leaf { tris, .. } => {
                let first = reordered.len() as u32;
                for &idx in tris {
                    reordered.push(input[idx]);
                }
                wide.child[slot] = ChildRef::Leaf {
                    first,
                    count: tris.len() as u32,
                };
            }
            inner @ BinaryNode::Inner { .. } => {
                let child_index = flatten_wide(inner, input, nodes, reordered);
                wide.child[slot] = ChildRef::Inner(child_index);
            }
        }
    }
    nodes[my_index as usize] = wide;
    my_index
}

/// SAH cost: `(C_T * sum_inner SA + C_I * sum_leaf SA*count) / SA(root)`,
/// summed over child slots (the entities actually tested during traversal).
/// The root box itself is tested unconditionally and does not enter the sums.
pub fn sah_cost(bvh: &Bvh, config: &BuildConfig) -> f64 {
    slot_cost_sums(bvh, config, |_| 1.0)
}

/// SAH with each slot's area weighted by its mask occupancy `O_m / R^3`.
pub fn masked_sah_cost(bvh: &Bvh, config: &BuildConfig) -> f64 {
    let cells = config.res.cell_count() as f64;
    slot_cost_sums(bvh, config, |mask| mask.popcount() as f64 / cells)
}

fn slot_cost_sums<F: Fn(&OccupancyMask) -> f64>(bvh: &Bvh, config: &BuildConfig, weight: F) -> f64 {
    let root_sa = bvh.scene_bounds().surface_area();
    let mut inner = 0.0;
    let mut leaf = 0.0;
    for node in &bvh.nodes {
        for slot in 0..BVH_WIDTH {
            let sa = match node.child[slot] {
                ChildRef::Empty => continue,
                _ => node.child_aabb[slot].to_aabb().surface_area(),
            };
            let w = weight(&node.child_mask[slot]);
            match node.child[slot] {
                ChildRef::Inner(_) => inner += sa * w,
                ChildRef::Leaf { count, .. } => leaf += sa * w * count as f64,
                ChildRef::Empty => unreachable!(),
            }
        }
    }
    (config.traversal_cost * inner + config.intersection_cost * leaf) / root_sa
}

/// Node dump layouts. Per node at `R = 4`: 112 bytes base (4 AABBs of six
/// f32 plus 4 refs), 144 bytes with inline 8-byte masks, 116 bytes with
/// 1-byte compression indices. Other resolutions use the same shape with
/// `ceil(R^3/64)*8`-byte inline masks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeLayout {
    Base,
    Inline,
    Compressed,
}

/// Bytes one node occupies in the dump.
pub fn serialized_node_size(res: MaskResolution, layout: NodeLayout) -> usize {
    let base = BVH_WIDTH * 24 + BVH_WIDTH * 4;
    match layout {
        NodeLayout::Base => base,
        NodeLayout::Inline => base + BVH_WIDTH * res.word_count() * 8,
        NodeLayout::Compressed => base + BVH_WIDTH,
    }
}

/// Child ref encoding in the dump (a reconstruction; 4 bytes per child):
/// `0xFFFF_FFFF` empty; bit 31 clear = inner node index; bit 31 set = leaf
/// with bits 27..=30 the triangle count and bits 0..=26 the first-triangle
/// index.
fn encode_ref(r: ChildRef) -> Result<u32, SerializeError> {
    match r {
        ChildRef::Empty => Ok(u32::MAX),
        ChildRef::Inner(i) => {
            if i >= 1 << 31 {
                return Err(SerializeError::RefOutOfRange(format!("inner index {i}")));
            }
            Ok(i)
        }
        ChildRef::Leaf { first, count } => {
            if first >= 1 << 27 || count == 0 || count > 15 {
                return Err(SerializeError::RefOutOfRange(format!(
                    "leaf first={first} count={count}"
                )));
            }
            Ok((1 << 31) | (count << 27) | first)
        }
    }
}

/// Serialize the node array (little-endian). Header: magic, version, R,
/// node count, layout flag. The compressed layout embeds the compression LUT
/// (count, then masks in sorted order) between the header and the nodes.
pub fn serialize_nodes(
    bvh: &Bvh,
    layout: NodeLayout,
    compression: Option<(&CompressionLut, &[[u8; BVH_WIDTH]])>,
) -> Result<Vec<u8>, SerializeError> {
    let res = bvh.config.res;
    let mut out = Vec::with_capacity(
        NODE_DUMP_HEADER_BYTES + bvh.nodes.len() * serialized_node_size(res, layout),
    );
    out.extend_from_slice(DUMP_MAGIC);
    out.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    out.extend_from_slice(&res.get().to_le_bytes());
    out.extend_from_slice(&(bvh.nodes.len() as u32).to_le_bytes());
    let flag: u32 = match layout {
        NodeLayout::Base => 0,
        NodeLayout::Inline => 1,
        NodeLayout::Compressed => 2,
    };
    out.extend_from_slice(&flag.to_le_bytes());

    let comp = match layout {
        NodeLayout::Compressed => {
            let Some((lut, indices)) = compression else {
                return Err(SerializeError::MissingCompression);
            };
            if indices.len() != bvh.nodes.len() {
                return Err(SerializeError::MissingCompression);
            }
            out.extend_from_slice(&(lut.len() as u32).to_le_bytes());
            for mask in lut.masks() {
                for w in 0..res.word_count() {
                    out.extend_from_slice(&mask.words()[w].to_le_bytes());
                }
            }
            Some(indices)
        }
        _ => None,
    };

    for (ni, node) in bvh.nodes.iter().enumerate() {
        for slot in 0..BVH_WIDTH {
            let b = node.child_aabb[slot];
            for v in b.lower {
                out.extend_from_slice(&v.to_le_bytes());
            }
            for v in b.upper {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for slot in 0..BVH_WIDTH {
            out.extend_from_slice(&encode_ref(node.child[slot])?.to_le_bytes());
        }
        match layout {
            NodeLayout::Base => {}
            NodeLayout::Inline => {
                for slot in 0..BVH_WIDTH {
                    for w in 0..res.word_count() {
                        out.extend_from_slice(&node.child_mask[slot].words()[w].to_le_bytes());
                    }
                }
            }
            NodeLayout::Compressed => {
                out.extend_from_slice(&comp.unwrap()[ni]);
            }
        }
    }
    Ok(out)
}
