//! Ray-tracing acceleration with per-node binary voxel occupancy masks.
//!
//! A 4-wide BVH stores, for every child slot, an `R^3`-bit occupancy mask of
//! the geometry inside that child's box. Rays are discretized into the same
//! grid through a precomputed lookup table keyed by their box entry/exit
//! cells, so a single bitwise AND culls box hits that cannot intersect any
//! geometry. Masks can be compressed to one-byte indices into a small
//! dictionary chosen by SAH importance, with the mask-vs-ray test reduced to
//! one precomputed bit fetch.
//!
//! Modules
//! - [`geometry`]: vectors, rays, boxes, triangles and their intersection tests
//! - [`mask`]: occupancy masks, conservative voxelization, exact grid walk
//! - [`ray_lut`]: the six-dimensional ray-mask lookup table
//! - [`bvh`]: binned-SAH 4-wide builder, SAH costs, node serialization
//! - [`hierarchy`]: exact and approximate mask attachment (parameter `L`)
//! - [`compress`]: mask dictionary, requirement tables, intersection bit table
//! - [`mod@traverse`]: traversal with the four culling modes and counters
//! - [`render`], [`mod@bench`], [`report`]: the deterministic evaluation harness
//!
//! Runnable examples covering each capability live under `examples/`; the
//! `voxcull` binary exposes the same pipeline as a small CLI.

pub mod bench;
pub mod bvh;
pub mod compress;
pub mod geometry;
pub mod hair;
pub mod hierarchy;
pub mod mask;
pub mod obj;
pub mod pipeline;
pub mod ray_lut;
pub mod render;
pub mod report;
pub mod traverse;

pub use bvh::{build_bvh, masked_sah_cost, sah_cost, ApproxLevel, BuildConfig, Bvh};
pub use geometry::{
    intersect_ray_aabb, intersect_ray_triangle, sweep_box_overlap, Aabb, Ray, Triangle, Vec3,
};
pub use hierarchy::{attach_masks, fill_by_approximated_occupancy, FillingPatternTable};
pub use mask::{
    dda_ray_cells, mask_and_nonzero, voxelize_triangle, GridFrame, MaskResolution, OccupancyMask,
};
pub use ray_lut::{RayLutResolution, RayMaskLut};
pub use traverse::{traverse, traverse_any, Culling, CullingMode, HitRecord, TraversalStats};
