//! Compress per-node object masks into one-byte dictionary indices and
//! compare the fast requirement-table search against the linear scan.
//!
//!     cargo run --release --example compress_masks

use std::time::Instant;

use voxcull::bvh::{build_bvh, ApproxLevel, BuildConfig, ChildRef, BVH_WIDTH};
use voxcull::compress::{
    brute_force_optimal_mask, compress_bvh_masks, index_of_optimal_mask, select_compression_lut,
    RayObjectBitTable, RequirementTables,
};
use voxcull::hair::{gen_hair_scene, HairParams};
use voxcull::hierarchy::{attach_masks, FillingPatternTable};
use voxcull::mask::MaskResolution;
use voxcull::ray_lut::{RayLutResolution, RayMaskLut};

fn main() {
    let tris = gen_hair_scene(&HairParams::default());
    let r = MaskResolution::new(4).unwrap();
    let mut bvh = build_bvh(&tris, BuildConfig::new(r)).unwrap();
    attach_masks(
        &mut bvh,
        ApproxLevel::Finite(3),
        &FillingPatternTable::new(r),
    );

    let lut = select_compression_lut(&bvh, 256);
    println!(
        "dictionary: {} masks, {} bytes of mask payload replaced by 1-byte indices (R^3 = {} bits -> 8 bits)",
        lut.len(),
        r.word_count() * 8,
        r.cell_count()
    );

    let tables = RequirementTables::build(&lut, r, 8);
    let indices = compress_bvh_masks(&bvh, &tables);

    let mut masks = Vec::new();
    for node in &bvh.nodes {
        for slot in 0..BVH_WIDTH {
            if !matches!(node.child[slot], ChildRef::Empty) {
                masks.push(node.child_mask[slot]);
            }
        }
    }
    let lossless = bvh.nodes.iter().zip(indices.iter()).all(|(node, idx)| {
        (0..BVH_WIDTH).all(|slot| {
            matches!(node.child[slot], ChildRef::Empty)
                || node.child_mask[slot].is_subset_of(lut.mask(idx[slot] as usize))
        })
    });
    println!(
        "{} slot masks compressed, all conservative: {lossless}",
        masks.len()
    );

    let t = Instant::now();
    let mut a = 0usize;
    for m in &masks {
        a += brute_force_optimal_mask(m, &lut);
    }
    let naive = t.elapsed();
    let t = Instant::now();
    let mut b = 0usize;
    for m in &masks {
        b += index_of_optimal_mask(m, &tables);
    }
    let fast = t.elapsed();
    assert_eq!(a, b);
    println!(
        "search over {} masks: linear scan {:.2} ms, requirement tables {:.2} ms ({:.1}%)",
        masks.len(),
        naive.as_secs_f64() * 1e3,
        fast.as_secs_f64() * 1e3,
        100.0 * fast.as_secs_f64() / naive.as_secs_f64()
    );

    let ray_lut = RayMaskLut::build(r, RayLutResolution::of_factor(r, 1).unwrap());
    let bit_table = RayObjectBitTable::build(&ray_lut, &lut);
    println!(
        "ray-object bit table: {} ray keys x {} dictionary masks = {} bytes",
        ray_lut.entry_count(),
        lut.len(),
        bit_table.size_bytes()
    );
}
