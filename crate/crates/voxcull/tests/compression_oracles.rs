//! Compression dictionary selection, search equivalence, and bit-table
//! oracles.

mod common;

use common::*;
use rand::Rng;

use voxcull::bvh::{build_bvh, ApproxLevel, BuildConfig, ChildRef, BVH_WIDTH};
use voxcull::compress::{
    compress_bvh_masks, index_of_optimal_mask, select_compression_lut, CompressionLut,
    RayObjectBitTable, RequirementTables,
};
use voxcull::hierarchy::{attach_masks, FillingPatternTable};
use voxcull::mask::{mask_and_words_nonzero, OccupancyMask};
use voxcull::ray_lut::{RayLutResolution, RayMaskLut};

#[test]
fn fast_search_equals_independent_oracle() {
    for r_val in [4u32, 6] {
        let r = res(r_val);
        let dict_masks = rand_masks(911 + r_val as u64, r, 255);
        let lut = CompressionLut::from_masks(r, dict_masks);
        let tables = RequirementTables::build(&lut, r, 8);
        let probes = rand_masks(933 + r_val as u64, r, 10_000);
        for (i, probe) in probes.iter().enumerate() {
            let fast = index_of_optimal_mask(probe, &tables);
            let oracle = oracle_optimal_mask(probe, lut.masks()).expect("all-ones fallback");
            // The oracle keeps the first minimum-popcount superset, which in
            // a sorted dictionary is the same index the LSB returns.
            assert_eq!(fast, oracle, "R={r_val} probe {i}");
        }
    }
}

#[test]
fn requirement_tables_match_containment_scan() {
    let r = res(4);
    let lut = CompressionLut::from_masks(r, rand_masks(944, r, 63));
    let tables = RequirementTables::build(&lut, r, 8);
    let mut rg = rng(955);
    for _ in 0..5000 {
        let chunk = rg.gen_range(0..tables.chunks());
        let pattern: u64 = rg.gen_range(0..256);
        let entry = tables.entry(chunk, pattern);
        for (j, m) in lut.masks().iter().enumerate() {
            let mut contains = true;
            for bit in 0..8usize {
                if pattern >> bit & 1 == 1 && !m.get_bit(chunk * 8 + bit) {
                    contains = false;
                    break;
                }
            }
            let flagged = entry.lsb().is_some() && {
                // Reconstruct bit j from the candidate words.
                (entry.0[j >> 6] >> (j & 63)) & 1 == 1
            };
            assert_eq!(
                flagged, contains,
                "chunk {chunk} pattern {pattern:#x} mask {j}"
            );
        }
    }
}

#[test]
fn requirement_entries_shrink_as_patterns_grow() {
    let r = res(4);
    let lut = CompressionLut::from_masks(r, rand_masks(961, r, 120));
    let tables = RequirementTables::build(&lut, r, 8);
    let mut rg = rng(972);
    for _ in 0..5000 {
        let chunk = rg.gen_range(0..tables.chunks());
        let p: u64 = rg.gen_range(0..256);
        let q: u64 = p | rg.gen_range(0..256);
        let ep = tables.entry(chunk, p);
        let eq = tables.entry(chunk, q);
        for w in 0..4 {
            assert_eq!(eq.0[w] & !ep.0[w], 0, "chunk {chunk}: entry({q:#x}) not within entry({p:#x})");
        }
    }
}

#[test]
fn node_compression_is_conservative_and_monotone() {
    let tris = hair_scene(150, 10);
    let r = res(4);
    let mut bvh = build_bvh(&tris, BuildConfig::new(r)).unwrap();
    let table = FillingPatternTable::new(r);
    attach_masks(&mut bvh, ApproxLevel::Finite(3), &table);

    let lut = select_compression_lut(&bvh, 256);
    let tables = RequirementTables::build(&lut, r, 8);
    let indices = compress_bvh_masks(&bvh, &tables);

    for (ni, node) in bvh.nodes.iter().enumerate() {
        for slot in 0..BVH_WIDTH {
            if matches!(node.child[slot], ChildRef::Empty) {
                continue;
            }
            let original = &node.child_mask[slot];
            let replacement = lut.mask(indices[ni][slot] as usize);
            assert!(
                original.is_subset_of(replacement),
                "node {ni} slot {slot}: compressed mask lost bits"
            );
        }
    }
}

#[test]
fn under_capacity_dictionary_is_lossless() {
    // A small scene carries fewer distinct masks than the dictionary holds.
    let tris = cube_array_scene(2);
    let r = res(4);
    let mut bvh = build_bvh(&tris, BuildConfig::new(r)).unwrap();
    let table = FillingPatternTable::new(r);
    attach_masks(&mut bvh, ApproxLevel::Infinite, &table);

    let mut distinct: Vec<OccupancyMask> = Vec::new();
    for node in &bvh.nodes {
        for slot in 0..BVH_WIDTH {
            if !matches!(node.child[slot], ChildRef::Empty)
                && !distinct.contains(&node.child_mask[slot])
            {
                distinct.push(node.child_mask[slot]);
            }
        }
    }
    assert!(distinct.len() < 255, "scene too varied for this test");

    let lut = select_compression_lut(&bvh, 256);
    for m in &distinct {
        assert!(
            lut.masks().contains(m),
            "distinct mask missing from dictionary"
        );
    }
    let tables = RequirementTables::build(&lut, r, 8);
    let indices = compress_bvh_masks(&bvh, &tables);
    for (ni, node) in bvh.nodes.iter().enumerate() {
        for slot in 0..BVH_WIDTH {
            if matches!(node.child[slot], ChildRef::Empty) {
                continue;
            }
            assert_eq!(
                lut.mask(indices[ni][slot] as usize),
                &node.child_mask[slot],
                "lossless compression expected"
            );
        }
    }
}

#[test]
fn importance_ranks_larger_areas_first() {
    // Two leaves with very different surface areas and distinct masks: with
    // room for only one scene mask, the big-area mask wins.
    let tris = vec![
        voxcull::Triangle::new(
            voxcull::Vec3::new(0.0, 0.0, 0.0),
            voxcull::Vec3::new(10.0, 0.0, 0.0),
            voxcull::Vec3::new(0.0, 10.0, 0.0),
            0,
        ),
        voxcull::Triangle::new(
            voxcull::Vec3::new(100.0, 0.0, 0.0),
            voxcull::Vec3::new(100.3, 0.0, 0.0),
            voxcull::Vec3::new(100.0, 0.3, 0.0),
            1,
        ),
    ];
    let r = res(4);
    let mut config = BuildConfig::new(r);
    config.max_leaf_tris = 1;
    let mut bvh = build_bvh(&tris, config).unwrap();
    let table = FillingPatternTable::new(r);
    attach_masks(&mut bvh, ApproxLevel::Infinite, &table);

    let mut slot_masks: Vec<(f64, OccupancyMask)> = Vec::new();
    for node in &bvh.nodes {
        for slot in 0..BVH_WIDTH {
            if !matches!(node.child[slot], ChildRef::Empty) {
                slot_masks.push((
                    node.child_aabb[slot].to_aabb().surface_area(),
                    node.child_mask[slot],
                ));
            }
        }
    }
    slot_masks.sort_by(|a, b| b.0.total_cmp(&a.0));
    let biggest_mask = slot_masks[0].1;

    let lut = select_compression_lut(&bvh, 2);
    assert_eq!(lut.len(), 2);
    assert!(lut.masks().contains(&biggest_mask));
    assert!(lut.masks().contains(&OccupancyMask::full(r)));
}

#[test]
fn k1_degenerates_to_full_mask_only() {
    let tris = cube_array_scene(2);
    let r = res(4);
    let mut bvh = build_bvh(&tris, BuildConfig::new(r)).unwrap();
    let table = FillingPatternTable::new(r);
    attach_masks(&mut bvh, ApproxLevel::Finite(1), &table);
    let lut = select_compression_lut(&bvh, 1);
    assert_eq!(lut.len(), 1);
    assert_eq!(lut.mask(0), &OccupancyMask::full(r));
    let tables = RequirementTables::build(&lut, r, 8);
    let indices = compress_bvh_masks(&bvh, &tables);
    assert!(indices.iter().all(|n| n.iter().all(|&i| i == 0)));
}

#[test]
fn all_ones_column_is_all_true() {
    // The forced fallback mask intersects every ray mask (entries are never
    // empty), so its bit-table column is uniformly true.
    let r = res(4);
    let ray_lut = RayMaskLut::build(r, RayLutResolution::new(r, 4).unwrap());
    let comp = CompressionLut::from_masks(r, rand_masks(988, r, 40));
    let full_idx = comp
        .masks()
        .iter()
        .position(|m| *m == OccupancyMask::full(r))
        .unwrap();
    let table = RayObjectBitTable::build(&ray_lut, &comp);
    for i in 0..ray_lut.entry_count() {
        assert!(table.get(i, full_idx), "ray key {i}");
    }
}

#[test]
fn bit_table_matches_direct_and_large_sample() {
    let r = res(4);
    let ray_lut = RayMaskLut::build(r, RayLutResolution::new(r, 4).unwrap());
    let comp = CompressionLut::from_masks(r, rand_masks(966, r, 255));
    let table = RayObjectBitTable::build(&ray_lut, &comp);
    let mut rg = rng(977);
    for _ in 0..100_000 {
        let i = rg.gen_range(0..ray_lut.entry_count());
        let j = rg.gen_range(0..comp.len());
        let direct = mask_and_words_nonzero(comp.mask(j), ray_lut.entry_words(i));
        assert_eq!(table.get(i, j), direct);
    }
}
