//! Voxelization and grid-walk oracles.

mod common;

use common::*;
use rand::Rng;

use voxcull::geometry::{intersect_ray_aabb, intersect_ray_triangle, Aabb, Ray, Vec3};
use voxcull::mask::{
    dda_ray_cells, mask_and_nonzero, voxelize_triangle, GridFrame, MaskResolution, OccupancyMask,
};

fn unit_box() -> Aabb {
    Aabb::new(Vec3::ZERO, Vec3::splat(1.0))
}

#[test]
fn voxelization_covers_sampled_surface_points() {
    let mut rg = rng(511);
    let frame = GridFrame::new(unit_box(), res(4));
    for i in 0..100 {
        let tri = rand_triangle_in(&mut rg, &unit_box(), i);
        let mask = voxelize_triangle(&frame, &tri);
        for _ in 0..1000 {
            let p = sample_triangle_point(&mut rg, &tri);
            let cell = frame.cell_of(p);
            assert!(
                mask.get_cell(res(4), cell),
                "uncovered cell {cell:?} for point {p:?} on {tri:?}"
            );
        }
        let pc = mask.popcount();
        assert!(pc >= 1 && pc as usize <= res(4).cell_count());
    }
}

#[test]
fn dda_diagonal_is_superset_of_point_marching() {
    let frame = GridFrame::new(unit_box(), res(4));
    let e = 1e-9;
    let p0 = Vec3::splat(e);
    let p1 = Vec3::splat(1.0 - e);
    let walked = dda_ray_cells(&frame, p0, p1);
    let marched = marched_cells(&frame, p0, p1, 1_000_000);
    assert!(
        marched.is_subset_of(&walked),
        "marched {marched:?} not within walked {walked:?}"
    );
}

#[test]
fn dda_random_segments_superset_of_marching_and_symmetric() {
    let mut rg = rng(522);
    for trial in 0..2000 {
        let frame_box = rand_aabb(&mut rg, 2.0);
        let r = [4u32, 6][trial % 2];
        let frame = GridFrame::with_res(frame_box, r);
        let p0 = rand_point_in(&mut rg, &frame_box);
        let p1 = rand_point_in(&mut rg, &frame_box);
        let walked = dda_ray_cells(&frame, p0, p1);
        let marched = marched_cells(&frame, p0, p1, 2000);
        assert!(marched.is_subset_of(&walked), "trial {trial}");
        assert_eq!(walked, dda_ray_cells(&frame, p1, p0), "trial {trial}");
        // Walk length bound: at most 3R cells.
        assert!(walked.popcount() <= 3 * r);
    }
}

#[test]
fn ray_hits_are_never_masked_out() {
    // The whole method rests on this: for a hit inside the frame box, the
    // triangle's object mask and the segment's cells must share a bit.
    let mut rg = rng(533);
    let box_ = unit_box();
    let mut hits = 0usize;
    for i in 0..100_000 {
        let tri = rand_triangle_in(&mut rg, &box_, i);
        let origin = rand_point_in(&mut rg, &Aabb::new(Vec3::splat(-3.0), Vec3::splat(3.0)));
        let target = rand_point_in(&mut rg, &box_);
        let ray = Ray::new(origin, (target - origin).normalized(), 0.0, 100.0);
        let Some(hit) = intersect_ray_triangle(&ray, &tri) else {
            continue;
        };
        let Some((t_enter, t_exit, p0, p1)) = intersect_ray_aabb(&ray, &box_) else {
            continue;
        };
        if hit.t < t_enter || hit.t > t_exit {
            continue;
        }
        hits += 1;
        for r in [4u32, 6] {
            let frame = GridFrame::with_res(box_, r);
            let object = voxelize_triangle(&frame, &tri);
            let ray_mask = dda_ray_cells(&frame, p0, p1);
            assert!(
                mask_and_nonzero(&object, &ray_mask),
                "hit culled: R={r} tri {tri:?} ray {ray:?}"
            );
        }
    }
    assert!(hits > 5_000, "only {hits} hits sampled");
}

#[test]
fn mask_and_matches_bit_loop_oracle() {
    let mut rg = rng(544);
    for _ in 0..10_000 {
        let mut a = OccupancyMask::ZERO;
        let mut b = OccupancyMask::ZERO;
        for bit in 0..512 {
            if rg.gen::<f64>() < 0.02 {
                a.set_bit(bit);
            }
            if rg.gen::<f64>() < 0.02 {
                b.set_bit(bit);
            }
        }
        let naive = (0..512).any(|i| a.get_bit(i) && b.get_bit(i));
        assert_eq!(mask_and_nonzero(&a, &b), naive);
    }
}

#[test]
fn mask_words_roundtrip_bit_exactly() {
    let masks = rand_masks(555, res(6), 200);
    for m in masks {
        let stride = MaskResolution::new(6).unwrap().word_count();
        let words: Vec<u64> = m.words()[..stride].to_vec();
        let back = OccupancyMask::from_words(&words);
        assert_eq!(m, back);
    }
}
