//! Voxelize a triangle into an occupancy mask, walk a segment through the
//! same grid, and show the bitwise-AND overlap test.
//!
//!     cargo run --example voxelize_and_walk

use voxcull::geometry::{Aabb, Triangle, Vec3};
use voxcull::mask::{
    dda_ray_cells, mask_and_nonzero, voxelize_triangle, GridFrame, MaskResolution,
};

fn print_layers(label: &str, mask: &voxcull::mask::OccupancyMask, r: MaskResolution) {
    println!("{label} (popcount {}):", mask.popcount());
    let n = r.get();
    for z in 0..n {
        print!("  z={z}: ");
        for y in (0..n).rev() {
            for x in 0..n {
                print!(
                    "{}",
                    if mask.get_cell(r, [x, y, z]) {
                        '#'
                    } else {
                        '.'
                    }
                );
            }
            print!(" ");
        }
        println!();
    }
}

fn main() {
    let r = MaskResolution::new(4).unwrap();
    let frame = GridFrame::new(Aabb::new(Vec3::ZERO, Vec3::splat(1.0)), r);

    // A thin diagonal triangle: the classic case a box bounds badly.
    let tri = Triangle::new(
        Vec3::new(0.05, 0.05, 0.05),
        Vec3::new(0.95, 0.9, 0.85),
        Vec3::new(0.9, 0.95, 0.95),
        0,
    );
    let object = voxelize_triangle(&frame, &tri);
    print_layers("object mask", &object, r);
    println!(
        "box fills all {} cells; the mask needs only {}",
        r.cell_count(),
        object.popcount()
    );

    // A segment crossing the box near the triangle.
    let p0 = Vec3::new(0.1, 0.2, 0.1);
    let p1 = Vec3::new(0.9, 0.85, 0.9);
    let ray_mask = dda_ray_cells(&frame, p0, p1);
    print_layers("ray mask (exact walk)", &ray_mask, r);
    println!("AND nonzero -> {}", mask_and_nonzero(&object, &ray_mask));

    // A segment through the empty corner: the box test alone would accept it.
    let p0 = Vec3::new(0.9, 0.1, 0.05);
    let p1 = Vec3::new(0.95, 0.3, 0.1);
    let miss_mask = dda_ray_cells(&frame, p0, p1);
    print_layers("ray mask through the empty corner", &miss_mask, r);
    println!("AND nonzero -> {}", mask_and_nonzero(&object, &miss_mask));
}
