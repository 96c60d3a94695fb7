//! Build a masked BVH over the procedural hair scene and trace a handful of
//! rays under each culling mode, printing hits and counters.
//!
//!     cargo run --example build_and_traverse

use voxcull::bvh::{build_bvh, ApproxLevel, BuildConfig};
use voxcull::geometry::{Ray, Vec3};
use voxcull::hair::{gen_hair_scene, HairParams};
use voxcull::hierarchy::{attach_masks, FillingPatternTable};
use voxcull::mask::MaskResolution;
use voxcull::ray_lut::{RayLutResolution, RayMaskLut};
use voxcull::traverse::{traverse, Culling, TraversalStats};

fn main() {
    let tris = gen_hair_scene(&HairParams {
        strands: 200,
        segments: 8,
        ..Default::default()
    });
    let r = MaskResolution::new(4).unwrap();
    let mut bvh = build_bvh(&tris, BuildConfig::new(r)).unwrap();
    println!(
        "{} triangles -> {} wide nodes, depth {}",
        tris.len(),
        bvh.nodes.len(),
        bvh.depth()
    );

    let table = FillingPatternTable::new(r);
    attach_masks(&mut bvh, ApproxLevel::Finite(3), &table);
    let lut = RayMaskLut::build(r, RayLutResolution::of_factor(r, 1).unwrap());

    let rays = [
        Ray::new(
            Vec3::new(-1.0, 0.4, 0.5),
            Vec3::new(1.0, 0.05, 0.02),
            0.0,
            f64::INFINITY,
        ),
        Ray::new(
            Vec3::new(0.5, 2.0, 0.5),
            Vec3::new(0.0, -1.0, 0.01),
            0.0,
            f64::INFINITY,
        ),
        Ray::new(
            Vec3::new(-1.0, 2.0, -1.0),
            Vec3::new(1.0, -1.0, 1.0),
            0.0,
            f64::INFINITY,
        ),
    ];

    for (i, ray) in rays.iter().enumerate() {
        println!("ray {i}:");
        for culling in [Culling::Off, Culling::IdealDda, Culling::RayMaskLut(&lut)] {
            let mut stats = TraversalStats::default();
            let hit = traverse(&bvh, ray, &culling, &mut stats).unwrap();
            let desc = match hit {
                Some(h) => format!("hit prim {} at t={:.4}", h.primitive_id, h.t),
                None => "miss".to_string(),
            };
            println!(
                "  {:<22} {desc:<28} node batches {:>4}, triangle tests {:>4}",
                format!("{culling:?}"),
                stats.node_tests,
                stats.triangle_tests
            );
        }
    }
}
