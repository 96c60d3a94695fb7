//! Sweep the mask approximation level L: tightness (total popcount and
//! intersection units) versus mask build time, plus the exact baseline.
//!
//!     cargo run --release --example level_sweep

use std::time::Instant;

use voxcull::bvh::{build_bvh, ApproxLevel, BuildConfig};
use voxcull::geometry::Aabb;
use voxcull::hair::{gen_hair_scene, HairParams};
use voxcull::hierarchy::{attach_masks, FillingPatternTable};
use voxcull::mask::MaskResolution;
use voxcull::ray_lut::{RayLutResolution, RayMaskLut};
use voxcull::traverse::{traverse, Culling, TraversalStats};

fn main() {
    let tris = gen_hair_scene(&HairParams::default());
    let r = MaskResolution::new(4).unwrap();
    let table = FillingPatternTable::new(r);
    let lut = RayMaskLut::build(r, RayLutResolution::of_factor(r, 1).unwrap());

    let mut bounds = Aabb::EMPTY;
    for t in &tris {
        bounds = bounds.union(t.aabb());
    }
    // A fixed probe stream shared by every level.
    let rays: Vec<voxcull::Ray> = {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let center = bounds.center();
        let radius = bounds.extent().length();
        (0..4000)
            .map(|_| {
                let dir = loop {
                    let v = voxcull::Vec3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    );
                    if v.length() > 1e-3 {
                        break v.normalized();
                    }
                };
                voxcull::Ray::new(center + dir * radius, -dir, 0.0, f64::INFINITY)
            })
            .collect()
    };

    println!(
        "{:<8} {:>12} {:>12} {:>14}",
        "level", "popcount", "units", "mask build ms"
    );
    let levels = [
        ApproxLevel::Finite(1),
        ApproxLevel::Finite(2),
        ApproxLevel::Finite(3),
        ApproxLevel::Finite(4),
        ApproxLevel::Finite(5),
        ApproxLevel::Infinite,
    ];
    for level in levels {
        let mut bvh = build_bvh(&tris, BuildConfig::new(r)).unwrap();
        let t = Instant::now();
        attach_masks(&mut bvh, level, &table);
        let build_ms = t.elapsed().as_secs_f64() * 1e3;

        let popcount: u64 = bvh
            .nodes
            .iter()
            .flat_map(|n| n.child_mask.iter())
            .map(|m| m.popcount() as u64)
            .sum();
        let mut stats = TraversalStats::default();
        for ray in &rays {
            traverse(&bvh, ray, &Culling::RayMaskLut(&lut), &mut stats).unwrap();
        }
        println!(
            "{:<8} {:>12} {:>12} {:>14.1}",
            level.to_string(),
            popcount,
            stats.units(),
            build_ms
        );
    }
}
