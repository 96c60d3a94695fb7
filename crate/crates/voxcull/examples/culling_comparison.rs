//! Intersection-count comparison across all culling modes on the hair scene,
//! printed as a small ratio table.
//!
//!     cargo run --release --example culling_comparison

use voxcull::bench::{run_matrix, MatrixConfig};
use voxcull::bvh::ApproxLevel;
use voxcull::hair::{gen_hair_scene, HairParams};
use voxcull::mask::MaskResolution;
use voxcull::render::{Camera, SceneConfig};
use voxcull::Aabb;

fn main() {
    let tris = gen_hair_scene(&HairParams::default());
    let mut bounds = Aabb::EMPTY;
    for t in &tris {
        bounds = bounds.union(t.aabb());
    }
    let mut scene = SceneConfig::new(Camera::auto_frame(&bounds));
    scene.width = 240;
    scene.height = 135;
    scene.spp = 2;

    println!(
        "{} triangles, {}x{} at {} spp",
        tris.len(),
        scene.width,
        scene.height,
        scene.spp
    );
    println!(
        "{:<12} {:>6} {:>14} {:>9}",
        "mode", "R_ray", "units", "ratio"
    );
    for r in [4u32, 6] {
        let cfg = MatrixConfig {
            scene_name: "hair".into(),
            res: MaskResolution::new(r).unwrap(),
            levels: vec![ApproxLevel::Finite(3)],
            lut_size: 256,
            chunk_bits: 8,
            compressed_ray_factor: 1,
        };
        let out = run_matrix(&tris, &scene, &cfg).unwrap();
        println!("--- R = {r}");
        for report in &out.reports {
            println!(
                "{:<12} {:>6} {:>14} {:>8.1}%",
                report.mode.name(),
                report.ray_res.map(|x| x.to_string()).unwrap_or_default(),
                report.units,
                report.ratio_percent
            );
        }
    }
}
