//! Procedural hair-like test scene: thin, tilted triangle ribbons following
//! random smooth polylines inside the unit cube. Deterministic for a given
//! seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Triangle, Vec3};

#[derive(Clone, Copy, Debug)]
pub struct HairParams {
    pub seed: u64,
    pub strands: usize,
    pub segments: usize,
    pub thickness: f64,
}

impl Default for HairParams {
    fn default() -> HairParams {
        HairParams {
            seed: 1,
            strands: 600,
            segments: 8,
            thickness: 0.002,
        }
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let len = v.length();
        if len > 1e-3 && len <= 1.0 {
            return v / len;
        }
    }
}

/// Generate `strands * segments * 2` triangles: each segment becomes one
/// ribbon quad perpendicular to a fixed side vector, so the geometry stays
/// thin and diagonal the way hair is.
pub fn gen_hair_scene(params: &HairParams) -> Vec<Triangle> {
    assert!(params.strands >= 1 && params.segments >= 1);
    assert!(params.thickness > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut triangles = Vec::with_capacity(params.strands * params.segments * 2);

    let margin = 0.03;
    let seg_len = 0.65 / params.segments as f64;

    for _ in 0..params.strands {
        let mut p = Vec3::new(
            rng.gen_range(margin..1.0 - margin),
            rng.gen_range(margin..1.0 - margin),
            rng.gen_range(margin..1.0 - margin),
        );
        let mut dir = random_unit(&mut rng);
        let side_hint = random_unit(&mut rng);

        for _ in 0..params.segments {
            // Smooth turn, then reflect at the walls to stay inside.
            let turn = random_unit(&mut rng) * 0.22;
            dir = (dir + turn).normalized();
            let mut next = p + dir * seg_len;
            for axis in 0..3 {
                let (lo, hi) = (margin, 1.0 - margin);
                let v = match axis {
                    0 => &mut next.x,
                    1 => &mut next.y,
                    _ => &mut next.z,
                };
                if *v < lo || *v > hi {
                    *v = (*v).clamp(lo, hi);
                    match axis {
                        0 => dir.x = -dir.x,
                        1 => dir.y = -dir.y,
                        _ => dir.z = -dir.z,
                    }
                }
            }

            let mut side = dir.cross(side_hint);
            if side.length() < 1e-6 {
                side = dir.cross(Vec3::new(0.0, 1.0, 0.0));
            }
            let w = side.normalized() * (params.thickness * 0.5);

            let id0 = triangles.len() as u32;
            triangles.push(Triangle::new(p - w, p + w, next + w, id0));
            triangles.push(Triangle::new(p - w, next + w, next - w, id0 + 1));
            p = next;
        }
    }
    triangles
}
