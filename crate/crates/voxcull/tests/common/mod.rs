//! Shared scene builders and independent oracles for the integration suites.
//! Oracles deliberately avoid the library's fast paths: brute-force scans,
//! point sampling, and stepped translation stand in for the structures they
//! check.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use voxcull::geometry::{intersect_ray_triangle, Aabb, Ray, Triangle, Vec3};
use voxcull::hair::{gen_hair_scene, HairParams};
use voxcull::mask::{GridFrame, MaskResolution, OccupancyMask};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn res(n: u32) -> MaskResolution {
    MaskResolution::new(n).unwrap()
}

pub fn rand_point_in(rng: &mut ChaCha8Rng, b: &Aabb) -> Vec3 {
    Vec3::new(
        rng.gen_range(b.lower.x..=b.upper.x),
        rng.gen_range(b.lower.y..=b.upper.y),
        rng.gen_range(b.lower.z..=b.upper.z),
    )
}

pub fn rand_unit(rng: &mut ChaCha8Rng) -> Vec3 {
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

pub fn rand_aabb(rng: &mut ChaCha8Rng, span: f64) -> Aabb {
    let a = Vec3::new(
        rng.gen_range(-span..span),
        rng.gen_range(-span..span),
        rng.gen_range(-span..span),
    );
    let e = Vec3::new(
        rng.gen_range(0.01..span),
        rng.gen_range(0.01..span),
        rng.gen_range(0.01..span),
    );
    Aabb::new(a, a + e)
}

pub fn rand_triangle_in(rng: &mut ChaCha8Rng, b: &Aabb, id: u32) -> Triangle {
    Triangle::new(
        rand_point_in(rng, b),
        rand_point_in(rng, b),
        rand_point_in(rng, b),
        id,
    )
}

/// Rays aimed from outside the bounds toward random interior points, so most
/// rays actually traverse the scene.
pub fn rand_scene_rays(seed: u64, bounds: &Aabb, count: usize) -> Vec<Ray> {
    let mut rng = rng(seed);
    let center = bounds.center();
    let radius = bounds.extent().length();
    (0..count)
        .map(|_| {
            let origin = center + rand_unit(&mut rng) * (radius * rng.gen_range(0.7..1.6));
            let target = rand_point_in(&mut rng, bounds);
            let dir = (target - origin).normalized();
            Ray::new(origin, dir, 0.0, f64::INFINITY)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Scenes

/// Axis-aligned cube lattice. Sizes are deliberately non-round so cube faces
/// do not coincide with grid planes.
pub fn cube_array_scene(n: usize) -> Vec<Triangle> {
    let size = 0.37;
    let spacing = 1.03;
    let mut tris = Vec::new();
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let lo = Vec3::new(x as f64 * spacing, y as f64 * spacing, z as f64 * spacing);
                push_cube(&mut tris, lo, size);
            }
        }
    }
    tris
}

fn push_cube(tris: &mut Vec<Triangle>, lo: Vec3, size: f64) {
    let hi = lo + Vec3::splat(size);
    let corners = [
        Vec3::new(lo.x, lo.y, lo.z),
        Vec3::new(hi.x, lo.y, lo.z),
        Vec3::new(hi.x, hi.y, lo.z),
        Vec3::new(lo.x, hi.y, lo.z),
        Vec3::new(lo.x, lo.y, hi.z),
        Vec3::new(hi.x, lo.y, hi.z),
        Vec3::new(hi.x, hi.y, hi.z),
        Vec3::new(lo.x, hi.y, hi.z),
    ];
    const QUADS: [[usize; 4]; 6] = [
        [0, 1, 2, 3],
        [5, 4, 7, 6],
        [4, 5, 1, 0],
        [3, 2, 6, 7],
        [1, 5, 6, 2],
        [4, 0, 3, 7],
    ];
    for q in QUADS {
        let id = tris.len() as u32;
        tris.push(Triangle::new(
            corners[q[0]],
            corners[q[1]],
            corners[q[2]],
            id,
        ));
        tris.push(Triangle::new(
            corners[q[0]],
            corners[q[2]],
            corners[q[3]],
            id + 1,
        ));
    }
}

/// UV torus triangle mesh (the "user OBJ" stand-in; callers write it through
/// the OBJ path).
pub fn torus_scene(major_segments: usize, minor_segments: usize) -> Vec<Triangle> {
    let major_r = 1.0;
    let minor_r = 0.35;
    let point = |i: usize, j: usize| -> Vec3 {
        let u = i as f64 / major_segments as f64 * std::f64::consts::TAU;
        let v = j as f64 / minor_segments as f64 * std::f64::consts::TAU;
        let w = major_r + minor_r * v.cos();
        Vec3::new(w * u.cos(), minor_r * v.sin(), w * u.sin())
    };
    let mut tris = Vec::new();
    for i in 0..major_segments {
        for j in 0..minor_segments {
            let p00 = point(i, j);
            let p10 = point(i + 1, j);
            let p11 = point(i + 1, j + 1);
            let p01 = point(i, j + 1);
            let id = tris.len() as u32;
            tris.push(Triangle::new(p00, p10, p11, id));
            tris.push(Triangle::new(p00, p11, p01, id + 1));
        }
    }
    tris
}

pub fn hair_scene(strands: usize, segments: usize) -> Vec<Triangle> {
    gen_hair_scene(&HairParams {
        seed: 7,
        strands,
        segments,
        thickness: 0.002,
    })
}

pub fn scene_bounds(tris: &[Triangle]) -> Aabb {
    let mut b = Aabb::EMPTY;
    for t in tris {
        b = b.union(t.aabb());
    }
    b
}

// ---------------------------------------------------------------------------
// Oracles

/// Signed-volume (Pluecker-style) ray/triangle oracle. Returns `None` for
/// edge-grazing configurations within `eps`, which callers exclude.
pub fn signed_volume_hit(ray: &Ray, tri: &Triangle, eps: f64) -> Option<bool> {
    let q = ray.origin;
    let e = ray.origin + ray.dir;
    let vol = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| -> f64 { (d - a).dot((b - a).cross(c - a)) };
    let v0 = vol(q, e, tri.v0, tri.v1);
    let v1 = vol(q, e, tri.v1, tri.v2);
    let v2 = vol(q, e, tri.v2, tri.v0);
    if v0.abs() < eps || v1.abs() < eps || v2.abs() < eps {
        return None;
    }
    let crossing = (v0 > 0.0) == (v1 > 0.0) && (v1 > 0.0) == (v2 > 0.0);
    if !crossing {
        return Some(false);
    }
    let n = tri.normal();
    let denom = n.dot(ray.dir);
    if denom.abs() < eps {
        return None;
    }
    let t = n.dot(tri.v0 - ray.origin) / denom;
    if (t - ray.t_min).abs() < eps || (t - ray.t_max).abs() < eps {
        return None;
    }
    Some(t > ray.t_min && t < ray.t_max)
}

/// Stepped-translation sweep oracle: true if any of the `steps + 1` sampled
/// positions overlaps. Sampling true must imply the analytic sweep is true.
pub fn sampled_sweep_overlap(
    moving: &Aabb,
    displacement: Vec3,
    static_box: &Aabb,
    steps: usize,
) -> bool {
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let offset = displacement * t;
        let shifted = Aabb::new(moving.lower + offset, moving.upper + offset);
        if shifted.overlaps(*static_box) {
            return true;
        }
    }
    false
}

/// Uniformly sample the triangle surface; used as a subset oracle for the
/// voxelizer.
pub fn sample_triangle_point(rng: &mut ChaCha8Rng, tri: &Triangle) -> Vec3 {
    let r1: f64 = rng.gen();
    let r2: f64 = rng.gen();
    let su = r1.sqrt();
    let u = 1.0 - su;
    let v = su * r2;
    tri.v0 * u + tri.v1 * v + tri.v2 * (1.0 - u - v)
}

/// Point-marching segment oracle: cells of evenly spaced sample points.
pub fn marched_cells(frame: &GridFrame, p0: Vec3, p1: Vec3, samples: usize) -> OccupancyMask {
    let mres = MaskResolution::new(frame.res()).unwrap();
    let mut mask = OccupancyMask::ZERO;
    for i in 0..=samples {
        let t = i as f64 / samples as f64;
        let p = p0 + (p1 - p0) * t;
        mask.set_cell(mres, frame.cell_of(p));
    }
    mask
}

/// Exhaustive closest hit over the input triangle list.
pub fn brute_force_closest(ray: &Ray, tris: &[Triangle]) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    let mut t_best = ray.t_max;
    for tri in tris {
        let clipped = Ray {
            t_max: t_best,
            ..*ray
        };
        if let Some(hit) = intersect_ray_triangle(&clipped, tri) {
            if best.is_none() || hit.t < t_best {
                t_best = hit.t;
                best = Some((tri.primitive_id, hit.t));
            }
        }
    }
    best
}

/// Independent dictionary search: superset filter, then minimum popcount with
/// the earliest-sorted-index tie-break.
pub fn oracle_optimal_mask(mask: &OccupancyMask, dictionary: &[OccupancyMask]) -> Option<usize> {
    let mut best: Option<(usize, u32)> = None;
    for (j, m) in dictionary.iter().enumerate() {
        if mask.is_subset_of(m) {
            let pc = m.popcount();
            let better = match best {
                None => true,
                Some((_, best_pc)) => pc < best_pc,
            };
            if better {
                best = Some((j, pc));
            }
        }
    }
    best.map(|(j, _)| j)
}

/// Random masks over the live bit range with a mix of densities.
pub fn rand_masks(seed: u64, r: MaskResolution, count: usize) -> Vec<OccupancyMask> {
    let mut rg = rng(seed);
    let bits = r.cell_count();
    (0..count)
        .map(|_| {
            let mut m = OccupancyMask::ZERO;
            let density: f64 = rg.gen_range(0.02..0.7);
            for b in 0..bits {
                if rg.gen::<f64>() < density {
                    m.set_bit(b);
                }
            }
            m
        })
        .collect()
}
