//! Deterministic desk-scale path tracer and intersection-count heatmaps.
//! The renderer is instrumentation: diffuse surfaces under a constant
//! environment, per-pixel RNG streams seeded from the pixel index, and
//! per-row stats merged in row order so results are independent of the
//! thread schedule.

use std::io::Write;
use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bvh::Bvh;
use crate::geometry::{Aabb, Ray, Triangle, Vec3};
use crate::traverse::{traverse, Culling, TraversalStats, TraverseError};

const ALBEDO: f64 = 0.65;
const ENV_RADIANCE: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    pub fov_y_deg: f64,
}

impl Camera {
    /// Deterministic framing: back off along a fixed diagonal until the
    /// scene's bounding sphere fits the vertical field of view.
    pub fn auto_frame(bounds: &Aabb) -> Camera {
        let center = bounds.center();
        let radius = (bounds.extent().length() * 0.5).max(1e-6);
        let fov_y_deg: f64 = 40.0;
        let dist = radius / (fov_y_deg.to_radians() * 0.5).tan() * 1.15;
        let dir = Vec3::new(0.55, 0.4, 0.8).normalized();
        Camera {
            position: center + dir * dist,
            look_at: center,
            up: Vec3::new(0.0, 1.0, 0.0),
            fov_y_deg,
        }
    }

    fn basis(&self) -> (Vec3, Vec3, Vec3) {
        let forward = (self.look_at - self.position).normalized();
        let right = forward.cross(self.up).normalized();
        let up = right.cross(forward);
        (right, up, forward)
    }

    /// Primary ray through continuous pixel coordinates.
    fn ray(&self, sx: f64, sy: f64, width: usize, height: usize) -> Ray {
        let (right, up, forward) = self.basis();
        let aspect = width as f64 / height as f64;
        let tan = (self.fov_y_deg.to_radians() * 0.5).tan();
        let ndc_x = (sx / width as f64) * 2.0 - 1.0;
        let ndc_y = 1.0 - (sy / height as f64) * 2.0;
        let dir = (forward + right * (ndc_x * tan * aspect) + up * (ndc_y * tan)).normalized();
        Ray::new(self.position, dir, 0.0, f64::INFINITY)
    }
}

/// Scene/run configuration for the benchmark renderer.
#[derive(Clone, Debug)]
pub struct SceneConfig {
    pub mesh_paths: Vec<PathBuf>,
    pub camera: Camera,
    pub width: usize,
    pub height: usize,
    pub spp: usize,
    pub seed: u64,
    pub max_depth: usize,
}

impl SceneConfig {
    pub fn new(camera: Camera) -> SceneConfig {
        SceneConfig {
            mesh_paths: Vec::new(),
            camera,
            width: 480,
            height: 270,
            spp: 4,
            seed: 1,
            max_depth: 3,
        }
    }
}

/// 8-bit RGB image with binary PPM output.
#[derive(Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Image {
        Image {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn write_ppm<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)
    }
}

fn pixel_seed(seed: u64, pixel_index: u64) -> u64 {
    let mut z = seed ^ pixel_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn orthonormal_basis(n: Vec3) -> (Vec3, Vec3) {
    let a = if n.x.abs() > 0.9 {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(1.0, 0.0, 0.0)
    };
    let u = a.cross(n).normalized();
    let v = n.cross(u);
    (u, v)
}

fn srgb_byte(c: f64) -> u8 {
    let c = c.clamp(0.0, 1.0).powf(1.0 / 2.2);
    (c * 255.0 + 0.5) as u8
}

/// Path-trace radiance for one camera ray. Consumes RNG draws only after a
/// confirmed hit, so the sample stream is identical for every culling mode.
#[allow(clippy::too_many_arguments)]
fn radiance(
    bvh: &Bvh,
    by_id: &[Triangle],
    culling: &Culling,
    mut ray: Ray,
    max_depth: usize,
    offset_eps: f64,
    rng: &mut ChaCha8Rng,
    stats: &mut TraversalStats,
) -> Result<f64, TraverseError> {
    let mut throughput = 1.0;
    for _ in 0..max_depth {
        let Some(hit) = traverse(bvh, &ray, culling, stats)? else {
            return Ok(throughput * ENV_RADIANCE);
        };
        let tri = &by_id[hit.primitive_id as usize];
        let mut n = tri.normal();
        let len = n.length();
        if len > 0.0 {
            n = n / len;
        } else {
            n = Vec3::new(0.0, 1.0, 0.0);
        }
        if n.dot(ray.dir) > 0.0 {
            n = -n;
        }
        throughput *= ALBEDO;

        let r1: f64 = rng.gen();
        let r2: f64 = rng.gen();
        let phi = 2.0 * std::f64::consts::PI * r1;
        let r = r2.sqrt();
        let (u, v) = orthonormal_basis(n);
        let dir = u * (r * phi.cos()) + v * (r * phi.sin()) + n * (1.0 - r2).max(0.0).sqrt();

        let origin = ray.at(hit.t) + n * offset_eps;
        ray = Ray::new(origin, dir, 0.0, f64::INFINITY);
    }
    Ok(0.0)
}

fn triangles_by_id(bvh: &Bvh) -> Vec<Triangle> {
    let mut max_id = 0;
    for t in &bvh.triangles {
        max_id = max_id.max(t.primitive_id);
    }
    let placeholder = Triangle::new(Vec3::ZERO, Vec3::ZERO, Vec3::ZERO, u32::MAX);
    let mut by_id = vec![placeholder; max_id as usize + 1];
    for t in &bvh.triangles {
        by_id[t.primitive_id as usize] = *t;
    }
    by_id
}

/// Render a beauty image. The image is bit-identical across culling modes and
/// thread counts; only the stats differ between modes.
pub fn render(
    bvh: &Bvh,
    culling: &Culling,
    scene: &SceneConfig,
) -> Result<(Image, TraversalStats), TraverseError> {
    let by_id = triangles_by_id(bvh);
    let offset_eps = 1e-5 * bvh.scene_bounds().extent().length().max(1e-9);
    let width = scene.width;
    let height = scene.height;

    let rows: Result<Vec<(Vec<u8>, TraversalStats)>, TraverseError> = (0..height)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0u8; width * 3];
            let mut stats = TraversalStats::default();
            for x in 0..width {
                let pixel_index = (y * width + x) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(pixel_seed(scene.seed, pixel_index));
                let mut acc = 0.0;
                for _ in 0..scene.spp {
                    let jx: f64 = rng.gen();
                    let jy: f64 = rng.gen();
                    let ray = scene
                        .camera
                        .ray(x as f64 + jx, y as f64 + jy, width, height);
                    acc += radiance(
                        bvh,
                        &by_id,
                        culling,
                        ray,
                        scene.max_depth,
                        offset_eps,
                        &mut rng,
                        &mut stats,
                    )?;
                }
                let c = srgb_byte(acc / scene.spp as f64);
                row[x * 3] = c;
                row[x * 3 + 1] = c;
                row[x * 3 + 2] = c;
            }
            Ok((row, stats))
        })
        .collect();

    let rows = rows?;
    let mut image = Image::new(width, height);
    let mut stats = TraversalStats::default();
    for (y, (row, row_stats)) in rows.into_iter().enumerate() {
        image.data[y * width * 3..(y + 1) * width * 3].copy_from_slice(&row);
        stats += row_stats;
    }
    Ok((image, stats))
}

/// Thermal ramp: black, blue, cyan, yellow, red.
fn heat_color(t: f64) -> [u8; 3] {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.00, [0.0, 0.0, 0.0]),
        (0.25, [0.05, 0.15, 0.85]),
        (0.50, [0.05, 0.8, 0.85]),
        (0.75, [0.95, 0.9, 0.1]),
        (1.00, [0.95, 0.1, 0.05]),
    ];
    let t = t.clamp(0.0, 1.0);
    let mut lo = STOPS[0];
    let mut hi = STOPS[STOPS.len() - 1];
    for w in STOPS.windows(2) {
        if t >= w[0].0 && t <= w[1].0 {
            lo = w[0];
            hi = w[1];
            break;
        }
    }
    let f = if hi.0 > lo.0 {
        (t - lo.0) / (hi.0 - lo.0)
    } else {
        0.0
    };
    let mut out = [0u8; 3];
    for c in 0..3 {
        let v = lo.1[c] + (hi.1[c] - lo.1[c]) * f;
        out[c] = (v.clamp(0.0, 1.0) * 255.0 + 0.5) as u8;
    }
    out
}

/// Per-pixel intersection-count heatmap over primary rays (one center ray per
/// pixel), counts mapped linearly onto the ramp and clamped at `range_max`.
pub fn render_heatmap(
    bvh: &Bvh,
    culling: &Culling,
    scene: &SceneConfig,
    range_max: f64,
) -> Result<(Image, TraversalStats), TraverseError> {
    let width = scene.width;
    let height = scene.height;
    let rows: Result<Vec<(Vec<u8>, TraversalStats)>, TraverseError> = (0..height)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0u8; width * 3];
            let mut row_stats = TraversalStats::default();
            for x in 0..width {
                let ray = scene
                    .camera
                    .ray(x as f64 + 0.5, y as f64 + 0.5, width, height);
                let mut stats = TraversalStats::default();
                traverse(bvh, &ray, culling, &mut stats)?;
                row_stats += stats;
                let c = heat_color(stats.units() as f64 / range_max);
                row[x * 3..x * 3 + 3].copy_from_slice(&c);
            }
            Ok((row, row_stats))
        })
        .collect();

    let rows = rows?;
    let mut image = Image::new(width, height);
    let mut stats = TraversalStats::default();
    for (y, (row, row_stats)) in rows.into_iter().enumerate() {
        image.data[y * width * 3..(y + 1) * width * 3].copy_from_slice(&row);
        stats += row_stats;
    }
    Ok((image, stats))
}
