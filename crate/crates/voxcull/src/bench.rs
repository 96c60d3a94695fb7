//! The benchmark matrix: render one scene under every culling mode (and an
//! optional sweep of approximation levels), collecting intersection counters,
//! cost metrics, build timings, and the mask-search timing comparison.

use std::time::Instant;

use crate::bvh::{
    build_bvh, masked_sah_cost, sah_cost, ApproxLevel, BuildConfig, Bvh, ChildRef, BVH_WIDTH,
};
use crate::compress::{brute_force_optimal_mask, index_of_optimal_mask};
use crate::geometry::Triangle;
use crate::hierarchy::{attach_masks, FillingPatternTable};
use crate::mask::{MaskResolution, OccupancyMask};
use crate::pipeline::{build_compression, ArtifactParams, PipelineError};
use crate::ray_lut::{RayLutResolution, RayMaskLut};
use crate::render::{render, Image, SceneConfig};
use crate::report::RunReport;
use crate::traverse::{Culling, CullingMode, TraverseError};

#[derive(Clone, Debug)]
pub struct MatrixConfig {
    pub scene_name: String,
    pub res: MaskResolution,
    pub levels: Vec<ApproxLevel>,
    pub lut_size: usize,
    pub chunk_bits: u32,
    /// Ray LUT factor used by the compressed mode.
    pub compressed_ray_factor: u32,
}

pub struct MatrixOutput {
    pub reports: Vec<RunReport>,
    /// (file stem, image) per run, in report order.
    pub images: Vec<(String, Image)>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Traverse(#[from] TraverseError),
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Time the fast dictionary search against the linear reference scan over at
/// least `min_instances` node masks. Rounds are interleaved and each side
/// reports its best round, which resists scheduler noise at these
/// sub-millisecond scales.
pub fn search_benchmark(
    bvh: &Bvh,
    comp: &crate::pipeline::CompressedArtifacts,
    min_instances: usize,
) -> (f64, f64) {
    let mut masks: Vec<OccupancyMask> = Vec::new();
    for node in &bvh.nodes {
        for slot in 0..BVH_WIDTH {
            if !matches!(node.child[slot], ChildRef::Empty) {
                masks.push(node.child_mask[slot]);
            }
        }
    }
    if masks.is_empty() {
        return (0.0, 0.0);
    }
    let instances = min_instances.max(masks.len());

    let mut naive_ms = f64::INFINITY;
    let mut fast_ms = f64::INFINITY;
    for _ in 0..5 {
        let t = Instant::now();
        let mut check_naive = 0usize;
        for i in 0..instances {
            check_naive += brute_force_optimal_mask(&masks[i % masks.len()], &comp.lut);
        }
        naive_ms = naive_ms.min(ms_since(t));

        let t = Instant::now();
        let mut check_fast = 0usize;
        for i in 0..instances {
            check_fast += index_of_optimal_mask(&masks[i % masks.len()], &comp.tables);
        }
        fast_ms = fast_ms.min(ms_since(t));
        assert_eq!(check_naive, check_fast, "search disagreement");
    }
    (naive_ms, fast_ms)
}

/// Run the full mode matrix: `off`, `ideal`, `lut` at both key resolutions,
/// and `compressed`, for each requested level. Images are rendered per run;
/// conservative culling makes them bit-identical across modes.
pub fn run_matrix(
    triangles: &[Triangle],
    scene: &SceneConfig,
    cfg: &MatrixConfig,
) -> Result<MatrixOutput, BenchError> {
    let params = ArtifactParams {
        res: cfg.res,
        ray_factor: cfg.compressed_ray_factor,
        level: *cfg.levels.first().unwrap_or(&ApproxLevel::Finite(3)),
        lut_size: cfg.lut_size,
        chunk_bits: cfg.chunk_bits,
    };
    crate::pipeline::validate_params(&params)?;

    let t = Instant::now();
    let mut config = BuildConfig::new(cfg.res);
    config.level = params.level;
    let mut bvh = build_bvh(triangles, config).map_err(PipelineError::from)?;
    let bvh_ms = ms_since(t);

    let pattern_table = FillingPatternTable::new(cfg.res);

    let t = Instant::now();
    let lut_1x = RayMaskLut::build(cfg.res, RayLutResolution::of_factor(cfg.res, 1).unwrap());
    let lut_1x_ms = ms_since(t);
    let t = Instant::now();
    let lut_2x = RayMaskLut::build(cfg.res, RayLutResolution::of_factor(cfg.res, 2).unwrap());
    let lut_2x_ms = ms_since(t);

    let mut reports = Vec::new();
    let mut images = Vec::new();

    for &level in &cfg.levels {
        let t = Instant::now();
        attach_masks(&mut bvh, level, &pattern_table);
        let mask_ms = ms_since(t);

        let sah = sah_cost(&bvh, &bvh.config);
        let masked_sah = masked_sah_cost(&bvh, &bvh.config);

        let t = Instant::now();
        let comp_lut = if cfg.compressed_ray_factor == 2 {
            &lut_2x
        } else {
            &lut_1x
        };
        let comp = build_compression(&bvh, comp_lut, &params);
        let comp_ms = ms_since(t);
        let (search_naive_ms, search_fast_ms) = search_benchmark(&bvh, &comp, 10_000);

        struct Run<'a> {
            mode: CullingMode,
            culling: Culling<'a>,
            ray_res: Option<u32>,
            lut_ms: f64,
            tag: &'static str,
        }
        let runs = [
            Run {
                mode: CullingMode::Off,
                culling: Culling::Off,
                ray_res: None,
                lut_ms: 0.0,
                tag: "off",
            },
            Run {
                mode: CullingMode::IdealDda,
                culling: Culling::IdealDda,
                ray_res: None,
                lut_ms: 0.0,
                tag: "ideal",
            },
            Run {
                mode: CullingMode::RayMaskLut,
                culling: Culling::RayMaskLut(&lut_1x),
                ray_res: Some(lut_1x.ray_res().get()),
                lut_ms: lut_1x_ms,
                tag: "lut1x",
            },
            Run {
                mode: CullingMode::RayMaskLut,
                culling: Culling::RayMaskLut(&lut_2x),
                ray_res: Some(lut_2x.ray_res().get()),
                lut_ms: lut_2x_ms,
                tag: "lut2x",
            },
            Run {
                mode: CullingMode::CompressedBitTable,
                culling: Culling::Compressed {
                    ray_lut: comp_lut,
                    indices: &comp.indices,
                    bit_table: &comp.bit_table,
                },
                ray_res: Some(comp_lut.ray_res().get()),
                lut_ms: if cfg.compressed_ray_factor == 2 {
                    lut_2x_ms + comp_ms
                } else {
                    lut_1x_ms + comp_ms
                },
                tag: "compressed",
            },
        ];

        let mut off_units = 0u64;
        for run in runs {
            let t = Instant::now();
            let (image, stats) = render(&bvh, &run.culling, scene)?;
            let render_ms = ms_since(t);
            if run.mode == CullingMode::Off {
                off_units = stats.units();
            }
            let ratio = if off_units > 0 {
                100.0 * stats.units() as f64 / off_units as f64
            } else {
                100.0
            };
            let is_compressed = run.mode == CullingMode::CompressedBitTable;
            reports.push(RunReport {
                scene: cfg.scene_name.clone(),
                mode: run.mode,
                res: cfg.res.get(),
                ray_res: run.ray_res,
                level,
                lut_size: cfg.lut_size,
                units: stats.units(),
                ratio_percent: ratio,
                node_tests: stats.node_tests,
                triangle_tests: stats.triangle_tests,
                bvh_build_ms: bvh_ms,
                mask_build_ms: mask_ms,
                lut_build_ms: run.lut_ms,
                search_naive_ms: is_compressed.then_some(search_naive_ms),
                search_fast_ms: is_compressed.then_some(search_fast_ms),
                render_ms,
                sah,
                masked_sah,
            });
            images.push((
                format!(
                    "{}_r{}_l{}_{}",
                    cfg.scene_name,
                    cfg.res.get(),
                    level,
                    run.tag
                ),
                image,
            ));
        }
    }

    Ok(MatrixOutput { reports, images })
}
