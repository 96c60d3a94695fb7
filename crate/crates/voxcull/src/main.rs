//! Thin CLI over the library: render, heatmap, bench, gen-hair, dump-bvh.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use voxcull::bench::{run_matrix, MatrixConfig};
use voxcull::bvh::{serialize_nodes, ApproxLevel, NodeLayout};
use voxcull::hair::{gen_hair_scene, HairParams};
use voxcull::mask::MaskResolution;
use voxcull::obj::{load_obj, write_obj};
use voxcull::pipeline::{build_artifacts, ArtifactParams};
use voxcull::render::{render, render_heatmap, Camera, SceneConfig};
use voxcull::report::{write_report_file, RunReport};
use voxcull::traverse::CullingMode;
use voxcull::{Aabb, Triangle};

#[derive(Parser)]
#[command(
    name = "voxcull",
    about = "BVH ray tracing with per-node voxel occupancy-mask culling",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Path-trace a scene and report intersection counters.
    Render(RenderArgs),
    /// Per-pixel intersection-count heatmap over primary rays.
    Heatmap(HeatmapArgs),
    /// Full mode matrix (off/ideal/lut 1x/lut 2x/compressed) with CSV output.
    Bench(BenchArgs),
    /// Generate the procedural hair scene as an OBJ file.
    GenHair(GenHairArgs),
    /// Serialize BVH nodes in one of the dump layouts.
    DumpBvh(DumpBvhArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Off,
    Ideal,
    Lut,
    Compressed,
}

impl From<ModeArg> for CullingMode {
    fn from(m: ModeArg) -> CullingMode {
        match m {
            ModeArg::Off => CullingMode::Off,
            ModeArg::Ideal => CullingMode::IdealDda,
            ModeArg::Lut => CullingMode::RayMaskLut,
            ModeArg::Compressed => CullingMode::CompressedBitTable,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RayResArg {
    #[value(name = "1x")]
    OneX,
    #[value(name = "2x")]
    TwoX,
}

impl RayResArg {
    fn factor(self) -> u32 {
        match self {
            RayResArg::OneX => 1,
            RayResArg::TwoX => 2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Base,
    Inline,
    Compressed,
}

#[derive(Args)]
struct SceneArgs {
    /// OBJ scene path; repeat to merge several meshes.
    #[arg(long = "scene", required = true)]
    scene: Vec<PathBuf>,
}

#[derive(Args)]
struct ArtifactArgs {
    /// Mask resolution R (cells per axis, 2..=8).
    #[arg(long = "res", default_value_t = 4)]
    res: u32,
    /// Ray LUT key resolution relative to R.
    #[arg(long = "ray-res", value_enum, default_value = "1x")]
    ray_res: RayResArg,
    /// Approximation level L (or "inf"); repeatable for bench sweeps.
    #[arg(long = "level", default_values_t = [String::from("3")])]
    level: Vec<String>,
    /// Compression dictionary capacity K.
    #[arg(long = "lut-size", default_value_t = 256)]
    lut_size: usize,
    /// Requirement-table chunk width b.
    #[arg(long = "chunk-bits", default_value_t = 8)]
    chunk_bits: u32,
}

#[derive(Args)]
struct RenderCommon {
    #[arg(long = "seed", default_value_t = 1)]
    seed: u64,
    #[arg(long = "spp", default_value_t = 4)]
    spp: usize,
    /// Image size as WxH.
    #[arg(long = "size", default_value = "480x270")]
    size: String,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long = "mode", value_enum, default_value = "off")]
    mode: ModeArg,
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    common: RenderCommon,
    #[arg(long = "out", default_value = "render.ppm")]
    out: PathBuf,
    /// Optional CSV report (runs an off-mode baseline for the ratio).
    #[arg(long = "report")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct HeatmapArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[arg(long = "mode", value_enum, default_value = "off")]
    mode: ModeArg,
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    common: RenderCommon,
    /// Counter value mapped to the hot end of the ramp.
    #[arg(long = "range-max", default_value_t = 512.0)]
    range_max: f64,
    #[arg(long = "out", default_value = "heatmap.ppm")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[command(flatten)]
    common: RenderCommon,
    /// CSV report path.
    #[arg(long = "report", default_value = "report.csv")]
    report: PathBuf,
    /// Directory for per-run images (omit to skip writing them).
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenHairArgs {
    #[arg(long = "seed", default_value_t = 1)]
    seed: u64,
    #[arg(long = "strands", default_value_t = 600)]
    strands: usize,
    #[arg(long = "segments", default_value_t = 8)]
    segments: usize,
    #[arg(long = "thickness", default_value_t = 0.002)]
    thickness: f64,
    #[arg(long = "out", default_value = "hair.obj")]
    out: PathBuf,
}

#[derive(Args)]
struct DumpBvhArgs {
    #[command(flatten)]
    scene: SceneArgs,
    #[command(flatten)]
    artifacts: ArtifactArgs,
    #[arg(long = "layout", value_enum, default_value = "inline")]
    layout: LayoutArg,
    #[arg(long = "out", default_value = "bvh.bin")]
    out: PathBuf,
}

fn parse_level(s: &str) -> Result<ApproxLevel> {
    if s.eq_ignore_ascii_case("inf") || s == "infinity" {
        return Ok(ApproxLevel::Infinite);
    }
    let n: u32 = s.parse().with_context(|| format!("bad level '{s}'"))?;
    if n == 0 {
        bail!("level must be >= 1 (or 'inf')");
    }
    Ok(ApproxLevel::Finite(n))
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("bad size '{s}', expected WxH"))?;
    let w: usize = w.parse().with_context(|| format!("bad width '{w}'"))?;
    let h: usize = h.parse().with_context(|| format!("bad height '{h}'"))?;
    if w == 0 || h == 0 {
        bail!("size must be at least 1x1");
    }
    Ok((w, h))
}

fn load_scene(paths: &[PathBuf]) -> Result<(String, Vec<Triangle>)> {
    let mut triangles: Vec<Triangle> = Vec::new();
    for path in paths {
        let mut tris = load_obj(path)?;
        let base = triangles.len() as u32;
        for t in tris.iter_mut() {
            t.primitive_id += base;
        }
        triangles.extend(tris);
    }
    let name = paths
        .first()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    Ok((name, triangles))
}

fn scene_config(triangles: &[Triangle], common: &RenderCommon) -> Result<SceneConfig> {
    let mut bounds = Aabb::EMPTY;
    for t in triangles {
        bounds = bounds.union(t.aabb());
    }
    let (width, height) = parse_size(&common.size)?;
    if common.spp == 0 {
        bail!("--spp must be at least 1");
    }
    let mut scene = SceneConfig::new(Camera::auto_frame(&bounds));
    scene.width = width;
    scene.height = height;
    scene.spp = common.spp;
    scene.seed = common.seed;
    Ok(scene)
}

fn artifact_params(args: &ArtifactArgs) -> Result<(ArtifactParams, Vec<ApproxLevel>)> {
    let res = MaskResolution::new(args.res)?;
    let levels = args
        .level
        .iter()
        .map(|s| parse_level(s))
        .collect::<Result<Vec<_>>>()?;
    let mut params = ArtifactParams::new(res);
    params.ray_factor = args.ray_res.factor();
    params.level = *levels.first().unwrap_or(&ApproxLevel::Finite(3));
    params.lut_size = args.lut_size;
    params.chunk_bits = args.chunk_bits;
    Ok((params, levels))
}

fn write_ppm_file(image: &voxcull::render::Image, path: &Path) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    image.write_ppm(&mut w)?;
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let (scene_name, triangles) = load_scene(&args.scene.scene)?;
    let (params, _) = artifact_params(&args.artifacts)?;
    let mode: CullingMode = args.mode.into();
    let mut scene = scene_config(&triangles, &args.common)?;
    scene.mesh_paths = args.scene.scene.clone();

    let artifacts = build_artifacts(&triangles, &params, mode)?;
    let culling = artifacts.culling(mode)?;
    let t = std::time::Instant::now();
    let (image, stats) = render(&artifacts.bvh, &culling, &scene)?;
    let render_ms = t.elapsed().as_secs_f64() * 1e3;
    write_ppm_file(&image, &args.out)?;

    let (off_units, sah, masked) = if mode == CullingMode::Off {
        (
            stats.units(),
            voxcull::sah_cost(&artifacts.bvh, &artifacts.bvh.config),
            voxcull::masked_sah_cost(&artifacts.bvh, &artifacts.bvh.config),
        )
    } else {
        let base = artifacts.culling(CullingMode::Off)?;
        let (_, off_stats) = render(&artifacts.bvh, &base, &scene)?;
        (
            off_stats.units(),
            voxcull::sah_cost(&artifacts.bvh, &artifacts.bvh.config),
            voxcull::masked_sah_cost(&artifacts.bvh, &artifacts.bvh.config),
        )
    };
    let ratio = 100.0 * stats.units() as f64 / off_units.max(1) as f64;

    println!(
        "{}: mode={} units={} node_tests={} triangle_tests={} ratio={:.1}% -> {}",
        scene_name,
        mode.name(),
        stats.units(),
        stats.node_tests,
        stats.triangle_tests,
        ratio,
        args.out.display()
    );

    if let Some(report_path) = &args.report {
        let report = RunReport {
            scene: scene_name,
            mode,
            res: params.res.get(),
            ray_res: matches!(
                mode,
                CullingMode::RayMaskLut | CullingMode::CompressedBitTable
            )
            .then(|| params.res.get() * params.ray_factor),
            level: params.level,
            lut_size: params.lut_size,
            units: stats.units(),
            ratio_percent: ratio,
            node_tests: stats.node_tests,
            triangle_tests: stats.triangle_tests,
            bvh_build_ms: artifacts.timings.bvh_ms,
            mask_build_ms: artifacts.timings.mask_ms,
            lut_build_ms: artifacts.timings.lut_ms,
            search_naive_ms: None,
            search_fast_ms: None,
            render_ms,
            sah,
            masked_sah: masked,
        };
        write_report_file(&[report], report_path)?;
    }
    Ok(())
}

fn cmd_heatmap(args: HeatmapArgs) -> Result<()> {
    let (scene_name, triangles) = load_scene(&args.scene.scene)?;
    let (params, _) = artifact_params(&args.artifacts)?;
    let mode: CullingMode = args.mode.into();
    let mut scene = scene_config(&triangles, &args.common)?;
    scene.mesh_paths = args.scene.scene.clone();

    let artifacts = build_artifacts(&triangles, &params, mode)?;
    let culling = artifacts.culling(mode)?;
    let (image, stats) = render_heatmap(&artifacts.bvh, &culling, &scene, args.range_max)?;
    write_ppm_file(&image, &args.out)?;
    println!(
        "{}: mode={} total units={} (range 0..{}) -> {}",
        scene_name,
        mode.name(),
        stats.units(),
        args.range_max,
        args.out.display()
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let (scene_name, triangles) = load_scene(&args.scene.scene)?;
    let (params, levels) = artifact_params(&args.artifacts)?;
    let mut scene = scene_config(&triangles, &args.common)?;
    scene.mesh_paths = args.scene.scene.clone();

    let cfg = MatrixConfig {
        scene_name,
        res: params.res,
        levels,
        lut_size: params.lut_size,
        chunk_bits: params.chunk_bits,
        compressed_ray_factor: params.ray_factor,
    };
    let out = run_matrix(&triangles, &scene, &cfg)?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (stem, image) in &out.images {
            write_ppm_file(image, &dir.join(format!("{stem}.ppm")))?;
        }
    }
    write_report_file(&out.reports, &args.report)?;

    for r in &out.reports {
        println!(
            "{} R={} L={} {:<10} units={:>10} ratio={:>5.1}%",
            r.scene,
            r.res,
            r.level,
            format!(
                "{}{}",
                r.mode.name(),
                r.ray_res.map(|x| format!("({x})")).unwrap_or_default()
            ),
            r.units,
            r.ratio_percent
        );
    }
    println!("report -> {}", args.report.display());
    Ok(())
}

fn cmd_gen_hair(args: GenHairArgs) -> Result<()> {
    let params = HairParams {
        seed: args.seed,
        strands: args.strands,
        segments: args.segments,
        thickness: args.thickness,
    };
    let triangles = gen_hair_scene(&params);
    let mut w = BufWriter::new(
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?,
    );
    write_obj(&triangles, &mut w)?;
    w.flush()?;
    println!("{} triangles -> {}", triangles.len(), args.out.display());
    Ok(())
}

fn cmd_dump_bvh(args: DumpBvhArgs) -> Result<()> {
    let (_, triangles) = load_scene(&args.scene.scene)?;
    let (params, _) = artifact_params(&args.artifacts)?;
    let (layout, mode) = match args.layout {
        LayoutArg::Base => (NodeLayout::Base, CullingMode::IdealDda),
        LayoutArg::Inline => (NodeLayout::Inline, CullingMode::IdealDda),
        LayoutArg::Compressed => (NodeLayout::Compressed, CullingMode::CompressedBitTable),
    };
    let artifacts = build_artifacts(&triangles, &params, mode)?;
    let bytes = match layout {
        NodeLayout::Compressed => {
            let comp = artifacts.compressed.as_ref().unwrap();
            serialize_nodes(
                &artifacts.bvh,
                layout,
                Some((&comp.lut, comp.indices.as_slice())),
            )?
        }
        _ => serialize_nodes(&artifacts.bvh, layout, None)?,
    };
    std::fs::write(&args.out, &bytes).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "{} nodes, {} bytes -> {}",
        artifacts.bvh.nodes.len(),
        bytes.len(),
        args.out.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Render(args) => cmd_render(args),
        Cmd::Heatmap(args) => cmd_heatmap(args),
        Cmd::Bench(args) => cmd_bench(args),
        Cmd::GenHair(args) => cmd_gen_hair(args),
        Cmd::DumpBvh(args) => cmd_dump_bvh(args),
    }
}
