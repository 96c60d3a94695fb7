//! Assembles the acceleration artifacts a culling mode needs (BVH, masks,
//! ray LUT, compression tables) with build timings for reporting.

use std::time::Instant;

use crate::bvh::{build_bvh, ApproxLevel, BuildConfig, BuildError, Bvh, BVH_WIDTH};
use crate::compress::{
    compress_bvh_masks, select_compression_lut, CompressionLut, RayObjectBitTable,
    RequirementTables, MAX_LUT_MASKS,
};
use crate::geometry::Triangle;
use crate::hierarchy::{attach_masks, FillingPatternTable};
use crate::mask::MaskResolution;
use crate::ray_lut::{InvalidRayResolution, RayLutResolution, RayMaskLut};
use crate::traverse::{Culling, CullingMode, CullingSetupError};

#[derive(Clone, Copy, Debug)]
pub struct ArtifactParams {
    pub res: MaskResolution,
    /// Ray LUT factor: 1 for `R_ray = R`, 2 for `R_ray = 2R`.
    pub ray_factor: u32,
    pub level: ApproxLevel,
    /// Compression dictionary capacity K (1..=256).
    pub lut_size: usize,
    /// Requirement-table chunk width b (1..=16).
    pub chunk_bits: u32,
}

impl ArtifactParams {
    pub fn new(res: MaskResolution) -> ArtifactParams {
        ArtifactParams {
            res,
            ray_factor: 1,
            level: ApproxLevel::Finite(3),
            lut_size: 256,
            chunk_bits: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BuildTimings {
    pub bvh_ms: f64,
    pub mask_ms: f64,
    pub lut_ms: f64,
}

pub struct CompressedArtifacts {
    pub lut: CompressionLut,
    pub tables: RequirementTables,
    pub indices: Vec<[u8; BVH_WIDTH]>,
    pub bit_table: RayObjectBitTable,
}

pub struct SceneArtifacts {
    pub bvh: Bvh,
    pub ray_lut: Option<RayMaskLut>,
    pub compressed: Option<CompressedArtifacts>,
    pub timings: BuildTimings,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    RayRes(#[from] InvalidRayResolution),
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error(transparent)]
    Culling(#[from] CullingSetupError),
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn validate_params(params: &ArtifactParams) -> Result<(), PipelineError> {
    if !(params.ray_factor == 1 || params.ray_factor == 2) {
        return Err(PipelineError::BadParam(format!(
            "ray factor {} (expected 1 or 2)",
            params.ray_factor
        )));
    }
    if params.lut_size < 1 || params.lut_size > MAX_LUT_MASKS {
        return Err(PipelineError::BadParam(format!(
            "lut size {} (expected 1..={MAX_LUT_MASKS})",
            params.lut_size
        )));
    }
    if !(1..=16).contains(&params.chunk_bits) {
        return Err(PipelineError::BadParam(format!(
            "chunk bits {} (expected 1..=16)",
            params.chunk_bits
        )));
    }
    if let ApproxLevel::Finite(0) = params.level {
        return Err(PipelineError::BadParam("level must be >= 1".into()));
    }
    Ok(())
}

/// Build everything `mode` needs (and nothing more).
pub fn build_artifacts(
    triangles: &[Triangle],
    params: &ArtifactParams,
    mode: CullingMode,
) -> Result<SceneArtifacts, PipelineError> {
    validate_params(params)?;
    let mut timings = BuildTimings::default();

    let t = Instant::now();
    let mut config = BuildConfig::new(params.res);
    config.level = params.level;
    let mut bvh = build_bvh(triangles, config)?;
    timings.bvh_ms = ms_since(t);

    if mode != CullingMode::Off {
        let t = Instant::now();
        let table = FillingPatternTable::new(params.res);
        attach_masks(&mut bvh, params.level, &table);
        timings.mask_ms = ms_since(t);
    }

    let ray_lut = match mode {
        CullingMode::RayMaskLut | CullingMode::CompressedBitTable => {
            let t = Instant::now();
            let ray_res = RayLutResolution::of_factor(params.res, params.ray_factor)?;
            let lut = RayMaskLut::build(params.res, ray_res);
            timings.lut_ms += ms_since(t);
            Some(lut)
        }
        _ => None,
    };

    let compressed = if mode == CullingMode::CompressedBitTable {
        let t = Instant::now();
        let comp = build_compression(&bvh, ray_lut.as_ref().unwrap(), params);
        timings.lut_ms += ms_since(t);
        Some(comp)
    } else {
        None
    };

    Ok(SceneArtifacts {
        bvh,
        ray_lut,
        compressed,
        timings,
    })
}

/// Compression artifacts for an already mask-attached BVH.
pub fn build_compression(
    bvh: &Bvh,
    ray_lut: &RayMaskLut,
    params: &ArtifactParams,
) -> CompressedArtifacts {
    let lut = select_compression_lut(bvh, params.lut_size);
    let tables = RequirementTables::build(&lut, params.res, params.chunk_bits);
    let indices = compress_bvh_masks(bvh, &tables);
    let bit_table = RayObjectBitTable::build(ray_lut, &lut);
    CompressedArtifacts {
        lut,
        tables,
        indices,
        bit_table,
    }
}

impl SceneArtifacts {
    /// Culling context over these artifacts.
    pub fn culling(&self, mode: CullingMode) -> Result<Culling<'_>, CullingSetupError> {
        Culling::for_mode(
            mode,
            &self.bvh,
            self.ray_lut.as_ref(),
            self.compressed
                .as_ref()
                .map(|c| (c.indices.as_slice(), &c.bit_table)),
        )
    }
}
