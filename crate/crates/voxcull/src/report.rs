//! Benchmark reports and their CSV form.

use std::io::Write;
use std::path::Path;

use crate::bvh::ApproxLevel;
use crate::traverse::CullingMode;

pub const REPORT_HEADER: &str = "scene,mode,R,R_ray,L,K,units,ratio_percent,node_tests,\
triangle_tests,bvh_build_ms,mask_build_ms,lut_build_ms,search_naive_ms,search_fast_ms,\
render_ms,sah,masked_sah";

/// One benchmark run. `ratio_percent` is relative to the `off` run of the
/// same scene and level (100.0 for `off` itself).
#[derive(Clone, Debug)]
pub struct RunReport {
    pub scene: String,
    pub mode: CullingMode,
    pub res: u32,
    pub ray_res: Option<u32>,
    pub level: ApproxLevel,
    pub lut_size: usize,
    pub units: u64,
    pub ratio_percent: f64,
    pub node_tests: u64,
    pub triangle_tests: u64,
    pub bvh_build_ms: f64,
    pub mask_build_ms: f64,
    pub lut_build_ms: f64,
    pub search_naive_ms: Option<f64>,
    pub search_fast_ms: Option<f64>,
    pub render_ms: f64,
    pub sah: f64,
    pub masked_sah: f64,
}

fn opt_u32(v: Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_ms(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

impl RunReport {
    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.1},{},{},{:.3},{:.3},{:.3},{},{},{:.3},{:.9},{:.9}",
            self.scene,
            self.mode.name(),
            self.res,
            opt_u32(self.ray_res),
            self.level,
            self.lut_size,
            self.units,
            self.ratio_percent,
            self.node_tests,
            self.triangle_tests,
            self.bvh_build_ms,
            self.mask_build_ms,
            self.lut_build_ms,
            opt_ms(self.search_naive_ms),
            opt_ms(self.search_fast_ms),
            self.render_ms,
            self.sah,
            self.masked_sah,
        )
    }
}

pub fn emit_report<W: Write>(reports: &[RunReport], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn write_report_file(reports: &[RunReport], path: &Path) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    emit_report(reports, &mut file)
}
