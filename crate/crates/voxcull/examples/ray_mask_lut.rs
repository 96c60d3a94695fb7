//! Build the six-dimensional ray-mask lookup table, query it against the
//! exact grid walk, and round-trip it through the binary dump.
//!
//!     cargo run --example ray_mask_lut

use std::time::Instant;

use voxcull::geometry::{Aabb, Vec3};
use voxcull::mask::{dda_ray_cells, GridFrame, MaskResolution};
use voxcull::ray_lut::{RayLutResolution, RayMaskLut};

fn main() {
    let r = MaskResolution::new(4).unwrap();
    for factor in [1u32, 2] {
        let ray_res = RayLutResolution::of_factor(r, factor).unwrap();
        let t = Instant::now();
        let lut = RayMaskLut::build(r, ray_res);
        println!(
            "R={} R_ray={}: {} entries, {} bytes, built in {:.1} ms",
            r.get(),
            ray_res.get(),
            lut.entry_count(),
            lut.memory_bytes(),
            t.elapsed().as_secs_f64() * 1e3
        );
    }

    let lut = RayMaskLut::build(r, RayLutResolution::of_factor(r, 1).unwrap());
    let b = Aabb::new(Vec3::new(-2.0, 0.0, 1.0), Vec3::new(3.0, 4.0, 5.0));
    let frame = GridFrame::new(b, r);
    let p0 = Vec3::new(-1.5, 0.5, 1.2);
    let p1 = Vec3::new(2.5, 3.5, 4.8);

    let exact = dda_ray_cells(&frame, p0, p1);
    let looked = lut.lookup(&b, p0, p1);
    println!(
        "exact walk popcount {}, LUT mask popcount {}, conservative: {}",
        exact.popcount(),
        looked.popcount(),
        exact.is_subset_of(&looked)
    );

    // The dump reloads bit-identically, so benchmarks can skip rebuilds.
    let mut bytes = Vec::new();
    lut.save(&mut bytes).unwrap();
    let reloaded = RayMaskLut::load(&mut bytes.as_slice()).unwrap();
    let same = (0..lut.entry_count()).all(|i| lut.entry_words(i) == reloaded.entry_words(i));
    println!(
        "dump is {} bytes, reload bit-identical: {same}",
        bytes.len()
    );
}
