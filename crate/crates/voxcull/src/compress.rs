//! Object-mask compression: a small dictionary of canonical masks selected by
//! SAH importance, requirement tables for fast conservative search, and the
//! precomputed ray-mask x dictionary intersection bit table.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bvh::{Bvh, ChildRef, BVH_WIDTH};
use crate::mask::{mask_and_words_nonzero, MaskResolution, OccupancyMask};
use crate::ray_lut::RayMaskLut;

/// Dictionary capacity that keeps per-slot indices one byte wide.
pub const MAX_LUT_MASKS: usize = 256;

/// Ordered dictionary of canonical masks, ascending by set-bit count (ties by
/// raw bit-pattern value). Always contains the all-ones mask so a
/// conservative superset exists for every query.
pub struct CompressionLut {
    res: MaskResolution,
    masks: Vec<OccupancyMask>,
}

impl CompressionLut {
    #[inline]
    pub fn res(&self) -> MaskResolution {
        self.res
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    #[inline]
    pub fn masks(&self) -> &[OccupancyMask] {
        &self.masks
    }

    #[inline]
    pub fn mask(&self, index: usize) -> &OccupancyMask {
        &self.masks[index]
    }

    /// Build a dictionary directly from a mask list (mainly for tests and
    /// tools). Deduplicates, forces the all-ones mask, sorts.
    pub fn from_masks(
        res: MaskResolution,
        masks: impl IntoIterator<Item = OccupancyMask>,
    ) -> CompressionLut {
        let mut set: Vec<OccupancyMask> = masks.into_iter().collect();
        set.push(OccupancyMask::full(res));
        set.sort_by(|a, b| a.cmp_value(b));
        set.dedup();
        sort_dictionary(&mut set);
        assert!(
            set.len() <= MAX_LUT_MASKS,
            "dictionary exceeds {MAX_LUT_MASKS} masks"
        );
        CompressionLut { res, masks: set }
    }
}

fn sort_dictionary(masks: &mut [OccupancyMask]) {
    masks.sort_by(|a, b| a.popcount().cmp(&b.popcount()).then_with(|| a.cmp_value(b)));
}

/// Pick the dictionary from a mask-attached BVH: deduplicate slot masks,
/// accumulate the importance `SA(N) * popcount / R^3` of every node carrying
/// each distinct mask, keep the top `k - 1`, and force-insert the all-ones
/// fallback. `k` is capped at 256 so indices stay one byte.
pub fn select_compression_lut(bvh: &Bvh, k: usize) -> CompressionLut {
    assert!(
        bvh.masks_attached(),
        "attach masks before selecting a compression LUT"
    );
    let k = k.clamp(1, MAX_LUT_MASKS);
    let res = bvh.config.res;
    let cells = res.cell_count() as f64;

    let mut importance: HashMap<OccupancyMask, f64> = HashMap::new();
    for node in &bvh.nodes {
        for slot in 0..BVH_WIDTH {
            if matches!(node.child[slot], ChildRef::Empty) {
                continue;
            }
            let mask = node.child_mask[slot];
            if mask.is_zero() {
                continue;
            }
            let sa = node.child_aabb[slot].to_aabb().surface_area();
            let imp = sa * mask.popcount() as f64 / cells;
            *importance.entry(mask).or_insert(0.0) += imp;
        }
    }

    let mut ranked: Vec<(OccupancyMask, f64)> = importance.into_iter().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp_value(&b.0)));
    ranked.truncate(k.saturating_sub(1));

    let mut masks: Vec<OccupancyMask> = ranked.into_iter().map(|(m, _)| m).collect();
    let full = OccupancyMask::full(res);
    if !masks.contains(&full) {
        masks.push(full);
    }
    sort_dictionary(&mut masks);
    CompressionLut { res, masks }
}

/// Bit set over dictionary indices (up to 256 candidates).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CandidateSet(pub [u64; 4]);

impl CandidateSet {
    fn all_below(k: usize) -> CandidateSet {
        let mut words = [0u64; 4];
        for (w, word) in words.iter_mut().enumerate() {
            let remaining = k.saturating_sub(w * 64);
            *word = match remaining {
                0 => 0,
                r if r >= 64 => u64::MAX,
                r => (1u64 << r) - 1,
            };
        }
        CandidateSet(words)
    }

    #[inline]
    fn and_assign(&mut self, o: &CandidateSet) {
        for w in 0..4 {
            self.0[w] &= o.0[w];
        }
    }

    #[inline]
    fn set(&mut self, j: usize) {
        self.0[j >> 6] |= 1u64 << (j & 63);
    }

    /// Index of the least significant set bit.
    #[inline]
    pub fn lsb(&self) -> Option<usize> {
        for (w, &word) in self.0.iter().enumerate() {
            if word != 0 {
                return Some(w * 64 + word.trailing_zeros() as usize);
            }
        }
        None
    }
}

/// Per-chunk requirement tables: for every `b`-bit pattern of every chunk,
/// the set of dictionary masks containing all of the pattern's bits. The
/// chunk-wise AND of the looked-up sets is the conservative candidate list.
pub struct RequirementTables {
    chunk_bits: u32,
    chunks: usize,
    entries_per_chunk: usize,
    k: usize,
    tables: Vec<CandidateSet>,
}

impl RequirementTables {
    pub fn build(lut: &CompressionLut, res: MaskResolution, chunk_bits: u32) -> RequirementTables {
        assert!(
            (1..=16).contains(&chunk_bits),
            "chunk width {chunk_bits} out of range (1..=16)"
        );
        let k = lut.len();
        assert!(k <= MAX_LUT_MASKS);
        let bits = res.cell_count();
        let chunks = bits.div_ceil(chunk_bits as usize);
        let entries_per_chunk = 1usize << chunk_bits;

        // Chunk values of every dictionary mask, gathered once.
        let chunk_values: Vec<u64> = (0..chunks)
            .flat_map(|c| {
                lut.masks()
                    .iter()
                    .map(move |m| extract_bits(m, c * chunk_bits as usize, chunk_bits))
            })
            .collect();

        let mut tables = vec![CandidateSet([0; 4]); chunks * entries_per_chunk];
        for c in 0..chunks {
            let values = &chunk_values[c * k..(c + 1) * k];
            for pattern in 0..entries_per_chunk as u64 {
                let mut set = CandidateSet([0; 4]);
                for (j, &v) in values.iter().enumerate() {
                    if pattern & !v == 0 {
                        set.set(j);
                    }
                }
                tables[c * entries_per_chunk + pattern as usize] = set;
            }
        }
        RequirementTables {
            chunk_bits,
            chunks,
            entries_per_chunk,
            k,
            tables,
        }
    }

    #[inline]
    pub fn chunk_bits(&self) -> u32 {
        self.chunk_bits
    }

    #[inline]
    pub fn chunks(&self) -> usize {
        self.chunks
    }

    #[inline]
    pub fn dictionary_len(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn entry(&self, chunk: usize, pattern: u64) -> &CandidateSet {
        &self.tables[chunk * self.entries_per_chunk + pattern as usize]
    }
}

/// Read `b` bits of a mask starting at `offset`.
#[inline]
fn extract_bits(mask: &OccupancyMask, offset: usize, b: u32) -> u64 {
    let words = mask.words();
    let w = offset >> 6;
    let s = offset & 63;
    let mut v = words[w] >> s;
    if s + b as usize > 64 && w + 1 < words.len() {
        v |= words[w + 1] << (64 - s);
    }
    if b == 64 {
        v
    } else {
        v & ((1u64 << b) - 1)
    }
}

/// Fast conservative search: AND the per-chunk requirement sets and return
/// the least significant surviving index. Because the dictionary is sorted by
/// set-bit count, that index is the tightest conservative superset; the
/// all-ones fallback guarantees a result.
pub fn index_of_optimal_mask(mask: &OccupancyMask, tables: &RequirementTables) -> usize {
    let b = tables.chunk_bits();
    let mut candidates = CandidateSet::all_below(tables.dictionary_len());
    for c in 0..tables.chunks() {
        let pattern = extract_bits(mask, c * b as usize, b);
        candidates.and_assign(tables.entry(c, pattern));
    }
    candidates
        .lsb()
        .expect("dictionary must contain the all-ones mask")
}

/// Reference linear search: scan the sorted dictionary for the first
/// conservative superset. Used for the search-time comparison the benchmark
/// reports.
pub fn brute_force_optimal_mask(mask: &OccupancyMask, lut: &CompressionLut) -> usize {
    for (j, m) in lut.masks().iter().enumerate() {
        if mask.is_subset_of(m) {
            return j;
        }
    }
    unreachable!("dictionary must contain the all-ones mask")
}

/// Per-node dictionary indices for every child slot. Empty slots store 0.
pub fn compress_bvh_masks(bvh: &Bvh, tables: &RequirementTables) -> Vec<[u8; BVH_WIDTH]> {
    assert!(bvh.masks_attached());
    assert!(tables.dictionary_len() <= MAX_LUT_MASKS);
    bvh.nodes
        .iter()
        .map(|node| {
            let mut out = [0u8; BVH_WIDTH];
            for slot in 0..BVH_WIDTH {
                if matches!(node.child[slot], ChildRef::Empty) {
                    continue;
                }
                out[slot] = index_of_optimal_mask(&node.child_mask[slot], tables) as u8;
            }
            out
        })
        .collect()
}

/// Precomputed `ray-mask index x dictionary index -> nonzero AND` bit table.
pub struct RayObjectBitTable {
    k: usize,
    row_words: usize,
    bits: Vec<u64>,
}

impl RayObjectBitTable {
    pub fn build(ray_lut: &RayMaskLut, comp: &CompressionLut) -> RayObjectBitTable {
        assert_eq!(ray_lut.res(), comp.res(), "resolution mismatch");
        let k = comp.len();
        let rows = ray_lut.entry_count();
        let row_words = k.div_ceil(64);
        let mut bits = vec![0u64; rows * row_words];
        bits.par_chunks_mut(row_words)
            .enumerate()
            .for_each(|(i, row)| {
                let entry = ray_lut.entry_words(i);
                for (j, mask) in comp.masks().iter().enumerate() {
                    if mask_and_words_nonzero(mask, entry) {
                        row[j >> 6] |= 1u64 << (j & 63);
                    }
                }
            });
        RayObjectBitTable { k, row_words, bits }
    }

    /// Intersection bit for (ray-mask LUT linear index, dictionary index).
    #[inline]
    pub fn get(&self, ray_index: usize, mask_index: usize) -> bool {
        debug_assert!(mask_index < self.k);
        let word = self.bits[ray_index * self.row_words + (mask_index >> 6)];
        (word >> (mask_index & 63)) & 1 != 0
    }

    pub fn size_bytes(&self) -> usize {
        self.bits.len() * 8
    }
}
