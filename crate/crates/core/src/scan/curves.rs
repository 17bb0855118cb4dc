//! Baseline serialization curves on a quantized grid.

use serde::{Deserialize, Serialize};

use super::{CurveTag, ScanOrder};
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::rng;

pub const MAX_BITS: u32 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineCurve {
    Hilbert,
    TransHilbert,
    ZOrder,
    TransZOrder,
    Random(u64),
}

impl BaselineCurve {
    pub fn curve_tag(self) -> CurveTag {
        match self {
            Self::Hilbert => CurveTag::Hilbert,
            Self::TransHilbert => CurveTag::TransHilbert,
            Self::ZOrder => CurveTag::ZOrder,
            Self::TransZOrder => CurveTag::TransZOrder,
            Self::Random(_) => CurveTag::Random,
        }
    }
}

fn check_bits(bits: u32) -> Result<()> {
    if !(1..=MAX_BITS).contains(&bits) {
        return Err(Error::argument(format!(
            "quantization bits must be in 1..={MAX_BITS}, got {bits}"
        )));
    }
    Ok(())
}

/// Maps each axis of the cloud's bounding box onto `0..2^bits`. A flat axis
/// quantizes to 0.
pub fn quantize(cloud: &PointCloud, bits: u32) -> Result<Vec<[u32; 3]>> {
    check_bits(bits)?;
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in cloud.points() {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let cells = f64::from(1u32 << bits);
    let top = (1u32 << bits) - 1;
    Ok(cloud
        .points()
        .iter()
        .map(|p| {
            std::array::from_fn(|a| {
                let extent = hi[a] - lo[a];
                if extent > 0.0 {
                    (((p[a] - lo[a]) / extent * cells).floor() as u32).min(top)
                } else {
                    0
                }
            })
        })
        .collect())
}

/// Interleaves the coordinates bit by bit, most significant level first, with
/// `x` taking the highest bit of each triple.
pub fn morton_code(cell: [u32; 3], bits: u32) -> u64 {
    let mut code = 0u64;
    for level in (0..bits).rev() {
        for c in cell {
            code = (code << 1) | u64::from((c >> level) & 1);
        }
    }
    code
}

/// Index of `cell` along the 3D Hilbert curve of order `bits` (Skilling's
/// transpose construction).
pub fn hilbert_index(cell: [u32; 3], bits: u32) -> u64 {
    let mut x = cell;
    let top = 1u32 << (bits - 1);

    // inverse undo
    let mut q = top;
    while q > 1 {
        let p = q - 1;
        for i in 0..3 {
            if x[i] & q != 0 {
                x[0] ^= p;
            } else {
                let t = (x[0] ^ x[i]) & p;
                x[0] ^= t;
                x[i] ^= t;
            }
        }
        q >>= 1;
    }

    // gray encode
    for i in 1..3 {
        x[i] ^= x[i - 1];
    }
    let mut t = 0;
    q = top;
    while q > 1 {
        if x[2] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for v in &mut x {
        *v ^= t;
    }

    // transposed form, read out like a Morton code
    morton_code(x, bits)
}

fn transpose(cell: [u32; 3]) -> [u32; 3] {
    [cell[1], cell[2], cell[0]]
}

fn sort_by_key(keys: &[u64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by_key(|&i| (keys[i], i));
    order
}

pub fn baseline_scan(cloud: &PointCloud, curve: BaselineCurve, bits: u32) -> Result<ScanOrder> {
    check_bits(bits)?;
    let permutation = match curve {
        BaselineCurve::Random(seed) => rng::permutation(&mut rng::seeded(seed), cloud.len()),
        _ => {
            let cells = quantize(cloud, bits)?;
            let keys: Vec<u64> = cells
                .into_iter()
                .map(|c| match curve {
                    BaselineCurve::Hilbert => hilbert_index(c, bits),
                    BaselineCurve::TransHilbert => hilbert_index(transpose(c), bits),
                    BaselineCurve::ZOrder => morton_code(c, bits),
                    BaselineCurve::TransZOrder => morton_code(transpose(c), bits),
                    BaselineCurve::Random(_) => unreachable!(),
                })
                .collect();
            sort_by_key(&keys)
        }
    };
    ScanOrder::new(permutation, curve.curve_tag())
}
