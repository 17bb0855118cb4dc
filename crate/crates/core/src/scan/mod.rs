//! Point serialization orders.
//!
//! Every order is a [`ScanOrder`]: a validated permutation of point indices
//! tagged with the curve that produced it.

mod curves;
mod zigzag;

pub use curves::{baseline_scan, hilbert_index, morton_code, quantize, BaselineCurve, MAX_BITS};
pub use zigzag::{
    layer_partition, zigzag_plane_scan, zigzag_scan_3d, Axis, Plane, PlaneChoice, ScanParams,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::{distance, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveTag {
    ZigzagXy,
    ZigzagXz,
    ZigzagYz,
    Hilbert,
    TransHilbert,
    ZOrder,
    TransZOrder,
    Random,
}

impl CurveTag {
    pub const ALL: [CurveTag; 8] = [
        Self::ZigzagXy,
        Self::ZigzagXz,
        Self::ZigzagYz,
        Self::Hilbert,
        Self::TransHilbert,
        Self::ZOrder,
        Self::TransZOrder,
        Self::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::ZigzagXy => "zigzag_xy",
            Self::ZigzagXz => "zigzag_xz",
            Self::ZigzagYz => "zigzag_yz",
            Self::Hilbert => "hilbert",
            Self::TransHilbert => "trans_hilbert",
            Self::ZOrder => "z_order",
            Self::TransZOrder => "trans_z_order",
            Self::Random => "random",
        }
    }

    pub fn is_zigzag(self) -> bool {
        matches!(self, Self::ZigzagXy | Self::ZigzagXz | Self::ZigzagYz)
    }
}

impl fmt::Display for CurveTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CurveTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown curve `{s}`")))
    }
}

/// Checks that `permutation` is a bijection on `0..n`.
pub fn validate_permutation(permutation: &[usize], n: usize) -> Result<()> {
    if permutation.len() != n {
        return Err(Error::validation(format!(
            "order has {} entries for {n} points",
            permutation.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in permutation {
        if i >= n {
            return Err(Error::validation(format!(
                "index {i} out of range for {n} points"
            )));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::validation(format!("index {i} appears twice")));
        }
    }
    Ok(())
}

/// A bijective ordering of `0..n` produced by one serialization curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScanOrderRepr", into = "ScanOrderRepr")]
pub struct ScanOrder {
    permutation: Vec<usize>,
    curve_tag: CurveTag,
}

#[derive(Serialize, Deserialize)]
struct ScanOrderRepr {
    curve_tag: CurveTag,
    n: usize,
    permutation: Vec<usize>,
}

impl TryFrom<ScanOrderRepr> for ScanOrder {
    type Error = Error;

    fn try_from(repr: ScanOrderRepr) -> Result<Self> {
        validate_permutation(&repr.permutation, repr.n)?;
        ScanOrder::new(repr.permutation, repr.curve_tag)
    }
}

impl From<ScanOrder> for ScanOrderRepr {
    fn from(order: ScanOrder) -> Self {
        ScanOrderRepr {
            curve_tag: order.curve_tag,
            n: order.permutation.len(),
            permutation: order.permutation,
        }
    }
}

impl ScanOrder {
    pub fn new(permutation: Vec<usize>, curve_tag: CurveTag) -> Result<Self> {
        let n = permutation.len();
        validate_permutation(&permutation, n)?;
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        Ok(Self {
            permutation,
            curve_tag,
        })
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn curve_tag(&self) -> CurveTag {
        self.curve_tag
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }

    /// Little-endian `u32` count followed by `u32` indices.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * (self.len() + 1));
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        for &i in &self.permutation {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
        out
    }

    /// Inverse of [`ScanOrder::to_bytes`]; the binary form does not carry the tag.
    pub fn from_bytes(bytes: &[u8], curve_tag: CurveTag) -> Result<Self> {
        let word =
            |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes"));
        if bytes.len() < 4 || !bytes.len().is_multiple_of(4) {
            return Err(Error::validation(format!(
                "{} bytes is not a packed u32 order",
                bytes.len()
            )));
        }
        let n = word(0) as usize;
        if bytes.len() != 4 * (n + 1) {
            return Err(Error::validation(format!(
                "header announces {n} indices but {} follow",
                bytes.len() / 4 - 1
            )));
        }
        Self::new((1..=n).map(|i| word(i) as usize).collect(), curve_tag)
    }

    /// Points of `cloud` in scan order.
    pub fn apply(&self, cloud: &PointCloud) -> Result<PointCloud> {
        validate_permutation(&self.permutation, cloud.len())?;
        cloud.select(&self.permutation)
    }
}

/// Statistics of the Euclidean steps between consecutive points of an order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalityMetrics {
    pub mean_step: f64,
    pub max_step: f64,
    pub total_path_length: f64,
}

pub fn locality_metrics(cloud: &PointCloud, order: &[usize]) -> Result<LocalityMetrics> {
    validate_permutation(order, cloud.len())?;
    let steps = order.len().saturating_sub(1);
    let (total, max) = order
        .windows(2)
        .map(|w| distance(cloud.point(w[0]), cloud.point(w[1])))
        .fold((0.0, 0.0f64), |(sum, max), d| (sum + d, max.max(d)));
    Ok(LocalityMetrics {
        mean_step: if steps == 0 {
            0.0
        } else {
            total / steps as f64
        },
        max_step: max,
        total_path_length: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> PointCloud {
        PointCloud::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap()
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(ScanOrder::new(vec![0, 0], CurveTag::Random).is_err());
        assert!(ScanOrder::new(vec![0, 2], CurveTag::Random).is_err());
        assert!(ScanOrder::new(vec![], CurveTag::Random).is_err());
        assert!(ScanOrder::new(vec![1, 0], CurveTag::Random).is_ok());
    }

    #[test]
    fn json_shape() {
        let order = ScanOrder::new(vec![2, 0, 1], CurveTag::TransZOrder).unwrap();
        let json = serde_json::to_string(&order).unwrap();
        assert_eq!(
            json,
            r#"{"curve_tag":"trans_z_order","n":3,"permutation":[2,0,1]}"#
        );
        assert_eq!(serde_json::from_str::<ScanOrder>(&json).unwrap(), order);
        let bad = r#"{"curve_tag":"random","n":3,"permutation":[2,0,0]}"#;
        assert!(serde_json::from_str::<ScanOrder>(bad).is_err());
        let short = r#"{"curve_tag":"random","n":4,"permutation":[2,0,1]}"#;
        assert!(serde_json::from_str::<ScanOrder>(short).is_err());
    }

    #[test]
    fn binary_form() {
        let order = ScanOrder::new(vec![1, 2, 0], CurveTag::Hilbert).unwrap();
        let bytes = order.to_bytes();
        assert_eq!(bytes, [3, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(
            ScanOrder::from_bytes(&bytes, CurveTag::Hilbert).unwrap(),
            order
        );
        assert!(ScanOrder::from_bytes(&bytes[..12], CurveTag::Hilbert).is_err());
        assert!(ScanOrder::from_bytes(&bytes[..3], CurveTag::Hilbert).is_err());
    }

    #[test]
    fn tag_names_round_trip() {
        for tag in CurveTag::ALL {
            assert_eq!(tag.as_str().parse::<CurveTag>().unwrap(), tag);
            assert_eq!(serde_json::to_string(&tag).unwrap(), format!("\"{tag}\""));
        }
    }

    #[test]
    fn locality_examples() {
        let single = PointCloud::new(vec![[0.5; 3]]).unwrap();
        assert_eq!(
            locality_metrics(&single, &[0]).unwrap(),
            LocalityMetrics {
                mean_step: 0.0,
                max_step: 0.0,
                total_path_length: 0.0
            }
        );
        let m = locality_metrics(&line(), &[0, 1, 2]).unwrap();
        assert_eq!(
            (m.mean_step, m.max_step, m.total_path_length),
            (1.0, 1.0, 2.0)
        );
        let m = locality_metrics(&line(), &[0, 2, 1]).unwrap();
        assert_eq!(
            (m.mean_step, m.max_step, m.total_path_length),
            (1.5, 2.0, 3.0)
        );
        assert!(matches!(
            locality_metrics(&line(), &[0, 1, 1]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            locality_metrics(&line(), &[0, 1]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn apply_reorders_points() {
        let order = ScanOrder::new(vec![2, 0, 1], CurveTag::Random).unwrap();
        assert_eq!(order.apply(&line()).unwrap().point(0), &[2.0, 0.0, 0.0]);
    }
}
