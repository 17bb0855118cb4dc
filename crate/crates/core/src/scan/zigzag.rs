//! 3D zigzag scan.
//!
//! A plane scan layers the cloud by rank along the axis normal to the plane,
//! sorts each layer along the first in-plane axis, cuts it into segments and
//! sorts the segments along the second in-plane axis, ascending for even
//! segments and descending for odd ones. Layers are concatenated bottom-up.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{CurveTag, ScanOrder};
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    Xy,
    Xz,
    Yz,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::Xy, Plane::Xz, Plane::Yz];

    /// (layering axis, in-layer sort axis, alternating axis)
    pub fn axes(self) -> (Axis, Axis, Axis) {
        match self {
            Plane::Xy => (Axis::Z, Axis::X, Axis::Y),
            Plane::Xz => (Axis::Y, Axis::X, Axis::Z),
            Plane::Yz => (Axis::X, Axis::Y, Axis::Z),
        }
    }

    /// Share of the layer budget `m`: ceil(m/3), floor(m/3) + [m mod 3 >= 1], floor(m/3).
    pub fn layer_count(self, budget: usize) -> usize {
        match self {
            Plane::Xy => budget.div_ceil(3),
            Plane::Xz => budget / 3 + usize::from(budget % 3 >= 1),
            Plane::Yz => budget / 3,
        }
    }

    pub fn curve_tag(self) -> CurveTag {
        match self {
            Plane::Xy => CurveTag::ZigzagXy,
            Plane::Xz => CurveTag::ZigzagXz,
            Plane::Yz => CurveTag::ZigzagYz,
        }
    }
}

impl fmt::Display for Plane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Plane::Xy => "xy",
            Plane::Xz => "xz",
            Plane::Yz => "yz",
        })
    }
}

impl FromStr for Plane {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xy" => Ok(Plane::Xy),
            "xz" => Ok(Plane::Xz),
            "yz" => Ok(Plane::Yz),
            other => Err(Error::argument(format!("unknown plane `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaneChoice {
    Xy,
    Xz,
    Yz,
    SeededRandom(u64),
}

impl PlaneChoice {
    pub fn resolve(self) -> Plane {
        match self {
            PlaneChoice::Xy => Plane::Xy,
            PlaneChoice::Xz => Plane::Xz,
            PlaneChoice::Yz => Plane::Yz,
            PlaneChoice::SeededRandom(seed) => Plane::ALL[rng::seeded(seed).random_range(0..3)],
        }
    }
}

impl From<Plane> for PlaneChoice {
    fn from(plane: Plane) -> Self {
        match plane {
            Plane::Xy => PlaneChoice::Xy,
            Plane::Xz => PlaneChoice::Xz,
            Plane::Yz => PlaneChoice::Yz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanParams {
    /// Total layer budget shared by the three planes.
    pub layer_budget: usize,
    /// Target number of points per segment.
    pub segment_size: usize,
    /// Upper bound on segments per layer.
    pub max_segments: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            layer_budget: 12,
            segment_size: 4,
            max_segments: 16,
        }
    }
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        if self.layer_budget < 3 {
            return Err(Error::validation("layer budget must be at least 3"));
        }
        if self.segment_size == 0 || self.max_segments == 0 {
            return Err(Error::validation(
                "segment size and max segments must be positive",
            ));
        }
        Ok(())
    }

    /// Segments for a layer of `len` points, at least one.
    pub fn segment_count(&self, len: usize) -> usize {
        (len / self.segment_size).min(self.max_segments).max(1)
    }
}

fn ascending(cloud: &PointCloud, axis: Axis) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    let a = axis.index();
    move |&i, &j| {
        cloud.point(i)[a]
            .total_cmp(&cloud.point(j)[a])
            .then(i.cmp(&j))
    }
}

fn descending(cloud: &PointCloud, axis: Axis) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    let a = axis.index();
    move |&i, &j| {
        cloud.point(j)[a]
            .total_cmp(&cloud.point(i)[a])
            .then(i.cmp(&j))
    }
}

/// Splits `len` items into `parts` contiguous runs, the first `len % parts`
/// one item longer.
fn split_sizes(len: usize, parts: usize) -> impl Iterator<Item = usize> {
    let base = len / parts;
    let extra = len % parts;
    (0..parts).map(move |i| base + usize::from(i < extra))
}

/// Rank-slices the cloud along `axis` into `num_layers` contiguous layers.
pub fn layer_partition(
    cloud: &PointCloud,
    axis: Axis,
    num_layers: usize,
) -> Result<Vec<Vec<usize>>> {
    let n = cloud.len();
    if num_layers == 0 || num_layers > n {
        return Err(Error::argument(format!(
            "cannot split {n} points into {num_layers} layers"
        )));
    }
    let mut sorted: Vec<usize> = (0..n).collect();
    sorted.sort_by(ascending(cloud, axis));
    let mut rest = sorted.as_slice();
    Ok(split_sizes(n, num_layers)
        .map(|size| {
            let (layer, tail) = rest.split_at(size);
            rest = tail;
            layer.to_vec()
        })
        .collect())
}

pub fn zigzag_plane_scan(
    cloud: &PointCloud,
    plane: Plane,
    params: &ScanParams,
) -> Result<ScanOrder> {
    params.validate()?;
    let (layer_axis, sort_axis, alt_axis) = plane.axes();
    let num_layers = plane.layer_count(params.layer_budget).min(cloud.len());
    let mut path = Vec::with_capacity(cloud.len());
    for mut layer in layer_partition(cloud, layer_axis, num_layers)? {
        layer.sort_by(ascending(cloud, sort_axis));
        let len = layer.len();
        let mut rest = layer.as_mut_slice();
        for (s, size) in split_sizes(len, params.segment_count(len)).enumerate() {
            let (segment, tail) = std::mem::take(&mut rest).split_at_mut(size);
            rest = tail;
            if s % 2 == 0 {
                segment.sort_by(ascending(cloud, alt_axis));
            } else {
                segment.sort_by(descending(cloud, alt_axis));
            }
            path.extend_from_slice(segment);
        }
    }
    ScanOrder::new(path, plane.curve_tag())
}

/// Zigzag scan on a fixed or seeded-random plane; the chosen plane is
/// recorded in the curve tag.
pub fn zigzag_scan_3d(
    cloud: &PointCloud,
    params: &ScanParams,
    choice: PlaneChoice,
) -> Result<ScanOrder> {
    zigzag_plane_scan(cloud, choice.resolve(), params)
}
