//! Seeded synthetic clouds so every experiment runs without external data.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Cube,
    Sphere,
    Blobs,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 3] = [Self::Cube, Self::Sphere, Self::Blobs];

    pub fn generate(self, n: usize, seed: u64) -> PointCloud {
        match self {
            Self::Cube => uniform_cube(n, seed),
            Self::Sphere => sphere_surface(n, seed),
            Self::Blobs => gaussian_blobs(n, 4, seed),
        }
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Self::Cube),
            "sphere" => Ok(Self::Sphere),
            "blobs" => Ok(Self::Blobs),
            other => Err(Error::argument(format!(
                "unknown synthetic cloud `{other}`"
            ))),
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cube => "cube",
            Self::Sphere => "sphere",
            Self::Blobs => "blobs",
        })
    }
}

fn build(points: Vec<Point3>) -> PointCloud {
    PointCloud::new(points).expect("generators emit at least one finite point")
}

/// `n` points uniform in `[0, 1)^3`.
pub fn uniform_cube(n: usize, seed: u64) -> PointCloud {
    let mut rng = rng::seeded(seed);
    build(
        (0..n.max(1))
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect(),
    )
}

/// `n` points uniform on the unit sphere.
pub fn sphere_surface(n: usize, seed: u64) -> PointCloud {
    let mut rng = rng::seeded(seed);
    let points = (0..n.max(1))
        .map(|_| loop {
            let v: [f64; 3] = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm > 1e-12 {
                break v.map(|c| c / norm);
            }
        })
        .collect();
    build(points)
}

/// `n` points drawn from `blobs` isotropic Gaussians with random centers in
/// `[-1, 1)^3` and standard deviation 0.15.
pub fn gaussian_blobs(n: usize, blobs: usize, seed: u64) -> PointCloud {
    let mut rng = rng::seeded(seed);
    let centers: Vec<Point3> = (0..blobs.max(1))
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    let points = (0..n.max(1))
        .map(|i| {
            let c = centers[i % centers.len()];
            c.map(|v| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                v + 0.15 * noise
            })
        })
        .collect();
    build(points)
}
