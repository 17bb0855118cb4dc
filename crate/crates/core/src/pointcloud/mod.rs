//! Point clouds and tokenization.

mod encoder;
mod io;
mod sampling;
mod tokenize;

pub use encoder::{encode_tokens, DenseLayer, EncoderWeights};
pub use io::{load_pointcloud, parse_f32le, parse_ply_ascii, parse_xyz, write_xyz, CloudFormat};
pub use sampling::{farthest_point_sampling, farthest_point_sampling_from, knn_group, TokenGroup};
pub use tokenize::{tokenize, Tokenized, TokenizerConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

pub fn squared_distance(a: &Point3, b: &Point3) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Ordered, non-empty set of finite 3D points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point3>", into = "Vec<Point3>")]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(i) = points.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::validation(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &Point3 {
        &self.points[index]
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    /// Sub-cloud made of `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let points = indices
            .iter()
            .map(|&i| {
                self.points.get(i).copied().ok_or_else(|| {
                    Error::argument(format!("index {i} out of range for {} points", self.len()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(points)
    }

    pub fn centroid(&self) -> Point3 {
        let n = self.points.len() as f64;
        let mut sum = [0.0; 3];
        for p in &self.points {
            for (s, c) in sum.iter_mut().zip(p) {
                *s += c;
            }
        }
        sum.map(|s| s / n)
    }

    /// Translate the centroid to the origin and scale so the farthest point has
    /// unit norm. A cloud of identical points collapses to the origin.
    pub fn normalize_unit_sphere(&self) -> Self {
        let first = self.points[0];
        if self.points.iter().all(|p| *p == first) {
            return Self {
                points: vec![[0.0; 3]; self.len()],
            };
        }
        let centroid = self.centroid();
        let centered: Vec<Point3> = self
            .points
            .iter()
            .map(|p| [p[0] - centroid[0], p[1] - centroid[1], p[2] - centroid[2]])
            .collect();
        let max_norm = centered
            .iter()
            .map(|p| squared_distance(p, &[0.0; 3]).sqrt())
            .fold(0.0, f64::max);
        let points = centered.iter().map(|p| p.map(|c| c / max_norm)).collect();
        Self { points }
    }
}

impl TryFrom<Vec<Point3>> for PointCloud {
    type Error = Error;

    fn try_from(points: Vec<Point3>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<PointCloud> for Vec<Point3> {
    fn from(cloud: PointCloud) -> Self {
        cloud.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(p: &Point3) -> f64 {
        distance(p, &[0.0; 3])
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(matches!(PointCloud::new(vec![]), Err(Error::EmptyInput)));
        assert!(matches!(
            PointCloud::new(vec![[0.0, f64::NAN, 0.0]]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            PointCloud::new(vec![[0.0, 0.0, f64::INFINITY]]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn normalize_already_centered() {
        let cloud = PointCloud::new(vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(cloud.normalize_unit_sphere(), cloud);
    }

    #[test]
    fn normalize_singleton_maps_to_origin() {
        let cloud = PointCloud::new(vec![[2.0, 2.0, 2.0]]).unwrap();
        assert_eq!(cloud.normalize_unit_sphere().points(), &[[0.0; 3]]);
        let repeated = PointCloud::new(vec![[0.1, 0.2, 0.3]; 3]).unwrap();
        assert_eq!(repeated.normalize_unit_sphere().points(), &[[0.0; 3]; 3]);
    }

    #[test]
    fn normalize_two_points_on_z() {
        // centroid (0,0,2), max norm 2
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [0.0, 0.0, 4.0]]).unwrap();
        assert_eq!(
            cloud.normalize_unit_sphere().points(),
            &[[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]]
        );
    }

    #[test]
    fn normalize_general_cloud() {
        let cloud = crate::synthetic::gaussian_blobs(500, 4, 3);
        let moved = PointCloud::new(
            cloud
                .points()
                .iter()
                .map(|p| [p[0] * 7.0 + 3.0, p[1] * 7.0 - 1.0, p[2] * 7.0])
                .collect(),
        )
        .unwrap();
        let normalized = moved.normalize_unit_sphere();
        let c = normalized.centroid();
        assert!(norm(&c) < 1e-6);
        let max = normalized.points().iter().map(norm).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-6);

        let again = normalized.normalize_unit_sphere();
        for (a, b) in normalized.points().iter().zip(again.points()) {
            assert!(distance(a, b) < 1e-9);
        }
    }

    #[test]
    fn select_checks_bounds() {
        let cloud = PointCloud::new(vec![[0.0; 3], [1.0; 3]]).unwrap();
        assert_eq!(cloud.select(&[1]).unwrap().points(), &[[1.0; 3]]);
        assert!(matches!(cloud.select(&[2]), Err(Error::Argument(_))));
    }

    #[test]
    fn serde_validates() {
        let json = "[[0.0,0.0,0.0],[1.0,2.0,3.0]]";
        let cloud: PointCloud = serde_json::from_str(json).unwrap();
        assert_eq!(cloud.len(), 2);
        assert!(serde_json::from_str::<PointCloud>("[]").is_err());
    }
}
