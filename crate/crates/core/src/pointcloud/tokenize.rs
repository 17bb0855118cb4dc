use serde::{Deserialize, Serialize};

use super::{
    encode_tokens, farthest_point_sampling, knn_group, EncoderWeights, PointCloud, TokenGroup,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    /// Clouds larger than this are FPS-downsampled first.
    pub n_points: usize,
    pub n_centers: usize,
    pub k: usize,
    pub hidden: Vec<usize>,
    pub feature_dim: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            n_points: 1024,
            n_centers: 64,
            k: 32,
            hidden: vec![32],
            feature_dim: 16,
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_points == 0 || self.n_centers == 0 || self.k == 0 || self.feature_dim == 0 {
            return Err(Error::validation("tokenizer sizes must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::validation("hidden layer widths must be positive"));
        }
        Ok(())
    }
}

/// Normalized (and possibly downsampled) cloud plus its encoded patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Tokenized {
    pub cloud: PointCloud,
    pub groups: Vec<TokenGroup>,
}

impl Tokenized {
    pub fn centers(&self) -> PointCloud {
        let idx: Vec<usize> = self.groups.iter().map(|g| g.center_index).collect();
        self.cloud
            .select(&idx)
            .expect("group centers index the cloud")
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.groups.iter().map(|g| g.feature.clone()).collect()
    }

    /// Center-relative coordinates of one patch.
    pub fn relative_patch(&self, group: usize) -> Vec<[f64; 3]> {
        let g = &self.groups[group];
        let c = self.cloud.point(g.center_index);
        g.neighbor_indices
            .iter()
            .map(|&i| {
                let p = self.cloud.point(i);
                [p[0] - c[0], p[1] - c[1], p[2] - c[2]]
            })
            .collect()
    }
}

/// Normalize, downsample to `n_points`, pick `n_centers` by FPS, group `k`
/// neighbors and encode. Center and neighbor counts are clamped to the number
/// of available points.
pub fn tokenize(
    cloud: &PointCloud,
    config: &TokenizerConfig,
    weights: &EncoderWeights,
    seed: u64,
) -> Result<Tokenized> {
    config.validate()?;
    if weights.feature_dim() != config.feature_dim {
        return Err(Error::Config(format!(
            "encoder produces {} channels, configured feature_dim is {}",
            weights.feature_dim(),
            config.feature_dim
        )));
    }
    let mut cloud = cloud.normalize_unit_sphere();
    if cloud.len() > config.n_points {
        let keep = farthest_point_sampling(&cloud, config.n_points, seed)?;
        cloud = cloud.select(&keep)?;
    }
    let n = cloud.len();
    let centers = farthest_point_sampling(&cloud, config.n_centers.min(n), seed.wrapping_add(1))?;
    let groups = knn_group(&cloud, &centers, config.k.min(n))?;
    let groups = encode_tokens(&cloud, &groups, weights)?;
    Ok(Tokenized { cloud, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    #[test]
    fn default_tokenization_shapes() {
        let cloud = synthetic::sphere_surface(2000, 1);
        let cfg = TokenizerConfig::default();
        let weights = EncoderWeights::random(&cfg.hidden, cfg.feature_dim, 0).unwrap();
        let t = tokenize(&cloud, &cfg, &weights, 3).unwrap();
        assert_eq!(t.cloud.len(), 1024);
        assert_eq!(t.groups.len(), 64);
        for g in &t.groups {
            assert_eq!(g.neighbor_indices.len(), 32);
            assert_eq!(g.neighbor_indices[0], g.center_index);
            assert_eq!(g.feature.len(), 16);
        }
        assert_eq!(t.relative_patch(0)[0], [0.0; 3]);
        assert_eq!(t, tokenize(&cloud, &cfg, &weights, 3).unwrap());
    }

    #[test]
    fn small_clouds_clamp_counts() {
        let cloud = PointCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0]]).unwrap();
        let cfg = TokenizerConfig::default();
        let weights = EncoderWeights::random(&cfg.hidden, cfg.feature_dim, 0).unwrap();
        let t = tokenize(&cloud, &cfg, &weights, 0).unwrap();
        assert_eq!(t.groups.len(), 2);
        assert_eq!(t.groups[0].neighbor_indices.len(), 2);
    }

    #[test]
    fn feature_dim_mismatch_is_config_error() {
        let cloud = synthetic::uniform_cube(100, 0);
        let cfg = TokenizerConfig::default();
        let weights = EncoderWeights::random(&[32], 8, 0).unwrap();
        assert!(matches!(
            tokenize(&cloud, &cfg, &weights, 0),
            Err(Error::Config(_))
        ));
    }
}
