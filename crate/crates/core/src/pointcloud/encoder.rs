use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{PointCloud, TokenGroup};
use crate::error::{Error, Result};
use crate::rng;

/// Fully connected layer, `weight` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(inputs: usize, outputs: usize, weight: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Config("layer dimensions must be positive".into()));
        }
        if weight.len() != inputs * outputs || bias.len() != outputs {
            return Err(Error::Config(format!(
                "layer {inputs}->{outputs} needs {} weights and {outputs} biases, got {} and {}",
                inputs * outputs,
                weight.len(),
                bias.len()
            )));
        }
        if weight.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Config("layer parameters must be finite".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            weight,
            bias,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weight
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(input).fold(*b, |acc, (w, x)| acc + w * x)),
        );
    }
}

/// Shared per-point MLP applied to center-relative coordinates, followed by a
/// coordinate-wise max over the patch. ReLU follows every layer but the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<DenseLayer>", into = "Vec<DenseLayer>")]
pub struct EncoderWeights {
    layers: Vec<DenseLayer>,
}

impl EncoderWeights {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("encoder needs at least one layer".into()))?;
        if first.inputs != 3 {
            return Err(Error::Config(format!(
                "first encoder layer takes {} inputs, expected 3",
                first.inputs
            )));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Config(format!(
                    "encoder layers do not chain: {} outputs into {} inputs",
                    pair[0].outputs, pair[1].inputs
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Uniform He-style initialization for a `3 -> hidden... -> feature_dim` MLP.
    pub fn random(hidden: &[usize], feature_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::seeded(seed);
        let mut dims = vec![3];
        dims.extend_from_slice(hidden);
        dims.push(feature_dim);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = (6.0 / inputs.max(1) as f64).sqrt();
                let weight = (0..inputs * outputs)
                    .map(|_| rng.random_range(-bound..bound))
                    .collect();
                DenseLayer::new(inputs, outputs, weight, vec![0.0; outputs])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn feature_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    fn embed_point(&self, relative: &[f64; 3], scratch: &mut (Vec<f64>, Vec<f64>)) -> Vec<f64> {
        let (a, b) = scratch;
        a.clear();
        a.extend_from_slice(relative);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(a, b);
            if i != last {
                b.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            std::mem::swap(a, b);
        }
        a.clone()
    }
}

impl TryFrom<Vec<DenseLayer>> for EncoderWeights {
    type Error = Error;

    fn try_from(layers: Vec<DenseLayer>) -> Result<Self> {
        Self::new(layers)
    }
}

impl From<EncoderWeights> for Vec<DenseLayer> {
    fn from(weights: EncoderWeights) -> Self {
        weights.layers
    }
}

/// Sets each group's feature to the max-pooled MLP embedding of its points
/// expressed relative to the group center.
pub fn encode_tokens(
    cloud: &PointCloud,
    groups: &[TokenGroup],
    weights: &EncoderWeights,
) -> Result<Vec<TokenGroup>> {
    let n = cloud.len();
    let mut scratch = (Vec::new(), Vec::new());
    groups
        .iter()
        .map(|group| {
            if group.center_index >= n || group.neighbor_indices.iter().any(|&i| i >= n) {
                return Err(Error::argument(
                    "group references a point outside the cloud",
                ));
            }
            if group.neighbor_indices.is_empty() {
                return Err(Error::argument("group has no points"));
            }
            let center = cloud.point(group.center_index);
            let mut feature = vec![f64::NEG_INFINITY; weights.feature_dim()];
            for &i in &group.neighbor_indices {
                let p = cloud.point(i);
                let relative = [p[0] - center[0], p[1] - center[1], p[2] - center[2]];
                let embedded = weights.embed_point(&relative, &mut scratch);
                for (f, e) in feature.iter_mut().zip(embedded) {
                    *f = f.max(e);
                }
            }
            if feature.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("encoded feature is not finite"));
            }
            Ok(TokenGroup {
                center_index: group.center_index,
                neighbor_indices: group.neighbor_indices.clone(),
                feature,
            })
        })
        .collect()
}
