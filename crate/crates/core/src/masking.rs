//! Semantic redundancy masking followed by random masking.
//!
//! Tokens are compared by cosine similarity (clamped to `[0, 1]`). A token's
//! redundancy score is the row sum of that matrix. With `k = max(1,
//! floor(t_semantic * G))`, the k-th smallest score is the threshold and every
//! token scoring strictly above it is masked. The random stage then masks
//! `floor(r_random * available)` of the tokens left visible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Features of shape `batch x groups x channels`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenBatch {
    batch: usize,
    groups: usize,
    channels: usize,
    data: Vec<f64>,
}

impl TokenBatch {
    pub fn new(batch: usize, groups: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if batch == 0 || groups == 0 || channels == 0 {
            return Err(Error::validation("token batch dimensions must be positive"));
        }
        if data.len() != batch * groups * channels {
            return Err(Error::validation(format!(
                "expected {} values for a {batch}x{groups}x{channels} batch, got {}",
                batch * groups * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("token features must be finite"));
        }
        Ok(Self {
            batch,
            groups,
            channels,
            data,
        })
    }

    /// One batch row per entry of `rows`; every token must have the same width.
    pub fn from_rows(rows: &[Vec<Vec<f64>>]) -> Result<Self> {
        let groups = rows.first().map_or(0, Vec::len);
        let channels = rows.first().and_then(|r| r.first()).map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * groups * channels);
        for row in rows {
            if row.len() != groups {
                return Err(Error::validation("batch rows differ in token count"));
            }
            for token in row {
                if token.len() != channels {
                    return Err(Error::validation("tokens differ in channel count"));
                }
                data.extend_from_slice(token);
            }
        }
        Self::new(rows.len(), groups, channels, data)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.groups, self.channels)
    }

    pub fn token(&self, b: usize, g: usize) -> &[f64] {
        let start = (b * self.groups + g) * self.channels;
        &self.data[start..start + self.channels]
    }

    fn token_mut(&mut self, b: usize, g: usize) -> &mut [f64] {
        let start = (b * self.groups + g) * self.channels;
        &mut self.data[start..start + self.channels]
    }
}

/// Scales every token to unit L2 norm; all-zero tokens stay zero.
pub fn normalize_tokens(batch: &TokenBatch) -> TokenBatch {
    let mut out = batch.clone();
    for b in 0..batch.batch {
        for g in 0..batch.groups {
            let token = out.token_mut(b, g);
            let norm = token.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                token.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }
    out
}

/// Clamped cosine similarity per batch row: `S[b][i][j] = clamp(<f_i, f_j>, 0, 1)`
/// for already-normalized tokens. The diagonal is exactly 1 for nonzero tokens.
pub fn similarity_matrix(normalized: &TokenBatch) -> Vec<Vec<Vec<f64>>> {
    (0..normalized.batch)
        .map(|b| {
            (0..normalized.groups)
                .map(|i| {
                    let fi = normalized.token(b, i);
                    (0..normalized.groups)
                        .map(|j| {
                            if i == j && fi.iter().any(|&v| v != 0.0) {
                                // exact, so rounding in the norm cannot break ties
                                return 1.0;
                            }
                            let fj = normalized.token(b, j);
                            let dot: f64 = fi.iter().zip(fj).map(|(x, y)| x * y).sum();
                            dot.clamp(0.0, 1.0)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Row sums of the similarity matrix. Each row is added in ascending order so
/// a score does not depend on where the other tokens sit in the sequence.
pub fn redundancy_scores(similarity: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    similarity
        .iter()
        .map(|rows| {
            rows.iter()
                .map(|row| {
                    let mut sorted = row.clone();
                    sorted.sort_by(f64::total_cmp);
                    sorted.iter().sum()
                })
                .collect()
        })
        .collect()
}

/// Number of tokens kept as retention candidates for a row of `groups`.
pub fn retained_count(t_semantic: f64, groups: usize) -> usize {
    ((t_semantic * groups as f64).floor() as usize).max(1)
}

fn check_t_semantic(t_semantic: f64) -> Result<()> {
    if !(t_semantic > 0.0 && t_semantic <= 1.0) {
        return Err(Error::validation(format!(
            "t_semantic must be in (0, 1], got {t_semantic}"
        )));
    }
    Ok(())
}

fn check_r_random(r_random: f64) -> Result<()> {
    if !(0.0..1.0).contains(&r_random) {
        return Err(Error::validation(format!(
            "r_random must be in [0, 1), got {r_random}"
        )));
    }
    Ok(())
}

/// Semantic mask: `true` where a token's redundancy exceeds the k-th smallest
/// score of its row. Ties at the threshold stay visible.
pub fn sms_mask(batch: &TokenBatch, t_semantic: f64) -> Result<Vec<Vec<bool>>> {
    check_t_semantic(t_semantic)?;
    let scores = redundancy_scores(&similarity_matrix(&normalize_tokens(batch)));
    let k = retained_count(t_semantic, batch.groups);
    Ok(scores
        .into_iter()
        .map(|row| {
            let mut sorted = row.clone();
            sorted.sort_by(f64::total_cmp);
            let threshold = sorted[k - 1];
            row.into_iter().map(|r| r > threshold).collect()
        })
        .collect())
}

/// Masks `floor(r_random * available)` tokens per row, sampled uniformly
/// without replacement among those the semantic mask left visible. Row `b`
/// draws from its own stream of `seed`.
pub fn random_mask(
    semantic_mask: &[Vec<bool>],
    r_random: f64,
    seed: u64,
) -> Result<Vec<Vec<bool>>> {
    check_r_random(r_random)?;
    Ok(semantic_mask
        .iter()
        .enumerate()
        .map(|(b, row)| {
            let mut available: Vec<usize> = (0..row.len()).filter(|&i| !row[i]).collect();
            let n_mask = (r_random * available.len() as f64).floor() as usize;
            let mut rng = rng::seeded_stream(seed, b as u64);
            let mut mask = vec![false; row.len()];
            for &i in rng::sample_prefix(&mut rng, &mut available, n_mask).iter() {
                mask[i] = true;
            }
            mask
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskConfig {
    pub t_semantic: f64,
    pub r_random: f64,
    pub seed: u64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            t_semantic: 0.8,
            r_random: 0.6,
            seed: 0,
        }
    }
}

impl MaskConfig {
    pub fn validate(&self) -> Result<()> {
        check_t_semantic(self.t_semantic)?;
        check_r_random(self.r_random)
    }
}

/// Which stages run: semantic then random, or random over every token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskStrategy {
    Sms,
    RandomOnly,
}

impl MaskStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sms => "sms",
            Self::RandomOnly => "random-only",
        }
    }
}

impl fmt::Display for MaskStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sms" => Ok(Self::Sms),
            "random-only" => Ok(Self::RandomOnly),
            other => Err(Error::argument(format!("unknown mask strategy `{other}`"))),
        }
    }
}

/// Semantic and random layers of a mask, plus their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MaskPlanRepr", into = "MaskPlanRepr")]
pub struct MaskPlan {
    pub config: MaskConfig,
    semantic: Vec<Vec<bool>>,
    random: Vec<Vec<bool>>,
    final_mask: Vec<Vec<bool>>,
}

impl MaskPlan {
    fn from_layers(
        config: MaskConfig,
        semantic: Vec<Vec<bool>>,
        random: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if semantic.len() != random.len()
            || semantic
                .iter()
                .zip(&random)
                .any(|(s, r)| s.len() != r.len())
        {
            return Err(Error::validation("mask layers differ in shape"));
        }
        let overlap = semantic
            .iter()
            .zip(&random)
            .any(|(s, r)| s.iter().zip(r).any(|(a, b)| *a && *b));
        if overlap {
            return Err(Error::validation("random mask overlaps the semantic mask"));
        }
        let final_mask = semantic
            .iter()
            .zip(&random)
            .map(|(s, r)| s.iter().zip(r).map(|(a, b)| *a || *b).collect())
            .collect();
        Ok(Self {
            config,
            semantic,
            random,
            final_mask,
        })
    }

    pub fn semantic(&self) -> &[Vec<bool>] {
        &self.semantic
    }

    pub fn random(&self) -> &[Vec<bool>] {
        &self.random
    }

    pub fn final_mask(&self) -> &[Vec<bool>] {
        &self.final_mask
    }

    pub fn batch(&self) -> usize {
        self.final_mask.len()
    }

    pub fn groups(&self) -> usize {
        self.final_mask.first().map_or(0, Vec::len)
    }

    pub fn semantic_count(&self) -> usize {
        count(&self.semantic)
    }

    pub fn random_count(&self) -> usize {
        count(&self.random)
    }

    pub fn masked_count(&self) -> usize {
        count(&self.final_mask)
    }
}

fn count(mask: &[Vec<bool>]) -> usize {
    mask.iter().flatten().filter(|&&m| m).count()
}

#[derive(Serialize, Deserialize)]
struct MaskPlanRepr {
    b: usize,
    g: usize,
    t_semantic: f64,
    r_random: f64,
    seed: u64,
    semantic: Vec<u8>,
    random: Vec<u8>,
    #[serde(rename = "final")]
    final_mask: Vec<u8>,
}

fn flatten_bits(mask: &[Vec<bool>]) -> Vec<u8> {
    mask.iter().flatten().map(|&m| u8::from(m)).collect()
}

fn unflatten_bits(bits: &[u8], b: usize, g: usize, name: &str) -> Result<Vec<Vec<bool>>> {
    if bits.len() != b * g {
        return Err(Error::validation(format!(
            "`{name}` has {} bits, expected {}",
            bits.len(),
            b * g
        )));
    }
    if bits.iter().any(|&v| v > 1) {
        return Err(Error::validation(format!("`{name}` must hold only 0/1")));
    }
    Ok(bits
        .chunks(g.max(1))
        .map(|row| row.iter().map(|&v| v == 1).collect())
        .collect())
}

impl From<MaskPlan> for MaskPlanRepr {
    fn from(plan: MaskPlan) -> Self {
        MaskPlanRepr {
            b: plan.batch(),
            g: plan.groups(),
            t_semantic: plan.config.t_semantic,
            r_random: plan.config.r_random,
            seed: plan.config.seed,
            semantic: flatten_bits(&plan.semantic),
            random: flatten_bits(&plan.random),
            final_mask: flatten_bits(&plan.final_mask),
        }
    }
}

impl TryFrom<MaskPlanRepr> for MaskPlan {
    type Error = Error;

    fn try_from(repr: MaskPlanRepr) -> Result<Self> {
        let config = MaskConfig {
            t_semantic: repr.t_semantic,
            r_random: repr.r_random,
            seed: repr.seed,
        };
        let semantic = unflatten_bits(&repr.semantic, repr.b, repr.g, "semantic")?;
        let random = unflatten_bits(&repr.random, repr.b, repr.g, "random")?;
        let plan = MaskPlan::from_layers(config, semantic, random)?;
        if flatten_bits(&plan.final_mask) != repr.final_mask {
            return Err(Error::validation(
                "`final` is not the union of `semantic` and `random`",
            ));
        }
        Ok(plan)
    }
}

pub fn build_mask_plan(batch: &TokenBatch, config: &MaskConfig) -> Result<MaskPlan> {
    build_mask_plan_with(batch, config, MaskStrategy::Sms)
}

pub fn build_mask_plan_with(
    batch: &TokenBatch,
    config: &MaskConfig,
    strategy: MaskStrategy,
) -> Result<MaskPlan> {
    config.validate()?;
    let semantic = match strategy {
        MaskStrategy::Sms => sms_mask(batch, config.t_semantic)?,
        MaskStrategy::RandomOnly => vec![vec![false; batch.groups]; batch.batch],
    };
    let random = random_mask(&semantic, config.r_random, config.seed)?;
    MaskPlan::from_layers(*config, semantic, random)
}
