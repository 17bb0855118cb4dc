//! Brute-force reference implementations shared by the integration tests.
//!
//! They follow the written procedures step by step with selection sorts and
//! explicit loops, and share no code with the library. The reconstruction
//! fixture at the end only builds inputs.

// The loops and branches deliberately spell out each formula.
#![allow(dead_code, clippy::needless_range_loop, clippy::manual_clamp)]

use rand::Rng;
use zigzag_core::rng::seeded;
use zigzag_core::ssm::{ReconModel, ReconSample, ReconTask};

/// Layer counts per plane `(xy, xz, yz)` for a layer budget `m`.
pub fn layer_counts(budget: usize) -> (usize, usize, usize) {
    let third = budget / 3;
    let rem = budget % 3;
    let xy = if rem == 0 { third } else { third + 1 };
    let xz = if rem >= 1 { third + 1 } else { third };
    (xy, xz, third)
}

/// Repeatedly takes the remaining index with the smallest (or largest) key;
/// equal keys go to the lower index.
fn selection_sort(indices: &[usize], key: impl Fn(usize) -> f64, descending: bool) -> Vec<usize> {
    let mut left = indices.to_vec();
    let mut out = Vec::new();
    while !left.is_empty() {
        let mut best = 0;
        for pos in 1..left.len() {
            let (kb, kc) = (key(left[best]), key(left[pos]));
            let better = if descending { kc > kb } else { kc < kb };
            if better || (kc == kb && left[pos] < left[best]) {
                best = pos;
            }
        }
        out.push(left.remove(best));
    }
    out
}

/// Cuts `items` into `parts` runs whose sizes differ by at most one, larger first.
fn chunk(items: &[usize], parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for p in 0..parts {
        let mut size = items.len() / parts;
        if p < items.len() % parts {
            size += 1;
        }
        out.push(items[start..start + size].to_vec());
        start += size;
    }
    out
}

/// Zigzag path over one plane. `plane` is "xy", "xz" or "yz".
pub fn zigzag_reference(
    points: &[[f64; 3]],
    plane: &str,
    budget: usize,
    segment_size: usize,
    max_segments: usize,
) -> Vec<usize> {
    let (xy, xz, yz) = layer_counts(budget);
    // (layer axis, in-layer sort axis, alternating axis, layer count)
    let (layer_axis, sort_axis, alt_axis, layers) = match plane {
        "xy" => (2, 0, 1, xy),
        "xz" => (1, 0, 2, xz),
        "yz" => (0, 1, 2, yz),
        other => panic!("unknown plane {other}"),
    };
    let n = points.len();
    let layers = layers.min(n);
    let all: Vec<usize> = (0..n).collect();
    let by_layer_axis = selection_sort(&all, |i| points[i][layer_axis], false);
    let mut path = Vec::new();
    for layer in chunk(&by_layer_axis, layers) {
        let row = selection_sort(&layer, |i| points[i][sort_axis], false);
        let mut segments = row.len() / segment_size;
        if segments > max_segments {
            segments = max_segments;
        }
        if segments == 0 {
            segments = 1;
        }
        for (s, segment) in chunk(&row, segments).into_iter().enumerate() {
            let descending = s % 2 == 1;
            path.extend(selection_sort(
                &segment,
                |i| points[i][alt_axis],
                descending,
            ));
        }
    }
    path
}

/// Semantic mask evaluated formula by formula. `tokens[b][g]` is a feature vector.
pub fn sms_reference(tokens: &[Vec<Vec<f64>>], t_semantic: f64) -> Vec<Vec<bool>> {
    let mut masks = Vec::new();
    for row in tokens {
        let g = row.len();
        // unit vectors, zero stays zero
        let mut unit = Vec::new();
        for token in row {
            let mut sq = 0.0;
            for v in token {
                sq += v * v;
            }
            let norm = f64::sqrt(sq);
            let mut u = token.clone();
            if norm > 0.0 {
                for v in u.iter_mut() {
                    *v /= norm;
                }
            }
            unit.push(u);
        }
        // clamped similarity and row sums
        // a nonzero token's cosine with itself is 1 by definition; each row is
        // summed smallest first
        let mut scores = vec![0.0; g];
        for i in 0..g {
            let mut row = Vec::new();
            for j in 0..g {
                let mut dot = 0.0;
                for c in 0..unit[i].len() {
                    dot += unit[i][c] * unit[j][c];
                }
                let nonzero = unit[i].iter().any(|&v| v != 0.0);
                let s = if i == j && nonzero {
                    1.0
                } else if dot < 0.0 {
                    0.0
                } else if dot > 1.0 {
                    1.0
                } else {
                    dot
                };
                row.push(s);
            }
            row.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut total = 0.0;
            for s in row {
                total += s;
            }
            scores[i] = total;
        }
        let mut k = (t_semantic * g as f64).floor() as usize;
        if k < 1 {
            k = 1;
        }
        // k-th smallest: least score with at least k scores at or below it
        let mut threshold = f64::INFINITY;
        for &candidate in &scores {
            let at_or_below = scores.iter().filter(|&&s| s <= candidate).count();
            if at_or_below >= k && candidate < threshold {
                threshold = candidate;
            }
        }
        masks.push(scores.iter().map(|&s| s > threshold).collect());
    }
    masks
}

/// Central finite differences of `f` at `x`.
pub fn central_difference(x: &[f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|)` over whole vectors; 0 when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Small random reconstruction problem (at most 88 parameters) for gradient checks.
pub fn tiny_recon_instance(seed: u64) -> (ReconTask, ReconModel) {
    let mut rng = seeded(seed);
    let (c, d, k) = (
        rng.random_range(2..=3),
        rng.random_range(2..=4),
        rng.random_range(2..=4),
    );
    let samples = (0..2)
        .map(|_| {
            let g = rng.random_range(3..=6);
            let tokens: Vec<Vec<f64>> = (0..g)
                .map(|_| (0..c).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let mut masked: Vec<bool> = (0..g).map(|_| rng.random_bool(0.5)).collect();
            masked[g - 1] = true;
            let targets = masked
                .iter()
                .map(|&m| {
                    m.then(|| {
                        (0..k)
                            .map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5)))
                            .collect()
                    })
                })
                .collect();
            ReconSample::new(tokens, masked, targets).unwrap()
        })
        .collect();
    let mut model = ReconModel::init(c, d, k, seed);
    // push the decoder away from its near-zero start so predictions are spread out
    let mut flat = model.to_flat();
    let ssm = model.ssm_param_count();
    for v in &mut flat[ssm..] {
        *v += rng.random_range(-0.5..0.5);
    }
    model.set_flat(&flat);
    (ReconTask::new(samples).unwrap(), model)
}
