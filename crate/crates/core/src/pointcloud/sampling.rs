use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{squared_distance, PointCloud};
use crate::error::{Error, Result};
use crate::rng;

/// A patch: its center, the `k` nearest points (center first) and, once
/// encoded, its feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenGroup {
    pub center_index: usize,
    pub neighbor_indices: Vec<usize>,
    pub feature: Vec<f64>,
}

/// Farthest point sampling with the first pick drawn uniformly from `seed`.
pub fn farthest_point_sampling(cloud: &PointCloud, count: usize, seed: u64) -> Result<Vec<usize>> {
    let first = rng::seeded(seed).random_range(0..cloud.len());
    farthest_point_sampling_from(cloud, count, first)
}

/// Farthest point sampling starting from `first`. Every later pick maximizes
/// the squared distance to the selected set; ties go to the lowest index.
pub fn farthest_point_sampling_from(
    cloud: &PointCloud,
    count: usize,
    first: usize,
) -> Result<Vec<usize>> {
    let n = cloud.len();
    if count == 0 || count > n {
        return Err(Error::argument(format!(
            "cannot sample {count} of {n} points"
        )));
    }
    if first >= n {
        return Err(Error::argument(format!(
            "first index {first} out of range for {n} points"
        )));
    }
    let points = cloud.points();
    let mut selected = Vec::with_capacity(count);
    let mut taken = vec![false; n];
    let mut min_dist = vec![f64::INFINITY; n];
    let mut current = first;
    loop {
        selected.push(current);
        taken[current] = true;
        if selected.len() == count {
            break;
        }
        let anchor = points[current];
        let mut best = usize::MAX;
        let mut best_dist = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let d = squared_distance(p, &anchor);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            // strict `>` keeps the lowest index on ties
            if min_dist[i] > best_dist {
                best_dist = min_dist[i];
                best = i;
            }
        }
        current = best;
    }
    Ok(selected)
}

/// For every center, the `k` nearest points by squared distance. The center
/// itself always comes first; remaining ties go to the lowest index.
pub fn knn_group(cloud: &PointCloud, centers: &[usize], k: usize) -> Result<Vec<TokenGroup>> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::argument(format!(
            "k = {k} is invalid for {n} points"
        )));
    }
    if centers.is_empty() {
        return Err(Error::argument("no centers given"));
    }
    if let Some(&bad) = centers.iter().find(|&&c| c >= n) {
        return Err(Error::argument(format!(
            "center {bad} out of range for {n} points"
        )));
    }
    let points = cloud.points();
    let groups = centers
        .iter()
        .map(|&center| {
            let anchor = points[center];
            let mut others: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != center)
                .map(|(i, p)| (squared_distance(p, &anchor), i))
                .collect();
            let by_distance =
                |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            let take = k - 1;
            if take < others.len() && take > 0 {
                others.select_nth_unstable_by(take - 1, by_distance);
                others.truncate(take);
            } else {
                others.truncate(take);
            }
            others.sort_unstable_by(by_distance);
            let mut neighbor_indices = Vec::with_capacity(k);
            neighbor_indices.push(center);
            neighbor_indices.extend(others.into_iter().map(|(_, i)| i));
            TokenGroup {
                center_index: center,
                neighbor_indices,
                feature: Vec::new(),
            }
        })
        .collect();
    Ok(groups)
}
