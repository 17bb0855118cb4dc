use crate::error::{Error, Result};
use crate::pointcloud::{squared_distance, Point3};

/// Index and squared distance of the point of `set` closest to `p` (lowest
/// index on ties).
fn nearest(p: &Point3, set: &[Point3]) -> (usize, f64) {
    set.iter()
        .enumerate()
        .map(|(i, q)| (i, squared_distance(p, q)))
        .fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
}

fn check(a: &[Point3], b: &[Point3]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::argument("Chamfer distance needs two non-empty sets"));
    }
    Ok(())
}

/// Symmetric Chamfer-L2: mean squared nearest-neighbor distance from `a` to
/// `b` plus the same from `b` to `a`.
pub fn chamfer_l2(a: &[Point3], b: &[Point3]) -> Result<f64> {
    check(a, b)?;
    let forward: f64 = a.iter().map(|p| nearest(p, b).1).sum::<f64>() / a.len() as f64;
    let backward: f64 = b.iter().map(|q| nearest(q, a).1).sum::<f64>() / b.len() as f64;
    Ok(forward + backward)
}

/// Chamfer-L2 and its gradient with respect to every point of `pred`, holding
/// nearest-neighbor assignments fixed.
pub fn chamfer_l2_with_grad(pred: &[Point3], target: &[Point3]) -> Result<(f64, Vec<Point3>)> {
    check(pred, target)?;
    let mut grad = vec![[0.0; 3]; pred.len()];
    let np = pred.len() as f64;
    let nt = target.len() as f64;
    // summed in the same order as `chamfer_l2` so both report identical losses
    let mut forward = 0.0;
    for (p, g) in pred.iter().zip(grad.iter_mut()) {
        let (j, d) = nearest(p, target);
        forward += d;
        for a in 0..3 {
            g[a] += 2.0 * (p[a] - target[j][a]) / np;
        }
    }
    let mut backward = 0.0;
    for q in target {
        let (i, d) = nearest(q, pred);
        backward += d;
        for a in 0..3 {
            grad[i][a] += 2.0 * (pred[i][a] - q[a]) / nt;
        }
    }
    Ok((forward / np + backward / nt, grad))
}
