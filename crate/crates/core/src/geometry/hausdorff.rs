use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cloud::{key, StatsCloud, DEDUP_TOL};
use crate::error::{Error, Result};

const SCAN_SEED: u64 = 0x5eed;

fn check_dims(a: &StatsCloud, b: &StatsCloud) -> Result<()> {
    if (a.m, a.n) != (b.m, b.n) {
        return Err(Error::Dimension(format!(
            "clouds of shape ({}, {}) and ({}, {})",
            a.m, a.n, b.m, b.n
        )));
    }
    if b.is_empty() && !a.is_empty() {
        return Err(Error::Dimension(
            "directed distance into an empty cloud".into(),
        ));
    }
    Ok(())
}

/// Points of A handled per synchronisation round.
const ROUND: usize = 1024;
/// Points of A handled sequentially inside one parallel task.
const TASK: usize = 64;

/// Distance from `p` to its nearest point of `b`, visiting `hint` first and
/// then `order`. Returns early with any value ≤ `floor` once one is found.
fn nearest(p: &[f64], b: &StatsCloud, hint: Option<usize>, order: &[usize], floor: f64) -> f64 {
    let mut cmin = f64::INFINITY;
    for idx in hint.into_iter().chain(order.iter().copied()) {
        let mut d: f64 = 0.0;
        for (x, y) in p.iter().zip(b.point(idx)) {
            d = d.max((x - y).abs());
            if d >= cmin {
                break;
            }
        }
        if d < cmin {
            cmin = d;
            if cmin <= floor {
                return cmin;
            }
        }
    }
    cmin
}

/// sup_{p∈A} min_{q∈B} ‖p − q‖∞, with values at or below the dedup
/// tolerance reported as 0.
///
/// Points of A already present in B are skipped by key lookup. For the
/// others the point of B at the same index is tried first, then B is scanned
/// in a fixed shuffled order, and the scan stops as soon as a point within
/// the running maximum is found. Early exits never lower the maximum, so
/// the result is exact and independent of the thread count.
pub fn directed_hausdorff(a: &StatsCloud, b: &StatsCloud) -> Result<f64> {
    check_dims(a, b)?;
    if a.is_empty() || a.dim() == 0 {
        return Ok(0.0);
    }
    let present: HashSet<Vec<i64>> = b.iter().map(key).collect();
    let mut order: Vec<usize> = (0..b.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(SCAN_SEED));
    let mut cmax = 0.0f64;
    for round in (0..a.len()).step_by(ROUND) {
        let end = (round + ROUND).min(a.len());
        let floor = cmax;
        let best = (round..end)
            .into_par_iter()
            .step_by(TASK)
            .map(|start| {
                let mut local = floor;
                for i in start..(start + TASK).min(end) {
                    let p = a.point(i);
                    if present.contains(&key(p)) {
                        continue;
                    }
                    let hint = (i < b.len()).then_some(i);
                    local = local.max(nearest(p, b, hint, &order, local));
                }
                local
            })
            .reduce(|| floor, f64::max);
        cmax = cmax.max(best);
    }
    Ok(if cmax <= DEDUP_TOL { 0.0 } else { cmax })
}

/// Symmetric Hausdorff distance.
pub fn hausdorff(a: &StatsCloud, b: &StatsCloud) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}
