use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{assignment_count, linf, Evaluator, OrderedPartition, StatsPoint};
use crate::action::CellAction;
use crate::error::{Error, Result};
use crate::words::GroupWord;

const CHUNK: u64 = 1 << 12;

/// Simulated-annealing settings for [`match_annealed`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealSchedule {
    pub restarts: usize,
    /// Geometric cooling ratio per temperature level.
    pub cooling: f64,
    pub initial_temperature: f64,
    pub levels: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            restarts: 8,
            cooling: 0.95,
            initial_temperature: 0.05,
            levels: 225,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    pub partition: OrderedPartition,
    /// ℓ∞ distance between the achieved statistics and the target.
    pub discrepancy: f64,
    pub exhaustive: bool,
    pub evaluations: u64,
}

/// Global minimum over all n^K labelings. Ties go to the lowest assignment
/// index, so the answer does not depend on the thread count.
pub(crate) fn search_exhaustive<F>(
    cells: usize,
    n: usize,
    budget: u64,
    objective: F,
) -> Result<(Vec<usize>, f64, u64)>
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let needed = assignment_count(n, cells);
    if needed > budget as u128 {
        return Err(Error::Budget { needed, budget });
    }
    let total = needed as u64;
    let (value, index) = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut best = (f64::INFINITY, start);
            for idx in start..end {
                let part = OrderedPartition::from_index(idx, cells, n);
                let v = objective(part.labels());
                if v < best.0 {
                    best = (v, idx);
                }
            }
            best
        })
        .reduce(
            || (f64::INFINITY, u64::MAX),
            |x, y| {
                if y.0 < x.0 || (y.0 == x.0 && y.1 < x.1) {
                    y
                } else {
                    x
                }
            },
        );
    let labels = OrderedPartition::from_index(index, cells, n)
        .labels()
        .to_vec();
    Ok((labels, value, total))
}

/// Multi-start annealing with single-cell relabel moves, followed by greedy
/// descent. Spends at most `budget` objective evaluations in total.
pub(crate) fn search_annealed<F>(
    cells: usize,
    n: usize,
    budget: u64,
    seed: u64,
    schedule: &AnnealSchedule,
    objective: F,
) -> (Vec<usize>, f64, u64)
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let restarts = schedule.restarts.max(1);
    let per_restart = (budget / restarts as u64).max(1);
    let results: Vec<(Vec<usize>, f64, u64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            anneal_once(
                cells,
                n,
                per_restart,
                seed.wrapping_add(r as u64),
                schedule,
                &objective,
            )
        })
        .collect();
    let evaluations = results.iter().map(|r| r.2).sum();
    let (labels, value, _) = results
        .into_iter()
        .reduce(|x, y| if y.1 < x.1 { y } else { x })
        .expect("at least one restart");
    (labels, value, evaluations)
}

fn anneal_once<F>(
    cells: usize,
    n: usize,
    budget: u64,
    seed: u64,
    schedule: &AnnealSchedule,
    objective: &F,
) -> (Vec<usize>, f64, u64)
where
    F: Fn(&[usize]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = (0..cells).map(|_| rng.random_range(0..n)).collect();
    let mut current = objective(&labels);
    let mut used = 1u64;
    let mut best = (labels.clone(), current);
    if cells == 0 || n == 1 {
        return (best.0, best.1, used);
    }
    let levels = schedule.levels.max(1) as u64;
    let anneal_budget = budget - budget / 5;
    let moves = (anneal_budget / levels).max(1);
    let mut temperature = schedule.initial_temperature;
    'levels: for _ in 0..levels {
        for _ in 0..moves {
            if used >= anneal_budget || best.1 == 0.0 {
                break 'levels;
            }
            let c = rng.random_range(0..cells);
            let old = labels[c];
            let mut new = rng.random_range(0..n - 1);
            if new >= old {
                new += 1;
            }
            labels[c] = new;
            let v = objective(&labels);
            used += 1;
            let accept = v <= current || rng.random::<f64>() < ((current - v) / temperature).exp();
            if accept {
                current = v;
                if v < best.1 {
                    best = (labels.clone(), v);
                }
            } else {
                labels[c] = old;
            }
        }
        temperature *= schedule.cooling;
    }
    // steepest descent from the best state found
    let (mut labels, mut current) = best;
    loop {
        let mut step: Option<(usize, usize, f64)> = None;
        for c in 0..cells {
            let old = labels[c];
            for l in 0..n {
                if l == old || used >= budget {
                    continue;
                }
                labels[c] = l;
                let v = objective(&labels);
                used += 1;
                if v < step.map_or(current, |s| s.2) {
                    step = Some((c, l, v));
                }
            }
            labels[c] = old;
        }
        match step {
            Some((c, l, v)) if current > 0.0 => {
                labels[c] = l;
                current = v;
            }
            _ => break,
        }
    }
    (labels, current, used)
}

fn target_objective<'a>(
    eval: &'a Evaluator,
    target: &'a StatsPoint,
) -> impl Fn(&[usize]) -> f64 + Sync + 'a {
    move |labels: &[usize]| linf(&eval.point(labels, target.n), &target.values)
}

fn prepare(b: &CellAction, target: &StatsPoint, words: &[GroupWord]) -> Result<Evaluator> {
    if target.m != words.len() || target.values.len() != target.m * target.n * target.n {
        return Err(Error::Dimension(format!(
            "target of shape ({}, {}) for {} words",
            target.m,
            target.n,
            words.len()
        )));
    }
    if target.n == 0 {
        return Err(Error::Malformed("target needs n ≥ 1".into()));
    }
    Evaluator::new(b, words)
}

/// Best partition of `b` by exhaustive search; a budget error if n^K exceeds `budget`.
pub fn match_exhaustive(
    b: &CellAction,
    target: &StatsPoint,
    words: &[GroupWord],
    budget: u64,
) -> Result<MatchResult> {
    let eval = prepare(b, target, words)?;
    let (labels, discrepancy, evaluations) = search_exhaustive(
        b.n_cells(),
        target.n,
        budget,
        target_objective(&eval, target),
    )?;
    Ok(MatchResult {
        partition: OrderedPartition::new(labels, target.n)?,
        discrepancy,
        exhaustive: true,
        evaluations,
    })
}

/// Seeded annealing search using at most `budget` evaluations.
pub fn match_annealed(
    b: &CellAction,
    target: &StatsPoint,
    words: &[GroupWord],
    budget: u64,
    seed: u64,
    schedule: &AnnealSchedule,
) -> Result<MatchResult> {
    let eval = prepare(b, target, words)?;
    let (labels, discrepancy, evaluations) = search_annealed(
        b.n_cells(),
        target.n,
        budget,
        seed,
        schedule,
        target_objective(&eval, target),
    );
    Ok(MatchResult {
        partition: OrderedPartition::new(labels, target.n)?,
        discrepancy,
        exhaustive: false,
        evaluations,
    })
}

/// A partition of `b` whose statistics are as close as possible to `target`:
/// exhaustive when n^K ≤ `budget`, annealed otherwise.
pub fn match_partition(
    b: &CellAction,
    target: &StatsPoint,
    words: &[GroupWord],
    budget: u64,
    seed: u64,
) -> Result<MatchResult> {
    if assignment_count(target.n, b.n_cells()) <= budget as u128 {
        match_exhaustive(b, target, words, budget)
    } else {
        match_annealed(b, target, words, budget, seed, &AnnealSchedule::default())
    }
}
