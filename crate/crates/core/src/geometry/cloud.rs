use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{assignment_count, Evaluator, OrderedPartition, StatsPoint};
use crate::action::CellAction;
use crate::error::{Error, Result};
use crate::words::GroupWord;

/// Points closer than this in ℓ∞ are identified.
pub const DEDUP_TOL: f64 = 1e-12;

const CHUNK: u64 = 1 << 12;
const COVERAGE_ROUNDS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudMode {
    /// Every labelled assignment.
    Exact,
    /// Seeded random assignments plus greedy coverage moves; a subset of the exact cloud.
    Sampled,
}

impl CloudMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CloudMode::Exact => "exact",
            CloudMode::Sampled => "sampled",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CloudMode::Exact),
            "sampled" => Ok(CloudMode::Sampled),
            other => Err(Error::Malformed(format!("unknown cloud mode `{other}`"))),
        }
    }
}

/// Finite approximation of C_{m,n}(a).
#[derive(Clone, Debug, PartialEq)]
pub struct StatsCloud {
    pub m: usize,
    pub n: usize,
    points: Vec<f64>,
    pub mode: CloudMode,
    pub seed: Option<u64>,
    pub budget: u64,
}

pub(crate) fn key(point: &[f64]) -> Vec<i64> {
    point
        .iter()
        .map(|x| (x / DEDUP_TOL).round() as i64)
        .collect()
}

impl StatsCloud {
    pub fn from_points(m: usize, n: usize, points: Vec<Vec<f64>>, mode: CloudMode) -> Result<Self> {
        let dim = m * n * n;
        let mut seen = HashSet::new();
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::Dimension(format!(
                    "point of length {} in dimension {dim}",
                    p.len()
                )));
            }
            if seen.insert(key(&p)) {
                flat.extend_from_slice(&p);
            }
        }
        Ok(StatsCloud {
            m,
            n,
            points: flat,
            mode,
            seed: None,
            budget: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.m * self.n * self.n
    }

    pub fn len(&self) -> usize {
        if self.dim() == 0 {
            0
        } else {
            self.points.len() / self.dim()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flat(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.points[i * d..(i + 1) * d]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim().max(1))
    }

    pub fn stats_point(&self, i: usize) -> StatsPoint {
        StatsPoint {
            m: self.m,
            n: self.n,
            values: self.point(i).to_vec(),
        }
    }

    /// Projection onto the first `m` words (the cloud for g₁..g_m).
    pub fn truncate(&self, m: usize) -> StatsCloud {
        assert!(m <= self.m, "cannot extend a cloud to more words");
        let keep = m * self.n * self.n;
        let mut seen = HashSet::new();
        let mut flat = Vec::new();
        for p in self.iter() {
            let head = &p[..keep];
            if seen.insert(key(head)) {
                flat.extend_from_slice(head);
            }
        }
        StatsCloud {
            m,
            n: self.n,
            points: flat,
            mode: self.mode,
            seed: self.seed,
            budget: self.budget,
        }
    }

    /// Every point lies within `tol` (ℓ∞) of some point of `other`.
    pub fn is_subset_of(&self, other: &StatsCloud, tol: f64) -> bool {
        self.iter()
            .all(|p| other.iter().any(|q| super::linf(p, q) <= tol))
    }

    /// CSV export: one row per point, columns `v_k_i_j` (1-based), with a
    /// `#` comment line carrying dims and provenance.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# tool=stationary {} m={} n={} mode={} seed={} budget={} points={}",
            env!("CARGO_PKG_VERSION"),
            self.m,
            self.n,
            self.mode.as_str(),
            self.seed.map_or("none".to_string(), |s| s.to_string()),
            self.budget,
            self.len()
        )?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = Vec::with_capacity(self.dim());
        for k in 1..=self.m {
            for i in 1..=self.n {
                for j in 1..=self.n {
                    header.push(format!("v_{k}_{i}_{j}"));
                }
            }
        }
        w.write_record(&header)?;
        for p in self.iter() {
            w.write_record(p.iter().map(|x| crate::io::format_f64(*x)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// C_{m,n} for the given words. Exact mode enumerates all n^K labelled
/// assignments and fails with a budget error past `budget`; sampled mode draws
/// `budget` seeded assignments and adds greedy coverage points.
pub fn cloud(
    action: &CellAction,
    words: &[GroupWord],
    n: usize,
    mode: CloudMode,
    budget: u64,
    seed: u64,
) -> Result<StatsCloud> {
    if n == 0 {
        return Err(Error::Malformed("clouds need n ≥ 1".into()));
    }
    let eval = Evaluator::new(action, words)?;
    match mode {
        CloudMode::Exact => exact_cloud(&eval, n, budget),
        CloudMode::Sampled => sampled_cloud(&eval, n, budget, seed),
    }
}

/// [`cloud`] on a dedicated pool of `threads` workers. The result does not
/// depend on the thread count.
pub fn cloud_with_threads(
    action: &CellAction,
    words: &[GroupWord],
    n: usize,
    mode: CloudMode,
    budget: u64,
    seed: u64,
    threads: usize,
) -> Result<StatsCloud> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Malformed(format!("thread pool: {e}")))?;
    pool.install(|| cloud(action, words, n, mode, budget, seed))
}

pub(crate) fn exact_cloud(eval: &Evaluator, n: usize, budget: u64) -> Result<StatsCloud> {
    let cells = eval.cells();
    let needed = assignment_count(n, cells);
    if needed > budget as u128 {
        return Err(Error::Budget { needed, budget });
    }
    let total = needed as u64;
    let dim = eval.m() * n * n;
    let chunks = total.div_ceil(CHUNK);
    // each range is deduplicated locally, then ranges are merged in index
    // order so the first assignment reaching a point always represents it
    let parts: Vec<Vec<(Vec<i64>, Vec<f64>)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            let mut buf = vec![0.0; dim];
            for idx in start..end {
                let part = OrderedPartition::from_index(idx, cells, n);
                eval.fill(part.labels(), n, &mut buf);
                let k = key(&buf);
                if seen.insert(k.clone()) {
                    out.push((k, buf.clone()));
                }
            }
            out
        })
        .collect();
    let mut seen = HashSet::new();
    let mut flat = Vec::new();
    for part in parts {
        for (k, p) in part {
            if seen.insert(k) {
                flat.extend_from_slice(&p);
            }
        }
    }
    Ok(StatsCloud {
        m: eval.m(),
        n,
        points: flat,
        mode: CloudMode::Exact,
        seed: None,
        budget,
    })
}

fn nearest(points: &[f64], dim: usize, p: &[f64], stop_below: f64) -> f64 {
    let mut best = f64::INFINITY;
    for q in points.chunks_exact(dim) {
        let mut d: f64 = 0.0;
        for (x, y) in p.iter().zip(q) {
            d = d.max((x - y).abs());
            if d >= best {
                break;
            }
        }
        if d < best {
            best = d;
            if best <= stop_below {
                break;
            }
        }
    }
    best
}

fn sampled_cloud(eval: &Evaluator, n: usize, budget: u64, seed: u64) -> Result<StatsCloud> {
    if budget == 0 {
        return Err(Error::Malformed(
            "sampled clouds need a positive budget".into(),
        ));
    }
    let cells = eval.cells();
    let dim = eval.m() * n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut flat = Vec::new();
    let mut assignments: Vec<Vec<usize>> = Vec::new();
    let mut buf = vec![0.0; dim];
    for _ in 0..budget {
        let labels: Vec<usize> = (0..cells).map(|_| rng.random_range(0..n)).collect();
        eval.fill(&labels, n, &mut buf);
        if seen.insert(key(&buf)) {
            flat.extend_from_slice(&buf);
            assignments.push(labels);
        }
    }
    if n > 1 {
        for _ in 0..COVERAGE_ROUNDS {
            let base = assignments[rng.random_range(0..assignments.len())].clone();
            let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
            for c in 0..cells {
                for l in 0..n {
                    if l == base[c] {
                        continue;
                    }
                    let mut labels = base.clone();
                    labels[c] = l;
                    eval.fill(&labels, n, &mut buf);
                    let floor = best.as_ref().map_or(0.0, |b| b.0);
                    let d = nearest(&flat, dim, &buf, floor);
                    if d > floor {
                        best = Some((d, labels, buf.clone()));
                    }
                }
            }
            if let Some((d, labels, p)) = best {
                if d > DEDUP_TOL && seen.insert(key(&p)) {
                    flat.extend_from_slice(&p);
                    assignments.push(labels);
                }
            }
        }
    }
    Ok(StatsCloud {
        m: eval.m(),
        n,
        points: flat,
        mode: CloudMode::Sampled,
        seed: Some(seed),
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{boundary_action, trivial_action, BoundarySpec};
    use crate::words::{enumerate_words, StepDistribution};

    #[test]
    fn single_piece_cloud_is_one_point() {
        let b = boundary_action(&BoundarySpec::uniform(2, 1).unwrap()).unwrap();
        let c = cloud(&b, &enumerate_words(2, 3), 1, CloudMode::Exact, 10, 0).unwrap();
        assert_eq!(c.len(), 1);
        assert!(c.point(0).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn two_cell_trivial_cloud_has_four_points() {
        let m = StepDistribution::uniform_nearest_neighbor(2).unwrap();
        let t = trivial_action(&[0.3, 0.7], &m).unwrap();
        let c = cloud(&t, &enumerate_words(2, 1), 2, CloudMode::Exact, 100, 0).unwrap();
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn exact_mode_respects_budget() {
        let b = boundary_action(&BoundarySpec::uniform(2, 2).unwrap()).unwrap();
        let err = cloud(&b, &enumerate_words(2, 2), 2, CloudMode::Exact, 1000, 0).unwrap_err();
        assert!(matches!(
            err,
            Error::Budget {
                needed: 4096,
                budget: 1000
            }
        ));
    }

    #[test]
    fn sampled_is_subset_and_deterministic() {
        let b = boundary_action(&BoundarySpec::uniform(2, 1).unwrap()).unwrap();
        let words = enumerate_words(2, 3);
        let exact = cloud(&b, &words, 3, CloudMode::Exact, 1000, 0).unwrap();
        let s1 = cloud(&b, &words, 3, CloudMode::Sampled, 20, 7).unwrap();
        let s2 = cloud(&b, &words, 3, CloudMode::Sampled, 20, 7).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.is_subset_of(&exact, DEDUP_TOL));
        assert!(s1.len() <= exact.len());
    }

    #[test]
    fn thread_count_does_not_change_clouds() {
        let b = boundary_action(&BoundarySpec::uniform(2, 1).unwrap()).unwrap();
        let words = enumerate_words(2, 4);
        let one = cloud_with_threads(&b, &words, 4, CloudMode::Exact, 1 << 20, 0, 1).unwrap();
        let many = cloud_with_threads(&b, &words, 4, CloudMode::Exact, 1 << 20, 0, 4).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn truncation_matches_direct_computation() {
        let b = boundary_action(&BoundarySpec::uniform(2, 1).unwrap()).unwrap();
        let full = cloud(&b, &enumerate_words(2, 5), 2, CloudMode::Exact, 1000, 0).unwrap();
        let direct = cloud(&b, &enumerate_words(2, 2), 2, CloudMode::Exact, 1000, 0).unwrap();
        let cut = full.truncate(2);
        assert_eq!(cut.len(), direct.len());
        assert!(cut.is_subset_of(&direct, 0.0) && direct.is_subset_of(&cut, 0.0));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let m = StepDistribution::uniform_nearest_neighbor(2).unwrap();
        let t = trivial_action(&[0.5, 0.5], &m).unwrap();
        let c = cloud(&t, &enumerate_words(2, 1), 2, CloudMode::Exact, 100, 0).unwrap();
        let mut out = Vec::new();
        c.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# tool=stationary"));
        assert_eq!(lines[1], "v_1_1_1,v_1_1_2,v_1_2_1,v_1_2_2");
        assert_eq!(lines.len(), 2 + c.len());
    }
}
