//! Partition statistics and the weak-equivalence metric.
//!
//! For words g₁..g_m and an ordered partition A₁..A_n of the cells, the
//! statistics point has coordinates μ(g_k^a A_i ∩ A_j). Clouds collect the
//! points of all partitions, and δ sums their Hausdorff distances with
//! weights 2^−(m+n). Points live in [0,1]^{m×n×n} with the ℓ∞ metric.

mod cloud;
mod delta;
mod hausdorff;
mod matching;
mod prop2;

pub use cloud::{cloud, cloud_with_threads, CloudMode, StatsCloud, DEDUP_TOL};
pub use delta::{
    containment_defect, delta, report_from_families, tail_bound, CloudFamily, DeltaOptions,
    DeltaReport, DeltaTerm,
};
pub use hausdorff::{directed_hausdorff, hausdorff};
pub use matching::{
    match_annealed, match_exhaustive, match_partition, AnnealSchedule, MatchResult,
};
pub use prop2::{prop2_construct, two_sided_discrepancy, Prop2Certificate, Prop2Outcome};

use crate::action::CellAction;
use crate::error::{Error, Result};
use crate::words::GroupWord;

/// An ordered partition of the cells into `n` labelled pieces, some possibly
/// empty. Labels are 0-based internally and printed 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrderedPartition {
    labels: Vec<usize>,
    n: usize,
}

impl OrderedPartition {
    pub fn new(labels: Vec<usize>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Malformed(
                "partition needs at least one piece".into(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n) {
            return Err(Error::Malformed(format!(
                "label {bad} out of range for {n} pieces"
            )));
        }
        Ok(OrderedPartition { labels, n })
    }

    /// Everything in one piece.
    pub fn whole(cells: usize) -> Self {
        OrderedPartition {
            labels: vec![0; cells],
            n: 1,
        }
    }

    /// Pieces given as lists of cell ids; unlisted cells are an error.
    pub fn from_ids(action: &CellAction, pieces: &[Vec<&str>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; action.n_cells()];
        for (i, piece) in pieces.iter().enumerate() {
            for idx in action.indices_of(piece)? {
                if labels[idx] != usize::MAX {
                    return Err(Error::Malformed(format!(
                        "cell `{}` listed twice",
                        action.cells()[idx].id
                    )));
                }
                labels[idx] = i;
            }
        }
        if let Some(pos) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Malformed(format!(
                "cell `{}` not assigned to a piece",
                action.cells()[pos].id
            )));
        }
        Self::new(labels, pieces.len().max(1))
    }

    /// Decodes assignment number `index` (base-n digits, cell 0 least significant).
    pub fn from_index(mut index: u64, cells: usize, n: usize) -> Self {
        let mut labels = vec![0; cells];
        for l in labels.iter_mut() {
            *l = (index % n as u64) as usize;
            index /= n as u64;
        }
        OrderedPartition { labels, n }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> usize {
        self.labels.len()
    }

    /// Cell indices of piece `i`.
    pub fn piece(&self, i: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == i)
            .map(|(c, _)| c)
            .collect()
    }
}

/// Number of labelled assignments n^K, saturating.
pub fn assignment_count(n: usize, cells: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..cells {
        total = total.saturating_mul(n as u128);
    }
    total
}

/// A point of [0,1]^{m×n×n}, stored row-major in (k, i, j).
#[derive(Clone, Debug, PartialEq)]
pub struct StatsPoint {
    pub m: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl StatsPoint {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[(k * self.n + i) * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// ℓ∞ distance.
    pub fn distance(&self, other: &StatsPoint) -> Result<f64> {
        if (self.m, self.n) != (other.m, other.n) {
            return Err(Error::Dimension(format!(
                "({}, {}) vs ({}, {})",
                self.m, self.n, other.m, other.n
            )));
        }
        Ok(linf(&self.values, &other.values))
    }
}

pub(crate) fn linf(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
}

/// Transports of a fixed word list, flattened for repeated evaluation.
#[derive(Clone, Debug)]
pub(crate) struct Evaluator {
    cells: usize,
    /// Per word: (source, target, W).
    words: Vec<Vec<(usize, usize, f64)>>,
}

impl Evaluator {
    pub fn new(action: &CellAction, words: &[GroupWord]) -> Result<Self> {
        let words = words
            .iter()
            .map(|w| {
                Ok(action
                    .word_transport(w)?
                    .pieces
                    .iter()
                    .map(|p| (p.source, p.target, p.image_mass))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Evaluator {
            cells: action.n_cells(),
            words,
        })
    }

    pub fn m(&self) -> usize {
        self.words.len()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn fill(&self, labels: &[usize], n: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let block = n * n;
        for (k, pieces) in self.words.iter().enumerate() {
            let base = k * block;
            for &(s, t, w) in pieces {
                out[base + labels[s] * n + labels[t]] += w;
            }
        }
    }

    pub fn point(&self, labels: &[usize], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m() * n * n];
        self.fill(labels, n, &mut out);
        out
    }
}

/// M_{m,Ā}(a): coordinates μ(g_k^a A_i ∩ A_j).
pub fn stats_point(
    action: &CellAction,
    words: &[GroupWord],
    part: &OrderedPartition,
) -> Result<StatsPoint> {
    if part.cells() != action.n_cells() {
        return Err(Error::Dimension(format!(
            "partition covers {} cells, action has {}",
            part.cells(),
            action.n_cells()
        )));
    }
    let eval = Evaluator::new(action, words)?;
    Ok(StatsPoint {
        m: words.len(),
        n: part.n(),
        values: eval.point(part.labels(), part.n()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{boundary_action, trivial_action, BoundarySpec};
    use crate::words::{enumerate_words, StepDistribution};

    #[test]
    fn whole_space_partition_gives_ones() {
        let b = boundary_action(&BoundarySpec::uniform(2, 2).unwrap()).unwrap();
        let words = enumerate_words(2, 6);
        let p = stats_point(&b, &words, &OrderedPartition::whole(b.n_cells())).unwrap();
        assert!(p.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn trivial_action_is_diagonal() {
        let m = StepDistribution::uniform_nearest_neighbor(2).unwrap();
        let t = trivial_action(&[0.2, 0.3, 0.5], &m).unwrap();
        let part = OrderedPartition::new(vec![1, 0, 1], 2).unwrap();
        let p = stats_point(&t, &enumerate_words(2, 4), &part).unwrap();
        for k in 0..4 {
            assert!((p.get(k, 0, 0) - 0.3).abs() < 1e-15);
            assert!((p.get(k, 1, 1) - 0.7).abs() < 1e-15);
            assert_eq!(p.get(k, 0, 1), 0.0);
            assert_eq!(p.get(k, 1, 0), 0.0);
        }
    }

    #[test]
    fn boundary_self_overlap_of_a_cylinder() {
        let b = boundary_action(&BoundarySpec::uniform(2, 2).unwrap()).unwrap();
        let part = OrderedPartition::from_ids(
            &b,
            &[
                vec!["a a", "a b", "a b^-1"],
                vec![
                    "a^-1 a^-1",
                    "a^-1 b",
                    "a^-1 b^-1",
                    "b a",
                    "b a^-1",
                    "b b",
                    "b^-1 a",
                    "b^-1 a^-1",
                    "b^-1 b^-1",
                ],
            ],
        )
        .unwrap();
        let a = GroupWord::parse(2, "a").unwrap();
        let p = stats_point(&b, &[a], &part).unwrap();
        assert!((p.get(0, 0, 0) - 1.0 / 12.0).abs() < 1e-15);
        let rows: f64 = (0..2).map(|j| p.get(0, 0, j)).sum();
        // row sum is μ(a·[a]) = μ([a a])
        assert!((rows - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn partition_constructors() {
        assert!(OrderedPartition::new(vec![0, 2], 2).is_err());
        assert!(OrderedPartition::new(vec![], 0).is_err());
        let p = OrderedPartition::from_index(5, 3, 2);
        assert_eq!(p.labels(), &[1, 0, 1]);
        assert_eq!(p.piece(1), vec![0, 2]);
        assert_eq!(assignment_count(6, 8), 1_679_616);
    }
}
