//! Cylinder models of the Furstenberg–Poisson boundary of a free group.
//!
//! The boundary ∂F_r is the space of infinite reduced words. For a
//! nearest-neighbor step distribution m, the measure ν with
//! Σ_g m(g)·ν(gA) = ν(A) is the hitting distribution of the random walk with
//! steps g⁻¹ (g drawn from m). It is Markov on cylinders:
//!
//! ```text
//! ν([x₁⋯xₙ]) = F(x₁)⋯F(xₙ) · (1 − ν([xₙ⁻¹]))
//! ν([x])     = F(x)(1 − F(x⁻¹)) / (1 − F(x)F(x⁻¹))
//! ```
//!
//! where F(x) is the probability that the walk ever visits x. The cells of
//! a depth-L model are the cylinders of length L. Every word of length at
//! most L maps each cell onto a cylinder (or a cylinder minus one branch),
//! so transports of those words are computed exactly and carry a constant
//! Radon–Nikodym derivative on every piece.

use std::collections::HashMap;

use crate::action::{ActionKind, Cell, CellAction, TransportPiece, WordTransport};
use crate::error::{Error, Result};
use crate::words::{words_of_length, GroupWord, Letter, StepDistribution};

pub const SOLVER_TOL: f64 = 1e-12;
pub const SOLVER_MAX_ITER: usize = 100_000;
const DAMPING: f64 = 0.5;

/// Parameters of a boundary model.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySpec {
    pub rank: usize,
    pub depth: usize,
    pub measure: StepDistribution,
    /// Words up to this length get stored transports (default `min(depth, 2)`).
    pub stored_length: Option<usize>,
}

impl BoundarySpec {
    pub fn uniform(rank: usize, depth: usize) -> Result<Self> {
        Ok(BoundarySpec {
            rank,
            depth,
            measure: StepDistribution::uniform_nearest_neighbor(rank)?,
            stored_length: None,
        })
    }

    pub fn new(rank: usize, depth: usize, measure: StepDistribution) -> Self {
        BoundarySpec {
            rank,
            depth,
            measure,
            stored_length: None,
        }
    }

    fn stored_len(&self) -> usize {
        self.stored_length
            .unwrap_or(self.depth.min(2))
            .clamp(1, self.depth)
    }
}

/// Stationary measure on ∂F_r for a nearest-neighbor step distribution.
#[derive(Clone, Debug)]
pub struct HarmonicMeasure {
    rank: usize,
    /// F(x) indexed by letter code.
    first_passage: Vec<f64>,
    /// ν([x]) indexed by letter code.
    letter_mass: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl HarmonicMeasure {
    pub fn solve(measure: &StepDistribution) -> Result<Self> {
        let rank = measure.rank();
        if rank < 2 {
            return Err(Error::Malformed("boundary models need rank ≥ 2".into()));
        }
        if !measure.is_nearest_neighbor() {
            return Err(Error::Malformed(
                "boundary models need a nearest-neighbor measure".into(),
            ));
        }
        let m = measure.letter_probs();
        if m.iter().any(|&p| p <= 0.0) {
            return Err(Error::Malformed(
                "boundary models need every generator and inverse in the support".into(),
            ));
        }
        let alphabet = 2 * rank;
        // steps of the walk are inverses of m-distributed words
        let step: Vec<f64> = (0..alphabet)
            .map(|c| m[Letter::from_code(c).inv().code()])
            .collect();
        let inv = |c: usize| Letter::from_code(c).inv().code();

        let map = |f: &[f64]| -> Vec<f64> {
            (0..alphabet)
                .map(|x| {
                    let back: f64 = (0..alphabet)
                        .filter(|&y| y != x)
                        .map(|y| step[y] * f[inv(y)])
                        .sum();
                    step[x] / (1.0 - back)
                })
                .collect()
        };
        let mut f = vec![0.0; alphabet];
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        // keep iterating past the tolerance until the residual stalls, so
        // that cylinder weights are accurate to rounding
        let mut stalled = 0;
        while iterations < SOLVER_MAX_ITER {
            let g = map(&f);
            let r = f
                .iter()
                .zip(&g)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if r <= SOLVER_TOL {
                stalled = if r < residual { 0 } else { stalled + 1 };
                if r == 0.0 || stalled >= 8 {
                    residual = residual.min(r);
                    break;
                }
            }
            residual = r;
            for (a, b) in f.iter_mut().zip(&g) {
                *a = (1.0 - DAMPING) * *a + DAMPING * b;
            }
            iterations += 1;
        }
        if residual > SOLVER_TOL || f.iter().any(|x| !x.is_finite()) {
            return Err(Error::Solver {
                residual,
                iterations,
            });
        }
        let letter_mass = (0..alphabet)
            .map(|x| f[x] * (1.0 - f[inv(x)]) / (1.0 - f[x] * f[inv(x)]))
            .collect();
        Ok(HarmonicMeasure {
            rank,
            first_passage: f,
            letter_mass,
            iterations,
            residual,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn first_passage(&self, l: Letter) -> f64 {
        self.first_passage[l.code()]
    }

    /// ν([w]); the empty word has mass 1.
    pub fn cylinder(&self, w: &[Letter]) -> f64 {
        match w.last() {
            None => 1.0,
            Some(last) => {
                let hits: f64 = w.iter().map(|l| self.first_passage[l.code()]).product();
                hits * (1.0 - self.letter_mass[last.inv().code()])
            }
        }
    }
}

/// A depth-L cylinder model with its harmonic measure.
#[derive(Clone, Debug)]
pub struct BoundaryModel {
    spec: BoundarySpec,
    harmonic: HarmonicMeasure,
    cells: Vec<GroupWord>,
    index: HashMap<Vec<Letter>, usize>,
}

impl BoundaryModel {
    pub fn new(spec: BoundarySpec) -> Result<Self> {
        if spec.depth == 0 {
            return Err(Error::Malformed("boundary depth must be ≥ 1".into()));
        }
        if spec.measure.rank() != spec.rank {
            return Err(Error::RankMismatch {
                left: spec.rank,
                right: spec.measure.rank(),
            });
        }
        let harmonic = HarmonicMeasure::solve(&spec.measure)?;
        let cells = words_of_length(spec.rank, spec.depth);
        let index = cells
            .iter()
            .enumerate()
            .map(|(i, w)| (w.letters().to_vec(), i))
            .collect();
        Ok(BoundaryModel {
            spec,
            harmonic,
            cells,
            index,
        })
    }

    pub fn spec(&self) -> &BoundarySpec {
        &self.spec
    }

    pub fn harmonic(&self) -> &HarmonicMeasure {
        &self.harmonic
    }

    pub fn cell_words(&self) -> &[GroupWord] {
        &self.cells
    }

    fn cell_of(&self, letters: &[Letter]) -> usize {
        self.index[&letters[..self.spec.depth]]
    }

    /// Exact transport of `g` by cylinder algebra. Words longer than the
    /// depth can swallow a whole cell and are rejected.
    pub fn transport(&self, g: &GroupWord) -> Result<WordTransport> {
        let depth = self.spec.depth;
        if g.len() > depth {
            return Err(Error::Resolution(format!(
                "word {g} is longer than the model depth {depth}"
            )));
        }
        let rank = self.spec.rank;
        let mut pieces = Vec::new();
        for (src, w) in self.cells.iter().enumerate() {
            let last = *w.letters().last().expect("cells are nonempty");
            let image = g.multiply(w)?;
            let u = image.letters();
            if u.len() >= depth {
                pieces.push(TransportPiece::new(
                    src,
                    self.cell_of(u),
                    self.harmonic.cylinder(w.letters()),
                    self.harmonic.cylinder(u),
                ));
                continue;
            }
            // image is [u] minus the branch that would cancel the last letter of w
            for ext in words_of_length(rank, depth - u.len()) {
                let v = ext.letters();
                if v[0] == last.inv() {
                    continue;
                }
                if let Some(&end) = u.last() {
                    if v[0] == end.inv() {
                        continue;
                    }
                }
                let mut target: Vec<Letter> = u.to_vec();
                target.extend_from_slice(v);
                let mut pre: Vec<Letter> = w.letters().to_vec();
                pre.extend_from_slice(v);
                pieces.push(TransportPiece::new(
                    src,
                    self.cell_of(&target),
                    self.harmonic.cylinder(&pre),
                    self.harmonic.cylinder(&target),
                ));
            }
        }
        Ok(WordTransport {
            word: g.clone(),
            pieces,
            exact: true,
        })
    }

    /// The model as a Markov cell action with stored transports for every
    /// word up to the stored length.
    pub fn action(&self) -> Result<CellAction> {
        let cells: Vec<Cell> = self
            .cells
            .iter()
            .map(|w| Cell::new(w.to_string(), self.harmonic.cylinder(w.letters())))
            .collect();
        let mut transports = Vec::new();
        for len in 1..=self.spec.stored_len() {
            for g in words_of_length(self.spec.rank, len) {
                transports.push(self.transport(&g)?);
            }
        }
        for g in self.spec.measure.support() {
            if g.len() > self.spec.stored_len() {
                transports.push(self.transport(g)?);
            }
        }
        Ok(CellAction::new(
            cells,
            self.spec.measure.clone(),
            transports,
            ActionKind::Markov,
        )?
        .with_ergodic(Some(true)))
    }
}

/// Builds the depth-L boundary model as a cell action.
pub fn boundary_action(spec: &BoundarySpec) -> Result<CellAction> {
    BoundaryModel::new(spec.clone())?.action()
}

/// Entropy of the uniform nearest-neighbor boundary of F_r: ((r−1)/r)·ln(2r−1).
pub fn uniform_boundary_entropy(rank: usize) -> f64 {
    let r = rank as f64;
    (r - 1.0) / r * (2.0 * r - 1.0).ln()
}
