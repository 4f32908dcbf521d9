//! Stationary actions at finite resolution.
//!
//! A [`CellAction`] replaces the standard probability space by finitely many
//! weighted cells. Each group word acts through a [`WordTransport`]: a list of
//! pieces `(source, target, T, W)` where `T = μ(source ∩ g⁻¹ target)` is the
//! mass leaving the source cell and `W = μ(g(source) ∩ target)` the mass it
//! occupies after moving. The Radon–Nikodym derivative d(g^aμ)/dμ is constant
//! on each image piece and equals `T / W`.
//!
//! Transports of words that are not stored are composed from stored ones.
//! For bijective actions composition is exact. For Markov actions the
//! mass-splitting rule assumes the image of each intermediate cell is spread
//! proportionally over the next step; the resulting transport carries an
//! `exact` flag telling whether that assumption was needed.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::words::{GroupWord, StepDistribution};

/// Tolerance for cell weights summing to one.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Tolerance for transport sourcing and covering sums.
pub const TRANSPORT_TOL: f64 = 1e-10;
/// Default stationarity tolerance for [`CellAction::validate`].
pub const STATIONARITY_TOL: f64 = 1e-9;
/// Stationarity gate applied before computing entropy.
pub const ENTROPY_GATE_TOL: f64 = 1e-6;
/// Pieces with either mass below this are dropped at construction.
pub const NEGLIGIBLE_MASS: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub id: String,
    pub weight: f64,
}

impl Cell {
    pub fn new(id: impl Into<String>, weight: f64) -> Self {
        Cell {
            id: id.into(),
            weight,
        }
    }
}

/// One piece of a word transport, with cells referenced by index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransportPiece {
    pub source: usize,
    pub target: usize,
    /// `T`: mass of the part of the source cell that lands in the target.
    pub source_mass: f64,
    /// `W`: mass of the image inside the target cell.
    pub image_mass: f64,
}

impl TransportPiece {
    pub fn new(source: usize, target: usize, source_mass: f64, image_mass: f64) -> Self {
        TransportPiece {
            source,
            target,
            source_mass,
            image_mass,
        }
    }

    /// Value of d(g^aμ)/dμ on the image piece.
    pub fn derivative(&self) -> f64 {
        self.source_mass / self.image_mass
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordTransport {
    pub word: GroupWord,
    pub pieces: Vec<TransportPiece>,
    /// False when mass-splitting composition had to assume proportional spreading.
    pub exact: bool,
}

impl WordTransport {
    pub fn identity(cells: &[Cell], rank: usize) -> Self {
        WordTransport {
            word: GroupWord::identity(rank),
            pieces: cells
                .iter()
                .enumerate()
                .map(|(i, c)| TransportPiece::new(i, i, c.weight, c.weight))
                .collect(),
            exact: true,
        }
    }

    /// Transport of the inverse word: sources and targets swap, as do `T` and `W`.
    pub fn inverse(&self) -> Self {
        let mut pieces: Vec<TransportPiece> = self
            .pieces
            .iter()
            .map(|p| TransportPiece::new(p.target, p.source, p.image_mass, p.source_mass))
            .collect();
        sort_pieces(&mut pieces);
        WordTransport {
            word: self.word.inverse(),
            pieces,
            exact: self.exact,
        }
    }

    /// Mass μ(g·c) of the image of each cell.
    pub fn image_masses(&self, n_cells: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_cells];
        for p in &self.pieces {
            out[p.source] += p.image_mass;
        }
        out
    }

    /// Ratio μ(g·c)/μ(c) per source cell, and whether the derivative is
    /// constant across all pieces leaving that cell.
    pub fn source_ratios(&self, cells: &[Cell]) -> (Vec<f64>, bool) {
        let mut t = vec![0.0; cells.len()];
        let mut w = vec![0.0; cells.len()];
        for p in &self.pieces {
            t[p.source] += p.source_mass;
            w[p.source] += p.image_mass;
        }
        let ratios: Vec<f64> = (0..cells.len())
            .map(|i| if t[i] > 0.0 { w[i] / t[i] } else { 1.0 })
            .collect();
        let constant = self.pieces.iter().all(|p| {
            let r = p.image_mass / p.source_mass;
            (r - ratios[p.source]).abs() <= 1e-9 * ratios[p.source].max(1.0)
        });
        (ratios, constant)
    }
}

fn sort_pieces(pieces: &mut [TransportPiece]) {
    pieces.sort_by(|x, y| (x.source, x.target).cmp(&(y.source, y.target)));
}

/// How transports of unstored words are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActionKind {
    /// Every word permutes cells; composition is exact.
    Bijective,
    /// Mass-splitting composition, exact on Markov partitions.
    Markov,
    /// Only stored words are available.
    Opaque,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Bijective => "bijective",
            ActionKind::Markov => "markov",
            ActionKind::Opaque => "opaque",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "bijective" => Ok(ActionKind::Bijective),
            "markov" => Ok(ActionKind::Markov),
            "opaque" => Ok(ActionKind::Opaque),
            other => Err(Error::Malformed(format!("unknown action kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    WeightSum {
        sum: f64,
    },
    NonPositiveWeight {
        cell: String,
        weight: f64,
    },
    Sourcing {
        word: String,
        cell: String,
        residual: f64,
    },
    Covering {
        word: String,
        cell: String,
        residual: f64,
    },
    MissingSupportWord {
        word: String,
    },
    IdentityNotDiagonal,
    Stationarity {
        cell: String,
        residual: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::WeightSum { sum } => write!(f, "cell weights sum to {sum:.17}"),
            Violation::NonPositiveWeight { cell, weight } => {
                write!(f, "cell {cell} has weight {weight}")
            }
            Violation::Sourcing {
                word,
                cell,
                residual,
            } => {
                write!(
                    f,
                    "word {word}: source mass of cell {cell} off by {residual:e}"
                )
            }
            Violation::Covering {
                word,
                cell,
                residual,
            } => {
                write!(
                    f,
                    "word {word}: image mass in cell {cell} off by {residual:e}"
                )
            }
            Violation::MissingSupportWord { word } => {
                write!(f, "no transport for support word {word}")
            }
            Violation::IdentityNotDiagonal => {
                write!(f, "stored identity transport is not diagonal")
            }
            Violation::Stationarity { cell, residual } => {
                write!(f, "stationarity residual {residual:e} on cell {cell}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Σ_g m(g)·μ(g·c) − μ(c) for every cell, in cell order.
    pub stationarity_residuals: Vec<f64>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.stationarity_residuals
            .iter()
            .fold(0.0, |a, r| a.max(r.abs()))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(
                f,
                "valid (max stationarity residual {:e})",
                self.max_residual()
            );
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Finitely supported distribution of d(g^aμ)/dμ: `(value, mass)` atoms
/// sorted by value.
#[derive(Clone, Debug, PartialEq)]
pub struct RnDistribution {
    pub atoms: Vec<(f64, f64)>,
}

impl RnDistribution {
    /// Merges piece values that agree to relative 1e-12.
    pub fn from_pieces(pieces: &[TransportPiece]) -> Self {
        let mut raw: Vec<(f64, f64)> = pieces
            .iter()
            .map(|p| (p.derivative(), p.image_mass))
            .collect();
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for (v, m) in raw {
            match atoms.last_mut() {
                Some((last, mass)) if same_value(*last, v) => *mass += m,
                _ => atoms.push((v, m)),
            }
        }
        RnDistribution { atoms }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|(_, m)| m).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.atoms.last().map_or(0.0, |(v, _)| *v)
    }

    /// μ{x : derivative(x) > c}. Values within relative 1e-12 of `c` count as equal.
    pub fn tail(&self, c: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|(v, _)| *v > c && !same_value(*v, c))
            .fold(0.0, |acc, (_, m)| acc + m)
    }

    /// −∫ log(derivative) dμ.
    pub fn neg_log_integral(&self) -> f64 {
        -self.atoms.iter().map(|(v, m)| m * v.ln()).sum::<f64>()
    }
}

fn same_value(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0)
}

/// Entropy contribution of one support word.
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyTerm {
    pub word: GroupWord,
    pub prob: f64,
    /// −∫ log d(g^aμ)/dμ dμ for this word alone.
    pub divergence: f64,
    /// `prob · divergence`; the terms sum to the entropy.
    pub weighted: f64,
}

/// A stationary action at finite resolution.
#[derive(Clone, Debug)]
pub struct CellAction {
    cells: Vec<Cell>,
    index: HashMap<String, usize>,
    measure: StepDistribution,
    transports: BTreeMap<GroupWord, WordTransport>,
    kind: ActionKind,
    ergodic: Option<bool>,
}

impl PartialEq for CellAction {
    fn eq(&self, other: &Self) -> bool {
        self.cells == other.cells
            && self.measure == other.measure
            && self.transports == other.transports
            && self.kind == other.kind
            && self.ergodic == other.ergodic
    }
}

impl CellAction {
    /// Assembles an action. Structural problems (unknown cells, duplicate ids,
    /// repeated pieces, rank mismatches) are errors; measure-theoretic
    /// invariants are left to [`CellAction::validate`].
    pub fn new(
        cells: Vec<Cell>,
        measure: StepDistribution,
        transports: Vec<WordTransport>,
        kind: ActionKind,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Malformed("action has no cells".into()));
        }
        let mut index = HashMap::with_capacity(cells.len());
        for (i, c) in cells.iter().enumerate() {
            if index.insert(c.id.clone(), i).is_some() {
                return Err(Error::Malformed(format!("duplicate cell id `{}`", c.id)));
            }
            if !c.weight.is_finite() {
                return Err(Error::Malformed(format!(
                    "cell `{}` has non-finite weight",
                    c.id
                )));
            }
        }
        let rank = measure.rank();
        let mut map = BTreeMap::new();
        for mut t in transports {
            if t.word.rank() != rank {
                return Err(Error::RankMismatch {
                    left: rank,
                    right: t.word.rank(),
                });
            }
            t.pieces
                .retain(|p| p.source_mass >= NEGLIGIBLE_MASS && p.image_mass >= NEGLIGIBLE_MASS);
            for p in &t.pieces {
                if p.source >= cells.len() || p.target >= cells.len() {
                    return Err(Error::Malformed(format!(
                        "word {}: piece references unknown cell",
                        t.word
                    )));
                }
                if !(p.source_mass.is_finite() && p.image_mass.is_finite()) {
                    return Err(Error::Malformed(format!(
                        "word {}: non-finite piece mass",
                        t.word
                    )));
                }
            }
            sort_pieces(&mut t.pieces);
            if t.pieces
                .windows(2)
                .any(|w| (w[0].source, w[0].target) == (w[1].source, w[1].target))
            {
                return Err(Error::Malformed(format!(
                    "word {}: more than one piece for a (source, target) pair",
                    t.word
                )));
            }
            let word = t.word.clone();
            if map.insert(word.clone(), t).is_some() {
                return Err(Error::Malformed(format!(
                    "transport for word {word} given twice"
                )));
            }
        }
        Ok(CellAction {
            cells,
            index,
            measure,
            transports: map,
            kind,
            ergodic: None,
        })
    }

    pub fn with_ergodic(mut self, ergodic: Option<bool>) -> Self {
        self.ergodic = ergodic;
        self
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.weight).collect()
    }

    pub fn cell_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn measure(&self) -> &StepDistribution {
        &self.measure
    }

    pub fn rank(&self) -> usize {
        self.measure.rank()
    }

    pub fn kind(&self) -> ActionKind {
        self.kind
    }

    pub fn ergodic(&self) -> Option<bool> {
        self.ergodic
    }

    pub fn stored_transports(&self) -> impl Iterator<Item = &WordTransport> {
        self.transports.values()
    }

    pub fn stored(&self, w: &GroupWord) -> Option<&WordTransport> {
        self.transports.get(w)
    }

    /// Cell indices for a list of ids.
    pub fn indices_of(&self, ids: &[&str]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.cell_index(id)
                    .ok_or_else(|| Error::Malformed(format!("unknown cell id `{id}`")))
            })
            .collect()
    }

    /// Checks every structural and stationarity invariant. Weight sums use
    /// 1e-12, transport sums 1e-10, stationarity the given tolerance.
    pub fn validate(&self, tolerance: f64) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.cells.len();
        let sum: f64 = self.cells.iter().map(|c| c.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            violations.push(Violation::WeightSum { sum });
        }
        for c in &self.cells {
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                violations.push(Violation::NonPositiveWeight {
                    cell: c.id.clone(),
                    weight: c.weight,
                });
            }
        }
        for t in self.transports.values() {
            let mut src = vec![0.0; n];
            let mut dst = vec![0.0; n];
            for p in &t.pieces {
                src[p.source] += p.source_mass;
                dst[p.target] += p.image_mass;
            }
            for (i, c) in self.cells.iter().enumerate() {
                let rs = src[i] - c.weight;
                if rs.abs() > TRANSPORT_TOL {
                    violations.push(Violation::Sourcing {
                        word: t.word.to_string(),
                        cell: c.id.clone(),
                        residual: rs,
                    });
                }
                let rc = dst[i] - c.weight;
                if rc.abs() > TRANSPORT_TOL {
                    violations.push(Violation::Covering {
                        word: t.word.to_string(),
                        cell: c.id.clone(),
                        residual: rc,
                    });
                }
            }
            if t.word.is_identity()
                && !t.pieces.iter().all(|p| {
                    p.source == p.target
                        && (p.source_mass - self.cells[p.source].weight).abs() <= TRANSPORT_TOL
                        && (p.image_mass - self.cells[p.source].weight).abs() <= TRANSPORT_TOL
                })
            {
                violations.push(Violation::IdentityNotDiagonal);
            }
        }

        let mut image = vec![0.0; n];
        let mut complete = true;
        for (w, p) in self.measure.entries() {
            match self.support_transport(w) {
                Some(t) => {
                    for piece in &t.pieces {
                        image[piece.source] += p * piece.image_mass;
                    }
                }
                None => {
                    complete = false;
                    violations.push(Violation::MissingSupportWord {
                        word: w.to_string(),
                    });
                }
            }
        }
        let residuals: Vec<f64> = if complete {
            image
                .iter()
                .zip(&self.cells)
                .map(|(m, c)| m - c.weight)
                .collect()
        } else {
            vec![f64::NAN; n]
        };
        if complete {
            for (r, c) in residuals.iter().zip(&self.cells) {
                if r.abs() > tolerance {
                    violations.push(Violation::Stationarity {
                        cell: c.id.clone(),
                        residual: *r,
                    });
                }
            }
        }
        ValidationReport {
            violations,
            stationarity_residuals: residuals,
        }
    }

    fn support_transport(&self, w: &GroupWord) -> Option<std::borrow::Cow<'_, WordTransport>> {
        if let Some(t) = self.transports.get(w) {
            return Some(std::borrow::Cow::Borrowed(t));
        }
        if w.is_identity() {
            return Some(std::borrow::Cow::Owned(WordTransport::identity(
                &self.cells,
                self.rank(),
            )));
        }
        None
    }

    /// Errors with [`Error::Validation`] unless the action validates at `tolerance`.
    pub fn ensure_valid(&self, tolerance: f64) -> Result<()> {
        let report = self.validate(tolerance);
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(report.to_string()))
        }
    }

    /// Transport of an arbitrary word: stored, identity, inverse of stored,
    /// or composed from stored factors according to the action kind.
    pub fn word_transport(&self, w: &GroupWord) -> Result<WordTransport> {
        if w.rank() != self.rank() {
            return Err(Error::RankMismatch {
                left: self.rank(),
                right: w.rank(),
            });
        }
        if let Some(t) = self.transports.get(w) {
            return Ok(t.clone());
        }
        if w.is_identity() {
            return Ok(WordTransport::identity(&self.cells, self.rank()));
        }
        if self.kind == ActionKind::Opaque {
            return Err(Error::UnsupportedWord(w.to_string()));
        }
        if let Some(t) = self.transports.get(&w.inverse()) {
            return Ok(t.inverse());
        }
        let factors = self.factorize(w)?;
        let mut acc: Option<WordTransport> = None;
        for f in factors.into_iter().rev() {
            acc = Some(match acc {
                None => f,
                Some(inner) => compose(&f, &inner, &self.cells),
            });
        }
        let mut t = acc.expect("non-identity word has at least one factor");
        t.word = w.clone();
        if self.kind == ActionKind::Bijective {
            t.exact = true;
        }
        Ok(t)
    }

    /// Greedy left-to-right split into the longest stored (or inverse-stored) prefixes.
    fn factorize(&self, w: &GroupWord) -> Result<Vec<WordTransport>> {
        let letters = w.letters();
        let rank = self.rank();
        let mut out = Vec::new();
        let mut start = 0;
        while start < letters.len() {
            let mut found = None;
            for end in (start + 1..=letters.len()).rev() {
                let piece = GroupWord::reduce(rank, letters[start..end].iter().copied())?;
                if let Some(t) = self.transports.get(&piece) {
                    found = Some((end, t.clone()));
                    break;
                }
                if let Some(t) = self.transports.get(&piece.inverse()) {
                    found = Some((end, t.inverse()));
                    break;
                }
            }
            match found {
                Some((end, t)) => {
                    out.push(t);
                    start = end;
                }
                None => return Err(Error::UnsupportedWord(w.to_string())),
            }
        }
        Ok(out)
    }

    /// μ(w^a A ∩ B) for cell-index sets `a` and `b`.
    pub fn mass(&self, w: &GroupWord, a: &[usize], b: &[usize]) -> Result<f64> {
        let t = self.word_transport(w)?;
        let in_a = self.mask(a);
        let in_b = self.mask(b);
        Ok(t.pieces
            .iter()
            .filter(|p| in_a[p.source] && in_b[p.target])
            .map(|p| p.image_mass)
            .sum())
    }

    /// [`CellAction::mass`] with sets given by cell id.
    pub fn mass_by_id(&self, w: &GroupWord, a: &[&str], b: &[&str]) -> Result<f64> {
        self.mass(w, &self.indices_of(a)?, &self.indices_of(b)?)
    }

    fn mask(&self, set: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.cells.len()];
        for &i in set {
            if i < m.len() {
                m[i] = true;
            }
        }
        m
    }

    /// Distribution of d(w^aμ)/dμ.
    pub fn rn_pieces(&self, w: &GroupWord) -> Result<RnDistribution> {
        Ok(RnDistribution::from_pieces(&self.word_transport(w)?.pieces))
    }

    /// μ{x : d(w^aμ)/dμ(x) > c}.
    pub fn rn_tail(&self, w: &GroupWord, c: f64) -> Result<f64> {
        if !(c >= 0.0) {
            return Err(Error::Malformed(format!("threshold {c} must be ≥ 0")));
        }
        Ok(self.rn_pieces(w)?.tail(c))
    }

    /// Furstenberg entropy in nats.
    pub fn entropy(&self) -> Result<f64> {
        Ok(self.entropy_terms()?.iter().map(|t| t.weighted).sum())
    }

    /// Per-support-word entropy breakdown; the `weighted` fields sum to the entropy.
    pub fn entropy_terms(&self) -> Result<Vec<EntropyTerm>> {
        self.ensure_valid(ENTROPY_GATE_TOL)?;
        let mut out = Vec::with_capacity(self.measure.entries().len());
        for (w, p) in self.measure.entries() {
            let t = self
                .support_transport(w)
                .ok_or_else(|| Error::UnsupportedWord(w.to_string()))?;
            let divergence: f64 = t
                .pieces
                .iter()
                .map(|piece| piece.image_mass * (piece.image_mass / piece.source_mass).ln())
                .sum();
            out.push(EntropyTerm {
                word: w.clone(),
                prob: *p,
                divergence,
                weighted: p * divergence,
            });
        }
        Ok(out)
    }

    /// Largest |T − W| over all pieces of the support transports.
    pub fn max_support_imbalance(&self) -> f64 {
        self.measure
            .support()
            .filter_map(|w| self.support_transport(w))
            .flat_map(|t| {
                t.pieces
                    .iter()
                    .map(|p| (p.source_mass - p.image_mass).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Upper bound on d(w^aμ)/dμ derived from stationarity: if w⁻¹ = t₁⋯t_k
    /// with every tᵢ in the support of m, the derivative is at most Π 1/m(tᵢ).
    /// Returns `f64::INFINITY` when the greedy factorization fails.
    pub fn rn_word_bound(&self, w: &GroupWord) -> f64 {
        rn_word_bound(&self.measure, w)
    }
}

/// See [`CellAction::rn_word_bound`].
pub fn rn_word_bound(measure: &StepDistribution, w: &GroupWord) -> f64 {
    if w.is_identity() {
        return 1.0;
    }
    let target = w.inverse();
    let letters = target.letters();
    let mut support: Vec<(&GroupWord, f64)> = measure
        .entries()
        .iter()
        .filter(|(x, _)| !x.is_identity())
        .map(|(x, p)| (x, *p))
        .collect();
    support.sort_by(|x, y| y.0.len().cmp(&x.0.len()));
    let mut bound = 1.0;
    let mut pos = 0;
    while pos < letters.len() {
        let hit = support.iter().find(|(x, _)| {
            let l = x.letters();
            pos + l.len() <= letters.len() && &letters[pos..pos + l.len()] == l
        });
        match hit {
            Some((x, p)) => {
                bound /= p;
                pos += x.len();
            }
            None => return f64::INFINITY,
        }
    }
    bound
}

/// Mass-splitting composition: `outer ∘ inner`, i.e. the transport of
/// `outer.word · inner.word` (inner acts first).
pub fn compose(outer: &WordTransport, inner: &WordTransport, cells: &[Cell]) -> WordTransport {
    let n = cells.len();
    let mut by_source: Vec<Vec<&TransportPiece>> = vec![Vec::new(); n];
    for p in &outer.pieces {
        by_source[p.source].push(p);
    }
    let mut incoming = vec![0usize; n];
    for p in &inner.pieces {
        incoming[p.target] += 1;
    }
    let exact_split = (0..n).all(|c| incoming[c] <= 1 || by_source[c].len() <= 1);
    let mut acc: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for p1 in &inner.pieces {
        let mid = p1.target;
        let w_mid = cells[mid].weight;
        for p2 in &by_source[mid] {
            let e = acc.entry((p1.source, p2.target)).or_insert((0.0, 0.0));
            e.0 += p1.source_mass * p2.source_mass / w_mid;
            e.1 += p1.image_mass * p2.image_mass / w_mid;
        }
    }
    let word = outer
        .word
        .multiply(&inner.word)
        .unwrap_or_else(|_| outer.word.clone());
    WordTransport {
        word,
        pieces: acc
            .into_iter()
            .filter(|(_, (t, w))| *t >= NEGLIGIBLE_MASS && *w >= NEGLIGIBLE_MASS)
            .map(|((s, d), (t, w))| TransportPiece::new(s, d, t, w))
            .collect(),
        exact: outer.exact && inner.exact && exact_split,
    }
}
