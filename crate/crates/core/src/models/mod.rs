//! Constructors for concrete stationary actions.

mod boundary;

pub use boundary::{
    boundary_action, uniform_boundary_entropy, BoundaryModel, BoundarySpec, HarmonicMeasure,
    SOLVER_MAX_ITER, SOLVER_TOL,
};

use std::collections::{BTreeMap, BTreeSet};

use crate::action::{ActionKind, Cell, CellAction, TransportPiece, WordTransport};
use crate::error::{Error, Result};
use crate::words::{GroupWord, StepDistribution};

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::Malformed("empty weight vector".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
        return Err(Error::Malformed("weights must lie in (0, 1]".into()));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > crate::action::WEIGHT_SUM_TOL {
        return Err(Error::Malformed(format!("weights sum to {s}, not 1")));
    }
    Ok(())
}

fn numbered_cells(weights: &[f64]) -> Vec<Cell> {
    weights
        .iter()
        .enumerate()
        .map(|(i, &w)| Cell::new(i.to_string(), w))
        .collect()
}

/// The trivial action ι: every group element fixes every point.
pub fn trivial_action(weights: &[f64], m: &StepDistribution) -> Result<CellAction> {
    check_weights(weights)?;
    let cells = numbered_cells(weights);
    let transports = m
        .support()
        .filter(|g| !g.is_identity())
        .map(|g| {
            let mut t = WordTransport::identity(&cells, m.rank());
            t.word = g.clone();
            t
        })
        .collect();
    Ok(
        CellAction::new(cells, m.clone(), transports, ActionKind::Bijective)?
            .with_ergodic(Some(weights.len() == 1)),
    )
}

/// Permutations of `{0..N-1}`, one per generator index.
pub type Permutations = BTreeMap<u8, Vec<usize>>;

fn check_perms(perms: &Permutations, n: usize, rank: usize) -> Result<()> {
    for (&g, p) in perms {
        if g as usize >= rank {
            return Err(Error::Malformed(format!(
                "generator {g} out of range for rank {rank}"
            )));
        }
        if p.len() != n {
            return Err(Error::Malformed(format!(
                "permutation for generator {g} has arity {}, expected {n}",
                p.len()
            )));
        }
        let mut seen = vec![false; n];
        for &x in p {
            if x >= n || std::mem::replace(&mut seen[x], true) {
                return Err(Error::Malformed(format!(
                    "generator {g} does not permute 0..{n}"
                )));
            }
        }
    }
    Ok(())
}

/// Point map of a word: letters act right to left.
fn word_permutation(perms: &Permutations, w: &GroupWord, n: usize) -> Result<Vec<usize>> {
    let mut map: Vec<usize> = (0..n).collect();
    for l in w.letters().iter().rev() {
        let p = perms.get(&l.generator).ok_or_else(|| {
            Error::Malformed(format!("no permutation given for generator of word {w}"))
        })?;
        let step: Vec<usize> = if l.inverse {
            let mut inv = vec![0; n];
            for (x, &y) in p.iter().enumerate() {
                inv[y] = x;
            }
            inv
        } else {
            p.clone()
        };
        for x in map.iter_mut() {
            *x = step[*x];
        }
    }
    Ok(map)
}

fn perm_transport(word: &GroupWord, map: &[usize], weights: &[f64]) -> WordTransport {
    WordTransport {
        word: word.clone(),
        pieces: (0..map.len())
            .map(|c| TransportPiece::new(c, map[c], weights[c], weights[map[c]]))
            .collect(),
        exact: true,
    }
}

/// Orbits of the group generated by the support of m, each sorted, ordered
/// by smallest element.
pub fn orbits(perms: &Permutations, m: &StepDistribution, n: usize) -> Result<Vec<Vec<usize>>> {
    check_perms(perms, n, m.rank())?;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    for g in m.support() {
        let map = word_permutation(perms, g, n)?;
        for (x, &y) in map.iter().enumerate() {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            if rx != ry {
                parent[rx.max(ry)] = rx.min(ry);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for x in 0..n {
        let r = find(&mut parent, x);
        groups.entry(r).or_default().push(x);
    }
    Ok(groups.into_values().collect())
}

/// A finite action by permutations of cells. Pieces carry `T = weight(c)`
/// and `W = weight(g·c)`, so the action validates exactly when the weights
/// are stationary.
pub fn finite_bijective(
    perms: &Permutations,
    weights: &[f64],
    m: &StepDistribution,
) -> Result<CellAction> {
    check_weights(weights)?;
    let n = weights.len();
    check_perms(perms, n, m.rank())?;
    let rank = m.rank();
    let mut words: BTreeSet<GroupWord> = perms
        .keys()
        .map(|&g| GroupWord::generator(rank, g, false))
        .collect::<Result<_>>()?;
    words.extend(m.support().filter(|g| !g.is_identity()).cloned());
    let mut transports = Vec::with_capacity(words.len());
    for w in &words {
        let map = word_permutation(perms, w, n)?;
        transports.push(perm_transport(w, &map, weights));
    }
    let ergodic = orbits(perms, m, n)?.len() == 1;
    Ok(CellAction::new(
        numbered_cells(weights),
        m.clone(),
        transports,
        ActionKind::Bijective,
    )?
    .with_ergodic(Some(ergodic)))
}

/// The simplex of stationary weight vectors of a finite permutation action.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexDescription {
    /// Uniform measure on each orbit.
    pub extreme_points: Vec<Vec<f64>>,
    pub orbits: Vec<Vec<usize>>,
}

impl SimplexDescription {
    /// Convex combination of the extreme points with the given coefficients.
    pub fn point(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        if coefficients.len() != self.extreme_points.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} extreme points",
                coefficients.len(),
                self.extreme_points.len()
            )));
        }
        let n = self.extreme_points.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (c, p) in coefficients.iter().zip(&self.extreme_points) {
            for (o, x) in out.iter_mut().zip(p) {
                *o += c * x;
            }
        }
        Ok(out)
    }
}

/// Stationary weights of a finite permutation action are invariant, hence
/// constant on orbits; the extreme points are the orbit-uniform measures.
pub fn stationary_simplex(
    perms: &Permutations,
    m: &StepDistribution,
    n: usize,
) -> Result<SimplexDescription> {
    let orbits = orbits(perms, m, n)?;
    let extreme_points = orbits
        .iter()
        .map(|o| {
            let mut p = vec![0.0; n];
            for &x in o {
                p[x] = 1.0 / o.len() as f64;
            }
            p
        })
        .collect();
    Ok(SimplexDescription {
        extreme_points,
        orbits,
    })
}

fn combined_kind(a: ActionKind, b: ActionKind) -> ActionKind {
    match (a, b) {
        (ActionKind::Opaque, _) | (_, ActionKind::Opaque) => ActionKind::Opaque,
        (ActionKind::Bijective, ActionKind::Bijective) => ActionKind::Bijective,
        _ => ActionKind::Markov,
    }
}

/// t·a + (1−t)·b: disjoint union with weights and transports scaled by t and
/// 1−t. Cell ids get prefixes `0/` and `1/`.
pub fn convex_combine(a: &CellAction, b: &CellAction, t: f64) -> Result<CellAction> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Malformed(format!(
            "combination parameter {t} not in (0,1)"
        )));
    }
    if !a.measure().same_as(b.measure()) {
        return Err(Error::MeasureMismatch);
    }
    let s = 1.0 - t;
    let offset = a.n_cells();
    let cells: Vec<Cell> = a
        .cells()
        .iter()
        .map(|c| Cell::new(format!("0/{}", c.id), t * c.weight))
        .chain(
            b.cells()
                .iter()
                .map(|c| Cell::new(format!("1/{}", c.id), s * c.weight)),
        )
        .collect();
    let words: BTreeSet<GroupWord> = a
        .stored_transports()
        .chain(b.stored_transports())
        .map(|tr| tr.word.clone())
        .collect();
    let mut transports = Vec::with_capacity(words.len());
    for w in words {
        let ta = a.word_transport(&w)?;
        let tb = b.word_transport(&w)?;
        let pieces = ta
            .pieces
            .iter()
            .map(|p| TransportPiece::new(p.source, p.target, t * p.source_mass, t * p.image_mass))
            .chain(tb.pieces.iter().map(|p| {
                TransportPiece::new(
                    offset + p.source,
                    offset + p.target,
                    s * p.source_mass,
                    s * p.image_mass,
                )
            }))
            .collect();
        transports.push(WordTransport {
            word: w,
            pieces,
            exact: ta.exact && tb.exact,
        });
    }
    Ok(CellAction::new(
        cells,
        a.measure().clone(),
        transports,
        combined_kind(a.kind(), b.kind()),
    )?
    .with_ergodic(Some(false)))
}

/// The product a × ι with a trivial factor on weights `trivial_weights`.
/// Cell ids are `"{cell}|{j}"`.
pub fn stabilize(a: &CellAction, trivial_weights: &[f64]) -> Result<CellAction> {
    check_weights(trivial_weights)?;
    let k = trivial_weights.len();
    let mut cells = Vec::with_capacity(a.n_cells() * k);
    for c in a.cells() {
        for (j, v) in trivial_weights.iter().enumerate() {
            cells.push(Cell::new(format!("{}|{j}", c.id), c.weight * v));
        }
    }
    let transports = a
        .stored_transports()
        .map(|tr| WordTransport {
            word: tr.word.clone(),
            pieces: tr
                .pieces
                .iter()
                .flat_map(|p| {
                    trivial_weights.iter().enumerate().map(move |(j, v)| {
                        TransportPiece::new(
                            p.source * k + j,
                            p.target * k + j,
                            p.source_mass * v,
                            p.image_mass * v,
                        )
                    })
                })
                .collect(),
            exact: tr.exact,
        })
        .collect();
    let ergodic = if k == 1 { a.ergodic() } else { Some(false) };
    Ok(CellAction::new(cells, a.measure().clone(), transports, a.kind())?.with_ergodic(ergodic))
}

/// Index of the cell `(c, j)` of `stabilize(a, w)` with `w.len() == k`.
pub fn product_cell(c: usize, j: usize, k: usize) -> usize {
    c * k + j
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::STATIONARITY_TOL;

    fn m2() -> StepDistribution {
        StepDistribution::uniform_nearest_neighbor(2).unwrap()
    }

    fn perms(a: Vec<usize>, b: Vec<usize>) -> Permutations {
        [(0u8, a), (1u8, b)].into_iter().collect()
    }

    const H2: f64 = 0.549_306_144_334_054_8;

    #[test]
    fn trivial_examples() {
        let one = trivial_action(&[1.0], &m2()).unwrap();
        assert_eq!(one.n_cells(), 1);
        assert_eq!(one.entropy().unwrap(), 0.0);
        let two = trivial_action(&[0.5, 0.5], &m2()).unwrap();
        assert!(two.validate(STATIONARITY_TOL).is_valid());
        let t = trivial_action(&[0.3, 0.7], &m2()).unwrap();
        assert_eq!(t.entropy().unwrap(), 0.0);
        let d = t.rn_pieces(&GroupWord::parse(2, "a b").unwrap()).unwrap();
        assert_eq!(d.atoms.len(), 1);
        assert_eq!(d.atoms[0].0, 1.0);
        assert!(trivial_action(&[0.3, 0.6], &m2()).is_err());
        assert!(trivial_action(&[], &m2()).is_err());
    }

    #[test]
    fn bijective_examples() {
        let id = finite_bijective(
            &perms(vec![0, 1, 2], vec![0, 1, 2]),
            &[0.2, 0.5, 0.3],
            &m2(),
        )
        .unwrap();
        assert!(id.validate(STATIONARITY_TOL).is_valid());
        let third = 1.0 / 3.0;
        let cyc =
            finite_bijective(&perms(vec![1, 2, 0], vec![0, 1, 2]), &[third; 3], &m2()).unwrap();
        let report = cyc.validate(STATIONARITY_TOL);
        assert!(report.is_valid());
        assert!(report.max_residual() < 1e-16);
        assert_eq!(cyc.entropy().unwrap(), 0.0);
        assert_eq!(cyc.ergodic(), Some(true));
        let bad = finite_bijective(
            &perms(vec![1, 2, 0], vec![0, 1, 2]),
            &[0.5, 0.3, 0.2],
            &m2(),
        )
        .unwrap();
        assert!(!bad.validate(STATIONARITY_TOL).is_valid());
        assert!(finite_bijective(&perms(vec![1, 0], vec![0, 1, 2]), &[third; 3], &m2()).is_err());
        assert!(
            finite_bijective(&perms(vec![0, 0, 1], vec![0, 1, 2]), &[third; 3], &m2()).is_err()
        );
    }

    #[test]
    fn simplex_examples() {
        let s = stationary_simplex(&perms(vec![0, 1, 2], vec![0, 1, 2]), &m2(), 3).unwrap();
        assert_eq!(
            s.extreme_points,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0]
            ]
        );
        let s =
            stationary_simplex(&perms(vec![1, 2, 3, 4, 0], (0..5).collect()), &m2(), 5).unwrap();
        assert_eq!(s.extreme_points, vec![vec![0.2; 5]]);
        let s =
            stationary_simplex(&perms(vec![1, 0, 3, 4, 2], (0..5).collect()), &m2(), 5).unwrap();
        assert_eq!(s.orbits, vec![vec![0, 1], vec![2, 3, 4]]);
        let p = s.point(&[0.4, 0.6]).unwrap();
        assert!(p.iter().all(|x| (x - 0.2).abs() < 1e-15));
    }

    #[test]
    fn combine_and_stabilize_entropy() {
        let bnd = boundary_action(&BoundarySpec::uniform(2, 2).unwrap()).unwrap();
        let triv = trivial_action(&[1.0], &m2()).unwrap();
        let c = convex_combine(&bnd, &triv, 0.3).unwrap();
        assert!(c.validate(STATIONARITY_TOL).is_valid());
        assert!((c.entropy().unwrap() - 0.3 * H2).abs() < 1e-12);
        let same = convex_combine(&bnd, &bnd, 0.5).unwrap();
        assert!((same.entropy().unwrap() - bnd.entropy().unwrap()).abs() < 1e-12);
        let st = stabilize(&bnd, &[0.5, 0.5]).unwrap();
        assert_eq!(st.n_cells(), 24);
        assert!((st.entropy().unwrap() - H2).abs() < 1e-12);
        let st1 = stabilize(&bnd, &[1.0]).unwrap();
        assert_eq!(st1.ergodic(), Some(true));
        assert!((st1.entropy().unwrap() - bnd.entropy().unwrap()).abs() < 1e-15);
        assert!(convex_combine(&bnd, &triv, 1.0).is_err());
        let other = trivial_action(
            &[1.0],
            &StepDistribution::uniform_nearest_neighbor(3).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            convex_combine(&bnd, &other, 0.5),
            Err(Error::MeasureMismatch)
        ));
    }
}
