use std::collections::HashMap;

use super::matching::{search_annealed, search_exhaustive};
use super::{assignment_count, AnnealSchedule, Evaluator, OrderedPartition};
use crate::action::CellAction;
use crate::error::{Error, Result};
use crate::words::GroupWord;

/// Relative tolerance for deciding that an image fills a cell or misses it.
const CELL_UNION_TOL: f64 = 1e-9;
/// Slack allowed when checking the 7δ bound in floating point.
const BOUND_SLACK: f64 = 1e-12;

/// Summary of a constructive matching run.
#[derive(Clone, Debug, PartialEq)]
pub struct Prop2Certificate {
    pub epsilon: f64,
    /// Largest set-level discrepancy |μ(g^a S ∩ S′) − μ(g^b B_S ∩ B_S′)| over
    /// g ∈ F and S, S′ in the enlarged family.
    pub delta_achieved: f64,
    pub two_sided: f64,
    /// δ < ε/7 was reached.
    pub certified: bool,
    /// two_sided ≤ 7δ (up to rounding slack).
    pub bound_holds: bool,
    pub family_size: usize,
    pub atoms: usize,
    pub exhaustive: bool,
    pub evaluations: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prop2Outcome {
    pub partition_b: OrderedPartition,
    pub certificate: Prop2Certificate,
}

/// μ(g^x P_i ∩ h^x P_j) for every g, h in `words` and pieces i, j, laid out
/// as `[(gi * |F| + hi) * n * n + i * n + j]`.
///
/// Computed as Σ_{c ∈ P_j} r_h(c)·μ((h⁻¹g)^x P_i ∩ c), which needs h to have a
/// constant derivative on each source cell and h⁻¹g to have an exact transport.
fn two_sided_values(
    x: &CellAction,
    words: &[GroupWord],
    part: &OrderedPartition,
) -> Result<Vec<f64>> {
    let n = part.n();
    let f = words.len();
    let labels = part.labels();
    let mut out = vec![0.0; f * f * n * n];
    for (hi, h) in words.iter().enumerate() {
        let (ratios, constant) = x.word_transport(h)?.source_ratios(x.cells());
        if !constant {
            return Err(Error::Resolution(format!(
                "the derivative of `{h}` is not constant on cells"
            )));
        }
        for (gi, g) in words.iter().enumerate() {
            let w = h.inverse().multiply(g)?;
            let tr = x.word_transport(&w)?;
            if !tr.exact {
                return Err(Error::Resolution(format!(
                    "transport of `{w}` is not exact"
                )));
            }
            let base = (gi * f + hi) * n * n;
            for p in &tr.pieces {
                out[base + labels[p.source] * n + labels[p.target]] +=
                    ratios[p.target] * p.image_mass;
            }
        }
    }
    Ok(out)
}

/// max over g, h ∈ F and i, j of |μ(g^a A_i ∩ h^a A_j) − μ(g^b B_i ∩ h^b B_j)|.
pub fn two_sided_discrepancy(
    a: &CellAction,
    b: &CellAction,
    words: &[GroupWord],
    part_a: &OrderedPartition,
    part_b: &OrderedPartition,
) -> Result<f64> {
    if a.rank() != b.rank() {
        return Err(Error::RankMismatch {
            left: a.rank(),
            right: b.rank(),
        });
    }
    if part_a.n() != part_b.n() {
        return Err(Error::Dimension(format!(
            "partitions with {} and {} pieces",
            part_a.n(),
            part_b.n()
        )));
    }
    check_cells(a, part_a)?;
    check_cells(b, part_b)?;
    let va = two_sided_values(a, words, part_a)?;
    let vb = two_sided_values(b, words, part_b)?;
    Ok(super::linf(&va, &vb))
}

fn check_cells(x: &CellAction, part: &OrderedPartition) -> Result<()> {
    if part.cells() != x.n_cells() {
        return Err(Error::Dimension(format!(
            "partition covers {} cells, action has {}",
            part.cells(),
            x.n_cells()
        )));
    }
    Ok(())
}

/// The sets g^a A_i for g ∈ F, preceded by the whole space, as cell masks.
fn enlarged_family(
    a: &CellAction,
    words: &[GroupWord],
    part: &OrderedPartition,
) -> Result<Vec<Vec<bool>>> {
    let k = a.n_cells();
    let weights = a.weights();
    let mut family = vec![vec![true; k]];
    for i in 0..part.n() {
        for g in words {
            let tr = a.word_transport(g)?;
            let mut image = vec![0.0; k];
            for p in tr.pieces.iter().filter(|p| part.labels()[p.source] == i) {
                image[p.target] += p.image_mass;
            }
            let mut set = vec![false; k];
            for c in 0..k {
                let tol = CELL_UNION_TOL * weights[c];
                if (image[c] - weights[c]).abs() <= tol {
                    set[c] = true;
                } else if image[c] > tol {
                    return Err(Error::Resolution(format!(
                        "{g}·A_{} covers {:.3e} of cell `{}` (weight {:.3e}); not a union of cells",
                        i + 1,
                        image[c],
                        a.cells()[c].id,
                        weights[c]
                    )));
                }
            }
            if !tr.exact {
                return Err(Error::Resolution(format!(
                    "transport of `{g}` is not exact"
                )));
            }
            family.push(set);
        }
    }
    Ok(family)
}

/// Groups cells by their membership pattern across the family.
fn atoms(family: &[Vec<bool>], cells: usize) -> (Vec<usize>, usize) {
    let mut ids: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(cells);
    for c in 0..cells {
        let sig: Vec<bool> = family.iter().map(|s| s[c]).collect();
        let next = ids.len();
        labels.push(*ids.entry(sig).or_insert(next));
    }
    (labels, ids.len())
}

/// Set-level statistics μ(g S ∩ S′) from atom statistics.
fn set_stats(
    atom_point: &[f64],
    n_atoms: usize,
    sets: &[Vec<usize>],
    words: usize,
    out: &mut Vec<f64>,
) {
    out.clear();
    let block = n_atoms * n_atoms;
    let mut rows = vec![0.0; n_atoms];
    for k in 0..words {
        let p = &atom_point[k * block..(k + 1) * block];
        for s in sets {
            rows.iter_mut().for_each(|r| *r = 0.0);
            for &alpha in s {
                for (beta, r) in rows.iter_mut().enumerate() {
                    *r += p[alpha * n_atoms + beta];
                }
            }
            for t in sets {
                out.push(t.iter().map(|&beta| rows[beta]).sum());
            }
        }
    }
}

/// Constructive direction of the two-sided matching: enlarge A to the sets
/// g^a A_i (g ∈ F), match b's cells to the atoms they generate so that all
/// one-sided set statistics over F agree to within δ, and return B_i as the
/// union of the atoms inside A_i. Certified when δ < ε/7, in which case the
/// two-sided discrepancy is at most 7δ < ε.
pub fn prop2_construct(
    a: &CellAction,
    b: &CellAction,
    words: &[GroupWord],
    part_a: &OrderedPartition,
    epsilon: f64,
    budget: u64,
    seed: u64,
) -> Result<Prop2Outcome> {
    if !(epsilon > 0.0) {
        return Err(Error::Malformed(format!(
            "epsilon {epsilon} must be positive"
        )));
    }
    if !words.iter().any(GroupWord::is_identity) {
        return Err(Error::Malformed(
            "the word list must contain the identity".into(),
        ));
    }
    if a.rank() != b.rank() {
        return Err(Error::RankMismatch {
            left: a.rank(),
            right: b.rank(),
        });
    }
    check_cells(a, part_a)?;
    let family = enlarged_family(a, words, part_a)?;
    let (atom_of, n_atoms) = atoms(&family, a.n_cells());
    let sets: Vec<Vec<usize>> = family
        .iter()
        .map(|s| {
            let mut v: Vec<usize> = (0..a.n_cells())
                .filter(|&c| s[c])
                .map(|c| atom_of[c])
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();

    let eval_a = Evaluator::new(a, words)?;
    let mut target = Vec::new();
    set_stats(
        &eval_a.point(&atom_of, n_atoms),
        n_atoms,
        &sets,
        words.len(),
        &mut target,
    );

    let eval_b = Evaluator::new(b, words)?;
    let objective = |labels: &[usize]| {
        let mut got = Vec::with_capacity(target.len());
        set_stats(
            &eval_b.point(labels, n_atoms),
            n_atoms,
            &sets,
            words.len(),
            &mut got,
        );
        super::linf(&got, &target)
    };
    let k_b = b.n_cells();
    let exhaustive = assignment_count(n_atoms, k_b) <= budget as u128;
    let (labels_b, delta, evaluations) = if exhaustive {
        search_exhaustive(k_b, n_atoms, budget, objective)?
    } else {
        search_annealed(
            k_b,
            n_atoms,
            budget,
            seed,
            &AnnealSchedule::default(),
            objective,
        )
    };

    // B_i is the union of the atoms lying in A_i
    let identity_pos = words
        .iter()
        .position(GroupWord::is_identity)
        .expect("checked above");
    let mut piece_of_atom = vec![0usize; n_atoms];
    for i in 0..part_a.n() {
        for &alpha in &sets[1 + i * words.len() + identity_pos] {
            piece_of_atom[alpha] = i;
        }
    }
    let partition_b = OrderedPartition::new(
        labels_b.iter().map(|&l| piece_of_atom[l]).collect(),
        part_a.n(),
    )?;
    let two_sided = two_sided_discrepancy(a, b, words, part_a, &partition_b)?;
    Ok(Prop2Outcome {
        partition_b,
        certificate: Prop2Certificate {
            epsilon,
            delta_achieved: delta,
            two_sided,
            certified: delta < epsilon / 7.0,
            bound_holds: two_sided <= 7.0 * delta + BOUND_SLACK,
            family_size: family.len(),
            atoms: n_atoms,
            exhaustive,
            evaluations,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{boundary_action, finite_bijective, stabilize, BoundarySpec, Permutations};
    use crate::words::StepDistribution;

    fn words(rank: usize, list: &[&str]) -> Vec<GroupWord> {
        list.iter()
            .map(|w| GroupWord::parse(rank, w).unwrap())
            .collect()
    }

    fn bijective(p0: Vec<usize>, p1: Vec<usize>) -> CellAction {
        let m = StepDistribution::uniform_nearest_neighbor(2).unwrap();
        let n = p0.len();
        let mut perms = Permutations::new();
        perms.insert(0, p0);
        perms.insert(1, p1);
        finite_bijective(&perms, &vec![1.0 / n as f64; n], &m).unwrap()
    }

    #[test]
    fn identity_word_reduces_to_piece_masses() {
        let a = bijective(vec![1, 2, 0, 3], vec![0, 1, 3, 2]);
        let f = words(2, &["e"]);
        let pa = OrderedPartition::new(vec![0, 0, 1, 1], 2).unwrap();
        let pb = OrderedPartition::new(vec![0, 1, 1, 1], 2).unwrap();
        let d = two_sided_discrepancy(&a, &a, &f, &pa, &pb).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        assert_eq!(two_sided_discrepancy(&a, &a, &f, &pa, &pa).unwrap(), 0.0);
    }

    #[test]
    fn identical_actions_certify_with_zero() {
        let a = bijective(vec![1, 2, 0, 4, 3, 5], vec![0, 1, 5, 3, 2, 4]);
        let f = words(2, &["e", "a", "b"]);
        let pa = OrderedPartition::new(vec![0, 1, 0, 1, 1, 0], 2).unwrap();
        let out = prop2_construct(&a, &a, &f, &pa, 0.01, 1_000_000, 0).unwrap();
        assert_eq!(out.certificate.delta_achieved, 0.0);
        assert_eq!(out.certificate.two_sided, 0.0);
        assert!(out.certificate.certified && out.certificate.bound_holds);
    }

    #[test]
    fn stabilization_is_certified() {
        let a = bijective(vec![1, 2, 0, 3], vec![0, 3, 2, 1]);
        let s = stabilize(&a, &[0.5, 0.5]).unwrap();
        let f = words(2, &["e", "a"]);
        let pa = OrderedPartition::new(vec![0, 1, 1, 0], 2).unwrap();
        let out = prop2_construct(&a, &s, &f, &pa, 0.01, 1_000_000, 0).unwrap();
        assert!(out.certificate.certified);
        assert!(out.certificate.two_sided <= 7.0 * out.certificate.delta_achieved + 1e-12);
    }

    #[test]
    fn boundary_isomorphic_copy_has_zero_two_sided_discrepancy() {
        let b = boundary_action(&BoundarySpec::uniform(2, 2).unwrap()).unwrap();
        let f = words(2, &["e", "a", "b^-1"]);
        let pa = OrderedPartition::new((0..12).map(|c| c % 3).collect(), 3).unwrap();
        assert_eq!(two_sided_discrepancy(&b, &b, &f, &pa, &pa).unwrap(), 0.0);
    }

    #[test]
    fn coarse_partitions_need_resolution() {
        let b = boundary_action(&BoundarySpec::uniform(2, 1).unwrap()).unwrap();
        let f = words(2, &["e", "a"]);
        // a·[a] = [a a] is a proper part of the cell [a]
        let pa = OrderedPartition::new(vec![0, 1, 1, 1], 2).unwrap();
        let err = prop2_construct(&b, &b, &f, &pa, 0.1, 1000, 0).unwrap_err();
        assert!(matches!(err, Error::Resolution(_)));
    }

    #[test]
    fn identity_is_required() {
        let a = bijective(vec![1, 0], vec![0, 1]);
        let pa = OrderedPartition::whole(2);
        assert!(prop2_construct(&a, &a, &words(2, &["a"]), &pa, 0.1, 100, 0).is_err());
    }
}
