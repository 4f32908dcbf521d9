use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stationary::geometry::{
    cloud, containment_defect, delta, match_annealed, match_exhaustive, report_from_families,
    stats_point, AnnealSchedule, CloudFamily, CloudMode, DeltaOptions, OrderedPartition,
};
use stationary::models::{
    boundary_action, convex_combine, finite_bijective, stabilize, stationary_simplex,
    trivial_action, BoundarySpec, Permutations,
};
use stationary::{enumerate_words, CellAction, StepDistribution};

fn uniform() -> StepDistribution {
    StepDistribution::uniform_nearest_neighbor(2).unwrap()
}

fn random_action(rng: &mut ChaCha8Rng, cells: usize) -> CellAction {
    let m = uniform();
    let perms: Permutations = (0..2u8)
        .map(|g| {
            let mut p: Vec<usize> = (0..cells).collect();
            p.shuffle(rng);
            (g, p)
        })
        .collect();
    let simplex = stationary_simplex(&perms, &m, cells).unwrap();
    let raw: Vec<f64> = simplex
        .orbits
        .iter()
        .map(|_| rng.random_range(0.1..1.0))
        .collect();
    let s: f64 = raw.iter().sum();
    let c: Vec<f64> = raw.iter().map(|x| x / s).collect();
    finite_bijective(&perms, &simplex.point(&c).unwrap(), &m).unwrap()
}

fn boundary(depth: usize) -> CellAction {
    boundary_action(&BoundarySpec::uniform(2, depth).unwrap()).unwrap()
}

fn small_opts() -> DeltaOptions {
    DeltaOptions {
        max_m: 4,
        max_n: 3,
        ..DeltaOptions::default()
    }
}

#[test]
fn delta_is_a_pseudometric_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = DeltaOptions::default();
    for _ in 0..4 {
        let actions: Vec<CellAction> = (0..3)
            .map(|_| {
                let cells = rng.random_range(1..=3);
                random_action(&mut rng, cells)
            })
            .collect();
        let families: Vec<CloudFamily> = actions
            .iter()
            .map(|a| CloudFamily::compute(a, &opts, CloudMode::Exact).unwrap())
            .collect();
        let d = |i: usize, j: usize| {
            report_from_families(&families[i], &families[j], &opts, false)
                .unwrap()
                .truncated_value
        };
        for i in 0..3 {
            assert_eq!(d(i, i), 0.0);
            for j in 0..3 {
                assert!((d(i, j) - d(j, i)).abs() <= 1e-15);
                for k in 0..3 {
                    assert!(d(i, k) <= d(i, j) + d(j, k) + 1e-10);
                }
            }
        }
    }
}

#[test]
fn delta_report_matches_families() {
    let a = boundary(1);
    let b = trivial_action(&[0.5, 0.5], &uniform()).unwrap();
    let opts = small_opts();
    let direct = delta(&a, &b, &opts).unwrap();
    let fa = CloudFamily::compute(&a, &opts, CloudMode::Exact).unwrap();
    let fb = CloudFamily::compute(&b, &opts, CloudMode::Exact).unwrap();
    let cached = report_from_families(&fa, &fb, &opts, false).unwrap();
    assert_eq!(direct.truncated_value, cached.truncated_value);
    assert!(direct.is_complete());
    assert!((direct.tail_bound - (1.0 - (1.0 - 0.0625) * (1.0 - 0.125))).abs() < 1e-15);
}

#[test]
fn stabilization_is_weakly_contained_in_the_original() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut models = vec![boundary(1), trivial_action(&[1.0], &uniform()).unwrap()];
    models.push(convex_combine(&boundary(1), &models[1], 0.5).unwrap());
    while models.len() < 10 {
        let cells = rng.random_range(1..=2);
        models.push(random_action(&mut rng, cells));
    }
    let opts = small_opts();
    for a in &models {
        let stable = stabilize(a, &[0.5, 0.5]).unwrap();
        let report = containment_defect(a, &stable, &opts).unwrap();
        assert!(report.is_complete());
        assert_eq!(report.truncated_value, 0.0);
    }
    let defect = containment_defect(
        &boundary(1),
        &trivial_action(&[1.0], &uniform()).unwrap(),
        &opts,
    )
    .unwrap();
    assert!(defect.truncated_value > 1e-3);
}

#[test]
fn sampled_clouds_lie_inside_exact_clouds() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let words = enumerate_words(2, 3);
    for trial in 0..20 {
        let a = random_action(&mut rng, 8);
        let exact = cloud(&a, &words, 2, CloudMode::Exact, 1_000_000, 0).unwrap();
        let sampled = cloud(&a, &words, 2, CloudMode::Sampled, 64, trial).unwrap();
        assert!(sampled.is_subset_of(&exact, 1e-12));
        assert!(sampled.len() <= exact.len());
    }
}

#[test]
fn annealing_never_beats_the_exhaustive_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let words = enumerate_words(2, 3);
    let mut equal = 0;
    for trial in 0..20 {
        let a = random_action(&mut rng, 4);
        let b = random_action(&mut rng, 5);
        let labels: Vec<usize> = (0..4).map(|_| rng.random_range(0..2)).collect();
        let target = stats_point(&a, &words, &OrderedPartition::new(labels, 2).unwrap()).unwrap();
        let best = match_exhaustive(&b, &target, &words, 10_000).unwrap();
        let annealed = match_annealed(
            &b,
            &target,
            &words,
            10_000,
            trial,
            &AnnealSchedule::default(),
        )
        .unwrap();
        assert!(annealed.discrepancy >= best.discrepancy);
        if annealed.discrepancy == best.discrepancy {
            equal += 1;
        }
    }
    assert!(equal >= 16, "{equal}/20 annealed runs reached the optimum");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn delta_vanishes_on_relabelled_copies(seed in any::<u64>(), cells in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_action(&mut rng, cells);
        let b = stabilize(&a, &[1.0]).unwrap();
        let report = delta(&a, &b, &small_opts()).unwrap();
        prop_assert_eq!(report.truncated_value, 0.0);
    }

    #[test]
    fn truncated_delta_stays_below_total_weight(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_action(&mut rng, 2);
        let b = random_action(&mut rng, 3);
        let report = delta(&a, &b, &small_opts()).unwrap();
        let weight: f64 = report.terms.iter().map(|t| t.weight).sum();
        prop_assert!(report.truncated_value >= 0.0);
        prop_assert!(report.truncated_value <= weight);
    }
}
