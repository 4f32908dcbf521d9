use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stationary::models::{finite_bijective, stationary_simplex, Permutations};
use stationary::StepDistribution;

/// Transition operator (Pμ)(y) = Σ_g m(g)·μ(g⁻¹y) for permutations given on
/// generator letters. Inverse letters act by the inverse permutation.
fn transition(perms: &Permutations, probs: &[f64], n: usize) -> DMatrix<f64> {
    let mut p = DMatrix::zeros(n, n);
    for (&g, perm) in perms {
        let (forward, backward) = (probs[2 * g as usize], probs[2 * g as usize + 1]);
        for x in 0..n {
            p[(perm[x], x)] += forward;
            p[(x, perm[x])] += backward;
        }
    }
    p
}

/// Dimension of {μ : Pμ = μ} and an orthonormal basis of it, from the SVD
/// of P − I.
fn fixed_space(p: &DMatrix<f64>) -> (usize, DMatrix<f64>) {
    let n = p.nrows();
    let a = p - DMatrix::identity(n, n);
    let svd = a.svd(true, true);
    let v_t = svd.v_t.expect("requested");
    let kernel: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] < 1e-9).collect();
    let basis = DMatrix::from_fn(n, kernel.len(), |r, c| v_t[(kernel[c], r)]);
    (kernel.len(), basis)
}

fn random_perms(rng: &mut ChaCha8Rng, n: usize) -> Permutations {
    (0..2u8)
        .map(|g| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            (g, p)
        })
        .collect()
}

#[test]
fn orbit_uniform_simplex_agrees_with_eigen_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let n = rng.random_range(1..=12);
        let perms = random_perms(&mut rng, n);
        let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let m = StepDistribution::nearest_neighbor(2, &probs).unwrap();
        let simplex = stationary_simplex(&perms, &m, n).unwrap();
        let p = transition(&perms, &probs, n);
        let (dim, basis) = fixed_space(&p);
        assert_eq!(dim, simplex.extreme_points.len());
        for point in &simplex.extreme_points {
            let mu = nalgebra::DVector::from_column_slice(point);
            assert!((&p * &mu - &mu).amax() <= 1e-10);
            let projected = &basis * (basis.transpose() * &mu);
            assert!((projected - &mu).amax() <= 1e-10);
        }
        let raw: Vec<f64> = simplex
            .orbits
            .iter()
            .map(|_| rng.random_range(0.1..1.0))
            .collect();
        let s: f64 = raw.iter().sum();
        let coefficients: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let a = finite_bijective(&perms, &simplex.point(&coefficients).unwrap(), &m).unwrap();
        assert!(a.validate(1e-9).is_valid());
        assert!(a.entropy().unwrap() <= 1e-12);
    }
}
