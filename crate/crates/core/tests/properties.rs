mod common;

use std::sync::Arc;

use mz_subsample::index_sets::{eigenvalue, in_hyperbolic_cross, select_largest_eigenvalues, weight_mix};
use mz_subsample::lattice::is_reconstructing;
use mz_subsample::mz::{mz_constants, quadrature_exactness};
use mz_subsample::solver::{reconstruct, SolverConfig};
use mz_subsample::subsampling::{density_weights, random_subsample, selection_bounds};
use mz_subsample::{
    hyperbolic_cross, lattice_points, search_generator, Complex64, IndexSet, Rank1Lattice, SamplePlan, SearchSchedule,
    SmoothnessWeight, SystemOperator,
};
use proptest::prelude::*;

use common::*;

fn small_set() -> impl Strategy<Value = IndexSet> {
    (1usize..=3)
        .prop_flat_map(|d| (Just(d), prop::collection::btree_set(prop::collection::vec(-6i64..=6, d), 1..12)))
        .prop_map(|(d, ks)| IndexSet::from_frequencies(d, &ks.into_iter().collect::<Vec<_>>()).unwrap())
}

fn small_lattice(d: usize) -> impl Strategy<Value = Rank1Lattice> {
    (2u64..200).prop_flat_map(move |m| {
        prop::collection::vec(0..m as i64, d).prop_map(move |z| Rank1Lattice::new(&z, m).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cross_is_symmetric_and_nested(d in 1usize..=4, gamma in 0.3..2.0f64, r in 1.5..12.0f64, grow in 1.0..3.0f64) {
        let small = hyperbolic_cross(d, gamma, r).unwrap();
        let large = hyperbolic_cross(d, gamma, r * grow).unwrap();
        prop_assert!(small.contains(&vec![0; d]));
        prop_assert!(small.is_subset_of(&large));
        for k in small.iter() {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            prop_assert!(small.contains(&neg));
            let mut rev = k.to_vec();
            rev.reverse();
            prop_assert!(small.contains(&rev));
            prop_assert!(in_hyperbolic_cross(k, gamma, r));
        }
    }

    #[test]
    fn cross_matches_membership_test(d in 1usize..=3, gamma in 0.3..2.0f64, r in 1.5..10.0f64) {
        let set = hyperbolic_cross(d, gamma, r).unwrap();
        let b = (gamma * r).floor() as i64 + 1;
        let mut count = 0;
        let mut k = vec![-b; d];
        loop {
            if in_hyperbolic_cross(&k, gamma, r) {
                prop_assert!(set.contains(&k));
                count += 1;
            }
            let mut j = 0;
            while j < d && k[j] == b {
                k[j] = -b;
                j += 1;
            }
            if j == d {
                break;
            }
            k[j] += 1;
        }
        prop_assert_eq!(count, set.len());
    }

    #[test]
    fn eigenvalue_inverts_squared_weight(k in prop::collection::vec(-50i64..=50, 1..6), s in 0.6..3.0f64) {
        let s = SmoothnessWeight::new(s).unwrap();
        let prod = eigenvalue(&k, s) * weight_mix(&k, s).powi(2);
        prop_assert!((prod - 1.0).abs() < 1e-12);
        prop_assert!(eigenvalue(&k, s) <= 1.0);
    }

    #[test]
    fn largest_eigenvalues_dominate(r in 4.0..20.0f64, frac in 0.1..1.0f64) {
        let s = SmoothnessWeight::new(1.5).unwrap();
        let parent = hyperbolic_cross(2, 0.5, r).unwrap();
        let m = ((parent.len() as f64 * frac) as usize).max(1);
        let sel = select_largest_eigenvalues(&parent, m, s).unwrap();
        prop_assert_eq!(sel.len(), m);
        let rest = parent.difference(&sel);
        let lo = sel.iter().map(|k| eigenvalue(k, s)).fold(f64::INFINITY, f64::min);
        prop_assert!(rest.iter().all(|k| eigenvalue(k, s) <= lo));
    }

    #[test]
    fn reconstructing_iff_character_sums_vanish((set, lat) in small_set().prop_flat_map(|s| {
        let d = s.dim();
        (Just(s), small_lattice(d))
    })) {
        // the lattice sum of exp(2 pi i (k - l).x) is M or 0
        let plan = lattice_points(&lat);
        let pts = plan.points_flat();
        let e = exp_matrix(set.dim(), &pts, &set);
        let mut orthogonal = true;
        for a in 0..set.len() {
            for b in 0..a {
                let s: Complex64 = (0..plan.len()).map(|i| e[(i, a)] * e[(i, b)].conj()).sum();
                orthogonal &= s.norm() < 1e-6 * plan.len() as f64;
            }
        }
        prop_assert_eq!(is_reconstructing(&lat, &set).unwrap(), orthogonal);
    }

    #[test]
    fn operator_adjointness((set, lat) in small_set().prop_flat_map(|s| {
        let d = s.dim();
        (Just(s), small_lattice(d))
    }), seed in any::<u64>()) {
        let freqs = Arc::new(set);
        let op = SystemOperator::lattice(&lat, freqs.clone()).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let a = random(&mut rng, op.cols());
        let b = random(&mut rng, op.cols());
        let f = random(&mut rng, op.rows());
        let w: Vec<f64> = (0..op.rows()).map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0)).collect();
        let fa = op.forward(&a).unwrap();
        let lhs = dot(&fa, &f);
        let rhs = dot(&a, &op.adjoint(&f).unwrap());
        prop_assert!((lhs - rhs).norm() <= 1e-10 * norm(&fa).max(1.0) * norm(&f).max(1.0));
        let na = op.apply_normal(&w, &a).unwrap();
        let nb = op.apply_normal(&w, &b).unwrap();
        let scale = norm(&na).max(1.0) * norm(&b).max(1.0);
        prop_assert!((dot(&b, &na) - dot(&nb, &a)).norm() <= 1e-10 * scale);
        prop_assert!(dot(&a, &na).re >= -1e-10 * norm(&a).powi(2));
    }

    #[test]
    fn discrete_sum_within_mz_bounds(seed in 0u64..1000, r in 2.0..8.0f64, keep in 0.3..1.0f64) {
        let freqs = Arc::new(hyperbolic_cross(2, 0.5, r).unwrap());
        let lat = search_generator(&freqs, seed, &SearchSchedule::default()).unwrap();
        let full = lattice_points(&lat);
        let s = SmoothnessWeight::new(1.5).unwrap();
        let rho = density_weights(&full, &freqs, &freqs, s).unwrap();
        let n = ((4 * full.len()) as f64 * keep) as usize + freqs.len();
        let sel = random_subsample(&full, &rho, n, seed).unwrap();
        let plan = sel.plan(&full).unwrap();
        let bounds = selection_bounds(&full, &freqs, &sel).unwrap();
        let op = SystemOperator::for_plan(&plan, freqs.clone()).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        for _ in 0..4 {
            let a = random(&mut rng, freqs.len());
            let fa = op.forward(&a).unwrap();
            let sum: f64 = fa.iter().zip(plan.weights()).map(|(z, w)| w * z.norm_sqr()).sum();
            let n2 = norm(&a).powi(2);
            prop_assert!(sum >= bounds.lower * n2 * (1.0 - 1e-9));
            prop_assert!(sum <= bounds.upper * n2 * (1.0 + 1e-9));
        }
    }

    #[test]
    fn constants_ignore_point_order(seed in any::<u64>(), n in 20usize..60) {
        let freqs = hyperbolic_cross(2, 0.5, 6.0).unwrap();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let pts: Vec<f64> = (0..2 * n).map(|_| rand::Rng::random_range(&mut rng, 0.0..1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.1..1.0)).collect();
        let plan = SamplePlan::new(2, pts.clone(), w.clone()).unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(seed as usize % n);
        let pts2: Vec<f64> = order.iter().flat_map(|&i| [pts[2 * i], pts[2 * i + 1]]).collect();
        let w2: Vec<f64> = order.iter().map(|&i| w[i]).collect();
        let shuffled = SamplePlan::new(2, pts2, w2).unwrap();
        let a = mz_constants(&plan, &freqs).unwrap();
        let b = mz_constants(&shuffled, &freqs).unwrap();
        prop_assert!((a.lower - b.lower).abs() <= 1e-10 * a.upper);
        prop_assert!((a.upper - b.upper).abs() <= 1e-10 * a.upper);
    }

    #[test]
    fn exactness_iff_equal_constants(seed in 0u64..500, drop in 0usize..4) {
        let freqs = hyperbolic_cross(2, 0.5, 4.0).unwrap();
        let lat = search_generator(&freqs, seed, &SearchSchedule::default()).unwrap();
        let full = lattice_points(&lat);
        let (lattice, nodes) = full.lattice().unwrap();
        let kept: Vec<u64> = nodes[drop..].to_vec();
        let m = lattice.size() as f64;
        let plan = SamplePlan::on_lattice(lattice.clone(), kept.clone(), vec![1.0 / m; kept.len()]).unwrap();
        let bounds = mz_constants(&plan, &freqs).unwrap();
        let exact = quadrature_exactness(&plan, &freqs, 1e-9).unwrap();
        let equal = (bounds.upper - bounds.lower).abs() <= 1e-9 * bounds.upper;
        prop_assert_eq!(exact.is_some(), equal);
        prop_assert_eq!(drop == 0, equal);
    }

    #[test]
    fn random_selection_is_deterministic(seed in any::<u64>(), n in 1usize..200) {
        let freqs = hyperbolic_cross(2, 0.5, 4.0).unwrap();
        let lat = search_generator(&freqs, 1, &SearchSchedule::default()).unwrap();
        let plan = lattice_points(&lat);
        let s = SmoothnessWeight::new(1.5).unwrap();
        let rho = density_weights(&plan, &freqs, &freqs, s).unwrap();
        let total: f64 = rho.rho.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let a = random_subsample(&plan, &rho, n, seed).unwrap();
        let b = random_subsample(&plan, &rho, n, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.indices.iter().all(|&i| i < plan.len()));
        prop_assert!(a.reweights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn text_formats_round_trip(set in small_set(), lat in small_lattice(2)) {
        prop_assert_eq!(&IndexSet::from_text(&set.to_text()).unwrap(), &set);
        prop_assert_eq!(&Rank1Lattice::from_text(&lat.to_text()).unwrap(), &lat);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lattice_recovers_polynomials(d in 1usize..=4, r in 2.0..10.0f64, seed in any::<u64>(), direct in any::<bool>()) {
        let freqs = Arc::new(hyperbolic_cross(d, 0.5, r).unwrap());
        let lat = search_generator(&freqs, seed, &SearchSchedule::default()).unwrap();
        let plan = lattice_points(&lat);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let a = random(&mut rng, freqs.len());
        let f = SystemOperator::lattice(&lat, freqs.clone()).unwrap().forward(&a).unwrap();
        let cfg = if direct { SolverConfig::direct() } else { SolverConfig::iterative(10) };
        let (got, diag) = reconstruct(&plan, freqs, &f, &cfg).unwrap();
        prop_assert!(max_abs_diff(&got, &a) < 1e-10);
        prop_assert!(diag.residual < 1e-10);
    }
}

fn random(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<Complex64> {
    use rand::Rng;
    (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}
