use cobra_core::baselines::{assign_max_usw, assign_maxmin_esw};
use cobra_core::fixtures::random_instance;
use cobra_core::model::{compute_utilities, paper_score_units, validate_assignment, SimilarityMatrix};
use cobra_core::{run_cobra, Instance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, n: usize, max_papers: usize, k_p: usize, factor: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_instance(&mut rng, n.max(k_p + 1), max_papers, k_p, factor)
}

fn rescaled(inst: &Instance, scale: f64, shift: f64) -> Instance {
    let s = inst.scores().unwrap();
    let rows = (0..s.reviewers())
        .map(|r| (0..inst.m()).map(|j| s.get(r, j).unwrap() * scale + shift).collect())
        .collect();
    Instance::from_scores(inst.k_a(), inst.k_p(), inst.submission_counts().to_vec(), SimilarityMatrix::from_rows(rows))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cobra_output_is_valid(seed in any::<u64>(), n in 2usize..20, max_papers in 1usize..4, k_p in 1usize..4, factor in 1usize..3) {
        let inst = instance(seed, n, max_papers, k_p, factor);
        let asg = run_cobra(&inst).unwrap();
        prop_assert!(validate_assignment(&inst, &asg).unwrap().is_empty());
        prop_assert_eq!(asg.len(), inst.m() * inst.k_p());
    }

    #[test]
    fn cobra_ignores_positive_affine_rescaling(seed in any::<u64>(), n in 2usize..12, k_p in 1usize..4, scale in 1u32..50, shift in 0u32..10) {
        let inst = instance(seed, n, 2, k_p, 1);
        let moved = rescaled(&inst, f64::from(scale) / 7.0, f64::from(shift));
        prop_assert_eq!(run_cobra(&inst).unwrap(), run_cobra(&moved).unwrap());
    }

    #[test]
    fn welfare_bounds(seed in any::<u64>(), n in 2usize..8, k_p in 1usize..3) {
        let inst = instance(seed, n, 1, k_p, 1);
        let usw = assign_max_usw(&inst).unwrap();
        let esw = assign_maxmin_esw(&inst).unwrap();
        let cobra = run_cobra(&inst).unwrap();
        let units = |a| paper_score_units(&inst, a).unwrap();
        let (u_usw, u_esw, u_cobra) = (units(&usw), units(&esw), units(&cobra));
        let total: i64 = u_usw.iter().sum();
        let floor = *u_esw.iter().min().unwrap();
        prop_assert!(floor * inst.m() as i64 <= total);
        prop_assert!(u_cobra.iter().sum::<i64>() <= total);
        prop_assert!(*u_cobra.iter().min().unwrap() <= floor);
        let utilities = compute_utilities(&inst, &esw).unwrap();
        prop_assert!(utilities.esw <= utilities.usw / inst.m() as f64 + 1e-9);
    }
}
