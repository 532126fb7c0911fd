mod common;

use cobra_core::baselines::{assign_max_usw, assign_maxmin_esw};
use cobra_core::fixtures::random_instance;
use cobra_core::model::{paper_score_units, validate_assignment};
use cobra_core::{run_cobra, Instance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random instances with at most eight papers and `k_p ≤ 2`.
pub fn small_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let k_p = rng.random_range(1..=2);
        let n = rng.random_range(k_p + 1..=7);
        let max_papers = rng.random_range(1..=2);
        let factor = rng.random_range(1..=2);
        let inst = random_instance(&mut rng, n, max_papers, k_p, factor);
        if inst.m() <= 8 {
            out.push(inst);
        }
    }
    out
}

fn usw_esw(inst: &Instance, asg: &cobra_core::Assignment) -> (i64, i64) {
    assert!(validate_assignment(inst, asg).unwrap().is_empty());
    let units = paper_score_units(inst, asg).unwrap();
    (units.iter().sum(), units.iter().copied().min().unwrap_or(0))
}

#[test]
fn baselines_match_exhaustive_search() {
    for (i, inst) in small_instances(100, 7).iter().enumerate() {
        let (best_usw, best_esw) = common::welfare_oracle(inst);
        let usw = usw_esw(inst, &assign_max_usw(inst).unwrap());
        let esw = usw_esw(inst, &assign_maxmin_esw(inst).unwrap());
        assert_eq!(usw.0, best_usw, "instance {i}: max-usw");
        assert_eq!(esw.1, best_esw, "instance {i}: maxmin-esw");
        let cobra = usw_esw(inst, &run_cobra(inst).unwrap_or_else(|e| panic!("instance {i}: {e} {inst:?}")));
        assert!(usw.0 >= cobra.0 && usw.0 >= esw.0, "instance {i}: usw dominance");
        assert!(esw.1 >= cobra.1 && esw.1 >= usw.1, "instance {i}: esw dominance");
    }
}

#[test]
fn oracle_agrees_with_hand_enumeration() {
    let inst = cobra_core::fixtures::three_agent_scores();
    assert_eq!(common::welfare_oracle(&inst), (1_600_000_000, 200_000_000));
}
