use proptest::prelude::*;

use permutons::entropy::{entropy_grid, heat_flow, HeatFlowSpec};
use permutons::measure::{rect_distance, sample_permutation, GridPermuton, Permutation};
use permutons::oracle::{star_statistics, star_statistics_by_insertion};
use permutons::patterns::{density_grid_exact, grid_densities, pattern_count, PatternSpec};

fn grid(m: usize) -> impl Strategy<Value = GridPermuton> {
    prop::collection::vec(1e-3f64..1.0, m * m).prop_map(move |w| GridPermuton::rebalance(m, w).unwrap().grid)
}

fn perm(max: usize) -> impl Strategy<Value = Permutation> {
    (1..=max).prop_flat_map(|n| Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        .prop_map(|v| Permutation::from_zero_based(v).unwrap())
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transforms_keep_uniform_marginals(g in (2usize..10).prop_flat_map(grid)) {
        prop_assert!(g.marginal_error() <= 1e-12);
        prop_assert!(g.reflect_x().marginal_error() <= 1e-12);
        prop_assert!(g.transpose().marginal_error() <= 1e-12);
        prop_assert!(g.coarsen(1).unwrap().marginal_error() <= 1e-12);
        prop_assert!(entropy_grid(&g) <= 0.0);
    }

    #[test]
    fn three_point_densities_sum_to_one(g in (2usize..9).prop_flat_map(grid)) {
        let d = grid_densities(&g);
        prop_assert!((d.s3.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let p21 = density_grid_exact(&g, &"21".parse::<PatternSpec>().unwrap()).unwrap();
        prop_assert!((d.p12 + p21 - 1.0).abs() <= 1e-12);
        // reflecting x swaps 1 2 and 2 1
        prop_assert!((grid_densities(&g.reflect_x()).p12 - p21).abs() <= 1e-12);
    }

    #[test]
    fn heat_flow_keeps_marginals_and_raises_entropy(g in grid(8), t in 1e-4f64..0.5) {
        let h = heat_flow(&g, &HeatFlowSpec::new(t, 8)).unwrap();
        prop_assert!(h.marginal_error() <= 1e-12);
        prop_assert!(entropy_grid(&h) >= entropy_grid(&g) - 1e-12);
    }

    #[test]
    fn pattern_counts_partition_the_subsets(pi in perm(9)) {
        let n = pi.len();
        for k in 1..=n.min(4) {
            let total: u64 = Permutation::all(k)
                .iter()
                .map(|tau| pattern_count(&pi, &PatternSpec::Explicit(tau.clone())).unwrap())
                .sum();
            prop_assert_eq!(total, binomial(n, k));
        }
    }

    #[test]
    fn inverse_round_trips(pi in perm(12)) {
        prop_assert_eq!(pi.inverse().inverse(), pi.clone());
        prop_assert_eq!(pi.inverse().to_string().parse::<Permutation>().unwrap(), pi.inverse());
    }

    #[test]
    fn insertion_rule_matches_enumeration(pi in perm(12)) {
        prop_assert_eq!(star_statistics(&pi), star_statistics_by_insertion(&pi));
    }

    #[test]
    fn permutation_grids_have_entropy_minus_log_n(pi in perm(16)) {
        let g = GridPermuton::from_permutation(&pi, pi.len()).unwrap();
        prop_assert!((entropy_grid(&g) + (pi.len() as f64).ln()).abs() <= 1e-12);
    }

    #[test]
    fn sampling_is_reproducible(g in grid(6), seed in any::<u64>()) {
        let a = sample_permutation(&g, 30, seed).unwrap();
        let b = sample_permutation(&g, 30, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rect_distance_is_a_metric(a in grid(5), b in grid(5), c in grid(5)) {
        let ab = rect_distance(&a, &b).unwrap();
        prop_assert!(rect_distance(&a, &a).unwrap() == 0.0);
        prop_assert!((ab - rect_distance(&b, &a).unwrap()).abs() <= 1e-15);
        prop_assert!(ab <= rect_distance(&a, &c).unwrap() + rect_distance(&c, &b).unwrap() + 1e-15);
    }
}
