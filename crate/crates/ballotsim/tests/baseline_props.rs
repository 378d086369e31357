//! Baseline comparator properties: oracle-exact noise sets, ordering
//! invariance, eps monotonicity, and the dense-fraud blind spot.

mod common;

use ballotsim::baseline::{dbscan_noise, run_baseline1, DensityParams};
use ballotsim::regression::DemographicMatrix;
use ballotsim::votecast::{RegionResults, RegionShare};
use common::{dbscan_noise_oracle, OracleRng};
use proptest::prelude::*;

#[test]
fn twelve_point_noise_set_matches_neighborhood_graph_oracle() {
    let values = vec![
        0.50, 0.51, 0.52, 0.505, 0.49, 0.48, 0.62, 0.63, 0.615, 0.80, 0.20, 0.51,
    ];
    for eps in [0.01, 0.02, 0.05, 0.1] {
        for min_pts in [2, 3, 4] {
            let ours = dbscan_noise(&values, eps, min_pts);
            let oracle = dbscan_noise_oracle(&values, eps, min_pts);
            assert_eq!(ours, oracle, "eps {eps} min_pts {min_pts}");
        }
    }
}

fn results_from(shares: &[f64]) -> RegionResults {
    RegionResults {
        regions: shares
            .iter()
            .enumerate()
            .map(|(i, &s)| RegionShare {
                region_id: i as u32,
                votes_a: (s * 1000.0).round() as u64,
                votes_b: 1000 - (s * 1000.0).round() as u64,
            })
            .collect(),
    }
}

fn two_group_design(n_per_group: usize) -> DemographicMatrix {
    // Group 0 low demographic value, group 1 high; slight jitter.
    let mut data = Vec::new();
    for i in 0..2 * n_per_group {
        let base = if i < n_per_group { 0.2 } else { 0.8 };
        data.push(base + 0.001 * (i % 5) as f64);
    }
    DemographicMatrix::new(2 * n_per_group, 1, data, vec!["share".into()])
}

#[test]
fn displaced_region_is_flagged() {
    let design = two_group_design(10);
    let mut shares = vec![0.5; 10];
    shares.extend(vec![0.6; 10]);
    shares[3] = 0.95;
    let actual = results_from(&shares);
    let report = run_baseline1(
        &design,
        &actual,
        Some(2),
        &DensityParams::default(),
        5,
        1,
    )
    .unwrap();
    let flagged = report.flagged_region_ids();
    assert!(flagged.contains(&3));
    assert_eq!(flagged.len(), 1);
    assert!(report.rows.iter().all(|r| r.decision.is_none()));
}

#[test]
fn identical_results_are_never_flagged() {
    let design = two_group_design(8);
    let actual = results_from(&[0.52; 16]);
    let report = run_baseline1(
        &design,
        &actual,
        None,
        &DensityParams::default(),
        5,
        3,
    )
    .unwrap();
    assert!(report.flagged_region_ids().is_empty());
}

#[test]
fn dense_fraud_group_evades_density_noise() {
    // Six fraudulent regions shifted together form their own dense blob
    // and are not density noise, while a lone displaced region is.
    let design = two_group_design(10);
    let mut shares: Vec<f64> = (0..10).map(|i| 0.50 + 0.002 * i as f64).collect();
    shares.extend((0..10).map(|i| 0.60 + 0.002 * i as f64));
    // regions 0..6 "fraudulent": moved tightly to ~0.8
    for (j, share) in shares.iter_mut().take(6).enumerate() {
        *share = 0.80 + 0.001 * j as f64;
    }
    // region 9 displaced alone
    shares[9] = 0.30;
    let actual = results_from(&shares);
    let report = run_baseline1(
        &design,
        &actual,
        Some(2),
        &DensityParams {
            eps: Some(0.02),
            min_pts: 3,
        },
        5,
        1,
    )
    .unwrap();
    let flagged = report.flagged_region_ids();
    assert!(flagged.contains(&9), "lone displaced region missed");
    for fraud_id in 0..6u32 {
        assert!(
            !flagged.contains(&fraud_id),
            "dense fraud region {fraud_id} unexpectedly flagged"
        );
    }
}

#[test]
fn flags_are_invariant_to_region_storage_order() {
    let design = two_group_design(10);
    let mut shares: Vec<f64> = (0..20).map(|i| 0.5 + 0.003 * (i % 7) as f64).collect();
    shares[13] = 0.9;
    let actual = results_from(&shares);
    let params = DensityParams::default();
    let report = run_baseline1(&design, &actual, Some(2), &params, 5, 2).unwrap();

    let mut reversed = actual.clone();
    reversed.regions.reverse();
    let report_rev = run_baseline1(&design, &reversed, Some(2), &params, 5, 2).unwrap();
    assert_eq!(
        report.flagged_region_ids(),
        report_rev.flagged_region_ids()
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn growing_eps_never_grows_the_noise_set(
        seed in 0u64..500,
        n in 4usize..24,
        min_pts in 2usize..5,
    ) {
        let mut rng = OracleRng::new(seed);
        let values: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let mut previous: Option<Vec<bool>> = None;
        for step in 1..=6 {
            let eps = 0.02 * step as f64;
            let noise = dbscan_noise(&values, eps, min_pts);
            prop_assert_eq!(&noise, &dbscan_noise_oracle(&values, eps, min_pts));
            if let Some(prev) = previous {
                for (now, before) in noise.iter().zip(&prev) {
                    prop_assert!(!(*now && !before), "noise grew as eps grew");
                }
            }
            previous = Some(noise);
        }
    }
}
