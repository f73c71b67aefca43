//! Verifier checks against published-scale fixtures and an independent
//! criteria recomputation.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pedattr_core::dataset::{AttributeSchema, Dataset, Sample};
use pedattr_core::split::{verify_split, SplitMethod, SplitSpec, Thresholds};

/// Placeholder dataset realizing given per-part identity and image counts.
/// Labels are all zero: count criteria are what these fixtures pin down.
fn fixture(parts: [(usize, usize); 3], m: usize) -> (Dataset, SplitSpec) {
    let schema = AttributeSchema::new((0..m).map(|j| format!("attr{j:02}")).collect()).unwrap();
    let mut samples = Vec::new();
    let mut positions: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (p, &(identities, images)) in parts.iter().enumerate() {
        assert!(images >= identities, "each identity needs an image");
        let base = images / identities;
        let extra = images % identities;
        for k in 0..identities {
            let count = base + usize::from(k < extra);
            for i in 0..count {
                positions[p].push(samples.len());
                samples.push(Sample {
                    image_id: format!("part{p}_id{k:05}_im{i:02}"),
                    identity_id: Some(format!("part{p}_id{k:05}")),
                    labels: vec![0; m],
                });
            }
        }
    }
    let ds = Dataset::new(schema, samples).unwrap();
    let [train, valid, test] = positions;
    let split = SplitSpec::from_parts(
        &ds,
        train,
        valid,
        test,
        0,
        SplitMethod::Search {
            thresholds: Thresholds::default(),
            trial_index: 0,
        },
        None,
    )
    .unwrap();
    (ds, split)
}

#[test]
fn peta_scale_fixture_passes_count_criteria() {
    // Published v1 realization: identities 5,233/1,760/1,706 over 8,699;
    // images 11,241/3,826/3,933 over 19,000.
    let (ds, split) = fixture([(5_233, 11_241), (1_760, 3_826), (1_706, 3_933)], 5);
    assert_eq!(ds.len(), 19_000);
    let report = verify_split(&ds, &split, &Thresholds::default());
    assert_eq!(report.counts.k_all, 8_699);
    assert_eq!(report.image_balance.difference, 107);
    assert!(report.image_balance.pass);
    assert_eq!(report.identity_balance.slack, 27.0);
    assert!(report.identity_balance.pass);
    assert!(report.disjointness.pass);
    assert!(report.ratio.pass);
    assert!(report.pass, "{report:?}");
}

#[test]
fn rap_scale_fixture_passes_count_criteria() {
    // Published v1 realization: identities 1,566/505/518; images
    // 17,062/4,648/4,928 over 26,638.
    let (ds, split) = fixture([(1_566, 17_062), (505, 4_648), (518, 4_928)], 5);
    assert_eq!(ds.len(), 26_638);
    let report = verify_split(&ds, &split, &Thresholds::default());
    assert_eq!(report.counts.k_all, 2_589);
    assert_eq!(report.image_balance.difference, 280);
    assert!(report.image_balance.pass);
    assert_eq!(report.identity_balance.slack, 6.5);
    assert!(report.identity_balance.pass);
    assert!(report.pass, "{report:?}");
}

#[test]
fn verifier_matches_direct_recomputation_on_random_partitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for round in 0..20 {
        // Random identity-structured dataset.
        let m = rng.random_range(1..=4);
        let k = rng.random_range(6..=40);
        let schema =
            AttributeSchema::new((0..m).map(|j| format!("attr{j}")).collect()).unwrap();
        let mut samples = Vec::new();
        for ident in 0..k {
            for i in 0..rng.random_range(1..=4) {
                samples.push(Sample {
                    image_id: format!("r{round}_id{ident}_im{i}"),
                    identity_id: Some(format!("id{ident}")),
                    labels: (0..m).map(|_| rng.random_range(0..=1u8)).collect(),
                });
            }
        }
        let ds = Dataset::new(schema, samples).unwrap();

        // Uniformly random identity partition (may violate any criterion).
        let mut parts: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let assignment: Vec<usize> = (0..k).map(|_| rng.random_range(0..3)).collect();
        for (pos, sample) in ds.samples().iter().enumerate() {
            let ident: usize = sample.identity_id.as_ref().unwrap()[2..].parse().unwrap();
            parts[assignment[ident]].push(pos);
        }
        if parts.iter().any(|p| p.is_empty()) {
            continue;
        }
        let [train, valid, test] = parts;
        let split = SplitSpec::from_parts(
            &ds,
            train.clone(),
            valid.clone(),
            test.clone(),
            0,
            SplitMethod::Random {
                fractions: (0.34, 0.33, 0.33),
            },
            None,
        )
        .unwrap();
        let thresholds = Thresholds {
            t_id: 3,
            t_img: 10,
            t_attr: 0.25,
            max_trials: 1,
        };
        let report = verify_split(&ds, &split, &thresholds);

        // Direct recomputation, one criterion at a time.
        let ids_of = |part: &[usize]| -> HashSet<String> {
            part.iter()
                .filter_map(|&p| ds.sample(p).identity_id.clone())
                .collect()
        };
        let (it, iv, is) = (ids_of(&train), ids_of(&valid), ids_of(&test));
        let disjoint = it.is_disjoint(&iv) && it.is_disjoint(&is) && iv.is_disjoint(&is);
        assert_eq!(report.disjointness.pass, disjoint, "round {round}");

        let center = (3 * k as u64).div_ceil(5);
        let train_slack = (it.len() as i64 - center as i64).unsigned_abs();
        assert_eq!(report.ratio.train_slack, train_slack);
        assert_eq!(report.ratio.pass, train_slack <= thresholds.t_id);

        let id_slack = (iv.len() as f64 - (k as f64 - it.len() as f64) / 2.0).abs();
        assert_eq!(report.identity_balance.slack, id_slack);
        assert_eq!(
            report.identity_balance.pass,
            id_slack <= thresholds.t_id as f64
        );

        let img_diff = (valid.len() as i64 - test.len() as i64).unsigned_abs();
        assert_eq!(report.image_balance.difference, img_diff);
        assert_eq!(report.image_balance.pass, img_diff <= thresholds.t_img);

        let ratio = |part: &[usize], j: usize| {
            part.iter()
                .filter(|&&p| ds.sample(p).labels[j] == 1)
                .count() as f64
                / part.len() as f64
        };
        let mut max_tv: f64 = 0.0;
        let mut max_tt: f64 = 0.0;
        for j in 0..m {
            max_tv = max_tv.max((ratio(&train, j) - ratio(&valid, j)).abs());
            max_tt = max_tt.max((ratio(&train, j) - ratio(&test, j)).abs());
        }
        assert_eq!(report.attribute_balance.max_train_valid_gap, Some(max_tv));
        assert_eq!(report.attribute_balance.max_train_test_gap, Some(max_tt));
        assert_eq!(
            report.attribute_balance.pass,
            max_tv <= thresholds.t_attr && max_tt <= thresholds.t_attr
        );

        let overall = report.ratio.pass
            && report.disjointness.pass
            && report.identity_balance.pass
            && report.image_balance.pass
            && report.attribute_balance.pass;
        assert_eq!(report.pass, overall);
    }
}
