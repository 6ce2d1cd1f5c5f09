mod common;

use common::oracles::{brute_auc, brute_ks, brute_pearson, brute_tv};
use limi::generator::LatentVector;
use limi::metrics::{contingency_similarity, ks_complement, pearson_similarity, tv_complement};
use limi::models::{Classifier, Layer, ModelKind, Network, TrainedModel};
use limi::probe::{candidates, latent_flip, project, ProtectedHyperplane};
use limi::schema::{protected_variants, sample_uniform, ColumnSpec, Schema};
use limi::surrogate::{auc, SurrogateBoundary};
use proptest::prelude::*;

/// Up to five columns, each numeric `0..=k` or categorical with `k + 1`
/// values; at least one protected.
fn schemas() -> impl Strategy<Value = Schema> {
    prop::collection::vec((any::<bool>(), 1i64..6, any::<bool>()), 1..6).prop_map(|spec| {
        let mut cols: Vec<ColumnSpec> = spec
            .iter()
            .enumerate()
            .map(|(i, &(numeric, k, protected))| {
                let c = if numeric {
                    ColumnSpec::numeric(&format!("n{i}"), 0, k)
                } else {
                    let values: Vec<String> = (0..=k).map(|v| format!("v{v}")).collect();
                    ColumnSpec::categorical(&format!("c{i}"), &values)
                };
                if protected {
                    c.protected()
                } else {
                    c
                }
            })
            .collect();
        if !spec.iter().any(|s| s.2) {
            cols[0] = cols[0].clone().protected();
        }
        Schema::new(cols, "y", 1).unwrap()
    })
}

fn latents(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

fn boundary_and_point() -> impl Strategy<Value = (Vec<f64>, f64, Vec<f64>)> {
    (1usize..8).prop_flat_map(|d| {
        (
            latents(d).prop_filter("nonzero normal", |w| w.iter().map(|x| x * x).sum::<f64>() > 1e-3),
            -5.0f64..5.0,
            latents(d),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn encoding_is_injective_and_in_unit_range(s in schemas(), seed in any::<u64>()) {
        let rows = sample_uniform(&s, 40, seed);
        for a in &rows {
            let ea = s.encode(a).entries;
            prop_assert!(ea.iter().all(|v| (0.0..=1.0).contains(v)));
            for b in &rows {
                if a != b {
                    prop_assert_ne!(&ea, &s.encode(b).entries);
                }
            }
        }
    }

    #[test]
    fn variants_touch_only_protected_columns(s in schemas(), seed in any::<u64>()) {
        let protected = s.protected_indices();
        let expected: usize = protected.iter().map(|&i| s.column(i).domain.size()).product::<usize>() - 1;
        for r in sample_uniform(&s, 10, seed) {
            s.validate_row(&r).unwrap();
            let vs = protected_variants(&s, &r);
            prop_assert_eq!(vs.len(), expected);
            for v in &vs {
                prop_assert_ne!(v, &r);
                s.validate_row(v).unwrap();
                for c in 0..s.len() {
                    if !protected.contains(&c) {
                        prop_assert_eq!(v.get(c), r.get(c));
                    }
                }
            }
        }
    }

    #[test]
    fn projection_lands_on_the_plane((w, b, z) in boundary_and_point(), lambda in 0.0f64..3.0) {
        let boundary = SurrogateBoundary::new(w, b).unwrap();
        let z = LatentVector::new(z);
        let z0 = project(&boundary, &z);
        prop_assert!(boundary.distance(&z0).abs() <= 1e-9);
        let again = project(&boundary, &z0);
        prop_assert!(again.as_slice().iter().zip(z0.as_slice()).all(|(a, b)| (a - b).abs() <= 1e-9));
        let (plus, minus) = candidates(&boundary, &z0, lambda);
        prop_assert!((boundary.distance(&plus) - lambda).abs() <= 1e-9);
        prop_assert!((boundary.distance(&minus) + lambda).abs() <= 1e-9);
        let gap: f64 = plus.as_slice().iter().zip(minus.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!((gap - 2.0 * lambda).abs() <= 1e-9);
    }

    #[test]
    fn reflection_is_an_involution((w, b, z) in boundary_and_point()) {
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let h = ProtectedHyperplane::new(w.iter().map(|x| x / norm).collect(), b).unwrap();
        let z = LatentVector::new(z);
        let once = latent_flip(&h, &z);
        prop_assert!((h.signed_distance(&once) + h.signed_distance(&z)).abs() <= 1e-9);
        let twice = latent_flip(&h, &once);
        prop_assert!(twice.as_slice().iter().zip(z.as_slice()).all(|(a, b)| (a - b).abs() <= 1e-9));
    }

    #[test]
    fn auc_matches_pair_counting(
        raw in prop::collection::vec((0i32..20, any::<bool>()), 2..500)
    ) {
        let scores: Vec<f64> = raw.iter().map(|r| f64::from(r.0) / 4.0).collect();
        let labels: Vec<u8> = raw.iter().map(|r| u8::from(r.1)).collect();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        prop_assert_eq!(auc(&scores, &labels).unwrap(), brute_auc(&scores, &labels));
    }

    #[test]
    fn shape_components_match_brute_force(
        a in prop::collection::vec(0i64..6, 1..20),
        b in prop::collection::vec(0i64..6, 1..20),
    ) {
        let fa: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let fb: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let ks = ks_complement(&fa, &fb).unwrap();
        prop_assert!((ks - brute_ks(&fa, &fb)).abs() <= 1e-12);
        let tv = tv_complement(&a, &b).unwrap();
        prop_assert!((tv - brute_tv(&a, &b)).abs() <= 1e-12);
        for v in [ks, tv] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn trend_components_match_brute_force(
        real in prop::collection::vec((0i64..4, 0i64..4), 2..20),
        syn in prop::collection::vec((0i64..4, 0i64..4), 2..20),
    ) {
        let split = |t: &[(i64, i64)]| -> (Vec<i64>, Vec<i64>) { t.iter().copied().unzip() };
        let (ra, rb) = split(&real);
        let (sa, sb) = split(&syn);
        let cs = contingency_similarity((&ra, &rb), (&sa, &sb)).unwrap();
        prop_assert!((cs - brute_tv(&real, &syn)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&cs));

        let f = |v: &[i64]| v.iter().map(|&x| x as f64).collect::<Vec<f64>>();
        let (rx, ry, sx, sy) = (f(&ra), f(&rb), f(&sa), f(&sb));
        let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
        if [&rx, &ry, &sx, &sy].iter().any(|v| constant(v)) {
            prop_assert!(pearson_similarity((&rx, &ry), (&sx, &sy)).is_err());
        } else {
            let ps = pearson_similarity((&rx, &ry), (&sx, &sy)).unwrap();
            let oracle = 1.0 - (brute_pearson(&rx, &ry) - brute_pearson(&sx, &sy)).abs() / 2.0;
            prop_assert!((ps - oracle).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&ps));
        }
    }

    #[test]
    fn scores_stay_in_bounds(weights in prop::collection::vec(-50.0f64..50.0, 3), bias in -50.0f64..50.0, seed in any::<u64>()) {
        let s = Schema::new(
            vec![ColumnSpec::numeric("a", 0, 9), ColumnSpec::numeric("b", 0, 9).protected(), ColumnSpec::numeric("c", 0, 9)],
            "y",
            1,
        ).unwrap();
        let net = Network::from_layers(vec![Layer { inputs: 3, outputs: 1, weights, bias: vec![bias] }]);
        let m = TrainedModel::new(ModelKind::Logistic, s.clone(), net).unwrap();
        for p in m.predict_batch(&sample_uniform(&s, 50, seed)).unwrap() {
            prop_assert!((0.5..=1.0).contains(&p.score));
        }
    }
}

#[test]
fn brute_force_oracles_agree_with_hand_values() {
    assert_eq!(brute_ks(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 8.0]), 0.75);
    assert_eq!(brute_tv(&["A", "B"], &["A", "A"]), 0.5);
    assert_eq!(brute_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]), 0.75);
    assert!((brute_pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
}
