mod common;

use common::{model, people};
use limi::datasets::adult;
use limi::generator::{fit_copula, sample_latents, Generator};
use limi::metrics::{
    ann_distance, aod, atn, atn_repeated, contingency_similarity, egs, fairness_report, if_o, if_r, ks_complement,
    pearson_similarity, spd, tv_complement,
};
use limi::probe::is_discriminatory;
use limi::schema::{sample_uniform, ColumnSpec, Dataset, Row, Schema};
use limi::Error;
use rand::Rng;

#[test]
fn component_examples() {
    assert_eq!(ks_complement(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 1.0);
    assert_eq!(ks_complement(&[0.0; 4], &[1.0; 4]).unwrap(), 0.0);
    assert_eq!(ks_complement(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 8.0]).unwrap(), 0.75);
    assert!(matches!(ks_complement(&[], &[1.0]), Err(Error::EmptySample)));

    assert_eq!(tv_complement(&[0, 1], &[0, 0]).unwrap(), 0.5);
    assert_eq!(tv_complement(&[0, 0], &[1, 1]).unwrap(), 0.0);
    assert_eq!(tv_complement(&[2, 1, 2], &[1, 2, 2]).unwrap(), 1.0);

    let x = [1.0, 2.0, 3.0, 4.0];
    let rev = [4.0, 3.0, 2.0, 1.0];
    assert!((pearson_similarity((&x, &x), (&x, &x)).unwrap() - 1.0).abs() < 1e-12);
    assert!(pearson_similarity((&x, &x), (&x, &rev)).unwrap().abs() < 1e-12);
    assert!(matches!(pearson_similarity((&x, &[1.0; 4]), (&x, &x)), Err(Error::ConstantColumn)));

    assert_eq!(contingency_similarity((&[0, 1], &[0, 1]), (&[0, 0], &[0, 0])).unwrap(), 0.5);
    assert_eq!(contingency_similarity((&[0, 1], &[0, 1]), (&[1, 0], &[0, 1])).unwrap(), 0.0);
}

/// Two 5-row tables with sample correlations 0.6 and 0.1.
#[test]
fn pearson_worked_example() {
    fn corr(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }
    // y = x + e with e chosen so that the correlation is exactly as named
    let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let e = [1.0, -2.0, 0.0, 2.0, -1.0];
    let mix = |rho: f64| -> Vec<f64> {
        // e ⟂ x and |e| = |x|, so corr(x, ρx + √(1-ρ²)e) = ρ
        let k = (1.0 - rho * rho).sqrt();
        x.iter().zip(&e).map(|(a, b)| rho * a + k * b).collect()
    };
    let (y_real, y_syn) = (mix(0.6), mix(0.1));
    assert!((corr(&x, &y_real) - 0.6).abs() < 1e-12);
    assert!((corr(&x, &y_syn) - 0.1).abs() < 1e-12);
    let s = pearson_similarity((&x, &y_real), (&x, &y_syn)).unwrap();
    assert!((s - 0.75).abs() < 1e-12, "{s}");
}

#[test]
fn atn_of_a_table_against_itself_is_one() {
    let ds = adult::generate(adult::TRAIN_ROWS, 1).unwrap();
    assert_eq!(atn(&ds, &ds).unwrap().atn, 1.0);
    // same-size bootstrap of the table itself
    let mut rng = limi::rng::seeded(2);
    let picks: Vec<usize> = (0..ds.len()).map(|_| rng.random_range(0..ds.len())).collect();
    let r = atn(&ds.select(&picks), &ds).unwrap();
    assert!(r.atn >= 0.98, "{}", r.atn);
}

#[test]
fn uniform_noise_is_less_natural_than_copula_samples() {
    let train = adult::generate(5_000, 3).unwrap();
    let s = train.schema().clone();
    let noise = Dataset::new(s.clone(), sample_uniform(&s, 5_000, 4), vec![0; 5_000]).unwrap();
    let cop = fit_copula(&train).unwrap();
    let rows = cop.decode_batch(&sample_latents(5_000, cop.latent_dim(), 5)).unwrap();
    let decoded = Dataset::new(s, rows, vec![0; 5_000]).unwrap();
    let a_noise = atn_repeated(&noise, &train, 3, 0).unwrap();
    let a_cop = atn_repeated(&decoded, &train, 3, 0).unwrap();
    assert!(a_noise.mean.atn <= a_cop.mean.atn);
    assert_eq!(a_cop.atn_per_repeat.len(), 3);
    assert!(ann_distance(&train, &noise).unwrap() > ann_distance(&train, &decoded).unwrap());
}

fn line() -> Schema {
    Schema::new(
        vec![ColumnSpec::numeric("a", 0, 10).protected(), ColumnSpec::numeric("b", 0, 10)],
        "y",
        1,
    )
    .unwrap()
}

#[test]
fn nearest_neighbor_examples() {
    let s = line();
    let original = Dataset::new(s.clone(), vec![Row::new(vec![0, 0]), Row::new(vec![10, 10])], vec![0, 1]).unwrap();
    let subset = original.select(&[1]);
    assert_eq!(ann_distance(&original, &subset).unwrap(), 0.0);
    let half = Dataset::new(s.clone(), vec![Row::new(vec![5, 0])], vec![0]).unwrap();
    assert_eq!(ann_distance(&original, &half).unwrap(), 0.5);

    let a = Dataset::new(s.clone(), sample_uniform(&s, 100, 1), vec![0; 100]).unwrap();
    let b = Dataset::new(s.clone(), sample_uniform(&s, 100, 2), vec![0; 100]).unwrap();
    let mut total = 0.0;
    for g in b.rows() {
        let ge = s.encode(g).entries;
        let best = a
            .rows()
            .iter()
            .map(|o| {
                let oe = s.encode(o).entries;
                ge.iter().zip(&oe).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        total += best;
    }
    assert!((ann_distance(&a, &b).unwrap() - total / 100.0).abs() < 1e-12);
}

#[test]
fn efficiency_examples() {
    assert_eq!(egs(0, 10.0).unwrap(), 0.0);
    assert_eq!(egs(50, 2.0).unwrap(), 25.0);
    assert!(matches!(egs(5, 0.0), Err(Error::ZeroElapsed)));
}

/// Three binary columns, two of them protected: an eight-row domain.
fn cube() -> Schema {
    Schema::new(
        vec![
            ColumnSpec::numeric("a", 0, 1),
            ColumnSpec::numeric("g", 0, 1).protected(),
            ColumnSpec::numeric("r", 0, 1).protected(),
        ],
        "y",
        1,
    )
    .unwrap()
}

#[test]
fn individual_fairness_on_an_eight_row_domain() {
    let s = cube();
    // discriminates on g only when a = 1
    let m = model(&s, |r| if r.get(0) == 1 && r.get(1) == 1 { 0.9 } else { 0.1 });
    let domain: Vec<Row> = (0..8).map(|i| Row::new(vec![i >> 2, (i >> 1) & 1, i & 1])).collect();
    let exact = domain.iter().filter(|r| is_discriminatory(&m, &s, r).unwrap().is_some()).count() as f64 / 8.0;
    assert_eq!(exact, 0.5);
    let estimate = if_r(&m, 40_000, 3).unwrap();
    assert!((estimate - exact).abs() < 0.01, "{estimate}");
    assert_eq!(if_r(&m, 500, 9).unwrap(), if_r(&m, 500, 9).unwrap());

    let table = Dataset::new(s.clone(), domain.clone(), vec![0; 8]).unwrap();
    assert_eq!(if_o(&m, &table).unwrap(), exact);
    let constant = model(&s, |_| 0.3);
    assert_eq!(if_r(&constant, 1_000, 0).unwrap(), 0.0);
    assert_eq!(if_o(&constant, &table).unwrap(), 0.0);
    let on_g = model(&s, |r| if r.get(1) == 1 { 0.9 } else { 0.1 });
    assert_eq!(if_r(&on_g, 1_000, 0).unwrap(), 1.0);
    assert_eq!(if_o(&on_g, &table).unwrap(), 1.0);
}

/// `sex` privileged = M; rows `(x, sex, age)` and labels.
fn table(rows: &[(i64, i64, u8)]) -> Dataset {
    let rs = rows.iter().map(|&(x, g, _)| Row::new(vec![x, g, 5])).collect();
    let ys = rows.iter().map(|r| r.2).collect();
    Dataset::new(people(), rs, ys).unwrap()
}

#[test]
fn statistical_parity_examples() {
    // predicted positive iff x ≥ 50; privileged rate 0.2, unprivileged 0.6
    let rows: Vec<(i64, i64, u8)> = vec![
        (60, 0, 1), (60, 0, 1), (60, 0, 0), (10, 0, 0), (10, 0, 1),
        (60, 1, 1), (10, 1, 0), (10, 1, 0), (10, 1, 1), (10, 1, 0),
    ];
    let ds = table(&rows);
    let m = model(&people(), |r| if r.get(0) >= 50 { 0.9 } else { 0.1 });
    assert!((spd(&m, &ds, 1).unwrap() - 0.4).abs() < 1e-12);
    let all = model(&people(), |_| 0.9);
    assert_eq!(spd(&all, &ds, 1).unwrap(), 0.0);
    let privileged = model(&people(), |r| if r.get(1) == 1 { 0.9 } else { 0.1 });
    assert_eq!(spd(&privileged, &ds, 1).unwrap(), 1.0);

    let only_men = table(&[(60, 1, 1), (10, 1, 0)]);
    assert!(matches!(spd(&m, &only_men, 1), Err(Error::EmptyGroup { .. })));
}

#[test]
fn average_odds_examples() {
    // 16 rows, 8 per group, 4 positives and 4 negatives in each.
    // TPR: privileged 3/4, unprivileged 1/4 → gap 0.5; FPR: 1/4 vs 2/4 → gap 0.25.
    // Rates are built from x: x ≥ 50 means predicted positive.
    let mut rows = Vec::new();
    for (g, tp, fp) in [(1, 3, 1), (0, 1, 2)] {
        for k in 0..4 {
            rows.push((if k < tp { 60 } else { 10 }, g, 1u8));
            rows.push((if k < fp { 60 } else { 10 }, g, 0u8));
        }
    }
    let ds = table(&rows);
    assert_eq!(ds.len(), 16);
    let m = model(&people(), |r| if r.get(0) >= 50 { 0.9 } else { 0.1 });
    assert!((aod(&m, &ds, 1).unwrap() - 0.375).abs() < 1e-12);

    // TPR gap 0.4 with five positives per group, FPR gap 0.2 with five negatives
    let mut rows = Vec::new();
    for (g, tp, fp) in [(1, 4, 2), (0, 2, 1)] {
        for k in 0..5 {
            rows.push((if k < tp { 60 } else { 10 }, g, 1u8));
            rows.push((if k < fp { 60 } else { 10 }, g, 0u8));
        }
    }
    let ds = table(&rows);
    assert!((aod(&m, &ds, 1).unwrap() - 0.3).abs() < 1e-12);

    let truth = model(&people(), |r| if r.get(0) >= 50 { 0.9 } else { 0.1 });
    let exact = table(&[(60, 1, 1), (10, 1, 0), (60, 0, 1), (10, 0, 0)]);
    assert_eq!(aod(&truth, &exact, 1).unwrap(), 0.0);

    let no_negatives = table(&[(60, 1, 1), (10, 1, 0), (60, 0, 1), (10, 0, 1)]);
    assert!(matches!(aod(&m, &no_negatives, 1), Err(Error::UndefinedRate { .. })));
}

#[test]
fn group_metrics_ignore_which_group_is_privileged() {
    let ds = adult::generate(2_000, 7).unwrap();
    let s = ds.schema().clone();
    let sex = s.column_index("sex").unwrap();
    let m = model(&s, |r| common::sigmoid(r.get(3) as f64 / 3.0 - 3.5 + r.get(sex) as f64));
    let mut cols = s.columns().to_vec();
    cols[sex] = ColumnSpec::categorical("sex", &adult::SEX).protected().privileged(&["Female"]);
    let swapped = Schema::new(cols, s.label_name(), s.favorable_label()).unwrap();
    let ds2 = ds.with_schema(swapped).unwrap();
    assert!((spd(&m, &ds, sex).unwrap() - spd(&m, &ds2, sex).unwrap()).abs() < 1e-15);
    assert!((aod(&m, &ds, sex).unwrap() - aod(&m, &ds2, sex).unwrap()).abs() < 1e-15);

    let r = fairness_report(&m, &ds, &ds, sex, 1_000, 1).unwrap();
    for v in [r.if_r, r.if_o, r.spd, r.aod, r.accuracy] {
        assert!((0.0..=1.0).contains(&v));
    }
    assert_eq!(r.protected_column, "sex");
}
