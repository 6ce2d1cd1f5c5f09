//! Synthetic stand-in for the UCI Adult census-income table.
//!
//! Thirteen columns with the published attribute names, category lists and
//! approximate marginals. Numeric attributes are pre-binned to small integer
//! ranges (age in decades, capital gain in thousands, and so on). The income
//! label follows a logistic model of education, marriage, age, hours,
//! capital movements, occupation, sex and race, tuned so that about a quarter
//! of rows are favorable and a well-fitted classifier reaches the mid-80s in
//! accuracy.

use rand::Rng as _;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};

use crate::error::Result;
use crate::generator::normal::std_normal_quantile;
use crate::rng::{self, Rng};
use crate::schema::{ColumnSpec, Dataset, Row, Schema};

pub const TRAIN_ROWS: usize = 32_561;
pub const TEST_ROWS: usize = 16_281;

pub const WORKCLASS: [&str; 8] = [
    "Private",
    "Self-emp-not-inc",
    "Self-emp-inc",
    "Federal-gov",
    "Local-gov",
    "State-gov",
    "Without-pay",
    "Never-worked",
];
const WORKCLASS_P: [f64; 8] = [0.739, 0.083, 0.036, 0.031, 0.068, 0.042, 0.0006, 0.0004];

/// Ordered from least to most schooling.
pub const EDUCATION: [&str; 16] = [
    "Preschool",
    "1st-4th",
    "5th-6th",
    "7th-8th",
    "9th",
    "10th",
    "11th",
    "12th",
    "HS-grad",
    "Some-college",
    "Assoc-voc",
    "Assoc-acdm",
    "Bachelors",
    "Masters",
    "Prof-school",
    "Doctorate",
];
const EDUCATION_P: [f64; 16] = [
    0.0016, 0.005, 0.010, 0.020, 0.016, 0.029, 0.036, 0.013, 0.323, 0.224, 0.042, 0.033, 0.164, 0.053,
    0.018, 0.0124,
];

pub const MARITAL: [&str; 7] = [
    "Married-civ-spouse",
    "Divorced",
    "Never-married",
    "Separated",
    "Widowed",
    "Married-spouse-absent",
    "Married-AF-spouse",
];

pub const OCCUPATION: [&str; 14] = [
    "Tech-support",
    "Craft-repair",
    "Other-service",
    "Sales",
    "Exec-managerial",
    "Prof-specialty",
    "Handlers-cleaners",
    "Machine-op-inspct",
    "Adm-clerical",
    "Farming-fishing",
    "Transport-moving",
    "Priv-house-serv",
    "Protective-serv",
    "Armed-Forces",
];
const OCCUPATION_P: [f64; 14] = [
    0.030, 0.133, 0.107, 0.119, 0.132, 0.134, 0.045, 0.065, 0.123, 0.032, 0.052, 0.005, 0.021, 0.0003,
];
/// Rough socioeconomic standing of each occupation.
const OCCUPATION_STATUS: [f64; 14] = [
    0.4, -0.2, -0.9, 0.2, 1.0, 1.1, -0.8, -0.6, -0.1, -0.7, -0.4, -1.4, 0.2, 0.0,
];
const OCCUPATION_EFFECT: [f64; 14] = [
    0.4, -0.1, -1.2, 0.2, 0.8, 0.6, -0.8, -0.5, -0.2, -0.9, -0.3, -2.0, 0.3, 0.0,
];

pub const RELATIONSHIP: [&str; 6] = ["Wife", "Own-child", "Husband", "Not-in-family", "Other-relative", "Unmarried"];

pub const RACE: [&str; 5] = ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"];
const RACE_P: [f64; 5] = [0.854, 0.032, 0.010, 0.008, 0.096];

pub const SEX: [&str; 2] = ["Female", "Male"];

pub const NATIVE_COUNTRY: [&str; 41] = [
    "United-States",
    "Cambodia",
    "England",
    "Puerto-Rico",
    "Canada",
    "Germany",
    "Outlying-US(Guam-USVI-etc)",
    "India",
    "Japan",
    "Greece",
    "South",
    "China",
    "Cuba",
    "Iran",
    "Honduras",
    "Philippines",
    "Italy",
    "Poland",
    "Jamaica",
    "Vietnam",
    "Mexico",
    "Portugal",
    "Ireland",
    "France",
    "Dominican-Republic",
    "Laos",
    "Ecuador",
    "Taiwan",
    "Haiti",
    "Columbia",
    "Hungary",
    "Guatemala",
    "Nicaragua",
    "Scotland",
    "Thailand",
    "Yugoslavia",
    "El-Salvador",
    "Trinadad&Tobago",
    "Peru",
    "Hong",
    "Holand-Netherlands",
];
const NATIVE_COUNTRY_P: [f64; 41] = [
    0.913, 0.0006, 0.0028, 0.0036, 0.0037, 0.0042, 0.0004, 0.0031, 0.0019, 0.0009, 0.0025, 0.0023,
    0.0029, 0.0013, 0.0004, 0.0061, 0.0022, 0.0018, 0.0025, 0.0021, 0.0197, 0.0011, 0.0007, 0.0009,
    0.0021, 0.0006, 0.0009, 0.0016, 0.0014, 0.0018, 0.0004, 0.0020, 0.0010, 0.0004, 0.0006, 0.0005,
    0.0033, 0.0006, 0.0009, 0.0006, 0.0001,
];

/// Share of each age decade (17–19, 20s, …, 90).
const AGE_P: [f64; 9] = [0.050, 0.246, 0.265, 0.220, 0.135, 0.060, 0.017, 0.005, 0.002];
const AGE_EFFECT: [f64; 9] = [-3.5, -1.8, -0.2, 0.4, 0.5, 0.3, -0.3, -0.7, -0.7];

const INTERCEPT: f64 = -4.93;
const SHARPNESS: f64 = 1.3;
const MALE_EFFECT: f64 = 0.8;

/// Column layout of the clone. `sex`, `race` and `age` carry privileged
/// values (Male, White, 25 and over); only `sex` is marked protected, which
/// is the single-attribute setting used by default.
pub fn schema() -> Schema {
    let columns = vec![
        ColumnSpec::numeric("age", 1, 9).privileged(&["3", "4", "5", "6", "7", "8", "9"]),
        ColumnSpec::categorical("workclass", &WORKCLASS),
        ColumnSpec::numeric("fnlwgt", 0, 39),
        ColumnSpec::categorical("education", &EDUCATION),
        ColumnSpec::categorical("marital_status", &MARITAL),
        ColumnSpec::categorical("occupation", &OCCUPATION),
        ColumnSpec::categorical("relationship", &RELATIONSHIP),
        ColumnSpec::categorical("race", &RACE).privileged(&["White"]),
        ColumnSpec::categorical("sex", &SEX).protected().privileged(&["Male"]),
        ColumnSpec::numeric("capital_gain", 0, 99),
        ColumnSpec::numeric("capital_loss", 0, 39),
        ColumnSpec::numeric("hours_per_week", 1, 99),
        ColumnSpec::categorical("native_country", &NATIVE_COUNTRY),
    ];
    Schema::new(columns, "income", 1).expect("adult schema is valid")
}

fn pick(rng: &mut Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Draws one row and its probability of the favorable label.
fn draw(rng: &mut Rng, edu_cuts: &[f64]) -> (Row, f64) {
    let male = rng.random::<f64>() < 0.669;
    let race = pick(rng, &RACE_P);
    let age = pick(rng, &AGE_P);
    let ses: f64 = StandardNormal.sample(rng);

    let noise: f64 = Normal::new(0.0, 0.45).unwrap().sample(rng);
    let t = 0.9 * ses + noise;
    let mut education = edu_cuts.partition_point(|&c| c <= t);
    if age == 0 {
        education = education.min(9);
    }

    let mut wc = WORKCLASS_P;
    wc[2] *= (0.6 * ses).exp();
    wc[1] *= (0.2 * age as f64).exp() / 2.0;
    let workclass = pick(rng, &wc);

    let married_p: f64 = [0.02, 0.26, 0.56, 0.61, 0.63, 0.60, 0.50, 0.40, 0.40][age];
    let never_p = [0.97, 0.68, 0.25, 0.12, 0.07, 0.06, 0.05, 0.05, 0.05][age];
    let widow_share = [0.0, 0.0, 0.02, 0.06, 0.15, 0.30, 0.55, 0.70, 0.70][age];
    let rest = (1.0 - married_p - never_p).max(0.0);
    let marital = pick(
        rng,
        &[
            married_p,
            rest * (1.0 - widow_share) * 0.74,
            never_p,
            rest * (1.0 - widow_share) * 0.14,
            rest * widow_share,
            rest * (1.0 - widow_share) * 0.11,
            rest * (1.0 - widow_share) * 0.01,
        ],
    );
    let married = marital == 0 || marital == 6;

    let relationship = if married {
        if rng.random::<f64>() < 0.02 {
            4
        } else if male {
            2
        } else {
            0
        }
    } else if age <= 1 && rng.random::<f64>() < 0.5 {
        1
    } else {
        let unmarried = if male { 0.15 } else { 0.40 };
        pick(rng, &[0.0, 0.12, 0.0, 0.80 - unmarried, 0.08, unmarried])
    };

    let mut occ = [0.0; 14];
    for (k, w) in occ.iter_mut().enumerate() {
        *w = OCCUPATION_P[k] * (1.2 * OCCUPATION_STATUS[k] * ses).exp();
    }
    let sex_tilt: [(usize, f64); 5] = [(8, 2.0), (1, 0.15), (10, 0.25), (2, 1.5), (11, 4.0)];
    for (k, f) in sex_tilt {
        occ[k] *= if male { 1.0 / f.sqrt() } else { f };
    }
    let occupation = pick(rng, &occ);

    let fnlwgt = {
        let f: f64 = LogNormal::new(12.0, 0.5).unwrap().sample(rng);
        ((f / 37_500.0).floor() as i64).clamp(0, 39)
    };

    let hours = if rng.random::<f64>() < 0.47 {
        40
    } else {
        let mut mean = 40.0 + 3.0 * ses + if male { 3.0 } else { -3.0 };
        if age == 0 || age >= 6 {
            mean -= 14.0;
        }
        let h: f64 = Normal::new(mean, 11.0).unwrap().sample(rng);
        (h.round() as i64).clamp(1, 99)
    };

    let gain = if rng.random::<f64>() < 0.065 * (0.7 * ses).exp() {
        let u = rng.random::<f64>();
        if u < 0.06 {
            99
        } else if u < 0.45 {
            rng.random_range(1..=4)
        } else if u < 0.6 {
            rng.random_range(5..=6)
        } else {
            rng.random_range(7..=41)
        }
    } else {
        0
    };
    let loss = if gain == 0 && rng.random::<f64>() < 0.047 {
        if rng.random::<f64>() < 0.6 {
            rng.random_range(17..=22)
        } else {
            rng.random_range(1..=39)
        }
    } else {
        0
    };

    let country = pick(rng, &NATIVE_COUNTRY_P);

    let edu_num = education as f64 + 1.0;
    let gain_term = match gain {
        0 => 0.0,
        1..=4 => -0.3,
        g => 0.35 * g as f64,
    };
    let loss_term = if (17..=22).contains(&loss) { 1.2 } else { 0.0 };
    let self_emp_inc = if workclass == 2 { 0.4 } else { 0.0 };
    let merit = 0.5 * (edu_num - 10.0)
        + if married { 2.6 } else { 0.0 }
        + AGE_EFFECT[age]
        + 0.045 * (hours as f64 - 40.0)
        + gain_term
        + loss_term
        + OCCUPATION_EFFECT[occupation]
        + self_emp_inc;
    let logit = INTERCEPT + SHARPNESS * merit + if male { MALE_EFFECT } else { 0.0 } + if race == 0 { 0.2 } else { 0.0 };
    let p = 1.0 / (1.0 + (-logit).exp());

    let row = Row::new(vec![
        age as i64 + 1,
        workclass as i64,
        fnlwgt,
        education as i64,
        marital as i64,
        occupation as i64,
        relationship as i64,
        race as i64,
        i64::from(male),
        gain,
        loss,
        hours,
        country as i64,
    ]);
    (row, p)
}

fn education_cuts() -> Vec<f64> {
    // t = 0.9·ses + N(0, 0.45²) has variance 1.0125.
    let sd = (0.81f64 + 0.2025).sqrt();
    let mut acc = 0.0;
    let total: f64 = EDUCATION_P.iter().sum();
    EDUCATION_P[..EDUCATION_P.len() - 1]
        .iter()
        .map(|p| {
            acc += p / total;
            sd * std_normal_quantile(acc)
        })
        .collect()
}

/// `n` rows with labels drawn from the income model, plus the true
/// favorable-label probability of each row.
pub fn generate_with_probabilities(n: usize, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    let mut rng = rng::seeded(seed);
    let cuts = education_cuts();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut probs = Vec::with_capacity(n);
    for _ in 0..n {
        let (row, p) = draw(&mut rng, &cuts);
        labels.push(u8::from(rng.random::<f64>() < p));
        rows.push(row);
        probs.push(p);
    }
    Ok((Dataset::new(schema(), rows, labels)?, probs))
}

pub fn generate(n: usize, seed: u64) -> Result<Dataset> {
    Ok(generate_with_probabilities(n, seed)?.0)
}

/// Train and test splits with the original table sizes.
pub fn train_test(seed: u64) -> Result<(Dataset, Dataset)> {
    Ok((
        generate(TRAIN_ROWS, rng::derive_seed(seed, "adult-train"))?,
        generate(TEST_ROWS, rng::derive_seed(seed, "adult-test"))?,
    ))
}
