//! Brute-force reference implementations for the metric components.

use std::collections::BTreeMap;

pub fn brute_ks(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], t: f64| s.iter().filter(|&&v| v <= t).count() as f64 / s.len() as f64;
    let gap = a.iter().chain(b).map(|&t| (cdf(a, t) - cdf(b, t)).abs()).fold(0.0, f64::max);
    1.0 - gap
}

pub fn brute_tv<K: Ord + Clone>(a: &[K], b: &[K]) -> f64 {
    let mut cells: BTreeMap<K, (f64, f64)> = BTreeMap::new();
    for k in a {
        cells.entry(k.clone()).or_default().0 += 1.0 / a.len() as f64;
    }
    for k in b {
        cells.entry(k.clone()).or_default().1 += 1.0 / b.len() as f64;
    }
    1.0 - 0.5 * cells.values().map(|(p, q)| (p - q).abs()).sum::<f64>()
}

pub fn brute_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    // textbook single-pass formula, independent of the centered two-pass one
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let num = n * sxy - sx * sy;
    let den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    num / den
}

pub fn brute_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                wins += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
            }
        }
    }
    wins / pairs
}

/// Mean nearest-neighbor distance over rows already scaled to `[0, 1]`.
pub fn brute_ann(original: &[Vec<f64>], generated: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for g in generated {
        let mut best = f64::INFINITY;
        for o in original {
            let d = g.iter().zip(o).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            best = best.min(d);
        }
        total += best;
    }
    total / generated.len() as f64
}
