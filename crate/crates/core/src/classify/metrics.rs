//! Ranking metrics for binary scores (label 1 is the positive class).

use crate::error::{Error, Result};

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} labels", scores.len()),
            found: format!("{} labels", labels.len()),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedMetric("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric("labels contain a single class".into()));
    }
    Ok((pos, neg))
}

/// Indices sorted by score, descending, with tied runs grouped.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Probability that a random positive outranks a random negative, ties
/// counted one half (midrank Mann-Whitney statistic).
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check(scores, labels)?;
    let mut groups = tie_groups(scores);
    groups.reverse();
    // ascending ranks, 1-based; a tied run shares its mean rank
    let mut rank_sum = 0.0;
    let mut next = 1.0;
    for g in &groups {
        let len = g.len() as f64;
        let mid = next + (len - 1.0) / 2.0;
        rank_sum += mid * g.iter().filter(|&&i| labels[i] == 1).count() as f64;
        next += len;
    }
    let p = pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * neg as f64))
}

/// Average precision: `Σ (R_t - R_{t-1}) P_t` over distinct thresholds,
/// i.e. the area under the step-wise precision-recall curve.
pub fn pr_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, _) = check(scores, labels)?;
    let mut tp = 0usize;
    let mut seen = 0usize;
    let mut area = 0.0;
    let mut recall_prev = 0.0;
    for g in tie_groups(scores) {
        seen += g.len();
        tp += g.iter().filter(|&&i| labels[i] == 1).count();
        let recall = tp as f64 / pos as f64;
        let precision = tp as f64 / seen as f64;
        area += (recall - recall_prev) * precision;
        recall_prev = recall;
    }
    Ok(area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn pairwise_auc(s: &[f64], y: &[u8]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if y[i] == 1 && y[j] == 0 {
                    den += 1.0;
                    num += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / den
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 6], &[0, 1, 0, 1, 1, 0]).unwrap(), 0.5);
        assert!(roc_auc(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(pr_auc(&[0.1, 0.2], &[0, 0]).is_err());
    }

    #[test]
    fn twelve_point_instance() {
        let mut rng = Seed(12).stream();
        let s: Vec<f64> = (0..12).map(|_| (rng.random::<f64>() * 4.0).floor()).collect();
        let y: Vec<u8> = (0..12).map(|i| u8::from(i % 3 == 0)).collect();
        assert!((roc_auc(&s, &y).unwrap() - pairwise_auc(&s, &y)).abs() < 1e-12);
    }

    #[test]
    fn pr_fixtures() {
        // ranks: + - + -  → P at recall .5 is 1, at recall 1 is 2/3
        let ap = pr_auc(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).unwrap();
        assert!((ap - (0.5 * 1.0 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        // all tied: one threshold, precision = prevalence
        let ap = pr_auc(&[0.3; 5], &[1, 0, 0, 1, 0]).unwrap();
        assert!((ap - 0.4).abs() < 1e-12);
        // tie across classes in the middle
        let ap = pr_auc(&[0.9, 0.5, 0.5, 0.1], &[1, 1, 0, 1]).unwrap();
        let want = (1.0 / 3.0) * 1.0 + (1.0 / 3.0) * (2.0 / 3.0) + (1.0 / 3.0) * 0.75;
        assert!((ap - want).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn auc_matches_pairs_and_transforms(seed in any::<u64>(), n in 4usize..40) {
            let mut rng = Seed(seed).stream();
            let s: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 6.0).round() / 3.0).collect();
            let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.4)).collect();
            y[0] = 1;
            y[1] = 0;
            let auc = roc_auc(&s, &y).unwrap();
            prop_assert!((auc - pairwise_auc(&s, &y)).abs() < 1e-12);
            let ex: Vec<f64> = s.iter().map(|v| v.exp()).collect();
            let aff: Vec<f64> = s.iter().map(|v| 3.0 * v - 7.0).collect();
            prop_assert!((roc_auc(&ex, &y).unwrap() - auc).abs() < 1e-12);
            prop_assert!((roc_auc(&aff, &y).unwrap() - auc).abs() < 1e-12);
            let neg: Vec<f64> = s.iter().map(|v| -v).collect();
            prop_assert!((roc_auc(&neg, &y).unwrap() + auc - 1.0).abs() < 1e-12);
            let ap = pr_auc(&s, &y).unwrap();
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ap));
        }
    }
}
