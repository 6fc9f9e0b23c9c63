use crate::error::{Error, Result};
use crate::evaluate::{f_beta, ConfusionCounts};
use crate::ingest::LabelSeries;

/// The threshold objective is F-beta with this beta.
pub const THRESHOLD_BETA: f64 = 0.5;

/// Padding used for the candidates just outside the observed score range.
pub fn candidate_margin(max_score: f64) -> f64 {
    1e-9 * max_score.abs().max(1.0)
}

/// Threshold on the anomaly score that maximizes F½ with "score >
/// threshold" as the detection rule and anomalous labels as positives.
///
/// Candidates are the midpoints between consecutive distinct scores plus
/// one value just below the minimum and one just above the maximum; among
/// equally good candidates the largest wins. Without any anomalous label
/// the result is `max + 3 * std` (or `max + 3 * margin` for constant
/// scores).
pub fn fit_threshold(scores: &[f64], labels: &LabelSeries) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidConfig("anomaly scores must be finite".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let delta = candidate_margin(max);
    let positives = labels.n_anomalous();
    if positives == 0 {
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        return Ok(max + 3.0 * if sd > 0.0 { sd } else { delta });
    }

    let mut pairs: Vec<(f64, bool)> = scores
        .iter()
        .zip(labels.as_slice())
        .map(|(&s, l)| (s, l.is_anomalous()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // distinct values with their (total, positive) counts, ascending
    let mut groups: Vec<(f64, usize, usize)> = Vec::new();
    for (s, pos) in pairs {
        match groups.last_mut() {
            Some(g) if g.0 == s => {
                g.1 += 1;
                g.2 += usize::from(pos);
            }
            _ => groups.push((s, 1, usize::from(pos))),
        }
    }

    let n = scores.len();
    let mut best_threshold = groups[0].0 - delta;
    let mut best_f = f64::NEG_INFINITY;
    // Candidate k detects every score in groups[k..]; k == groups.len()
    // detects nothing.
    let mut detected = n;
    let mut tp = positives;
    for k in 0..=groups.len() {
        let threshold = if k == 0 {
            groups[0].0 - delta
        } else if k == groups.len() {
            max + delta
        } else {
            (groups[k - 1].0 + groups[k].0) / 2.0
        };
        let counts = ConfusionCounts {
            tp,
            fp: detected - tp,
            fn_: positives - tp,
            tn: n - detected - (positives - tp),
        };
        let f = f_beta(&counts, THRESHOLD_BETA);
        if f >= best_f {
            best_f = f;
            best_threshold = threshold;
        }
        if k < groups.len() {
            detected -= groups[k].1;
            tp -= groups[k].2;
        }
    }
    Ok(best_threshold)
}

/// `score > threshold` for every score.
pub fn apply_threshold(scores: &[f64], threshold: f64) -> Vec<bool> {
    scores.iter().map(|&s| s > threshold).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Label::{Anomalous as A, Normal as N};
    use crate::ingest::{Label, LabelSeries};
    use proptest::prelude::*;

    /// Exhaustive reference: every candidate evaluated by direct counting.
    fn brute_force(scores: &[f64], labels: &[Label]) -> (f64, f64) {
        let mut distinct: Vec<f64> = scores.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let max = *distinct.last().unwrap();
        let delta = 1e-9 * max.abs().max(1.0);
        let mut candidates = vec![distinct[0] - delta, max + delta];
        for w in distinct.windows(2) {
            candidates.push((w[0] + w[1]) / 2.0);
        }
        let actual: Vec<bool> = labels.iter().map(|l| *l == A).collect();
        let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &t in &candidates {
            let det: Vec<bool> = scores.iter().map(|&s| s > t).collect();
            let f = ConfusionCounts::from_predictions(&det, &actual)
                .unwrap()
                .f_beta(0.5);
            if f > best.1 || (f == best.1 && t > best.0) {
                best = (t, f);
            }
        }
        best
    }

    #[test]
    fn separable_example() {
        let labels = LabelSeries(vec![N, N, A]);
        let t = fit_threshold(&[0.1, 0.2, 0.9], &labels).unwrap();
        assert!((t - 0.55).abs() < 1e-15);
        assert_eq!(brute_force(&[0.1, 0.2, 0.9], &labels.0), (t, 1.0));
        assert_eq!(apply_threshold(&[0.1, 0.9], t), vec![false, true]);
    }

    #[test]
    fn no_positives_fallback() {
        let scores = [1.0, 2.0, 3.0];
        let t = fit_threshold(&scores, &LabelSeries(vec![N; 3])).unwrap();
        let sd = (2.0f64 / 3.0).sqrt();
        assert!((t - (3.0 + 3.0 * sd)).abs() < 1e-12);
        let t = fit_threshold(&[2.0; 4], &LabelSeries(vec![N; 4])).unwrap();
        assert_eq!(t, 2.0 + 3.0 * 2e-9);
    }

    #[test]
    fn errors() {
        assert!(matches!(fit_threshold(&[], &LabelSeries(vec![])), Err(Error::EmptyInput)));
        assert!(matches!(
            fit_threshold(&[1.0], &LabelSeries(vec![N, A])),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn boundary_is_strict() {
        assert_eq!(apply_threshold(&[0.5, 0.50000001], 0.5), vec![false, true]);
        assert_eq!(apply_threshold(&[0.0; 3], 0.1), vec![false; 3]);
    }

    #[test]
    fn all_positive_detects_everything() {
        let t = fit_threshold(&[0.3, 0.1, 0.2], &LabelSeries(vec![A; 3])).unwrap();
        assert!(apply_threshold(&[0.3, 0.1, 0.2], t).iter().all(|d| *d));
    }

    proptest! {
        #[test]
        fn matches_exhaustive_search(
            raw in prop::collection::vec((0u32..60, prop::bool::weighted(0.3)), 1..120),
            continuous in any::<bool>(),
        ) {
            let scores: Vec<f64> = raw
                .iter()
                .enumerate()
                .map(|(i, (s, _))| if continuous { (*s as f64 + i as f64 * 0.013).sqrt() } else { *s as f64 / 7.0 })
                .collect();
            let labels: Vec<Label> = raw.iter().map(|(_, a)| if *a { A } else { N }).collect();
            prop_assume!(labels.contains(&A));
            let series = LabelSeries(labels.clone());
            let t = fit_threshold(&scores, &series).unwrap();
            let (bt, bf) = brute_force(&scores, &labels);
            let f = ConfusionCounts::from_predictions(&apply_threshold(&scores, t), &series.as_bools())
                .unwrap()
                .f_beta(0.5);
            prop_assert_eq!(f, bf);
            prop_assert_eq!(t, bt);
        }

        #[test]
        fn raising_threshold_never_adds_detections(
            scores in prop::collection::vec(0.0f64..5.0, 1..100),
            a in 0.0f64..5.0,
            b in 0.0f64..5.0,
        ) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let n_lo = apply_threshold(&scores, lo).iter().filter(|d| **d).count();
            let n_hi = apply_threshold(&scores, hi).iter().filter(|d| **d).count();
            prop_assert!(n_hi <= n_lo);
        }
    }
}
