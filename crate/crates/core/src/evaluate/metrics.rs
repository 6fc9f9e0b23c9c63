use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts with "anomalous" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    /// `detections[i]` and `actual[i]` are `true` for anomalous.
    pub fn from_predictions(detections: &[bool], actual: &[bool]) -> Result<Self> {
        if detections.len() != actual.len() {
            return Err(Error::LengthMismatch {
                expected: actual.len(),
                found: detections.len(),
            });
        }
        let mut c = ConfusionCounts::default();
        for (&d, &a) in detections.iter().zip(actual) {
            match (d, a) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// 0 when nothing was detected.
    pub fn precision(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    /// 0 when there are no positives.
    pub fn recall(&self) -> f64 {
        if self.tp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f_beta(&self, beta: f64) -> f64 {
        f_beta(self, beta)
    }
}

/// `(1 + b^2) P R / (b^2 P + R)`, defined as 0 whenever `tp == 0`.
pub fn f_beta(counts: &ConfusionCounts, beta: f64) -> f64 {
    if counts.tp == 0 {
        return 0.0;
    }
    let p = counts.precision();
    let r = counts.recall();
    let b2 = beta * beta;
    (1.0 + b2) * p * r / (b2 * p + r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(tp: usize, fp: usize, fn_: usize) -> ConfusionCounts {
        ConfusionCounts { tp, fp, tn: 0, fn_ }
    }

    #[test]
    fn examples() {
        assert_eq!(f_beta(&counts(5, 0, 0), 0.5), 1.0);
        assert_eq!(f_beta(&counts(0, 3, 4), 0.5), 0.0);
        assert_eq!(f_beta(&counts(0, 0, 0), 0.5), 0.0);
        let f = f_beta(&counts(4, 1, 6), 0.5);
        assert!((f - 1.25 * 0.32 / 0.6).abs() < 1e-12);
        assert!((f - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn from_predictions_counts() {
        let c = ConfusionCounts::from_predictions(
            &[true, true, false, false, true],
            &[true, false, false, true, true],
        )
        .unwrap();
        assert_eq!(c, ConfusionCounts { tp: 2, fp: 1, tn: 1, fn_: 1 });
        assert!(ConfusionCounts::from_predictions(&[true], &[]).is_err());
    }

    #[test]
    fn half_weighs_precision_more() {
        let base = f_beta(&counts(10, 0, 0), 0.5);
        let with_fp = f_beta(&counts(10, 1, 0), 0.5);
        let with_fn = f_beta(&counts(10, 0, 1), 0.5);
        assert!(base - with_fp > base - with_fn);
    }

    proptest! {
        #[test]
        fn monotone_in_tp_antitone_in_fp(tp in 0usize..200, fp in 0usize..200, fn_ in 0usize..200, beta in 0.1f64..3.0) {
            let f = f_beta(&counts(tp, fp, fn_), beta);
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert!(f_beta(&counts(tp + 1, fp, fn_), beta) >= f);
            prop_assert!(f_beta(&counts(tp, fp + 1, fn_), beta) <= f);
        }
    }
}
