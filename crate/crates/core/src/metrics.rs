//! ROC curves, AUC, threshold selection and confusion matrices.
//!
//! A sample is flagged positive at threshold `gamma` when its score is
//! **strictly greater** than `gamma`. Curves carry one point per distinct
//! score plus sentinel thresholds at 0 and 1, ordered by ascending
//! threshold, so TPR and FPR are monotone nonincreasing along the curve.
//!
//! Three-way results are reduced to binary curves two ways: "anomalous"
//! (class 2 or 3 against class 1) for the lower threshold, and "malicious"
//! (class 3 against the rest) for the upper one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("scores and labels differ in length: {scores} vs {labels}")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("score {0} outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error("need at least one positive and one negative sample")]
    OneClassOnly,
    #[error("empty input")]
    Empty,
    #[error("class index {0} outside 0..=2")]
    BadClassIndex(usize),
    #[error("gamma {gamma} with step {h} leaves [0, 1]")]
    GammaOutOfRange { gamma: f64, h: f64 },
}

type Result<T> = std::result::Result<T, MetricsError>;

/// One operating point of a classifier at threshold `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub gamma: f64,
    pub tpr: f64,
    pub fpr: f64,
}

/// Receiver operating characteristic over all distinct-score thresholds,
/// with sentinels at gamma = 0 and gamma = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

fn validate(scores: &[f64], positives: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != positives.len() {
        return Err(MetricsError::LengthMismatch {
            scores: scores.len(),
            labels: positives.len(),
        });
    }
    if scores.is_empty() {
        return Err(MetricsError::Empty);
    }
    for &s in scores {
        if !(0.0..=1.0).contains(&s) || s.is_nan() {
            return Err(MetricsError::ScoreOutOfRange(s));
        }
    }
    let pos = positives.iter().filter(|&&p| p).count();
    let neg = positives.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::OneClassOnly);
    }
    Ok((pos, neg))
}

/// Empirical (TPR, FPR) at one threshold under the strict `score > gamma`
/// flagging rule.
pub fn rates_at(scores: &[f64], positives: &[bool], gamma: f64) -> (f64, f64) {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut pos = 0usize;
    let mut neg = 0usize;
    for (&s, &p) in scores.iter().zip(positives) {
        if p {
            pos += 1;
            if s > gamma {
                tp += 1;
            }
        } else {
            neg += 1;
            if s > gamma {
                fp += 1;
            }
        }
    }
    (tp as f64 / pos as f64, fp as f64 / neg as f64)
}

/// Builds the ROC curve for binary ground truth.
pub fn roc(scores: &[f64], positives: &[bool]) -> Result<RocCurve> {
    validate(scores, positives)?;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.push(0.0);
    thresholds.push(1.0);
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let points = thresholds
        .into_iter()
        .map(|gamma| {
            let (tpr, fpr) = rates_at(scores, positives, gamma);
            RocPoint { gamma, tpr, fpr }
        })
        .collect();
    Ok(RocCurve { points })
}

/// Area under the curve by trapezoidal integration over FPR.
pub fn auc(curve: &RocCurve) -> f64 {
    let mut area = 0.0;
    for pair in curve.points.windows(2) {
        // Ascending gamma means descending FPR; each strip is positive.
        area += (pair[0].fpr - pair[1].fpr) * (pair[0].tpr + pair[1].tpr) / 2.0;
    }
    // Strip roundoff can push a perfect sum a few ulps past 1.
    area.clamp(0.0, 1.0)
}

/// Pairwise concordance probability: P(score_pos > score_neg), ties at 1/2.
/// Agrees with [`auc`] to floating-point accuracy on tie-free data; used as
/// an independent cross-check.
pub fn concordance(scores: &[f64], positives: &[bool]) -> Result<f64> {
    let (pos, neg) = validate(scores, positives)?;
    let mut total = 0.0f64;
    for (&sp, &pp) in scores.iter().zip(positives) {
        if !pp {
            continue;
        }
        for (&sn, &pn) in scores.iter().zip(positives) {
            if pn {
                continue;
            }
            if sp > sn {
                total += 1.0;
            } else if sp == sn {
                total += 0.5;
            }
        }
    }
    Ok(total / (pos as f64 * neg as f64))
}

/// Threshold maximising Youden's J = TPR - FPR; ties break toward the
/// smallest threshold.
pub fn optimal_gamma(curve: &RocCurve) -> f64 {
    let mut best = curve.points[0];
    let mut best_j = best.tpr - best.fpr;
    for p in &curve.points[1..] {
        let j = p.tpr - p.fpr;
        if j > best_j {
            best = *p;
            best_j = j;
        }
    }
    best.gamma
}

/// Youden's J = TPR - FPR read off the step-interpolated curve: between
/// candidate thresholds the rates are those of the largest candidate not
/// exceeding `gamma`.
fn step_j(curve: &RocCurve, gamma: f64) -> f64 {
    let mut current = None;
    for p in &curve.points {
        if p.gamma <= gamma {
            current = Some(p);
        } else {
            break;
        }
    }
    match current {
        Some(p) => p.tpr - p.fpr,
        // Below every candidate (possible only for gamma < 0): everything
        // is flagged, so TPR = FPR = 1.
        None => 0.0,
    }
}

/// Central finite difference of J(gamma) = TPR - FPR on the
/// step-interpolated curve, with step `h` (0.01 is the conventional
/// choice): (J(gamma+h) - J(gamma-h)) / (2h). Both probe points must stay
/// inside [0, 1].
pub fn sensitivity(curve: &RocCurve, gamma: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) || gamma - h < 0.0 || gamma + h > 1.0 {
        return Err(MetricsError::GammaOutOfRange { gamma, h });
    }
    Ok((step_j(curve, gamma + h) - step_j(curve, gamma - h)) / (2.0 * h))
}

/// Binary view "anomalous": classes 1 and 2 (labels >= 1) against class 0.
pub fn anomalous_positives(labels: &[u8]) -> Vec<bool> {
    labels.iter().map(|&l| l >= 1).collect()
}

/// Binary view "malicious": class 2 against everything below.
pub fn malicious_positives(labels: &[u8]) -> Vec<bool> {
    labels.iter().map(|&l| l >= 2).collect()
}

/// Lower and upper score thresholds chosen on the two binary views, with the
/// ordering `gamma1 < gamma2` repaired if the curves cross.
pub fn three_class_thresholds(scores: &[f64], labels: &[u8]) -> Result<(f64, f64)> {
    let lower = roc(scores, &anomalous_positives(labels))?;
    let upper = roc(scores, &malicious_positives(labels))?;
    let mut gamma1 = optimal_gamma(&lower);
    let mut gamma2 = optimal_gamma(&upper);
    if gamma2 <= gamma1 {
        gamma2 = (gamma1 + 1e-9).min(1.0);
        if gamma2 <= gamma1 {
            gamma1 = gamma2 - 1e-9;
        }
    }
    Ok((gamma1, gamma2))
}

/// A 3x3 confusion matrix; `counts[t][p]` is true class `t` predicted `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[usize; 3]; 3],
    pub accuracy: f64,
}

/// Tallies predictions against ground truth (class indices 0..=2).
pub fn confusion(predicted: &[u8], truth: &[u8]) -> Result<Confusion> {
    if predicted.len() != truth.len() {
        return Err(MetricsError::LengthMismatch {
            scores: predicted.len(),
            labels: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut counts = [[0usize; 3]; 3];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p > 2 {
            return Err(MetricsError::BadClassIndex(p as usize));
        }
        if t > 2 {
            return Err(MetricsError::BadClassIndex(t as usize));
        }
        counts[t as usize][p as usize] += 1;
    }
    let correct: usize = (0..3).map(|i| counts[i][i]).sum();
    Ok(Confusion {
        counts,
        accuracy: correct as f64 / predicted.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_roc_example() {
        // scores [0.1, 0.4, 0.35, 0.8], positives marked on the last two.
        let scores = [0.1, 0.4, 0.35, 0.8];
        let positives = [false, false, true, true];
        let curve = roc(&scores, &positives).unwrap();
        // Thresholds 0, 0.1, 0.35, 0.4, 0.8, 1.
        assert_eq!(curve.points.len(), 6);
        let a = auc(&curve);
        assert!((a - 0.75).abs() < 1e-12, "AUC {a}");
        let c = concordance(&scores, &positives).unwrap();
        assert!((a - c).abs() < 1e-12);
    }

    #[test]
    fn perfect_separation_has_unit_auc_and_early_optimum() {
        let scores = [0.1, 0.2, 0.8, 0.9];
        let positives = [false, false, true, true];
        let curve = roc(&scores, &positives).unwrap();
        assert!((auc(&curve) - 1.0).abs() < 1e-12);
        // Any gamma in [0.2, 0.8) separates; the smallest candidate wins.
        assert_eq!(optimal_gamma(&curve), 0.2);
    }

    #[test]
    fn sentinel_endpoints_bound_the_curve() {
        let scores = [0.3, 0.6, 0.2, 0.7];
        let positives = [false, true, false, true];
        let curve = roc(&scores, &positives).unwrap();
        let first = curve.points.first().unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!(first.gamma, 0.0);
        assert_eq!((first.tpr, first.fpr), (1.0, 1.0));
        assert_eq!(last.gamma, 1.0);
        assert_eq!((last.tpr, last.fpr), (0.0, 0.0));
    }

    #[test]
    fn identical_mid_scores_collapse_to_half_auc() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let positives = [true, false, true, false];
        let curve = roc(&scores, &positives).unwrap();
        assert_eq!(curve.points.len(), 3);
        assert!((auc(&curve) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn curve_is_monotone_and_matches_concordance_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let n = rng.gen_range(10..200);
            // Multiples of 1/64 would introduce ties; use full-resolution
            // uniforms, which are tie-free with probability 1.
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let positives: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            if positives.iter().all(|&p| p) || positives.iter().all(|&p| !p) {
                continue;
            }
            let curve = roc(&scores, &positives).unwrap();
            for pair in curve.points.windows(2) {
                assert!(pair[1].tpr <= pair[0].tpr + 1e-15);
                assert!(pair[1].fpr <= pair[0].fpr + 1e-15);
            }
            let a = auc(&curve);
            let c = concordance(&scores, &positives).unwrap();
            assert!((a - c).abs() < 1e-12, "auc {a} vs concordance {c}");
        }
    }

    #[test]
    fn optimal_gamma_agrees_with_exhaustive_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..50 {
            let n = rng.gen_range(5..60);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let positives: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            if positives.iter().all(|&p| p) || positives.iter().all(|&p| !p) {
                continue;
            }
            let curve = roc(&scores, &positives).unwrap();
            let got = optimal_gamma(&curve);
            // Oracle: sweep every candidate threshold directly.
            let mut cands: Vec<f64> = scores.clone();
            cands.push(0.0);
            cands.push(1.0);
            cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cands.dedup();
            let mut best = f64::NEG_INFINITY;
            let mut best_gamma = 0.0;
            for g in cands {
                let (tpr, fpr) = rates_at(&scores, &positives, g);
                if tpr - fpr > best {
                    best = tpr - fpr;
                    best_gamma = g;
                }
            }
            assert_eq!(got, best_gamma);
        }
    }

    #[test]
    fn tied_optima_pick_smallest_gamma() {
        // J = 0.5 at both 0.1 and 0.4; the earlier threshold is reported.
        let scores = [0.1, 0.4, 0.35, 0.8];
        let positives = [false, false, true, true];
        let curve = roc(&scores, &positives).unwrap();
        assert_eq!(optimal_gamma(&curve), 0.1);
    }

    #[test]
    fn sensitivity_matches_counting_oracle() {
        let scores = [0.2, 0.4, 0.6, 0.8];
        let positives = [false, false, true, true];
        let curve = roc(&scores, &positives).unwrap();
        // Flat region: no score inside (0.45, 0.55).
        let flat = sensitivity(&curve, 0.5, 0.05).unwrap();
        assert_eq!(flat, 0.0);
        // The window (0.5, 0.7) spans exactly the positive score 0.6: TPR
        // drops by 1/2 across it, so the central difference reads
        // -(1/2) / (2 * 0.1) = -2.5.
        let step = sensitivity(&curve, 0.6, 0.1).unwrap();
        assert!((step - (-2.5)).abs() < 1e-12);
        // The step curve agrees with direct recounting at probe points.
        let (tpr, fpr) = rates_at(&scores, &positives, 0.7);
        assert_eq!(step_j(&curve, 0.7), tpr - fpr);
        assert!(matches!(
            sensitivity(&curve, 0.005, 0.01),
            Err(MetricsError::GammaOutOfRange { .. })
        ));
        assert!(matches!(
            sensitivity(&curve, 0.999, 0.01),
            Err(MetricsError::GammaOutOfRange { .. })
        ));
    }

    #[test]
    fn reversed_scorer_mirrors_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..20 {
            let n = rng.gen_range(20..100);
            let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let positives: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            if positives.iter().all(|&p| p) || positives.iter().all(|&p| !p) {
                continue;
            }
            let forward = auc(&roc(&scores, &positives).unwrap());
            let reversed: Vec<f64> = scores.iter().map(|s| 1.0 - s).collect();
            let backward = auc(&roc(&reversed, &positives).unwrap());
            assert!((forward + backward - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn random_labels_score_near_half_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(2000);
        let n = 2000;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let positives: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let a = auc(&roc(&scores, &positives).unwrap());
        assert!((a - 0.5).abs() < 0.05, "uninformative scorer AUC {a}");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        assert!(matches!(
            roc(&[0.5], &[true]),
            Err(MetricsError::OneClassOnly)
        ));
        assert!(matches!(
            roc(&[1.5, 0.2], &[true, false]),
            Err(MetricsError::ScoreOutOfRange(_))
        ));
        assert!(matches!(roc(&[], &[]), Err(MetricsError::Empty)));
        assert!(matches!(
            roc(&[0.1, 0.2], &[true]),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn confusion_counts_and_accuracy() {
        let truth = [0u8, 0, 1, 1, 2, 2];
        let pred = [0u8, 1, 1, 1, 2, 0];
        let c = confusion(&pred, &truth).unwrap();
        assert_eq!(c.counts[0], [1, 1, 0]);
        assert_eq!(c.counts[1], [0, 2, 0]);
        assert_eq!(c.counts[2], [1, 0, 1]);
        assert!((c.accuracy - 4.0 / 6.0).abs() < 1e-12);
        assert!(matches!(
            confusion(&[3], &[0]),
            Err(MetricsError::BadClassIndex(3))
        ));
    }

    #[test]
    fn three_class_thresholds_keep_order() {
        let scores = [0.05, 0.1, 0.15, 0.45, 0.5, 0.55, 0.9, 0.95];
        let labels = [0u8, 0, 0, 1, 1, 1, 2, 2];
        let (g1, g2) = three_class_thresholds(&scores, &labels).unwrap();
        assert!(g1 < g2);
        // Boundaries fall in the gaps between the class score bands.
        assert!((0.15..0.45).contains(&g1));
        assert!((0.55..0.9).contains(&g2));
    }
}
