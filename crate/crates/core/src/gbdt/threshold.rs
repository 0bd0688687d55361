//! Decision-threshold selection by validation F1.

pub const FALLBACK_THRESHOLD: f64 = 0.5;

pub fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if tp == 0 || denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// F1 when predicting positive for `score >= threshold`.
pub fn f1_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    f1_from_counts(tp, fp, fn_)
}

/// Scans midpoints between consecutive distinct scores for the best F1.
///
/// Ties go to the higher threshold. Returns `(0.5, F1 at 0.5)` when the scores
/// are all equal or the labels hold a single class.
pub fn best_threshold(scores: &[f64], labels: &[bool]) -> (f64, f64) {
    let pos_total = labels.iter().filter(|&&l| l).count();
    let fallback = || (FALLBACK_THRESHOLD, f1_at(scores, labels, FALLBACK_THRESHOLD));
    if pos_total == 0 || pos_total == labels.len() {
        return fallback();
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    // Walk from the highest score down; after consuming each group of equal
    // scores, everything at or above the next midpoint is predicted positive.
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if i == order.len() {
            break;
        }
        let below = scores[order[i]];
        let threshold = below / 2.0 + s / 2.0;
        let f1 = f1_from_counts(tp, fp, pos_total - tp);
        // Thresholds decrease along the walk, so only a strict improvement replaces.
        if best.map_or(true, |(_, b)| f1 > b) {
            best = Some((threshold, f1));
        }
    }
    best.unwrap_or_else(fallback)
}
