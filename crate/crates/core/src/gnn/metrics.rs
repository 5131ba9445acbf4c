//! Classification metrics over a node subset.

/// Support-weighted mean of per-class F1 over the classes present in `nodes`.
pub fn weighted_f1(pred: &[usize], labels: &[usize], nodes: &[usize], num_classes: usize) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let mut tp = vec![0usize; num_classes];
    let mut fp = vec![0usize; num_classes];
    let mut support = vec![0usize; num_classes];
    for &u in nodes {
        support[labels[u]] += 1;
        if pred[u] == labels[u] {
            tp[pred[u]] += 1;
        } else {
            fp[pred[u]] += 1;
        }
    }
    let total = nodes.len() as f64;
    (0..num_classes)
        .filter(|&c| support[c] > 0)
        .map(|c| {
            let fnc = support[c] - tp[c];
            let denom = 2 * tp[c] + fp[c] + fnc;
            let f1 = if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            };
            f1 * support[c] as f64 / total
        })
        .sum()
}

/// Micro-averaged F1; for single-label classification this is accuracy.
pub fn micro_f1(pred: &[usize], labels: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    nodes.iter().filter(|&&u| pred[u] == labels[u]).count() as f64 / nodes.len() as f64
}
