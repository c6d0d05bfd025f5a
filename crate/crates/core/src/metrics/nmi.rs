//! Normalized mutual information between two labelings.

use std::collections::HashMap;

use crate::error::{Error, Result};

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information divided by the arithmetic mean of the two entropies.
/// Two constant labelings agree perfectly (1); a constant labeling against
/// a non-constant one carries no information (0).
pub fn nmi(true_labels: &[u32], predicted: &[u32]) -> Result<f64> {
    if true_labels.len() != predicted.len() {
        return Err(Error::dims(format!(
            "{} true labels vs {} predictions",
            true_labels.len(),
            predicted.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::invalid("nmi of empty labelings"));
    }
    let n = true_labels.len() as f64;
    let mut joint: HashMap<(u32, u32), usize> = HashMap::new();
    let mut rows: HashMap<u32, usize> = HashMap::new();
    let mut cols: HashMap<u32, usize> = HashMap::new();
    for (&t, &p) in true_labels.iter().zip(predicted) {
        *joint.entry((t, p)).or_default() += 1;
        *rows.entry(t).or_default() += 1;
        *cols.entry(p).or_default() += 1;
    }
    let h_true = entropy(sorted_counts(&rows), n);
    let h_pred = entropy(sorted_counts(&cols), n);
    if h_true == 0.0 && h_pred == 0.0 {
        return Ok(1.0);
    }
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_unstable();
    let mut mi = 0.0;
    for ((t, p), c) in cells {
        let pij = c as f64 / n;
        let pi = rows[&t] as f64 / n;
        let pj = cols[&p] as f64 / n;
        mi += pij * (pij / (pi * pj)).ln();
    }
    Ok((mi / (0.5 * (h_true + h_pred))).clamp(0.0, 1.0))
}

// Summation order must not depend on hash iteration order.
fn sorted_counts(m: &HashMap<u32, usize>) -> impl Iterator<Item = usize> {
    let mut v: Vec<_> = m.iter().map(|(&k, &c)| (k, c)).collect();
    v.sort_unstable();
    v.into_iter().map(|(_, c)| c)
}
