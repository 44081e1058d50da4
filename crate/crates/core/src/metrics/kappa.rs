use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaScore {
    pub kappa: f64,
    pub observed_agreement: f64,
    pub expected_agreement: f64,
}

/// Cohen's kappa between two annotators' categorical decisions.
///
/// Expected agreement comes from the product of the two marginals and is
/// accumulated in integer counts, so `cohen_kappa(a, b) == cohen_kappa(b, a)`
/// holds bit for bit.
pub fn cohen_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<KappaScore, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut marginals: HashMap<&T, (u64, u64)> = HashMap::new();
    let mut agree = 0u64;
    for (x, y) in a.iter().zip(b) {
        marginals.entry(x).or_default().0 += 1;
        marginals.entry(y).or_default().1 += 1;
        agree += u64::from(x == y);
    }
    let n = a.len() as u128;
    let chance: u128 = marginals.values().map(|&(ca, cb)| ca as u128 * cb as u128).sum();
    let po = agree as f64 / n as f64;
    let pe = chance as f64 / (n * n) as f64;
    let kappa = if chance == n * n {
        if agree as u128 == n {
            1.0
        } else {
            0.0
        }
    } else {
        (po - pe) / (1.0 - pe)
    };
    Ok(KappaScore { kappa, observed_agreement: po, expected_agreement: pe })
}
