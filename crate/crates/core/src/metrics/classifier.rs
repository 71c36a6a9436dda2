use std::collections::BTreeMap;

use super::{MetricsError, Result};
use crate::embed::PosteriorSet;

/// Added to every class probability before renormalizing, for paired KL.
pub const KL_EPSILON: f64 = 1e-10;

/// `Σ p ln(p / q)` with `0 · ln(0 / q) = 0`.
fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi.ln() - qi.ln()))
        .sum()
}

fn smooth(p: &[f64]) -> Vec<f64> {
    let z = 1.0 + KL_EPSILON * p.len() as f64;
    p.iter().map(|v| (v + KL_EPSILON) / z).collect()
}

/// `exp(mean_i KL(p_i ‖ p̄))` where `p̄` is the mean posterior.
pub fn inception_score(posteriors: &PosteriorSet) -> Result<f64> {
    if posteriors.is_empty() {
        return Err(MetricsError::EmptySet("posteriors"));
    }
    let k = posteriors.k();
    // compensated column sums
    let mut sums = vec![(0.0f64, 0.0f64); k];
    for p in posteriors.iter() {
        if p.k() != k {
            return Err(MetricsError::InconsistentK(k, p.k()));
        }
        for ((s, c), &v) in sums.iter_mut().zip(&p.probs) {
            let t = *s + v;
            *c += if s.abs() >= v.abs() { (*s - t) + v } else { (v - t) + *s };
            *s = t;
        }
    }
    let n = posteriors.len() as f64;
    let marginal: Vec<f64> = sums.iter().map(|(s, c)| (s + c) / n).collect();
    let mean_kl = posteriors.iter().map(|p| kl(&p.probs, &marginal)).sum::<f64>() / n;
    Ok(mean_kl.max(0.0).exp())
}

/// Mean over pairs of `KL(p_gt ‖ p_gen)` after ε-smoothing both sides.
///
/// `pairing` maps generated ids to ground-truth ids; without it, ids pair
/// with themselves.
pub fn paired_kl(
    generated: &PosteriorSet,
    ground_truth: &PosteriorSet,
    pairing: Option<&BTreeMap<String, String>>,
) -> Result<f64> {
    if generated.is_empty() {
        return Err(MetricsError::EmptySet("generated posteriors"));
    }
    if generated.k() != ground_truth.k() {
        return Err(MetricsError::InconsistentK(generated.k(), ground_truth.k()));
    }
    let mut sum = 0.0;
    for g in generated.iter() {
        let partner = match pairing {
            Some(map) => map.get(&g.id).map(String::as_str),
            None => Some(g.id.as_str()),
        };
        let gt = partner
            .and_then(|id| ground_truth.get(id))
            .ok_or_else(|| MetricsError::MissingPartner(g.id.clone()))?;
        sum += kl(&smooth(&gt.probs), &smooth(&g.probs)).max(0.0);
    }
    Ok(sum / generated.len() as f64)
}
