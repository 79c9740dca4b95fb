//! OPC for dense-reward episodes.
//!
//! Q values are lifted with the reward accumulated before each step,
//! Q'(s, r, a) = r + Q(s, a), and episodes are relabelled as successful when
//! their return reaches a threshold. Summing thresholded scores over the
//! distinct returns gives a ranking score for non-binary tasks.

use super::opc::{opc_points, AnnotatedPoint};
use super::{check_nonempty, episode_weight, MetricName, MetricScore, PriorConfig, Weighting};
use crate::env::AugmentedEnv;
use crate::error::{Error, Result};
use crate::types::Dataset;

/// Lifted number-line points, positive when the episode return is at least `threshold`.
pub fn lifted_points(d: &Dataset, threshold: f64, weighting: Weighting) -> Result<Vec<AnnotatedPoint>> {
    check_nonempty(d)?;
    let mut points = Vec::with_capacity(d.transition_count());
    for ep in &d.episodes {
        let w = episode_weight(weighting, ep.len());
        let positive = ep.total_return() >= threshold;
        let mut accumulated = 0.0;
        for tr in &ep.transitions {
            points.push(AnnotatedPoint {
                q: AugmentedEnv::lift_value(accumulated, tr.annotation(&ep.id)?.q_sa),
                weight_all: w,
                weight_pos: if positive { w } else { 0.0 },
            });
            accumulated += tr.reward;
        }
    }
    Ok(points)
}

fn thresholded_opc_weighted(d: &Dataset, threshold: f64, prior: PriorConfig, weighting: Weighting) -> Result<MetricScore> {
    let points = lifted_points(d, threshold, weighting)?;
    opc_points(&points, prior, MetricName::Opc).map(|v| MetricScore::new(MetricName::Opc, v))
}

/// OPC on the lifted dataset where success means return >= `threshold`.
pub fn thresholded_opc(d: &Dataset, threshold: f64, prior: PriorConfig) -> Result<MetricScore> {
    thresholded_opc_weighted(d, threshold, prior, Weighting::PerTransition)
}

/// `levels[0] + sum_i (levels[i] - levels[i-1]) * tails[i]` over sorted
/// distinct levels. With `tails[i] = P(X >= levels[i])` this is E[X].
pub fn layer_cake_sum(levels: &[f64], tails: &[f64]) -> Result<f64> {
    if levels.is_empty() || levels.len() != tails.len() {
        return Err(Error::domain("levels and tails must be non-empty and of equal length"));
    }
    if levels.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less)) {
        return Err(Error::domain("levels must be strictly increasing"));
    }
    let mut total = levels[0];
    for i in 1..levels.len() {
        total += (levels[i] - levels[i - 1]) * tails[i];
    }
    Ok(total)
}

pub(crate) fn extended_opc_weighted(d: &Dataset, prior: PriorConfig, weighting: Weighting) -> Result<MetricScore> {
    check_nonempty(d)?;
    let mut levels: Vec<f64> = d.episodes.iter().map(|ep| ep.total_return()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let mut tails = vec![1.0; levels.len()];
    let mut degenerate = None;
    for i in 1..levels.len() {
        tails[i] = match thresholded_opc_weighted(d, levels[i], prior, weighting) {
            Ok(s) => s.value,
            Err(e @ Error::Degenerate { .. }) => {
                let v = e.degenerate_value().unwrap_or(0.0);
                degenerate.get_or_insert(e);
                v
            }
            Err(e) => return Err(e),
        };
    }
    let total = layer_cake_sum(&levels, &tails)?;
    match degenerate {
        Some(Error::Degenerate { reason, .. }) => Err(Error::Degenerate {
            metric: MetricName::ExtOpc,
            value: total,
            reason,
        }),
        _ => Ok(MetricScore::new(MetricName::ExtOpc, total)),
    }
}

/// Ranking score for dense rewards: the smallest observed return plus the
/// thresholded OPC at each higher return level, weighted by the gap to the
/// level below. Not a calibrated return estimate.
pub fn extended_opc(d: &Dataset, prior: PriorConfig) -> Result<MetricScore> {
    extended_opc_weighted(d, prior, Weighting::PerTransition)
}
