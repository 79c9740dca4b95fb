use super::{check_nonempty, weighted_mean, MetricName, MetricScore, PriorConfig, Weighting};
use crate::error::{Error, Result};
use crate::types::Dataset;

pub(crate) fn soft_opc_weighted(d: &Dataset, prior: PriorConfig, weighting: Weighting) -> Result<MetricScore> {
    check_nonempty(d)?;
    // (weight, mean Q, success) per episode; under per-transition weighting
    // an episode's weight is its length, which recovers the plain transition mean.
    let mut per_episode = Vec::with_capacity(d.episodes.len());
    for ep in &d.episodes {
        let mut sum = 0.0;
        for tr in &ep.transitions {
            sum += tr.annotation(&ep.id)?.q_sa;
        }
        let w = match weighting {
            Weighting::PerEpisode => 1.0,
            Weighting::PerTransition => ep.len() as f64,
        };
        per_episode.push((w, sum / ep.len() as f64, ep.is_success()));
    }
    let all = weighted_mean(per_episode.iter().map(|&(w, m, _)| (w, m))).expect("non-empty dataset");
    let Some(pos) = weighted_mean(per_episode.iter().filter(|e| e.2).map(|&(w, m, _)| (w, m))) else {
        return Err(Error::Degenerate {
            metric: MetricName::SoftOpc,
            value: 0.0,
            reason: "no successful episodes".into(),
        });
    };
    Ok(MetricScore::new(MetricName::SoftOpc, prior.p_positive * pos - all))
}

/// p(y=1) * (mean Q over successful episodes) - (mean Q over all episodes),
/// where each episode contributes the mean of its own Q values.
pub fn soft_opc(d: &Dataset, prior: PriorConfig) -> Result<MetricScore> {
    soft_opc_weighted(d, prior, Weighting::PerEpisode)
}
