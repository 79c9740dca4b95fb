//! Baseline scores: temporal-difference error, discounted sum of
//! advantages, and squared error to the advantage-corrected Monte-Carlo
//! target. Advantages are A_t = Q(s_t, a_t) - max_a Q(s_t, a).

use super::{check_gamma, check_nonempty, episode_weight, weighted_mean, AdvantageSupport, MetricName, MetricScore, Weighting};
use crate::error::Result;
use crate::types::{Dataset, Episode, QAnnotation};

fn annotations(ep: &Episode) -> Result<Vec<QAnnotation>> {
    ep.transitions
        .iter()
        .map(|tr| tr.annotation(&ep.id).copied())
        .collect()
}

fn aggregate(
    d: &Dataset,
    weighting: Weighting,
    mut per_step: impl FnMut(&Episode, &[QAnnotation]) -> Vec<f64>,
) -> Result<f64> {
    let mut items = Vec::with_capacity(d.transition_count());
    for ep in &d.episodes {
        let ann = annotations(ep)?;
        let w = episode_weight(weighting, ep.len());
        items.extend(per_step(ep, &ann).into_iter().map(|v| (w, v)));
    }
    Ok(weighted_mean(items.into_iter()).expect("non-empty dataset"))
}

pub(crate) fn td_error_weighted(d: &Dataset, gamma: f64, weighting: Weighting) -> Result<MetricScore> {
    check_nonempty(d)?;
    check_gamma(gamma)?;
    let v = aggregate(d, weighting, |ep, ann| {
        ep.transitions
            .iter()
            .zip(ann)
            .map(|(tr, q)| {
                let target = tr.reward + gamma * q.q_greedy_next.unwrap_or(0.0);
                (q.q_sa - target).powi(2)
            })
            .collect()
    })?;
    Ok(MetricScore::new(MetricName::TdErr, v))
}

/// Mean squared one-step TD error; terminal steps bootstrap from zero.
pub fn td_error(d: &Dataset, gamma: f64) -> Result<MetricScore> {
    td_error_weighted(d, gamma, Weighting::PerTransition)
}

/// Discounted tail sums of advantages, one per step.
fn advantage_tails(ann: &[QAnnotation], gamma: f64) -> Vec<f64> {
    let mut tails = vec![0.0; ann.len()];
    let mut acc = 0.0;
    for (i, q) in ann.iter().enumerate().rev() {
        acc = (q.q_sa - q.q_greedy_s) + gamma * acc;
        tails[i] = acc;
    }
    tails
}

pub(crate) fn sum_advantages_with(
    d: &Dataset,
    gamma: f64,
    weighting: Weighting,
    support: AdvantageSupport,
) -> Result<MetricScore> {
    check_nonempty(d)?;
    check_gamma(gamma)?;
    let v = match support {
        AdvantageSupport::AllStarts => aggregate(d, weighting, |_, ann| advantage_tails(ann, gamma))?,
        AdvantageSupport::FirstStep => {
            let mut items = Vec::with_capacity(d.episodes.len());
            for ep in &d.episodes {
                items.push((1.0, advantage_tails(&annotations(ep)?, gamma)[0]));
            }
            weighted_mean(items.into_iter()).expect("non-empty dataset")
        }
    };
    Ok(MetricScore::new(MetricName::SumAdv, v))
}

/// Mean over every (episode, start step) of the discounted advantage tail
/// sum, each episode weighted equally. Lower is better.
pub fn sum_advantages(d: &Dataset, gamma: f64) -> Result<MetricScore> {
    sum_advantages_with(d, gamma, Weighting::PerEpisode, AdvantageSupport::AllStarts)
}

pub(crate) fn mcc_error_weighted(d: &Dataset, gamma: f64, weighting: Weighting) -> Result<MetricScore> {
    check_nonempty(d)?;
    check_gamma(gamma)?;
    let v = aggregate(d, weighting, |ep, ann| {
        let n = ann.len();
        // corrected[t] = sum_{t' >= t} gamma^(t'-t) (r_t' - A_t')
        let mut corrected = vec![0.0; n + 1];
        for i in (0..n).rev() {
            let adv = ann[i].q_sa - ann[i].q_greedy_s;
            corrected[i] = ep.transitions[i].reward - adv + gamma * corrected[i + 1];
        }
        (0..n)
            .map(|i| {
                let target = ep.transitions[i].reward + gamma * corrected[i + 1];
                (ann[i].q_sa - target).powi(2)
            })
            .collect()
    })?;
    Ok(MetricScore::new(MetricName::MccErr, v))
}

/// Squared error to r_t + sum_{t' > t} gamma^(t'-t) (r_t' - A_t').
pub fn mcc_error(d: &Dataset, gamma: f64) -> Result<MetricScore> {
    mcc_error_weighted(d, gamma, Weighting::PerEpisode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ActionId, StateId, Transition};

    /// (reward, q_sa, q_greedy_s, q_greedy_next)
    fn ep(id: &str, steps: &[(f64, f64, f64, Option<f64>)]) -> Episode {
        let transitions = steps
            .iter()
            .enumerate()
            .map(|(i, &(r, q_sa, q_greedy_s, q_greedy_next))| Transition {
                t: i + 1,
                state: StateId(i),
                action: ActionId(0),
                reward: r,
                q: Some(QAnnotation {
                    q_sa,
                    q_greedy_s,
                    q_greedy_next,
                }),
            })
            .collect();
        Episode::new(id, transitions).unwrap()
    }

    fn ds(eps: Vec<Episode>) -> Dataset {
        Dataset::new(eps, "test", "test", 0).unwrap()
    }

    #[test]
    fn td_terminal_example() {
        let d = ds(vec![ep("a", &[(1.0, 0.7, 0.7, None)])]);
        assert!((td_error(&d, 1.0).unwrap().value - 0.09).abs() < 1e-15);
    }

    #[test]
    fn td_zero_when_bellman_consistent() {
        let d = ds(vec![ep("a", &[(0.0, 0.5, 0.6, Some(0.5)), (1.0, 1.0, 1.0, None)])]);
        assert_eq!(td_error(&d, 1.0).unwrap().value, 0.0);
        let d = ds(vec![ep("a", &[(0.2, 0.6, 0.6, Some(0.8)), (0.0, 0.0, 0.0, None)])]);
        assert!(td_error(&d, 0.5).unwrap().value.abs() < 1e-15);
    }

    #[test]
    fn sum_adv_examples() {
        let greedy = ds(vec![ep("a", &[(0.0, 0.4, 0.4, Some(0.3)), (1.0, 0.3, 0.3, None)])]);
        assert_eq!(sum_advantages(&greedy, 1.0).unwrap().value, 0.0);

        let d = ds(vec![ep("a", &[(0.0, 0.5, 1.0, Some(0.5)), (0.0, 0.25, 0.5, None)])]);
        assert!((sum_advantages(&d, 1.0).unwrap().value + 0.5).abs() < 1e-15);
        // gamma = 0: mean of per-step advantages.
        assert!((sum_advantages(&d, 0.0).unwrap().value + 0.375).abs() < 1e-15);
        let first = sum_advantages_with(&d, 1.0, Weighting::PerEpisode, AdvantageSupport::FirstStep).unwrap();
        assert!((first.value + 0.75).abs() < 1e-15);
    }

    #[test]
    fn sum_adv_episode_weighting() {
        let d = ds(vec![
            ep("a", &[(0.0, 0.5, 1.0, Some(0.5)), (0.0, 0.25, 0.5, None)]),
            ep("b", &[(1.0, 0.0, 1.0, None)]),
        ]);
        // Episode means -0.5 and -1.0.
        assert!((sum_advantages(&d, 1.0).unwrap().value + 0.75).abs() < 1e-15);
        let flat = sum_advantages_with(&d, 1.0, Weighting::PerTransition, AdvantageSupport::AllStarts).unwrap();
        assert!((flat.value + 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mcc_examples() {
        let d = ds(vec![ep("a", &[(1.0, 1.0, 1.0, None)])]);
        assert_eq!(mcc_error(&d, 1.0).unwrap().value, 0.0);

        // Zero advantages, binary length-2 episode: both targets equal r_T.
        let d = ds(vec![ep("a", &[(0.0, 0.3, 0.3, Some(0.6)), (1.0, 0.6, 0.6, None)])]);
        let expected = ((0.3f64 - 1.0).powi(2) + (0.6f64 - 1.0).powi(2)) / 2.0;
        assert!((mcc_error(&d, 1.0).unwrap().value - expected).abs() < 1e-15);
    }

    #[test]
    fn errors_on_bad_input() {
        let d = ds(vec![ep("a", &[(1.0, 1.0, 1.0, None)])]);
        assert!(td_error(&d, 1.5).is_err());
        let mut unannotated = d.clone();
        unannotated.episodes[0].transitions[0].q = None;
        assert!(mcc_error(&unannotated, 1.0).is_err());
    }
}
