//! Off-policy classification score.
//!
//! Each transition is a point on the number line at its Q value. With
//! threshold `b`, the score is
//! `p * (positive weight above b) / W+ - (all weight above b) / W`,
//! maximised over `b`. Annotating every point with
//! `p * w_pos / W+ - w_all / W` turns this into the largest sum over a
//! suffix `(b, inf)` of the sorted points, which one sort and one scan find.

use super::{check_nonempty, episode_weight, MetricName, MetricScore, PriorConfig, Weighting};
use crate::error::{Error, Result};
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotatedPoint {
    pub q: f64,
    pub weight_all: f64,
    /// Non-zero only for positive-labelled transitions.
    pub weight_pos: f64,
}

impl AnnotatedPoint {
    pub fn unweighted(q: f64, positive: bool) -> Self {
        AnnotatedPoint {
            q,
            weight_all: 1.0,
            weight_pos: if positive { 1.0 } else { 0.0 },
        }
    }
}

struct Totals {
    all: f64,
    pos: f64,
}

fn totals(points: &[AnnotatedPoint], metric: MetricName, prior: PriorConfig) -> Result<Totals> {
    if points.is_empty() {
        return Err(Error::domain("empty dataset"));
    }
    for p in points {
        if !p.q.is_finite() || !p.weight_all.is_finite() || p.weight_all <= 0.0 || p.weight_pos < 0.0 || p.weight_pos > p.weight_all {
            return Err(Error::domain(format!("invalid annotated point {p:?}")));
        }
    }
    let all: f64 = points.iter().map(|p| p.weight_all).sum();
    let pos: f64 = points.iter().map(|p| p.weight_pos).sum();
    if pos == 0.0 {
        return Err(Error::Degenerate {
            metric,
            value: 0.0,
            reason: "no positive transitions".into(),
        });
    }
    if prior.p_positive * all < pos {
        // Every annotation is negative, so the empty suffix (b = +inf) wins
        // for every Q-function.
        return Err(Error::Degenerate {
            metric,
            value: 0.0,
            reason: format!(
                "prior {} is below the positive fraction {:.6}",
                prior.p_positive,
                pos / all
            ),
        });
    }
    Ok(Totals { all, pos })
}

/// Maximum suffix sum over Q-sorted annotated points. Equal Q values enter
/// the suffix together.
pub fn opc_points(points: &[AnnotatedPoint], prior: PriorConfig, metric: MetricName) -> Result<f64> {
    let tot = totals(points, metric, prior)?;
    let p = prior.p_positive;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[j].q.total_cmp(&points[i].q));

    let mut best = 0.0_f64;
    let mut running = 0.0;
    let mut i = 0;
    while i < order.len() {
        let q = points[order[i]].q;
        while i < order.len() && points[order[i]].q == q {
            let pt = &points[order[i]];
            running += p * pt.weight_pos / tot.pos - pt.weight_all / tot.all;
            i += 1;
        }
        best = best.max(running);
    }
    Ok(best)
}

/// Direct evaluation of the objective at every candidate threshold, with a
/// full recount each time. Quadratic; used as an oracle.
pub fn opc_points_bruteforce(points: &[AnnotatedPoint], prior: PriorConfig, metric: MetricName) -> Result<f64> {
    let tot = totals(points, metric, prior)?;
    let mut thresholds = vec![f64::NEG_INFINITY, f64::INFINITY];
    thresholds.extend(points.iter().map(|p| p.q));
    let mut best = f64::NEG_INFINITY;
    for &b in &thresholds {
        let (mut above_pos, mut above_all) = (0.0, 0.0);
        for pt in points {
            if pt.q > b {
                above_pos += pt.weight_pos;
                above_all += pt.weight_all;
            }
        }
        let score = prior.p_positive * above_pos / tot.pos - above_all / tot.all;
        best = best.max(score);
    }
    Ok(best)
}

/// Number-line points for a dataset, labelled positive by episode success.
pub fn dataset_points(d: &Dataset, weighting: Weighting) -> Result<Vec<AnnotatedPoint>> {
    check_nonempty(d)?;
    let mut points = Vec::with_capacity(d.transition_count());
    for ep in &d.episodes {
        let w = episode_weight(weighting, ep.len());
        let positive = ep.is_success();
        for tr in &ep.transitions {
            points.push(AnnotatedPoint {
                q: tr.annotation(&ep.id)?.q_sa,
                weight_all: w,
                weight_pos: if positive { w } else { 0.0 },
            });
        }
    }
    Ok(points)
}

pub(crate) fn opc_weighted(d: &Dataset, prior: PriorConfig, weighting: Weighting) -> Result<MetricScore> {
    let points = dataset_points(d, weighting)?;
    opc_points(&points, prior, MetricName::Opc).map(|v| MetricScore::new(MetricName::Opc, v))
}

/// OPC with unweighted transitions.
pub fn opc(d: &Dataset, prior: PriorConfig) -> Result<MetricScore> {
    opc_weighted(d, prior, Weighting::PerTransition)
}

/// Quadratic-time reference for [`opc`].
pub fn opc_bruteforce(d: &Dataset, prior: PriorConfig) -> Result<MetricScore> {
    let points = dataset_points(d, Weighting::PerTransition)?;
    opc_points_bruteforce(&points, prior, MetricName::Opc).map(|v| MetricScore::new(MetricName::Opc, v))
}
