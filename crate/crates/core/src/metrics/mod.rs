//! Scoring functions. Each one maps an annotated [`Dataset`] to a scalar
//! using only the per-transition Q annotations.

mod baselines;
mod dense;
mod opc;
mod soft_opc;

pub use baselines::{mcc_error, sum_advantages, td_error};
pub use dense::{extended_opc, layer_cake_sum, lifted_points, thresholded_opc};
pub use opc::{dataset_points, opc, opc_bruteforce, opc_points, opc_points_bruteforce, AnnotatedPoint};
pub use soft_opc::soft_opc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricName {
    TdErr,
    SumAdv,
    MccErr,
    Opc,
    SoftOpc,
    ExtOpc,
}

impl MetricName {
    /// The five metrics compared in correlation experiments, in report order.
    pub const EXPERIMENT: [MetricName; 5] = [
        MetricName::TdErr,
        MetricName::SumAdv,
        MetricName::MccErr,
        MetricName::Opc,
        MetricName::SoftOpc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::TdErr => "TDErr",
            MetricName::SumAdv => "SumAdv",
            MetricName::MccErr => "MCCErr",
            MetricName::Opc => "OPC",
            MetricName::SoftOpc => "SoftOPC",
            MetricName::ExtOpc => "ExtOPC",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            MetricName::Opc | MetricName::SoftOpc | MetricName::ExtOpc => Orientation::HigherBetter,
            MetricName::TdErr | MetricName::SumAdv | MetricName::MccErr => Orientation::LowerBetter,
        }
    }

    pub fn depends_on_prior(self) -> bool {
        matches!(self, MetricName::Opc | MetricName::SoftOpc | MetricName::ExtOpc)
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            MetricName::TdErr,
            MetricName::SumAdv,
            MetricName::MccErr,
            MetricName::Opc,
            MetricName::SoftOpc,
            MetricName::ExtOpc,
        ]
        .into_iter()
        .find(|m| m.as_str().eq_ignore_ascii_case(s))
        .ok_or_else(|| Error::domain(format!("unknown metric {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    HigherBetter,
    LowerBetter,
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::HigherBetter => "higher-better",
            Orientation::LowerBetter => "lower-better",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub metric: MetricName,
    pub value: f64,
    pub orientation: Orientation,
}

impl MetricScore {
    pub fn new(metric: MetricName, value: f64) -> Self {
        MetricScore {
            metric,
            value,
            orientation: metric.orientation(),
        }
    }
}

/// The positive class prior p(y=1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub p_positive: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig { p_positive: 1.0 }
    }
}

impl PriorConfig {
    pub fn new(p_positive: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_positive) {
            return Err(Error::domain(format!("prior {p_positive} outside [0, 1]")));
        }
        Ok(PriorConfig { p_positive })
    }
}

/// How transitions are weighted when averaging over a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Every transition counts once.
    #[default]
    PerTransition,
    /// Transitions of an episode of length T count 1/T, so episodes count equally.
    PerEpisode,
}

/// Which tail sums enter the sum-of-advantages score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageSupport {
    /// One tail sum per step of every episode.
    #[default]
    AllStarts,
    /// Only the tail sum from the first step of each episode.
    FirstStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricOptions {
    pub prior: f64,
    pub gamma: f64,
    pub opc_weighting: Weighting,
    pub soft_opc_weighting: Weighting,
    pub td_weighting: Weighting,
    pub mcc_weighting: Weighting,
    pub sum_adv_weighting: Weighting,
    pub sum_adv_support: AdvantageSupport,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions {
            prior: 1.0,
            gamma: 1.0,
            opc_weighting: Weighting::PerTransition,
            soft_opc_weighting: Weighting::PerEpisode,
            td_weighting: Weighting::PerTransition,
            mcc_weighting: Weighting::PerEpisode,
            sum_adv_weighting: Weighting::PerEpisode,
            sum_adv_support: AdvantageSupport::AllStarts,
        }
    }
}

impl MetricOptions {
    pub fn prior_config(&self) -> Result<PriorConfig> {
        PriorConfig::new(self.prior)
    }

    pub fn validate(&self) -> Result<()> {
        self.prior_config()?;
        check_gamma(self.gamma)
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::domain(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(())
}

pub(crate) fn check_nonempty(d: &Dataset) -> Result<()> {
    if d.episodes.is_empty() || d.transition_count() == 0 {
        return Err(Error::domain("empty dataset"));
    }
    Ok(())
}

/// Computes `metric` with the given options.
pub fn evaluate(metric: MetricName, d: &Dataset, opts: &MetricOptions) -> Result<MetricScore> {
    let prior = opts.prior_config()?;
    match metric {
        MetricName::Opc => opc::opc_weighted(d, prior, opts.opc_weighting),
        MetricName::SoftOpc => soft_opc::soft_opc_weighted(d, prior, opts.soft_opc_weighting),
        MetricName::TdErr => baselines::td_error_weighted(d, opts.gamma, opts.td_weighting),
        MetricName::SumAdv => {
            baselines::sum_advantages_with(d, opts.gamma, opts.sum_adv_weighting, opts.sum_adv_support)
        }
        MetricName::MccErr => baselines::mcc_error_weighted(d, opts.gamma, opts.mcc_weighting),
        MetricName::ExtOpc => dense::extended_opc_weighted(d, prior, opts.opc_weighting),
    }
}

/// Weighted mean over (weight, value) pairs; `None` when the weights sum to zero.
pub(crate) fn weighted_mean(items: impl Iterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut sw, mut swv) = (0.0, 0.0);
    for (w, v) in items {
        sw += w;
        swv += w * v;
    }
    (sw > 0.0).then(|| swv / sw)
}

pub(crate) fn episode_weight(weighting: Weighting, len: usize) -> f64 {
    match weighting {
        Weighting::PerTransition => 1.0,
        Weighting::PerEpisode => 1.0 / len as f64,
    }
}
