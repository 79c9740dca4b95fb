//! Tabular environments and exact oracles.
//!
//! Every environment implements [`TabularMdp`], a finite-horizon description
//! with explicit outcome distributions. Exact policy returns come from
//! backward induction over that description; sampling goes through
//! [`rollout`], which only ever draws from the same distributions.

mod augment;
mod chain;
mod tree;

pub use augment::{AugState, AugmentedEnv};
pub use chain::DenseChainEnv;
pub use tree::{FeasibilityMap, FirstMistake, TreeEnv, LEFT, RIGHT};

use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{ActionId, Episode, Policy, StateId, Transition};

/// One possible result of taking an action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: StateId,
    pub prob: f64,
    pub reward: f64,
}

pub trait TabularMdp {
    fn state_count(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Maximum number of steps in an episode.
    fn horizon(&self) -> usize;
    fn initial_distribution(&self) -> Vec<(StateId, f64)>;
    fn is_terminal(&self, s: StateId) -> bool;
    /// Outcomes with positive probability; probabilities sum to one.
    fn outcomes(&self, s: StateId, a: ActionId) -> Result<Vec<Outcome>>;
}

/// Expected undiscounted return of a stationary stochastic policy, starting
/// from `init`, by finite-horizon backward induction.
pub fn exact_return_from<M, P>(mdp: &M, init: &[(StateId, f64)], policy: P) -> Result<f64>
where
    M: TabularMdp + ?Sized,
    P: Fn(StateId) -> Result<Vec<f64>>,
{
    let n = mdp.state_count();
    let probs: Vec<Option<Vec<f64>>> = (0..n)
        .map(|s| {
            let s = StateId(s);
            if mdp.is_terminal(s) {
                Ok(None)
            } else {
                policy(s).map(Some)
            }
        })
        .collect::<Result<_>>()?;
    let mut outcomes: Vec<Vec<Vec<Outcome>>> = Vec::with_capacity(n);
    for s in 0..n {
        let row = match &probs[s] {
            None => Vec::new(),
            Some(p) => (0..p.len())
                .map(|a| {
                    if p[a] > 0.0 {
                        mdp.outcomes(StateId(s), ActionId(a))
                    } else {
                        Ok(Vec::new())
                    }
                })
                .collect::<Result<_>>()?,
        };
        outcomes.push(row);
    }

    // values[s] holds the value with k steps remaining.
    let mut values = vec![0.0; n];
    for _ in 0..mdp.horizon() {
        let mut next = vec![0.0; n];
        for s in 0..n {
            let Some(p) = &probs[s] else { continue };
            let mut v = 0.0;
            for (a, &pa) in p.iter().enumerate() {
                if pa == 0.0 {
                    continue;
                }
                let q: f64 = outcomes[s][a]
                    .iter()
                    .map(|o| o.prob * (o.reward + values[o.next.0]))
                    .sum();
                v += pa * q;
            }
            next[s] = v;
        }
        values = next;
    }
    Ok(init.iter().map(|&(s, p)| p * values[s.0]).sum())
}

/// Expected return of `policy` under the environment's own start distribution.
pub fn exact_return<M: TabularMdp + ?Sized>(mdp: &M, policy: &Policy<'_>) -> Result<f64> {
    exact_return_from(mdp, &mdp.initial_distribution(), |s| policy.action_probs(s))
}

fn sample_index<R: Rng + ?Sized>(weights: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Samples one episode. Q annotations are left empty.
pub fn rollout<M, R>(mdp: &M, policy: &Policy<'_>, id: impl Into<String>, rng: &mut R) -> Result<Episode>
where
    M: TabularMdp + ?Sized,
    R: Rng + ?Sized,
{
    let init = mdp.initial_distribution();
    if init.is_empty() {
        return Err(Error::domain("environment has no start states"));
    }
    let mut s = init[sample_index(init.iter().map(|x| x.1), rng)].0;
    let mut transitions = Vec::new();
    for t in 1..=mdp.horizon() {
        if mdp.is_terminal(s) {
            break;
        }
        let a = crate::types::sample_action(policy, s, rng)?;
        let outcomes = mdp.outcomes(s, a)?;
        let o = outcomes[sample_index(outcomes.iter().map(|o| o.prob), rng)];
        transitions.push(Transition {
            t,
            state: s,
            action: a,
            reward: o.reward,
            q: None,
        });
        s = o.next;
    }
    Episode::new(id, transitions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_index_respects_cumulative_weights() {
        struct Fixed(f64);
        impl rand::RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                (self.next_u64() >> 32) as u32
            }
            fn next_u64(&mut self) -> u64 {
                // StandardUniform for f64 uses the top 53 bits.
                ((self.0 * (1u64 << 53) as f64) as u64) << 11
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {
                unimplemented!()
            }
        }
        let w = [0.25, 0.5, 0.25];
        assert_eq!(sample_index(w.iter().copied(), &mut Fixed(0.1)), 0);
        assert_eq!(sample_index(w.iter().copied(), &mut Fixed(0.3)), 1);
        assert_eq!(sample_index(w.iter().copied(), &mut Fixed(0.8)), 2);
    }
}
