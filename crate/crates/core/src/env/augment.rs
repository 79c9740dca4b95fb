//! Sparse-reward rewrite of a dense-reward MDP.
//!
//! Augmented states carry the reward accumulated so far. All intermediate
//! rewards become zero and the accumulated total is paid on the transition
//! into a terminal augmented state, so every policy keeps its expected return.

use std::collections::{HashMap, VecDeque};

use super::{Outcome, TabularMdp};
use crate::error::{Error, Result};
use crate::types::{ActionId, Policy, QTable, StateId};

/// Upper bound on the number of augmented states before construction gives up.
pub const MAX_AUGMENTED_STATES: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugState {
    pub base: StateId,
    /// Reward accumulated before reaching this state.
    pub accumulated: f64,
    /// Steps taken so far; needed to cut episodes at the base horizon.
    pub step: usize,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct AugmentedEnv {
    states: Vec<AugState>,
    outcomes: Vec<Vec<Vec<Outcome>>>,
    initial: Vec<(StateId, f64)>,
    action_count: usize,
    horizon: usize,
}

type Key = (usize, u64, usize);

impl AugmentedEnv {
    /// Enumerates every reachable (state, accumulated reward, step) triple.
    pub fn new<M: TabularMdp + ?Sized>(base: &M) -> Result<Self> {
        Self::with_limit(base, MAX_AUGMENTED_STATES)
    }

    pub fn with_limit<M: TabularMdp + ?Sized>(base: &M, limit: usize) -> Result<Self> {
        let horizon = base.horizon();
        let action_count = base.action_count();
        let mut states: Vec<AugState> = Vec::new();
        let mut index: HashMap<Key, usize> = HashMap::new();
        let mut queue = VecDeque::new();

        let mut intern = |st: AugState, states: &mut Vec<AugState>, queue: &mut VecDeque<usize>| -> Result<usize> {
            let key = (st.base.0, st.accumulated.to_bits(), st.step);
            if let Some(&i) = index.get(&key) {
                return Ok(i);
            }
            if states.len() >= limit {
                return Err(Error::domain(format!(
                    "accumulated-reward state space exceeds {limit} states; the reachable reward set is too large"
                )));
            }
            let i = states.len();
            states.push(st);
            index.insert(key, i);
            if !st.terminal {
                queue.push_back(i);
            }
            Ok(i)
        };

        let mut initial = Vec::new();
        for (s, p) in base.initial_distribution() {
            let st = AugState {
                base: s,
                accumulated: 0.0,
                step: 0,
                terminal: base.is_terminal(s) || horizon == 0,
            };
            let i = intern(st, &mut states, &mut queue)?;
            initial.push((StateId(i), p));
        }

        let mut outcomes: Vec<Vec<Vec<Outcome>>> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let st = states[i];
            let mut per_action = Vec::with_capacity(action_count);
            for a in 0..action_count {
                let mut row = Vec::new();
                for o in base.outcomes(st.base, ActionId(a))? {
                    let accumulated = st.accumulated + o.reward;
                    let step = st.step + 1;
                    let terminal = base.is_terminal(o.next) || step >= horizon;
                    let next = intern(
                        AugState {
                            base: o.next,
                            accumulated,
                            step,
                            terminal,
                        },
                        &mut states,
                        &mut queue,
                    )?;
                    row.push(Outcome {
                        next: StateId(next),
                        prob: o.prob,
                        reward: if terminal { accumulated } else { 0.0 },
                    });
                }
                per_action.push(row);
            }
            if outcomes.len() <= i {
                outcomes.resize(i + 1, Vec::new());
            }
            outcomes[i] = per_action;
        }
        outcomes.resize(states.len(), Vec::new());

        Ok(AugmentedEnv {
            states,
            outcomes,
            initial,
            action_count,
            horizon,
        })
    }

    pub fn state(&self, s: StateId) -> Option<&AugState> {
        self.states.get(s.0)
    }

    pub fn states(&self) -> &[AugState] {
        &self.states
    }

    /// Q'(s, r, a) = r + Q(s, a).
    pub fn lift_value(accumulated: f64, q_sa: f64) -> f64 {
        accumulated + q_sa
    }

    /// Lifts a base Q-table onto the augmented state space.
    pub fn lift_qtable(&self, q: &QTable) -> Result<QTable> {
        let mut values = Vec::with_capacity(self.states.len() * self.action_count);
        for st in &self.states {
            let row = q.row(st.base)?;
            values.extend(row.iter().map(|&v| Self::lift_value(st.accumulated, v)));
        }
        QTable::new(format!("{}+acc", q.id), self.states.len(), self.action_count, values)
    }

    /// Probabilities of a base policy, evaluated at the augmented state's base state.
    pub fn lifted_probs(&self, policy: &Policy<'_>, s: StateId) -> Result<Vec<f64>> {
        let st = self
            .state(s)
            .ok_or_else(|| Error::domain(format!("augmented state {} out of range", s.0)))?;
        policy.action_probs(st.base)
    }
}

impl TabularMdp for AugmentedEnv {
    fn state_count(&self) -> usize {
        self.states.len()
    }

    fn action_count(&self) -> usize {
        self.action_count
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_distribution(&self) -> Vec<(StateId, f64)> {
        self.initial.clone()
    }

    fn is_terminal(&self, s: StateId) -> bool {
        self.states.get(s.0).is_none_or(|st| st.terminal)
    }

    fn outcomes(&self, s: StateId, a: ActionId) -> Result<Vec<Outcome>> {
        self.outcomes
            .get(s.0)
            .and_then(|row| row.get(a.0))
            .cloned()
            .ok_or_else(|| Error::domain(format!("no outcomes for augmented ({}, {})", s.0, a.0)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{exact_return, exact_return_from, DenseChainEnv, TreeEnv};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_table(rng: &mut ChaCha8Rng, states: usize) -> QTable {
        let vals = (0..states * 2).map(|_| rng.random()).collect();
        QTable::new("r", states, 2, vals).unwrap()
    }

    fn lifted_return(aug: &AugmentedEnv, policy: &Policy<'_>) -> f64 {
        exact_return_from(aug, &aug.initial_distribution(), |s| aug.lifted_probs(policy, s)).unwrap()
    }

    #[test]
    fn returns_preserved_on_dense_chain() {
        let base = DenseChainEnv::new(vec![1.0, -0.5, 2.0, 0.25], 0.1, 6).unwrap();
        let aug = AugmentedEnv::new(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let q = random_table(&mut rng, base.state_count());
            let eps = rng.random::<f64>();
            let policy = Policy::epsilon_greedy(&q, eps).unwrap();
            let r_base = exact_return(&base, &policy).unwrap();
            let r_aug = lifted_return(&aug, &policy);
            assert!((r_base - r_aug).abs() < 1e-9, "{r_base} vs {r_aug}");
        }
    }

    #[test]
    fn intermediate_rewards_are_zero() {
        let aug = AugmentedEnv::new(&DenseChainEnv::default()).unwrap();
        for (i, st) in aug.states().iter().enumerate() {
            if st.terminal {
                continue;
            }
            for a in 0..2 {
                for o in aug.outcomes(StateId(i), ActionId(a)).unwrap() {
                    if !aug.is_terminal(o.next) {
                        assert_eq!(o.reward, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn binary_tree_returns_unchanged() {
        let tree = TreeEnv::from_leaf_ordinals(5, &[2], 0.3).unwrap();
        let aug = AugmentedEnv::new(&tree).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..5 {
            let q = random_table(&mut rng, tree.node_count());
            let p = Policy::Argmax(&q);
            assert!((tree.exact_return(&p).unwrap() - lifted_return(&aug, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn lift_at_zero_is_identity() {
        let base = DenseChainEnv::default();
        let aug = AugmentedEnv::new(&base).unwrap();
        let q = random_table(&mut ChaCha8Rng::seed_from_u64(13), base.state_count());
        let lifted = aug.lift_qtable(&q).unwrap();
        for (i, st) in aug.states().iter().enumerate() {
            let row = lifted.row(StateId(i)).unwrap();
            let base_row = q.row(st.base).unwrap();
            for a in 0..2 {
                assert_eq!(row[a], st.accumulated + base_row[a]);
                if st.accumulated == 0.0 {
                    assert_eq!(row[a], base_row[a]);
                }
            }
        }
    }

    #[test]
    fn oversized_reward_set_is_rejected() {
        let base = DenseChainEnv::new(vec![0.1, 0.37, 1.3], 0.011, 40).unwrap();
        assert!(matches!(AugmentedEnv::with_limit(&base, 50), Err(Error::Domain(_))));
    }
}
