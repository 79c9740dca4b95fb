//! Full binary tree with binary terminal rewards and optional action slip.
//!
//! Nodes use heap order: the root is 0 and the children of `i` are `2i + 1`
//! (left) and `2i + 2` (right). A tree of depth `k` has `2^k - 1` nodes, and
//! its leaves are the indices `>= 2^(k-1) - 1`.

use std::collections::BTreeSet;

use rand::Rng;

use super::{exact_return_from, rollout, Outcome, TabularMdp};
use crate::error::{Error, Result};
use crate::types::{ActionId, Policy, QTable, StateId};

pub const LEFT: ActionId = ActionId(0);
pub const RIGHT: ActionId = ActionId(1);

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnv {
    depth: usize,
    success: BTreeSet<StateId>,
    slip: f64,
}

impl TreeEnv {
    pub fn new(depth: usize, success_leaves: impl IntoIterator<Item = StateId>, slip: f64) -> Result<Self> {
        if !(2..=24).contains(&depth) {
            return Err(Error::domain(format!("tree depth {depth} outside [2, 24]")));
        }
        if !(0.0..=1.0).contains(&slip) {
            return Err(Error::domain(format!("slip probability {slip} outside [0, 1]")));
        }
        let env = TreeEnv {
            depth,
            success: BTreeSet::new(),
            slip,
        };
        let success: BTreeSet<StateId> = success_leaves.into_iter().collect();
        if let Some(s) = success.iter().find(|&&s| !env.is_leaf(s)) {
            return Err(Error::domain(format!("success state {} is not a leaf", s.0)));
        }
        Ok(TreeEnv { success, ..env })
    }

    /// Leaves are addressed by their left-to-right ordinal `0..2^(k-1)`.
    pub fn from_leaf_ordinals(depth: usize, ordinals: &[usize], slip: f64) -> Result<Self> {
        let first_leaf = (1usize << (depth.min(24) - 1)) - 1;
        let leaves = 1usize << (depth.min(24) - 1);
        if let Some(o) = ordinals.iter().find(|&&o| o >= leaves) {
            return Err(Error::domain(format!("leaf ordinal {o} out of range (tree has {leaves} leaves)")));
        }
        TreeEnv::new(depth, ordinals.iter().map(|&o| StateId(first_leaf + o)), slip)
    }

    /// Every leaf succeeds except the listed ordinals.
    pub fn with_failure_ordinals(depth: usize, failures: &[usize], slip: f64) -> Result<Self> {
        let leaves = 1usize << (depth.clamp(2, 24) - 1);
        let ok: Vec<usize> = (0..leaves).filter(|o| !failures.contains(o)).collect();
        TreeEnv::from_leaf_ordinals(depth, &ok, slip)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn slip(&self) -> f64 {
        self.slip
    }

    pub fn with_slip(&self, slip: f64) -> Result<Self> {
        TreeEnv::new(self.depth, self.success.iter().copied(), slip)
    }

    pub fn success_leaves(&self) -> &BTreeSet<StateId> {
        &self.success
    }

    pub fn node_count(&self) -> usize {
        (1 << self.depth) - 1
    }

    pub fn internal_count(&self) -> usize {
        (1 << (self.depth - 1)) - 1
    }

    pub fn leaf_count(&self) -> usize {
        1 << (self.depth - 1)
    }

    pub fn is_leaf(&self, s: StateId) -> bool {
        s.0 >= self.internal_count() && s.0 < self.node_count()
    }

    pub fn is_internal(&self, s: StateId) -> bool {
        s.0 < self.internal_count()
    }

    pub fn child(s: StateId, a: ActionId) -> StateId {
        StateId(2 * s.0 + 1 + a.0)
    }

    pub fn parent(s: StateId) -> Option<StateId> {
        (s.0 > 0).then(|| StateId((s.0 - 1) / 2))
    }

    /// Level of a node, root at level 1.
    pub fn level(s: StateId) -> usize {
        (usize::BITS - (s.0 + 1).leading_zeros()) as usize
    }

    pub fn leaf_reward(&self, leaf: StateId) -> f64 {
        if self.success.contains(&leaf) {
            1.0
        } else {
            0.0
        }
    }

    fn check_action(a: ActionId) -> Result<()> {
        if a.0 > 1 {
            return Err(Error::domain(format!("action {} is not left(0) or right(1)", a.0)));
        }
        Ok(())
    }

    /// Uniform draw over the internal nodes.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> StateId {
        StateId(rng.random_range(0..self.internal_count()))
    }

    /// Applies `a` at `s`. With probability `slip` the action is replaced by a
    /// uniform draw over both actions.
    pub fn step<R: Rng + ?Sized>(&self, s: StateId, a: ActionId, rng: &mut R) -> Result<(StateId, f64, bool)> {
        if !self.is_internal(s) {
            return Err(Error::domain(format!("cannot step from non-internal state {}", s.0)));
        }
        Self::check_action(a)?;
        let executed = if self.slip > 0.0 && rng.random::<f64>() < self.slip {
            ActionId(rng.random_range(0..2))
        } else {
            a
        };
        let next = Self::child(s, executed);
        let terminal = self.is_leaf(next);
        let reward = if terminal { self.leaf_reward(next) } else { 0.0 };
        Ok((next, reward, terminal))
    }

    /// Probability that choosing `a` executes `executed`.
    fn exec_prob(&self, a: ActionId, executed: ActionId) -> f64 {
        if a == executed {
            1.0 - self.slip / 2.0
        } else {
            self.slip / 2.0
        }
    }

    /// Exact expected return from a uniform internal start.
    pub fn exact_return(&self, policy: &Policy<'_>) -> Result<f64> {
        super::exact_return(self, policy)
    }

    pub fn monte_carlo_return<R: Rng + ?Sized>(&self, policy: &Policy<'_>, n_episodes: usize, rng: &mut R) -> Result<f64> {
        if n_episodes == 0 {
            return Err(Error::domain("monte_carlo_return needs at least one episode"));
        }
        let mut total = 0.0;
        for i in 0..n_episodes {
            total += rollout(self, policy, format!("mc-{i}"), rng)?.final_reward;
        }
        Ok(total / n_episodes as f64)
    }

    /// Optimal success probability of every node (leaves: their reward).
    pub fn optimal_values(&self) -> Vec<f64> {
        let n = self.node_count();
        let mut v = vec![0.0; n];
        for s in (0..n).rev() {
            let s = StateId(s);
            v[s.0] = if self.is_leaf(s) {
                self.leaf_reward(s)
            } else {
                [LEFT, RIGHT]
                    .into_iter()
                    .map(|a| self.optimal_action_value(&v, s, a))
                    .fold(0.0, f64::max)
            };
        }
        v
    }

    fn optimal_action_value(&self, v: &[f64], s: StateId, a: ActionId) -> f64 {
        [LEFT, RIGHT]
            .into_iter()
            .map(|e| self.exec_prob(a, e) * v[Self::child(s, e).0])
            .sum()
    }

    /// Bellman-optimal Q-table (γ = 1). Leaf rows are zero.
    pub fn optimal_qtable(&self) -> QTable {
        let v = self.optimal_values();
        let mut values = vec![0.0; self.node_count() * 2];
        for s in 0..self.internal_count() {
            for a in [LEFT, RIGHT] {
                values[2 * s + a.0] = self.optimal_action_value(&v, StateId(s), a);
            }
        }
        QTable::new("optimal", self.node_count(), 2, values).expect("finite optimal values")
    }

    /// Feasible/catastrophic label of every (state, action) pair.
    pub fn feasibility_labels(&self) -> FeasibilityMap {
        let v = self.optimal_values();
        let mut pairs = vec![[false; 2]; self.node_count()];
        for (s, p) in pairs.iter_mut().enumerate().take(self.internal_count()) {
            for a in [LEFT, RIGHT] {
                p[a.0] = self.optimal_action_value(&v, StateId(s), a) > 0.0;
            }
        }
        let states = (0..self.node_count())
            .map(|s| {
                let s = StateId(s);
                if self.is_leaf(s) {
                    self.success.contains(&s)
                } else {
                    pairs[s.0].iter().any(|&f| f)
                }
            })
            .collect();
        FeasibilityMap { pairs, states }
    }

    /// Per-step first-mistake rates under the no-mistake-so-far state
    /// distribution, the worst-case slip-to-catastrophe probability `c`, and
    /// the resulting lower bound `1 - T(ε + c)` on the return from feasible
    /// starts. `horizon` is `T`; `None` uses `depth - 1`.
    pub fn first_mistake_error(&self, policy: &Policy<'_>, horizon: Option<usize>) -> Result<FirstMistake> {
        let horizon = horizon.unwrap_or(self.depth - 1);
        if horizon == 0 {
            return Err(Error::domain("horizon must be at least one step"));
        }
        let fm = self.feasibility_labels();
        let internal = self.internal_count();
        let probs: Vec<Vec<f64>> = (0..internal)
            .map(|s| policy.action_probs(StateId(s)))
            .collect::<Result<_>>()?;
        if let Some(p) = probs.iter().find(|p| p.len() != 2) {
            return Err(Error::domain(format!("policy has {} actions, tree has 2", p.len())));
        }

        let feasible_starts: Vec<StateId> = (0..internal)
            .map(StateId)
            .filter(|&s| fm.state_feasible(s))
            .collect();
        if feasible_starts.is_empty() {
            return Err(Error::domain("no feasible start state; the bound is vacuous"));
        }
        let mut mass = vec![0.0; self.node_count()];
        for s in &feasible_starts {
            mass[s.0] = 1.0 / feasible_starts.len() as f64;
        }

        let mut per_step = Vec::with_capacity(horizon);
        for _ in 0..horizon {
            let total: f64 = mass.iter().sum();
            if total <= 0.0 {
                per_step.push(0.0);
                continue;
            }
            let mut eps_t = 0.0;
            let mut next = vec![0.0; self.node_count()];
            for s in 0..internal {
                if mass[s] == 0.0 {
                    continue;
                }
                for a in [LEFT, RIGHT] {
                    let pa = probs[s][a.0];
                    if fm.is_feasible(StateId(s), a) {
                        for e in [LEFT, RIGHT] {
                            let child = Self::child(StateId(s), e);
                            if self.is_internal(child) && fm.state_feasible(child) {
                                next[child.0] += mass[s] * pa * self.exec_prob(a, e);
                            }
                        }
                    } else {
                        eps_t += mass[s] / total * pa;
                    }
                }
            }
            per_step.push(eps_t);
            mass = next;
        }
        let epsilon = per_step.iter().sum::<f64>() / horizon as f64;

        let mut c: f64 = 0.0;
        for s in 0..internal {
            for a in [LEFT, RIGHT] {
                if !fm.is_feasible(StateId(s), a) {
                    continue;
                }
                let to_catastrophe: f64 = [LEFT, RIGHT]
                    .into_iter()
                    .filter(|&e| !fm.state_feasible(Self::child(StateId(s), e)))
                    .map(|e| self.exec_prob(a, e))
                    .sum();
                c = c.max(to_catastrophe);
            }
        }

        let w = 1.0 / feasible_starts.len() as f64;
        let init: Vec<(StateId, f64)> = feasible_starts.iter().map(|&s| (s, w)).collect();
        let feasible_start_return = exact_return_from(self, &init, |s| policy.action_probs(s))?;

        Ok(FirstMistake {
            per_step,
            epsilon,
            c,
            horizon,
            bound: 1.0 - horizon as f64 * (epsilon + c),
            feasible_start_return,
        })
    }
}

impl TabularMdp for TreeEnv {
    fn state_count(&self) -> usize {
        self.node_count()
    }

    fn action_count(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.depth - 1
    }

    fn initial_distribution(&self) -> Vec<(StateId, f64)> {
        let p = 1.0 / self.internal_count() as f64;
        (0..self.internal_count()).map(|s| (StateId(s), p)).collect()
    }

    fn is_terminal(&self, s: StateId) -> bool {
        self.is_leaf(s)
    }

    fn outcomes(&self, s: StateId, a: ActionId) -> Result<Vec<Outcome>> {
        if !self.is_internal(s) {
            return Err(Error::domain(format!("no transitions from non-internal state {}", s.0)));
        }
        Self::check_action(a)?;
        Ok([LEFT, RIGHT]
            .into_iter()
            .map(|e| {
                let next = Self::child(s, e);
                Outcome {
                    next,
                    prob: self.exec_prob(a, e),
                    reward: if self.is_leaf(next) { self.leaf_reward(next) } else { 0.0 },
                }
            })
            .filter(|o| o.prob > 0.0)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityMap {
    pairs: Vec<[bool; 2]>,
    states: Vec<bool>,
}

impl FeasibilityMap {
    pub fn is_feasible(&self, s: StateId, a: ActionId) -> bool {
        self.pairs.get(s.0).is_some_and(|p| p.get(a.0).copied().unwrap_or(false))
    }

    /// Leaves count as feasible iff they are success leaves.
    pub fn state_feasible(&self, s: StateId) -> bool {
        self.states.get(s.0).copied().unwrap_or(false)
    }

    pub fn feasible_pairs(&self) -> Vec<(StateId, ActionId)> {
        self.pairs
            .iter()
            .enumerate()
            .flat_map(|(s, p)| {
                p.iter()
                    .enumerate()
                    .filter(|(_, &f)| f)
                    .map(move |(a, _)| (StateId(s), ActionId(a)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstMistake {
    /// ε_t for t = 1..=T.
    pub per_step: Vec<f64>,
    pub epsilon: f64,
    pub c: f64,
    pub horizon: usize,
    pub bound: f64,
    /// Exact return with the start distribution restricted to feasible states.
    pub feasible_start_return: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_success(depth: usize, slip: f64) -> TreeEnv {
        TreeEnv::from_leaf_ordinals(depth, &[0], slip).unwrap()
    }

    /// Q-table whose argmax walks toward leaf ordinal 0 (always left).
    fn toward_left(env: &TreeEnv) -> QTable {
        let rows: Vec<Vec<f64>> = (0..env.node_count()).map(|_| vec![1.0, 0.0]).collect();
        QTable::from_rows("left", &rows).unwrap()
    }

    /// Independent oracle: enumerate every start and every action path with
    /// its probability (slip included).
    fn enumerate_return(env: &TreeEnv, policy: &Policy<'_>) -> f64 {
        fn walk(env: &TreeEnv, policy: &Policy<'_>, s: StateId, p: f64) -> f64 {
            if env.is_leaf(s) {
                return p * env.leaf_reward(s);
            }
            let probs = policy.action_probs(s).unwrap();
            let mut total = 0.0;
            for a in 0..2 {
                for e in 0..2 {
                    let exec = if a == e { 1.0 - env.slip() / 2.0 } else { env.slip() / 2.0 };
                    let w = probs[a] * exec;
                    if w > 0.0 {
                        total += walk(env, policy, StateId(2 * s.0 + 1 + e), p * w);
                    }
                }
            }
            total
        }
        let n = env.internal_count();
        (0..n).map(|s| walk(env, policy, StateId(s), 1.0 / n as f64)).sum()
    }

    #[test]
    fn structure() {
        let env = one_success(6, 0.0);
        assert_eq!(env.node_count(), 63);
        assert_eq!(env.internal_count(), 31);
        assert!(env.is_leaf(StateId(31)) && !env.is_leaf(StateId(30)));
        for i in 0..31 {
            for a in [LEFT, RIGHT] {
                assert_eq!(TreeEnv::parent(TreeEnv::child(StateId(i), a)), Some(StateId(i)));
            }
        }
        assert_eq!(TreeEnv::level(StateId(0)), 1);
        assert_eq!(TreeEnv::level(StateId(31)), 6);
        assert!(TreeEnv::new(6, [StateId(3)], 0.0).is_err());
        assert!(TreeEnv::new(6, [StateId(31)], 1.5).is_err());
    }

    #[test]
    fn reset_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d2 = one_success(2, 0.0);
        assert!((0..100).all(|_| d2.reset(&mut rng) == StateId(0)));
        let d3 = one_success(3, 0.0);
        assert!((0..100).all(|_| d3.reset(&mut rng).0 < 3));
    }

    #[test]
    fn reset_is_uniform_chi_square() {
        let env = one_success(6, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut counts = vec![0usize; 31];
        for _ in 0..n {
            counts[env.reset(&mut rng).0] += 1;
        }
        let expected = n as f64 / 31.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 30 degrees of freedom; the 0.999 quantile is 59.7.
        assert!(chi2 < 59.7, "chi2 = {chi2}");
    }

    #[test]
    fn step_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let env = one_success(6, 0.0);
        assert_eq!(env.step(StateId(0), LEFT, &mut rng).unwrap(), (StateId(1), 0.0, false));
        let d2 = one_success(2, 0.0);
        assert_eq!(d2.step(StateId(0), LEFT, &mut rng).unwrap(), (StateId(1), 1.0, true));
        assert_eq!(d2.step(StateId(0), RIGHT, &mut rng).unwrap(), (StateId(2), 0.0, true));
        assert!(env.step(StateId(40), LEFT, &mut rng).is_err());
        assert!(env.step(StateId(0), ActionId(2), &mut rng).is_err());
    }

    #[test]
    fn full_slip_ignores_the_action() {
        let env = one_success(6, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let lefts = |a: ActionId, rng: &mut ChaCha8Rng| {
            (0..n)
                .filter(|_| env.step(StateId(0), a, rng).unwrap().0 == StateId(1))
                .count() as f64
                / n as f64
        };
        let pl = lefts(LEFT, &mut rng);
        let pr = lefts(RIGHT, &mut rng);
        // Two-sample difference of proportions near 1/2: sd ~ 0.0022.
        assert!((pl - pr).abs() < 0.01, "{pl} vs {pr}");
        assert!((pl - 0.5).abs() < 0.01);
    }

    #[test]
    fn exact_return_examples() {
        let env = one_success(6, 0.0);
        let uniform = Policy::Uniform { action_count: 2 };
        let r = env.exact_return(&uniform).unwrap();
        assert!((r - 1.0 / 32.0).abs() < 1e-15, "{r}");
        assert!((enumerate_return(&env, &uniform) - 1.0 / 32.0).abs() < 1e-15);

        let q = toward_left(&env);
        let r = env.exact_return(&Policy::Argmax(&q)).unwrap();
        assert!((r - 5.0 / 31.0).abs() < 1e-15, "{r}");

        let all = TreeEnv::from_leaf_ordinals(6, &(0..32).collect::<Vec<_>>(), 0.3).unwrap();
        assert!((all.exact_return(&uniform).unwrap() - 1.0).abs() < 1e-12);
        assert!((all.exact_return(&Policy::Argmax(&q)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_return_matches_enumeration_with_slip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for slip in [0.0, 0.25, 0.6, 1.0] {
            let env = TreeEnv::from_leaf_ordinals(5, &[3, 9], slip).unwrap();
            for _ in 0..20 {
                let vals: Vec<f64> = (0..env.node_count() * 2).map(|_| rng.random()).collect();
                let q = QTable::new("r", env.node_count(), 2, vals).unwrap();
                for p in [Policy::Argmax(&q), Policy::epsilon_greedy(&q, 0.3).unwrap()] {
                    let a = env.exact_return(&p).unwrap();
                    let b = enumerate_return(&env, &p);
                    assert!((a - b).abs() < 1e-12, "{a} {b}");
                    assert!((0.0..=1.0).contains(&a));
                }
            }
        }
    }

    #[test]
    fn monte_carlo_agrees_with_dp() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let env = one_success(6, 0.4);
        let vals: Vec<f64> = (0..126).map(|_| rng.random()).collect();
        let q = QTable::new("r", 63, 2, vals).unwrap();
        for p in [Policy::Uniform { action_count: 2 }, Policy::Argmax(&q)] {
            let exact = env.exact_return(&p).unwrap();
            let n = 10_000;
            let mc = env.monte_carlo_return(&p, n, &mut rng).unwrap();
            let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!((mc - exact).abs() <= 3.0 * sigma + 1e-12, "{mc} vs {exact}");
        }
        let none = TreeEnv::new(6, [], 0.2).unwrap();
        assert_eq!(none.monte_carlo_return(&Policy::Uniform { action_count: 2 }, 100, &mut rng).unwrap(), 0.0);

        let det = one_success(6, 0.0);
        let left = toward_left(&det);
        let a = det.monte_carlo_return(&Policy::Argmax(&left), 1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = det.monte_carlo_return(&Policy::Argmax(&left), 1, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn feasibility_deterministic_one_success() {
        let env = one_success(6, 0.0);
        let fm = env.feasibility_labels();
        // Ancestors of leaf 31 are 0, 1, 3, 7, 15 and all step left.
        let mut expected: Vec<(StateId, ActionId)> = [0, 1, 3, 7, 15].iter().map(|&s| (StateId(s), LEFT)).collect();
        expected.sort();
        assert_eq!(fm.feasible_pairs(), expected);
        assert!(fm.state_feasible(StateId(31)) && !fm.state_feasible(StateId(32)));
    }

    #[test]
    fn feasibility_with_slip_and_all_success() {
        let env = one_success(6, 0.3);
        let fm = env.feasibility_labels();
        for s in 0..31 {
            let ancestor = [0, 1, 3, 7, 15].contains(&s);
            for a in [LEFT, RIGHT] {
                assert_eq!(fm.is_feasible(StateId(s), a), ancestor, "({s}, {a:?})");
            }
        }
        let all = TreeEnv::from_leaf_ordinals(4, &(0..8).collect::<Vec<_>>(), 0.0).unwrap();
        assert_eq!(all.feasibility_labels().feasible_pairs().len(), 14);
    }

    #[test]
    fn feasible_pairs_admit_a_successful_continuation() {
        // Exhaustive: from a feasible (s, a) in a deterministic tree, some
        // action sequence starting with a reaches a success leaf.
        let env = TreeEnv::from_leaf_ordinals(6, &[5, 17, 30], 0.0).unwrap();
        let fm = env.feasibility_labels();
        fn can_succeed(env: &TreeEnv, s: StateId) -> bool {
            if env.is_leaf(s) {
                return env.leaf_reward(s) == 1.0;
            }
            can_succeed(env, TreeEnv::child(s, LEFT)) || can_succeed(env, TreeEnv::child(s, RIGHT))
        }
        for s in 0..env.internal_count() {
            for a in [LEFT, RIGHT] {
                let s = StateId(s);
                assert_eq!(fm.is_feasible(s, a), can_succeed(&env, TreeEnv::child(s, a)));
            }
        }
    }

    #[test]
    fn first_mistake_optimal_policy() {
        let env = one_success(6, 0.0);
        let q = env.optimal_qtable();
        let fm = env.first_mistake_error(&Policy::Argmax(&q), None).unwrap();
        assert_eq!((fm.epsilon, fm.c, fm.bound), (0.0, 0.0, 1.0));
        assert_eq!(fm.feasible_start_return, 1.0);
    }

    #[test]
    fn first_mistake_adversarial_depth3() {
        // Success leaf is 3 (leftmost); always going right is wrong at 0 and 1.
        let env = one_success(3, 0.0);
        let rows: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0, 1.0]).collect();
        let q = QTable::from_rows("right", &rows).unwrap();
        let fm = env.first_mistake_error(&Policy::Argmax(&q), None).unwrap();
        assert_eq!(fm.per_step, vec![1.0, 0.0]);
        assert_eq!(fm.epsilon, 0.5);
        assert!(fm.bound <= 0.0);
        assert_eq!(fm.feasible_start_return, 0.0);
    }

    #[test]
    fn bound_holds_for_random_policies() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for slip in [0.0, 0.1, 0.3] {
            let env = one_success(6, slip);
            for _ in 0..50 {
                let vals: Vec<f64> = (0..126).map(|_| rng.random()).collect();
                let q = QTable::new("r", 63, 2, vals).unwrap();
                let fm = env.first_mistake_error(&Policy::Argmax(&q), None).unwrap();
                assert!(fm.feasible_start_return >= fm.bound - 1e-9);
            }
        }
    }
}
