use crate::error::{Error, Result};
use crate::geometry::AxisBox;

const SUM_TOL: f64 = 1e-12;

/// Finite constrained MDP without reward or cost functions: dynamics,
/// initial distribution, discount and a feature map `f(s, a) ∈ [0, 1]^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularCmdp {
    n_states: usize,
    n_actions: usize,
    n_features: usize,
    /// `P[s, a, s']`, flattened row-major.
    transitions: Vec<f64>,
    initial_dist: Vec<f64>,
    discount: f64,
    /// `f[s, a, k]`, flattened row-major.
    features: Vec<f64>,
}

impl TabularCmdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        initial_dist: Vec<f64>,
        discount: f64,
        features: Vec<f64>,
    ) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidInput(format!("cmdp: {msg}")));
        if n_states == 0 || n_actions == 0 {
            return bad("needs at least one state and one action".into());
        }
        let sa = n_states * n_actions;
        if transitions.len() != sa * n_states {
            return bad(format!("expected {} transition entries, got {}", sa * n_states, transitions.len()));
        }
        if initial_dist.len() != n_states {
            return bad("initial distribution has the wrong length".into());
        }
        if features.is_empty() || features.len() % sa != 0 {
            return bad("feature table must hold d values per state-action pair".into());
        }
        if !(0.0..1.0).contains(&discount) {
            return bad(format!("discount {discount} outside [0, 1)"));
        }
        for (i, row) in transitions.chunks_exact(n_states).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad(format!("transition row {i} has entries outside [0, 1]"));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > SUM_TOL {
                return bad(format!("transition row {i} sums to {total}"));
            }
        }
        if initial_dist.iter().any(|p| !(0.0..=1.0).contains(p))
            || (initial_dist.iter().sum::<f64>() - 1.0).abs() > SUM_TOL
        {
            return bad("initial distribution is not a probability vector".into());
        }
        if features.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("feature entries must lie in [0, 1]".into());
        }
        Ok(Self {
            n_states,
            n_actions,
            n_features: features.len() / sa,
            transitions,
            initial_dist,
            discount,
            features,
        })
    }

    /// Same dynamics with one-hot state-action features (`d = |S||A|`).
    pub fn with_indicator_features(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        initial_dist: Vec<f64>,
        discount: f64,
    ) -> Result<Self> {
        let sa = n_states * n_actions;
        let mut features = vec![0.0; sa * sa];
        for i in 0..sa {
            features[i * sa + i] = 1.0;
        }
        Self::new(n_states, n_actions, transitions, initial_dist, discount, features)
    }

    /// A copy with replaced dynamics; features, discount and start distribution
    /// are kept.
    pub fn with_transitions(&self, transitions: Vec<f64>) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            transitions,
            self.initial_dist.clone(),
            self.discount,
            self.features.clone(),
        )
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_pairs(&self) -> usize {
        self.n_states * self.n_actions
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    /// Next-state distribution `P[s, a, ·]`.
    #[inline]
    pub fn next_dist(&self, s: usize, a: usize) -> &[f64] {
        let i = self.pair(s, a) * self.n_states;
        &self.transitions[i..i + self.n_states]
    }

    #[inline]
    pub fn feature(&self, s: usize, a: usize) -> &[f64] {
        let i = self.pair(s, a) * self.n_features;
        &self.features[i..i + self.n_features]
    }

    /// Per-pair scalar `w·f(s, a)`.
    pub fn pair_values(&self, weights: &[f64]) -> Vec<f64> {
        assert_eq!(weights.len(), self.n_features, "weight dimension");
        self.features
            .chunks_exact(self.n_features)
            .map(|f| f.iter().zip(weights).map(|(x, w)| x * w).sum())
            .collect()
    }

    /// Upper bound `1 / (1 - γ)` on every feature-expectation coordinate.
    pub fn feature_bound(&self) -> f64 {
        1.0 / (1.0 - self.discount)
    }
}

/// Linear reward (`threshold = None`) or constraint `weights·f(π) <= threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearObjective {
    pub weights: Vec<f64>,
    pub threshold: Option<f64>,
}

impl LinearObjective {
    pub fn reward(weights: Vec<f64>) -> Self {
        Self { weights, threshold: None }
    }

    pub fn constraint(weights: Vec<f64>, threshold: f64) -> Self {
        Self { weights, threshold: Some(threshold) }
    }

    pub fn value(&self, features: &[f64]) -> f64 {
        self.weights.iter().zip(features).map(|(w, f)| w * f).sum()
    }

    /// Positive part of `weights·x - threshold`; zero for rewards.
    pub fn excess(&self, features: &[f64]) -> f64 {
        match self.threshold {
            Some(t) => (self.value(features) - t).max(0.0),
            None => 0.0,
        }
    }
}

/// Stochastic stationary policy `π(a | s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != n_states * n_actions {
            return Err(Error::InvalidInput("policy table has the wrong size".into()));
        }
        for (s, row) in probs.chunks_exact(n_actions).enumerate() {
            let total: f64 = row.iter().sum();
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (total - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidInput(format!("policy row {s} is not a distribution")));
            }
        }
        Ok(Self { n_states, n_actions, probs })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions, probs: vec![1.0 / n_actions as f64; n_states * n_actions] }
    }

    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Self {
        let mut probs = vec![0.0; actions.len() * n_actions];
        for (s, &a) in actions.iter().enumerate() {
            probs[s * n_actions + a] = 1.0;
        }
        Self { n_states: actions.len(), n_actions, probs }
    }

    /// Normalizes each row of nonnegative weights; all-zero rows become uniform.
    pub fn from_weights(n_states: usize, n_actions: usize, weights: &[f64]) -> Self {
        let mut probs = Vec::with_capacity(n_states * n_actions);
        for row in weights.chunks_exact(n_actions) {
            let clipped: Vec<f64> = row.iter().map(|w| w.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            if total > 1e-300 {
                probs.extend(clipped.iter().map(|w| w / total));
            } else {
                probs.extend(std::iter::repeat_n(1.0 / n_actions as f64, n_actions));
            }
        }
        // Renormalize so rows sum to one within rounding.
        for row in probs.chunks_exact_mut(n_actions) {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        Self { n_states, n_actions, probs }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.probs[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_deterministic(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub(crate) fn check_for(&self, cmdp: &TabularCmdp) -> Result<()> {
        if self.n_states != cmdp.n_states() || self.n_actions != cmdp.n_actions() {
            return Err(Error::InvalidInput("policy does not match the cmdp".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Estimated { n_traj: usize },
}

/// Discounted feature expectations of one policy.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureExpectations {
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub confidence_box: Option<AxisBox>,
}

impl FeatureExpectations {
    pub fn exact(values: Vec<f64>) -> Self {
        Self { values, provenance: Provenance::Exact, confidence_box: None }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A finite rollout `(s_0, a_0), (s_1, a_1), …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub steps: Vec<(usize, usize)>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}
