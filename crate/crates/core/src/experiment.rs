//! Experiment harness: sweeps seeds and demonstration counts, fits each
//! method on the demonstrations and scores it on fresh evaluation rewards.
//!
//! Every seed generates one environment and `max(k_schedule)`
//! demonstrations; a row with `k` demonstrations uses the first `k`.
//! Evaluation rewards are shared by all rows of a seed. Random streams are
//! derived from `(seed, stream)` so results do not depend on scheduling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cem::{constrained_cem, CemConfig, Evaluation};
use crate::cmdp::{feature_expectations, solve_cmdp, solve_mdp, features_of_occupancy, LinearObjective, Policy, TabularCmdp};
use crate::cocorl::{build_safe_set, solve_for_reward, solve_linear_for_reward, SafeSet, DEFAULT_D_STOP, DEFAULT_MAX_POINTS};
use crate::envs::{
    gen_demos, gen_gridworld, gen_single_state, prop1_cmdp, Demo, DemoMode, DemoSpec, Gridworld, GridworldSpec, SingleStateProblem, N_ACTIONS,
    REWARD_STD,
};
use crate::error::{Error, Result};
use crate::irl::{
    apply_irl_constraints, max_entropy_irl, max_margin_irl, max_margin_known, max_margin_shared, IrlEngine, IrlResult, IrlVariant,
    MaxEntConfig,
};

/// Exact header of the per-row results CSV.
pub const CSV_HEADER: &str = "seed,k,method,setting,normalized_return,constraint_violation,fallback_used,wall_ms";

const STREAM_ENV: u64 = 0;
const STREAM_EVAL: u64 = 1;
const STREAM_ROWS: u64 = 2;
/// Best safe returns at or below this cannot be used for normalization.
const MIN_OPTIMUM: f64 = 1e-9;
const MAX_WORLD_DRAWS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    /// Evaluate in the training environment with the training reward
    /// distribution.
    SingleEnv,
    /// Evaluate with rewards for a freshly drawn goal set.
    TaskTransfer,
    /// Train with `train_slip`, evaluate with `eval_slip`.
    DynamicsTransfer,
    /// Continuous-action single-state problem.
    SingleState,
    /// The two-action CMDP where only the uniform policy is feasible.
    Counterexample,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::SingleEnv => "single-env",
            Setting::TaskTransfer => "task-transfer",
            Setting::DynamicsTransfer => "dynamics-transfer",
            Setting::SingleState => "single-state",
            Setting::Counterexample => "counterexample",
        }
    }

    fn is_gridworld(self) -> bool {
        matches!(self, Setting::SingleEnv | Setting::TaskTransfer | Setting::DynamicsTransfer)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Setting::SingleEnv, Setting::TaskTransfer, Setting::DynamicsTransfer, Setting::SingleState, Setting::Counterexample]
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown setting `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    /// Safe set from demonstrations, optimized exactly by LP.
    CoCoRl,
    /// Safe set from demonstrations, optimized by constrained CEM
    /// (single-state problems only).
    CoCoRlCem,
    Irl { engine: IrlEngine, variant: IrlVariant },
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::CoCoRl,
        Method::CoCoRlCem,
        Method::Irl { engine: IrlEngine::MaxMargin, variant: IrlVariant::Average },
        Method::Irl { engine: IrlEngine::MaxMargin, variant: IrlVariant::SharedReward },
        Method::Irl { engine: IrlEngine::MaxMargin, variant: IrlVariant::KnownReward },
        Method::Irl { engine: IrlEngine::MaxEntropy, variant: IrlVariant::Average },
        Method::Irl { engine: IrlEngine::MaxEntropy, variant: IrlVariant::SharedReward },
        Method::Irl { engine: IrlEngine::MaxEntropy, variant: IrlVariant::KnownReward },
    ];

    pub fn name(self) -> &'static str {
        use IrlEngine::*;
        use IrlVariant::*;
        match self {
            Method::CoCoRl => "cocorl",
            Method::CoCoRlCem => "cocorl-cem",
            Method::Irl { engine: MaxMargin, variant: Average } => "max-margin-average",
            Method::Irl { engine: MaxMargin, variant: SharedReward } => "max-margin-shared",
            Method::Irl { engine: MaxMargin, variant: KnownReward } => "max-margin-known",
            Method::Irl { engine: MaxEntropy, variant: Average } => "max-ent-average",
            Method::Irl { engine: MaxEntropy, variant: SharedReward } => "max-ent-shared",
            Method::Irl { engine: MaxEntropy, variant: KnownReward } => "max-ent-known",
        }
    }

    pub fn can_fall_back(self) -> bool {
        matches!(self, Method::CoCoRl | Method::CoCoRlCem)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.name().to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemoKind {
    Exact,
    Boltzmann,
}

/// `seeds = 100` runs seeds `0..100`; `seeds = [3, 7]` runs exactly those.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    Count(u64),
    List(Vec<u64>),
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::Count(n) => (0..*n).collect(),
            Seeds::List(v) => v.clone(),
        }
    }
}

/// Experiment description, read from a flat TOML file. Every key is
/// optional; see `Default` for the values used when a key is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub setting: Setting,
    pub methods: Vec<Method>,
    pub k_schedule: Vec<usize>,
    pub seeds: Seeds,
    pub demo_mode: DemoKind,
    /// Rationality of Boltzmann demonstrations.
    pub beta: f64,
    pub grid_size: usize,
    pub n_goal: usize,
    pub n_limited: usize,
    /// Number of true constraints; 2 for gridworlds and 8 for single-state
    /// problems when absent.
    pub n_constraints: Option<usize>,
    pub discount: f64,
    pub threshold_max: f64,
    pub train_slip: f64,
    pub eval_slip: f64,
    /// Action dimension of single-state problems.
    pub dim: usize,
    pub n_eval_rewards: usize,
    pub max_points: usize,
    pub d_stop: f64,
    pub cem_iters: usize,
    pub cem_samples: usize,
    pub cem_elites: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let grid = GridworldSpec::default();
        Self {
            setting: Setting::SingleEnv,
            methods: vec![Method::CoCoRl],
            k_schedule: (1..=26).collect(),
            seeds: Seeds::Count(100),
            demo_mode: DemoKind::Exact,
            beta: 1.0,
            grid_size: grid.size,
            n_goal: grid.n_goal,
            n_limited: grid.n_limited,
            n_constraints: None,
            discount: grid.discount,
            threshold_max: grid.threshold_max,
            train_slip: 0.0,
            eval_slip: 0.2,
            dim: 3,
            n_eval_rewards: 10,
            max_points: DEFAULT_MAX_POINTS,
            d_stop: DEFAULT_D_STOP,
            cem_iters: 100,
            cem_samples: 100,
            cem_elites: 10,
            output: PathBuf::from("results.csv"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn n_constraints(&self) -> usize {
        self.n_constraints.unwrap_or(if self.setting == Setting::SingleState { 8 } else { 2 })
    }

    pub fn gridworld_spec(&self) -> GridworldSpec {
        GridworldSpec {
            size: self.grid_size,
            slip_p: self.train_slip,
            n_goal: self.n_goal,
            n_limited: self.n_limited,
            n_constraints: self.n_constraints(),
            discount: self.discount,
            threshold_max: self.threshold_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.methods.is_empty() || self.k_schedule.is_empty() || self.seeds.to_vec().is_empty() {
            return bad("methods, k_schedule and seeds must be non-empty".into());
        }
        if self.k_schedule.contains(&0) {
            return bad("demonstration counts must be positive".into());
        }
        if self.n_eval_rewards == 0 || self.max_points == 0 || !(self.d_stop >= 0.0) {
            return bad("n_eval_rewards and max_points must be positive, d_stop nonnegative".into());
        }
        for &m in &self.methods {
            let ok = match (self.setting, m) {
                (_, Method::CoCoRl) => true,
                (Setting::SingleState, Method::CoCoRlCem) => true,
                (Setting::SingleState, _) | (_, Method::CoCoRlCem) => false,
                _ => true,
            };
            if !ok {
                return bad(format!("method {m} is not available in setting {}", self.setting));
            }
        }
        if self.demo_mode == DemoKind::Boltzmann {
            if self.setting == Setting::SingleState {
                return bad("single-state demonstrations are always exact".into());
            }
            if !(self.beta > 0.0 && self.beta.is_finite()) {
                return bad(format!("beta {} must be positive", self.beta));
            }
        }
        if self.methods.contains(&Method::CoCoRlCem)
            && (self.cem_iters == 0 || self.cem_elites == 0 || self.cem_elites > self.cem_samples)
        {
            return bad("CEM needs cem_iters >= 1 and 1 <= cem_elites <= cem_samples".into());
        }
        match self.setting {
            s if s.is_gridworld() => {
                self.gridworld_spec().validate()?;
                if !(0.0..=1.0).contains(&self.eval_slip) {
                    return bad(format!("eval_slip {} outside [0, 1]", self.eval_slip));
                }
            }
            Setting::SingleState if self.dim == 0 || self.n_constraints() <= self.dim => {
                return bad("single-state problems need dim >= 1 and more constraints than dimensions".into());
            }
            _ => {}
        }
        Ok(())
    }
}

/// One (seed, k, method) measurement. Failed rows carry NaN metrics and the
/// error message.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub seed: u64,
    pub k: usize,
    pub method: Method,
    pub setting: Setting,
    pub normalized_return: f64,
    pub constraint_violation: f64,
    pub fallback_used: bool,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.error.is_some() || !self.normalized_return.is_finite() || !self.constraint_violation.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Metrics {
    normalized_return: f64,
    constraint_violation: f64,
    fallback_used: bool,
}

/// Averages per-reward `(return, optimum, violation, fell_back)` results.
fn average(scores: &[(f64, f64, f64, bool)]) -> Metrics {
    let n = scores.len() as f64;
    Metrics {
        normalized_return: scores.iter().map(|s| s.0 / s.1).sum::<f64>() / n,
        constraint_violation: scores.iter().map(|s| s.2).sum::<f64>() / n,
        fallback_used: scores.iter().any(|s| s.3),
    }
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A reward to evaluate with and the best safe return for it.
#[derive(Clone, Debug)]
struct EvalReward {
    reward: LinearObjective,
    optimum: f64,
}

fn checked_optimum(v: f64) -> Result<f64> {
    if v > MIN_OPTIMUM {
        Ok(v)
    } else {
        Err(Error::Degenerate(format!("best safe return {v:e} cannot normalize returns")))
    }
}

/// Tabular case: gridworlds and the counterexample CMDP.
struct TabularCase {
    train: TabularCmdp,
    eval: TabularCmdp,
    constraints: Vec<LinearObjective>,
    demos: Vec<Demo>,
    eval_rewards: Vec<EvalReward>,
    /// Max-margin rewards per demonstration, filled on demand.
    margin_cache: Vec<Vec<f64>>,
}

impl TabularCase {
    fn gridworld(config: &ExperimentConfig, seed: u64, k_max: usize) -> Result<Self> {
        let mut rng = stream(seed, STREAM_ENV);
        let (world, eval_world) = match config.setting {
            Setting::DynamicsTransfer => transferable_gridworld(config, &mut rng)?,
            _ => {
                let w = gen_gridworld(&config.gridworld_spec(), &mut rng)?;
                (w.clone(), w)
            }
        };
        let demos = gen_demos(&world.cmdp, &world.constraints, &demo_spec(config, k_max), |r| world.sample_reward(r), &mut rng)?;
        let mut eval_rng = stream(seed, STREAM_EVAL);
        let goals = match config.setting {
            Setting::TaskTransfer => world.resample_goals(&mut eval_rng),
            _ => world.goals.clone(),
        };
        let rewards: Vec<LinearObjective> =
            (0..config.n_eval_rewards).map(|_| world.sample_reward_with(&goals, REWARD_STD, &mut eval_rng)).collect();
        Self::new(world.cmdp, eval_world.cmdp, world.constraints, demos, rewards)
    }

    fn counterexample(config: &ExperimentConfig, seed: u64, k_max: usize) -> Result<Self> {
        let (cmdp, constraints) = prop1_cmdp();
        let uniform_reward = |r: &mut ChaCha8Rng| LinearObjective::reward(vec![r.random::<f64>(), r.random::<f64>()]);
        let demos = gen_demos(&cmdp, &constraints, &demo_spec(config, k_max), uniform_reward, &mut stream(seed, STREAM_ENV))?;
        let mut eval_rng = stream(seed, STREAM_EVAL);
        let rewards = (0..config.n_eval_rewards).map(|_| uniform_reward(&mut eval_rng)).collect();
        Self::new(cmdp.clone(), cmdp, constraints, demos, rewards)
    }

    fn new(
        train: TabularCmdp,
        eval: TabularCmdp,
        constraints: Vec<LinearObjective>,
        demos: Vec<Demo>,
        rewards: Vec<LinearObjective>,
    ) -> Result<Self> {
        let eval_rewards = rewards
            .into_iter()
            .map(|reward| {
                let (_, sol) = solve_cmdp(&eval, &reward, &constraints)?;
                let optimum = reward.value(&features_of_occupancy(&eval, sol.point.as_deref().expect("optimal point")));
                Ok(EvalReward { optimum: checked_optimum(optimum)?, reward })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { train, eval, constraints, demos, eval_rewards, margin_cache: Vec::new() })
    }

    /// True return and summed constraint excess of `policy` in the
    /// evaluation CMDP.
    fn score(&self, policy: &Policy, reward: &LinearObjective) -> Result<(f64, f64)> {
        let f = feature_expectations(&self.eval, policy)?.values;
        Ok((reward.value(&f), self.constraints.iter().map(|c| c.excess(&f).max(0.0)).sum()))
    }

    fn run(&mut self, config: &ExperimentConfig, method: Method, k: usize, rng: &mut ChaCha8Rng) -> Result<Metrics> {
        let mut scores = Vec::with_capacity(self.eval_rewards.len());
        match method {
            Method::CoCoRl => {
                let features: Vec<_> = self.demos[..k].iter().map(|d| d.features.clone()).collect();
                let safe = build_safe_set(&features, config.max_points, config.d_stop, rng)?;
                for e in &self.eval_rewards {
                    match solve_for_reward(&self.eval, &safe, &e.reward) {
                        Ok((policy, _)) => {
                            let (g, v) = self.score(&policy, &e.reward)?;
                            scores.push((g, e.optimum, v, false));
                        }
                        // No achievable policy inside the safe set: fall back
                        // to a default safe controller worth 0.
                        Err(Error::Infeasible(_)) => scores.push((0.0, e.optimum, 0.0, true)),
                        Err(err) => return Err(err),
                    }
                }
            }
            Method::Irl { engine, variant } => {
                let fit = self.fit_irl(engine, variant, k)?;
                for e in &self.eval_rewards {
                    let policy = solve_mdp(&self.eval, &apply_irl_constraints(&fit, &e.reward)?)?;
                    let (g, v) = self.score(&policy, &e.reward)?;
                    scores.push((g, e.optimum, v, false));
                }
            }
            Method::CoCoRlCem => return Err(Error::InvalidInput("CEM runs only on single-state problems".into())),
        }
        Ok(average(&scores))
    }

    fn fit_irl(&mut self, engine: IrlEngine, variant: IrlVariant, k: usize) -> Result<IrlResult> {
        let demos = &self.demos[..k];
        let policies: Vec<Policy> = demos.iter().map(|d| d.policy.clone()).collect();
        let known: Vec<LinearObjective> = demos.iter().map(|d| d.reward.clone()).collect();
        let features: Vec<_> = demos.iter().map(|d| d.features.clone()).collect();
        let d = self.train.n_features();
        match (engine, variant) {
            (IrlEngine::MaxMargin, IrlVariant::Average) => {
                // Each demonstration's reward is independent of the others.
                while self.margin_cache.len() < k {
                    let next = &self.demos[self.margin_cache.len()].policy;
                    self.margin_cache.push(max_margin_irl(&self.train, next)?);
                }
                Ok(IrlResult {
                    per_demo_rewards: self.margin_cache[..k].to_vec(),
                    shared_penalty: None,
                    variant,
                    engine,
                    margins: Vec::new(),
                })
            }
            (IrlEngine::MaxMargin, IrlVariant::SharedReward) => max_margin_shared(&self.train, &policies),
            (IrlEngine::MaxMargin, IrlVariant::KnownReward) => max_margin_known(&self.train, &policies, &known),
            (IrlEngine::MaxEntropy, IrlVariant::Average) => max_entropy_irl(&self.train, &features, &MaxEntConfig::average(k, d)),
            (IrlEngine::MaxEntropy, IrlVariant::SharedReward) => max_entropy_irl(&self.train, &features, &MaxEntConfig::shared(k, d)),
            (IrlEngine::MaxEntropy, IrlVariant::KnownReward) => max_entropy_irl(&self.train, &features, &MaxEntConfig::known(&known)),
        }
    }
}

/// Gridworld whose constraints are satisfiable under both the training and
/// the evaluation dynamics; redrawn until that holds.
fn transferable_gridworld(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<(Gridworld, Gridworld)> {
    let zero = LinearObjective::reward(vec![0.0; config.grid_size * config.grid_size * N_ACTIONS]);
    for _ in 0..MAX_WORLD_DRAWS {
        let world = gen_gridworld(&config.gridworld_spec(), rng)?;
        let eval = world.with_slip(config.eval_slip)?;
        match solve_cmdp(&eval.cmdp, &zero, &eval.constraints) {
            Ok(_) => return Ok((world, eval)),
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::GenerationFailure(format!("no gridworld feasible under both dynamics after {MAX_WORLD_DRAWS} draws")))
}

fn demo_spec(config: &ExperimentConfig, k: usize) -> DemoSpec {
    let mode = match config.demo_mode {
        DemoKind::Exact => DemoMode::ExactOptimal,
        DemoKind::Boltzmann => DemoMode::Boltzmann { beta: config.beta },
    };
    DemoSpec { mode, k }
}

/// Single-state case: actions are the features.
struct LinearCase {
    problem: SingleStateProblem,
    demos: Vec<crate::cmdp::FeatureExpectations>,
    eval_rewards: Vec<EvalReward>,
}

impl LinearCase {
    fn new(config: &ExperimentConfig, seed: u64, k_max: usize) -> Result<Self> {
        let mut rng = stream(seed, STREAM_ENV);
        let problem = gen_single_state(config.dim, config.n_constraints(), &mut rng)?;
        let demos = problem.demos(k_max, &mut rng)?.into_iter().map(|(f, _)| f).collect();
        let mut eval_rng = stream(seed, STREAM_EVAL);
        let eval_rewards = (0..config.n_eval_rewards)
            .map(|_| {
                let reward = problem.sample_reward(&mut eval_rng);
                let (_, v) = problem.solve(&reward)?;
                Ok(EvalReward { optimum: checked_optimum(v)?, reward })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { problem, demos, eval_rewards })
    }

    fn run(&self, config: &ExperimentConfig, method: Method, k: usize, rng: &mut ChaCha8Rng) -> Result<Metrics> {
        let safe = build_safe_set(&self.demos[..k], config.max_points, config.d_stop, rng)?;
        let mut scores = Vec::with_capacity(self.eval_rewards.len());
        for e in &self.eval_rewards {
            let action = match method {
                Method::CoCoRl => match solve_linear_for_reward(&safe, &e.reward) {
                    Ok((a, _)) => Some(a),
                    Err(Error::Infeasible(_)) => None,
                    Err(err) => return Err(err),
                },
                Method::CoCoRlCem => cem_in_safe_set(config, &safe, &e.reward, rng)?,
                Method::Irl { .. } => return Err(Error::InvalidInput("IRL baselines need a tabular CMDP".into())),
            };
            match action {
                Some(a) => scores.push((e.reward.value(&a), e.optimum, self.problem.violation(&a), false)),
                // The zero action is always safe and worth 0.
                None => scores.push((0.0, e.optimum, 0.0, true)),
            }
        }
        Ok(average(&scores))
    }
}

/// Constrained CEM inside the safe set, started at the centroid of the
/// selected demonstrations. Returns `None` when no candidate satisfying all
/// inferred constraints was found.
fn cem_in_safe_set(config: &ExperimentConfig, safe: &SafeSet, reward: &LinearObjective, rng: &mut ChaCha8Rng) -> Result<Option<Vec<f64>>> {
    let p = &safe.polytope;
    let d = p.dim();
    let n = safe.selected.len() as f64;
    let centroid: Vec<f64> = (0..d).map(|j| safe.selected.iter().map(|f| f.values[j]).sum::<f64>() / n).collect();
    let evaluate = |a: &[f64]| Evaluation {
        return_value: reward.value(a),
        cost_violations: p.a().iter().zip(p.b()).map(|(row, bi)| row.iter().zip(a).map(|(x, y)| x * y).sum::<f64>() - bi).collect(),
    };
    let cem = CemConfig {
        n_iter: config.cem_iters,
        n_samp: config.cem_samples,
        n_elite: config.cem_elites,
        init_mean: centroid,
        init_std: vec![1.0; d],
    };
    let out = constrained_cem(evaluate, &cem, rng)?;
    if evaluate(&out.params).n_violated() == 0 {
        Ok(Some(out.params))
    } else if out.best_evaluation.n_violated() == 0 {
        Ok(Some(out.best_params))
    } else {
        Ok(None)
    }
}

enum Case {
    Tabular(TabularCase),
    Linear(LinearCase),
}

impl Case {
    fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let k_max = *config.k_schedule.iter().max().expect("validated");
        Ok(match config.setting {
            Setting::SingleState => Case::Linear(LinearCase::new(config, seed, k_max)?),
            Setting::Counterexample => Case::Tabular(TabularCase::counterexample(config, seed, k_max)?),
            _ => Case::Tabular(TabularCase::gridworld(config, seed, k_max)?),
        })
    }

    fn run(&mut self, config: &ExperimentConfig, method: Method, k: usize, rng: &mut ChaCha8Rng) -> Result<Metrics> {
        match self {
            Case::Tabular(c) => c.run(config, method, k, rng),
            Case::Linear(c) => c.run(config, method, k, rng),
        }
    }
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> Vec<ResultRow> {
    let mut case = Case::new(config, seed);
    let mut rows = Vec::with_capacity(config.k_schedule.len() * config.methods.len());
    let mut row_index = 0;
    for &k in &config.k_schedule {
        for &method in &config.methods {
            let start = Instant::now();
            let mut rng = stream(seed, STREAM_ROWS + row_index);
            row_index += 1;
            let outcome = match case.as_mut() {
                Ok(c) => c.run(config, method, k, &mut rng),
                Err(e) => Err(Error::GenerationFailure(e.to_string())),
            };
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            rows.push(match outcome {
                Ok(m) => ResultRow {
                    seed,
                    k,
                    method,
                    setting: config.setting,
                    normalized_return: m.normalized_return,
                    constraint_violation: m.constraint_violation,
                    fallback_used: m.fallback_used,
                    wall_ms,
                    error: None,
                },
                Err(e) => ResultRow {
                    seed,
                    k,
                    method,
                    setting: config.setting,
                    normalized_return: f64::NAN,
                    constraint_violation: f64::NAN,
                    fallback_used: false,
                    wall_ms,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    rows
}

/// Runs every (seed, k, method) combination. Failures are recorded on the
/// affected rows instead of aborting the sweep. Rows are ordered by seed,
/// then k in schedule order, then method in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let seeds = config.seeds.to_vec();
    let per_seed: Vec<Vec<ResultRow>> = seeds.par_iter().map(|&s| run_seed(config, s)).collect();
    Ok(per_seed.into_iter().flatten().collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    seed: u64,
    k: usize,
    method: String,
    setting: String,
    normalized_return: f64,
    constraint_violation: f64,
    fallback_used: bool,
    wall_ms: f64,
}

/// Per-(setting, method, k) aggregate over successful rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: String,
    pub method: String,
    pub k: usize,
    pub n: usize,
    pub n_failed: usize,
    pub mean_normalized_return: f64,
    pub stderr_normalized_return: f64,
    pub mean_constraint_violation: f64,
    pub stderr_constraint_violation: f64,
    pub fallback_rate: f64,
}

/// Mean and standard error (sample standard deviation over `√n`).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Groups rows by (setting, method, k) in order of first appearance.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Setting, Method, usize)> = Vec::new();
    for r in rows {
        let key = (r.setting, r.method, r.k);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(setting, method, k)| {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| (r.setting, r.method, r.k) == (setting, method, k)).collect();
            let ok: Vec<&&ResultRow> = group.iter().filter(|r| !r.failed()).collect();
            let ret: Vec<f64> = ok.iter().map(|r| r.normalized_return).collect();
            let viol: Vec<f64> = ok.iter().map(|r| r.constraint_violation).collect();
            let (mr, sr) = mean_stderr(&ret);
            let (mv, sv) = mean_stderr(&viol);
            SummaryRow {
                setting: setting.to_string(),
                method: method.to_string(),
                k,
                n: ok.len(),
                n_failed: group.len() - ok.len(),
                mean_normalized_return: mr,
                stderr_normalized_return: sr,
                mean_constraint_violation: mv,
                stderr_constraint_violation: sv,
                fallback_rate: if ok.is_empty() { f64::NAN } else { ok.iter().filter(|r| r.fallback_used).count() as f64 / ok.len() as f64 },
            }
        })
        .collect()
}

/// `results.csv` -> `results_summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_summary{ext}"))
}

/// Writes the per-row CSV at `path` and the summary next to it. Returns the
/// summary path.
pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(CsvRow {
            seed: r.seed,
            k: r.k,
            method: r.method.to_string(),
            setting: r.setting.to_string(),
            normalized_return: r.normalized_return,
            constraint_violation: r.constraint_violation,
            fallback_used: r.fallback_used,
            wall_ms: r.wall_ms,
        })?;
    }
    w.flush()?;
    let summary = summary_path(path);
    let mut w = csv::Writer::from_path(&summary)?;
    for s in summarize(rows) {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(summary)
}

/// Reads a results CSV written by `emit_results`. Error messages are not
/// stored in the CSV; failed rows come back with NaN metrics only.
pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("unexpected header `{}`", header.join(",")) });
    }
    r.deserialize::<CsvRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row?;
            let err = |m: Error| Error::Parse { line: i + 2, msg: m.to_string() };
            Ok(ResultRow {
                seed: row.seed,
                k: row.k,
                method: row.method.parse().map_err(err)?,
                setting: row.setting.parse().map_err(err)?,
                normalized_return: row.normalized_return,
                constraint_violation: row.constraint_violation,
                fallback_used: row.fallback_used,
                wall_ms: row.wall_ms,
                error: None,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(setting: Setting, methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig { setting, methods, k_schedule: vec![1, 3, 6], seeds: Seeds::List(vec![0, 1]), n_eval_rewards: 3, ..Default::default() }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("cocorl2".parse::<Method>().is_err());
    }

    #[test]
    fn config_parses_flat_toml() {
        let c = ExperimentConfig::from_toml(
            r#"
            setting = "task-transfer"
            methods = ["cocorl", "max-margin-average"]
            k_schedule = [1, 2]
            seeds = 5
            "#,
        )
        .unwrap();
        assert_eq!(c.setting, Setting::TaskTransfer);
        assert_eq!(c.seeds.to_vec(), vec![0, 1, 2, 3, 4]);
        assert_eq!(c.n_eval_rewards, 10);
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("k_schedule = []").is_err());
        assert!(ExperimentConfig::from_toml("setting = \"single-state\"\nmethods = [\"max-ent-average\"]").is_err());
        assert!(ExperimentConfig::from_toml("methods = [\"cocorl-cem\"]").is_err());
    }

    #[test]
    fn cocorl_is_safe_on_small_gridworlds() {
        for setting in [Setting::SingleEnv, Setting::TaskTransfer, Setting::DynamicsTransfer] {
            let rows = run_experiment(&small(setting, vec![Method::CoCoRl])).unwrap();
            assert_eq!(rows.len(), 6);
            for r in &rows {
                assert!(r.error.is_none(), "{r:?}");
                assert!(r.constraint_violation <= 1e-6, "{r:?}");
                assert!(r.normalized_return <= 1.0 + 1e-6);
            }
        }
    }

    #[test]
    fn single_demo_row_matches_the_demo() {
        let config = ExperimentConfig { k_schedule: vec![1], ..small(Setting::SingleEnv, vec![Method::CoCoRl]) };
        let rows = run_experiment(&config).unwrap();
        for r in &rows {
            let case = TabularCase::gridworld(&config, r.seed, 1).unwrap();
            let f = &case.demos[0].features.values;
            let expect = case.eval_rewards.iter().map(|e| e.reward.value(f) / e.optimum).sum::<f64>() / case.eval_rewards.len() as f64;
            assert!((r.normalized_return - expect).abs() < 1e-6, "{} vs {expect}", r.normalized_return);
            assert!(!r.fallback_used);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let config = small(Setting::SingleEnv, vec![Method::CoCoRl, "max-margin-average".parse().unwrap()]);
        let strip = |rows: Vec<ResultRow>| rows.into_iter().map(|r| ResultRow { wall_ms: 0.0, ..r }).collect::<Vec<_>>();
        let a = strip(run_experiment(&config).unwrap());
        let b = strip(run_experiment(&config).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.normalized_return.to_bits(), y.normalized_return.to_bits());
            assert_eq!(x.constraint_violation.to_bits(), y.constraint_violation.to_bits());
        }
    }

    #[test]
    fn counterexample_irl_is_unsafe() {
        let config = small(Setting::Counterexample, vec![Method::CoCoRl, "max-margin-average".parse().unwrap()]);
        let rows = run_experiment(&config).unwrap();
        for r in &rows {
            assert!(r.error.is_none(), "{r:?}");
            match r.method {
                Method::CoCoRl => assert!(r.constraint_violation <= 1e-6 && (r.normalized_return - 1.0).abs() < 1e-6, "{r:?}"),
                _ => assert!(r.constraint_violation > 0.4),
            }
        }
    }

    #[test]
    fn single_state_methods_run() {
        let mut config = small(Setting::SingleState, vec![Method::CoCoRl, Method::CoCoRlCem]);
        config.k_schedule = vec![1, 20];
        config.cem_iters = 40;
        let rows = run_experiment(&config).unwrap();
        for r in &rows {
            assert!(r.error.is_none(), "{r:?}");
            assert!(r.constraint_violation <= 1e-6, "{r:?}");
        }
    }

    #[test]
    fn stderr_matches_hand_computation() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn summary_path_inserts_suffix() {
        assert_eq!(summary_path(Path::new("out/r.csv")), PathBuf::from("out/r_summary.csv"));
        assert_eq!(summary_path(Path::new("r")), PathBuf::from("r_summary"));
    }
}
