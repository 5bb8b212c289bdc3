//! Monte Carlo simulation of log-linear learning under adversarial influence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::adversary::AdversaryModel;
use crate::error::{Error, Result};
use crate::game::{Action, JointAction, PayoffGain};
use crate::graph::{AgentSet, Graph};

/// Default cap on steps per hitting-time replica.
pub const DEFAULT_MAX_STEPS: u64 = 100_000_000;

/// Rationality `beta >= 0`; zero means updates are coin flips.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Rationality(f64);

impl Rationality {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::Parse(format!("rationality must be finite and >= 0, got {}", beta)));
        }
        Ok(Rationality(beta))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `exp(b ux) / (exp(b ux) + exp(b uy))` without overflow for large `b`.
pub(crate) fn logit_choice(beta: f64, ux: f64, uy: f64) -> f64 {
    let d = beta * (uy - ux);
    if d.is_nan() {
        // beta = 0 with infinite utilities cannot happen; equal utilities at
        // infinite beta land here
        return 0.5;
    }
    if d > 0.0 {
        let e = (-d).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + d.exp())
    }
}

/// Influenced utilities of both actions for agent `i`, as floats.
pub(crate) fn action_utilities(g: &Graph, a: JointAction, s: AgentSet, i: usize, alpha: f64) -> (f64, f64) {
    let nb = g.neighbors(i);
    let y_nb = nb.intersection(a.y_set()).len() as f64;
    let x_nb = nb.len() as f64 - y_nb;
    let bonus = if s.contains(i) { 1.0 } else { 0.0 };
    ((1.0 + alpha) * x_nb, y_nb + bonus)
}

/// Probability that agent `i`, once selected to revise, picks `x` under
/// influence set `s`.
pub fn update_probability(
    g: &Graph,
    a: JointAction,
    i: usize,
    s: AgentSet,
    alpha: PayoffGain,
    beta: Rationality,
) -> f64 {
    let (ux, uy) = action_utilities(g, a, s, i, alpha.to_f64());
    logit_choice(beta.value(), ux, uy)
}

/// One revision: who updated, the influence set in force, and the new state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepRecord {
    pub updater: usize,
    pub influence: AgentSet,
    pub state: JointAction,
}

/// Draws a uniform updater, the adversary's influence set, and the updater's
/// new action.
pub fn step<R: Rng + ?Sized>(
    g: &Graph,
    a: JointAction,
    model: &AdversaryModel,
    alpha: PayoffGain,
    beta: Rationality,
    rng: &mut R,
) -> StepRecord {
    let updater = rng.gen_range(0..g.n());
    let influence = model.influence_at(a, rng);
    let p_x = update_probability(g, a, updater, influence, alpha, beta);
    let action = if rng.gen::<f64>() < p_x { Action::X } else { Action::Y };
    StepRecord { updater, influence, state: a.with(updater, action) }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub initial: JointAction,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> JointAction {
        self.steps.last().map_or(self.initial, |s| s.state)
    }
}

/// Random stream for replica `replica` under master seed `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

pub fn simulate(
    g: &Graph,
    model: &AdversaryModel,
    alpha: PayoffGain,
    beta: Rationality,
    initial: JointAction,
    steps: usize,
    seed: u64,
) -> Result<Trajectory> {
    model.validate(g)?;
    check_state(g, initial)?;
    let mut rng = replica_rng(seed, 0);
    let mut state = initial;
    let mut records = Vec::with_capacity(steps);
    for _ in 0..steps {
        let record = step(g, state, model, alpha, beta, &mut rng);
        state = record.state;
        records.push(record);
    }
    Ok(Trajectory { initial, seed, steps: records })
}

/// First-passage step count of one replica; `censored` when the cap was hit
/// before reaching the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ReplicaOutcome {
    pub replica: u64,
    pub steps: u64,
    pub censored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HittingTimeEstimate {
    pub outcomes: Vec<ReplicaOutcome>,
    /// Mean over uncensored replicas.
    pub mean: f64,
    pub std_error: f64,
    pub censored: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn first_passage<R: Rng + ?Sized>(
    g: &Graph,
    model: &AdversaryModel,
    alpha: PayoffGain,
    beta: Rationality,
    from: JointAction,
    to: JointAction,
    max_steps: u64,
    rng: &mut R,
) -> (u64, bool) {
    let mut state = from;
    let mut t = 0u64;
    while state != to {
        if t >= max_steps {
            return (t, true);
        }
        state = step(g, state, model, alpha, beta, rng).state;
        t += 1;
    }
    (t, false)
}

/// Monte Carlo first-passage times from `from` to `to`; replicas run in
/// parallel, each on its own stream derived from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn hitting_time_mc(
    g: &Graph,
    model: &AdversaryModel,
    alpha: PayoffGain,
    beta: Rationality,
    from: JointAction,
    to: JointAction,
    replicas: usize,
    seed: u64,
    max_steps: u64,
) -> Result<HittingTimeEstimate> {
    model.validate(g)?;
    check_state(g, from)?;
    check_state(g, to)?;
    if replicas == 0 {
        return Err(Error::Parse("at least one replica is required".into()));
    }
    let outcomes: Vec<ReplicaOutcome> = (0..replicas as u64)
        .into_par_iter()
        .map(|replica| {
            let mut rng = replica_rng(seed, replica);
            let (steps, censored) = first_passage(g, model, alpha, beta, from, to, max_steps, &mut rng);
            ReplicaOutcome { replica, steps, censored }
        })
        .collect();
    let done: Vec<f64> = outcomes.iter().filter(|o| !o.censored).map(|o| o.steps as f64).collect();
    let censored = outcomes.len() - done.len();
    let (mean, std_error) = mean_and_se(&done);
    Ok(HittingTimeEstimate { outcomes, mean, std_error, censored })
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    match xs.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (xs[0], f64::NAN),
        m => {
            let mean = xs.iter().sum::<f64>() / m as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (mean, (var / m as f64).sqrt())
        }
    }
}

fn check_state(g: &Graph, a: JointAction) -> Result<()> {
    if a.n() != g.n() {
        return Err(Error::InvalidAction(format!(
            "{} has {} agents, graph has {}",
            a,
            a.n(),
            g.n()
        )));
    }
    Ok(())
}
