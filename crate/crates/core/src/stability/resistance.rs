//! Transition resistances: the exponential decay order of each single-agent
//! revision as `beta -> infinity`.

use num_traits::Zero;

use crate::adversary::AdversaryModel;
use crate::error::{Error, Result};
use crate::game::{influenced_utility_of, utility_of, Action, JointAction, PayoffGain, Rational};
use crate::graph::{AgentSet, Graph};

/// What the updating agent sees when computing a resistance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResistanceContext {
    /// A uniformly random adversary of capability `k` over `n` agents.
    UniformRandom { n: usize, k: usize },
    /// A concrete influence set in force at the current state (fixed or
    /// mobile adversaries).
    Influenced(AgentSet),
}

impl ResistanceContext {
    /// Context for `model` at state `a`.
    pub fn at(model: &AdversaryModel, a: JointAction) -> Self {
        match model {
            AdversaryModel::FixedIntelligent(s) => ResistanceContext::Influenced(*s),
            AdversaryModel::MobileIntelligent(p) => ResistanceContext::Influenced(p.influence(a)),
            AdversaryModel::UniformRandom { n, k } => ResistanceContext::UniformRandom { n: *n, k: *k },
        }
    }
}

fn positive_part(v: Rational) -> Rational {
    if v > Rational::zero() {
        v
    } else {
        Rational::zero()
    }
}

/// Resistance of agent `i` revising away from its action in `a`.
///
/// A uniformly random adversary with `1 <= k <= n-1` lowers the resistance of
/// switching to `y` by the full bonus (the influenced branch dominates) and
/// leaves switching to `x` at its uninfluenced value. With `k = n` every agent
/// is always influenced, and with `k = 0` none is.
pub fn flip_resistance(g: &Graph, a: JointAction, i: usize, ctx: ResistanceContext, alpha: PayoffGain) -> Rational {
    let current = a.action(i);
    let next = current.other();
    match ctx {
        ResistanceContext::UniformRandom { n, k } if k >= 1 && k < n => {
            let ux = utility_of(g, a, i, Action::X, alpha);
            let uy = utility_of(g, a, i, Action::Y, alpha);
            match next {
                Action::Y => positive_part(ux - uy - 1),
                Action::X => positive_part(uy - ux),
            }
        }
        ResistanceContext::UniformRandom { n, k } => {
            let s = if k == 0 { AgentSet::EMPTY } else { AgentSet::full(n) };
            flip_resistance(g, a, i, ResistanceContext::Influenced(s), alpha)
        }
        ResistanceContext::Influenced(s) => positive_part(
            influenced_utility_of(g, a, s, i, current, alpha) - influenced_utility_of(g, a, s, i, next, alpha),
        ),
    }
}

/// Resistance of the transition `from -> to`, which must change exactly one
/// agent's action.
pub fn transition_resistance(
    g: &Graph,
    from: JointAction,
    to: JointAction,
    ctx: ResistanceContext,
    alpha: PayoffGain,
) -> Result<Rational> {
    let diff = from.distance(to);
    if diff != 1 {
        return Err(Error::NotSingleFlip(diff));
    }
    let i = (from.bits() ^ to.bits()).trailing_zeros() as usize;
    Ok(flip_resistance(g, from, i, ctx, alpha))
}

/// Resistances of every single-flip transition of the chain, indexed
/// `[state * n + agent]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceGraph {
    n: usize,
    weights: Vec<Rational>,
}

impl ResistanceGraph {
    pub fn build(g: &Graph, model: &AdversaryModel, alpha: PayoffGain) -> Result<Self> {
        model.validate(g)?;
        let n = g.n();
        let mut weights = Vec::with_capacity(n << n);
        for index in 0..1usize << n {
            let a = JointAction::from_index(n, index);
            let ctx = ResistanceContext::at(model, a);
            for i in 0..n {
                weights.push(flip_resistance(g, a, i, ctx, alpha));
            }
        }
        Ok(ResistanceGraph { n, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        1 << self.n
    }

    pub fn resistance(&self, state: usize, agent: usize) -> Rational {
        self.weights[state * self.n + agent]
    }

    /// `(next state, resistance)` for every revision out of `state`.
    pub fn successors(&self, state: usize) -> impl Iterator<Item = (usize, Rational)> + '_ {
        (0..self.n).map(move |i| (state ^ (1 << i), self.weights[state * self.n + i]))
    }
}
