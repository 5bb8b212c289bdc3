//! Stochastic stability by resistance trees: recurrent classes of the
//! unperturbed process, minimum-resistance paths between them, and stochastic
//! potentials from minimum in-trees over the class graph. Also hosts the exact
//! subset conditions for fixed adversaries and susceptibility computations.

mod arborescence;
mod classes;
mod fixed;
mod resistance;
mod susceptibility;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

pub use arborescence::{min_arborescence_weight, min_in_tree_weight};
pub use fixed::{
    check_x_stable_fi, check_x_stable_fi_capped, check_y_stable_fi, check_y_stable_fi_capped,
    susceptibility_fi_exact, susceptibility_fi_exact_capped, DEFAULT_FI_ENUMERATION_CAP,
    DEFAULT_FI_SUSCEPTIBILITY_CAP,
};
pub use resistance::{flip_resistance, transition_resistance, ResistanceContext, ResistanceGraph};
pub use susceptibility::{
    default_grid, susceptibility, susceptibility_bracket, susceptibility_scan, y_strictly_stable, AdversaryType,
    SusceptibilityResult, Threshold, Witness,
};

use crate::adversary::AdversaryModel;
use crate::chain::{build_transition_matrix, DEFAULT_STATE_CAP};
use crate::dynamics::Rationality;
use crate::error::{Error, Result};
use crate::game::{JointAction, PayoffGain, Rational};
use crate::graph::Graph;

/// Recurrent classes of the unperturbed (best-response) process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrentClassSet {
    n: usize,
    classes: Vec<Vec<usize>>,
}

impl RecurrentClassSet {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, c: usize) -> Vec<JointAction> {
        self.classes[c].iter().map(|&s| JointAction::from_index(self.n, s)).collect()
    }

    pub fn classes(&self) -> Vec<Vec<JointAction>> {
        (0..self.len()).map(|c| self.class(c)).collect()
    }

    pub fn all_singletons(&self) -> bool {
        self.classes.iter().all(|c| c.len() == 1)
    }

    /// States of all singleton classes.
    pub fn singleton_states(&self) -> Vec<JointAction> {
        self.classes
            .iter()
            .filter(|c| c.len() == 1)
            .map(|c| JointAction::from_index(self.n, c[0]))
            .collect()
    }

    pub fn class_of(&self, a: JointAction) -> Option<usize> {
        self.classes.iter().position(|c| c.binary_search(&a.index()).is_ok())
    }
}

fn check_size(g: &Graph) -> Result<()> {
    if g.n() > DEFAULT_STATE_CAP {
        return Err(Error::TooLarge { what: "stability analysis", n: g.n(), cap: DEFAULT_STATE_CAP });
    }
    Ok(())
}

/// Bottom strongly connected components of the zero-resistance digraph.
pub fn recurrent_classes(g: &Graph, model: &AdversaryModel, alpha: PayoffGain) -> Result<RecurrentClassSet> {
    check_size(g)?;
    let rg = ResistanceGraph::build(g, model, alpha)?;
    Ok(RecurrentClassSet { n: g.n(), classes: classes::bottom_zero_resistance_classes(&rg) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub classes: RecurrentClassSet,
    /// `meta_resistances[i][j]`: cheapest path resistance from class `i` into
    /// class `j` (`None` on the diagonal).
    pub meta_resistances: Vec<Vec<Option<Rational>>>,
    pub stochastic_potentials: Vec<Rational>,
    /// States of every class with minimal stochastic potential.
    pub stable: Vec<JointAction>,
    /// A single state in a singleton class with strictly minimal potential.
    pub strict: bool,
}

impl StabilityReport {
    pub fn strict_winner(&self) -> Option<JointAction> {
        if self.strict {
            self.stable.first().copied()
        } else {
            None
        }
    }

    pub fn is_strictly(&self, a: JointAction) -> bool {
        self.strict_winner() == Some(a)
    }

    /// Indices of classes sorted by stochastic potential (ties by class
    /// order).
    pub fn potential_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.stochastic_potentials.len()).collect();
        order.sort_by_key(|&c| (self.stochastic_potentials[c], c));
        order
    }

    pub fn to_json(&self) -> StabilityJson {
        StabilityJson {
            classes: self
                .classes
                .classes()
                .iter()
                .map(|c| c.iter().map(|a| a.to_string()).collect())
                .collect(),
            gamma: self.stochastic_potentials.iter().map(|g| g.to_string()).collect(),
            gamma_value: self.stochastic_potentials.iter().map(|g| g.to_f64().unwrap_or(f64::NAN)).collect(),
            stable: self.stable.iter().map(|a| a.to_string()).collect(),
            strict: self.strict,
        }
    }
}

/// Machine-readable report. States are action strings with agent 1 first;
/// potentials are exact fractions, with float copies in `gamma_value`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityJson {
    pub classes: Vec<Vec<String>>,
    pub gamma: Vec<String>,
    pub gamma_value: Vec<f64>,
    pub stable: Vec<String>,
    pub strict: bool,
}

/// Shortest resistance distance from any state of `sources` to every state.
fn resistance_distances(rg: &ResistanceGraph, sources: &[usize]) -> Vec<Option<Rational>> {
    let mut dist: Vec<Option<Rational>> = vec![None; rg.size()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = Some(Rational::zero());
        heap.push(Reverse((Rational::zero(), s)));
    }
    while let Some(Reverse((d, s))) = heap.pop() {
        if dist[s].is_some_and(|best| d > best) {
            continue;
        }
        for (t, r) in rg.successors(s) {
            let candidate = d + r;
            if dist[t].is_none_or(|best| candidate < best) {
                dist[t] = Some(candidate);
                heap.push(Reverse((candidate, t)));
            }
        }
    }
    dist
}

/// Analysis from a prebuilt resistance graph.
pub fn stability_from_resistances(rg: &ResistanceGraph) -> StabilityReport {
    let n = rg.n();
    let classes = classes::bottom_zero_resistance_classes(rg);
    let m = classes.len();
    let mut meta = vec![vec![None; m]; m];
    for (i, class) in classes.iter().enumerate() {
        let dist = resistance_distances(rg, class);
        for (j, target) in classes.iter().enumerate() {
            if i != j {
                meta[i][j] = target.iter().filter_map(|&t| dist[t]).min();
            }
        }
    }
    let potentials: Vec<Rational> = (0..m)
        .map(|root| min_in_tree_weight(&meta, root).expect("log-linear chains are irreducible"))
        .collect();
    let best = *potentials.iter().min().expect("at least one recurrent class");
    let minimal: Vec<usize> = (0..m).filter(|&c| potentials[c] == best).collect();
    let strict = minimal.len() == 1 && classes[minimal[0]].len() == 1;
    let stable = minimal
        .iter()
        .flat_map(|&c| classes[c].iter().map(|&s| JointAction::from_index(n, s)))
        .collect();
    StabilityReport {
        classes: RecurrentClassSet { n, classes },
        meta_resistances: meta,
        stochastic_potentials: potentials,
        stable,
        strict,
    }
}

/// Stochastically stable states of log-linear learning under `model`.
pub fn stochastically_stable_set(g: &Graph, model: &AdversaryModel, alpha: PayoffGain) -> Result<StabilityReport> {
    check_size(g)?;
    let rg = ResistanceGraph::build(g, model, alpha)?;
    Ok(stability_from_resistances(&rg))
}

/// For each single-flip transition, `P_eps(a -> a') / eps^r(a -> a')` at
/// `eps = exp(-beta)` for each requested `eps`. Rows are `(state, agent,
/// ratios)`.
pub fn perturbation_ratios(
    g: &Graph,
    model: &AdversaryModel,
    alpha: PayoffGain,
    epsilons: &[f64],
) -> Result<Vec<(usize, usize, Vec<f64>)>> {
    let rg = ResistanceGraph::build(g, model, alpha)?;
    let matrices = epsilons
        .iter()
        .map(|eps| build_transition_matrix(g, model, alpha, Rationality::new(-eps.ln())?))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for s in 0..rg.size() {
        for i in 0..g.n() {
            let r = rg.resistance(s, i).to_f64().unwrap_or(f64::NAN);
            let ratios = matrices
                .iter()
                .zip(epsilons)
                .map(|(m, eps)| m.flip_probability(s, i) / eps.powf(r))
                .collect();
            rows.push((s, i, ratios));
        }
    }
    Ok(rows)
}
