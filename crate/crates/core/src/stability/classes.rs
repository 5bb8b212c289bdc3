use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use num_traits::Zero;

use super::resistance::ResistanceGraph;

/// Bottom strongly connected components of the zero-resistance digraph, as
/// sorted lists of state indices, ordered by their smallest state.
pub fn bottom_zero_resistance_classes(rg: &ResistanceGraph) -> Vec<Vec<usize>> {
    let size = rg.size();
    let mut dg: DiGraph<(), ()> = DiGraph::with_capacity(size, size * rg.n());
    for _ in 0..size {
        dg.add_node(());
    }
    for s in 0..size {
        for (t, r) in rg.successors(s) {
            if r.is_zero() {
                dg.add_edge(NodeIndex::new(s), NodeIndex::new(t), ());
            }
        }
    }
    let sccs = tarjan_scc(&dg);
    let mut component = vec![0usize; size];
    for (c, members) in sccs.iter().enumerate() {
        for v in members {
            component[v.index()] = c;
        }
    }
    let mut classes: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|v| {
                rg.successors(v.index())
                    .all(|(t, r)| !r.is_zero() || component[t] == *c)
            })
        })
        .map(|(_, members)| {
            let mut states: Vec<usize> = members.iter().map(|v| v.index()).collect();
            states.sort_unstable();
            states
        })
        .collect();
    classes.sort_unstable_by_key(|c| c[0]);
    classes
}
