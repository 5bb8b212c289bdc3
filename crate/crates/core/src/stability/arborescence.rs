//! Minimum-weight spanning arborescence (Chu-Liu/Edmonds) over a dense
//! weight matrix with exact weights.

use std::ops::{Add, Sub};

use num_traits::Zero;

/// Weight of the cheapest spanning arborescence rooted at `root`, where
/// `weights[u][v]` is the cost of edge `u -> v` and every non-root vertex
/// takes exactly one incoming edge. `None` when some vertex cannot be reached
/// from the root.
pub fn min_arborescence_weight<W>(weights: &[Vec<Option<W>>], root: usize) -> Option<W>
where
    W: Copy + Ord + Add<Output = W> + Sub<Output = W> + Zero,
{
    let mut n = weights.len();
    assert!(root < n, "root {} out of range for {} vertices", root, n);
    let mut w: Vec<Vec<Option<W>>> = weights.to_vec();
    let mut root = root;
    let mut total = W::zero();
    const NONE: usize = usize::MAX;

    loop {
        let mut parent = vec![NONE; n];
        let mut in_weight = vec![W::zero(); n];
        for v in (0..n).filter(|&v| v != root) {
            let mut best: Option<(usize, W)> = None;
            for u in (0..n).filter(|&u| u != v) {
                if let Some(c) = w[u][v] {
                    if best.is_none_or(|(_, b)| c < b) {
                        best = Some((u, c));
                    }
                }
            }
            let (u, c) = best?;
            parent[v] = u;
            in_weight[v] = c;
            total = total + c;
        }

        let mut component = vec![NONE; n];
        let mut visited_from = vec![NONE; n];
        let mut count = 0;
        for start in 0..n {
            let mut v = start;
            while v != root && visited_from[v] == NONE && component[v] == NONE {
                visited_from[v] = start;
                v = parent[v];
            }
            if v != root && visited_from[v] == start && component[v] == NONE {
                let mut u = parent[v];
                component[v] = count;
                while u != v {
                    component[u] = count;
                    u = parent[u];
                }
                count += 1;
            }
        }
        if count == 0 {
            return Some(total);
        }
        for c in component.iter_mut().filter(|c| **c == NONE) {
            *c = count;
            count += 1;
        }

        let mut contracted = vec![vec![None; count]; count];
        for (u, row) in w.iter().enumerate() {
            for (v, cell) in row.iter().enumerate() {
                let Some(c) = *cell else { continue };
                let (cu, cv) = (component[u], component[v]);
                if u == v || v == root || cu == cv {
                    continue;
                }
                let reduced = c - in_weight[v];
                let slot: &mut Option<W> = &mut contracted[cu][cv];
                if slot.is_none_or(|old| reduced < old) {
                    *slot = Some(reduced);
                }
            }
        }
        n = count;
        w = contracted;
        root = component[root];
    }
}

/// Cheapest in-tree rooted at `root`: every other vertex keeps one outgoing
/// edge and all paths lead to the root. `weights[u][v]` is the cost of
/// `u -> v`.
pub fn min_in_tree_weight<W>(weights: &[Vec<Option<W>>], root: usize) -> Option<W>
where
    W: Copy + Ord + Add<Output = W> + Sub<Output = W> + Zero,
{
    let n = weights.len();
    let transposed: Vec<Vec<Option<W>>> = (0..n).map(|v| (0..n).map(|u| weights[u][v]).collect()).collect();
    min_arborescence_weight(&transposed, root)
}
