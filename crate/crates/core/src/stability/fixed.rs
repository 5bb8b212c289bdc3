//! Exact conditions for a fixed influence set. With `S` fixed the game is a
//! potential game and log-linear learning selects the potential maximizers,
//! so stability of a consensus reduces to comparing it against every other
//! joint action, written here as inequalities over the set `T` of agents that
//! deviate.

use std::cmp::Ordering;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::game::{PayoffGain, Rational};
use crate::graph::{AgentSet, Graph};

pub const DEFAULT_FI_ENUMERATION_CAP: usize = 16;
pub const DEFAULT_FI_SUSCEPTIBILITY_CAP: usize = 12;

fn check_cap(g: &Graph, cap: usize, what: &'static str) -> Result<()> {
    if g.n() > cap {
        return Err(Error::TooLarge { what, n: g.n(), cap });
    }
    Ok(())
}

/// `x` strictly beats every state whose `y`-players are a nonempty `T`:
/// `alpha d(T, N) + d(T, N\T) - |T ∩ S| > 0`.
pub fn check_x_stable_fi(g: &Graph, s: AgentSet, alpha: PayoffGain) -> Result<bool> {
    check_x_stable_fi_capped(g, s, alpha, DEFAULT_FI_ENUMERATION_CAP)
}

pub fn check_x_stable_fi_capped(g: &Graph, s: AgentSet, alpha: PayoffGain, cap: usize) -> Result<bool> {
    check_cap(g, cap, "fixed-adversary x test")?;
    let n = g.n();
    let all = g.agents();
    let a = alpha.value();
    Ok((1u64..1 << n).all(|bits| {
        let t = AgentSet::from_bits(bits);
        let margin = a * g.edge_boundary(t, all) as i64 + (g.edge_boundary(t, t.complement(n)) as i64)
            - (t.intersection(s).len() as i64);
        margin > Rational::zero()
    }))
}

/// `y` strictly beats every state whose `y`-players are a proper subset `T`:
/// `d(T, N\T) + |S| - |T ∩ S| - alpha d(N\T, N\T) > 0`.
pub fn check_y_stable_fi(g: &Graph, s: AgentSet, alpha: PayoffGain) -> Result<bool> {
    check_y_stable_fi_capped(g, s, alpha, DEFAULT_FI_ENUMERATION_CAP)
}

pub fn check_y_stable_fi_capped(g: &Graph, s: AgentSet, alpha: PayoffGain, cap: usize) -> Result<bool> {
    check_cap(g, cap, "fixed-adversary y test")?;
    let n = g.n();
    let k = s.len() as i64;
    let a = alpha.value();
    let full = (1u64 << n) - 1;
    Ok((0..full).all(|bits| {
        let t = AgentSet::from_bits(bits);
        let rest = t.complement(n);
        let margin = Rational::from_integer(g.edge_boundary(t, rest) as i64 + k - t.intersection(s).len() as i64)
            - a * g.edge_boundary(rest, rest) as i64;
        margin > Rational::zero()
    }))
}

/// `num / den` with `den = 0` meaning `+inf` (numerators here are never
/// negative, and `0 / 0` is stored as `0 / 1`).
#[derive(Clone, Copy, Debug)]
struct Bound {
    num: i64,
    den: i64,
}

impl Bound {
    fn cmp(self, other: Bound) -> Ordering {
        match (self.den, other.den) {
            (0, 0) => Ordering::Equal,
            (0, _) => Ordering::Greater,
            (_, 0) => Ordering::Less,
            _ => (self.num * other.den).cmp(&(other.num * self.den)),
        }
    }
}

/// Largest `alpha` threshold a fixed set of `k` agents can impose, with the
/// set that achieves it. `y` is strictly stable under that set exactly for
/// `alpha` below the threshold. `None` as threshold means no finite bound
/// (an edgeless graph).
pub fn susceptibility_fi_exact(g: &Graph, k: usize) -> Result<(Option<Rational>, AgentSet)> {
    susceptibility_fi_exact_capped(g, k, DEFAULT_FI_SUSCEPTIBILITY_CAP)
}

pub fn susceptibility_fi_exact_capped(g: &Graph, k: usize, cap: usize) -> Result<(Option<Rational>, AgentSet)> {
    check_cap(g, cap, "fixed-adversary susceptibility")?;
    let n = g.n();
    if k > n {
        return Err(Error::InvalidAdversary(format!("capability {} exceeds {} agents", k, n)));
    }
    let full = (1u64 << n) - 1;
    // per proper T: (bits, d(T, N\T), d(N\T, N\T)), tightest-looking first so
    // the inner minimum drops below the running best early
    let mut cuts: Vec<(u64, i64, i64)> = (0..full)
        .map(|bits| {
            let t = AgentSet::from_bits(bits);
            let rest = t.complement(n);
            (bits, g.edge_boundary(t, rest) as i64, g.edge_boundary(rest, rest) as i64)
        })
        .collect();
    cuts.sort_by(|x, y| Bound { num: x.1, den: x.2 }.cmp(Bound { num: y.1, den: y.2 }));

    let mut best: Option<(Bound, AgentSet)> = None;
    for s in subsets_of_size(n, k) {
        let mut worst = Bound { num: 1, den: 0 };
        for &(bits, cut, inner) in &cuts {
            let hits = (bits & s.bits()).count_ones() as i64;
            let num = cut + k as i64 - hits;
            // a zero margin with nothing to scale by is a tie at every alpha
            let b = if num == 0 && inner == 0 { Bound { num: 0, den: 1 } } else { Bound { num, den: inner } };
            if b.cmp(worst) == Ordering::Less {
                worst = b;
                if best.is_some_and(|(top, _)| worst.cmp(top) != Ordering::Greater) {
                    break;
                }
            }
        }
        if best.is_none_or(|(top, _)| worst.cmp(top) == Ordering::Greater) {
            best = Some((worst, s));
        }
    }
    let (bound, witness) = best.expect("at least one subset");
    let threshold = (bound.den != 0).then(|| Rational::new(bound.num, bound.den));
    if let Some(t) = threshold {
        if g.edge_count() > 0 {
            debug_assert!(t <= Rational::new(k as i64, g.edge_count() as i64));
        }
    }
    Ok((threshold, witness))
}

/// All `k`-subsets of `0..n` in lexicographic order of their index lists.
fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = AgentSet> {
    let mut current: Option<Vec<usize>> = (k <= n).then(|| (0..k).collect());
    std::iter::from_fn(move || {
        let out = current.clone()?;
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                current = None;
                break;
            }
            i -= 1;
            if next[i] < n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                current = Some(next);
                break;
            }
        }
        Some(AgentSet::from_indices(n, out).expect("indices below n"))
    })
}
