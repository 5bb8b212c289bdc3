//! Adversary models: fixed, uniformly random, and mobile (state-dependent)
//! influence sets, plus the ring policies used to realize the susceptibility
//! thresholds.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{Action, JointAction};
use crate::graph::{AgentSet, Graph};

/// Mobile policies are tabulated over all `2^n` joint actions.
pub const MAX_POLICY_AGENTS: usize = 24;

/// A total map from joint actions to influence sets of size `k`, stored as a
/// table indexed by the joint-action bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct MobilePolicy {
    n: usize,
    k: usize,
    name: String,
    table: Arc<Vec<AgentSet>>,
}

impl MobilePolicy {
    pub fn from_fn<F>(n: usize, k: usize, name: impl Into<String>, mut policy: F) -> Result<Self>
    where
        F: FnMut(JointAction) -> AgentSet,
    {
        if n > MAX_POLICY_AGENTS {
            return Err(Error::TooLarge { what: "mobile policy", n, cap: MAX_POLICY_AGENTS });
        }
        check_capability(n, k)?;
        let full = AgentSet::full(n);
        let mut table = Vec::with_capacity(1 << n);
        for index in 0..1usize << n {
            let a = JointAction::from_index(n, index);
            let s = policy(a);
            if s.len() != k || s.union(full) != full {
                return Err(Error::InvalidAdversary(format!(
                    "policy maps {} to {}, expected {} agents in 0..{}",
                    a, s, k, n
                )));
            }
            table.push(s);
        }
        Ok(MobilePolicy { n, k, name: name.into(), table: Arc::new(table) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn capability(&self) -> usize {
        self.k
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn influence(&self, a: JointAction) -> AgentSet {
        self.table[a.index()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryModel {
    /// The same influence set at every step.
    FixedIntelligent(AgentSet),
    /// A fresh uniformly random `k`-subset of `0..n` at every step.
    UniformRandom { n: usize, k: usize },
    /// Influence set chosen as a function of the current joint action.
    MobileIntelligent(MobilePolicy),
}

impl AdversaryModel {
    pub fn fixed(n: usize, s: AgentSet) -> Result<Self> {
        if s.union(AgentSet::full(n)) != AgentSet::full(n) {
            return Err(Error::InvalidAdversary(format!("{} not within 0..{}", s, n)));
        }
        Ok(AdversaryModel::FixedIntelligent(s))
    }

    pub fn uniform_random(n: usize, k: usize) -> Result<Self> {
        check_capability(n, k)?;
        Ok(AdversaryModel::UniformRandom { n, k })
    }

    pub fn capability(&self) -> usize {
        match self {
            AdversaryModel::FixedIntelligent(s) => s.len(),
            AdversaryModel::UniformRandom { k, .. } => *k,
            AdversaryModel::MobileIntelligent(p) => p.capability(),
        }
    }

    /// Short type tag: `FI`, `UR` or `MI`.
    pub fn kind(&self) -> &'static str {
        match self {
            AdversaryModel::FixedIntelligent(_) => "FI",
            AdversaryModel::UniformRandom { .. } => "UR",
            AdversaryModel::MobileIntelligent(_) => "MI",
        }
    }

    /// Checks that the model is usable with graph `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let n = g.n();
        match self {
            AdversaryModel::FixedIntelligent(s) => {
                if s.union(g.agents()) != g.agents() {
                    return Err(Error::InvalidAdversary(format!("{} not within 0..{}", s, n)));
                }
            }
            AdversaryModel::UniformRandom { n: m, .. } | AdversaryModel::MobileIntelligent(MobilePolicy { n: m, .. }) => {
                if *m != n {
                    return Err(Error::InvalidAdversary(format!(
                        "adversary built for {} agents, graph has {}",
                        m, n
                    )));
                }
            }
        }
        Ok(())
    }

    /// The influence set in force at state `a`. Only the uniformly random
    /// model consumes randomness.
    pub fn influence_at<R: Rng + ?Sized>(&self, a: JointAction, rng: &mut R) -> AgentSet {
        match self {
            AdversaryModel::FixedIntelligent(s) => *s,
            AdversaryModel::MobileIntelligent(p) => p.influence(a),
            AdversaryModel::UniformRandom { n, k } => {
                let mut s = AgentSet::EMPTY;
                for i in rand::seq::index::sample(rng, *n, *k).iter() {
                    s.insert(i);
                }
                s
            }
        }
    }
}

impl fmt::Display for AdversaryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryModel::FixedIntelligent(s) => write!(f, "FI{}", s),
            AdversaryModel::UniformRandom { k, .. } => write!(f, "UR({})", k),
            AdversaryModel::MobileIntelligent(p) => write!(f, "MI:{}({})", p.name(), p.capability()),
        }
    }
}

/// Command-line adversary description: `fi:even`, `fi:0,3,7`, `ur` or
/// `mi:balanced`. Capability comes separately except for an explicit set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdversarySpec {
    FixedEven,
    FixedSet(Vec<usize>),
    UniformRandom,
    MobileBalanced,
}

impl AdversarySpec {
    /// Builds the model on `g`. `k` is required except for explicit sets,
    /// where it must agree with the set size if given.
    pub fn build(&self, g: &Graph, k: Option<usize>) -> Result<AdversaryModel> {
        let need_k = || k.ok_or_else(|| Error::InvalidAdversary(format!("{} needs a capability k", self)));
        match self {
            AdversarySpec::FixedEven => AdversaryModel::fixed(g.n(), even_spread_set(g, need_k()?)?),
            AdversarySpec::FixedSet(agents) => {
                let s = AgentSet::from_indices(g.n(), agents.iter().copied())?;
                if let Some(k) = k.filter(|&k| k != s.len()) {
                    return Err(Error::InvalidAdversary(format!("{} has {} agents but k = {}", self, s.len(), k)));
                }
                AdversaryModel::fixed(g.n(), s)
            }
            AdversarySpec::UniformRandom => AdversaryModel::uniform_random(g.n(), need_k()?),
            AdversarySpec::MobileBalanced => Ok(AdversaryModel::MobileIntelligent(balanced_policy(g, need_k()?)?)),
        }
    }
}

impl FromStr for AdversarySpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let lower = text.trim().to_ascii_lowercase();
        match lower.as_str() {
            "fi:even" => Ok(AdversarySpec::FixedEven),
            "ur" => Ok(AdversarySpec::UniformRandom),
            "mi:balanced" | "mi" => Ok(AdversarySpec::MobileBalanced),
            _ => {
                let list = lower
                    .strip_prefix("fi:")
                    .ok_or_else(|| Error::Parse(format!("unknown adversary {:?}", text)))?;
                let agents = if list.is_empty() {
                    Vec::new()
                } else {
                    list.split(',')
                        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad agent index {:?}", p))))
                        .collect::<Result<Vec<_>>>()?
                };
                Ok(AdversarySpec::FixedSet(agents))
            }
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::FixedEven => f.write_str("fi:even"),
            AdversarySpec::FixedSet(agents) => {
                let parts: Vec<String> = agents.iter().map(|a| a.to_string()).collect();
                write!(f, "fi:{}", parts.join(","))
            }
            AdversarySpec::UniformRandom => f.write_str("ur"),
            AdversarySpec::MobileBalanced => f.write_str("mi:balanced"),
        }
    }
}

fn check_capability(n: usize, k: usize) -> Result<()> {
    if k > n {
        return Err(Error::InvalidAdversary(format!("capability {} exceeds {} agents", k, n)));
    }
    Ok(())
}

/// `k` agents spread as evenly as possible around the ring:
/// `{ floor(j n / k) : j = 0..k }`.
pub fn even_spread_set(g: &Graph, k: usize) -> Result<AgentSet> {
    if !g.is_ring() {
        return Err(Error::NotARing);
    }
    let n = g.n();
    check_capability(n, k)?;
    AgentSet::from_indices(n, (0..k).map(|j| j * n / k))
}

/// The longest maximal run of `x`-players on the ring as `(start, length)`,
/// wrapping past `n - 1`. Among runs of equal length the one with the smallest
/// start index wins. `None` when nobody plays `x` or everybody does (no run has
/// a boundary).
pub fn longest_x_chain(a: JointAction) -> Option<(usize, usize)> {
    let n = a.n();
    if a.is_all_x() || a.is_all_y() {
        return None;
    }
    let mut best: Option<(usize, usize)> = None;
    for start in 0..n {
        if a.action(start) != Action::X || a.action((start + n - 1) % n) != Action::X.other() {
            continue;
        }
        let mut len = 0;
        while a.action((start + len) % n) == Action::X {
            len += 1;
        }
        if best.is_none_or(|(_, l)| len > l) {
            best = Some((start, len));
        }
    }
    best
}

/// Runs of this length or longer get an attacker on their first agent.
const ATTACKED_CHAIN_LEN: usize = 2;

/// Influence set of the balanced mobile policy at state `a` on an `n`-ring.
///
/// With the longest `x`-chain `[i, j]`: a chain of two or more agents is
/// attacked at `i`, and with `k >= 3` also defended at `i - 1` and `j + 1`; a
/// single `x` at `i` is defended at `i - 1` and `i + 1` when `k >= 2`. Any
/// remaining slots go to the lowest-indexed agents not yet chosen.
pub fn balanced_set(n: usize, k: usize, a: JointAction) -> AgentSet {
    let mut pinned: Vec<usize> = Vec::with_capacity(3);
    if let Some((i, len)) = longest_x_chain(a) {
        let j = (i + len - 1) % n;
        let before = (i + n - 1) % n;
        let after = (j + 1) % n;
        if len >= ATTACKED_CHAIN_LEN {
            if k >= 3 {
                pinned.extend([before, i, after]);
            } else if k >= 1 {
                pinned.push(i);
            }
        } else if len == 1 && k >= 2 {
            pinned.extend([before, after]);
        }
    }
    let mut s = AgentSet::EMPTY;
    for agent in pinned {
        if s.len() < k {
            s.insert(agent);
        }
    }
    let mut next = 0;
    while s.len() < k {
        if !s.contains(next) {
            s.insert(next);
        }
        next += 1;
    }
    s
}

/// The balanced mobile policy tabulated over all joint actions of ring `g`.
pub fn balanced_policy(g: &Graph, k: usize) -> Result<MobilePolicy> {
    if !g.is_ring() {
        return Err(Error::NotARing);
    }
    let n = g.n();
    if k == 0 {
        return Err(Error::InvalidAdversary("balanced policy needs k >= 1".into()));
    }
    MobilePolicy::from_fn(n, k, "balanced", |a| balanced_set(n, k, a))
}

/// A policy that ignores the state.
pub fn constant_policy(n: usize, s: AgentSet) -> Result<MobilePolicy> {
    MobilePolicy::from_fn(n, s.len(), format!("const{}", s), |_| s)
}
