//! The two-action coordination game played on every edge, agent utilities with
//! and without adversarial influence, and the potential of the influenced game.

use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentSet, Graph, MAX_AGENTS};

/// Exact rational scalar used for payoffs, potentials and resistances.
pub type Rational = Rational64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    X,
    Y,
}

impl Action {
    pub fn other(self) -> Action {
        match self {
            Action::X => Action::Y,
            Action::Y => Action::X,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::X => "x",
            Action::Y => "y",
        })
    }
}

/// Payoff gain `alpha >= 0`: the premium of coordinating on `x` over `y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PayoffGain(Rational);

impl PayoffGain {
    pub fn new(alpha: Rational) -> Result<Self> {
        if alpha < Rational::zero() {
            return Err(Error::Parse(format!("payoff gain must be >= 0, got {}", alpha)));
        }
        Ok(PayoffGain(alpha))
    }

    pub fn ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::Parse("zero denominator".into()));
        }
        PayoffGain::new(Rational::new(numer, denom))
    }

    pub fn value(self) -> Rational {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl FromStr for PayoffGain {
    type Err = Error;

    /// Accepts `"2/5"`, `"3"` or an exact decimal such as `"0.375"`.
    fn from_str(s: &str) -> Result<Self> {
        PayoffGain::new(parse_rational(s)?)
    }
}

impl fmt::Display for PayoffGain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parses a fraction `p/q` or a finite decimal exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {:?}", s));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    let (negative, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) || frac_part.len() > 15 {
        return Err(bad());
    }
    let int_value: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
    let denom = 10i64.pow(frac_part.len() as u32);
    let frac_value: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    let numer = int_value
        .checked_mul(denom)
        .and_then(|v| v.checked_add(frac_value))
        .ok_or_else(bad)?;
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Assignment of an action to each of `n` agents. Bit `i` set means agent `i`
/// plays `y`; the bitmask doubles as the Markov-chain state index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction {
    n: usize,
    bits: u64,
}

impl JointAction {
    pub fn all_x(n: usize) -> Self {
        JointAction { n, bits: 0 }
    }

    pub fn all_y(n: usize) -> Self {
        JointAction { n, bits: AgentSet::full(n).bits() }
    }

    /// Joint action whose `y`-players are exactly `ys`.
    pub fn with_y_set(n: usize, ys: AgentSet) -> Self {
        JointAction { n, bits: ys.bits() & AgentSet::full(n).bits() }
    }

    pub fn from_index(n: usize, index: usize) -> Self {
        debug_assert!(n <= MAX_AGENTS);
        JointAction { n, bits: index as u64 }
    }

    pub fn from_actions(actions: &[Action]) -> Result<Self> {
        if actions.is_empty() || actions.len() > MAX_AGENTS {
            return Err(Error::InvalidAction(format!("length {}", actions.len())));
        }
        let mut bits = 0u64;
        for (i, a) in actions.iter().enumerate() {
            if *a == Action::Y {
                bits |= 1 << i;
            }
        }
        Ok(JointAction { n: actions.len(), bits })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn index(self) -> usize {
        self.bits as usize
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn action(self, i: usize) -> Action {
        if self.bits >> i & 1 == 1 {
            Action::Y
        } else {
            Action::X
        }
    }

    pub fn with(self, i: usize, action: Action) -> Self {
        let bits = match action {
            Action::X => self.bits & !(1 << i),
            Action::Y => self.bits | (1 << i),
        };
        JointAction { n: self.n, bits }
    }

    pub fn flip(self, i: usize) -> Self {
        JointAction { n: self.n, bits: self.bits ^ (1 << i) }
    }

    pub fn y_set(self) -> AgentSet {
        AgentSet::from_bits(self.bits)
    }

    pub fn x_set(self) -> AgentSet {
        self.y_set().complement(self.n)
    }

    pub fn y_count(self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_all_x(self) -> bool {
        self.bits == 0
    }

    pub fn is_all_y(self) -> bool {
        self.bits == AgentSet::full(self.n).bits()
    }

    /// Number of agents whose actions differ.
    pub fn distance(self, other: JointAction) -> u32 {
        (self.bits ^ other.bits).count_ones()
    }
}

impl FromStr for JointAction {
    type Err = Error;

    /// Parses a string like `"xxyy"`; character `i` is agent `i`'s action.
    fn from_str(s: &str) -> Result<Self> {
        let actions = s
            .trim()
            .chars()
            .map(|c| match c {
                'x' | 'X' => Ok(Action::X),
                'y' | 'Y' => Ok(Action::Y),
                _ => Err(Error::InvalidAction(format!("unexpected {:?} in {:?}", c, s))),
            })
            .collect::<Result<Vec<_>>>()?;
        JointAction::from_actions(&actions)
    }
}

/// Serialized as its action string, agent 1 first.
impl Serialize for JointAction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", self.action(i))?;
        }
        Ok(())
    }
}

/// Edge payoff: `1 + alpha` for `(x, x)`, `1` for `(y, y)`, `0` otherwise.
pub fn pair_payoff(a: Action, b: Action, alpha: PayoffGain) -> Rational {
    match (a, b) {
        (Action::X, Action::X) => Rational::from_integer(1) + alpha.value(),
        (Action::Y, Action::Y) => Rational::from_integer(1),
        _ => Rational::zero(),
    }
}

/// Agent `i`'s utility if it played `action` while the others keep `a`.
pub fn utility_of(g: &Graph, a: JointAction, i: usize, action: Action, alpha: PayoffGain) -> Rational {
    let nb = g.neighbors(i);
    let y_neighbors = nb.intersection(a.y_set()).len() as i64;
    let x_neighbors = nb.len() as i64 - y_neighbors;
    match action {
        Action::X => (Rational::from_integer(1) + alpha.value()) * x_neighbors,
        Action::Y => Rational::from_integer(y_neighbors),
    }
}

/// Sum of edge payoffs over `i`'s neighbours.
pub fn utility(g: &Graph, a: JointAction, i: usize, alpha: PayoffGain) -> Rational {
    utility_of(g, a, i, a.action(i), alpha)
}

/// Utility with the adversary's bonus: agents in `s` gain 1 for playing `y`.
pub fn influenced_utility_of(
    g: &Graph,
    a: JointAction,
    s: AgentSet,
    i: usize,
    action: Action,
    alpha: PayoffGain,
) -> Rational {
    let base = utility_of(g, a, i, action, alpha);
    if action == Action::Y && s.contains(i) {
        base + 1
    } else {
        base
    }
}

pub fn influenced_utility(g: &Graph, a: JointAction, s: AgentSet, i: usize, alpha: PayoffGain) -> Rational {
    influenced_utility_of(g, a, s, i, a.action(i), alpha)
}

/// Potential of the influenced game, as half the sum of influenced utilities
/// with the adversary bonus counted twice.
pub fn potential(g: &Graph, a: JointAction, s: AgentSet, alpha: PayoffGain) -> Rational {
    let twice: Rational = (0..g.n())
        .map(|i| {
            let bonus = if s.contains(i) && a.action(i) == Action::Y { 2 } else { 0 };
            utility(g, a, i, alpha) + bonus
        })
        .sum();
    twice / 2
}

/// Same potential in edge-count form: `(1+alpha) d(X,X) + d(Y,Y) + |Y ∩ S|`.
pub fn potential_by_edges(g: &Graph, a: JointAction, s: AgentSet, alpha: PayoffGain) -> Rational {
    let xs = a.x_set();
    let ys = a.y_set();
    (Rational::from_integer(1) + alpha.value()) * g.edge_boundary(xs, xs) as i64
        + g.edge_boundary(ys, ys) as i64
        + ys.intersection(s).len() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p, d)
    }

    fn alpha(p: i64, d: i64) -> PayoffGain {
        PayoffGain::ratio(p, d).unwrap()
    }

    #[test]
    fn pair_payoff_matrix() {
        let a = alpha(1, 4);
        assert_eq!(pair_payoff(Action::X, Action::X, a), q(5, 4));
        assert_eq!(pair_payoff(Action::Y, Action::Y, a), q(1, 1));
        assert_eq!(pair_payoff(Action::X, Action::Y, a), q(0, 1));
        assert_eq!(pair_payoff(Action::Y, Action::X, a), q(0, 1));
    }

    #[test]
    fn utility_examples() {
        let g = Graph::ring(3).unwrap();
        let a = alpha(1, 3);
        for i in 0..3 {
            assert_eq!(utility(&g, JointAction::all_x(3), i, a), q(8, 3));
        }
        let g = Graph::ring(5).unwrap();
        let state: JointAction = "yxxyy".parse().unwrap();
        // agent 1: neighbours 0 (y) and 2 (x); one matching x neighbour
        assert_eq!(utility(&g, state, 1, a), q(4, 3));
        let g = Graph::new(3, &[(0, 1)]).unwrap();
        assert_eq!(utility(&g, JointAction::all_x(3), 2, a), q(0, 1));
    }

    #[test]
    fn influenced_utility_cases() {
        let g = Graph::ring(3).unwrap();
        let a = alpha(1, 2);
        let s = AgentSet::from_indices(3, [0]).unwrap();
        assert_eq!(influenced_utility(&g, JointAction::all_y(3), s, 0, a), q(3, 1));
        let mixed: JointAction = "xyy".parse().unwrap();
        assert_eq!(influenced_utility(&g, mixed, s, 0, a), utility(&g, mixed, 0, a));
        assert_eq!(influenced_utility(&g, mixed, s, 1, a), utility(&g, mixed, 1, a));
    }

    #[test]
    fn potential_examples() {
        let g = Graph::ring(6).unwrap();
        let a = alpha(2, 5);
        let s = AgentSet::from_indices(6, [1, 4]).unwrap();
        assert_eq!(potential(&g, JointAction::all_x(6), s, a), q(7, 5) * 6);
        assert_eq!(potential(&g, JointAction::all_y(6), s, a), q(8, 1));
        let g = Graph::ring(4).unwrap();
        let state: JointAction = "yyxx".parse().unwrap();
        let s = AgentSet::from_indices(4, [0]).unwrap();
        assert_eq!(potential(&g, state, s, alpha(1, 2)), q(7, 2));
        assert_eq!(potential_by_edges(&g, state, s, alpha(1, 2)), q(7, 2));
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("2/5").unwrap(), q(2, 5));
        assert_eq!(parse_rational("0.4").unwrap(), q(2, 5));
        assert_eq!(parse_rational("0.375").unwrap(), q(3, 8));
        assert_eq!(parse_rational("3").unwrap(), q(3, 1));
        assert_eq!(parse_rational(".5").unwrap(), q(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1e3").is_err());
        assert!("-0.1".parse::<PayoffGain>().is_err());
    }

    #[test]
    fn joint_action_text_roundtrip() {
        let a: JointAction = "xyyx".parse().unwrap();
        assert_eq!(a.index(), 0b0110);
        assert_eq!(a.to_string(), "xyyx");
        assert!("xqz".parse::<JointAction>().is_err());
        assert!(JointAction::all_y(4).is_all_y());
    }

    fn instance() -> impl Strategy<Value = (Graph, AgentSet, PayoffGain, u64)> {
        (2usize..=6).prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            (
                proptest::collection::vec(any::<bool>(), pairs.len()),
                any::<u64>(),
                0i64..40,
                1i64..20,
                any::<u64>(),
            )
                .prop_map(move |(keep, sbits, p, d, abits)| {
                    let edges: Vec<_> =
                        pairs.iter().zip(keep).filter(|(_, k)| *k).map(|(e, _)| *e).collect();
                    let g = Graph::new(n, &edges).unwrap();
                    let s = AgentSet::from_bits(sbits & g.agents().bits());
                    let a = abits & g.agents().bits();
                    (g, s, PayoffGain::ratio(p, d).unwrap(), a)
                })
        })
    }

    proptest! {
        #[test]
        fn potential_forms_agree((g, s, a, bits) in instance()) {
            let state = JointAction::with_y_set(g.n(), AgentSet::from_bits(bits));
            prop_assert_eq!(potential(&g, state, s, a), potential_by_edges(&g, state, s, a));
        }

        #[test]
        fn potential_tracks_unilateral_deviations((g, s, a, _bits) in instance()) {
            // exhaustive over states and deviating agents
            for index in 0..1usize << g.n() {
                let state = JointAction::from_index(g.n(), index);
                for i in 0..g.n() {
                    let next = state.flip(i);
                    let dphi = potential(&g, next, s, a) - potential(&g, state, s, a);
                    let du = influenced_utility(&g, next, s, i, a) - influenced_utility(&g, state, s, i, a);
                    prop_assert_eq!(dphi, du);
                }
            }
        }

        #[test]
        fn influence_only_adds((g, s, a, bits) in instance()) {
            let state = JointAction::with_y_set(g.n(), AgentSet::from_bits(bits));
            for i in 0..g.n() {
                let plain = utility(&g, state, i, a);
                let inf = influenced_utility(&g, state, s, i, a);
                prop_assert!(inf >= plain);
                let bonus = s.contains(i) && state.action(i) == Action::Y;
                prop_assert_eq!(inf != plain, bonus);
            }
        }
    }
}
