//! Susceptibility: the largest payoff gain below which an adversary of a given
//! type and capability can make all-`y` strictly stochastically stable.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fixed::{check_y_stable_fi, susceptibility_fi_exact, DEFAULT_FI_ENUMERATION_CAP};
use super::stochastically_stable_set;
use crate::adversary::{balanced_policy, AdversaryModel};
use crate::error::{Error, Result};
use crate::game::{JointAction, PayoffGain, Rational};
use crate::graph::{AgentSet, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdversaryType {
    #[serde(rename = "FI")]
    Fixed,
    #[serde(rename = "UR")]
    UniformRandom,
    #[serde(rename = "MI")]
    Mobile,
}

impl AdversaryType {
    pub const ALL: [AdversaryType; 3] = [AdversaryType::Fixed, AdversaryType::UniformRandom, AdversaryType::Mobile];
}

impl fmt::Display for AdversaryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdversaryType::Fixed => "FI",
            AdversaryType::UniformRandom => "UR",
            AdversaryType::Mobile => "MI",
        })
    }
}

impl FromStr for AdversaryType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fi" | "fixed" => Ok(AdversaryType::Fixed),
            "ur" | "uniform" => Ok(AdversaryType::UniformRandom),
            "mi" | "mobile" => Ok(AdversaryType::Mobile),
            _ => Err(Error::Parse(format!("unknown adversary type {:?}", s))),
        }
    }
}

/// Where the switch from "all-`y` strictly stable" to "not" happens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Threshold {
    Exact(Rational),
    /// `y` strictly stable at `below`, not at `above`.
    Bracket { below: Rational, above: Rational },
    /// Strictly stable at every grid point up to this one.
    AtLeast(Rational),
    /// Not strictly stable even at the smallest grid point.
    AtMost(Rational),
    /// No finite threshold.
    Unbounded,
}

impl Threshold {
    pub fn lower(&self) -> Option<Rational> {
        match *self {
            Threshold::Exact(v) | Threshold::AtLeast(v) => Some(v),
            Threshold::Bracket { below, .. } => Some(below),
            Threshold::AtMost(_) | Threshold::Unbounded => None,
        }
    }

    pub fn upper(&self) -> Option<Rational> {
        match *self {
            Threshold::Exact(v) | Threshold::AtMost(v) => Some(v),
            Threshold::Bracket { above, .. } => Some(above),
            Threshold::AtLeast(_) | Threshold::Unbounded => None,
        }
    }

    /// Whether `value` is consistent with this threshold.
    pub fn contains(&self, value: Rational) -> bool {
        match *self {
            Threshold::Exact(v) => v == value,
            Threshold::Bracket { below, above } => below < value && value <= above,
            Threshold::AtLeast(v) => value > v,
            Threshold::AtMost(v) => value <= v,
            Threshold::Unbounded => false,
        }
    }

    /// A point estimate: the exact value or the middle of the bracket.
    pub fn estimate(&self) -> Option<f64> {
        let f = |r: Rational| *r.numer() as f64 / *r.denom() as f64;
        match *self {
            Threshold::Exact(v) => Some(f(v)),
            Threshold::Bracket { below, above } => Some((f(below) + f(above)) / 2.0),
            _ => None,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Exact(v) => write!(f, "{}", v),
            Threshold::Bracket { below, above } => write!(f, "({}, {}]", below, above),
            Threshold::AtLeast(v) => write!(f, "> {}", v),
            Threshold::AtMost(v) => write!(f, "<= {}", v),
            Threshold::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// What realizes the threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    FixedSet(AgentSet),
    Policy(String),
    UniformRandom,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::FixedSet(s) => write!(f, "{}", s),
            Witness::Policy(name) => f.write_str(name),
            Witness::UniformRandom => f.write_str("uniform"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SusceptibilityResult {
    pub adversary: AdversaryType,
    pub k: usize,
    pub threshold: Threshold,
    pub witness: Witness,
}

/// Whether all-`y` is the unique stochastically stable state.
pub fn y_strictly_stable(g: &Graph, model: &AdversaryModel, alpha: PayoffGain) -> Result<bool> {
    match model {
        AdversaryModel::FixedIntelligent(s) if g.n() <= DEFAULT_FI_ENUMERATION_CAP => {
            model.validate(g)?;
            check_y_stable_fi(g, *s, alpha)
        }
        _ => Ok(stochastically_stable_set(g, model, alpha)?.is_strictly(JointAction::all_y(g.n()))),
    }
}

/// `j / (4n)` for `j = 1..=8n`: payoff gains in `(0, 2]`.
pub fn default_grid(n: usize) -> Vec<Rational> {
    let d = 4 * n as i64;
    (1..=2 * d).map(|j| Rational::new(j, d)).collect()
}

/// Locates the stability switch of `model` on an ascending grid.
pub fn susceptibility_bracket(g: &Graph, model: &AdversaryModel, grid: &[Rational]) -> Result<Threshold> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parse("payoff grid must be nonempty and strictly ascending".into()));
    }
    let stable = grid
        .par_iter()
        .map(|&a| y_strictly_stable(g, model, PayoffGain::new(a)?))
        .collect::<Result<Vec<bool>>>()?;
    let first_lost = stable.iter().position(|s| !s);
    let Some(f) = first_lost else {
        return Ok(Threshold::AtLeast(*grid.last().expect("nonempty")));
    };
    if let Some(back) = stable[f..].iter().position(|&s| s) {
        return Err(Error::NonMonotone(format!(
            "{}: all-y strictly stable again at alpha = {} after losing it at {}",
            model,
            grid[f + back],
            grid[f]
        )));
    }
    Ok(if f == 0 {
        Threshold::AtMost(grid[0])
    } else {
        Threshold::Bracket { below: grid[f - 1], above: grid[f] }
    })
}

fn model_for(g: &Graph, ty: AdversaryType, k: usize) -> Result<AdversaryModel> {
    match ty {
        AdversaryType::UniformRandom => AdversaryModel::uniform_random(g.n(), k),
        AdversaryType::Mobile => Ok(AdversaryModel::MobileIntelligent(balanced_policy(g, k)?)),
        AdversaryType::Fixed => Err(Error::InvalidAdversary("fixed adversaries are solved exactly".into())),
    }
}

/// Susceptibility of `g` to an adversary of type `ty` with capability `k`.
/// Fixed adversaries are solved exactly by enumeration; uniformly random ones
/// directly, and mobile ones through the balanced ring policy, on `grid`.
pub fn susceptibility_scan(g: &Graph, ty: AdversaryType, k: usize, grid: &[Rational]) -> Result<SusceptibilityResult> {
    let (threshold, witness) = match ty {
        AdversaryType::Fixed => {
            let (t, s) = susceptibility_fi_exact(g, k)?;
            (t.map_or(Threshold::Unbounded, Threshold::Exact), Witness::FixedSet(s))
        }
        _ => {
            let model = model_for(g, ty, k)?;
            let witness = match &model {
                AdversaryModel::MobileIntelligent(p) => Witness::Policy(p.name().to_string()),
                _ => Witness::UniformRandom,
            };
            (susceptibility_bracket(g, &model, grid)?, witness)
        }
    };
    Ok(SusceptibilityResult { adversary: ty, k, threshold, witness })
}

/// Scan on [`default_grid`], then narrow a bracket with steps of `1/(40n)`.
pub fn susceptibility(g: &Graph, ty: AdversaryType, k: usize) -> Result<SusceptibilityResult> {
    let coarse = susceptibility_scan(g, ty, k, &default_grid(g.n()))?;
    let Threshold::Bracket { below, above } = coarse.threshold else {
        return Ok(coarse);
    };
    let step = Rational::new(1, 40 * g.n() as i64);
    let mut fine = vec![below];
    while *fine.last().expect("nonempty") + step < above {
        fine.push(*fine.last().expect("nonempty") + step);
    }
    fine.push(above);
    susceptibility_scan(g, ty, k, &fine)
}
