//! Experiment runners behind the command-line tool: susceptibility versus
//! capability on a ring, stationary fraction of `y`-players versus
//! rationality, exact hitting times from all-`x` to all-`y`, and the
//! threshold checks on rings and random graphs. Every row carries its full
//! configuration so output files are self-describing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{balanced_policy, even_spread_set, AdversaryModel};
use crate::chain::{build_transition_matrix, expected_fraction_y, expected_hitting_time, stationary_distribution};
use crate::dynamics::{hitting_time_mc, Rationality, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::game::{parse_rational, JointAction, PayoffGain, Rational};
use crate::graph::{Graph, GraphSpec};
use crate::stability::{
    check_y_stable_fi, stochastically_stable_set, susceptibility, susceptibility_fi_exact, AdversaryType,
    StabilityReport, Threshold,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Fig2,
    Fig3,
    Fig4,
    Theorems,
    Custom,
}

/// TOML experiment description. Payoff gains are strings so that `"2/5"` and
/// `"0.4"` both parse exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub adversaries: Vec<String>,
    #[serde(default)]
    pub alphas: Vec<String>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replicas: Option<usize>,
    #[serde(default)]
    pub output: Option<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha_values()?;
        if self.betas.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return Err(Error::Parse("rationalities must be finite and nonnegative".into()));
        }
        if self.replicas.is_some() && self.seed.is_none() {
            return Err(Error::Parse("a seed is required when replicas are requested".into()));
        }
        Ok(())
    }

    pub fn alpha_values(&self) -> Result<Vec<PayoffGain>> {
        self.alphas.iter().map(|a| PayoffGain::new(parse_rational(a)?)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig2Row {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "type")]
    pub adversary: AdversaryType,
    /// Exact value, or the middle of the bracket.
    pub susceptibility: f64,
    pub lower: String,
    pub upper: String,
    pub method: &'static str,
    pub witness: String,
}

/// Susceptibility of the `n`-ring for every type and `k = 1..n-1`.
pub fn run_fig2(n: usize) -> Result<Vec<Fig2Row>> {
    let g = Graph::ring(n)?;
    let points: Vec<(AdversaryType, usize)> =
        AdversaryType::ALL.iter().flat_map(|&t| (1..n).map(move |k| (t, k))).collect();
    points
        .par_iter()
        .map(|&(ty, k)| {
            let r = susceptibility(&g, ty, k)?;
            let show = |v: Option<Rational>| v.map_or_else(String::new, |v| v.to_string());
            Ok(Fig2Row {
                n,
                k,
                adversary: ty,
                susceptibility: r.threshold.estimate().unwrap_or(f64::NAN),
                lower: show(r.threshold.lower()),
                upper: show(r.threshold.upper()),
                method: if matches!(r.threshold, Threshold::Exact(_)) { "exact" } else { "bracket" },
                witness: r.witness.to_string(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig3Row {
    pub graph: String,
    pub k: usize,
    pub alpha: f64,
    pub alpha_exact: String,
    pub beta: f64,
    pub adversary: &'static str,
    pub influence: String,
    pub expected_fraction_y: f64,
}

/// Exact stationary fraction of `y`-players on the `n`-ring under a fixed
/// (evenly spread) and a uniformly random adversary of capability `k`.
pub fn run_fig3(n: usize, k: usize, alphas: &[PayoffGain], betas: &[f64]) -> Result<Vec<Fig3Row>> {
    let g = Graph::ring(n)?;
    let models = [
        AdversaryModel::fixed(n, even_spread_set(&g, k)?)?,
        AdversaryModel::uniform_random(n, k)?,
    ];
    let mut points = Vec::new();
    for &alpha in alphas {
        for model in &models {
            for &beta in betas {
                points.push((alpha, model, beta));
            }
        }
    }
    points
        .par_iter()
        .map(|&(alpha, model, beta)| {
            let m = build_transition_matrix(&g, model, alpha, Rationality::new(beta)?)?;
            let pi = stationary_distribution(&m)?;
            Ok(Fig3Row {
                graph: format!("ring{}", n),
                k,
                alpha: alpha.to_f64(),
                alpha_exact: alpha.to_string(),
                beta,
                adversary: model.kind(),
                influence: model.to_string(),
                expected_fraction_y: expected_fraction_y(&pi),
            })
        })
        .collect()
}

/// How fig4 hitting times are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HittingMethod {
    Exact,
    MonteCarlo { replicas: usize, seed: u64, max_steps: u64 },
}

impl HittingMethod {
    pub fn monte_carlo(replicas: usize, seed: u64) -> Self {
        HittingMethod::MonteCarlo { replicas, seed, max_steps: DEFAULT_MAX_STEPS }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig4Row {
    pub graph: String,
    pub beta: f64,
    #[serde(rename = "type")]
    pub adversary: &'static str,
    pub k: usize,
    pub alpha: f64,
    pub alpha_exact: String,
    pub hitting_time: f64,
    pub method: &'static str,
    pub std_error: Option<f64>,
    pub censored: Option<usize>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
}

/// The adversary of each type used for hitting times: evenly spread fixed
/// set, uniform random, balanced mobile policy.
pub fn ring_adversary(g: &Graph, ty: AdversaryType, k: usize) -> Result<AdversaryModel> {
    match ty {
        AdversaryType::Fixed => AdversaryModel::fixed(g.n(), even_spread_set(g, k)?),
        AdversaryType::UniformRandom => AdversaryModel::uniform_random(g.n(), k),
        AdversaryType::Mobile => Ok(AdversaryModel::MobileIntelligent(balanced_policy(g, k)?)),
    }
}

/// Expected steps from all-`x` to all-`y` on the `n`-ring for every type,
/// capability and payoff gain. Rows are ordered by type, then `k`, then
/// `alpha`, whatever order the worker pool finishes in.
pub fn run_fig4(n: usize, beta: f64, ks: &[usize], alphas: &[PayoffGain], method: HittingMethod) -> Result<Vec<Fig4Row>> {
    let g = Graph::ring(n)?;
    let rationality = Rationality::new(beta)?;
    let mut points = Vec::new();
    for ty in AdversaryType::ALL {
        for &k in ks {
            for &alpha in alphas {
                points.push((ty, k, alpha));
            }
        }
    }
    points
        .par_iter()
        .map(|&(ty, k, alpha)| {
            let model = ring_adversary(&g, ty, k)?;
            let (x, y) = (JointAction::all_x(n), JointAction::all_y(n));
            let base = Fig4Row {
                graph: format!("ring{}", n),
                beta,
                adversary: model.kind(),
                k,
                alpha: alpha.to_f64(),
                alpha_exact: alpha.to_string(),
                hitting_time: f64::NAN,
                method: "exact",
                std_error: None,
                censored: None,
                replicas: None,
                seed: None,
            };
            Ok(match method {
                HittingMethod::Exact => {
                    let m = build_transition_matrix(&g, &model, alpha, rationality)?;
                    Fig4Row { hitting_time: expected_hitting_time(&m, x, y)?, ..base }
                }
                HittingMethod::MonteCarlo { replicas, seed, max_steps } => {
                    let est = hitting_time_mc(&g, &model, alpha, rationality, x, y, replicas, seed, max_steps)?;
                    Fig4Row {
                        hitting_time: est.mean,
                        method: "mc",
                        std_error: Some(est.std_error),
                        censored: Some(est.censored),
                        replicas: Some(replicas),
                        seed: Some(seed),
                        ..base
                    }
                }
            })
        })
        .collect()
}

/// Outcome of one threshold check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoremCheck {
    pub check: &'static str,
    pub instance: String,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

impl TheoremCheck {
    fn new(check: &'static str, instance: String, expected: String, observed: String) -> Self {
        let pass = expected == observed;
        TheoremCheck { check, instance, expected, observed, pass }
    }
}

/// Expected switch point of the balanced mobile policy on an `n`-ring.
pub fn mobile_ring_threshold(n: usize, k: usize) -> Rational {
    match k {
        1 | 2 => Rational::new(k as i64, k as i64 + 1),
        _ if k < n => Rational::new(n as i64 - 1, n as i64),
        _ => Rational::from_integer(1),
    }
}

fn winner_label(report: &StabilityReport) -> String {
    match report.strict_winner() {
        Some(a) if a.is_all_x() => "x".into(),
        Some(a) if a.is_all_y() => "y".into(),
        Some(a) => a.to_string(),
        None => "tie".into(),
    }
}

fn side_checks(
    check: &'static str,
    g: &Graph,
    model: &AdversaryModel,
    threshold: Rational,
    offset: Rational,
) -> Result<Vec<TheoremCheck>> {
    let mut out = Vec::new();
    for (alpha, expected) in [(threshold - offset, "y"), (threshold + offset, "x")] {
        let report = stochastically_stable_set(g, model, PayoffGain::new(alpha)?)?;
        out.push(TheoremCheck::new(
            check,
            format!("ring{} {} alpha={}", g.n(), model, alpha),
            expected.into(),
            winner_label(&report),
        ));
    }
    Ok(out)
}

/// Canonical comparison key for k-invariance: classes, potential order and
/// stable set.
fn report_shape(report: &StabilityReport) -> String {
    let classes: Vec<String> = report
        .classes
        .classes()
        .iter()
        .map(|c| c.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("|"))
        .collect();
    let order: Vec<String> = report.potential_order().iter().map(|c| c.to_string()).collect();
    let stable: Vec<String> = report.stable.iter().map(|a| a.to_string()).collect();
    format!("classes=[{}] order=[{}] stable=[{}]", classes.join(","), order.join(","), stable.join(","))
}

/// Threshold checks on rings of each size in `ns` and on `random_graphs`
/// random connected graphs (sizes 4..=7, drawn from `seed`).
pub fn run_theorems(ns: &[usize], random_graphs: usize, seed: u64) -> Result<Vec<TheoremCheck>> {
    let mut jobs: Vec<Box<dyn Fn() -> Result<Vec<TheoremCheck>> + Send + Sync>> = Vec::new();
    for &n in ns {
        jobs.push(Box::new(move || ring_fixed_checks(n)));
        jobs.push(Box::new(move || ring_uniform_checks(n)));
        jobs.push(Box::new(move || ring_mobile_checks(n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphas = [Rational::new(1, 5), Rational::new(2, 5), Rational::new(1, 2), Rational::new(3, 5), Rational::new(4, 5)];
    for r in 0..random_graphs {
        let n = 4 + r % 4;
        let g = Graph::random_connected(n, 0.3, &mut rng)?;
        jobs.push(Box::new(move || random_graph_checks(r, &g, &alphas)));
    }
    let results = jobs.par_iter().map(|job| job()).collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().flatten().collect())
}

fn ring_fixed_checks(n: usize) -> Result<Vec<TheoremCheck>> {
    let g = Graph::ring(n)?;
    let mut out = Vec::new();
    for k in 1..=n {
        let (t, _) = susceptibility_fi_exact(&g, k)?;
        out.push(TheoremCheck::new(
            "ring-fixed-susceptibility",
            format!("ring{} FI({})", n, k),
            Rational::new(k as i64, n as i64).to_string(),
            t.map_or("unbounded".into(), |t| t.to_string()),
        ));
        let s = even_spread_set(&g, k)?;
        let below = Rational::new(k as i64, n as i64) - Rational::new(1, 4 * n as i64 * (k as i64 + 1));
        out.push(TheoremCheck::new(
            "ring-fixed-even-spread",
            format!("ring{} FI{} alpha={}", n, s, below),
            "true".into(),
            check_y_stable_fi(&g, s, PayoffGain::new(below)?)?.to_string(),
        ));
    }
    Ok(out)
}

fn ring_uniform_checks(n: usize) -> Result<Vec<TheoremCheck>> {
    let g = Graph::ring(n)?;
    let offset = Rational::new(1, 4 * n as i64);
    let mut out = Vec::new();
    for k in 1..=n {
        let model = AdversaryModel::uniform_random(n, k)?;
        let threshold = if k < n { Rational::new(1, 2) } else { Rational::from_integer(1) };
        out.extend(side_checks("ring-uniform-threshold", &g, &model, threshold, offset)?);
    }
    Ok(out)
}

fn ring_mobile_checks(n: usize) -> Result<Vec<TheoremCheck>> {
    let g = Graph::ring(n)?;
    let mut out = Vec::new();
    for k in 1..n {
        let model = AdversaryModel::MobileIntelligent(balanced_policy(&g, k)?);
        let offset = Rational::new(1, 4 * n as i64 * (k as i64 + 1));
        out.extend(side_checks("ring-mobile-threshold", &g, &model, mobile_ring_threshold(n, k), offset)?);
    }
    Ok(out)
}

fn random_graph_checks(index: usize, g: &Graph, alphas: &[Rational]) -> Result<Vec<TheoremCheck>> {
    let n = g.n();
    let label = format!("random#{} n={} edges={:?}", index, n, g.edges());
    let mut out = Vec::new();
    for k in 1..n {
        let (t, _) = susceptibility_fi_exact(g, k)?;
        let bound = Rational::new(k as i64, g.edge_count() as i64);
        out.push(TheoremCheck::new(
            "fixed-edge-density-bound",
            format!("{} k={}", label, k),
            format!("<= {}", bound),
            match t {
                Some(t) if t <= bound => format!("<= {}", bound),
                Some(t) => t.to_string(),
                None => "unbounded".into(),
            },
        ));
    }
    for &alpha in alphas {
        let shape = |k| -> Result<String> {
            let model = AdversaryModel::uniform_random(n, k)?;
            Ok(report_shape(&stochastically_stable_set(g, &model, PayoffGain::new(alpha)?)?))
        };
        let reference = shape(1)?;
        for k in 2..n {
            out.push(TheoremCheck::new(
                "uniform-capability-invariance",
                format!("{} alpha={} k=1 vs k={}", label, alpha, k),
                reference.clone(),
                shape(k)?,
            ));
        }
    }
    Ok(out)
}
