//! `coordgame`: simulate adversarially influenced coordination games, solve
//! their Markov chains exactly and reproduce the threshold experiments.
//!
//! Curves and tables go out as CSV, stability reports and check summaries as
//! JSON, to `--output` or stdout. Exit status is 0 on success, 1 when a
//! verification check fails and 2 on bad input.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use coordgame::adversary::AdversarySpec;
use coordgame::chain::{build_transition_matrix, expected_fraction_y, expected_hitting_time, stationary_distribution};
use coordgame::dynamics::{hitting_time_mc, simulate, DEFAULT_MAX_STEPS};
use coordgame::experiments::{run_fig2, run_fig3, run_fig4, run_theorems, ExperimentConfig, ExperimentKind, HittingMethod};
use coordgame::stability::{stochastically_stable_set, susceptibility, StabilityJson, Threshold};
use coordgame::{AdversaryModel, AdversaryType, Graph, GraphSpec, JointAction, PayoffGain, Rationality};

#[derive(Parser, Debug)]
#[command(name = "coordgame", version, about = "Coordination games under adversarial influence")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment file; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ring size when no --graph is given.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// JSON graph literal: {"ring": 10} or {"n": 4, "edges": [[0,1],[1,2]]}.
    #[arg(long, global = true)]
    graph: Option<String>,
    /// fi:even, fi:0,3,7 (0-based agents), ur or mi:balanced. Repeatable.
    #[arg(long = "adversary", global = true)]
    adversaries: Vec<String>,
    /// Adversary capabilities, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    k: Vec<usize>,
    /// Payoff gains, comma separated; "2/5" and "0.4" are both exact.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    alpha: Vec<String>,
    /// Rationalities, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    beta: Vec<f64>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Step cap per replica; longer runs are reported as censored.
    #[arg(long, global = true)]
    max_steps: Option<u64>,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One trajectory of log-linear learning, one row per revision.
    Simulate {
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Initial state as an x/y string; all-x by default.
        #[arg(long)]
        initial: Option<String>,
    },
    /// Monte Carlo first-passage times, one row per replica.
    HittingTime {
        /// Start state; all-x by default.
        #[arg(long)]
        from: Option<String>,
        /// Target state; all-y by default.
        #[arg(long)]
        to: Option<String>,
    },
    /// Exact stationary fraction of y-players.
    Stationary,
    /// Exact expected hitting times by a linear solve.
    ExactHitting {
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to: Option<String>,
    },
    /// Recurrent classes, stochastic potentials and the stable set (JSON).
    SsSet,
    /// Largest payoff gain at which all-y stays strictly stable.
    Susceptibility,
    /// Susceptibility versus capability on a ring, every adversary type.
    Fig2,
    /// Stationary fraction of y versus rationality, fixed and uniform random.
    Fig3,
    /// Hitting times from all-x to all-y on a ring, every type.
    Fig4,
    /// Threshold checks on rings and random graphs (JSON); exit 1 on failure.
    VerifyTheorems {
        /// Ring sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [5, 6, 7, 8])]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        random_graphs: usize,
    },
    /// Runs the experiment named in --config.
    Run,
}

/// Config file merged with flags.
struct Settings {
    config: ExperimentConfig,
    max_steps: Option<u64>,
}

impl Settings {
    fn load(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => ExperimentConfig {
                experiment: ExperimentKind::Custom,
                graph: None,
                n: None,
                adversaries: Vec::new(),
                alphas: Vec::new(),
                betas: Vec::new(),
                ks: Vec::new(),
                seed: None,
                replicas: None,
                output: None,
            },
        };
        if let Some(text) = &cli.graph {
            config.graph = Some(GraphSpec::parse(text)?);
        }
        if cli.n.is_some() {
            config.n = cli.n;
        }
        if !cli.adversaries.is_empty() {
            config.adversaries = cli.adversaries.clone();
        }
        if !cli.k.is_empty() {
            config.ks = cli.k.clone();
        }
        if !cli.alpha.is_empty() {
            config.alphas = cli.alpha.clone();
        }
        if !cli.beta.is_empty() {
            config.betas = cli.beta.clone();
        }
        if cli.seed.is_some() {
            config.seed = cli.seed;
        }
        if cli.replicas.is_some() {
            config.replicas = cli.replicas;
        }
        if let Some(path) = &cli.output {
            config.output = Some(path.display().to_string());
        }
        config.validate()?;
        Ok(Settings { config, max_steps: cli.max_steps })
    }

    fn graph(&self, default_n: Option<usize>) -> Result<(Graph, String)> {
        if let Some(spec) = &self.config.graph {
            return Ok((spec.build()?, spec.to_string()));
        }
        let n = self.config.n.or(default_n).context("give --n or --graph")?;
        Ok((Graph::ring(n)?, format!("ring{}", n)))
    }

    fn alphas(&self) -> Result<Vec<PayoffGain>> {
        let alphas = self.config.alpha_values()?;
        if alphas.is_empty() {
            bail!("give at least one --alpha");
        }
        Ok(alphas)
    }

    fn betas(&self) -> Result<Vec<f64>> {
        if self.config.betas.is_empty() {
            bail!("give at least one --beta");
        }
        Ok(self.config.betas.clone())
    }

    fn seed(&self) -> Result<u64> {
        self.config.seed.context("stochastic runs need --seed")
    }

    /// Every (adversary, capability) combination. An explicit fixed set
    /// carries its own capability.
    fn models(&self, g: &Graph) -> Result<Vec<Influence>> {
        if self.config.adversaries.is_empty() {
            bail!("give at least one --adversary");
        }
        let mut out = Vec::new();
        for text in &self.config.adversaries {
            let spec: AdversarySpec = text.parse()?;
            if let AdversarySpec::FixedSet(agents) = &spec {
                out.push(Influence { spec: spec.to_string(), k: agents.len(), model: spec.build(g, None)? });
                continue;
            }
            if self.config.ks.is_empty() {
                bail!("{} needs --k", spec);
            }
            for &k in &self.config.ks {
                out.push(Influence { spec: spec.to_string(), k, model: spec.build(g, Some(k))? });
            }
        }
        Ok(out)
    }

    fn single<'a, T>(what: &str, items: &'a [T]) -> Result<&'a T> {
        match items {
            [one] => Ok(one),
            _ => bail!("this command takes exactly one {}, got {}", what, items.len()),
        }
    }

    fn sink(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.config.output {
            Some(path) => Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path))?)),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn write_csv<T: Serialize>(&self, rows: &[T]) -> Result<()> {
        let mut writer = csv::Writer::from_writer(self.sink()?);
        for row in rows {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    fn write_json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut out = self.sink()?;
        serde_json::to_writer_pretty(&mut out, value)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }
}

struct Influence {
    spec: String,
    k: usize,
    model: AdversaryModel,
}

fn state_or(text: &Option<String>, n: usize, default: JointAction) -> Result<JointAction> {
    let Some(text) = text else { return Ok(default) };
    let a: JointAction = text.parse()?;
    if a.n() != n {
        bail!("state {} has {} agents, graph has {}", text, a.n(), n);
    }
    Ok(a)
}

#[derive(Serialize)]
struct SimulateRow<'a> {
    graph: &'a str,
    adversary: &'a str,
    k: usize,
    alpha: String,
    beta: f64,
    seed: u64,
    step: usize,
    /// 1-based label of the revising agent; empty for the initial state.
    updater: Option<usize>,
    influence: String,
    state: String,
}

#[derive(Serialize)]
struct HittingRow<'a> {
    graph: &'a str,
    adversary: &'a str,
    k: usize,
    alpha: String,
    beta: f64,
    from: String,
    to: String,
    seed: u64,
    max_steps: u64,
    replica: u64,
    steps: u64,
    censored: bool,
}

#[derive(Serialize)]
struct StationaryRow<'a> {
    graph: &'a str,
    adversary: &'a str,
    influence: String,
    k: usize,
    alpha: f64,
    alpha_exact: String,
    beta: f64,
    expected_fraction_y: f64,
}

#[derive(Serialize)]
struct ExactHittingRow<'a> {
    graph: &'a str,
    adversary: &'a str,
    influence: String,
    k: usize,
    alpha: f64,
    alpha_exact: String,
    beta: f64,
    from: String,
    to: String,
    hitting_time: f64,
}

#[derive(Serialize)]
struct SsSetReport<'a> {
    graph: &'a str,
    adversary: &'a str,
    influence: String,
    k: usize,
    alpha: String,
    #[serde(flatten)]
    report: StabilityJson,
}

#[derive(Serialize)]
struct SusceptibilityRow<'a> {
    graph: &'a str,
    k: usize,
    #[serde(rename = "type")]
    adversary: AdversaryType,
    susceptibility: f64,
    threshold: String,
    lower: String,
    upper: String,
    method: &'static str,
    witness: String,
}

#[derive(Serialize)]
struct CheckSummary<T> {
    passed: usize,
    failed: usize,
    checks: Vec<T>,
}

fn cmd_simulate(s: &Settings, steps: usize, initial: &Option<String>) -> Result<()> {
    let (g, label) = s.graph(None)?;
    let models = s.models(&g)?;
    let inf = Settings::single("adversary/capability", &models)?;
    let alpha = *Settings::single("--alpha", &s.alphas()?)?;
    let beta = *Settings::single("--beta", &s.betas()?)?;
    let seed = s.seed()?;
    let start = state_or(initial, g.n(), JointAction::all_x(g.n()))?;
    let traj = simulate(&g, &inf.model, alpha, Rationality::new(beta)?, start, steps, seed)?;
    let row = |step, updater, influence: String, state: JointAction| SimulateRow {
        graph: &label,
        adversary: &inf.spec,
        k: inf.k,
        alpha: alpha.to_string(),
        beta,
        seed,
        step,
        updater,
        influence,
        state: state.to_string(),
    };
    let mut rows = vec![row(0, None, String::new(), traj.initial)];
    for (t, rec) in traj.steps.iter().enumerate() {
        rows.push(row(t + 1, Some(rec.updater + 1), rec.influence.to_string(), rec.state));
    }
    s.write_csv(&rows)
}

fn cmd_hitting_time(s: &Settings, from: &Option<String>, to: &Option<String>) -> Result<()> {
    let (g, label) = s.graph(None)?;
    let models = s.models(&g)?;
    let inf = Settings::single("adversary/capability", &models)?;
    let alpha = *Settings::single("--alpha", &s.alphas()?)?;
    let beta = *Settings::single("--beta", &s.betas()?)?;
    let seed = s.seed()?;
    let replicas = s.config.replicas.unwrap_or(100);
    let max_steps = s.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
    let (from, to) = (
        state_or(from, g.n(), JointAction::all_x(g.n()))?,
        state_or(to, g.n(), JointAction::all_y(g.n()))?,
    );
    let est = hitting_time_mc(&g, &inf.model, alpha, Rationality::new(beta)?, from, to, replicas, seed, max_steps)?;
    eprintln!("mean {:.1} +- {:.1} over {} replicas, {} censored", est.mean, est.std_error, replicas, est.censored);
    let rows: Vec<_> = est
        .outcomes
        .iter()
        .map(|o| HittingRow {
            graph: &label,
            adversary: &inf.spec,
            k: inf.k,
            alpha: alpha.to_string(),
            beta,
            from: from.to_string(),
            to: to.to_string(),
            seed,
            max_steps,
            replica: o.replica,
            steps: o.steps,
            censored: o.censored,
        })
        .collect();
    s.write_csv(&rows)
}

fn cmd_stationary(s: &Settings) -> Result<()> {
    let (g, label) = s.graph(None)?;
    let models = s.models(&g)?;
    let (alphas, betas) = (s.alphas()?, s.betas()?);
    let mut rows = Vec::new();
    for inf in &models {
        for &alpha in &alphas {
            for &beta in &betas {
                let m = build_transition_matrix(&g, &inf.model, alpha, Rationality::new(beta)?)?;
                rows.push(StationaryRow {
                    graph: &label,
                    adversary: &inf.spec,
                    influence: inf.model.to_string(),
                    k: inf.k,
                    alpha: alpha.to_f64(),
                    alpha_exact: alpha.to_string(),
                    beta,
                    expected_fraction_y: expected_fraction_y(&stationary_distribution(&m)?),
                });
            }
        }
    }
    s.write_csv(&rows)
}

fn cmd_exact_hitting(s: &Settings, from: &Option<String>, to: &Option<String>) -> Result<()> {
    let (g, label) = s.graph(None)?;
    let models = s.models(&g)?;
    let (alphas, betas) = (s.alphas()?, s.betas()?);
    let (from, to) = (
        state_or(from, g.n(), JointAction::all_x(g.n()))?,
        state_or(to, g.n(), JointAction::all_y(g.n()))?,
    );
    let mut rows = Vec::new();
    for inf in &models {
        for &alpha in &alphas {
            for &beta in &betas {
                let m = build_transition_matrix(&g, &inf.model, alpha, Rationality::new(beta)?)?;
                rows.push(ExactHittingRow {
                    graph: &label,
                    adversary: &inf.spec,
                    influence: inf.model.to_string(),
                    k: inf.k,
                    alpha: alpha.to_f64(),
                    alpha_exact: alpha.to_string(),
                    beta,
                    from: from.to_string(),
                    to: to.to_string(),
                    hitting_time: expected_hitting_time(&m, from, to)?,
                });
            }
        }
    }
    s.write_csv(&rows)
}

fn cmd_ss_set(s: &Settings) -> Result<()> {
    let (g, label) = s.graph(None)?;
    let models = s.models(&g)?;
    let inf = Settings::single("adversary/capability", &models)?;
    let alpha = *Settings::single("--alpha", &s.alphas()?)?;
    let report = stochastically_stable_set(&g, &inf.model, alpha)?;
    s.write_json(&SsSetReport {
        graph: &label,
        adversary: &inf.spec,
        influence: inf.model.to_string(),
        k: inf.k,
        alpha: alpha.to_string(),
        report: report.to_json(),
    })
}

fn cmd_susceptibility(s: &Settings) -> Result<()> {
    let (g, label) = s.graph(None)?;
    let types: Vec<AdversaryType> = if s.config.adversaries.is_empty() {
        AdversaryType::ALL.to_vec()
    } else {
        s.config
            .adversaries
            .iter()
            .map(|a| a.split(':').next().unwrap_or_default().parse())
            .collect::<coordgame::Result<_>>()?
    };
    let ks: Vec<usize> = if s.config.ks.is_empty() { (1..g.n()).collect() } else { s.config.ks.clone() };
    let mut rows = Vec::new();
    for &ty in &types {
        for &k in &ks {
            let r = susceptibility(&g, ty, k)?;
            let show = |v: Option<coordgame::Rational>| v.map_or_else(String::new, |v| v.to_string());
            rows.push(SusceptibilityRow {
                graph: &label,
                k,
                adversary: ty,
                susceptibility: r.threshold.estimate().unwrap_or(f64::NAN),
                threshold: r.threshold.to_string(),
                lower: show(r.threshold.lower()),
                upper: show(r.threshold.upper()),
                method: if matches!(r.threshold, Threshold::Exact(_)) { "exact" } else { "bracket" },
                witness: r.witness.to_string(),
            });
        }
    }
    s.write_csv(&rows)
}

fn cmd_fig2(s: &Settings) -> Result<()> {
    s.write_csv(&run_fig2(s.config.n.unwrap_or(10))?)
}

fn cmd_fig3(s: &Settings) -> Result<()> {
    let n = s.config.n.unwrap_or(3);
    let k = *s.config.ks.first().unwrap_or(&1);
    let mut alphas = s.config.alpha_values()?;
    if alphas.is_empty() {
        alphas = vec![PayoffGain::ratio(1, 4)?, PayoffGain::ratio(3, 8)?];
    }
    let betas = if s.config.betas.is_empty() {
        (0..=40).map(|i| i as f64 / 4.0).collect()
    } else {
        s.config.betas.clone()
    };
    s.write_csv(&run_fig3(n, k, &alphas, &betas)?)
}

fn cmd_fig4(s: &Settings) -> Result<()> {
    let n = s.config.n.unwrap_or(10);
    let beta = *Settings::single("--beta", if s.config.betas.is_empty() { &[2.0] } else { &s.config.betas })?;
    let ks = if s.config.ks.is_empty() { (1..n).collect() } else { s.config.ks.clone() };
    let mut alphas = s.config.alpha_values()?;
    if alphas.is_empty() {
        alphas = (2..=6).map(|j| PayoffGain::ratio(j, 10)).collect::<coordgame::Result<_>>()?;
    }
    let method = match s.config.replicas {
        Some(replicas) => HittingMethod::MonteCarlo {
            replicas,
            seed: s.seed()?,
            max_steps: s.max_steps.unwrap_or(DEFAULT_MAX_STEPS),
        },
        None => HittingMethod::Exact,
    };
    s.write_csv(&run_fig4(n, beta, &ks, &alphas, method)?)
}

fn cmd_verify(s: &Settings, ns: &[usize], random_graphs: usize) -> Result<bool> {
    let checks = run_theorems(ns, random_graphs, s.config.seed.unwrap_or(0))?;
    let failed: Vec<_> = checks.iter().filter(|c| !c.pass).collect();
    for c in &failed {
        eprintln!("FAIL {} {}: expected {}, observed {}", c.check, c.instance, c.expected, c.observed);
    }
    let ok = failed.is_empty();
    let summary = CheckSummary { passed: checks.len() - failed.len(), failed: failed.len(), checks };
    eprintln!("{} of {} checks passed", summary.passed, summary.passed + summary.failed);
    s.write_json(&summary)?;
    Ok(ok)
}

fn run(cli: &Cli) -> Result<bool> {
    let s = Settings::load(cli)?;
    match &cli.command {
        Command::Simulate { steps, initial } => cmd_simulate(&s, *steps, initial)?,
        Command::HittingTime { from, to } => cmd_hitting_time(&s, from, to)?,
        Command::Stationary => cmd_stationary(&s)?,
        Command::ExactHitting { from, to } => cmd_exact_hitting(&s, from, to)?,
        Command::SsSet => cmd_ss_set(&s)?,
        Command::Susceptibility => cmd_susceptibility(&s)?,
        Command::Fig2 => cmd_fig2(&s)?,
        Command::Fig3 => cmd_fig3(&s)?,
        Command::Fig4 => cmd_fig4(&s)?,
        Command::VerifyTheorems { ns, random_graphs } => return cmd_verify(&s, ns, *random_graphs),
        Command::Run => {
            if cli.config.is_none() {
                bail!("run needs --config");
            }
            match s.config.experiment {
                ExperimentKind::Fig2 => cmd_fig2(&s)?,
                ExperimentKind::Fig3 => cmd_fig3(&s)?,
                ExperimentKind::Fig4 => cmd_fig4(&s)?,
                ExperimentKind::Theorems => {
                    let ns = s.config.n.map_or_else(|| vec![5, 6, 7, 8], |n| vec![n]);
                    return cmd_verify(&s, &ns, 20);
                }
                ExperimentKind::Custom => cmd_stationary(&s)?,
            }
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}
