//! Command-line front end: `check`, `run`, `generate`, `replicate`, `builtin`.
//!
//! Exit codes: 0 success (or certified), 1 validation failure, 2 divergence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{select_estimating_agents, stability_matrix, AssignmentRule, TriangleRule};
use crate::controller::ControlMode;
use crate::disturbance::{DisturbanceSpec, EdgeDisturbance};
use crate::rigidity::{random_henneberg, rigidity};
use crate::scenario::{builtin, ControllerSection, RuleSpec, Scenario, SimSection, TriangleSpec, BUILTIN_NAMES};
use crate::sim::{integrate, run_verdict, RunVerdict, Trajectory, DEFAULT_DIVERGENCE_BOUND, DEFAULT_WINDOW_FRACTION};
use crate::{FormationError, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_DIVERGED: i32 = 2;

/// Default tolerance for "converged" and orbit detection.
pub const DEFAULT_VERDICT_TOL: f64 = 1e-6;

const GENERATE_ATTEMPTS: usize = 100;

/// Loads a scenario from a path, falling back to a built-in of that name.
pub fn resolve_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        return Scenario::load(path);
    }
    builtin(arg).ok_or_else(|| {
        FormationError::InvalidScenario(format!(
            "{arg} is neither a readable file nor a built-in ({})",
            BUILTIN_NAMES.join(", ")
        ))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub rank: usize,
    pub expected_rank: usize,
    pub infinitesimally_rigid: bool,
    pub minimally_rigid: bool,
    pub hurwitz: bool,
    pub margin: f64,
    /// `[re, im]` pairs, largest real part first.
    pub spectrum: Vec<[f64; 2]>,
    /// Whether the scenario's orientation matches its construction rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_consistent: Option<bool>,
}

impl CheckReport {
    pub fn certified(&self) -> bool {
        self.infinitesimally_rigid && self.hurwitz
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let yn = |b: bool| if b { "yes" } else { "no" };
        writeln!(s, "scenario:               {}", self.name).unwrap();
        writeln!(s, "rigidity rank:          {} (rigid needs {})", self.rank, self.expected_rank).unwrap();
        writeln!(s, "infinitesimally rigid:  {}", yn(self.infinitesimally_rigid)).unwrap();
        writeln!(s, "minimally rigid:        {}", yn(self.minimally_rigid)).unwrap();
        writeln!(s, "Z Hurwitz:              {} (margin {:.6e})", yn(self.hurwitz), self.margin).unwrap();
        if let Some(c) = self.rule_consistent {
            writeln!(s, "matches selection rule: {}", yn(c)).unwrap();
        }
        writeln!(s, "spectrum of Z:").unwrap();
        for [re, im] in &self.spectrum {
            writeln!(s, "  {re:+.9e} {im:+.9e}i").unwrap();
        }
        writeln!(s, "verdict:                {}", if self.certified() { "CERTIFIED" } else { "NOT CERTIFIED" })
            .unwrap();
        s
    }
}

/// Rank test and stability matrix at the scenario's target embedding.
pub fn cmd_check(scenario: &Scenario) -> Result<CheckReport> {
    let fw = scenario
        .target_framework()?
        .ok_or_else(|| FormationError::InvalidScenario("check needs target_positions".into()))?;
    let rig = rigidity(&fw)?;
    let report = stability_matrix(&fw)?;
    let rule_consistent = match scenario.rule()? {
        Some(rule) => Some(select_estimating_agents(fw.graph(), &rule)? == *fw.graph()),
        None => None,
    };
    Ok(CheckReport {
        name: scenario.name.clone(),
        rank: rig.rank,
        expected_rank: rig.expected_rank,
        infinitesimally_rigid: rig.infinitesimally_rigid,
        minimally_rigid: rig.minimally_rigid,
        hurwitz: report.hurwitz,
        margin: report.margin,
        spectrum: report.spectrum.iter().map(|l| [l.re, l.im]).collect(),
        rule_consistent,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub verdict: RunVerdict,
}

/// Simulates a scenario without writing anything.
pub fn simulate(scenario: &Scenario, tol: f64) -> Result<RunOutcome> {
    let sys = scenario.closed_loop()?;
    if let Some(fw) = scenario.target_framework()? {
        if !rigidity(&fw)?.infinitesimally_rigid {
            log::warn!("{}: target embedding is not infinitesimally rigid", scenario.name);
        }
    }
    let init = scenario.initial_state()?;
    let trajectory = integrate(&sys, &init, &scenario.sim_config()?)?;
    let verdict = run_verdict(&trajectory, DEFAULT_WINDOW_FRACTION, tol)?;
    Ok(RunOutcome { trajectory, verdict })
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> FormationError {
    FormationError::InvalidScenario(format!("cannot write {}: {e}", path.display()))
}

pub fn summarize(name: &str, v: &RunVerdict) -> String {
    let mut s = String::new();
    writeln!(s, "scenario:          {name}").unwrap();
    writeln!(s, "converged:         {}", v.converged).unwrap();
    writeln!(s, "final ||e||:       {:.6e}", v.final_error_norm).unwrap();
    writeln!(s, "final max speed:   {:.6e}", v.final_max_speed).unwrap();
    match &v.rate {
        Some(r) => writeln!(
            s,
            "fitted rate:       {:.6e} 1/s (R^2 = {:.5}, t in [{}, {}])",
            r.slope, r.r_squared, r.t_start, r.t_stop
        )
        .unwrap(),
        None => writeln!(s, "fitted rate:       n/a").unwrap(),
    }
    writeln!(s, "orbit detected:    {}", v.orbit_detected).unwrap();
    if let Some(sp) = v.steady_speed {
        writeln!(s, "steady speed:      {sp:.6e}").unwrap();
    }
    if let Some(err) = v.estimate_error {
        writeln!(s, "||mu_hat - mu||/||mu||: {err:.6e}").unwrap();
    }
    if let Some(d) = &v.divergence {
        writeln!(s, "DIVERGED at t = {}: {}", d.t, d.reason).unwrap();
    }
    s
}

/// Runs a scenario and writes `trajectory.csv`, `verdict.json` and `summary.txt`.
pub fn cmd_run(scenario: &Scenario, out_dir: &Path, tol: f64) -> Result<RunOutcome> {
    let outcome = simulate(scenario, tol)?;
    write_run(scenario, &outcome, out_dir)?;
    Ok(outcome)
}

fn write_run(scenario: &Scenario, outcome: &RunOutcome, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let csv_path = out_dir.join("trajectory.csv");
    let file = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    outcome
        .trajectory
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|e| io_err(&csv_path, e))?;
    let verdict_path = out_dir.join("verdict.json");
    let json = serde_json::to_string_pretty(&outcome.verdict).expect("verdict serializes");
    fs::write(&verdict_path, json + "\n").map_err(|e| io_err(&verdict_path, e))?;
    let summary_path = out_dir.join("summary.txt");
    fs::write(&summary_path, summarize(&scenario.name, &outcome.verdict))
        .map_err(|e| io_err(&summary_path, e))?;
    Ok(())
}

/// Orientation of the first triangle of a generated planar formation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TriangleChoice {
    Cyclic,
    Acyclic,
}

/// Random minimally rigid formation, oriented by the matching selection rule
/// and certified Hurwitz; bit-reproducible per seed.
pub fn cmd_generate(n: usize, dim: usize, seed: u64, triangle: TriangleChoice) -> Result<Scenario> {
    match dim {
        2 if n < 3 => return Err(FormationError::TooFewAgents { n, dim }),
        3 if n < 4 => return Err(FormationError::TooFewAgents { n, dim }),
        2 | 3 => {}
        d => return Err(FormationError::UnsupportedDimension(d)),
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GENERATE_ATTEMPTS {
        let (trace, fw) = random_henneberg(n, dim, &mut rng)?;
        let (rule, spec) = match (dim, triangle) {
            (2, TriangleChoice::Cyclic) => (
                AssignmentRule::Henneberg2d { trace: trace.clone(), triangle: TriangleRule::Cyclic },
                RuleSpec::Henneberg2d { triangle: TriangleSpec::Cyclic },
            ),
            (2, TriangleChoice::Acyclic) => (
                AssignmentRule::Henneberg2d {
                    trace: trace.clone(),
                    triangle: TriangleRule::Acyclic { root: 0, other: None },
                },
                RuleSpec::Henneberg2d { triangle: TriangleSpec::Acyclic { root: 1, other: None } },
            ),
            _ if n == 4 => (AssignmentRule::Tetrahedron, RuleSpec::Tetrahedron),
            _ => (AssignmentRule::Growth3d { trace: trace.clone() }, RuleSpec::Growth3d),
        };
        let target = fw.with_graph(select_estimating_agents(fw.graph(), &rule)?)?;
        if !stability_matrix(&target)?.hurwitz {
            log::debug!("generated embedding failed certification, retrying");
            continue;
        }
        let d_min = target.target_distances().iter().cloned().fold(f64::INFINITY, f64::min);
        let initial: Vec<f64> = target
            .positions()
            .iter()
            .map(|&v| v + 0.1 * d_min * rng.gen_range(-1.0..1.0))
            .collect();
        let offsets = (0..target.graph().edge_count())
            .map(|_| EdgeDisturbance::constant(0.05 * d_min * d_min * rng.gen_range(-1.0..1.0)))
            .collect();
        let disturbance = DisturbanceSpec::new(Vec::new(), offsets)?;
        let name = format!("generated-{dim}d-n{n}-seed{seed}");
        let scenario = Scenario::from_framework(
            &name,
            &target,
            &initial,
            &disturbance,
            ControllerSection { mode: ControlMode::Estimator, kappa: 1.0, b1: None, b2: None, xi0: None },
            SimSection {
                dt: 1e-3,
                t_end: 100.0,
                output_every: 10,
                divergence_bound: DEFAULT_DIVERGENCE_BOUND,
            },
        )
        .with_construction(&trace, spec);
        scenario.validate()?;
        return Ok(scenario);
    }
    Err(FormationError::GenerationFailed(format!(
        "no certified embedding after {GENERATE_ATTEMPTS} attempts"
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeSummary {
    pub scenario: String,
    pub mode: ControlMode,
    pub verdict: RunVerdict,
    pub final_mu: Vec<f64>,
    pub final_mu_hat: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicationSummary {
    pub name: String,
    pub gradient: RegimeSummary,
    pub estimator: RegimeSummary,
}

impl ReplicationSummary {
    pub fn diverged(&self) -> bool {
        self.gradient.verdict.divergence.is_some() || self.estimator.verdict.divergence.is_some()
    }

    pub fn render(&self) -> String {
        let (g, e) = (&self.gradient.verdict, &self.estimator.verdict);
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        let mut s = String::new();
        writeln!(s, "{:<24}{:>16}{:>16}", self.name, "gradient", "estimator").unwrap();
        writeln!(s, "{:<24}{:>16}{:>16}", "converged", g.converged, e.converged).unwrap();
        writeln!(s, "{:<24}{:>16}{:>16}", "orbit detected", g.orbit_detected, e.orbit_detected).unwrap();
        writeln!(s, "{:<24}{:>16}{:>16}", "steady speed", opt(g.steady_speed), opt(e.steady_speed)).unwrap();
        writeln!(s, "{:<24}{:>16.4e}{:>16.4e}", "final ||e||", g.final_error_norm, e.final_error_norm).unwrap();
        writeln!(s, "{:<24}{:>16.4e}{:>16.4e}", "final max speed", g.final_max_speed, e.final_max_speed).unwrap();
        writeln!(
            s,
            "{:<24}{:>16}{:>16}",
            "rate of ||e|| [1/s]",
            opt(g.rate.map(|r| r.slope)),
            opt(e.rate.map(|r| r.slope))
        )
        .unwrap();
        writeln!(s, "{:<24}{:>16}{:>16}", "||mu_hat-mu||/||mu||", "-", opt(e.estimate_error)).unwrap();
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
        writeln!(s, "final mu:     [{}]", fmt(&self.estimator.final_mu)).unwrap();
        writeln!(s, "final mu_hat: [{}]", fmt(&self.estimator.final_mu_hat)).unwrap();
        s
    }
}

fn regime(scenario: &Scenario, outcome: &RunOutcome) -> RegimeSummary {
    let last = outcome.trajectory.samples.last().expect("at least the initial sample");
    RegimeSummary {
        scenario: scenario.name.clone(),
        mode: scenario.controller.mode,
        verdict: outcome.verdict.clone(),
        final_mu: last.mu.clone(),
        final_mu_hat: last.mu_hat.clone(),
    }
}

/// Runs the gradient-only and estimator variants of `name` concurrently and
/// writes each run plus a side-by-side summary under `out_dir`.
pub fn cmd_replicate(name: &str, out_dir: &Path) -> Result<ReplicationSummary> {
    if name != "epuck2d" && name != "tetra3d" {
        return Err(FormationError::InvalidScenario(format!(
            "unknown replication {name}; expected epuck2d or tetra3d"
        )));
    }
    let gradient = builtin(&format!("{name}-gradient")).expect("built-in exists");
    let estimator = builtin(name).expect("built-in exists");
    let (g, e) = std::thread::scope(|s| {
        let g = s.spawn(|| simulate(&gradient, DEFAULT_VERDICT_TOL));
        let e = s.spawn(|| simulate(&estimator, DEFAULT_VERDICT_TOL));
        (g.join().expect("gradient run panicked"), e.join().expect("estimator run panicked"))
    });
    let (g, e) = (g?, e?);
    write_run(&gradient, &g, &out_dir.join("gradient"))?;
    write_run(&estimator, &e, &out_dir.join("estimator"))?;
    let summary = ReplicationSummary {
        name: name.to_string(),
        gradient: regime(&gradient, &g),
        estimator: regime(&estimator, &e),
    };
    let path = out_dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n")
        .map_err(|e| io_err(&path, e))?;
    let path = out_dir.join("summary.txt");
    fs::write(&path, summary.render()).map_err(|e| io_err(&path, e))?;
    Ok(summary)
}

#[derive(Debug, Parser)]
#[command(name = "formation", version, about = "Rigid formation control under inconsistent measurements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank test and Hurwitz certification at the target embedding.
    Check {
        /// Scenario file or built-in name.
        scenario: String,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the JSON report instead of the text report.
        #[arg(long)]
        json: bool,
    },
    /// Simulate a scenario and write trajectory, verdict and summary.
    Run {
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Tolerance for convergence and orbit detection.
        #[arg(long, default_value_t = DEFAULT_VERDICT_TOL)]
        tol: f64,
    },
    /// Generate a random certified formation scenario.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = TriangleChoice::Acyclic)]
        triangle: TriangleChoice,
    },
    /// Run the gradient-only and estimator variants of a built-in experiment.
    Replicate {
        /// `epuck2d` or `tetra3d`.
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a built-in scenario to a file (or stdout).
    Builtin {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn report_error(e: &FormationError) -> i32 {
    eprintln!("error: {e}");
    match e {
        FormationError::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_INVALID,
    }
}

/// Executes a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::Check { scenario, out, json } => {
            let report = match resolve_scenario(&scenario).and_then(|s| cmd_check(&s)) {
                Ok(r) => r,
                Err(e) => return report_error(&e),
            };
            let record = serde_json::to_string_pretty(&report).expect("report serializes");
            if json {
                println!("{record}");
            } else {
                print!("{}", report.render());
            }
            if let Some(path) = out {
                if let Err(e) = fs::write(&path, record + "\n") {
                    return report_error(&io_err(&path, e));
                }
            }
            if report.certified() {
                EXIT_OK
            } else {
                EXIT_INVALID
            }
        }
        Command::Run { scenario, out, tol } => {
            let result = resolve_scenario(&scenario).and_then(|s| cmd_run(&s, &out, tol).map(|o| (s, o)));
            match result {
                Ok((s, o)) => {
                    print!("{}", summarize(&s.name, &o.verdict));
                    if o.verdict.divergence.is_some() {
                        EXIT_DIVERGED
                    } else {
                        EXIT_OK
                    }
                }
                Err(e) => report_error(&e),
            }
        }
        Command::Generate { n, dim, seed, out, triangle } => {
            match cmd_generate(n, dim, seed, triangle).and_then(|s| s.save(&out).map(|_| s)) {
                Ok(s) => {
                    println!("wrote {} ({} agents, {} edges) to {}", s.name, s.agents.len(), s.edges.len(), out.display());
                    EXIT_OK
                }
                Err(e) => report_error(&e),
            }
        }
        Command::Replicate { name, out } => match cmd_replicate(&name, &out) {
            Ok(summary) => {
                print!("{}", summary.render());
                if summary.diverged() {
                    EXIT_DIVERGED
                } else {
                    EXIT_OK
                }
            }
            Err(e) => report_error(&e),
        },
        Command::Builtin { name, out } => {
            let Some(s) = builtin(&name) else {
                return report_error(&FormationError::InvalidScenario(format!(
                    "unknown built-in {name} (known: {})",
                    BUILTIN_NAMES.join(", ")
                )));
            };
            match out {
                Some(path) => match s.save(&path) {
                    Ok(()) => EXIT_OK,
                    Err(e) => report_error(&e),
                },
                None => {
                    println!("{}", s.to_json());
                    EXIT_OK
                }
            }
        }
    }
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            }
        }
    }
}
