use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use patternforge::composition::DEFAULT_ITERATION_CAP;
use patternforge::expr::Goal;
use patternforge::{
    evaluate, load_catalog, load_network, load_project, plan, verify, Catalog, Error, Limits, Network, Project,
    Ranking, State, Tolerance, Value,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "patternforge", version, about = "Compose, verify and plan process pattern combinations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a catalog (and optionally a network) and report problems.
    Validate {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        network: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Evaluate a combination from the project state.
    Eval {
        #[command(flatten)]
        input: EvalArgs,
    },
    /// Evaluate a combination and check a goal on the result.
    Verify {
        #[command(flatten)]
        input: EvalArgs,
        /// Goal to check; defaults to the project goal.
        #[arg(long)]
        goal: Option<String>,
    },
    /// Search the network for goal-satisfying combinations.
    Plan {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        project: PathBuf,
        #[arg(long)]
        goal: Option<String>,
        #[arg(long)]
        max_atoms: Option<usize>,
        #[arg(long)]
        max_par_width: Option<usize>,
        #[arg(long)]
        no_par: bool,
        /// e.g. "min effort, max reliability"
        #[arg(long)]
        rank: Option<String>,
        /// Maximum number of candidates to report.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        iteration_cap: Option<usize>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Serve the HTTP API until interrupted.
    Serve {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[command(flatten)]
        tol: TolArgs,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    catalog: PathBuf,
    #[arg(long)]
    project: PathBuf,
    /// Combination in the combination language.
    #[arg(long)]
    comb: String,
    #[arg(long, default_value_t = DEFAULT_ITERATION_CAP)]
    iteration_cap: usize,
    #[arg(long)]
    json: bool,
    #[command(flatten)]
    tol: TolArgs,
}

/// Numeric equality tolerance overrides.
#[derive(Args)]
struct TolArgs {
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
}

impl TolArgs {
    fn tolerance(&self) -> Result<Tolerance, Failure> {
        let d = Tolerance::default();
        let t = Tolerance {
            rel: self.rel_tol.unwrap_or(d.rel),
            abs: self.abs_tol.unwrap_or(d.abs),
        };
        if !(t.rel.is_finite() && t.abs.is_finite() && t.rel >= 0.0 && t.abs >= 0.0) {
            return Err(Failure::new("--rel-tol/--abs-tol", "tolerances must be finite and non-negative"));
        }
        Ok(t)
    }
}

/// A diagnostic: where it came from and what went wrong.
struct Failure {
    source: String,
    lines: Vec<String>,
}

impl Failure {
    fn new(source: impl Into<String>, message: impl Into<String>) -> Self {
        Failure {
            source: source.into(),
            lines: vec![message.into()],
        }
    }

    fn from_error(source: impl Into<String>, e: &Error) -> Self {
        let lines = e
            .problems()
            .into_iter()
            .map(|p| format!("[{}] {p}", p.code()))
            .collect();
        Failure {
            source: source.into(),
            lines,
        }
    }

    fn report(&self) {
        for line in &self.lines {
            eprintln!("error: {}: {line}", self.source);
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(path.display().to_string(), e.to_string()))
}

fn catalog(path: &Path, tol: &TolArgs) -> Result<Catalog, Failure> {
    let c = load_catalog(&read(path)?).map_err(|e| Failure::from_error(path.display().to_string(), &e))?;
    Ok(c.with_tolerance(tol.tolerance()?))
}

fn network(path: &Path, c: &Catalog) -> Result<Network, Failure> {
    load_network(&read(path)?, c).map_err(|e| Failure::from_error(path.display().to_string(), &e))
}

fn project(path: &Path, c: &Catalog) -> Result<Project, Failure> {
    load_project(&read(path)?, c).map_err(|e| Failure::from_error(path.display().to_string(), &e))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

/// `effort = 654, reliability = 0.92` for the numeric attributes a goal mentions.
fn summary(goal: &Goal, state: &State) -> String {
    let parts: Vec<String> = goal
        .attributes()
        .into_iter()
        .filter_map(|name| match state.get(&name) {
            Some(v @ Value::Number(_)) => Some(format!("{name} = {v}")),
            _ => None,
        })
        .collect();
    if parts.is_empty() {
        String::new()
    } else {
        format!(" ({})", parts.join(", "))
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Validate { catalog: cp, network: np, tol } => {
            let c = catalog(&cp, &tol)?;
            println!(
                "{}: ok, {} pattern(s), {} attribute(s)",
                cp.display(),
                c.patterns().count(),
                c.schema().attributes().count()
            );
            if let Some(np) = np {
                let n = network(&np, &c)?;
                println!(
                    "{}: ok, {} adjacency rule(s), {} compatibility predicate(s), {} initial artifact(s)",
                    np.display(),
                    n.adjacency.len(),
                    n.compatibility.len(),
                    n.initial_artifacts.len()
                );
            }
            Ok(0)
        }
        Command::Eval { input } => {
            let (c, p, comb) = load_inputs(&input)?;
            let ev = evaluate(&comb, &p.state, &c, input.iteration_cap).map_err(|e| Failure::from_error("eval", &e))?;
            if input.json {
                print_json(&ev);
            } else {
                println!("initial: {}", p.state);
                for line in ev.trace.lines() {
                    println!("  {line}");
                }
                println!("final: {}", ev.final_state);
            }
            Ok(0)
        }
        Command::Verify { input, goal } => {
            let (c, p, comb) = load_inputs(&input)?;
            let goal = match goal {
                Some(text) => c.parse_goal(&text).map_err(|e| Failure::from_error("--goal", &e))?,
                None => p.goal.clone(),
            };
            let report =
                verify(&comb, &p.state, &goal, &c, input.iteration_cap).map_err(|e| Failure::from_error("verify", &e))?;
            if input.json {
                print_json(&report);
            } else {
                let verdict = if report.verified { "VERIFIED" } else { "FAILED" };
                println!("{verdict}{}", summary(&goal, &report.final_state));
                for line in report.breakdown.lines() {
                    println!("  {line}");
                }
                println!("final: {}", report.final_state);
            }
            Ok(if report.verified { 0 } else { 1 })
        }
        Command::Plan {
            catalog: cp,
            network: np,
            project: pp,
            goal,
            max_atoms,
            max_par_width,
            no_par,
            rank,
            limit,
            iteration_cap,
            json,
            tol,
        } => {
            let c = catalog(&cp, &tol)?;
            let p = project(&pp, &c)?;
            let n = network(&np, &c)?.with_artifacts(p.artifacts.iter().cloned());
            let goal = match goal {
                Some(text) => c.parse_goal(&text).map_err(|e| Failure::from_error("--goal", &e))?,
                None => p.goal.clone(),
            };
            let d = Limits::default();
            let limits = Limits {
                max_atoms: max_atoms.unwrap_or(d.max_atoms),
                max_par_width: max_par_width.unwrap_or(d.max_par_width),
                allow_par: !no_par,
                iteration_cap: iteration_cap.unwrap_or(d.iteration_cap),
                max_results: limit.unwrap_or(d.max_results),
            };
            let ranking = match rank {
                Some(text) => text.parse::<Ranking>().map_err(|e| Failure::from_error("--rank", &e))?,
                None => Ranking::default(),
            };
            let found = plan(&c, &n, &p.state, &goal, &limits, &ranking).map_err(|e| Failure::from_error("plan", &e))?;
            if json {
                print_json(&json!({ "candidates": found }));
            } else if found.is_empty() {
                println!("no combination satisfies the goal");
            } else {
                if ranking.criteria.is_empty() {
                    println!("{} candidate(s), ranked by usage", found.len());
                } else {
                    println!("{} candidate(s), ranked by {ranking}", found.len());
                }
                for (i, cand) in found.iter().enumerate() {
                    let score: Vec<String> = cand.score.iter().map(f64::to_string).collect();
                    println!("{:>3}. [{}] {}", i + 1, score.join(", "), cand.combination_text);
                }
            }
            Ok(if found.is_empty() { 1 } else { 0 })
        }
        Command::Serve {
            catalog: cp,
            network: np,
            port,
            tol,
        } => {
            let c = catalog(&cp, &tol)?;
            let n = network(&np, &c)?;
            let addr = patternforge_service::bind_address(port).map_err(|e| Failure::new("serve", e))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::new("serve", e.to_string()))?;
            rt.block_on(patternforge_service::serve(patternforge_service::router(c, n), addr))
                .map_err(|e| Failure::new(format!("serve {addr}"), e.to_string()))?;
            Ok(0)
        }
    }
}

fn load_inputs(input: &EvalArgs) -> Result<(Catalog, Project, patternforge::Combination), Failure> {
    let c = catalog(&input.catalog, &input.tol)?;
    let p = project(&input.project, &c)?;
    let comb = c.parse_combination(&input.comb).map_err(|e| Failure::from_error("--comb", &e))?;
    if input.iteration_cap == 0 {
        return Err(Failure::new("--iteration-cap", "must be positive"));
    }
    Ok((c, p, comb))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            f.report();
            ExitCode::from(2)
        }
    }
}
