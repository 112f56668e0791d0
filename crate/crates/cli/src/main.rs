//! `nash-sbnb`: generate games, solve them, evaluate profiles and run
//! benchmark sweeps. Results go to stdout as JSON, logs to stderr.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nash_sbnb::bench::{run_bench, BenchSpec};
use nash_sbnb::formulation::varpi_for_epsilon;
use nash_sbnb::game::json::{from_json, to_json, GameMetadata};
use nash_sbnb::game::{generate_graphical, generate_random, nfg, Graph, GraphKind, MixedProfile};
use nash_sbnb::oracle::{pure_epsilon_scan, write_scan_csv, DEFAULT_SCAN_CAP};
use nash_sbnb::sbnb::{solve, solve_local_only, SolveConfig, SolveStatus};
use nash_sbnb::Game;

/// Exit code for a run stopped by a time or node limit.
const EXIT_LIMIT: u8 = 2;

#[derive(Parser)]
#[command(name = "nash-sbnb", version, about = "Nash equilibria by spatial branch-and-bound")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random or graphical game.
    Generate(GenerateArgs),
    /// Solve a game and print the result JSON.
    Solve(SolveArgs),
    /// Report the exploitability of a profile.
    Eval(EvalArgs),
    /// Run a benchmark sweep and write CSV.
    Bench(BenchArgs),
    /// Scan all pure profiles for the smallest epsilon.
    Scan(ScanArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenArg {
    Random,
    Graphical,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Complete,
    Path,
    Smallworld,
    Empty,
}

impl From<GraphArg> for GraphKind {
    fn from(g: GraphArg) -> Self {
        match g {
            GraphArg::Complete => GraphKind::Complete,
            GraphArg::Path => GraphKind::Path,
            GraphArg::Smallworld => GraphKind::SmallWorld,
            GraphArg::Empty => GraphKind::Empty,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Full two-stage search until the gap closes.
    Sbnb,
    /// Stop once the certified epsilon reaches --target-eps.
    SbnbE,
    /// Local search only; no lower bound.
    LocalOnly,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Nfg,
    Json,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    players: u64,
    /// Actions per player: one count for everyone or a comma list.
    #[arg(long, value_delimiter = ',', required = true)]
    actions: Vec<usize>,
    #[arg(long = "gen", value_enum, default_value = "random")]
    generator: GenArg,
    /// Interaction graph for graphical games.
    #[arg(long, value_enum, default_value = "complete")]
    graph: GraphArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; NFG on stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Output format; inferred from the extension by default.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SolveArgs {
    /// Game file (NFG or JSON).
    game: PathBuf,
    #[arg(long, value_enum, default_value = "sbnb")]
    mode: Mode,
    /// Target epsilon; required by sbnb-e.
    #[arg(long)]
    target_eps: Option<f64>,
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Zero wall time in the output so that runs are byte-identical.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip Stage 1.
    #[arg(long)]
    no_warm_start: bool,
    /// Per-node log on stderr.
    #[arg(long)]
    progress: bool,
    /// Write every node relaxation as an LP file into this directory.
    #[arg(long)]
    lp_dump_dir: Option<PathBuf>,
    /// JSON solver configuration; flags override it.
    #[arg(long, env = "NASH_SBNB_CONFIG")]
    config: Option<PathBuf>,
    /// Write the result JSON here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    game: PathBuf,
    /// Profile JSON: a list of per-player probability lists, or an object
    /// with a `delta` field such as a solve result.
    profile: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Bench spec JSON.
    spec: PathBuf,
    /// CSV output; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    deterministic: bool,
    /// Per-instance limit in seconds; overrides the spec.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct ScanArgs {
    game: PathBuf,
    /// Write the per-profile table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SCAN_CAP)]
    cap: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Exit code 2 is reserved for limit-terminated solves.
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let run = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Scan(a) => cmd_scan(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn read_game(path: &Path) -> Result<Game> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let trimmed = src.trim_start();
    let game = if trimmed.starts_with("NFG") {
        nfg::parse(&src)?.game
    } else if trimmed.starts_with('{') {
        from_json(&src)?.0
    } else {
        bail!("{}: neither an NFG nor a JSON game", path.display());
    };
    Ok(game)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn cmd_generate(a: GenerateArgs) -> Result<ExitCode> {
    let n = a.players as usize;
    let actions = match a.actions.as_slice() {
        [k] => vec![*k; n],
        list if list.len() == n => list.to_vec(),
        list => bail!("--actions lists {} counts for {n} players", list.len()),
    };
    if actions.contains(&0) {
        bail!("every player needs at least one action");
    }
    let (game, graph, name) = match a.generator {
        GenArg::Random => (generate_random::<f64>(&actions, a.seed)?, None, "random"),
        GenArg::Graphical => {
            let graph = Graph::of_kind(a.graph.into(), n, a.seed);
            (generate_graphical::<f64>(&actions, &graph, a.seed)?, Some(graph), "graphical")
        }
    };
    let format = a.format.unwrap_or_else(|| match a.output.as_deref().and_then(Path::extension) {
        Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Nfg,
    });
    let text = match format {
        Format::Nfg => nfg::write(&game, &format!("{name} game, seed {}", a.seed)),
        Format::Json => {
            let meta = GameMetadata {
                seed: Some(a.seed),
                generator: Some(name.into()),
                graph,
            };
            to_json(&game, &meta)?
        }
    };
    write_output(a.output.as_deref(), &text)?;
    eprintln!(
        "{name} game: {n} players, actions {:?}, {} entries, seed {}",
        actions,
        game.num_profiles() * n,
        a.seed
    );
    Ok(ExitCode::SUCCESS)
}

fn solve_config(a: &SolveArgs, g: &Game) -> Result<SolveConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let src = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&src).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => SolveConfig::default(),
    };
    match (a.mode, a.target_eps) {
        (Mode::SbnbE, None) => bail!("--mode sbnb-e requires --target-eps"),
        (Mode::Sbnb, Some(_)) => bail!("--target-eps needs --mode sbnb-e or local-only"),
        (_, Some(e)) if !(e >= 0.0) => bail!("--target-eps must be nonnegative"),
        (_, Some(e)) => cfg.varpi_target = Some(varpi_for_epsilon(e, g.max_actions())),
        (Mode::Sbnb, None) => cfg.varpi_target = None,
        (_, None) => {}
    }
    if let Some(x) = a.gap_tol {
        cfg.gap_tol_abs = x;
    }
    if a.time_limit.is_some() {
        cfg.time_limit_s = a.time_limit;
    }
    if let Some(x) = a.node_limit {
        cfg.node_limit = x;
    }
    if let Some(x) = a.workers {
        cfg.workers = x;
    }
    if let Some(x) = a.seed {
        cfg.seed = x;
    }
    if a.lp_dump_dir.is_some() {
        cfg.lp_dump_dir = a.lp_dump_dir.clone();
    }
    cfg.deterministic |= a.deterministic;
    cfg.progress |= a.progress;
    if a.no_warm_start {
        cfg.warm_start = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_solve(a: SolveArgs) -> Result<ExitCode> {
    let g = read_game(&a.game)?;
    let cfg = solve_config(&a, &g)?;
    let result = match a.mode {
        Mode::LocalOnly => solve_local_only(&g, &cfg)?,
        Mode::Sbnb | Mode::SbnbE => solve(&g, &cfg)?,
    };
    let mut text = result.to_json()?;
    text.push('\n');
    write_output(a.output.as_deref(), &text)?;
    eprintln!(
        "{}: varpi {:e}, certified eps {:e}, measured eps {:e}, {} nodes, {:.3} s",
        result.status,
        result.solution.varpi,
        result.certified_epsilon,
        result.measured_epsilon,
        result.stats.nodes,
        result.wall_time_s
    );
    Ok(match result.status {
        SolveStatus::Optimal | SolveStatus::EpsilonReached => ExitCode::SUCCESS,
        SolveStatus::Limit => ExitCode::from(EXIT_LIMIT),
    })
}

fn parse_profile(value: &Value) -> Result<Vec<Vec<f64>>> {
    let rows = match value {
        Value::Object(map) => map
            .get("delta")
            .or_else(|| map.get("profile"))
            .context("profile object has no `delta` field")?,
        v => v,
    };
    Ok(serde_json::from_value(rows.clone()).context("profile must be a list of probability lists")?)
}

fn cmd_eval(a: EvalArgs) -> Result<ExitCode> {
    let g = read_game(&a.game)?;
    let src = fs::read_to_string(&a.profile).with_context(|| format!("reading {}", a.profile.display()))?;
    let doc: Value = serde_json::from_str(&src).context("parsing profile JSON")?;
    let probs = parse_profile(&doc)?;
    if probs.len() != g.num_players() || probs.iter().zip(g.actions()).any(|(p, &k)| p.len() != k) {
        let dims: Vec<usize> = probs.iter().map(Vec::len).collect();
        bail!("profile dimensions {dims:?} do not match the game's actions {:?}", g.actions());
    }
    let profile = MixedProfile::new(probs)?;
    let ex = g.exploitability(&profile)?;
    let mut report = json!({
        "per_player": ex.per_player,
        "epsilon": ex.epsilon,
    });
    if let Some(c) = doc.get("certified_epsilon").and_then(Value::as_f64) {
        report["certified_epsilon"] = json!(c);
        report["within_certified"] = json!(ex.epsilon <= c);
    }
    write_output(None, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> Result<ExitCode> {
    let src = fs::read_to_string(&a.spec).with_context(|| format!("reading {}", a.spec.display()))?;
    let mut spec: BenchSpec = serde_json::from_str(&src).context("parsing bench spec")?;
    spec.config.deterministic |= a.deterministic;
    if a.time_limit.is_some() {
        spec.time_limit_s = a.time_limit;
    }
    if let Some(w) = a.workers {
        spec.config.workers = w;
    }
    let stderr = io::stderr();
    match &a.output {
        Some(p) => {
            let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            run_bench(&spec, io::BufWriter::new(file), stderr.lock())?;
        }
        None => {
            run_bench(&spec, io::stdout().lock(), stderr.lock())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan(a: ScanArgs) -> Result<ExitCode> {
    let g = read_game(&a.game)?;
    let scan = pure_epsilon_scan(&g, a.cap)?;
    if let Some(p) = &a.csv {
        let file = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_scan_csv(&g, &scan, io::BufWriter::new(file))?;
    }
    let report = json!({
        "best_profile": scan.best_profile.actions,
        "best_epsilon": scan.best_epsilon,
        "profiles": g.num_profiles(),
    });
    write_output(None, &format!("{}\n", serde_json::to_string_pretty(&report)?))?;
    Ok(ExitCode::SUCCESS)
}
