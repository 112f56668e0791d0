//! Seeded benchmark sweeps producing one CSV row per instance.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{generate_graphical, generate_random, Graph, GraphKind, NormalFormGame};
use crate::sbnb::{solve, SolveConfig, SolveStatus};

/// First line of every bench CSV; bump the version when columns change.
pub const CSV_HEADER_COMMENT: &str = "# nash-sbnb bench csv v1";
pub const CSV_COLUMNS: [&str; 10] = [
    "instance",
    "players",
    "actions",
    "seed",
    "status",
    "wall_time_s",
    "varpi",
    "certified_eps",
    "measured_eps",
    "nodes",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Random,
    Graphical,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Random => "random",
            Generator::Graphical => "graphical",
        })
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Generator::Random),
            "graphical" => Ok(Generator::Graphical),
            _ => Err(Error::InvalidArgument(format!("unknown generator `{s}` (random, graphical)"))),
        }
    }
}

/// Builds a generated game. The graph is ignored for `random`.
pub fn generate(
    generator: Generator,
    graph: GraphKind,
    players: usize,
    actions: usize,
    seed: u64,
) -> Result<(NormalFormGame<f64>, Option<Graph>)> {
    let acts = vec![actions; players];
    match generator {
        Generator::Random => Ok((generate_random(&acts, seed)?, None)),
        Generator::Graphical => {
            let graph = Graph::of_kind(graph, players, seed);
            Ok((generate_graphical(&acts, &graph, seed)?, Some(graph)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRange {
    pub start: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub players: usize,
    pub actions: usize,
    pub generator: Generator,
    #[serde(default = "default_graph")]
    pub graph: GraphKind,
    pub seeds: SeedRange,
}

fn default_graph() -> GraphKind {
    GraphKind::Complete
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub cells: Vec<BenchCell>,
    #[serde(default)]
    pub config: SolveConfig,
    /// Per-instance time limit; overrides the config's.
    #[serde(default)]
    pub time_limit_s: Option<f64>,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::InvalidArgument("bench spec has no cells".into()));
        }
        for (k, c) in self.cells.iter().enumerate() {
            if c.players < 2 || c.actions == 0 || c.seeds.count == 0 {
                return Err(Error::InvalidArgument(format!(
                    "cell {k}: need players >= 2, actions >= 1 and at least one seed"
                )));
            }
            if c.seeds.start.checked_add(c.seeds.count).is_none() {
                return Err(Error::InvalidArgument(format!("cell {k}: seed range overflows")));
            }
        }
        self.config.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub players: usize,
    pub actions: usize,
    pub seed: u64,
    /// Solve status, or `error: ...` when the instance failed.
    pub status: String,
    pub wall_time_s: f64,
    pub varpi: Option<f64>,
    pub certified_eps: Option<f64>,
    pub measured_eps: Option<f64>,
    pub nodes: Option<u64>,
}

/// Runs every instance sequentially, writing CSV to `csv_out` and a per-cell
/// timeout summary to `summary`. Generated games are rescaled to `[0, 1]`
/// per player so that tolerances mean the same across instances.
pub fn run_bench<W: Write, S: Write>(spec: &BenchSpec, csv_out: W, mut summary: S) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    let mut out = csv_out;
    writeln!(out, "{CSV_HEADER_COMMENT}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    let mut cfg = spec.config.clone();
    if spec.time_limit_s.is_some() {
        cfg.time_limit_s = spec.time_limit_s;
    }
    let mut rows = Vec::new();
    for cell in &spec.cells {
        let mut limits = 0;
        let mut errors = 0;
        for seed in cell.seeds.start..cell.seeds.start + cell.seeds.count {
            let instance = format!(
                "{}-{}-{}p{}a-s{seed}",
                cell.generator, cell.graph, cell.players, cell.actions
            );
            let row = match run_one(cell, seed, &cfg) {
                Ok(r) => {
                    if r.status == SolveStatus::Limit.to_string() {
                        limits += 1;
                    }
                    BenchRow { instance, ..r }
                }
                Err(e) => {
                    errors += 1;
                    BenchRow {
                        instance,
                        players: cell.players,
                        actions: cell.actions,
                        seed,
                        status: format!("error: {e}"),
                        wall_time_s: 0.0,
                        varpi: None,
                        certified_eps: None,
                        measured_eps: None,
                        nodes: None,
                    }
                }
            };
            w.serialize(&row)?;
            w.flush()?;
            rows.push(row);
        }
        let total = cell.seeds.count;
        writeln!(
            summary,
            "{} {}p x {}a ({}): {limits}/{total} hit the limit ({:.1}%), {errors} errors",
            cell.generator,
            cell.players,
            cell.actions,
            cell.graph,
            100.0 * limits as f64 / total as f64
        )?;
    }
    w.flush()?;
    Ok(rows)
}

fn run_one(cell: &BenchCell, seed: u64, cfg: &SolveConfig) -> Result<BenchRow> {
    let (g, _) = generate(cell.generator, cell.graph, cell.players, cell.actions, seed)?;
    let (g, _) = g.normalize();
    let cfg = SolveConfig { seed, ..cfg.clone() };
    let r = solve(&g, &cfg)?;
    Ok(BenchRow {
        instance: String::new(),
        players: cell.players,
        actions: cell.actions,
        seed,
        status: r.status.to_string(),
        wall_time_s: r.wall_time_s,
        varpi: Some(r.solution.varpi),
        certified_eps: Some(r.certified_epsilon),
        measured_eps: Some(r.measured_epsilon),
        nodes: Some(r.stats.nodes),
    })
}
