//! Two-stage spatial branch-and-bound over the penalized program.
//!
//! Stage 1 runs [`local_solve`] to seed the incumbent. Stage 2 explores
//! boxes over `(delta, v)`: each node's McCormick relaxation gives a lower
//! bound, the LP point is projected to a feasible profile to improve the
//! incumbent, and nodes are pruned, fathomed or split on a continuous
//! variable. Because every game has an equilibrium the optimal penalty is
//! zero, so a near-zero incumbent prunes almost everything.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formulation::{epsilon_bound, CandidateSolution};
use crate::game::{MixedProfile, NormalFormGame, PureProfile};
use crate::local_search::{
    best_response_walk, local_solve, local_solve_from, local_solve_restarts, penalty_at, polish_support,
    LocalSearchConfig,
};
use crate::oracle::pure_epsilon_scan;
use crate::lp::{solve_lp, LpStatus};
use crate::relax::{build_relaxation, tighten_bounds, BoxVar, Interval, NodeBox, Relaxation, TightenOptions};
use crate::scalar::Scalar;

/// Node pruning slack: a node is closed once its bound reaches the
/// incumbent minus this.
pub const PRUNE_TOL: f64 = 1e-12;
/// A node is fathomed when its best projected point is within this of its bound.
pub const FATHOM_TOL: f64 = 1e-9;
/// Variables narrower than this are never split.
pub const MIN_BRANCH_WIDTH: f64 = 1e-7;
/// Split points are kept this fraction of the width away from either end.
pub const SPLIT_CLAMP: f64 = 0.2;
/// Stage 1 scans pure profiles only for games with at most this many.
pub const PURE_SCAN_LIMIT: usize = 100_000;
/// With a penalty target, Stage 1 keeps restarting up to this multiple of
/// the configured restarts while the target is unmet.
pub const TARGET_RESTART_FACTOR: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchRule {
    /// Largest total McCormick violation, attributed to the product's factors.
    MostViolated,
    Widest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    /// Stop with `optimal` once `incumbent - global_lower` is at most this.
    pub gap_tol_abs: f64,
    /// Early stop with `epsilon_reached` once the incumbent penalty is at
    /// most this.
    pub varpi_target: Option<f64>,
    pub time_limit_s: Option<f64>,
    pub node_limit: u64,
    pub branching: BranchRule,
    /// Consecutive levels a child is processed right after its parent
    /// before returning to best-bound order; 0 is pure best-bound.
    pub plunge_depth: usize,
    /// Run Stage 1 before the tree search.
    pub warm_start: bool,
    /// Stage 1 also scans every pure profile (small games only, see
    /// [`PURE_SCAN_LIMIT`]).
    pub pure_scan: bool,
    /// Polish improved incumbents with a short descent and a Newton step.
    pub polish: bool,
    pub polish_iters: usize,
    /// Optimality-based tightening of the root box (delta variables).
    pub tighten_root: bool,
    pub workers: usize,
    /// Report zero wall time so that results are byte-identical.
    pub deterministic: bool,
    pub seed: u64,
    pub local: LocalSearchConfig,
    /// Tab-separated per-node log on stderr.
    pub progress: bool,
    /// Directory receiving one LP file per node relaxation.
    pub lp_dump_dir: Option<PathBuf>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            gap_tol_abs: 1e-9,
            varpi_target: None,
            time_limit_s: None,
            node_limit: 1_000_000,
            branching: BranchRule::MostViolated,
            plunge_depth: 4,
            warm_start: true,
            pure_scan: true,
            polish: true,
            polish_iters: 200,
            tighten_root: true,
            workers: 1,
            deterministic: false,
            seed: 0,
            local: LocalSearchConfig::default(),
            progress: false,
            lp_dump_dir: None,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        let nonneg = |x: f64| x >= 0.0;
        if !nonneg(self.gap_tol_abs)
            || !self.varpi_target.is_none_or(nonneg)
            || !self.time_limit_s.is_none_or(nonneg)
        {
            return Err(Error::InvalidArgument("tolerances and limits must be nonnegative".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidArgument("at least one worker is required".into()));
        }
        self.local.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    EpsilonReached,
    Limit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::EpsilonReached => "epsilon_reached",
            SolveStatus::Limit => "limit",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_solves: u64,
    pub pruned: u64,
    pub fathomed: u64,
    pub infeasible: u64,
    pub branched: u64,
    pub max_depth: usize,
    pub stage1_varpi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<T> {
    pub solution: CandidateSolution<T>,
    pub status: SolveStatus,
    pub certified_epsilon: T,
    pub measured_epsilon: T,
    /// `None` until the root relaxation has been solved.
    pub lower_bound: Option<T>,
    pub stats: SolveStats,
    pub wall_time_s: f64,
    pub seed: u64,
    pub config: SolveConfig,
}

/// JSON form of a [`SolveResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub varpi: f64,
    pub certified_epsilon: f64,
    pub measured_epsilon: f64,
    pub delta: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub nodes: u64,
    pub lp_solves: u64,
    pub lower_bound: Option<f64>,
    pub wall_time_s: f64,
    pub seed: u64,
    pub stats: SolveStats,
    pub config: SolveConfig,
}

impl<T: Scalar> SolveResult<T> {
    pub fn report(&self) -> SolveReport {
        SolveReport {
            status: self.status,
            varpi: self.solution.varpi.as_f64(),
            certified_epsilon: self.certified_epsilon.as_f64(),
            measured_epsilon: self.measured_epsilon.as_f64(),
            delta: crate::formulation::to_f64_rows(self.solution.delta.probs()),
            v: self.solution.v.iter().map(|x| x.as_f64()).collect(),
            nodes: self.stats.nodes,
            lp_solves: self.stats.lp_solves,
            lower_bound: self.lower_bound.map(Scalar::as_f64),
            wall_time_s: self.wall_time_s,
            seed: self.seed,
            stats: self.stats.clone(),
            config: self.config.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.report())?)
    }
}

#[derive(Clone, Debug)]
pub struct Node<T> {
    pub id: u64,
    pub depth: usize,
    pub bbox: NodeBox<T>,
    /// Parent's bound until the node's own relaxation is solved.
    pub lower_bound: T,
    plunge: usize,
}

/// Heap entry ordered so that the smallest `(bound, id)` pops first.
struct Queued<T>(Node<T>);

impl<T: Scalar> PartialEq for Queued<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Queued<T> {}

impl<T: Scalar> PartialOrd for Queued<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Queued<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.0.lower_bound.as_f64();
        let b = other.0.lower_bound.as_f64();
        b.total_cmp(&a).then_with(|| other.0.id.cmp(&self.0.id))
    }
}

/// Open nodes, incumbent and counters of a running search.
pub struct SolverState<T> {
    open: BinaryHeap<Queued<T>>,
    /// Processed right after its parent (plunging).
    plunge_next: Option<Node<T>>,
    pub incumbent: Option<CandidateSolution<T>>,
    /// Smallest bound among closed leaves; `+inf` when none.
    closed_lower: T,
    root_solved: bool,
    next_id: u64,
    pub stats: SolveStats,
}

impl<T: Scalar> SolverState<T> {
    fn new() -> Self {
        Self {
            open: BinaryHeap::new(),
            plunge_next: None,
            incumbent: None,
            closed_lower: T::infinity(),
            root_solved: false,
            next_id: 0,
            stats: SolveStats::default(),
        }
    }

    pub fn incumbent_varpi(&self) -> T {
        self.incumbent.as_ref().map_or(T::infinity(), |c| c.varpi)
    }

    /// `min(open bounds, closed leaf bounds, incumbent)`; `-inf` before the
    /// root relaxation is solved.
    pub fn global_lower(&self) -> T {
        if !self.root_solved {
            return T::neg_infinity();
        }
        let mut lo = self.closed_lower.min(self.incumbent_varpi());
        for q in &self.open {
            lo = lo.min(q.0.lower_bound);
        }
        if let Some(n) = &self.plunge_next {
            lo = lo.min(n.lower_bound);
        }
        lo
    }

    pub fn gap(&self) -> T {
        self.incumbent_varpi() - self.global_lower()
    }

    fn push(&mut self, node: Node<T>) {
        self.open.push(Queued(node));
    }

    fn close(&mut self, bound: T) {
        self.closed_lower = self.closed_lower.min(bound);
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn offer(&mut self, cand: CandidateSolution<T>) -> bool {
        if cand.varpi < self.incumbent_varpi() {
            self.incumbent = Some(cand);
            true
        } else {
            false
        }
    }
}

/// Next node: the plunge child if any, else the best-bound open node.
pub fn node_order<T: Scalar>(state: &mut SolverState<T>) -> Option<Node<T>> {
    state.plunge_next.take().or_else(|| state.open.pop().map(|q| q.0))
}

/// Projects `x` onto `{sum = 1, lo <= x <= hi}` by bisection on a shift.
fn project_simplex_box<T: Scalar>(x: &[T], bounds: &[Interval<T>]) -> Vec<T> {
    let eval = |lambda: T| -> T {
        x.iter()
            .zip(bounds)
            .map(|(&xi, b)| (xi - lambda).max(b.lo).min(b.hi))
            .sum()
    };
    let spread = x.iter().fold(T::one(), |acc, v| acc.max(v.abs())) + T::one();
    let (mut lo, mut hi) = (-spread - T::one(), spread + T::one());
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        if eval(mid) > T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = (lo + hi) / T::lit(2.0);
    let mut out: Vec<T> = x
        .iter()
        .zip(bounds)
        .map(|(&xi, b)| (xi - lambda).max(b.lo).min(b.hi))
        .collect();
    // Exact renormalization; stays a probability vector even if the box
    // constraint is nudged by rounding.
    for v in &mut out {
        *v = v.max(T::zero());
    }
    let s: T = out.iter().copied().sum();
    if s > T::zero() {
        for v in &mut out {
            *v /= s;
        }
    } else {
        let k = T::from_usize(out.len()).unwrap();
        out.iter_mut().for_each(|v| *v = T::one() / k);
    }
    out
}

/// Projects the LP point of a node to a feasible profile and, with
/// `cfg.polish`, tries three repairs from it: a Newton support polish, a
/// best-response walk from its rounding, and a short descent. Returns the
/// best candidate found.
pub fn improve_incumbent<T: Scalar>(
    g: &NormalFormGame<T>,
    cfg: &SolveConfig,
    bbox: &NodeBox<T>,
    relax: &Relaxation<T>,
    x: &[T],
) -> CandidateSolution<T> {
    let (raw, _) = relax.point(x);
    let probs: Vec<Vec<T>> = raw
        .iter()
        .zip(&bbox.delta)
        .map(|(p, b)| project_simplex_box(p, b))
        .collect();
    let mut best = CandidateSolution::from_profile(g, MixedProfile::from_raw(probs.clone()))
        .expect("projection keeps the game's shape");
    if !cfg.polish {
        return best;
    }
    if let Some((p, v)) = polish_support(g, &probs) {
        if v < best.varpi {
            best = CandidateSolution::from_profile(g, MixedProfile::from_raw(p)).expect("polished profile");
        }
    }
    if best.varpi > T::zero() {
        let rounded: Vec<usize> = probs.iter().map(|p| crate::game::argmax(p)).collect();
        let (a, regret) = best_response_walk(g, &rounded, g.num_players() * g.max_actions());
        if regret < best.varpi {
            let pure = MixedProfile::pure(g.actions(), &PureProfile::new(a)).expect("walk stays in range");
            let cand = CandidateSolution::from_profile(g, pure).expect("pure profile");
            if cand.varpi < best.varpi {
                best = cand;
            }
        }
    }
    if best.varpi > T::lit(cfg.local.target_varpi) && cfg.polish_iters > 0 {
        // Mix in a little uniform mass so every action can regain weight.
        let mix = T::lit(1e-3);
        let start: Vec<Vec<T>> = probs
            .iter()
            .map(|p| {
                let k = T::from_usize(p.len()).unwrap();
                p.iter().map(|&q| (T::one() - mix) * q + mix / k).collect()
            })
            .collect();
        let local = LocalSearchConfig {
            max_iters: cfg.polish_iters,
            restarts: 1,
            record_trace: false,
            parallel: false,
            ..cfg.local.clone()
        };
        let out = local_solve_from(g, &MixedProfile::from_raw(start), &local);
        if out.candidate.varpi < best.varpi {
            best = out.candidate;
        }
    }
    best
}

/// Chooses a branching variable and split point at an LP point. Returns
/// `None` when every variable is narrower than [`MIN_BRANCH_WIDTH`].
pub fn select_branch_variable<T: Scalar>(
    bbox: &NodeBox<T>,
    relax: Option<&Relaxation<T>>,
    x: Option<&[T]>,
    rule: BranchRule,
) -> Option<(BoxVar, T)> {
    let nv = bbox.num_vars();
    let floor = T::lit(MIN_BRANCH_WIDTH);
    let mut score = vec![T::zero(); nv];
    if let (BranchRule::MostViolated, Some(r), Some(x)) = (rule, relax, x) {
        for (p, gap) in r.products.iter().zip(r.product_gaps(x)) {
            for &m in &p.members {
                score[m] += gap;
            }
        }
    }
    let mut best: Option<(usize, T, T)> = None;
    for idx in 0..nv {
        let w = bbox.get(bbox.var(idx)).width();
        if w < floor {
            continue;
        }
        let s = score[idx];
        let better = match best {
            None => true,
            Some((_, bs, bw)) => s > bs || (s == bs && w > bw),
        };
        if better {
            best = Some((idx, s, w));
        }
    }
    let (idx, _, _) = best?;
    let var = bbox.var(idx);
    let iv = bbox.get(var);
    let w = iv.width();
    let mid = (iv.lo + iv.hi) / T::lit(2.0);
    let guess = match (relax, x) {
        (Some(r), Some(x)) if rule == BranchRule::MostViolated => x[r.column(var)],
        _ => mid,
    };
    let c = T::lit(SPLIT_CLAMP) * w;
    Some((var, guess.max(iv.lo + c).min(iv.hi - c)))
}

enum Outcome<T> {
    /// Relaxation infeasible, or box inconsistent (no LP solved).
    Infeasible { solved_lp: bool },
    /// LP unresolved (iteration limit); branch on the widest variable.
    Unresolved,
    Solved {
        bound: T,
        relax: Relaxation<T>,
        x: Vec<T>,
        candidate: CandidateSolution<T>,
    },
}

fn evaluate<T: Scalar>(g: &NormalFormGame<T>, cfg: &SolveConfig, node: &Node<T>) -> Outcome<T> {
    let Some(relax) = build_relaxation(g, &node.bbox) else {
        return Outcome::Infeasible { solved_lp: false };
    };
    if let Some(dir) = &cfg.lp_dump_dir {
        let path = dir.join(format!("node_{}.lp", node.id));
        if let Err(e) = std::fs::write(&path, relax.lp.to_lp_format()) {
            eprintln!("warning: could not write {}: {e}", path.display());
        }
    }
    let sol = solve_lp(&relax.lp);
    match sol.status {
        LpStatus::Infeasible => Outcome::Infeasible { solved_lp: true },
        LpStatus::IterationLimit | LpStatus::Unbounded => Outcome::Unresolved,
        LpStatus::Optimal => {
            let bound = node.lower_bound.max(sol.objective);
            let candidate = improve_incumbent(g, cfg, &node.bbox, &relax, &sol.x);
            Outcome::Solved {
                bound,
                relax,
                x: sol.x,
                candidate,
            }
        }
    }
}

fn stage1_config(cfg: &SolveConfig) -> LocalSearchConfig {
    let time_limit_s = match (cfg.local.time_limit_s, cfg.time_limit_s) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    LocalSearchConfig {
        seed: cfg.seed,
        parallel: cfg.local.parallel || cfg.workers > 1,
        time_limit_s,
        ..cfg.local.clone()
    }
}

/// Solves for an equilibrium; see the module documentation.
pub fn solve<T: Scalar>(g: &NormalFormGame<T>, cfg: &SolveConfig) -> Result<SolveResult<T>> {
    if cfg.progress {
        let stderr = std::io::stderr();
        let mut lock = stderr.lock();
        solve_with_log(g, cfg, Some(&mut lock))
    } else {
        solve_with_log(g, cfg, None)
    }
}

/// Header of the progress log written by [`solve_with_log`].
pub const PROGRESS_HEADER: &str = "node\tdepth\tbound\tincumbent\tgap\tevent";

/// [`solve`] with the per-node progress log sent to `log`.
pub fn solve_with_log<T: Scalar>(
    g: &NormalFormGame<T>,
    cfg: &SolveConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let started = Instant::now();
    let elapsed = || started.elapsed().as_secs_f64();
    let mut state = SolverState::<T>::new();
    let gap_tol = T::lit(cfg.gap_tol_abs);
    let target = cfg.varpi_target.map(T::lit);
    let prune_tol = T::lit(PRUNE_TOL);

    if cfg.warm_start {
        let local = stage1_config(cfg);
        let out = local_solve(g, &local);
        state.offer(out.candidate);
        if cfg.pure_scan && g.num_profiles() <= PURE_SCAN_LIMIT && state.incumbent_varpi() > T::zero() {
            let scan = pure_epsilon_scan(g, PURE_SCAN_LIMIT)?;
            if scan.best_epsilon < state.incumbent_varpi() {
                let pure = MixedProfile::pure(g.actions(), &scan.best_profile)?;
                state.offer(CandidateSolution::from_profile(g, pure)?);
            }
        }
        if let Some(t) = target.filter(|&t| state.incumbent_varpi() > t) {
            // Reaching the target ends the run, so fresh starts are cheaper
            // than the tree.
            let more = LocalSearchConfig {
                target_varpi: t.as_f64(),
                time_limit_s: local.time_limit_s.map(|l| (l - elapsed()).max(0.0)),
                ..local.clone()
            };
            let range = local.restarts..local.restarts * TARGET_RESTART_FACTOR;
            state.offer(local_solve_restarts(g, &more, range).candidate);
        }
        state.stats.stage1_varpi = Some(state.incumbent_varpi().as_f64());
    }

    let mut root_box = NodeBox::root(g);
    let out_of_time = |t: f64| cfg.time_limit_s.is_some_and(|lim| t >= lim);
    let target_met = target.is_some_and(|t| state.incumbent_varpi() <= t);
    if cfg.tighten_root && state.incumbent_varpi() > gap_tol && !target_met && !out_of_time(elapsed()) {
        let cutoff = state.incumbent_varpi().min(
            (0..g.num_players()).fold(T::zero(), |acc, i| acc.max(g.u_max(i) - g.u_min(i))),
        );
        if let Some(b) = tighten_bounds(g, &root_box, cutoff, TightenOptions::default()) {
            root_box = b;
        }
    }
    let root_id = state.fresh_id();
    state.push(Node {
        id: root_id,
        depth: 0,
        bbox: root_box,
        lower_bound: T::neg_infinity(),
        plunge: 0,
    });
    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "{PROGRESS_HEADER}")?;
    }

    let status = loop {
        if state.root_solved && state.gap() <= gap_tol {
            break SolveStatus::Optimal;
        }
        // The certificate needs only the penalty, not a lower bound.
        if target.is_some_and(|t| state.incumbent_varpi() <= t) {
            break SolveStatus::EpsilonReached;
        }
        if state.root_solved {
            if state.open.is_empty() && state.plunge_next.is_none() {
                // Exhausted down to the width floor without closing the gap.
                break SolveStatus::Limit;
            }
            if state.stats.nodes >= cfg.node_limit {
                break SolveStatus::Limit;
            }
            if out_of_time(elapsed()) {
                break SolveStatus::Limit;
            }
        } else if out_of_time(elapsed()) {
            break SolveStatus::Limit;
        }

        // Gather a batch: one node for a single worker.
        let mut batch = Vec::with_capacity(cfg.workers);
        while batch.len() < cfg.workers.max(1) {
            let Some(node) = node_order(&mut state) else { break };
            if node.lower_bound >= state.incumbent_varpi() - prune_tol {
                state.stats.pruned += 1;
                state.close(node.lower_bound);
                log_event(&mut log, &state, &node, node.lower_bound, "pruned")?;
                continue;
            }
            batch.push(node);
            if cfg.workers == 1 {
                break;
            }
        }
        if batch.is_empty() {
            continue;
        }

        let outcomes: Vec<Outcome<T>> = if batch.len() > 1 {
            batch.par_iter().map(|n| evaluate(g, cfg, n)).collect()
        } else {
            batch.iter().map(|n| evaluate(g, cfg, n)).collect()
        };

        for (node, outcome) in batch.into_iter().zip(outcomes) {
            state.stats.nodes += 1;
            state.stats.max_depth = state.stats.max_depth.max(node.depth);
            state.root_solved = true;
            match outcome {
                Outcome::Infeasible { solved_lp } => {
                    state.stats.lp_solves += u64::from(solved_lp);
                    state.stats.infeasible += 1;
                    state.close(T::infinity());
                    log_event(&mut log, &state, &node, T::infinity(), "infeasible")?;
                }
                Outcome::Unresolved => {
                    state.stats.lp_solves += 1;
                    let bound = node.lower_bound;
                    match select_branch_variable(&node.bbox, None, None, BranchRule::Widest) {
                        Some((var, at)) => {
                            branch(&mut state, &node, bound, var, at, None, cfg.plunge_depth, cfg.workers);
                            log_event(&mut log, &state, &node, bound, "unresolved")?;
                        }
                        None => {
                            state.close(bound);
                            log_event(&mut log, &state, &node, bound, "floor")?;
                        }
                    }
                }
                Outcome::Solved {
                    bound,
                    relax,
                    x,
                    candidate,
                } => {
                    state.stats.lp_solves += 1;
                    let node_upper = candidate.varpi;
                    state.offer(candidate);
                    if bound >= state.incumbent_varpi() - prune_tol {
                        state.stats.pruned += 1;
                        state.close(bound);
                        log_event(&mut log, &state, &node, bound, "pruned")?;
                    } else if node_upper - bound <= T::lit(FATHOM_TOL) {
                        state.stats.fathomed += 1;
                        state.close(bound);
                        log_event(&mut log, &state, &node, bound, "fathomed")?;
                    } else {
                        match select_branch_variable(&node.bbox, Some(&relax), Some(&x), cfg.branching) {
                            Some((var, at)) => {
                                let lp_val = x[relax.column(var)];
                                branch(&mut state, &node, bound, var, at, Some(lp_val), cfg.plunge_depth, cfg.workers);
                                state.stats.branched += 1;
                                log_event(&mut log, &state, &node, bound, "branched")?;
                            }
                            None => {
                                state.close(bound);
                                log_event(&mut log, &state, &node, bound, "floor")?;
                            }
                        }
                    }
                }
            }
        }
    };

    let solution = match state.incumbent.take() {
        Some(c) => c,
        None => CandidateSolution::from_profile(g, MixedProfile::uniform(g.actions()))?,
    };
    debug_assert!(solution.varpi == penalty_at(g, solution.delta.probs()));
    let lower_bound = state.root_solved.then(|| {
        let inc = solution.varpi;
        state.incumbent = Some(solution.clone());
        let lo = state.global_lower();
        lo.min(inc)
    });
    let certified_epsilon = epsilon_bound(solution.varpi, g)?;
    let measured_epsilon = g.exploitability(&solution.delta)?.epsilon;
    Ok(SolveResult {
        solution,
        status,
        certified_epsilon,
        measured_epsilon,
        lower_bound,
        stats: state.stats,
        wall_time_s: if cfg.deterministic { 0.0 } else { elapsed() },
        seed: cfg.seed,
        config: cfg.clone(),
    })
}

/// Stage 1 alone. No lower bound is produced, so the status is never
/// `optimal`: `epsilon_reached` once the penalty is at most `varpi_target`
/// (or the local search target when unset), `limit` otherwise.
pub fn solve_local_only<T: Scalar>(g: &NormalFormGame<T>, cfg: &SolveConfig) -> Result<SolveResult<T>> {
    cfg.validate()?;
    let started = Instant::now();
    let out = local_solve(g, &stage1_config(cfg));
    let solution = out.candidate;
    let target = T::lit(cfg.varpi_target.unwrap_or(cfg.local.target_varpi));
    let status = if solution.varpi <= target {
        SolveStatus::EpsilonReached
    } else {
        SolveStatus::Limit
    };
    let certified_epsilon = epsilon_bound(solution.varpi, g)?;
    let measured_epsilon = g.exploitability(&solution.delta)?.epsilon;
    let stats = SolveStats {
        stage1_varpi: Some(solution.varpi.as_f64()),
        ..SolveStats::default()
    };
    Ok(SolveResult {
        solution,
        status,
        certified_epsilon,
        measured_epsilon,
        lower_bound: None,
        stats,
        wall_time_s: if cfg.deterministic { 0.0 } else { started.elapsed().as_secs_f64() },
        seed: cfg.seed,
        config: cfg.clone(),
    })
}

#[allow(clippy::too_many_arguments)]
fn branch<T: Scalar>(
    state: &mut SolverState<T>,
    node: &Node<T>,
    bound: T,
    var: BoxVar,
    at: T,
    lp_val: Option<T>,
    plunge_depth: usize,
    workers: usize,
) {
    let (left, right) = node.bbox.split(var, at);
    // The child holding the LP point is explored first when plunging.
    let left_first = lp_val.is_none_or(|v| v <= at);
    let ordered = if left_first { [left, right] } else { [right, left] };
    let mut first = true;
    for bbox in ordered {
        if !bbox.is_consistent() {
            state.stats.infeasible += 1;
            continue;
        }
        let child = Node {
            id: state.fresh_id(),
            depth: node.depth + 1,
            bbox,
            lower_bound: bound,
            plunge: 0,
        };
        if first && workers == 1 && node.plunge < plunge_depth && state.plunge_next.is_none() {
            state.plunge_next = Some(Node {
                plunge: node.plunge + 1,
                ..child
            });
        } else {
            state.push(child);
        }
        first = false;
    }
}

fn log_event<T: Scalar>(
    log: &mut Option<&mut dyn Write>,
    state: &SolverState<T>,
    node: &Node<T>,
    bound: T,
    event: &str,
) -> Result<()> {
    if let Some(w) = log.as_deref_mut() {
        writeln!(
            w,
            "{}\t{}\t{:e}\t{:e}\t{:e}\t{event}",
            node.id,
            node.depth,
            bound.as_f64(),
            state.incumbent_varpi().as_f64(),
            state.gap().as_f64()
        )?;
    }
    Ok(())
}
