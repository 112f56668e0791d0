//! Warm start: a low-penalty feasible point found by mirror descent.
//!
//! The nonsmooth objective `max_{i,a} delta_i(a) (v*_i - u_i(a, delta_{-i}))`
//! is replaced by its log-sum-exp smoothing at temperature `tau`, with
//! `v*_i = max_a u_i(a, delta_{-i})` eliminated through its envelope. Each
//! step is an exponentiated-gradient update on every simplex. Promising
//! iterates are finished by Newton's method on the indifference system of a
//! guessed support, which lands on exact equilibria with zero off-support
//! mass.

use std::io::Write;
use std::ops::Range;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::formulation::{penalty_from_deviations, CandidateSolution};
use crate::game::{argmax, max_of, MixedProfile, NormalFormGame};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalSearchConfig {
    /// Descent iterations per restart.
    pub max_iters: usize,
    /// Number of starts; the first is uniform, the rest Dirichlet(1).
    pub restarts: usize,
    /// Stop as soon as a point reaches this penalty.
    pub target_varpi: f64,
    /// Initial smoothing temperature, relative to the payoff range.
    pub tau: f64,
    /// Temperature floor, relative to the payoff range.
    pub tau_min: f64,
    /// Iterations without improvement before halving `tau`.
    pub stall_iters: usize,
    /// Initial step size, relative to the inverse payoff range.
    pub step: f64,
    pub step_grow: f64,
    pub step_shrink: f64,
    /// Try a Newton support polish every this many iterations.
    pub polish_every: usize,
    pub seed: u64,
    /// Run restarts on the rayon pool; the result is identical to sequential.
    pub parallel: bool,
    pub record_trace: bool,
    /// Wall-clock budget in seconds for all restarts together.
    pub time_limit_s: Option<f64>,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            max_iters: 4000,
            restarts: 8,
            target_varpi: 1e-8,
            tau: 0.05,
            tau_min: 1e-6,
            stall_iters: 50,
            step: 1.0,
            step_grow: 1.1,
            step_shrink: 0.5,
            polish_every: 100,
            seed: 0,
            parallel: false,
            record_trace: false,
            time_limit_s: None,
        }
    }
}

impl LocalSearchConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::Error;
        if self.max_iters == 0 || self.restarts == 0 {
            return Err(Error::InvalidArgument("max_iters and restarts must be at least 1".into()));
        }
        if !(self.target_varpi >= 0.0) {
            return Err(Error::InvalidArgument("target_varpi must be nonnegative".into()));
        }
        if self.time_limit_s.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::InvalidArgument("time limit must be nonnegative".into()));
        }
        if !(self.tau > 0.0) || !(self.tau_min > 0.0) {
            return Err(Error::InvalidArgument("smoothing temperature must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub restart: usize,
    pub iteration: usize,
    pub varpi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalSolution<T> {
    pub candidate: CandidateSolution<T>,
    /// Whether `varpi <= target_varpi`, i.e. the point is certified to be an
    /// `epsilon_bound(varpi)`-equilibrium of the requested quality.
    pub reached_target: bool,
    pub restart: usize,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
}

/// Writes a trace as `restart,iteration,varpi` CSV.
pub fn write_trace<W: Write>(trace: &[TracePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in trace {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

fn range_of<T: Scalar>(g: &NormalFormGame<T>) -> T {
    (0..g.num_players()).fold(T::zero(), |acc, i| acc.max(g.u_max(i) - g.u_min(i)))
}

/// Complementarity terms `delta_i(a) (v*_i - U_i(a))` and the deviation table.
fn terms<T: Scalar>(g: &NormalFormGame<T>, probs: &[Vec<T>]) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
    let dev = g.deviation_payoffs_unchecked(probs);
    let terms = dev
        .iter()
        .zip(probs)
        .map(|(d, p)| {
            let best = max_of(d);
            d.iter().zip(p).map(|(&u, &q)| q * (best - u)).collect()
        })
        .collect();
    (terms, dev)
}

fn log_sum_exp<T: Scalar>(terms: &[Vec<T>], tau: T) -> (T, T) {
    let top = terms.iter().flatten().copied().fold(T::neg_infinity(), T::max);
    let s: T = terms.iter().flatten().map(|&x| ((x - top) / tau).exp()).sum();
    (top, top + tau * s.ln())
}

/// `tau * log sum_{i,a} exp(delta_i(a) (v*_i - u_i(a, delta_{-i})) / tau)`.
/// Accepts any nonnegative vectors of the right shape.
pub fn smoothed_penalty<T: Scalar>(g: &NormalFormGame<T>, probs: &[Vec<T>], tau: T) -> T {
    let (t, _) = terms(g, probs);
    log_sum_exp(&t, tau).1
}

/// Gradient of [`smoothed_penalty`] with respect to every `delta_i(a)`,
/// taking the first maximizing action as the subgradient of `v*_i`.
pub fn penalty_gradient<T: Scalar>(g: &NormalFormGame<T>, probs: &[Vec<T>], tau: T) -> Vec<Vec<T>> {
    let n = g.num_players();
    let (t, dev) = terms(g, probs);
    let (top, _) = log_sum_exp(&t, tau);
    let mut weight: Vec<Vec<T>> = t
        .iter()
        .map(|row| row.iter().map(|&x| ((x - top) / tau).exp()).collect())
        .collect();
    let total: T = weight.iter().flatten().copied().sum();
    for w in weight.iter_mut().flatten() {
        *w /= total;
    }
    let mut grad: Vec<Vec<T>> = g.actions().iter().map(|&k| vec![T::zero(); k]).collect();
    for i in 0..n {
        let best = argmax(&dev[i]);
        // own coordinates: d/d delta_i(a) of delta_i(a) (v*_i - U_i(a))
        for a in 0..dev[i].len() {
            grad[i][a] += weight[i][a] * (dev[i][best] - dev[i][a]);
        }
        // cross terms through U_i and v*_i
        let mass: T = (0..dev[i].len()).map(|a| weight[i][a] * probs[i][a]).sum();
        if mass == T::zero() {
            continue;
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            let m = g.pair_payoffs_unchecked(probs, i, j);
            for c in 0..g.num_actions(j) {
                let mut acc = T::zero();
                for a in 0..dev[i].len() {
                    acc += weight[i][a] * probs[i][a] * (m[best][c] - m[a][c]);
                }
                grad[j][c] += acc;
            }
        }
    }
    grad
}

fn dirichlet<T: Scalar>(actions: &[usize], rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    actions
        .iter()
        .map(|&k| {
            let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = draws.iter().sum();
            draws.iter().map(|&x| T::lit(x / s)).collect()
        })
        .collect()
}

fn uniform<T: Scalar>(actions: &[usize]) -> Vec<Vec<T>> {
    actions
        .iter()
        .map(|&k| vec![T::one() / T::from_usize(k).unwrap(); k])
        .collect()
}

fn varpi_of<T: Scalar>(g: &NormalFormGame<T>, probs: &[Vec<T>]) -> T {
    let (t, _) = terms(g, probs);
    t.iter().flatten().copied().fold(T::zero(), T::max)
}

/// Finds a local minimizer of the penalty. Always returns a feasible point,
/// never worse than the uniform profile.
pub fn local_solve<T: Scalar>(g: &NormalFormGame<T>, cfg: &LocalSearchConfig) -> LocalSolution<T> {
    let target = T::lit(cfg.target_varpi);
    let uniform_probs = uniform::<T>(g.actions());
    let start = varpi_of(g, &uniform_probs);
    if start <= target {
        let candidate = CandidateSolution::from_profile(g, MixedProfile::from_raw(uniform_probs))
            .expect("uniform profile matches game");
        return LocalSolution {
            reached_target: true,
            candidate,
            restart: 0,
            iterations: 0,
            trace: Vec::new(),
        };
    }

    local_solve_restarts(g, cfg, 0..cfg.restarts)
}

/// [`local_solve`] over an explicit range of restart indices (0 is the
/// uniform start). Lets a caller continue a search with fresh starts.
pub fn local_solve_restarts<T: Scalar>(
    g: &NormalFormGame<T>,
    cfg: &LocalSearchConfig,
    restarts: Range<usize>,
) -> LocalSolution<T> {
    let target = T::lit(cfg.target_varpi);
    let deadline = deadline_of(cfg);
    let first = restarts.start;
    if restarts.is_empty() {
        let candidate = CandidateSolution::from_profile(g, MixedProfile::from_raw(uniform(g.actions())))
            .expect("uniform profile matches game");
        return LocalSolution {
            reached_target: candidate.varpi <= target,
            candidate,
            restart: 0,
            iterations: 0,
            trace: Vec::new(),
        };
    }
    let run = |r: usize| descend(g, cfg, r, start_point(g, cfg, r), deadline);
    let mut runs: Vec<Run<T>> = if cfg.parallel {
        restarts.into_par_iter().map(run).collect()
    } else {
        let mut runs = Vec::new();
        for r in restarts {
            let out = run(r);
            let done = out.varpi <= target;
            runs.push(out);
            if done || expired(deadline) {
                break;
            }
        }
        runs
    };

    // First restart reaching the target; otherwise the lowest penalty,
    // ties to the lowest index. Identical for both execution modes.
    let chosen = runs.iter().position(|o| o.varpi <= target).unwrap_or_else(|| {
        let mut best = 0;
        for (k, o) in runs.iter().enumerate() {
            if o.varpi < runs[best].varpi {
                best = k;
            }
        }
        best
    });
    let mut trace = Vec::new();
    let mut iterations = 0;
    for o in runs.iter().take(chosen + 1) {
        iterations += o.iterations;
    }
    if cfg.record_trace {
        for o in runs.iter().take(if cfg.parallel { chosen + 1 } else { runs.len() }) {
            trace.extend_from_slice(&o.trace);
        }
    }
    let best = runs.swap_remove(chosen);
    let candidate = CandidateSolution::from_profile(g, MixedProfile::from_raw(best.probs))
        .expect("descent keeps profiles on the simplex");
    LocalSolution {
        reached_target: candidate.varpi <= target,
        candidate,
        restart: first + chosen,
        iterations,
        trace,
    }
}

struct Run<T> {
    probs: Vec<Vec<T>>,
    varpi: T,
    iterations: usize,
    trace: Vec<TracePoint>,
}

fn start_point<T: Scalar>(g: &NormalFormGame<T>, cfg: &LocalSearchConfig, restart: usize) -> Vec<Vec<T>> {
    if restart == 0 {
        uniform(g.actions())
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        dirichlet(g.actions(), &mut rng)
    }
}

/// One descent run from a given profile (entries must be positive for
/// coordinates that should be able to gain mass).
pub fn local_solve_from<T: Scalar>(
    g: &NormalFormGame<T>,
    start: &MixedProfile<T>,
    cfg: &LocalSearchConfig,
) -> LocalSolution<T> {
    let run = descend(g, cfg, 0, start.probs().to_vec(), deadline_of(cfg));
    let candidate = CandidateSolution::from_profile(g, MixedProfile::from_raw(run.probs))
        .expect("descent keeps profiles on the simplex");
    LocalSolution {
        reached_target: candidate.varpi <= T::lit(cfg.target_varpi),
        candidate,
        restart: 0,
        iterations: run.iterations,
        trace: run.trace,
    }
}

fn deadline_of(cfg: &LocalSearchConfig) -> Option<Instant> {
    cfg.time_limit_s
        .map(|t| Instant::now() + Duration::try_from_secs_f64(t).unwrap_or(Duration::MAX / 2))
}

fn expired(deadline: Option<Instant>) -> bool {
    deadline.is_some_and(|d| Instant::now() >= d)
}

fn descend<T: Scalar>(
    g: &NormalFormGame<T>,
    cfg: &LocalSearchConfig,
    restart: usize,
    mut probs: Vec<Vec<T>>,
    deadline: Option<Instant>,
) -> Run<T> {
    let range = range_of(g).max(T::tol(1e-300));
    let target = T::lit(cfg.target_varpi);
    let mut tau = T::lit(cfg.tau) * range;
    let tau_min = T::lit(cfg.tau_min) * range;
    let mut eta = T::lit(cfg.step) / range;
    let mut best = probs.clone();
    let mut best_varpi = varpi_of(g, &probs);
    let mut stall = 0usize;
    let mut trace = Vec::new();
    let mut f = smoothed_penalty(g, &probs, tau);
    let mut iter = 0;
    let record = |trace: &mut Vec<TracePoint>, iteration: usize, v: T| {
        if cfg.record_trace {
            trace.push(TracePoint {
                restart,
                iteration,
                varpi: v.as_f64(),
            });
        }
    };
    record(&mut trace, 0, best_varpi);

    while iter < cfg.max_iters && best_varpi > target && !expired(deadline) {
        iter += 1;
        let grad = penalty_gradient(g, &probs, tau);
        let next: Vec<Vec<T>> = probs
            .iter()
            .zip(&grad)
            .map(|(p, gr)| {
                let shift = gr.iter().copied().fold(T::infinity(), T::min);
                let mut q: Vec<T> = p
                    .iter()
                    .zip(gr)
                    .map(|(&x, &d)| x * (-(eta * (d - shift))).exp())
                    .collect();
                let s: T = q.iter().copied().sum();
                for x in &mut q {
                    *x /= s;
                }
                q
            })
            .collect();
        let f_next = smoothed_penalty(g, &next, tau);
        if f_next < f {
            probs = next;
            f = f_next;
            eta *= T::lit(cfg.step_grow);
            let v = varpi_of(g, &probs);
            if v < best_varpi {
                best_varpi = v;
                best.clone_from(&probs);
                stall = 0;
            } else {
                stall += 1;
            }
            record(&mut trace, iter, v);
        } else {
            eta *= T::lit(cfg.step_shrink);
            stall += 1;
        }
        if stall >= cfg.stall_iters || eta < T::tol(1e-14) / range {
            if tau <= tau_min && eta < T::tol(1e-14) / range {
                break;
            }
            tau = (tau / T::lit(2.0)).max(tau_min);
            eta = eta.max(T::lit(cfg.step) / range);
            f = smoothed_penalty(g, &probs, tau);
            stall = 0;
        }
        if cfg.polish_every > 0 && iter % cfg.polish_every == 0 {
            if let Some((p, v)) = polish_support(g, &best) {
                if v < best_varpi {
                    best_varpi = v;
                    best = p;
                    record(&mut trace, iter, v);
                }
            }
        }
    }
    // Also when the target is met: the polished point has exact zeros.
    if best_varpi > T::zero() {
        if let Some((p, v)) = polish_support(g, &best) {
            if v < best_varpi {
                best_varpi = v;
                best = p;
                record(&mut trace, iter, v);
            }
        }
    }
    Run {
        probs: best,
        varpi: best_varpi,
        iterations: iter,
        trace,
    }
}

const SUPPORT_THRESHOLDS: [f64; 4] = [0.5, 0.1, 1e-2, 1e-3];

/// Newton's method on the indifference system of supports guessed from
/// `probs` at several relative thresholds. Returns the best resulting
/// profile (with exact zeros off support) and its penalty, if any support
/// yields a valid profile.
pub fn polish_support<T: Scalar>(g: &NormalFormGame<T>, probs: &[Vec<T>]) -> Option<(Vec<Vec<T>>, T)> {
    let mut tried: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut best: Option<(Vec<Vec<T>>, T)> = None;
    for &theta in &SUPPORT_THRESHOLDS {
        let support: Vec<Vec<usize>> = probs
            .iter()
            .map(|p| {
                let top = max_of(p);
                let cut = T::lit(theta) * top;
                (0..p.len()).filter(|&a| p[a] >= cut).collect()
            })
            .collect();
        if tried.contains(&support) {
            continue;
        }
        let candidate = newton_on_support(g, probs, &support);
        tried.push(support);
        if let Some(p) = candidate {
            let v = varpi_of(g, &p);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((p, v));
            }
        }
    }
    best
}

fn newton_on_support<T: Scalar>(g: &NormalFormGame<T>, start: &[Vec<T>], support: &[Vec<usize>]) -> Option<Vec<Vec<T>>> {
    let n = g.num_players();
    let mut probs: Vec<Vec<T>> = start
        .iter()
        .zip(support)
        .map(|(p, s)| {
            let mut q = vec![T::zero(); p.len()];
            let mass: T = s.iter().map(|&a| p[a]).sum();
            for &a in s {
                q[a] = p[a] / mass;
            }
            q
        })
        .collect();
    let offsets: Vec<usize> = support
        .iter()
        .scan(0, |acc, s| {
            let o = *acc;
            *acc += s.len();
            Some(o)
        })
        .collect();
    let nd: usize = support.iter().map(Vec::len).sum();
    let dim = nd + n;
    let dev = g.deviation_payoffs_unchecked(&probs);
    let mut v: Vec<T> = (0..n)
        .map(|i| {
            support[i].iter().map(|&a| dev[i][a] * probs[i][a]).sum()
        })
        .collect();
    let scale = range_of(g).max(T::one());
    let tol = T::tol(1e-14) * scale;
    let mut converged = false;
    for _ in 0..30 {
        let dev = g.deviation_payoffs_unchecked(&probs);
        let mut resid = vec![T::zero(); dim];
        for i in 0..n {
            for (k, &a) in support[i].iter().enumerate() {
                resid[offsets[i] + k] = dev[i][a] - v[i];
            }
            resid[nd + i] = support[i].iter().map(|&a| probs[i][a]).sum::<T>() - T::one();
        }
        let norm = resid.iter().fold(T::zero(), |acc, r| acc.max(r.abs()));
        if norm <= tol {
            converged = true;
            break;
        }
        let mut jac = vec![T::zero(); dim * dim];
        for i in 0..n {
            let pairs: Vec<(usize, Vec<Vec<T>>)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, g.pair_payoffs_unchecked(&probs, i, j)))
                .collect();
            for (k, &a) in support[i].iter().enumerate() {
                let row = offsets[i] + k;
                for (j, m) in &pairs {
                    for (l, &c) in support[*j].iter().enumerate() {
                        jac[row * dim + offsets[*j] + l] = m[a][c];
                    }
                }
                jac[row * dim + nd + i] = -T::one();
            }
            for l in 0..support[i].len() {
                jac[(nd + i) * dim + offsets[i] + l] = T::one();
            }
        }
        let rhs: Vec<T> = resid.iter().map(|&r| -r).collect();
        let step = linalg::solve(&jac, &rhs, T::tol(1e-12))?;
        for i in 0..n {
            for (k, &a) in support[i].iter().enumerate() {
                probs[i][a] += step[offsets[i] + k];
            }
            v[i] += step[nd + i];
        }
        if probs.iter().flatten().any(|x| !x.is_finite()) {
            return None;
        }
    }
    if !converged {
        return None;
    }
    let floor = T::lit(-1e-9);
    if probs.iter().flatten().any(|&x| x < floor) {
        return None;
    }
    for p in &mut probs {
        let mut clipped = false;
        for x in p.iter_mut() {
            if *x < T::zero() {
                *x = T::zero();
                clipped = true;
            }
        }
        if clipped {
            let s: T = p.iter().copied().sum();
            for x in p.iter_mut() {
                *x /= s;
            }
        }
    }
    Some(probs)
}

/// Penalty of a raw profile with `v` at best response (no validation).
/// Best-response dynamics over pure profiles: repeatedly moves the player
/// with the largest regret to a best response. Returns the visited profile
/// with the smallest maximum regret, and that regret; stops at a pure
/// equilibrium or after `max_steps` moves.
pub fn best_response_walk<T: Scalar>(g: &NormalFormGame<T>, start: &[usize], max_steps: usize) -> (Vec<usize>, T) {
    let n = g.num_players();
    let mut a = start.to_vec();
    let mut best = (a.clone(), T::infinity());
    for _ in 0..=max_steps {
        let flat = g.flat_index(&a);
        let mut worst: Option<(usize, usize, T)> = None;
        for i in 0..n {
            let pay = g.payoffs(i);
            let stride = g.strides()[i];
            let base = flat - a[i] * stride;
            let own = pay[flat];
            let mut br = a[i];
            for b in 0..g.num_actions(i) {
                if pay[base + b * stride] > pay[base + br * stride] {
                    br = b;
                }
            }
            let regret = pay[base + br * stride] - own;
            if worst.is_none_or(|(_, _, r)| regret > r) {
                worst = Some((i, br, regret));
            }
        }
        let (i, br, regret) = worst.expect("at least one player");
        if regret < best.1 {
            best = (a.clone(), regret);
        }
        if regret <= T::zero() {
            break;
        }
        a[i] = br;
    }
    best
}

pub(crate) fn penalty_at<T: Scalar>(g: &NormalFormGame<T>, probs: &[Vec<T>]) -> T {
    let dev = g.deviation_payoffs_unchecked(probs);
    let v: Vec<T> = dev.iter().map(|d| max_of(d)).collect();
    penalty_from_deviations(&dev, probs, &v).varpi
}
