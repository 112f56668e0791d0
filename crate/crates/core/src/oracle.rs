//! Independent ground truth: the exhaustive pure-profile scan and
//! two-player support enumeration.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{MixedProfile, NormalFormGame, PureProfile};
use crate::linalg;
use crate::scalar::Scalar;

/// Default cap on the number of pure profiles scanned.
pub const DEFAULT_SCAN_CAP: usize = 10_000_000;
/// Largest game whose per-profile table is kept.
pub const TABLE_LIMIT: usize = 10_000;
/// Largest action count accepted by support enumeration.
pub const MAX_ENUM_ACTIONS: usize = 5;
/// Exploitability an enumerated profile must meet to be reported.
pub const ENUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct PureScanResult<T> {
    pub best_profile: PureProfile,
    pub best_epsilon: T,
    /// `epsilon(a)` in flat profile order, for games with at most
    /// [`TABLE_LIMIT`] profiles.
    pub table: Option<Vec<T>>,
}

/// `epsilon(a) = max_i [max_{a'_i} u_i(a'_i, a_{-i}) - u_i(a)]` for every pure
/// profile; returns the first minimizer in flat order.
pub fn pure_epsilon_scan<T: Scalar>(g: &NormalFormGame<T>, cap: usize) -> Result<PureScanResult<T>> {
    let profiles = g.num_profiles();
    if profiles > cap {
        return Err(Error::CapExceeded {
            entries: profiles as u128,
            cap: cap as u128,
        });
    }
    let n = g.num_players();
    let eps: Vec<T> = (0..profiles)
        .into_par_iter()
        .map(|flat| {
            let a = g.profile_of(flat);
            let mut worst = T::zero();
            for i in 0..n {
                let pay = g.payoffs(i);
                let stride = g.strides()[i];
                let base = flat - a[i] * stride;
                let own = pay[flat];
                let best = (0..g.num_actions(i)).fold(own, |acc, b| acc.max(pay[base + b * stride]));
                worst = worst.max(best - own);
            }
            worst
        })
        .collect();
    let mut best = 0;
    for (k, &e) in eps.iter().enumerate() {
        if e < eps[best] {
            best = k;
        }
    }
    Ok(PureScanResult {
        best_profile: PureProfile::new(g.profile_of(best)),
        best_epsilon: eps[best],
        table: (profiles <= TABLE_LIMIT).then_some(eps),
    })
}

/// Writes the per-profile table as CSV: one action column per player, then
/// `epsilon`.
pub fn write_scan_csv<T: Scalar, W: Write>(g: &NormalFormGame<T>, scan: &PureScanResult<T>, out: W) -> Result<()> {
    let table = scan
        .table
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("table kept only up to {TABLE_LIMIT} profiles")))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=g.num_players()).map(|i| format!("player{i}")).collect();
    header.push("epsilon".into());
    w.write_record(&header)?;
    for (flat, a) in g.profiles() {
        let mut rec: Vec<String> = a.iter().map(usize::to_string).collect();
        rec.push(table[flat].as_f64().to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k == 0 || k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Mixed strategy on `support_other` making the owner of `payoff`
/// indifferent over `support_own`: `sum_j payoff(i, j) y_j = u` for `i` in
/// the own support and `sum y = 1`. `None` when singular or negative.
fn indifference<T: Scalar>(
    payoff: impl Fn(usize, usize) -> T,
    support_own: &[usize],
    support_other: &[usize],
    len_other: usize,
) -> Option<Vec<T>> {
    let k = support_own.len();
    let dim = k + 1;
    let mut a = vec![T::zero(); dim * dim];
    let mut b = vec![T::zero(); dim];
    for (r, &i) in support_own.iter().enumerate() {
        for (c, &j) in support_other.iter().enumerate() {
            a[r * dim + c] = payoff(i, j);
        }
        a[r * dim + k] = -T::one();
    }
    for c in 0..k {
        a[k * dim + c] = T::one();
    }
    b[k] = T::one();
    let sol = linalg::solve(&a, &b, T::tol(1e-12))?;
    let mut y = vec![T::zero(); len_other];
    for (c, &j) in support_other.iter().enumerate() {
        if sol[c] < -T::tol(1e-12) {
            return None;
        }
        y[j] = sol[c].max(T::zero());
    }
    Some(y)
}

/// All equilibria of a two-player game over equal-size support pairs up to
/// `max_support`, each verified to exploitability at most [`ENUM_TOL`].
/// Singular systems (degenerate supports) are skipped.
pub fn support_enumeration_2p<T: Scalar>(g: &NormalFormGame<T>, max_support: usize) -> Result<Vec<MixedProfile<T>>> {
    if g.num_players() != 2 {
        return Err(Error::InvalidArgument(format!(
            "support enumeration needs 2 players, got {}",
            g.num_players()
        )));
    }
    let (m, k) = (g.num_actions(0), g.num_actions(1));
    if m.max(k) > MAX_ENUM_ACTIONS {
        return Err(Error::InvalidArgument(format!(
            "support enumeration is limited to {MAX_ENUM_ACTIONS} actions per player"
        )));
    }
    let row = |i: usize, j: usize| g.utility(0, &[i, j]);
    let col = |i: usize, j: usize| g.utility(1, &[i, j]);
    let tol = T::lit(ENUM_TOL);
    let mut found: Vec<MixedProfile<T>> = Vec::new();
    for size in 1..=max_support.min(m).min(k) {
        for rows in subsets(m, size) {
            for cols in subsets(k, size) {
                // column mix keeps the row player indifferent, and vice versa
                let Some(y) = indifference(row, &rows, &cols, k) else { continue };
                let Some(x) = indifference(|j, i| col(i, j), &cols, &rows, m) else { continue };
                let Ok(p) = MixedProfile::new(vec![x, y]) else { continue };
                if g.exploitability(&p)?.epsilon > tol {
                    continue;
                }
                if found.iter().all(|q| q.linf_distance(&p) > tol) {
                    found.push(p);
                }
            }
        }
    }
    Ok(found)
}
