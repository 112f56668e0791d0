//! The three equilibrium formulations over a game:
//!
//! * P: mixed-integer feasibility with support indicators `z` and slacks `s`;
//! * Q: continuous complementarity `delta_i(a) * (v_i - u_i(a, delta_{-i})) = 0`;
//! * R: Q with the complementarity terms moved into an infinity-norm
//!   objective `varpi`.
//!
//! This module evaluates constraint residuals and converts between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{MixedProfile, NormalFormGame};
use crate::scalar::Scalar;

/// Default residual tolerance for feasibility certificates.
pub const FEAS_TOL: f64 = 1e-8;

/// Mass above which an action counts as in support when building `z`.
pub const SUPPORT_TOL: f64 = 1e-9;

/// A point `(delta, v, varpi)` of the penalized formulation.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSolution<T> {
    pub delta: MixedProfile<T>,
    pub v: Vec<T>,
    pub varpi: T,
}

/// Binary support indicators and slacks completing a Q point to a P point.
#[derive(Clone, Debug, PartialEq)]
pub struct MipWitness<T> {
    pub z: Vec<Vec<bool>>,
    pub s: Vec<Vec<T>>,
}

/// Objective of R at a point, with the term attaining it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Penalty<T> {
    pub varpi: T,
    pub worst: (usize, usize),
}

/// Largest violation of each constraint family of Q.
#[derive(Clone, Debug, PartialEq)]
pub struct QReport<T> {
    /// `max(0, u_i(a, delta_{-i}) - v_i)`
    pub stationarity: T,
    /// `|delta_i(a) (v_i - u_i(a, delta_{-i}))|`
    pub complementarity: T,
    pub simplex: T,
    pub delta_box: T,
    pub value_box: T,
    pub tol: T,
}

/// Largest violation of each constraint family of P.
#[derive(Clone, Debug, PartialEq)]
pub struct PReport<T> {
    /// `|v_i - s_i(a) - u_i(a, delta_{-i})|`
    pub value_definition: T,
    /// `delta_i(a) <= z_i(a)`
    pub indicator: T,
    /// `s_i(a) <= (1 - z_i(a)) (maxu_i - minu_i)`
    pub slack_cap: T,
    pub simplex: T,
    pub delta_box: T,
    pub slack_box: T,
    pub value_box: T,
}

impl<T: Scalar> QReport<T> {
    fn families(&self) -> [(&'static str, T); 5] {
        [
            ("stationarity", self.stationarity),
            ("complementarity", self.complementarity),
            ("simplex", self.simplex),
            ("delta box", self.delta_box),
            ("value box", self.value_box),
        ]
    }

    pub fn is_feasible(&self) -> bool {
        self.families().iter().all(|&(_, r)| r <= self.tol)
    }

    /// Feasibility of R: everything except complementarity, which R prices.
    pub fn is_penalty_feasible(&self) -> bool {
        self.families()
            .iter()
            .filter(|(name, _)| *name != "complementarity")
            .all(|&(_, r)| r <= self.tol)
    }

    /// The first family exceeding the tolerance, if any.
    pub fn worst_violation(&self) -> Option<(&'static str, T)> {
        self.families().into_iter().find(|&(_, r)| r > self.tol)
    }
}

impl<T: Scalar> PReport<T> {
    fn families(&self) -> [(&'static str, T); 7] {
        [
            ("value definition", self.value_definition),
            ("indicator", self.indicator),
            ("slack cap", self.slack_cap),
            ("simplex", self.simplex),
            ("delta box", self.delta_box),
            ("slack box", self.slack_box),
            ("value box", self.value_box),
        ]
    }

    pub fn max_residual(&self) -> T {
        self.families().iter().fold(T::zero(), |acc, &(_, r)| acc.max(r))
    }

    pub fn first_violation(&self, tol: T) -> Option<(&'static str, T)> {
        self.families().into_iter().find(|&(_, r)| r > tol)
    }
}

fn check_values<T: Scalar>(g: &NormalFormGame<T>, v: &[T]) -> Result<()> {
    if v.len() != g.num_players() {
        return Err(Error::Shape(format!(
            "{} values for {} players",
            v.len(),
            g.num_players()
        )));
    }
    Ok(())
}

/// `varpi = max_{i,a} |delta_i(a) (v_i - u_i(a, delta_{-i}))|`.
pub fn eval_penalty<T: Scalar>(g: &NormalFormGame<T>, delta: &MixedProfile<T>, v: &[T]) -> Result<Penalty<T>> {
    check_values(g, v)?;
    let dev = g.deviation_payoffs(delta)?;
    Ok(penalty_from_deviations(&dev, delta.probs(), v))
}

pub(crate) fn penalty_from_deviations<T: Scalar>(dev: &[Vec<T>], probs: &[Vec<T>], v: &[T]) -> Penalty<T> {
    let mut best = Penalty {
        varpi: T::zero(),
        worst: (0, 0),
    };
    for (i, (d, p)) in dev.iter().zip(probs).enumerate() {
        for (a, (&u, &q)) in d.iter().zip(p).enumerate() {
            let term = (q * (v[i] - u)).abs();
            if term > best.varpi {
                best = Penalty {
                    varpi: term,
                    worst: (i, a),
                };
            }
        }
    }
    best
}

/// `v*_i = max_{a_i} u_i(a_i, delta_{-i})`.
pub fn best_response_values<T: Scalar>(g: &NormalFormGame<T>, delta: &MixedProfile<T>) -> Result<Vec<T>> {
    g.best_response_values(delta)
}

/// Residuals of every constraint family of Q at `(delta, v)`.
pub fn check_q_feasible<T: Scalar>(
    g: &NormalFormGame<T>,
    delta: &MixedProfile<T>,
    v: &[T],
    tol: T,
) -> Result<QReport<T>> {
    check_values(g, v)?;
    let dev = g.deviation_payoffs(delta)?;
    let mut r = QReport {
        stationarity: T::zero(),
        complementarity: T::zero(),
        simplex: T::zero(),
        delta_box: T::zero(),
        value_box: T::zero(),
        tol,
    };
    for i in 0..g.num_players() {
        let p = delta.player(i);
        for (a, &u) in dev[i].iter().enumerate() {
            r.stationarity = r.stationarity.max(u - v[i]);
            r.complementarity = r.complementarity.max((p[a] * (v[i] - u)).abs());
            r.delta_box = r.delta_box.max(-p[a]).max(p[a] - T::one());
        }
        let sum: T = p.iter().copied().sum();
        r.simplex = r.simplex.max((sum - T::one()).abs());
        r.value_box = r.value_box.max(g.u_min(i) - v[i]).max(v[i] - g.u_max(i));
    }
    Ok(r)
}

/// Residuals of every constraint family of P at `(delta, v, z, s)`.
pub fn p_residuals<T: Scalar>(
    g: &NormalFormGame<T>,
    delta: &MixedProfile<T>,
    v: &[T],
    w: &MipWitness<T>,
) -> Result<PReport<T>> {
    check_values(g, v)?;
    let dev = g.deviation_payoffs(delta)?;
    for (i, &k) in g.actions().iter().enumerate() {
        if w.z.get(i).map(Vec::len) != Some(k) || w.s.get(i).map(Vec::len) != Some(k) {
            return Err(Error::Shape(format!("witness shape mismatch for player {i}")));
        }
    }
    let mut r = PReport {
        value_definition: T::zero(),
        indicator: T::zero(),
        slack_cap: T::zero(),
        simplex: T::zero(),
        delta_box: T::zero(),
        slack_box: T::zero(),
        value_box: T::zero(),
    };
    for i in 0..g.num_players() {
        let range = g.u_max(i) - g.u_min(i);
        let p = delta.player(i);
        for (a, &u) in dev[i].iter().enumerate() {
            let z = if w.z[i][a] { T::one() } else { T::zero() };
            let s = w.s[i][a];
            r.value_definition = r.value_definition.max((v[i] - s - u).abs());
            r.indicator = r.indicator.max(p[a] - z);
            r.slack_cap = r.slack_cap.max(s - (T::one() - z) * range);
            r.delta_box = r.delta_box.max(-p[a]).max(p[a] - T::one());
            r.slack_box = r.slack_box.max(-s).max(s - range);
        }
        let sum: T = p.iter().copied().sum();
        r.simplex = r.simplex.max((sum - T::one()).abs());
        r.value_box = r.value_box.max(g.u_min(i) - v[i]).max(v[i] - g.u_max(i));
    }
    Ok(r)
}

/// Completes a Q-feasible `(delta, v)` to a P point: `s = v - u(a, delta_{-i})`,
/// `z = [delta > SUPPORT_TOL]`. The result is verified against P.
pub fn q_to_p_witness<T: Scalar>(
    g: &NormalFormGame<T>,
    delta: &MixedProfile<T>,
    v: &[T],
    tol: T,
) -> Result<MipWitness<T>> {
    let q = check_q_feasible(g, delta, v, tol)?;
    if let Some((constraint, violation)) = q.worst_violation() {
        return Err(Error::NotQFeasible {
            constraint: constraint.into(),
            violation: violation.as_f64(),
        });
    }
    let dev = g.deviation_payoffs(delta)?;
    let support = T::lit(SUPPORT_TOL);
    let z = delta
        .probs()
        .iter()
        .map(|p| p.iter().map(|&x| x > support).collect())
        .collect();
    let s = dev
        .iter()
        .zip(v)
        .map(|(d, &vi)| d.iter().map(|&u| vi - u).collect())
        .collect();
    let witness = MipWitness { z, s };
    let p = p_residuals(g, delta, v, &witness)?;
    if let Some((constraint, violation)) = p.first_violation(tol) {
        return Err(Error::NotPFeasible {
            constraint: constraint.into(),
            violation: violation.as_f64(),
        });
    }
    Ok(witness)
}

/// Drops `(z, s)` from a P-feasible point; the remaining `(delta, v)` is
/// checked to be Q-feasible.
pub fn p_to_q_project<T: Scalar>(
    g: &NormalFormGame<T>,
    delta: &MixedProfile<T>,
    v: &[T],
    witness: &MipWitness<T>,
    tol: T,
) -> Result<CandidateSolution<T>> {
    let p = p_residuals(g, delta, v, witness)?;
    if let Some((constraint, violation)) = p.first_violation(tol) {
        return Err(Error::NotPFeasible {
            constraint: constraint.into(),
            violation: violation.as_f64(),
        });
    }
    // P-feasibility bounds the complementarity residual by the value and
    // indicator residuals times the payoff range; re-check Q directly.
    let q = check_q_feasible(g, delta, v, tol)?;
    if let Some((constraint, violation)) = q.worst_violation() {
        return Err(Error::NotQFeasible {
            constraint: constraint.into(),
            violation: violation.as_f64(),
        });
    }
    let varpi = eval_penalty(g, delta, v)?.varpi;
    Ok(CandidateSolution {
        delta: delta.clone(),
        v: v.to_vec(),
        varpi,
    })
}

/// Exploitability guaranteed by an R-feasible point: `varpi * max_i |A_i|`.
pub fn epsilon_bound<T: Scalar>(varpi: T, g: &NormalFormGame<T>) -> Result<T> {
    if !(varpi >= T::zero()) {
        return Err(Error::InvalidArgument(format!("penalty must be nonnegative, got {varpi}")));
    }
    Ok(varpi * T::from_usize(g.max_actions()).unwrap())
}

/// Largest penalty whose [`epsilon_bound`] is at most `eps`: `eps /
/// max_i |A_i|`, stepped down past any rounding that would overshoot.
pub fn varpi_for_epsilon(eps: f64, max_actions: usize) -> f64 {
    let m = max_actions.max(1) as f64;
    let mut t = eps / m;
    while t > 0.0 && t * m > eps {
        t = t.next_down();
    }
    t
}

impl<T: Scalar> CandidateSolution<T> {
    /// The R-feasible point `(delta, v*(delta))` and its penalty.
    pub fn from_profile(g: &NormalFormGame<T>, delta: MixedProfile<T>) -> Result<Self> {
        let dev = g.deviation_payoffs(&delta)?;
        let v: Vec<T> = dev.iter().map(|d| crate::game::max_of(d)).collect();
        let varpi = penalty_from_deviations(&dev, delta.probs(), &v).varpi;
        Ok(Self { delta, v, varpi })
    }

    pub fn report(&self, g: &NormalFormGame<T>) -> Result<CandidateReport> {
        Ok(CandidateReport {
            delta: to_f64_rows(self.delta.probs()),
            v: self.v.iter().map(|x| x.as_f64()).collect(),
            varpi: self.varpi.as_f64(),
            epsilon_bound: epsilon_bound(self.varpi, g)?.as_f64(),
            epsilon_measured: g.exploitability(&self.delta)?.epsilon.as_f64(),
        })
    }
}

pub(crate) fn to_f64_rows<T: Scalar>(rows: &[Vec<T>]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.iter().map(|x| x.as_f64()).collect()).collect()
}

/// JSON form of a candidate: `{delta, v, varpi, epsilon_bound, epsilon_measured}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateReport {
    pub delta: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub varpi: f64,
    pub epsilon_bound: f64,
    pub epsilon_measured: f64,
}
