//! Linear programs with bounded variables and a dense primal simplex solver.

mod simplex;

pub use simplex::{solve_lp, solve_lp_with, SimplexOptions};

use std::fmt::Write as _;

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

/// `min c^T x` subject to sparse rows and `lower <= x <= upper`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    cost: Vec<T>,
    constraints: Vec<Constraint<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Values of the structural variables (last iterate unless optimal).
    pub x: Vec<T>,
    pub objective: T,
    /// On infeasibility: row multipliers `y` such that `y^T (A x)` over the
    /// variable box cannot reach the sense-compatible side of `y^T b`.
    pub farkas: Option<Vec<T>>,
    pub iterations: usize,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
            cost: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, lower: T, upper: T, cost: T) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(cost);
        self.lower.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, T)>, sense: Sense, rhs: T) {
        debug_assert!(coeffs.iter().all(|&(j, _)| j < self.lower.len()));
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lower: T, upper: T) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_cost(&mut self, cost: Vec<T>) {
        assert_eq!(cost.len(), self.lower.len());
        self.cost = cost;
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn cost(&self) -> &[T] {
        &self.cost
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.cost.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Row activity `a^T x` of each constraint.
    pub fn activities(&self, x: &[T]) -> Vec<T> {
        self.constraints
            .iter()
            .map(|c| c.coeffs.iter().map(|&(j, a)| a * x[j]).sum())
            .collect()
    }

    /// Largest bound or row violation at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for ((&v, &lo), &hi) in x.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(lo - v).max(v - hi);
        }
        for (c, act) in self.constraints.iter().zip(self.activities(x)) {
            let viol = match c.sense {
                Sense::Le => act - c.rhs,
                Sense::Ge => c.rhs - act,
                Sense::Eq => (act - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Checks a Farkas certificate: with `s = b - A x` constrained by each
    /// row's sense, `y^T b - y^T A x - y^T s = 0` must be impossible over
    /// the variable and slack boxes.
    pub fn certifies_infeasibility(&self, y: &[T], margin: T) -> bool {
        if y.len() != self.constraints.len() {
            return false;
        }
        let mut combo = vec![T::zero(); self.num_vars()];
        let mut rhs = T::zero();
        // range of sum_r y_r s_r with s_r >= 0 (Le), <= 0 (Ge), = 0 (Eq)
        let (mut s_lo, mut s_hi) = (T::zero(), T::zero());
        for (c, &yr) in self.constraints.iter().zip(y) {
            for &(j, a) in &c.coeffs {
                combo[j] += yr * a;
            }
            rhs += yr * c.rhs;
            match c.sense {
                Sense::Le if yr > T::zero() => s_hi = T::infinity(),
                Sense::Le if yr < T::zero() => s_lo = T::neg_infinity(),
                Sense::Ge if yr > T::zero() => s_lo = T::neg_infinity(),
                Sense::Ge if yr < T::zero() => s_hi = T::infinity(),
                _ => {}
            }
        }
        let (mut lo, mut hi) = (s_lo, s_hi);
        for (j, &a) in combo.iter().enumerate() {
            if a > T::zero() {
                lo += a * self.lower[j];
                hi += a * self.upper[j];
            } else if a < T::zero() {
                lo += a * self.upper[j];
                hi += a * self.lower[j];
            }
        }
        rhs < lo - margin || rhs > hi + margin
    }

    /// CPLEX LP text format, for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        fn term<T: Scalar>(out: &mut String, coef: T, name: &str, first: bool) {
            let c = coef.as_f64();
            if c < 0.0 {
                write!(out, " - {} {name}", -c).unwrap();
            } else if first {
                write!(out, " {c} {name}").unwrap();
            } else {
                write!(out, " + {c} {name}").unwrap();
            }
        }
        let mut out = String::from("\\ generated by nash-sbnb\nMinimize\n obj:");
        let mut first = true;
        for (j, &c) in self.cost.iter().enumerate() {
            if c != T::zero() {
                term(&mut out, c, &format!("x{j}"), first);
                first = false;
            }
        }
        if first {
            out.push_str(" 0 x0");
        }
        out.push_str("\nSubject To\n");
        for (r, c) in self.constraints.iter().enumerate() {
            write!(out, " c{r}:").unwrap();
            if c.coeffs.is_empty() {
                out.push_str(" 0 x0");
            }
            for (k, &(j, a)) in c.coeffs.iter().enumerate() {
                term(&mut out, a, &format!("x{j}"), k == 0);
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            writeln!(out, " {op} {}", c.rhs.as_f64()).unwrap();
        }
        out.push_str("Bounds\n");
        for (j, (&lo, &hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            writeln!(out, " {} <= x{j} <= {}", lo.as_f64(), hi.as_f64()).unwrap();
        }
        out.push_str("End\n");
        out
    }
}
