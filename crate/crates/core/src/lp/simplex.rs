//! Bounded-variable primal simplex on a dense tableau.
//!
//! Every row `a^T x {<=,>=,=} b` gets a slack `s` with `a^T x + s = b` and
//! `s` in `[0, inf)`, `(-inf, 0]` or `[0, 0]`. Rows whose slack cannot absorb
//! the initial residual get an artificial column; phase 1 minimizes their
//! sum, phase 2 fixes them at zero and minimizes the real objective.
//!
//! Because the slack block of the original matrix is the identity, the slack
//! block of the tableau is the current basis inverse. Refactorization
//! re-inverts the basis from the original columns every `refactor_every`
//! pivots to bound drift.

use super::{LinearProgram, LpSolution, LpStatus, Sense};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SimplexOptions {
    /// Iteration cap over both phases; `None` means `50 * (rows + cols) + 1000`.
    pub max_iters: Option<usize>,
    pub refactor_every: usize,
    pub pivot_tol: f64,
    pub optimality_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iters: None,
            refactor_every: 64,
            pivot_tol: 1e-9,
            optimality_tol: 1e-10,
            feasibility_tol: 1e-9,
        }
    }
}

pub fn solve_lp<T: Scalar>(lp: &LinearProgram<T>) -> LpSolution<T> {
    solve_lp_with(lp, &SimplexOptions::default())
}

pub fn solve_lp_with<T: Scalar>(lp: &LinearProgram<T>, opts: &SimplexOptions) -> LpSolution<T> {
    let n = lp.num_vars();
    for j in 0..n {
        if lp.lower()[j] > lp.upper()[j] {
            return LpSolution {
                status: LpStatus::Infeasible,
                x: lp.lower().to_vec(),
                objective: T::infinity(),
                farkas: None,
                iterations: 0,
            };
        }
    }
    let mut t = Tableau::new(lp, opts);
    let max_iters = opts.max_iters.unwrap_or(50 * (t.m + t.cols) + 1000);

    if t.num_artificial > 0 {
        t.set_phase1_costs();
        let status = t.optimize(max_iters);
        let infeasibility = t.objective();
        let scale = lp
            .constraints()
            .iter()
            .fold(T::one(), |acc, c| acc.max(c.rhs.abs()));
        if status == LpStatus::IterationLimit {
            return t.finish(lp, LpStatus::IterationLimit, None);
        }
        if infeasibility > t.feas_tol * scale {
            let y = t.duals();
            return t.finish(lp, LpStatus::Infeasible, Some(y));
        }
        t.fix_artificials();
    }
    t.set_phase2_costs(lp);
    let status = t.optimize(max_iters);
    t.finish(lp, status, None)
}

struct Tableau<T> {
    m: usize,
    /// structural count
    n: usize,
    /// total columns: structural + slack + artificial
    cols: usize,
    num_artificial: usize,
    /// original matrix `[A | I | sigma e]` as sparse rows
    a_rows: Vec<Vec<(usize, T)>>,
    b: Vec<T>,
    lo: Vec<T>,
    hi: Vec<T>,
    cost: Vec<T>,
    x: Vec<T>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// `B^{-1} [A | I | sigma e]`
    tab: Vec<T>,
    /// reduced costs
    d: Vec<T>,
    pivots_since_refactor: usize,
    iterations: usize,
    refactor_every: usize,
    pivot_tol: T,
    opt_tol: T,
    feas_tol: T,
}

impl<T: Scalar> Tableau<T> {
    fn new(lp: &LinearProgram<T>, opts: &SimplexOptions) -> Self {
        let m = lp.num_constraints();
        let n = lp.num_vars();
        let mut x = Vec::with_capacity(n + m);
        for j in 0..n {
            let (l, u) = (lp.lower()[j], lp.upper()[j]);
            x.push(if l.is_finite() {
                l
            } else if u.is_finite() {
                u
            } else {
                T::zero()
            });
        }
        let mut lo = lp.lower().to_vec();
        let mut hi = lp.upper().to_vec();
        let b: Vec<T> = lp.constraints().iter().map(|c| c.rhs).collect();
        let activity = lp.activities(&x);

        // Decide per row: slack basic, or slack at 0 plus an artificial.
        let mut artificial_rows: Vec<(usize, T)> = Vec::new();
        let mut slack_vals = Vec::with_capacity(m);
        for (r, c) in lp.constraints().iter().enumerate() {
            let resid = b[r] - activity[r];
            let (sl, su) = match c.sense {
                Sense::Le => (T::zero(), T::infinity()),
                Sense::Ge => (T::neg_infinity(), T::zero()),
                Sense::Eq => (T::zero(), T::zero()),
            };
            lo.push(sl);
            hi.push(su);
            if resid >= sl && resid <= su {
                slack_vals.push(resid);
            } else {
                slack_vals.push(T::zero());
                let sigma = if resid > T::zero() { T::one() } else { -T::one() };
                artificial_rows.push((r, sigma));
            }
        }
        x.extend(slack_vals);
        let num_artificial = artificial_rows.len();
        let cols = n + m + num_artificial;

        let mut a_full = vec![T::zero(); m * cols];
        for (r, c) in lp.constraints().iter().enumerate() {
            for &(j, a) in &c.coeffs {
                a_full[r * cols + j] += a;
            }
            a_full[r * cols + n + r] = T::one();
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        for (k, &(r, sigma)) in artificial_rows.iter().enumerate() {
            let col = n + m + k;
            a_full[r * cols + col] = sigma;
            lo.push(T::zero());
            hi.push(T::infinity());
            x.push((b[r] - activity[r]).abs());
            basis[r] = col;
        }
        let mut is_basic = vec![false; cols];
        for &j in &basis {
            is_basic[j] = true;
        }

        let a_rows: Vec<Vec<(usize, T)>> = a_full
            .chunks(cols.max(1))
            .take(m)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &a)| a != T::zero())
                    .map(|(j, &a)| (j, a))
                    .collect()
            })
            .collect();
        let mut tab = a_full;
        for &(r, sigma) in &artificial_rows {
            if sigma < T::zero() {
                for v in &mut tab[r * cols..(r + 1) * cols] {
                    *v = -*v;
                }
            }
        }

        Self {
            m,
            n,
            cols,
            num_artificial,
            a_rows,
            b,
            lo,
            hi,
            cost: vec![T::zero(); cols],
            x,
            basis,
            is_basic,
            tab,
            d: vec![T::zero(); cols],
            pivots_since_refactor: 0,
            iterations: 0,
            refactor_every: opts.refactor_every.max(1),
            pivot_tol: T::tol(opts.pivot_tol),
            opt_tol: T::tol(opts.optimality_tol),
            feas_tol: T::tol(opts.feasibility_tol),
        }
    }

    fn set_phase1_costs(&mut self) {
        self.cost = vec![T::zero(); self.cols];
        for c in &mut self.cost[self.n + self.m..] {
            *c = T::one();
        }
        self.recompute_reduced_costs();
    }

    fn set_phase2_costs(&mut self, lp: &LinearProgram<T>) {
        self.cost = vec![T::zero(); self.cols];
        self.cost[..self.n].copy_from_slice(lp.cost());
        self.recompute_reduced_costs();
    }

    fn fix_artificials(&mut self) {
        for j in self.n + self.m..self.cols {
            self.hi[j] = T::zero();
            if !self.is_basic[j] {
                self.x[j] = T::zero();
            } else {
                self.x[j] = self.x[j].max(T::zero()).min(T::zero());
            }
        }
    }

    fn objective(&self) -> T {
        self.cost.iter().zip(&self.x).map(|(&c, &v)| c * v).sum()
    }

    fn recompute_reduced_costs(&mut self) {
        let cols = self.cols;
        self.d.copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb == T::zero() {
                continue;
            }
            let row = &self.tab[r * cols..(r + 1) * cols];
            for (d, &t) in self.d.iter_mut().zip(row) {
                *d -= cb * t;
            }
        }
        for r in 0..self.m {
            self.d[self.basis[r]] = T::zero();
        }
    }

    /// Row duals `y = c_B^T B^{-1}`, read from the slack block.
    fn duals(&self) -> Vec<T> {
        let mut y = vec![T::zero(); self.m];
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb == T::zero() {
                continue;
            }
            for (k, yk) in y.iter_mut().enumerate() {
                *yk += cb * self.tab[r * self.cols + self.n + k];
            }
        }
        y
    }

    fn refactor(&mut self) -> bool {
        let (m, cols) = (self.m, self.cols);
        if m == 0 {
            return true;
        }
        let mut pos = vec![usize::MAX; cols];
        for (k, &j) in self.basis.iter().enumerate() {
            pos[j] = k;
        }
        let mut bmat = vec![T::zero(); m * m];
        for (r, row) in self.a_rows.iter().enumerate() {
            for &(j, a) in row {
                if pos[j] != usize::MAX {
                    bmat[r * m + pos[j]] = a;
                }
            }
        }
        let Some(inv) = linalg::invert(&bmat, m, T::lit(1e-13)) else {
            return false;
        };
        // tab = B^{-1} A, one sparse row of A at a time
        let mut tab = vec![T::zero(); m * cols];
        for (k, row) in self.a_rows.iter().enumerate() {
            for &(j, a) in row {
                for r in 0..m {
                    let f = inv[r * m + k];
                    if f != T::zero() {
                        tab[r * cols + j] += f * a;
                    }
                }
            }
        }
        self.tab = tab;
        // x_B = B^{-1} (b - N x_N)
        let mut rhs = self.b.clone();
        for (rv, row) in rhs.iter_mut().zip(&self.a_rows) {
            for &(j, a) in row {
                if !self.is_basic[j] {
                    *rv -= a * self.x[j];
                }
            }
        }
        for r in 0..m {
            let v: T = (0..m).map(|k| inv[r * m + k] * rhs[k]).sum();
            self.x[self.basis[r]] = v;
        }
        self.pivots_since_refactor = 0;
        self.recompute_reduced_costs();
        true
    }

    /// Two rounds of iterative refinement of the basic values:
    /// `x_B += B^{-1} (b - A x)`, with `B^{-1}` read from the slack block.
    fn refine(&mut self) {
        let (m, n, cols) = (self.m, self.n, self.cols);
        for _ in 0..2 {
            let r: Vec<T> = self
                .a_rows
                .iter()
                .zip(&self.b)
                .map(|(row, &b)| b - row.iter().map(|&(j, a)| a * self.x[j]).sum::<T>())
                .collect();
            for i in 0..m {
                let binv = &self.tab[i * cols + n..i * cols + n + m];
                let dx: T = binv.iter().zip(&r).map(|(&c, &v)| c * v).sum();
                self.x[self.basis[i]] += dx;
            }
        }
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, T)> {
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.cols {
            if self.is_basic[j] || self.lo[j] == self.hi[j] {
                continue;
            }
            let dj = self.d[j];
            let can_inc = dj < -self.opt_tol && self.x[j] < self.hi[j];
            let can_dec = dj > self.opt_tol && self.x[j] > self.lo[j];
            if !(can_inc || can_dec) {
                continue;
            }
            let dir = if can_inc { T::one() } else { -T::one() };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(k, _)| dj.abs() > self.d[k].abs()) {
                best = Some((j, dir));
            }
        }
        best
    }

    /// Runs simplex iterations on the current costs.
    fn optimize(&mut self, max_iters: usize) -> LpStatus {
        let cols = self.cols;
        let stall_limit = 5 * (self.m + self.n);
        let mut stall = 0usize;
        let mut last_obj = self.objective();
        let mut bland = false;
        let mut fresh_costs = false;
        loop {
            if self.iterations >= max_iters {
                return LpStatus::IterationLimit;
            }
            let Some((j, dir)) = self.choose_entering(bland) else {
                // Confirm with reduced costs recomputed from the tableau.
                if !fresh_costs {
                    self.recompute_reduced_costs();
                    fresh_costs = true;
                    if self.choose_entering(bland).is_some() {
                        continue;
                    }
                }
                return LpStatus::Optimal;
            };
            fresh_costs = false;
            self.iterations += 1;

            // Ratio test.
            let mut theta = self.hi[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_piv = T::zero();
            for r in 0..self.m {
                let t = self.tab[r * cols + j];
                if t.abs() <= self.pivot_tol {
                    continue;
                }
                let bvar = self.basis[r];
                let rate = -dir * t;
                let (room, to_upper) = if rate < T::zero() {
                    if !self.lo[bvar].is_finite() {
                        continue;
                    }
                    (((self.x[bvar] - self.lo[bvar]) / -rate).max(T::zero()), false)
                } else {
                    if !self.hi[bvar].is_finite() {
                        continue;
                    }
                    (((self.hi[bvar] - self.x[bvar]) / rate).max(T::zero()), true)
                };
                let better = match leave {
                    None => room < theta,
                    Some((lr, _)) => {
                        if bland {
                            room < theta || (room == theta && bvar < self.basis[lr])
                        } else {
                            room < theta - self.feas_tol * T::lit(1e-3)
                                || (room <= theta + self.feas_tol * T::lit(1e-3) && t.abs() > leave_piv)
                        }
                    }
                };
                if better {
                    theta = if leave.is_some() && !bland { room.min(theta) } else { room };
                    leave = Some((r, to_upper));
                    leave_piv = t.abs();
                }
            }
            if leave.is_none() && !theta.is_finite() {
                return LpStatus::Unbounded;
            }

            // Move.
            self.x[j] += dir * theta;
            for r in 0..self.m {
                let t = self.tab[r * cols + j];
                if t != T::zero() {
                    let bvar = self.basis[r];
                    self.x[bvar] -= dir * theta * t;
                }
            }

            match leave {
                None => {
                    // bound flip
                    self.x[j] = if dir > T::zero() { self.hi[j] } else { self.lo[j] };
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.x[out] = if to_upper { self.hi[out] } else { self.lo[out] };
                    self.pivot(r, j);
                    if self.pivots_since_refactor >= self.refactor_every && !self.refactor() {
                        // Singular basis after drift; keep the updated tableau.
                        self.pivots_since_refactor = 0;
                    }
                }
            }

            let obj = self.objective();
            if obj < last_obj - self.opt_tol * (T::one() + last_obj.abs()) {
                last_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > stall_limit {
                    bland = true;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let p = self.tab[r * cols + j];
        let pivot_row: Vec<T> = self.tab[r * cols..(r + 1) * cols].iter().map(|&v| v / p).collect();
        let nz: Vec<(usize, T)> = pivot_row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != T::zero())
            .map(|(k, &v)| (k, v))
            .collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * cols + j];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.tab[i * cols..(i + 1) * cols];
            for &(k, pr) in &nz {
                row[k] -= f * pr;
            }
            row[j] = T::zero();
        }
        let dj = self.d[j];
        if dj != T::zero() {
            for &(k, pr) in &nz {
                self.d[k] -= dj * pr;
            }
        }
        self.d[j] = T::zero();
        self.tab[r * cols..(r + 1) * cols].copy_from_slice(&pivot_row);
        self.tab[r * cols + j] = T::one();
        self.is_basic[self.basis[r]] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.pivots_since_refactor += 1;
    }

    fn finish(mut self, lp: &LinearProgram<T>, status: LpStatus, farkas: Option<Vec<T>>) -> LpSolution<T> {
        if status == LpStatus::Optimal {
            self.refine();
        }
        let mut x: Vec<T> = self.x[..self.n].to_vec();
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.max(lp.lower()[j]).min(lp.upper()[j]);
        }
        let objective = if status == LpStatus::Infeasible {
            T::infinity()
        } else {
            lp.objective_value(&x)
        };
        LpSolution {
            status,
            x,
            objective,
            farkas,
            iterations: self.iterations,
        }
    }
}
