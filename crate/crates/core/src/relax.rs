//! Node-level linear relaxation of the penalized program.
//!
//! Every multilinear term is decomposed into a chain of bilinear steps in
//! fixed player order, `w_{S + j} = w_S * delta_j(a_j)`, and each step is
//! replaced by its four McCormick inequalities over the current box.
//! Partial products are shared through a prefix tree. Players with a single
//! action have `delta = 1` and never enter a product.

use std::collections::HashMap;

use crate::game::NormalFormGame;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn point(x: T) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T, tol: T) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// Interval product, exact for the four-corner hull.
    pub fn mul(&self, other: &Self) -> Self {
        let c = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = c.iter().copied().fold(T::infinity(), T::min);
        let hi = c.iter().copied().fold(T::neg_infinity(), T::max);
        Self { lo, hi }
    }
}

/// A box variable: one mixed-strategy coordinate or one value variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoxVar {
    Delta { player: usize, action: usize },
    Value { player: usize },
}

/// Interval bounds on every `delta_i(a)` and `v_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeBox<T> {
    pub delta: Vec<Vec<Interval<T>>>,
    pub v: Vec<Interval<T>>,
}

impl<T: Scalar> NodeBox<T> {
    /// `delta in [0, 1]`, `v_i in [minu_i, maxu_i]`.
    pub fn root(g: &NormalFormGame<T>) -> Self {
        let delta = g
            .actions()
            .iter()
            .map(|&k| {
                if k == 1 {
                    vec![Interval::point(T::one())]
                } else {
                    vec![Interval::new(T::zero(), T::one()); k]
                }
            })
            .collect();
        let v = (0..g.num_players())
            .map(|i| Interval::new(g.u_min(i), g.u_max(i)))
            .collect();
        Self { delta, v }
    }

    /// The degenerate box at a single point.
    pub fn point(probs: &[Vec<T>], v: &[T]) -> Self {
        Self {
            delta: probs
                .iter()
                .map(|p| p.iter().map(|&x| Interval::point(x)).collect())
                .collect(),
            v: v.iter().map(|&x| Interval::point(x)).collect(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.delta.iter().map(Vec::len).sum::<usize>() + self.v.len()
    }

    /// Flat order: all `delta` coordinates player-major, then all `v`.
    pub fn var(&self, index: usize) -> BoxVar {
        let mut k = index;
        for (player, d) in self.delta.iter().enumerate() {
            if k < d.len() {
                return BoxVar::Delta { player, action: k };
            }
            k -= d.len();
        }
        BoxVar::Value { player: k }
    }

    pub fn index_of(&self, var: BoxVar) -> usize {
        match var {
            BoxVar::Delta { player, action } => {
                self.delta[..player].iter().map(Vec::len).sum::<usize>() + action
            }
            BoxVar::Value { player } => self.delta.iter().map(Vec::len).sum::<usize>() + player,
        }
    }

    pub fn get(&self, var: BoxVar) -> Interval<T> {
        match var {
            BoxVar::Delta { player, action } => self.delta[player][action],
            BoxVar::Value { player } => self.v[player],
        }
    }

    pub fn set(&mut self, var: BoxVar, iv: Interval<T>) {
        match var {
            BoxVar::Delta { player, action } => self.delta[player][action] = iv,
            BoxVar::Value { player } => self.v[player] = iv,
        }
    }

    /// `lo <= hi` everywhere and, per player, `sum lo <= 1 <= sum hi`.
    pub fn is_consistent(&self) -> bool {
        let tol = T::tol(1e-12);
        let ordered = self
            .delta
            .iter()
            .flatten()
            .chain(&self.v)
            .all(|iv| iv.lo <= iv.hi);
        ordered
            && self.delta.iter().all(|d| {
                let lo: T = d.iter().map(|iv| iv.lo).sum();
                let hi: T = d.iter().map(|iv| iv.hi).sum();
                lo <= T::one() + tol && hi >= T::one() - tol
            })
    }

    /// Splits at `at` along one variable; the left child takes `[lo, at]`.
    pub fn split(&self, var: BoxVar, at: T) -> (Self, Self) {
        let iv = self.get(var);
        let mut left = self.clone();
        let mut right = self.clone();
        left.set(var, Interval::new(iv.lo, at));
        right.set(var, Interval::new(at, iv.hi));
        (left, right)
    }

    pub fn max_width(&self) -> T {
        self.delta
            .iter()
            .flatten()
            .chain(&self.v)
            .fold(T::zero(), |acc, iv| acc.max(iv.width()))
    }

    pub fn contains(&self, probs: &[Vec<T>], v: &[T], tol: T) -> bool {
        self.delta
            .iter()
            .zip(probs)
            .all(|(d, p)| d.iter().zip(p).all(|(iv, &x)| iv.contains(x, tol)))
            && self.v.iter().zip(v).all(|(iv, &x)| iv.contains(x, tol))
    }
}

/// One McCormick inequality `w + cx * x + cy * y (sense) rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope<T> {
    pub cx: T,
    pub cy: T,
    pub sense: Sense,
    pub rhs: T,
}

impl<T: Scalar> Envelope<T> {
    /// The bound this row places on `w` at `(x, y)`.
    pub fn bound_at(&self, x: T, y: T) -> T {
        self.rhs - self.cx * x - self.cy * y
    }
}

/// The four McCormick inequalities for `w = x * y` over a box. Returns
/// `None` for an inverted or non-finite interval.
pub fn mccormick_rows<T: Scalar>(x: Interval<T>, y: Interval<T>) -> Option<[Envelope<T>; 4]> {
    let finite = [x.lo, x.hi, y.lo, y.hi].iter().all(|b| b.is_finite());
    if !finite || x.lo > x.hi || y.lo > y.hi {
        return None;
    }
    let (xl, xu, yl, yu) = (x.lo, x.hi, y.lo, y.hi);
    let row = |cx: T, cy: T, sense, rhs| Envelope { cx, cy, sense, rhs };
    Some([
        row(-yl, -xl, Sense::Ge, -xl * yl),
        row(-yu, -xu, Sense::Ge, -xu * yu),
        row(-yl, -xu, Sense::Le, -xu * yl),
        row(-yu, -xl, Sense::Le, -xl * yu),
    ])
}

/// Lower and upper envelope values at `(x, y)`.
pub fn envelope_at<T: Scalar>(rows: &[Envelope<T>; 4], x: T, y: T) -> (T, T) {
    let mut lo = T::neg_infinity();
    let mut hi = T::infinity();
    for r in rows {
        let b = r.bound_at(x, y);
        match r.sense {
            Sense::Ge => lo = lo.max(b),
            Sense::Le => hi = hi.min(b),
            Sense::Eq => {
                lo = lo.max(b);
                hi = hi.min(b);
            }
        }
    }
    (lo, hi)
}

/// A product or a constant one (the empty product).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    One,
    Col(usize),
}

/// An auxiliary column `col = x * y` with its McCormick rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Product {
    pub col: usize,
    pub x: usize,
    pub y: usize,
    /// Box variables whose product this column relaxes.
    pub members: Vec<usize>,
}

#[derive(Clone, Debug)]
struct TrieNode {
    col: usize,
    members: Vec<usize>,
}

/// Prefix tree of partial products `prod_{j in S} delta_j(a_j)`.
#[derive(Clone, Debug, Default)]
pub struct MonomialTable {
    nodes: Vec<TrieNode>,
    children: HashMap<(usize, usize, usize), usize>,
}

const ROOT: usize = usize::MAX;

impl MonomialTable {
    /// Number of auxiliary product columns (length-one paths reuse `delta`).
    pub fn num_auxiliary(&self) -> usize {
        self.nodes.iter().filter(|n| n.members.len() > 1).count()
    }
}

/// The LP relaxation of one node together with its column map.
#[derive(Clone, Debug)]
pub struct Relaxation<T> {
    pub lp: LinearProgram<T>,
    pub delta_col: Vec<Vec<usize>>,
    pub v_col: Vec<usize>,
    pub varpi_col: usize,
    /// In creation order: every factor precedes the products using it.
    pub products: Vec<Product>,
    pub monomials: MonomialTable,
}

struct Builder<'a, T> {
    lp: LinearProgram<T>,
    delta_col: Vec<Vec<usize>>,
    col_bounds: Vec<Interval<T>>,
    products: Vec<Product>,
    table: MonomialTable,
    node_box: &'a NodeBox<T>,
    delta_index: Vec<Vec<usize>>,
}

impl<T: Scalar> Builder<'_, T> {
    fn add_col(&mut self, iv: Interval<T>) -> usize {
        self.col_bounds.push(iv);
        self.lp.add_var(iv.lo, iv.hi, T::zero())
    }

    /// Adds `w = x * y` with its envelope and returns `w`'s column.
    fn add_product(&mut self, x: usize, y: usize, members: Vec<usize>) -> usize {
        let (bx, by) = (self.col_bounds[x], self.col_bounds[y]);
        let iv = bx.mul(&by);
        let col = self.add_col(iv);
        let rows = mccormick_rows(bx, by).expect("consistent box");
        for r in rows {
            self.lp
                .add_constraint(vec![(col, T::one()), (x, r.cx), (y, r.cy)], r.sense, r.rhs);
        }
        self.products.push(Product { col, x, y, members });
        col
    }

    /// Column of `prod delta_j(a_j)` over `factors` (in player order).
    fn monomial(&mut self, factors: &[(usize, usize)]) -> Factor {
        let mut parent = ROOT;
        let mut col = None;
        for (depth, &(j, a)) in factors.iter().enumerate() {
            let key = (parent, j, a);
            let node = if let Some(&node) = self.table.children.get(&key) {
                node
            } else {
                let dcol = self.delta_col[j][a];
                let dvar = self.delta_index[j][a];
                let (c, members) = if depth == 0 {
                    (dcol, vec![dvar])
                } else {
                    let p = &self.table.nodes[parent];
                    let mut members = p.members.clone();
                    members.push(dvar);
                    let pcol = p.col;
                    (self.add_product(pcol, dcol, members.clone()), members)
                };
                self.table.nodes.push(TrieNode { col: c, members });
                let id = self.table.nodes.len() - 1;
                self.table.children.insert(key, id);
                id
            };
            parent = node;
            col = Some(self.table.nodes[node].col);
        }
        col.map_or(Factor::One, Factor::Col)
    }
}

/// Builds the relaxation over `node_box`. Returns `None` when the box is
/// inconsistent, which certifies the node infeasible without an LP solve.
pub fn build_relaxation<T: Scalar>(g: &NormalFormGame<T>, node_box: &NodeBox<T>) -> Option<Relaxation<T>> {
    if !node_box.is_consistent() {
        return None;
    }
    let n = g.num_players();
    let actions = g.actions();
    let active: Vec<usize> = (0..n).filter(|&i| actions[i] > 1).collect();

    let mut b = Builder {
        lp: LinearProgram::new(),
        delta_col: Vec::with_capacity(n),
        col_bounds: Vec::new(),
        products: Vec::new(),
        table: MonomialTable::default(),
        node_box,
        delta_index: Vec::with_capacity(n),
    };
    for i in 0..n {
        let cols = (0..actions[i]).map(|a| b.add_col(b.node_box.delta[i][a])).collect();
        b.delta_col.push(cols);
        let idx = (0..actions[i])
            .map(|a| node_box.index_of(BoxVar::Delta { player: i, action: a }))
            .collect();
        b.delta_index.push(idx);
    }
    let v_col: Vec<usize> = (0..n).map(|i| b.add_col(node_box.v[i])).collect();
    let range = (0..n).fold(T::zero(), |acc, i| acc.max(g.u_max(i) - g.u_min(i)));
    let varpi_col = b.add_col(Interval::new(T::zero(), range));
    b.lp.set_cost({
        let mut c = vec![T::zero(); b.lp.num_vars()];
        c[varpi_col] = T::one();
        c
    });

    for &i in &active {
        let row = b.delta_col[i].iter().map(|&c| (c, T::one())).collect();
        b.lp.add_constraint(row, Sense::Eq, T::one());
    }

    // t_{i,a} = delta_i(a) * v_i; a single-action player has t = v_i.
    let mut t_col: Vec<Vec<usize>> = Vec::with_capacity(n);
    for i in 0..n {
        if actions[i] == 1 {
            t_col.push(vec![v_col[i]]);
            continue;
        }
        let vvar = node_box.index_of(BoxVar::Value { player: i });
        let cols = (0..actions[i])
            .map(|a| {
                let members = vec![b.delta_index[i][a], vvar];
                b.add_product(b.delta_col[i][a], v_col[i], members)
            })
            .collect();
        t_col.push(cols);
    }

    // Accumulate sum_a u_i(a) m(a) and sum_{a_-i} u_i(a) w_{a_-i}.
    let mut full: Vec<Vec<Vec<(usize, T)>>> = actions.iter().map(|&k| vec![Vec::new(); k]).collect();
    let mut full_const: Vec<Vec<T>> = actions.iter().map(|&k| vec![T::zero(); k]).collect();
    let mut dev = full.clone();
    let mut dev_const = full_const.clone();
    let mut factors = Vec::with_capacity(n);
    for (flat, a) in g.profiles() {
        factors.clear();
        factors.extend(active.iter().map(|&j| (j, a[j])));
        let m = b.monomial(&factors);
        for i in 0..n {
            let u = g.payoffs(i)[flat];
            let w = if actions[i] == 1 {
                m
            } else {
                let others: Vec<(usize, usize)> = factors.iter().copied().filter(|&(j, _)| j != i).collect();
                b.monomial(&others)
            };
            for (f, target, konst) in [(m, &mut full, &mut full_const), (w, &mut dev, &mut dev_const)] {
                match f {
                    Factor::One => konst[i][a[i]] += u,
                    Factor::Col(c) => {
                        if u != T::zero() {
                            target[i][a[i]].push((c, u));
                        }
                    }
                }
            }
        }
    }

    for i in 0..n {
        for ai in 0..actions[i] {
            // v_i - sum u w >= const
            let mut row = vec![(v_col[i], T::one())];
            row.extend(dev[i][ai].iter().map(|&(c, u)| (c, -u)));
            b.lp.add_constraint(row, Sense::Ge, dev_const[i][ai]);

            // varpi - t + sum u m >= -const and varpi + t - sum u m >= const
            let t = t_col[i][ai];
            let mut lower = vec![(varpi_col, T::one()), (t, -T::one())];
            lower.extend(full[i][ai].iter().copied());
            b.lp.add_constraint(lower, Sense::Ge, -full_const[i][ai]);
            let mut upper = vec![(varpi_col, T::one()), (t, T::one())];
            upper.extend(full[i][ai].iter().map(|&(c, u)| (c, -u)));
            b.lp.add_constraint(upper, Sense::Ge, full_const[i][ai]);
        }
    }

    Some(Relaxation {
        lp: b.lp,
        delta_col: b.delta_col,
        v_col,
        varpi_col,
        products: b.products,
        monomials: b.table,
    })
}

impl<T: Scalar> Relaxation<T> {
    /// Extends `(delta, v)` with true products and the tightest `varpi`.
    pub fn lift(&self, probs: &[Vec<T>], v: &[T]) -> Vec<T> {
        let mut x = vec![T::zero(); self.lp.num_vars()];
        for (cols, p) in self.delta_col.iter().zip(probs) {
            for (&c, &val) in cols.iter().zip(p) {
                x[c] = val;
            }
        }
        for (&c, &val) in self.v_col.iter().zip(v) {
            x[c] = val;
        }
        for p in &self.products {
            x[p.col] = x[p.x] * x[p.y];
        }
        // smallest varpi satisfying the complementarity rows
        let mut varpi = T::zero();
        for c in self.lp.constraints() {
            if c.coeffs.first().map(|&(j, _)| j) == Some(self.varpi_col) {
                let rest: T = c.coeffs[1..].iter().map(|&(j, a)| a * x[j]).sum();
                varpi = varpi.max(c.rhs - rest);
            }
        }
        x[self.varpi_col] = varpi;
        x
    }

    /// `(delta, v)` read from an LP point.
    pub fn point(&self, x: &[T]) -> (Vec<Vec<T>>, Vec<T>) {
        let probs = self
            .delta_col
            .iter()
            .map(|cols| cols.iter().map(|&c| x[c]).collect())
            .collect();
        let v = self.v_col.iter().map(|&c| x[c]).collect();
        (probs, v)
    }

    /// `|w - x * y|` for every product at an LP point, in product order.
    pub fn product_gaps(&self, x: &[T]) -> Vec<T> {
        self.products
            .iter()
            .map(|p| (x[p.col] - x[p.x] * x[p.y]).abs())
            .collect()
    }

    /// Column of a box variable.
    pub fn column(&self, var: BoxVar) -> usize {
        match var {
            BoxVar::Delta { player, action } => self.delta_col[player][action],
            BoxVar::Value { player } => self.v_col[player],
        }
    }
}

/// Which box variables optimality-based tightening visits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TightenOptions {
    pub values: bool,
}

impl Default for TightenOptions {
    fn default() -> Self {
        Self { values: false }
    }
}

/// Optimality-based bound tightening: minimizes and maximizes each selected
/// variable over the relaxation with `varpi <= cutoff`.
///
/// The result keeps every penalty-feasible point of `node_box` whose `varpi`
/// is at most `cutoff`; bounds are widened outward by a small margin to
/// absorb LP tolerances. Returns `None` when no such point can exist.
pub fn tighten_bounds<T: Scalar>(
    g: &NormalFormGame<T>,
    node_box: &NodeBox<T>,
    cutoff: T,
    opts: TightenOptions,
) -> Option<NodeBox<T>> {
    let mut relax = build_relaxation(g, node_box)?;
    let vc = relax.varpi_col;
    let hi = relax.lp.upper()[vc];
    let cap = cutoff.max(T::zero()) + T::tol(1e-12);
    if cap < hi {
        relax.lp.set_bounds(vc, T::zero(), cap);
    }
    let mut out = node_box.clone();
    let nvars = relax.lp.num_vars();
    for idx in 0..node_box.num_vars() {
        let var = node_box.var(idx);
        if matches!(var, BoxVar::Value { .. }) && !opts.values {
            continue;
        }
        let iv = node_box.get(var);
        if iv.width() <= T::zero() {
            continue;
        }
        let col = relax.column(var);
        let margin = T::lit(1e-7) * T::one().max(iv.width());
        let mut new = iv;
        for sign in [T::one(), -T::one()] {
            let mut cost = vec![T::zero(); nvars];
            cost[col] = sign;
            relax.lp.set_cost(cost);
            let sol = solve_lp(&relax.lp);
            match sol.status {
                LpStatus::Infeasible => return None,
                LpStatus::Optimal => {
                    let val = sol.x[col];
                    if sign > T::zero() {
                        new.lo = new.lo.max(val - margin);
                    } else {
                        new.hi = new.hi.min(val + margin);
                    }
                }
                _ => {}
            }
        }
        if new.lo > new.hi {
            let mid = (new.lo + new.hi) / T::lit(2.0);
            new = Interval::point(mid.max(iv.lo).min(iv.hi));
        }
        out.set(var, new);
        relax.lp.set_bounds(col, new.lo, new.hi);
    }
    Some(out)
}
