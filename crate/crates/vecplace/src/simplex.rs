//! Dense two-phase primal simplex with explicit variable bounds.
//!
//! Sized for the node subproblems of the branch-and-bound search: a few
//! hundred rows and columns. Rows are equilibrated, then given one slack
//! column each; artificial columns are introduced only for rows whose
//! initial slack value violates its bounds. Phase 1 minimizes the total
//! artificial value, phase 2 the caller's objective with artificials
//! pinned to zero.
//!
//! The tableau keeps the pivoted right-hand side alongside the rows, and
//! basic values are re-derived from it every iteration rather than updated
//! incrementally, so the reported point always satisfies the tableau's
//! linear system to machine precision. Pricing is Dantzig's rule with a
//! permanent switch to Bland's least-index rule after a window of
//! non-improving iterations, and convergence is only accepted after a
//! fresh repricing from the raw costs confirms no column is attractive.
//!
//! Round-off is discarded by rebuilding the tableau from the pristine
//! matrix at a fixed pivot cadence. If a rebuild finds the recorded basis
//! numerically dependent (a pivot accepted off drifted values), the whole
//! solve restarts on a stricter rung: more frequent rebuilds, then a wider
//! pivot acceptance threshold with a rebuild after every pivot.

use crate::model::Sense;

/// One constraint row over structural columns.
#[derive(Clone, Debug)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear program over `ncols` structural columns with finite lower
/// bounds. Upper bounds may be infinite.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub ncols: usize,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub obj: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { objective: f64, values: Vec<f64> },
    Infeasible,
    Unbounded,
}

const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
/// Objective improvement below this counts as a stalled iteration.
const PROGRESS_TOL: f64 = 1e-12;
/// Numeric rungs: pivot acceptance threshold and rebuild cadence, tried in
/// order until a run completes without hitting a singular basis.
const RUNGS: [(f64, usize); 3] = [(1e-9, 100), (1e-9, 10), (1e-6, 1)];

#[derive(Clone, Copy, PartialEq)]
enum St {
    Lower,
    Upper,
    Basic,
}

struct Tableau {
    /// m x width coefficient matrix, kept as B^-1 A by pivoting.
    t: Vec<Vec<f64>>,
    /// Pivoted right-hand side, kept as B^-1 b by the same row operations.
    beta: Vec<f64>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    val: Vec<f64>,
    state: Vec<St>,
    /// Column basic in each row.
    basis: Vec<usize>,
    /// Pristine copy of the constraint matrix, for refactorization.
    a0: Vec<Vec<f64>>,
    /// Pristine copy of the right-hand side.
    b0: Vec<f64>,
    /// Smallest tableau entry accepted as a pivot.
    pivot_tol: f64,
    /// Pivots between full tableau rebuilds.
    refactor_every: usize,
}

enum LoopEnd {
    Converged,
    Unbounded,
    /// The recorded basis turned out numerically dependent; the caller
    /// restarts on a stricter rung.
    Singular,
}

impl Tableau {
    fn width(&self) -> usize {
        self.lb.len()
    }

    fn rows(&self) -> usize {
        self.t.len()
    }

    /// Recomputes every basic value from the pivoted right-hand side and
    /// the nonbasic values.
    fn derive_basics(&mut self) {
        let m = self.rows();
        let width = self.width();
        for i in 0..m {
            let mut v = self.beta[i];
            let row = &self.t[i];
            for j in 0..width {
                if self.state[j] != St::Basic && row[j] != 0.0 {
                    v -= row[j] * self.val[j];
                }
            }
            self.val[self.basis[i]] = v;
        }
    }

    /// Rebuilds the tableau as B^-1 A from the pristine matrix and the
    /// current basis by Gauss-Jordan elimination with partial pivoting,
    /// discarding accumulated round-off. Returns false when the basis is
    /// numerically dependent.
    fn refactorize(&mut self) -> bool {
        let m = self.rows();
        let cols: Vec<usize> = self.basis.clone();
        let mut t: Vec<Vec<f64>> = self.a0.clone();
        let mut beta = self.b0.clone();
        for (step, &col) in cols.iter().enumerate() {
            let mut best = step;
            for r in step + 1..m {
                if t[r][col].abs() > t[best][col].abs() {
                    best = r;
                }
            }
            if t[best][col].abs() <= 1e-12 {
                return false;
            }
            t.swap(step, best);
            beta.swap(step, best);
            let p = t[step][col];
            beta[step] /= p;
            for v in t[step].iter_mut() {
                *v /= p;
            }
            t[step][col] = 1.0;
            for i in 0..m {
                if i == step {
                    continue;
                }
                let f = t[i][col];
                if f != 0.0 {
                    beta[i] -= f * beta[step];
                    let (pivot_row, this_row) = if i < step {
                        let (a, b) = t.split_at_mut(step);
                        (&b[0], &mut a[i])
                    } else {
                        let (a, b) = t.split_at_mut(i);
                        (&a[step], &mut b[0])
                    };
                    for (tv, pv) in this_row.iter_mut().zip(pivot_row.iter()) {
                        *tv -= f * pv;
                    }
                    t[i][col] = 0.0;
                }
            }
            self.basis[step] = col;
        }
        self.t = t;
        self.beta = beta;
        true
    }

    /// Rebuilds the reduced-cost row for the given raw costs.
    fn reprice(&mut self, raw_cost: &[f64]) {
        let m = self.rows();
        let width = self.width();
        self.cost = raw_cost.to_vec();
        for i in 0..m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..width {
                    self.cost[j] -= cb * self.t[i][j];
                }
                self.cost[self.basis[i]] = 0.0;
            }
        }
    }

    /// Step limit the basic variable of row `i` imposes on the entering
    /// column `j` moving in direction `sigma`, if it blocks at all.
    fn ratio_limit(&self, i: usize, j: usize, sigma: f64) -> Option<f64> {
        let alpha = self.t[i][j];
        if alpha.abs() <= self.pivot_tol {
            return None;
        }
        let k = self.basis[i];
        let delta = sigma * alpha;
        let limit = if delta > 0.0 {
            (self.val[k] - self.lb[k]) / delta
        } else if self.ub[k].is_finite() {
            (self.val[k] - self.ub[k]) / delta
        } else {
            return None;
        };
        Some(limit.max(0.0))
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.width() {
            if self.state[j] == St::Basic || self.lb[j] == self.ub[j] {
                continue;
            }
            let d = self.cost[j];
            let attractive = match self.state[j] {
                St::Lower => d < -COST_TOL,
                St::Upper => d > COST_TOL,
                St::Basic => false,
            };
            if !attractive {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.map_or(true, |(_, score)| d.abs() > score) {
                best = Some((j, d.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    /// One simplex phase: prices, ratio-tests, and pivots until no column
    /// is attractive or a ray is found. Convergence is re-checked against
    /// freshly recomputed reduced costs before it is reported.
    ///
    /// Anti-cycling: iterations whose objective improvement falls below
    /// `PROGRESS_TOL` count as stalled; a full window of consecutive
    /// stalls switches pricing to Bland's least-index rule permanently,
    /// under which no basis repeats, and every non-stalled step strictly
    /// lowers an objective that is bounded below.
    fn run(&mut self, raw_cost: &[f64]) -> LoopEnd {
        let m = self.rows();
        let width = self.width();
        let mut stalled = 0usize;
        let mut bland = false;
        let mut since_refactor = 0usize;
        let cap = 200_000 + 4_000 * (m + width);
        self.reprice(raw_cost);
        for _ in 0..cap {
            self.derive_basics();
            let j = match self.entering(bland) {
                Some(j) => j,
                None => {
                    // Guard against drift: rebuild the tableau and the
                    // reduced costs, then confirm no column is attractive
                    // before accepting convergence.
                    if !self.refactorize() {
                        return LoopEnd::Singular;
                    }
                    self.reprice(raw_cost);
                    self.derive_basics();
                    since_refactor = 0;
                    match self.entering(bland) {
                        None => return LoopEnd::Converged,
                        Some(j) => j,
                    }
                }
            };
            let sigma = if self.state[j] == St::Lower {
                1.0
            } else {
                -1.0
            };
            // Ratio test, two passes. The first finds the tightest limit on
            // the entering step, starting from the entering column's own
            // bound range.
            let flip_range = self.ub[j] - self.lb[j];
            let mut t_min = flip_range;
            for i in 0..m {
                if let Some(limit) = self.ratio_limit(i, j, sigma) {
                    if limit < t_min {
                        t_min = limit;
                    }
                }
            }
            if !t_min.is_finite() {
                return LoopEnd::Unbounded;
            }
            // Second pass picks the blocking row. Under Dantzig pricing,
            // near-tied rows are resolved toward the largest pivot element
            // for numerical stability; under Bland's rule, ties must be
            // exact and go to the lowest basic column index so the
            // anti-cycling guarantee holds.
            let mut leave: Option<usize> = None;
            if flip_range > t_min {
                let window = if bland {
                    0.0
                } else {
                    1e-9 * (1.0 + t_min.abs())
                };
                let mut best_alpha = 0.0f64;
                for i in 0..m {
                    let Some(limit) = self.ratio_limit(i, j, sigma) else {
                        continue;
                    };
                    if limit > t_min + window {
                        continue;
                    }
                    let alpha = self.t[i][j].abs();
                    let better = match leave {
                        None => true,
                        Some(r) => {
                            if bland {
                                self.basis[i] < self.basis[r]
                            } else {
                                alpha > best_alpha
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        best_alpha = alpha;
                    }
                }
            }
            let t_step = match leave {
                Some(i) => self
                    .ratio_limit(i, j, sigma)
                    .expect("blocking row has a limit"),
                None => t_min,
            };
            if self.cost[j].abs() * t_step <= PROGRESS_TOL {
                stalled += 1;
                if stalled > m + width {
                    bland = true;
                }
            } else {
                stalled = 0;
            }
            match leave {
                None => {
                    // Bound flip: the entering column crosses to its other
                    // bound without a basis change.
                    if sigma > 0.0 {
                        self.val[j] = self.ub[j];
                        self.state[j] = St::Upper;
                    } else {
                        self.val[j] = self.lb[j];
                        self.state[j] = St::Lower;
                    }
                }
                Some(r) => {
                    let k = self.basis[r];
                    // The leaving variable exits at the bound that limited
                    // the step.
                    if sigma * self.t[r][j] > 0.0 {
                        self.val[k] = self.lb[k];
                        self.state[k] = St::Lower;
                    } else {
                        self.val[k] = self.ub[k];
                        self.state[k] = St::Upper;
                    }
                    let p = self.t[r][j];
                    self.beta[r] /= p;
                    for v in self.t[r].iter_mut() {
                        *v /= p;
                    }
                    self.t[r][j] = 1.0;
                    for i in 0..m {
                        if i == r {
                            continue;
                        }
                        let f = self.t[i][j];
                        if f != 0.0 {
                            self.beta[i] -= f * self.beta[r];
                            for c in 0..width {
                                self.t[i][c] -= f * self.t[r][c];
                            }
                            self.t[i][j] = 0.0;
                        }
                    }
                    let f = self.cost[j];
                    if f != 0.0 {
                        for c in 0..width {
                            self.cost[c] -= f * self.t[r][c];
                        }
                        self.cost[j] = 0.0;
                    }
                    self.basis[r] = j;
                    self.state[j] = St::Basic;
                    since_refactor += 1;
                    if since_refactor >= self.refactor_every {
                        if !self.refactorize() {
                            return LoopEnd::Singular;
                        }
                        self.reprice(raw_cost);
                        since_refactor = 0;
                    }
                }
            }
        }
        panic!("simplex failed to converge within the iteration cap");
    }
}

/// A normalized `<=` or `=` row over dense structural coefficients.
struct Norm {
    dense: Vec<f64>,
    rhs: f64,
    eq: bool,
}

/// Solves the LP. Lower bounds must be finite; upper bounds may be
/// infinite.
pub fn solve_lp(p: &LpProblem) -> LpOutcome {
    let n = p.ncols;
    debug_assert!(
        p.lb.iter().all(|v| v.is_finite()),
        "lower bounds must be finite"
    );
    for j in 0..n {
        if p.lb[j] > p.ub[j] + 1e-12 {
            return LpOutcome::Infeasible;
        }
    }

    // Normalize rows: fold duplicate columns, turn >= into <=, equilibrate,
    // and settle empty rows immediately.
    let mut norms: Vec<Norm> = Vec::new();
    for row in &p.rows {
        let mut dense = vec![0.0; n];
        for &(j, c) in &row.coeffs {
            dense[j] += c;
        }
        let mut rhs = row.rhs;
        if row.sense == Sense::Ge {
            for v in dense.iter_mut() {
                *v = -*v;
            }
            rhs = -rhs;
        }
        let scale = dense.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            let ok = match row.sense {
                Sense::Eq => rhs.abs() <= FEAS_TOL,
                _ => rhs >= -FEAS_TOL,
            };
            if !ok {
                return LpOutcome::Infeasible;
            }
            continue;
        }
        for v in dense.iter_mut() {
            *v /= scale;
        }
        rhs /= scale;
        norms.push(Norm {
            dense,
            rhs,
            eq: row.sense == Sense::Eq,
        });
    }

    for (pivot_tol, refactor_every) in RUNGS {
        if let Some(outcome) = attempt(p, &norms, pivot_tol, refactor_every) {
            return outcome;
        }
    }
    panic!("singular basis persisted through per-pivot refactorization");
}

/// One full two-phase run at the given numeric rung. Returns None when a
/// refactorization finds the basis numerically dependent.
fn attempt(
    p: &LpProblem,
    norms: &[Norm],
    pivot_tol: f64,
    refactor_every: usize,
) -> Option<LpOutcome> {
    let n = p.ncols;
    let m = norms.len();
    let mut lb = p.lb.clone();
    let mut ub = p.ub.clone();
    let mut val: Vec<f64> = (0..n).map(|j| p.lb[j]).collect();
    let mut state = vec![St::Lower; n];
    // One slack column per row.
    for norm in norms {
        lb.push(0.0);
        ub.push(if norm.eq { 0.0 } else { f64::INFINITY });
        val.push(0.0);
        state.push(St::Lower);
    }
    let mut t: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut art_cols: Vec<usize> = Vec::new();
    let mut pending_art: Vec<usize> = Vec::new();
    for (i, norm) in norms.iter().enumerate() {
        let mut row = vec![0.0; n + m];
        row[..n].copy_from_slice(&norm.dense);
        row[n + i] = 1.0;
        let mut rhs = norm.rhs;
        let free_val: f64 = rhs
            - norm
                .dense
                .iter()
                .zip(&val[..n])
                .map(|(a, v)| a * v)
                .sum::<f64>();
        let s_ub = ub[n + i];
        if free_val >= 0.0 && free_val <= s_ub {
            // Slack starts basic and feasible.
            val[n + i] = free_val;
            state[n + i] = St::Basic;
            basis[i] = n + i;
        } else {
            // Clamp the slack to its nearest bound and cover the residual
            // with an artificial, negating the row so the artificial
            // starts at a nonnegative value.
            let clamped = free_val.clamp(0.0, s_ub);
            val[n + i] = clamped;
            state[n + i] = if clamped == 0.0 { St::Lower } else { St::Upper };
            if free_val - clamped < 0.0 {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                rhs = -rhs;
            }
            pending_art.push(i);
        }
        t.push(row);
        beta.push(rhs);
    }
    let nart = pending_art.len();
    let width = n + m + nart;
    for row in t.iter_mut() {
        row.resize(width, 0.0);
    }
    for (a, &i) in pending_art.iter().enumerate() {
        let col = n + m + a;
        t[i][col] = 1.0;
        lb.push(0.0);
        ub.push(f64::INFINITY);
        val.push(0.0);
        state.push(St::Basic);
        basis[i] = col;
        art_cols.push(col);
    }

    let mut tab = Tableau {
        a0: t.clone(),
        b0: beta.clone(),
        t,
        beta,
        cost: vec![0.0; width],
        lb,
        ub,
        val,
        state,
        basis,
        pivot_tol,
        refactor_every,
    };

    if nart > 0 {
        let mut c1 = vec![0.0; width];
        for &col in &art_cols {
            c1[col] = 1.0;
        }
        match tab.run(&c1) {
            LoopEnd::Converged => {}
            LoopEnd::Unbounded => unreachable!("phase 1 objective is bounded below"),
            LoopEnd::Singular => return None,
        }
        tab.derive_basics();
        let infeas: f64 = art_cols.iter().map(|&c| tab.val[c].abs()).sum();
        if infeas > FEAS_TOL {
            return Some(LpOutcome::Infeasible);
        }
        for &col in &art_cols {
            tab.lb[col] = 0.0;
            tab.ub[col] = 0.0;
            if tab.state[col] != St::Basic {
                tab.val[col] = 0.0;
            }
        }
    }

    let mut c2 = vec![0.0; width];
    c2[..n].copy_from_slice(&p.obj);
    match tab.run(&c2) {
        LoopEnd::Converged => {}
        LoopEnd::Unbounded => return Some(LpOutcome::Unbounded),
        LoopEnd::Singular => return None,
    }
    tab.derive_basics();

    let values: Vec<f64> = tab.val[..n].to_vec();
    let objective: f64 = values.iter().zip(&p.obj).map(|(v, c)| v * c).sum();
    Some(LpOutcome::Optimal { objective, values })
}
