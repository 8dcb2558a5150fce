//! Exact MILP solving by depth-first branch-and-bound on the activation
//! binaries, with an LP relaxation bound at every node.
//!
//! Equal-power optima are common here (interchangeable servers, symmetric
//! vehicles), so optimality alone does not pin the output. After the
//! search proves the optimal value, a canonicalization pass fixes every
//! binary by probing: activations are switched off greedily in device-id
//! order whenever a tie-optimal completion still exists, assignment
//! indicators are then switched on greedily in task order, and finally
//! each allocation variable is pushed to its maximum within the optimal
//! objective. The result is a deterministic representative of the optimal
//! face, independent of search order.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::model::{MilpModel, Sense, VarKind};
use crate::power::{self, PowerBreakdown};
use crate::simplex::{solve_lp, LpOutcome, LpProblem, LpRow};
use crate::topology::DeviceKind;
use crate::Result;

/// Integrality tolerance on binary values.
const INT_TOL: f64 = 1e-6;
/// Most tie-optimal leaves retained for canonicalization shortcuts.
const POOL_CAP: usize = 64;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Relative bound gap below which the search stops early.
    pub gap_tol: f64,
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    /// Absolute objective slack within which solutions count as tied.
    pub tie_eps: f64,
    /// Resolve ties to the canonical representative (on by default).
    pub canonicalize: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            gap_tol: 1e-6,
            time_limit: None,
            node_limit: None,
            tie_eps: 1e-6,
            canonicalize: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    GapLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::GapLimit => "gap-limit",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocEntry {
    pub task: usize,
    pub device: String,
    pub mips: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    /// Total attributed power in watts (0 when infeasible).
    pub objective: f64,
    /// Relative bound gap (0 when solved to optimality).
    pub gap: f64,
    pub solve_time: f64,
    pub nodes: usize,
    pub allocation: Vec<AllocEntry>,
    pub active_pns: Vec<String>,
    pub active_traffic: Vec<String>,
    /// Allocated MIPS per vehicular cluster, keyed "z{zone}c{cluster}".
    pub per_vec_mips: BTreeMap<String, f64>,
    pub breakdown: PowerBreakdown,
}

/// The continuous relaxation over the model's non-redundant rows.
pub fn lp_relaxation(model: &MilpModel) -> LpProblem {
    LpProblem {
        ncols: model.vars.len(),
        lb: model.vars.iter().map(|v| v.lb).collect(),
        ub: model.vars.iter().map(|v| v.ub).collect(),
        obj: model.vars.iter().map(|v| v.obj).collect(),
        rows: model
            .constraints
            .iter()
            .filter(|c| !c.redundant)
            .map(|c| LpRow {
                coeffs: c.coeffs.clone(),
                sense: c.sense,
                rhs: c.rhs,
            })
            .collect(),
    }
}

/// Branching priority: node activations first (cheapest attributed idle
/// per MIPS first, so the relaxation's favorite devices are decided
/// early), then traffic activations by device id, then assignment
/// indicators in task order.
fn branch_order(model: &MilpModel) -> Vec<usize> {
    let topo = &model.topology;
    let mut zs: Vec<(f64, usize, usize)> = model
        .z_idx
        .iter()
        .map(|(&pn, &j)| {
            let p = topo.profile_of(pn);
            let idle = if p.kind == DeviceKind::Vn {
                // A vehicle's activation cost is its wireless adapter.
                let vw = topo.profile(DeviceKind::Vw);
                vw.pue * vw.idle_fraction * vw.p_idle
            } else {
                p.pue * p.idle_fraction * p.p_idle
            };
            (idle / p.capacity, pn, j)
        })
        .collect();
    zs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut order: Vec<usize> = zs.into_iter().map(|(_, _, j)| j).collect();
    order.extend(model.psi_idx.values().copied());
    order.extend(model.y_idx.values().copied());
    order
}

struct Searcher<'m> {
    model: &'m MilpModel,
    lp: LpProblem,
    branch_order: Vec<usize>,
    binaries: Vec<usize>,
    tie_eps: f64,
    node_limit: Option<usize>,
    deadline: Option<Instant>,
    nodes: usize,
    limit_hit: bool,
    /// LP bounds over subtrees left unexplored when a limit fired.
    open_bounds: Vec<f64>,
    incumbent: Option<f64>,
    pool: Vec<(f64, Vec<f64>)>,
}

impl<'m> Searcher<'m> {
    fn new(model: &'m MilpModel, opts: &SolveOptions) -> Searcher<'m> {
        Searcher {
            model,
            lp: lp_relaxation(model),
            branch_order: branch_order(model),
            binaries: model
                .vars
                .iter()
                .enumerate()
                .filter(|(_, v)| v.kind == VarKind::Binary)
                .map(|(j, _)| j)
                .collect(),
            tie_eps: opts.tie_eps,
            node_limit: opts.node_limit,
            deadline: opts
                .time_limit
                .map(|s| Instant::now() + std::time::Duration::from_secs_f64(s)),
            nodes: 0,
            limit_hit: false,
            open_bounds: Vec::new(),
            incumbent: None,
            pool: Vec::new(),
        }
    }

    fn limits_exceeded(&self) -> bool {
        if let Some(nl) = self.node_limit {
            if self.nodes >= nl {
                return true;
            }
        }
        if let Some(dl) = self.deadline {
            if Instant::now() >= dl {
                return true;
            }
        }
        false
    }

    fn first_fractional(&self, values: &[f64]) -> Option<usize> {
        self.branch_order
            .iter()
            .copied()
            .find(|&j| (values[j] - values[j].round()).abs() > INT_TOL)
    }

    fn record_leaf(&mut self, obj: f64, values: Vec<f64>) {
        if self.incumbent.map_or(true, |inc| obj < inc) {
            self.incumbent = Some(obj);
            let keep = obj + self.tie_eps;
            self.pool.retain(|(o, _)| *o <= keep);
        }
        let inc = self.incumbent.unwrap();
        if obj <= inc + self.tie_eps && self.pool.len() < POOL_CAP {
            self.pool.push((obj, values));
        }
    }

    fn minimize(&mut self) {
        self.dfs_min(f64::NEG_INFINITY);
    }

    fn dfs_min(&mut self, parent_bound: f64) {
        if self.limits_exceeded() {
            self.limit_hit = true;
            self.open_bounds.push(parent_bound);
            return;
        }
        self.nodes += 1;
        let (bound, values) = match solve_lp(&self.lp) {
            LpOutcome::Infeasible => return,
            LpOutcome::Unbounded => unreachable!("bounded variables, nonnegative costs"),
            LpOutcome::Optimal { objective, values } => (objective, values),
        };
        if let Some(inc) = self.incumbent {
            // Keep exploring anything that could still tie the incumbent.
            if bound > inc + self.tie_eps {
                return;
            }
        }
        match self.first_fractional(&values) {
            None => self.record_leaf(bound, values),
            Some(j) => {
                let first = values[j].round().clamp(0.0, 1.0);
                let (olb, oub) = (self.lp.lb[j], self.lp.ub[j]);
                for v in [first, 1.0 - first] {
                    self.lp.lb[j] = v;
                    self.lp.ub[j] = v;
                    self.dfs_min(bound);
                }
                self.lp.lb[j] = olb;
                self.lp.ub[j] = oub;
            }
        }
    }

    /// Searches for any integral solution with objective at most `cap`
    /// under the current bound fixings; found leaves also feed the pool.
    fn dfs_tie(&mut self, cap: f64) -> bool {
        let (bound, values) = match solve_lp(&self.lp) {
            LpOutcome::Infeasible => return false,
            LpOutcome::Unbounded => unreachable!("bounded variables, nonnegative costs"),
            LpOutcome::Optimal { objective, values } => (objective, values),
        };
        if bound > cap + 1e-9 {
            return false;
        }
        match self.first_fractional(&values) {
            None => {
                if self.pool.len() < POOL_CAP {
                    self.pool.push((bound, values));
                }
                true
            }
            Some(j) => {
                let first = values[j].round().clamp(0.0, 1.0);
                let (olb, oub) = (self.lp.lb[j], self.lp.ub[j]);
                let mut found = false;
                for v in [first, 1.0 - first] {
                    self.lp.lb[j] = v;
                    self.lp.ub[j] = v;
                    if self.dfs_tie(cap) {
                        found = true;
                        break;
                    }
                }
                self.lp.lb[j] = olb;
                self.lp.ub[j] = oub;
                found
            }
        }
    }

    /// Drops pool entries that contradict the bound fixings made so far.
    fn prune_pool(&mut self) {
        let lb = &self.lp.lb;
        let ub = &self.lp.ub;
        let bins = &self.binaries;
        self.pool.retain(|(_, v)| {
            bins.iter()
                .all(|&j| v[j] >= lb[j] - INT_TOL && v[j] <= ub[j] + INT_TOL)
        });
    }

    /// Fixes every binary to the canonical tie-optimal assignment and
    /// returns the refined variable vector.
    fn canonicalize(&mut self) -> Vec<f64> {
        let model = self.model;
        let cap = self.incumbent.expect("canonicalize needs an incumbent") + self.tie_eps;

        // Activation probing: switch devices off in id order where a
        // tie-optimal completion survives.
        let mut activation_vars: Vec<usize> = Vec::new();
        for dev in &model.topology.devices {
            if let Some(&j) = model.z_idx.get(&dev.id) {
                activation_vars.push(j);
            } else if let Some(&j) = model.psi_idx.get(&dev.id) {
                activation_vars.push(j);
            }
        }
        for j in activation_vars {
            if self.lp.lb[j] == self.lp.ub[j] {
                continue;
            }
            self.prune_pool();
            let known_off = self.pool.iter().any(|(o, v)| *o <= cap && v[j] < 0.5);
            self.lp.lb[j] = 0.0;
            self.lp.ub[j] = 0.0;
            if !known_off && !self.dfs_tie(cap) {
                self.lp.lb[j] = 1.0;
                self.lp.ub[j] = 1.0;
            }
        }
        // Assignment probing: switch indicators off in task order where a
        // tie-optimal completion survives, leaving every task the minimal
        // set of serving nodes.
        for (&(_, pn), &yj) in &model.y_idx {
            if self.lp.lb[yj] == self.lp.ub[yj] {
                continue;
            }
            if self.lp.ub[model.z_idx[&pn]] < 0.5 {
                self.lp.lb[yj] = 0.0;
                self.lp.ub[yj] = 0.0;
                continue;
            }
            self.prune_pool();
            let known_off = self.pool.iter().any(|(o, v)| *o <= cap && v[yj] < 0.5);
            self.lp.lb[yj] = 0.0;
            self.lp.ub[yj] = 0.0;
            if !known_off && !self.dfs_tie(cap) {
                self.lp.lb[yj] = 1.0;
                self.lp.ub[yj] = 1.0;
            }
        }

        // Allocation refinement: with binaries fixed, push each X in turn
        // to its maximum within the optimal objective and pin it there.
        let z_fix = match solve_lp(&self.lp) {
            LpOutcome::Optimal { objective, .. } => objective,
            _ => unreachable!("the probed fixing admits a feasible completion"),
        };
        let obj_row: Vec<(usize, f64)> = self
            .lp
            .obj
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        let mut refine = self.lp.clone();
        refine.rows.push(LpRow {
            coeffs: obj_row,
            sense: Sense::Le,
            rhs: z_fix + (z_fix.abs() * 1e-9).max(1e-9),
        });
        let mut last_values: Option<Vec<f64>> = None;
        for (&(tid, pn), &xj) in &model.x_idx {
            if refine.lb[model.y_idx[&(tid, pn)]] < 0.5 {
                continue;
            }
            let mut maxprob = refine.clone();
            maxprob.obj = vec![0.0; refine.ncols];
            maxprob.obj[xj] = -1.0;
            match solve_lp(&maxprob) {
                LpOutcome::Optimal { values, .. } => {
                    let xv = values[xj];
                    refine.lb[xj] = xv;
                    refine.ub[xj] = xv;
                    last_values = Some(values);
                }
                _ => unreachable!("pins replay a known feasible point"),
            }
        }
        let mut values = last_values.unwrap_or_else(|| match solve_lp(&self.lp) {
            LpOutcome::Optimal { values, .. } => values,
            _ => unreachable!("the probed fixing admits a feasible completion"),
        });

        for &j in &self.binaries {
            values[j] = values[j].round().clamp(0.0, 1.0);
        }
        // Cosmetic snap of near-integer allocations, reverted unless every
        // row still holds tightly.
        let mut snaps: Vec<(usize, f64)> = Vec::new();
        for &xj in model.x_idx.values() {
            let v = values[xj];
            let r = v.round();
            if v != r && (v - r).abs() <= INT_TOL {
                snaps.push((xj, v));
                values[xj] = r;
            }
        }
        if !snaps.is_empty() && max_row_residual(model, &values) > 1e-9 {
            for &(xj, v) in &snaps {
                values[xj] = v;
            }
        }
        values
    }
}

/// Largest absolute violation across every model row, redundant included.
fn max_row_residual(model: &MilpModel, values: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for c in &model.constraints {
        let lhs: f64 = c.coeffs.iter().map(|&(j, k)| k * values[j]).sum();
        let r = match c.sense {
            Sense::Le => (lhs - c.rhs).max(0.0),
            Sense::Ge => (c.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - c.rhs).abs(),
        };
        worst = worst.max(r);
    }
    worst
}

fn empty_breakdown() -> PowerBreakdown {
    PowerBreakdown::default()
}

pub(crate) fn build_solution(
    model: &MilpModel,
    values: &[f64],
    status: SolveStatus,
    gap: f64,
    nodes: usize,
    solve_time: f64,
) -> Result<Solution> {
    let topo = &model.topology;
    let mut allocation = Vec::new();
    let mut triples = Vec::new();
    for (&(tid, pn), &xj) in &model.x_idx {
        let v = values[xj];
        if v > INT_TOL {
            allocation.push(AllocEntry {
                task: tid,
                device: topo.device(pn).name.clone(),
                mips: v,
            });
            triples.push((tid, pn, v));
        }
    }
    let active_pns: Vec<String> = model
        .z_idx
        .iter()
        .filter(|(_, &zj)| values[zj] > 0.5)
        .map(|(&pn, _)| topo.device(pn).name.clone())
        .collect();
    let active_traffic: Vec<String> = model
        .psi_idx
        .iter()
        .filter(|(_, &pj)| values[pj] > 0.5)
        .map(|(&dev, _)| topo.device(dev).name.clone())
        .collect();
    let mut per_vec_mips: BTreeMap<String, f64> = BTreeMap::new();
    for &(_, pn, v) in &triples {
        let d = topo.device(pn);
        if d.kind == DeviceKind::Vn {
            *per_vec_mips
                .entry(format!("z{}c{}", d.zone, d.cluster))
                .or_insert(0.0) += v;
        }
    }
    let mut load = power::induced_assignment(topo, &model.tasks, &triples)?;
    load.delta = model
        .z_idx
        .iter()
        .map(|(&pn, &zj)| (pn, values[zj] > 0.5))
        .collect();
    load.psi = model
        .psi_idx
        .iter()
        .map(|(&dev, &pj)| (dev, values[pj] > 0.5))
        .collect();
    let breakdown = power::total_power(topo, &load)?;
    let objective: f64 = values
        .iter()
        .zip(model.vars.iter())
        .map(|(v, var)| v * var.obj)
        .sum();
    Ok(Solution {
        status,
        objective,
        gap,
        solve_time,
        nodes,
        allocation,
        active_pns,
        active_traffic,
        per_vec_mips,
        breakdown,
    })
}

/// Solves the model to proven optimality (or to the given limits) and
/// returns the canonical optimal solution.
pub fn solve(model: &MilpModel, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    let mut s = Searcher::new(model, opts);
    s.minimize();

    let elapsed = start.elapsed().as_secs_f64();
    let Some(incumbent) = s.incumbent else {
        return Ok(Solution {
            status: if s.limit_hit {
                SolveStatus::GapLimit
            } else {
                SolveStatus::Infeasible
            },
            objective: 0.0,
            gap: if s.limit_hit { 1.0 } else { 0.0 },
            solve_time: elapsed,
            nodes: s.nodes,
            allocation: Vec::new(),
            active_pns: Vec::new(),
            active_traffic: Vec::new(),
            per_vec_mips: BTreeMap::new(),
            breakdown: empty_breakdown(),
        });
    };

    if s.limit_hit {
        let lb = s.open_bounds.iter().fold(incumbent, |a, &b| a.min(b));
        let gap = if lb.is_finite() {
            ((incumbent - lb) / incumbent.abs().max(1e-12)).max(0.0)
        } else {
            1.0
        };
        let (_, best) = s
            .pool
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .expect("incumbent implies a pooled leaf")
            .clone();
        let mut values = best;
        for &j in &s.binaries {
            values[j] = values[j].round().clamp(0.0, 1.0);
        }
        let elapsed = start.elapsed().as_secs_f64();
        return build_solution(model, &values, SolveStatus::GapLimit, gap, s.nodes, elapsed);
    }

    let values = if opts.canonicalize {
        s.canonicalize()
    } else {
        let (_, best) = s
            .pool
            .iter()
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .expect("incumbent implies a pooled leaf")
            .clone();
        let mut values = best;
        for &j in &s.binaries {
            values[j] = values[j].round().clamp(0.0, 1.0);
        }
        values
    };
    let elapsed = start.elapsed().as_secs_f64();
    build_solution(model, &values, SolveStatus::Optimal, 0.0, s.nodes, elapsed)
}
