//! Exhaustive grid-search oracle for small placement instances.
//!
//! Enumerates every split of each task's demand into multiples of a grid
//! step across the candidate nodes, checks feasibility directly against the
//! topology (node capacity, per-hop routing rates, access-point wireless
//! budget), and scores the survivors with the power model. The search is
//! independent of the optimizer's constraint rows and linear relaxation, so
//! it serves as a reference answer on instances small enough to enumerate.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::model::MilpModel;
use crate::power;
use crate::solver::{self, Solution, SolveStatus};
use crate::topology::DeviceKind;
use crate::{Error, Result};

/// Largest task count the oracle accepts.
pub const MAX_TASKS: usize = 3;
/// Largest candidate-node count the oracle accepts.
pub const MAX_NODES: usize = 6;

const TOL: f64 = 1e-9;

/// Upper bound on how far the grid optimum can sit above the continuous
/// optimum: one step per task at the steepest per-MIPS cost.
pub fn grid_slack_bound(model: &MilpModel, grid_step: f64) -> f64 {
    model
        .tasks
        .iter()
        .map(|task| {
            let steepest = model
                .available
                .iter()
                .map(|&pn| model.vars[model.x_idx[&(task.id, pn)]].obj)
                .fold(0.0_f64, f64::max);
            grid_step * steepest
        })
        .sum()
}

/// Scores one complete placement, or returns `None` when it is infeasible.
fn placement_power(model: &MilpModel, alloc: &[(usize, usize, f64)]) -> Result<Option<f64>> {
    let topo = &model.topology;
    let mut node_load: BTreeMap<usize, f64> = BTreeMap::new();
    let mut hop_flow: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut ap_vec_flow: BTreeMap<usize, f64> = BTreeMap::new();
    for &(tid, pn, mips) in alloc {
        *node_load.entry(pn).or_insert(0.0) += mips;
        let drr = model.tasks[tid].drr;
        for w in model.paths[&(tid, pn)].windows(2) {
            *hop_flow.entry((w[0], w[1])).or_insert(0.0) += drr * mips;
        }
        let dest = topo.device(pn);
        if dest.kind == DeviceKind::Vn {
            let ap = topo.ap(dest.zone, dest.cluster);
            *ap_vec_flow.entry(ap).or_insert(0.0) += drr * mips;
        }
    }
    for (&pn, &load) in &node_load {
        let cap = topo.profile_of(pn).capacity;
        if load > cap + TOL * cap.max(1.0) {
            return Ok(None);
        }
    }
    for (&(a, b), &flow) in &hop_flow {
        let cap = topo.hop_capacity(a, b);
        if flow > cap + TOL * cap.max(1.0) {
            return Ok(None);
        }
    }
    let ap_cap = topo.profile(DeviceKind::Ap).capacity;
    for &flow in ap_vec_flow.values() {
        if flow > ap_cap + TOL * ap_cap.max(1.0) {
            return Ok(None);
        }
    }
    let load = power::induced_assignment(topo, &model.tasks, alloc)?;
    match power::total_power(topo, &load) {
        Ok(breakdown) => Ok(Some(breakdown.total)),
        Err(Error::CapacityExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Enumerates step vectors summing to `total` under per-slot caps and a
/// limit on the number of nonzero slots.
fn fill(
    i: usize,
    remaining: u64,
    parts_left: usize,
    caps: &[u64],
    suffix: &[u64],
    acc: &mut Vec<u64>,
    out: &mut Vec<Vec<u64>>,
) {
    if i == caps.len() {
        if remaining == 0 {
            out.push(acc.clone());
        }
        return;
    }
    if remaining > suffix[i] {
        return;
    }
    let hi = caps[i].min(remaining);
    for k in 0..=hi {
        if k > 0 && parts_left == 0 {
            break;
        }
        acc.push(k);
        fill(
            i + 1,
            remaining - k,
            parts_left - usize::from(k > 0),
            caps,
            suffix,
            acc,
            out,
        );
        acc.pop();
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    cands: &'a [Vec<Vec<(usize, f64)>>],
    node_cap: BTreeMap<usize, f64>,
    load: BTreeMap<usize, f64>,
    chosen: Vec<usize>,
    leaves: usize,
    best: Option<(f64, Vec<(usize, usize, f64)>)>,
}

impl Search<'_> {
    fn dfs(&mut self, ti: usize) -> Result<()> {
        if ti == self.cands.len() {
            self.leaves += 1;
            let alloc: Vec<(usize, usize, f64)> = self
                .chosen
                .iter()
                .enumerate()
                .flat_map(|(t, &ci)| self.cands[t][ci].iter().map(move |&(pn, m)| (t, pn, m)))
                .collect();
            if let Some(obj) = placement_power(self.model, &alloc)? {
                let better = match &self.best {
                    None => true,
                    Some((incumbent, _)) => obj < incumbent - 1e-12,
                };
                if better {
                    self.best = Some((obj, alloc));
                }
            }
            return Ok(());
        }
        for ci in 0..self.cands[ti].len() {
            let over = self.cands[ti][ci].iter().any(|&(pn, m)| {
                let cap = self.node_cap[&pn];
                self.load.get(&pn).copied().unwrap_or(0.0) + m > cap + TOL * cap.max(1.0)
            });
            if over {
                continue;
            }
            for &(pn, m) in &self.cands[ti][ci] {
                *self.load.entry(pn).or_insert(0.0) += m;
            }
            self.chosen.push(ci);
            self.dfs(ti + 1)?;
            self.chosen.pop();
            for &(pn, m) in &self.cands[ti][ci] {
                *self.load.get_mut(&pn).unwrap() -= m;
            }
        }
        Ok(())
    }
}

/// Finds the minimum-power placement by exhaustive enumeration.
///
/// Demands are split in multiples of `grid_step` MIPS. Returns an
/// infeasible solution when no placement fits, and an error when the
/// instance is too large to enumerate.
pub fn brute_force(model: &MilpModel, grid_step: f64) -> Result<Solution> {
    let start = Instant::now();
    assert!(grid_step >= 1.0, "grid step must be at least one MIPS");
    if model.tasks.len() > MAX_TASKS {
        return Err(Error::SizeLimit(format!(
            "{} tasks exceeds the exhaustive-search limit of {MAX_TASKS}",
            model.tasks.len()
        )));
    }
    if model.available.len() > MAX_NODES {
        return Err(Error::SizeLimit(format!(
            "{} candidate nodes exceeds the exhaustive-search limit of {MAX_NODES}",
            model.available.len()
        )));
    }

    let mut task_cands: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(model.tasks.len());
    for task in &model.tasks {
        let ubs: Vec<f64> = model
            .available
            .iter()
            .map(|&pn| model.vars[model.x_idx[&(task.id, pn)]].ub)
            .collect();
        let cands: Vec<Vec<(usize, f64)>> = if task.split_limit == Some(1) {
            model
                .available
                .iter()
                .enumerate()
                .filter(|&(i, _)| task.omega <= ubs[i] + TOL * task.omega.max(1.0))
                .map(|(_, &pn)| vec![(pn, task.omega)])
                .collect()
        } else {
            let steps = (task.omega / grid_step).round();
            assert!(
                (steps * grid_step - task.omega).abs() <= 1e-6 * task.omega.max(1.0),
                "grid step must divide the task demand"
            );
            let caps: Vec<u64> = ubs
                .iter()
                .map(|&ub| ((ub + TOL * ub.max(1.0)) / grid_step).floor().max(0.0) as u64)
                .collect();
            let mut suffix = vec![0u64; caps.len() + 1];
            for i in (0..caps.len()).rev() {
                suffix[i] = suffix[i + 1].saturating_add(caps[i]);
            }
            let mut out = Vec::new();
            let mut acc = Vec::new();
            fill(
                0,
                steps as u64,
                task.split_limit.unwrap_or(usize::MAX),
                &caps,
                &suffix,
                &mut acc,
                &mut out,
            );
            out.iter()
                .map(|parts| {
                    parts
                        .iter()
                        .enumerate()
                        .filter(|&(_, &k)| k > 0)
                        .map(|(i, &k)| (model.available[i], k as f64 * grid_step))
                        .collect()
                })
                .collect()
        };
        task_cands.push(cands);
    }

    let infeasible = |leaves: usize, elapsed: f64| Solution {
        status: SolveStatus::Infeasible,
        objective: 0.0,
        gap: 0.0,
        solve_time: elapsed,
        nodes: leaves,
        allocation: Vec::new(),
        active_pns: Vec::new(),
        active_traffic: Vec::new(),
        per_vec_mips: BTreeMap::new(),
        breakdown: power::PowerBreakdown::default(),
    };
    if task_cands.iter().any(Vec::is_empty) {
        return Ok(infeasible(0, start.elapsed().as_secs_f64()));
    }

    let node_cap: BTreeMap<usize, f64> = model
        .available
        .iter()
        .map(|&pn| (pn, model.topology.profile_of(pn).capacity))
        .collect();
    let mut search = Search {
        model,
        cands: &task_cands,
        node_cap,
        load: BTreeMap::new(),
        chosen: Vec::new(),
        leaves: 0,
        best: None,
    };
    search.dfs(0)?;

    match search.best {
        None => Ok(infeasible(search.leaves, start.elapsed().as_secs_f64())),
        Some((_, alloc)) => {
            let mut values = vec![0.0; model.vars.len()];
            for &(tid, pn, mips) in &alloc {
                values[model.x_idx[&(tid, pn)]] = mips;
                values[model.y_idx[&(tid, pn)]] = 1.0;
                values[model.z_idx[&pn]] = 1.0;
                let path = &model.paths[&(tid, pn)];
                for &dev in &path[..path.len() - 1] {
                    values[model.psi_idx[&dev]] = 1.0;
                }
            }
            solver::build_solution(
                model,
                &values,
                SolveStatus::Optimal,
                0.0,
                search.leaves,
                start.elapsed().as_secs_f64(),
            )
        }
    }
}
