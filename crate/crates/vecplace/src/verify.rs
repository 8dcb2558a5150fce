//! Independent numerical re-check of solutions against their model.
//!
//! The verifier reconstructs the full variable vector from a reported
//! solution, evaluates every constraint row (including rows the optimizer
//! skipped as redundant), re-derives the definitional identities straight
//! from the topology, and recomputes the power total. It only reports
//! residuals; it never repairs the solution.

use std::collections::BTreeMap;

use crate::model::{MilpModel, Sense};
use crate::power;
use crate::solver::Solution;
use crate::{Error, Result};

/// One checked row and its violation magnitude.
#[derive(Clone, Debug)]
pub struct RowCheck {
    pub label: &'static str,
    pub name: String,
    pub residual: f64,
}

/// Residual report across constraint rows, identities, variable bounds,
/// and the recomputed totals.
#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub rows: Vec<RowCheck>,
    pub identities: Vec<RowCheck>,
    pub bounds: Vec<RowCheck>,
    /// Gap between the reported objective and the rebuilt cost vector.
    pub objective_delta: f64,
    /// Gap between the reported power total and a fresh power-model pass.
    pub power_delta: f64,
}

impl VerifyReport {
    /// Largest violation across every check, including the totals.
    pub fn max_residual(&self) -> f64 {
        self.rows
            .iter()
            .chain(&self.identities)
            .chain(&self.bounds)
            .map(|c| c.residual)
            .fold(self.objective_delta.max(self.power_delta), f64::max)
    }

    /// Largest violation among checks carrying `label`.
    pub fn label_residual(&self, label: &str) -> f64 {
        self.rows
            .iter()
            .chain(&self.identities)
            .chain(&self.bounds)
            .filter(|c| c.label == label)
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }

    /// True when every residual is within `tol`.
    pub fn ok(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

fn dot(coeffs: &[(usize, f64)], values: &[f64]) -> f64 {
    coeffs.iter().map(|&(j, c)| c * values[j]).sum()
}

/// Re-checks `solution` against `model` and reports every residual.
pub fn verify(solution: &Solution, model: &MilpModel) -> Result<VerifyReport> {
    let topo = &model.topology;

    // Rebuild the variable vector from the reported allocation and
    // activation lists.
    let mut values = vec![0.0; model.vars.len()];
    let mut triples: Vec<(usize, usize, f64)> = Vec::new();
    for entry in &solution.allocation {
        let pn = topo
            .id_by_name(&entry.device)
            .ok_or_else(|| Error::UnknownNode(entry.device.clone()))?;
        if entry.task >= model.tasks.len() {
            return Err(Error::InconsistentAssignment(format!(
                "task {} is not part of the model",
                entry.task
            )));
        }
        let &xj = model.x_idx.get(&(entry.task, pn)).ok_or_else(|| {
            Error::InconsistentAssignment(format!(
                "no assignment variable for task {} on {}",
                entry.task, entry.device
            ))
        })?;
        values[xj] += entry.mips;
        triples.push((entry.task, pn, entry.mips));
    }
    for (&(tid, pn), &yj) in &model.y_idx {
        if values[model.x_idx[&(tid, pn)]] >= 0.5 {
            values[yj] = 1.0;
        }
    }
    for name in &solution.active_pns {
        let pn = topo
            .id_by_name(name)
            .ok_or_else(|| Error::UnknownNode(name.clone()))?;
        let &zj = model.z_idx.get(&pn).ok_or_else(|| {
            Error::InconsistentAssignment(format!("{name} is not a candidate node"))
        })?;
        values[zj] = 1.0;
    }
    for name in &solution.active_traffic {
        let dev = topo
            .id_by_name(name)
            .ok_or_else(|| Error::UnknownNode(name.clone()))?;
        let &pj = model.psi_idx.get(&dev).ok_or_else(|| {
            Error::InconsistentAssignment(format!("{name} is not a traffic device"))
        })?;
        values[pj] = 1.0;
    }

    // Every constraint row, redundant ones included.
    let rows: Vec<RowCheck> = model
        .constraints
        .iter()
        .map(|c| {
            let lhs = dot(&c.coeffs, &values);
            let residual = match c.sense {
                Sense::Le => (lhs - c.rhs).max(0.0),
                Sense::Ge => (c.rhs - lhs).max(0.0),
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            RowCheck {
                label: c.label,
                name: c.name.clone(),
                residual,
            }
        })
        .collect();

    // Definitional identities, re-derived from the topology rather than
    // trusted from the model.
    let rev_x: BTreeMap<usize, (usize, usize)> =
        model.x_idx.iter().map(|(&pair, &j)| (j, pair)).collect();
    let mut fresh_traffic: BTreeMap<usize, f64> = BTreeMap::new();
    for &(tid, pn, mips) in &triples {
        let task = &model.tasks[tid];
        let path = topo.path(task.source_zone, task.source_cluster, pn)?;
        for &dev in &path[..path.len() - 1] {
            *fresh_traffic.entry(dev).or_insert(0.0) += task.drr * mips;
        }
    }
    let mut identities = Vec::new();
    for ident in &model.identities {
        let value = dot(&ident.coeffs, &values);
        let residual = match ident.label {
            "C23" => {
                let (j, coeff) = ident.coeffs[0];
                let (tid, pn) = rev_x[&j];
                let task = &model.tasks[tid];
                let path = topo.path(task.source_zone, task.source_cluster, pn)?;
                let route_matches = ident.devices[..] == path[..path.len() - 1];
                f64::from(!route_matches) + (coeff - task.drr).abs()
            }
            "C29" => {
                let carried = fresh_traffic.get(&ident.devices[0]).copied().unwrap_or(0.0);
                (value - carried).abs()
            }
            "C32" => {
                let (j, _) = ident.coeffs[0];
                let (tid, _) = rev_x[&j];
                (value - model.tasks[tid].drr * values[j]).abs()
            }
            other => unreachable!("unexpected identity label {other}"),
        };
        identities.push(RowCheck {
            label: ident.label,
            name: ident.name.clone(),
            residual,
        });
    }

    // Variable bounds.
    let bounds: Vec<RowCheck> = model
        .vars
        .iter()
        .enumerate()
        .map(|(j, var)| RowCheck {
            label: "BOUND",
            name: var.name.clone(),
            residual: (var.lb - values[j]).max(values[j] - var.ub).max(0.0),
        })
        .collect();

    // Totals: cost vector against the reported objective, and a fresh
    // power-model pass against the reported breakdown.
    let objective: f64 = values
        .iter()
        .zip(model.vars.iter())
        .map(|(v, var)| v * var.obj)
        .sum();
    let objective_delta = (objective - solution.objective).abs();
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
    let power_delta = match power::total_power(topo, &load) {
        Ok(breakdown) => (breakdown.total - solution.breakdown.total).abs(),
        Err(_) => f64::INFINITY,
    };

    Ok(VerifyReport {
        rows,
        identities,
        bounds,
        objective_delta,
        power_delta,
    })
}
