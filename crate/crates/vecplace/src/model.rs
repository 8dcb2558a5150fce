//! MILP assembly: variables, linear power objective, and constraint rows
//! over a topology and task list.
//!
//! Traffic is handled by path incidence. The routing layer is a tree, so
//! the per-link flow formulation and the path formulation have identical
//! optima; device traffic is the fixed linear expression
//! `lambda_i = sum over (s, d) with i on path(s, d) of drr_s * X_sd`
//! rather than a block of flow variables. Flow conservation and traffic
//! aggregation are therefore recorded as identities that the verifier
//! re-derives from the topology instead of as solver rows.
//!
//! Beyond the core rows C24..C36, the builder emits valid strengthening
//! rows (labels starting with "S-") that tighten the LP relaxation and pin
//! a canonical optimum among symmetric ones: per-assignment activation
//! pairing, per-device traffic big-Ms, wireless adapter ties, and
//! activation chains across interchangeable server pools.

use std::collections::BTreeMap;

use crate::topology::{DeviceKind, Topology};
use crate::workload::Task;

/// Minimum MIPS an assignment must carry once its indicator is set.
pub const EPS_MIPS: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    /// Objective coefficient in watts per unit.
    pub obj: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// One solver row. `redundant` marks rows provably satisfied by the
/// variable bounds alone; the solver skips them while the verifier and the
/// exporters keep them.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub label: &'static str,
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub redundant: bool,
}

/// A definitional equation that is substituted away rather than solved:
/// routing incidence (C23), aggregated device traffic (C29), and
/// per-assignment flow coupling (C32). `coeffs` gives the expression over
/// model variables; `devices` lists the device ids the expression claims
/// to involve so the verifier can re-derive it independently.
#[derive(Clone, Debug)]
pub struct Identity {
    pub label: &'static str,
    pub name: String,
    pub devices: Vec<usize>,
    pub coeffs: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct MilpModel {
    pub topology: Topology,
    pub tasks: Vec<Task>,
    /// Processing nodes workload may be placed on, in id order.
    pub available: Vec<usize>,
    pub vars: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub identities: Vec<Identity>,
    /// (task, PN) -> X variable index.
    pub x_idx: BTreeMap<(usize, usize), usize>,
    /// (task, PN) -> assignment indicator index.
    pub y_idx: BTreeMap<(usize, usize), usize>,
    /// PN -> activation indicator index.
    pub z_idx: BTreeMap<usize, usize>,
    /// Traffic device -> activation indicator index.
    pub psi_idx: BTreeMap<usize, usize>,
    /// (task, PN) -> device path, terminal processor included.
    pub paths: BTreeMap<(usize, usize), Vec<usize>>,
    /// Per-task assignment big-M (the task demand).
    pub m1: Vec<f64>,
    /// Activation big-M (the task count).
    pub m2: f64,
    /// Traffic big-M (total generated traffic).
    pub m3: f64,
}

impl MilpModel {
    /// Traffic expression of one device: (X index, coefficient) terms.
    pub fn lambda_coeffs(&self, device: usize) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (&(tid, pn), path) in &self.paths {
            if path[..path.len() - 1].contains(&device) {
                out.push((self.x_idx[&(tid, pn)], self.tasks[tid].drr));
            }
        }
        out
    }

    /// Largest value the row's left side can take within variable bounds;
    /// infinite when a contributing bound is unbounded.
    fn row_max(&self, coeffs: &[(usize, f64)]) -> f64 {
        coeffs
            .iter()
            .map(|&(j, c)| {
                if c > 0.0 {
                    c * self.vars[j].ub
                } else {
                    c * self.vars[j].lb
                }
            })
            .sum()
    }

    fn row_min(&self, coeffs: &[(usize, f64)]) -> f64 {
        coeffs
            .iter()
            .map(|&(j, c)| {
                if c > 0.0 {
                    c * self.vars[j].lb
                } else {
                    c * self.vars[j].ub
                }
            })
            .sum()
    }

    fn is_redundant(&self, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> bool {
        let tol = 1e-9 * rhs.abs().max(1.0);
        match sense {
            Sense::Le => self.row_max(coeffs) <= rhs + tol,
            Sense::Ge => self.row_min(coeffs) >= rhs - tol,
            Sense::Eq => self.row_max(coeffs) <= rhs + tol && self.row_min(coeffs) >= rhs - tol,
        }
    }

    fn push_row(
        &mut self,
        label: &'static str,
        name: String,
        coeffs: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        let redundant = self.is_redundant(&coeffs, sense, rhs);
        self.constraints.push(Constraint {
            label,
            name,
            coeffs,
            sense,
            rhs,
            redundant,
        });
    }
}

/// Builds the placement MILP over `topology` for `tasks`, restricted to
/// the processing nodes listed in `mask`.
///
/// The builder is syntactic: capacity-impossible instances build fine and
/// surface as solver infeasibility.
pub fn build_model(topology: &Topology, tasks: &[Task], mask: &[usize]) -> MilpModel {
    let mut available: Vec<usize> = mask.to_vec();
    available.sort_unstable();
    available.dedup();
    assert!(!available.is_empty(), "availability mask is empty");
    for &pn in &available {
        assert!(
            pn < topology.devices.len() && topology.device(pn).kind.is_processing(),
            "mask entry {pn} is not a processing node"
        );
    }
    for (i, task) in tasks.iter().enumerate() {
        assert_eq!(task.id, i, "task ids must be dense and in order");
        assert!(task.omega > 0.0, "task {} has no demand", task.id);
        assert!(task.drr > 0.0, "task {} has no data rate ratio", task.id);
        assert!(
            task.source_zone >= 1 && task.source_zone <= topology.zones,
            "task {} source zone {} does not exist",
            task.id,
            task.source_zone
        );
        assert!(
            task.source_cluster >= 1 && task.source_cluster <= topology.clusters_per_zone,
            "task {} source cluster {} does not exist",
            task.id,
            task.source_cluster
        );
    }

    let traffic_devices = topology.traffic_devices();
    let mut paths: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for task in tasks {
        for &pn in &available {
            let path = topology
                .path(task.source_zone, task.source_cluster, pn)
                .expect("mask entries are processing nodes");
            paths.insert((task.id, pn), path);
        }
    }

    // Variables: X block, then the three indicator blocks, all in
    // (task, device-id) order.
    let mut vars: Vec<Variable> = Vec::new();
    let mut x_idx = BTreeMap::new();
    let mut y_idx = BTreeMap::new();
    let mut z_idx = BTreeMap::new();
    let mut psi_idx = BTreeMap::new();

    for task in tasks {
        for &pn in &available {
            let path = &paths[&(task.id, pn)];
            let mut hop_limit = f64::INFINITY;
            for w in path.windows(2) {
                hop_limit = hop_limit.min(topology.hop_capacity(w[0], w[1]));
            }
            let mut ub = task.omega.min(topology.profile_of(pn).capacity);
            if hop_limit.is_finite() {
                ub = ub.min(hop_limit / task.drr);
            }
            let pn_profile = topology.profile_of(pn);
            let mut obj = pn_profile.pue * pn_profile.marginal();
            for &dev in &path[..path.len() - 1] {
                let p = topology.profile_of(dev);
                obj += task.drr * p.pue * p.marginal();
            }
            x_idx.insert((task.id, pn), vars.len());
            vars.push(Variable {
                name: format!("X_t{}_{}", task.id, topology.device(pn).name),
                kind: VarKind::Continuous,
                lb: 0.0,
                ub,
                obj,
            });
        }
    }
    for task in tasks {
        for &pn in &available {
            y_idx.insert((task.id, pn), vars.len());
            vars.push(Variable {
                name: format!("Y_t{}_{}", task.id, topology.device(pn).name),
                kind: VarKind::Binary,
                lb: 0.0,
                ub: 1.0,
                obj: 0.0,
            });
        }
    }
    for &pn in &available {
        let p = topology.profile_of(pn);
        let obj = if p.kind == DeviceKind::Vn {
            0.0
        } else {
            p.pue * p.idle_fraction * p.p_idle
        };
        z_idx.insert(pn, vars.len());
        vars.push(Variable {
            name: format!("Z_{}", topology.device(pn).name),
            kind: VarKind::Binary,
            lb: 0.0,
            ub: 1.0,
            obj,
        });
    }
    // Source-cluster APs carry every byte a task sends, so their
    // activation is forced up front.
    let mut forced_aps: Vec<usize> = tasks
        .iter()
        .map(|t| topology.ap(t.source_zone, t.source_cluster))
        .collect();
    forced_aps.sort_unstable();
    forced_aps.dedup();
    for &dev in &traffic_devices {
        let p = topology.profile_of(dev);
        psi_idx.insert(dev, vars.len());
        vars.push(Variable {
            name: format!("PSI_{}", topology.device(dev).name),
            kind: VarKind::Binary,
            lb: if forced_aps.contains(&dev) { 1.0 } else { 0.0 },
            ub: 1.0,
            obj: p.pue * p.idle_fraction * p.p_idle,
        });
    }

    let m1: Vec<f64> = tasks.iter().map(|t| t.omega).collect();
    let m2 = tasks.len() as f64;
    let m3: f64 = tasks.iter().map(|t| t.flow).sum();
    let eps_flow = tasks
        .iter()
        .map(|t| t.drr)
        .fold(f64::INFINITY, f64::min)
        .min(1.0)
        * EPS_MIPS;

    let mut model = MilpModel {
        topology: topology.clone(),
        tasks: tasks.to_vec(),
        available,
        vars,
        constraints: Vec::new(),
        identities: Vec::new(),
        x_idx,
        y_idx,
        z_idx,
        psi_idx,
        paths,
        m1,
        m2,
        m3,
    };

    // Definitional identities: routing incidence, aggregated traffic, and
    // flow coupling.
    for task in &model.tasks {
        for &pn in &model.available {
            let path = &model.paths[&(task.id, pn)];
            model.identities.push(Identity {
                label: "C23",
                name: format!("C23_t{}_{}", task.id, model.topology.device(pn).name),
                devices: path[..path.len() - 1].to_vec(),
                coeffs: vec![(model.x_idx[&(task.id, pn)], task.drr)],
            });
        }
    }
    for &dev in &traffic_devices {
        let coeffs = model.lambda_coeffs(dev);
        model.identities.push(Identity {
            label: "C29",
            name: format!("C29_{}", model.topology.device(dev).name),
            devices: vec![dev],
            coeffs,
        });
    }
    for task in &model.tasks {
        for &pn in &model.available {
            model.identities.push(Identity {
                label: "C32",
                name: format!("C32_t{}_{}", task.id, model.topology.device(pn).name),
                devices: vec![pn],
                coeffs: vec![(model.x_idx[&(task.id, pn)], task.drr)],
            });
        }
    }

    // C24: demand satisfaction.
    for task in &model.tasks.clone() {
        let coeffs: Vec<(usize, f64)> = model
            .available
            .iter()
            .map(|&pn| (model.x_idx[&(task.id, pn)], 1.0))
            .collect();
        let name = format!("C24_t{}", task.id);
        model.push_row("C24", name, coeffs, Sense::Eq, task.omega);
    }
    // C25/C26: X to indicator linking.
    for task in &model.tasks.clone() {
        for &pn in &model.available.clone() {
            let x = model.x_idx[&(task.id, pn)];
            let y = model.y_idx[&(task.id, pn)];
            let dev = model.topology.device(pn).name.clone();
            let name = format!("C25_t{}_{}", task.id, dev);
            model.push_row("C25", name, vec![(x, 1.0), (y, -EPS_MIPS)], Sense::Ge, 0.0);
            let name = format!("C26_t{}_{}", task.id, dev);
            let m1 = model.m1[task.id];
            model.push_row("C26", name, vec![(x, 1.0), (y, -m1)], Sense::Le, 0.0);
        }
    }
    // C27/C28: node activation linking.
    for &pn in &model.available.clone() {
        let z = model.z_idx[&pn];
        let ys: Vec<(usize, f64)> = model
            .tasks
            .iter()
            .map(|t| (model.y_idx[&(t.id, pn)], 1.0))
            .collect();
        let dev = model.topology.device(pn).name.clone();
        let mut coeffs = ys.clone();
        coeffs.push((z, -1.0));
        model.push_row("C27", format!("C27_{dev}"), coeffs, Sense::Ge, 0.0);
        let mut coeffs = ys;
        coeffs.push((z, -model.m2));
        model.push_row("C28", format!("C28_{dev}"), coeffs, Sense::Le, 0.0);
    }
    // C30/C31: traffic to activation linking.
    for &dev in &traffic_devices {
        let psi = model.psi_idx[&dev];
        let lambda = model.lambda_coeffs(dev);
        let name_frag = model.topology.device(dev).name.clone();
        let mut coeffs = lambda.clone();
        coeffs.push((psi, -eps_flow));
        model.push_row("C30", format!("C30_{name_frag}"), coeffs, Sense::Ge, 0.0);
        let mut coeffs = lambda;
        coeffs.push((psi, -model.m3));
        model.push_row("C31", format!("C31_{name_frag}"), coeffs, Sense::Le, 0.0);
    }
    // C33: processing capacity, tightened with the activation indicator.
    for &pn in &model.available.clone() {
        let z = model.z_idx[&pn];
        let cap = model.topology.profile_of(pn).capacity;
        let mut coeffs: Vec<(usize, f64)> = model
            .tasks
            .iter()
            .map(|t| (model.x_idx[&(t.id, pn)], 1.0))
            .collect();
        coeffs.push((z, -cap));
        let dev = model.topology.device(pn).name.clone();
        model.push_row("C33", format!("C33_{dev}"), coeffs, Sense::Le, 0.0);
    }
    // C34: link capacity per directed hop.
    let mut hops: Vec<(usize, usize)> = model
        .paths
        .values()
        .flat_map(|p| p.windows(2).map(|w| (w[0], w[1])))
        .collect();
    hops.sort_unstable();
    hops.dedup();
    for (a, b) in hops {
        let cap = model.topology.hop_capacity(a, b);
        if !cap.is_finite() {
            continue;
        }
        let mut coeffs = Vec::new();
        for (&(tid, pn), path) in &model.paths {
            if path.windows(2).any(|w| (w[0], w[1]) == (a, b)) {
                coeffs.push((model.x_idx[&(tid, pn)], model.tasks[tid].drr));
            }
        }
        let name = format!(
            "C34_{}__{}",
            model.topology.device(a).name,
            model.topology.device(b).name
        );
        model.push_row("C34", name, coeffs, Sense::Le, cap);
    }
    // C35: AP wireless capacity over VEC-bound traffic.
    for (zone, cluster) in model.topology.clusters() {
        let ap = model.topology.ap(zone, cluster);
        let cap = model.topology.profile(DeviceKind::Ap).capacity;
        let mut coeffs = Vec::new();
        for (&(tid, pn), _) in &model.paths {
            let d = model.topology.device(pn);
            if d.kind == DeviceKind::Vn && d.zone == zone && d.cluster == cluster {
                coeffs.push((model.x_idx[&(tid, pn)], model.tasks[tid].drr));
            }
        }
        let name = format!("C35_{}", model.topology.device(ap).name);
        model.push_row("C35", name, coeffs, Sense::Le, cap);
    }
    // C36: split limit, present only when a task constrains it.
    for task in &model.tasks.clone() {
        if let Some(v) = task.split_limit {
            let coeffs: Vec<(usize, f64)> = model
                .available
                .iter()
                .map(|&pn| (model.y_idx[&(task.id, pn)], 1.0))
                .collect();
            model.push_row(
                "C36",
                format!("C36_t{}", task.id),
                coeffs,
                Sense::Le,
                v as f64,
            );
        }
    }

    // Strengthening rows. S-PAIR: an assignment indicator implies the
    // node activation (disaggregated form of C28).
    for task in &model.tasks.clone() {
        for &pn in &model.available.clone() {
            let y = model.y_idx[&(task.id, pn)];
            let z = model.z_idx[&pn];
            let name = format!("SPAIR_t{}_{}", task.id, model.topology.device(pn).name);
            model.push_row("S-PAIR", name, vec![(y, 1.0), (z, -1.0)], Sense::Le, 0.0);
        }
    }
    // S-DEVM: per-device traffic big-M (only where tighter than C31).
    for &dev in &traffic_devices {
        let lambda = model.lambda_coeffs(dev);
        let mut seen = vec![false; model.tasks.len()];
        for (&(tid, _), path) in &model.paths {
            if path[..path.len() - 1].contains(&dev) {
                seen[tid] = true;
            }
        }
        let reach: f64 = model
            .tasks
            .iter()
            .filter(|t| seen[t.id])
            .map(|t| t.flow)
            .sum();
        if reach >= model.m3 {
            continue;
        }
        let psi = model.psi_idx[&dev];
        let mut coeffs = lambda;
        coeffs.push((psi, -reach));
        let name = format!("SDEVM_{}", model.topology.device(dev).name);
        model.push_row("S-DEVM", name, coeffs, Sense::Le, 0.0);
    }
    // S-VWTIE: a vehicle's wireless adapter is powered up exactly when the
    // vehicle hosts work.
    for &pn in &model.available.clone() {
        if model.topology.device(pn).kind != DeviceKind::Vn {
            continue;
        }
        let vw = model.topology.vw_of(pn);
        let psi = model.psi_idx[&vw];
        let z = model.z_idx[&pn];
        let name = format!("SVWTIE_{}", model.topology.device(pn).name);
        model.push_row("S-VWTIE", name, vec![(psi, 1.0), (z, -1.0)], Sense::Eq, 0.0);
    }
    // S-CHAIN: interchangeable pool members activate from the highest id
    // down, removing permutation symmetry.
    let mut pools: BTreeMap<(DeviceKind, usize, usize), Vec<usize>> = BTreeMap::new();
    for &pn in &model.available {
        let d = model.topology.device(pn);
        if matches!(d.kind, DeviceKind::Cc | DeviceKind::Vn) {
            pools
                .entry((d.kind, d.zone, d.cluster))
                .or_default()
                .push(pn);
        }
    }
    for (_, pool) in pools {
        for w in pool.windows(2) {
            let za = model.z_idx[&w[0]];
            let zb = model.z_idx[&w[1]];
            let name = format!(
                "SCHAIN_{}__{}",
                model.topology.device(w[0]).name,
                model.topology.device(w[1]).name
            );
            model.push_row("S-CHAIN", name, vec![(za, 1.0), (zb, -1.0)], Sense::Le, 0.0);
        }
    }

    model
}
