//! Scenario driver: builds instances, runs the optimizer, re-checks every
//! answer, and tabulates the results.
//!
//! A run couples one [`Instance`] (hardware shape) with one [`Scenario`]
//! (workload shape). Records carry a fixed CSV schema so sweeps rerun
//! byte-identically, and the report summarises power savings between
//! availability cases and between placement strategies.

use std::collections::BTreeMap;

use crate::model::build_model;
use crate::solver::{solve, Solution, SolveOptions, SolveStatus};
use crate::topology::{
    build_custom, default_profiles, Architecture, DeviceKind, DeviceProfile, Topology,
};
use crate::verify::verify;
use crate::workload::{available_nodes, make_scenario, Case, Pattern, Strategy};
use crate::{Error, Result};

/// Residual budget a solved run must stay within.
pub const VERIFY_TOL: f64 = 1e-6;
/// Slack allowed when asserting orderings between run totals.
const ORDER_TOL: f64 = 1e-6;

/// Hardware shape of a study: architecture plus sizing knobs.
#[derive(Clone, Debug)]
pub struct Instance {
    pub architecture: Architecture,
    pub zones: usize,
    pub clusters_per_zone: usize,
    /// Vehicles per cluster; `None` uses the availability case's default.
    pub vns_per_cluster: Option<usize>,
    pub cc_servers: usize,
    pub rr_hops: usize,
    pub profiles: BTreeMap<DeviceKind, DeviceProfile>,
}

impl Instance {
    /// Single-zone reference shape: one zone of four clusters.
    pub fn one_zone() -> Instance {
        Instance {
            architecture: Architecture::OneZone,
            zones: 1,
            clusters_per_zone: 4,
            vns_per_cluster: None,
            cc_servers: 5,
            rr_hops: 1,
            profiles: default_profiles(),
        }
    }

    /// Multi-zone reference shape: four zones of one cluster.
    pub fn multi_zone() -> Instance {
        Instance {
            architecture: Architecture::MultiZone,
            zones: 4,
            clusters_per_zone: 1,
            vns_per_cluster: None,
            cc_servers: 5,
            rr_hops: 1,
            profiles: default_profiles(),
        }
    }

    /// Reference shape for an architecture.
    pub fn for_architecture(architecture: Architecture) -> Instance {
        match architecture {
            Architecture::OneZone => Instance::one_zone(),
            Architecture::MultiZone => Instance::multi_zone(),
        }
    }

    /// Builds the topology, sizing the fleet for the availability case
    /// unless the vehicle count is pinned.
    pub fn topology(&self, case: Case) -> Topology {
        let vns = self
            .vns_per_cluster
            .unwrap_or_else(|| case.default_vns_per_cluster());
        build_custom(
            self.architecture,
            self.zones,
            self.clusters_per_zone,
            vns,
            self.cc_servers,
            self.rr_hops,
            self.profiles.clone(),
        )
    }
}

/// Workload shape of a study point.
#[derive(Clone, Copy, Debug)]
pub struct Scenario {
    pub pattern: Pattern,
    pub case: Case,
    pub strategy: Strategy,
    /// Demand per task in MIPS.
    pub demand: f64,
    pub drr: f64,
}

/// One tabulated run. Watt fields are `None` when the run is infeasible.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub architecture: Architecture,
    pub pattern: Pattern,
    pub case: Case,
    pub strategy: Strategy,
    pub demand_mips: f64,
    pub drr: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub total_w: Option<f64>,
    pub tpc_cc_w: Option<f64>,
    pub tpc_mf_w: Option<f64>,
    pub tpc_lf_w: Option<f64>,
    pub tpc_nf_w: Option<f64>,
    pub tpc_vn_w: Option<f64>,
    pub tpc_net_w: Option<f64>,
    /// Per-node grants as `name=mips`, joined with `;` in device-id order.
    pub pn_alloc: String,
    /// Per-cluster vehicular grants as `z{zone}c{cluster}=mips`.
    pub vec_alloc: String,
    pub solve_time_s: f64,
}

/// Column order of the CSV schema.
pub const CSV_HEADER: &str = "architecture,pattern,case,strategy,demand_mips,drr,status,gap,\
total_w,tpc_cc_w,tpc_mf_w,tpc_lf_w,tpc_nf_w,tpc_vn_w,tpc_net_w,pn_alloc,vec_alloc,solve_time_s";

/// Solves one study point and re-checks the answer before recording it.
pub fn run_one(
    instance: &Instance,
    scenario: &Scenario,
    opts: &SolveOptions,
) -> Result<(RunRecord, Solution)> {
    let topo = instance.topology(scenario.case);
    let tasks = make_scenario(
        &topo,
        scenario.pattern,
        scenario.strategy,
        scenario.demand,
        scenario.drr,
    );
    let mask = available_nodes(&topo, scenario.case);
    let model = build_model(&topo, &tasks, &mask);
    let solution = solve(&model, opts)?;
    if solution.status != SolveStatus::Infeasible {
        let report = verify(&solution, &model)?;
        if !report.ok(VERIFY_TOL) {
            return Err(Error::Invariant(format!(
                "solution failed re-check with max residual {:e}",
                report.max_residual()
            )));
        }
    }

    let mut per_pn: BTreeMap<usize, f64> = BTreeMap::new();
    for entry in &solution.allocation {
        let id = topo
            .id_by_name(&entry.device)
            .expect("allocation names come from the topology");
        *per_pn.entry(id).or_insert(0.0) += entry.mips;
    }
    let pn_alloc = per_pn
        .iter()
        .map(|(&id, &mips)| format!("{}={}", topo.device(id).name, mips))
        .collect::<Vec<_>>()
        .join(";");
    let vec_alloc = solution
        .per_vec_mips
        .iter()
        .map(|(key, mips)| format!("{key}={mips}"))
        .collect::<Vec<_>>()
        .join(";");

    let solved = solution.status != SolveStatus::Infeasible;
    let b = &solution.breakdown;
    let record = RunRecord {
        architecture: topo.architecture,
        pattern: scenario.pattern,
        case: scenario.case,
        strategy: scenario.strategy,
        demand_mips: scenario.demand,
        drr: scenario.drr,
        status: solution.status,
        gap: solution.gap,
        total_w: solved.then_some(b.total),
        tpc_cc_w: solved.then_some(b.tpc_cc),
        tpc_mf_w: solved.then_some(b.tpc_mf),
        tpc_lf_w: solved.then_some(b.tpc_lf),
        tpc_nf_w: solved.then_some(b.tpc_nf),
        tpc_vn_w: solved.then_some(b.tpc_vn),
        tpc_net_w: solved.then_some(b.tpc_net()),
        pn_alloc,
        vec_alloc,
        solve_time_s: solution.solve_time,
    };
    Ok((record, solution))
}

/// Runs every scenario in order and collects the records.
pub fn run_sweep(
    instance: &Instance,
    scenarios: &[Scenario],
    opts: &SolveOptions,
) -> Result<Vec<RunRecord>> {
    let mut records = Vec::with_capacity(scenarios.len());
    for scenario in scenarios {
        let (record, _) = run_one(instance, scenario, opts)?;
        records.push(record);
    }
    Ok(records)
}

/// Power saved by `candidate` relative to `baseline`, as a percentage of
/// the baseline total. The records must describe the same workload.
pub fn savings(baseline: &RunRecord, candidate: &RunRecord) -> Result<f64> {
    if baseline.pattern != candidate.pattern
        || baseline.demand_mips.to_bits() != candidate.demand_mips.to_bits()
        || baseline.drr.to_bits() != candidate.drr.to_bits()
    {
        return Err(Error::MismatchedRecords(format!(
            "cannot compare {}/{}/{} against {}/{}/{}",
            baseline.pattern,
            baseline.demand_mips,
            baseline.drr,
            candidate.pattern,
            candidate.demand_mips,
            candidate.drr
        )));
    }
    match (baseline.total_w, candidate.total_w) {
        (Some(base), Some(cand)) => Ok(100.0 * (base - cand) / base),
        _ => Err(Error::MismatchedRecords(
            "infeasible records carry no power total".into(),
        )),
    }
}

fn csv_cell(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_default()
}

fn csv_row(r: &RunRecord, include_timing: bool) -> String {
    let solved = r.status != SolveStatus::Infeasible;
    let gap = if solved {
        format!("{}", r.gap)
    } else {
        String::new()
    };
    let timing = if include_timing {
        format!("{}", r.solve_time_s)
    } else {
        String::new()
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.architecture,
        r.pattern,
        r.case,
        r.strategy,
        r.demand_mips,
        r.drr,
        r.status,
        gap,
        csv_cell(r.total_w),
        csv_cell(r.tpc_cc_w),
        csv_cell(r.tpc_mf_w),
        csv_cell(r.tpc_lf_w),
        csv_cell(r.tpc_nf_w),
        csv_cell(r.tpc_vn_w),
        csv_cell(r.tpc_net_w),
        r.pn_alloc,
        r.vec_alloc,
        timing
    )
}

type WorkloadKey = (&'static str, &'static str, &'static str, u64, u64);

fn case_groups(records: &[RunRecord]) -> BTreeMap<WorkloadKey, BTreeMap<&'static str, &RunRecord>> {
    let mut groups: BTreeMap<WorkloadKey, BTreeMap<&'static str, &RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            r.architecture.label(),
            r.pattern.label(),
            r.strategy.label(),
            r.demand_mips.to_bits(),
            r.drr.to_bits(),
        );
        groups.entry(key).or_default().insert(r.case.label(), r);
    }
    groups
}

fn strategy_groups(
    records: &[RunRecord],
) -> BTreeMap<WorkloadKey, BTreeMap<&'static str, &RunRecord>> {
    let mut groups: BTreeMap<WorkloadKey, BTreeMap<&'static str, &RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            r.architecture.label(),
            r.pattern.label(),
            r.case.label(),
            r.demand_mips.to_bits(),
            r.drr.to_bits(),
        );
        groups.entry(key).or_default().insert(r.strategy.label(), r);
    }
    groups
}

struct SavingsStat {
    n: usize,
    min: f64,
    max: f64,
    sum: f64,
}

impl SavingsStat {
    fn new() -> SavingsStat {
        SavingsStat {
            n: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn push(&mut self, v: f64) {
        self.n += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.sum += v;
    }

    fn line(&self, title: &str) -> String {
        format!(
            "  {title}: n={} min {:.1}% mean {:.1}% max {:.1}%",
            self.n,
            self.min,
            self.sum / self.n as f64,
            self.max
        )
    }
}

/// Renders records to the fixed CSV schema plus a savings summary.
///
/// The summary pairs runs that share a workload and reports the
/// minimum/mean/maximum power saved for every availability-case pair and
/// for distributed against single placement.
pub fn report(records: &[RunRecord], include_timing: bool) -> Result<(String, String)> {
    if records.is_empty() {
        return Err(Error::MismatchedRecords("no records to report".into()));
    }
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in records {
        csv.push_str(&csv_row(r, include_timing));
        csv.push('\n');
    }

    let infeasible = records
        .iter()
        .filter(|r| r.status == SolveStatus::Infeasible)
        .count();
    let mut summary = format!("runs: {} ({} infeasible)\n", records.len(), infeasible);

    let case_pairs: [(Case, Case); 6] = [
        (Case::Cca, Case::Cfa),
        (Case::Cca, Case::CfvaL),
        (Case::Cca, Case::CfvaH),
        (Case::Cfa, Case::CfvaL),
        (Case::Cfa, Case::CfvaH),
        (Case::CfvaL, Case::CfvaH),
    ];
    let groups = case_groups(records);
    let mut case_lines = Vec::new();
    for (baseline, candidate) in case_pairs {
        let mut stat = SavingsStat::new();
        for by_case in groups.values() {
            if let (Some(b), Some(c)) = (
                by_case.get(baseline.label()),
                by_case.get(candidate.label()),
            ) {
                if b.total_w.is_some() && c.total_w.is_some() {
                    stat.push(savings(b, c)?);
                }
            }
        }
        if stat.n > 0 {
            case_lines.push(stat.line(&format!("{} vs {}", candidate.label(), baseline.label())));
        }
    }
    if !case_lines.is_empty() {
        summary.push_str("savings by availability case (candidate vs baseline):\n");
        for line in case_lines {
            summary.push_str(&line);
            summary.push('\n');
        }
    }

    let mut stat = SavingsStat::new();
    for by_strategy in strategy_groups(records).values() {
        if let (Some(sa), Some(da)) = (
            by_strategy.get(Strategy::Sa.label()),
            by_strategy.get(Strategy::Da.label()),
        ) {
            if sa.total_w.is_some() && da.total_w.is_some() {
                stat.push(savings(sa, da)?);
            }
        }
    }
    if stat.n > 0 {
        summary.push_str("savings by strategy:\n");
        summary.push_str(&stat.line("da vs sa"));
        summary.push('\n');
    }

    Ok((csv, summary))
}

/// Asserts the orderings the records must obey: wider availability never
/// costs more power, distributed placement never costs more than single
/// placement, and power grows with demand. Infeasible runs are skipped,
/// except that a run must not go infeasible when a strictly harder case
/// solved.
pub fn check_records(records: &[RunRecord]) -> Result<()> {
    let nested: [(Case, Case); 3] = [
        (Case::Cca, Case::Cfa),
        (Case::Cfa, Case::CfvaL),
        (Case::CfvaL, Case::CfvaH),
    ];
    for by_case in case_groups(records).values() {
        for (narrow, wide) in nested {
            let (Some(n), Some(w)) = (by_case.get(narrow.label()), by_case.get(wide.label()))
            else {
                continue;
            };
            match (n.total_w, w.total_w) {
                (Some(narrow_w), Some(wide_w)) => {
                    if wide_w > narrow_w + ORDER_TOL {
                        return Err(Error::Invariant(format!(
                            "{} used {wide_w} W but {} used {narrow_w} W",
                            wide.label(),
                            narrow.label()
                        )));
                    }
                }
                (Some(_), None) => {
                    return Err(Error::Invariant(format!(
                        "{} infeasible although {} solved",
                        wide.label(),
                        narrow.label()
                    )));
                }
                _ => {}
            }
        }
    }

    for by_strategy in strategy_groups(records).values() {
        let (Some(sa), Some(da)) = (
            by_strategy.get(Strategy::Sa.label()),
            by_strategy.get(Strategy::Da.label()),
        ) else {
            continue;
        };
        match (sa.total_w, da.total_w) {
            (Some(sa_w), Some(da_w)) => {
                if da_w > sa_w + ORDER_TOL {
                    return Err(Error::Invariant(format!(
                        "distributed placement used {da_w} W but single placement used {sa_w} W"
                    )));
                }
            }
            (Some(_), None) => {
                return Err(Error::Invariant(
                    "distributed placement infeasible although single placement solved".into(),
                ));
            }
            _ => {}
        }
    }

    type DemandKey = (&'static str, &'static str, &'static str, &'static str, u64);
    let mut demand_groups: BTreeMap<DemandKey, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        let key = (
            r.architecture.label(),
            r.pattern.label(),
            r.case.label(),
            r.strategy.label(),
            r.drr.to_bits(),
        );
        demand_groups.entry(key).or_default().push(r);
    }
    for group in demand_groups.values_mut() {
        group.sort_by(|a, b| a.demand_mips.total_cmp(&b.demand_mips));
        let mut last: Option<(f64, f64)> = None;
        for r in group.iter() {
            let Some(total) = r.total_w else { continue };
            if let Some((demand, watts)) = last {
                if r.demand_mips > demand && total + ORDER_TOL < watts {
                    return Err(Error::Invariant(format!(
                        "power fell from {watts} W to {total} W as demand rose from {demand} to {}",
                        r.demand_mips
                    )));
                }
            }
            last = Some((r.demand_mips, total));
        }
    }
    Ok(())
}
