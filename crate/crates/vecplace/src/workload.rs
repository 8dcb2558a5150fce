//! Workload definition: processing tasks, availability cases, placement
//! strategies, and the scenario generator for the benchmark sweeps.

use serde::{Deserialize, Serialize};

use crate::topology::{DeviceKind, Topology};

/// One processing task emitted by a source node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: usize,
    pub source_zone: usize,
    pub source_cluster: usize,
    /// Demand in MIPS.
    pub omega: f64,
    /// Data rate ratio: Mb/s of traffic per MIPS allocated remotely.
    pub drr: f64,
    /// Task traffic at full demand, in Mb/s.
    pub flow: f64,
    /// Maximum number of processing nodes the task may be split across;
    /// `None` leaves splitting unconstrained.
    pub split_limit: Option<usize>,
}

impl Task {
    pub fn new(
        id: usize,
        source_zone: usize,
        source_cluster: usize,
        omega: f64,
        drr: f64,
        split_limit: Option<usize>,
    ) -> Task {
        Task {
            id,
            source_zone,
            source_cluster,
            omega,
            drr,
            flow: drr * omega,
            split_limit,
        }
    }
}

/// Processing capacity of a server in MIPS given its core count, clock in
/// GHz, and instructions per cycle.
pub fn mips_capacity(cores: u32, ghz: f64, ipc: f64) -> f64 {
    cores as f64 * ghz * 1000.0 * ipc
}

/// Node-availability cases: which processing tiers may host work.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Case {
    /// Central cloud only.
    Cca,
    /// Cloud plus metro, OLT, and ONU fog.
    Cfa,
    /// Cloud, fog, and a low-density VEC (few vehicles per cluster).
    CfvaL,
    /// Cloud, fog, and a high-density VEC.
    CfvaH,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Cca, Case::Cfa, Case::CfvaL, Case::CfvaH];

    pub fn label(self) -> &'static str {
        match self {
            Case::Cca => "cca",
            Case::Cfa => "cfa",
            Case::CfvaL => "cfva-l",
            Case::CfvaH => "cfva-h",
        }
    }

    pub fn from_label(s: &str) -> Option<Case> {
        Case::ALL.iter().copied().find(|c| c.label() == s)
    }

    /// Default vehicles per cluster implied by the case, if it pins one.
    pub fn default_vns_per_cluster(self) -> usize {
        match self {
            Case::Cca | Case::Cfa | Case::CfvaL => 2,
            Case::CfvaH => 15,
        }
    }

    pub fn allows(self, kind: DeviceKind) -> bool {
        match self {
            Case::Cca => kind == DeviceKind::Cc,
            Case::Cfa => matches!(
                kind,
                DeviceKind::Cc | DeviceKind::Mf | DeviceKind::Lf | DeviceKind::Nf
            ),
            Case::CfvaL | Case::CfvaH => kind.is_processing(),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Placement strategies: single allocation pins each task to one node,
/// distributed allocation may split tasks freely.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Sa,
    Da,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Sa, Strategy::Da];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Sa => "sa",
            Strategy::Da => "da",
        }
    }

    pub fn from_label(s: &str) -> Option<Strategy> {
        Strategy::ALL.iter().copied().find(|v| v.label() == s)
    }

    pub fn split_limit(self) -> Option<usize> {
        match self {
            Strategy::Sa => Some(1),
            Strategy::Da => None,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Demand patterns of the scenario studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    /// One task from one cluster.
    OneTaskOneCluster,
    /// One task from every cluster.
    OneTaskEachCluster,
    /// Five equal tasks from one cluster.
    FiveTasksOneCluster,
    /// Five equal tasks from every cluster.
    FiveTasksEachCluster,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [
        Pattern::OneTaskOneCluster,
        Pattern::OneTaskEachCluster,
        Pattern::FiveTasksOneCluster,
        Pattern::FiveTasksEachCluster,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Pattern::OneTaskOneCluster => "one-task-one-cluster",
            Pattern::OneTaskEachCluster => "one-task-each-cluster",
            Pattern::FiveTasksOneCluster => "five-tasks-one-cluster",
            Pattern::FiveTasksEachCluster => "five-tasks-each-cluster",
        }
    }

    pub fn from_label(s: &str) -> Option<Pattern> {
        Pattern::ALL.iter().copied().find(|p| p.label() == s)
    }

    pub fn tasks_per_cluster(self) -> usize {
        match self {
            Pattern::OneTaskOneCluster | Pattern::OneTaskEachCluster => 1,
            Pattern::FiveTasksOneCluster | Pattern::FiveTasksEachCluster => 5,
        }
    }

    pub fn all_clusters(self) -> bool {
        matches!(
            self,
            Pattern::OneTaskEachCluster | Pattern::FiveTasksEachCluster
        )
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Processing-node ids permitted by an availability case.
pub fn available_nodes(topo: &Topology, case: Case) -> Vec<usize> {
    topo.processing_nodes()
        .into_iter()
        .filter(|&id| case.allows(topo.device(id).kind))
        .collect()
}

/// Tasks of one scenario: `tasks_per_cluster` equal tasks of `omega` MIPS
/// each from either the default source cluster (zone 1, cluster 1) or every
/// cluster, with ids in source order.
pub fn make_scenario(
    topo: &Topology,
    pattern: Pattern,
    strategy: Strategy,
    omega: f64,
    drr: f64,
) -> Vec<Task> {
    let sources: Vec<(usize, usize)> = if pattern.all_clusters() {
        topo.clusters()
    } else {
        vec![(1, 1)]
    };
    let mut tasks = Vec::new();
    for (zone, cluster) in sources {
        for _ in 0..pattern.tasks_per_cluster() {
            let id = tasks.len();
            tasks.push(Task::new(
                id,
                zone,
                cluster,
                omega,
                drr,
                strategy.split_limit(),
            ));
        }
    }
    tasks
}

/// Per-task demand sweep for the high range: 1000 to 10000 MIPS in steps
/// of 1000.
pub fn high_demand_sweep() -> Vec<f64> {
    (1..=10).map(|i| (i * 1000) as f64).collect()
}

/// Per-task demand sweep for the low range: 100 to 1000 MIPS in steps of
/// 100.
pub fn low_demand_sweep() -> Vec<f64> {
    (1..=10).map(|i| (i * 100) as f64).collect()
}

/// Data-rate-ratio study points.
pub fn drr_set() -> Vec<f64> {
    vec![0.001, 0.02, 0.04, 0.08, 0.1, 0.2, 0.4, 0.8]
}
