//! Workload construction: cases, strategies, patterns, sweeps.

use vecplace::topology::{build_multi_zone, build_one_zone, DeviceKind};
use vecplace::workload::{
    available_nodes, drr_set, high_demand_sweep, low_demand_sweep, make_scenario, mips_capacity,
    Case, Pattern, Strategy, Task,
};

#[test]
fn labels_round_trip() {
    for case in Case::ALL {
        assert_eq!(Case::from_label(case.label()), Some(case));
    }
    for strategy in Strategy::ALL {
        assert_eq!(Strategy::from_label(strategy.label()), Some(strategy));
    }
    for pattern in Pattern::ALL {
        assert_eq!(Pattern::from_label(pattern.label()), Some(pattern));
    }
    assert_eq!(Case::from_label("cfva-l"), Some(Case::CfvaL));
    assert_eq!(Case::from_label("CFA"), None);
}

#[test]
fn task_flow_is_drr_times_demand() {
    let t = Task::new(3, 2, 1, 2500.0, 0.04, Some(1));
    assert_eq!(t.flow, 100.0);
    assert_eq!(t.split_limit, Some(1));
}

#[test]
fn mips_capacity_formula() {
    // A 4-core 0.8 GHz single-issue vehicle computer.
    assert_eq!(mips_capacity(4, 0.8, 1.0), 3200.0);
    // An 8-core 2.5 GHz dual-issue edge server.
    assert_eq!(mips_capacity(8, 2.5, 2.0), 40_000.0);
}

#[test]
fn case_masks() {
    let topo = build_one_zone(4, 2, 5);
    let kinds_of = |case: Case| -> Vec<DeviceKind> {
        let mut kinds: Vec<DeviceKind> = available_nodes(&topo, case)
            .into_iter()
            .map(|id| topo.device(id).kind)
            .collect();
        kinds.dedup();
        kinds
    };
    assert_eq!(kinds_of(Case::Cca), vec![DeviceKind::Cc]);
    assert_eq!(
        kinds_of(Case::Cfa),
        vec![
            DeviceKind::Cc,
            DeviceKind::Mf,
            DeviceKind::Lf,
            DeviceKind::Nf
        ]
    );
    assert_eq!(
        kinds_of(Case::CfvaL),
        vec![
            DeviceKind::Cc,
            DeviceKind::Mf,
            DeviceKind::Lf,
            DeviceKind::Nf,
            DeviceKind::Vn
        ]
    );
    assert_eq!(available_nodes(&topo, Case::Cca).len(), 5);
    assert_eq!(available_nodes(&topo, Case::Cfa).len(), 8);
    assert_eq!(available_nodes(&topo, Case::CfvaL).len(), 16);
}

#[test]
fn vns_per_cluster_defaults() {
    assert_eq!(Case::Cca.default_vns_per_cluster(), 2);
    assert_eq!(Case::Cfa.default_vns_per_cluster(), 2);
    assert_eq!(Case::CfvaL.default_vns_per_cluster(), 2);
    assert_eq!(Case::CfvaH.default_vns_per_cluster(), 15);
}

#[test]
fn strategies_fix_split_limits() {
    assert_eq!(Strategy::Sa.split_limit(), Some(1));
    assert_eq!(Strategy::Da.split_limit(), None);
}

#[test]
fn scenario_generation() {
    let one = build_one_zone(4, 2, 5);
    let tasks = make_scenario(
        &one,
        Pattern::OneTaskOneCluster,
        Strategy::Sa,
        2000.0,
        0.001,
    );
    assert_eq!(tasks.len(), 1);
    assert_eq!((tasks[0].source_zone, tasks[0].source_cluster), (1, 1));
    assert_eq!(tasks[0].omega, 2000.0);
    assert_eq!(tasks[0].split_limit, Some(1));

    let tasks = make_scenario(
        &one,
        Pattern::OneTaskEachCluster,
        Strategy::Da,
        1000.0,
        0.02,
    );
    assert_eq!(tasks.len(), 4);
    let sources: Vec<(usize, usize)> = tasks
        .iter()
        .map(|t| (t.source_zone, t.source_cluster))
        .collect();
    assert_eq!(sources, vec![(1, 1), (1, 2), (1, 3), (1, 4)]);
    assert!(tasks.iter().all(|t| t.split_limit.is_none()));

    let tasks = make_scenario(&one, Pattern::FiveTasksOneCluster, Strategy::Sa, 500.0, 0.1);
    assert_eq!(tasks.len(), 5);
    assert!(tasks
        .iter()
        .all(|t| (t.source_zone, t.source_cluster) == (1, 1)));

    let multi = build_multi_zone(4, 1, 2, 5);
    let tasks = make_scenario(
        &multi,
        Pattern::FiveTasksEachCluster,
        Strategy::Da,
        100.0,
        0.8,
    );
    assert_eq!(tasks.len(), 20);
    let ids: Vec<usize> = tasks.iter().map(|t| t.id).collect();
    assert_eq!(ids, (0..20).collect::<Vec<_>>());
}

#[test]
fn sweep_grids() {
    assert_eq!(high_demand_sweep().len(), 10);
    assert_eq!(high_demand_sweep()[0], 1000.0);
    assert_eq!(high_demand_sweep()[9], 10_000.0);
    assert_eq!(low_demand_sweep().len(), 10);
    assert_eq!(low_demand_sweep()[0], 100.0);
    assert_eq!(low_demand_sweep()[9], 1000.0);
    assert_eq!(drr_set(), vec![0.001, 0.02, 0.04, 0.08, 0.1, 0.2, 0.4, 0.8]);
}
