//! MILP construction: variables, bounds, coefficients, rows, exports.

use std::collections::{BTreeMap, BTreeSet};

use vecplace::export::{export_lp, export_mps, parse_lp};
use vecplace::model::{build_model, MilpModel, Sense, VarKind, EPS_MIPS};
use vecplace::topology::{build_multi_zone, build_one_zone, DeviceKind, Topology};
use vecplace::workload::{available_nodes, make_scenario, Case, Pattern, Strategy};

fn rel_eq(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} != {b}");
}

fn one_zone_model(
    case: Case,
    pattern: Pattern,
    strategy: Strategy,
    demand: f64,
    drr: f64,
) -> (Topology, MilpModel) {
    let topo = build_one_zone(4, case.default_vns_per_cluster(), 5);
    let tasks = make_scenario(&topo, pattern, strategy, demand, drr);
    let mask = available_nodes(&topo, case);
    let model = build_model(&topo, &tasks, &mask);
    (topo, model)
}

#[test]
fn variable_census() {
    let shapes = [
        (Case::Cca, Pattern::OneTaskOneCluster, Strategy::Sa),
        (Case::Cfa, Pattern::OneTaskEachCluster, Strategy::Da),
        (Case::CfvaL, Pattern::FiveTasksOneCluster, Strategy::Da),
        (Case::CfvaH, Pattern::FiveTasksEachCluster, Strategy::Sa),
    ];
    for (case, pattern, strategy) in shapes {
        let (topo, model) = one_zone_model(case, pattern, strategy, 1000.0, 0.001);
        let s = model.tasks.len();
        let pn = model.available.len();
        let traffic = topo.traffic_devices().len();
        assert_eq!(model.x_idx.len(), s * pn);
        assert_eq!(model.y_idx.len(), s * pn);
        assert_eq!(model.z_idx.len(), pn);
        assert_eq!(model.psi_idx.len(), traffic);
        assert_eq!(model.vars.len(), 2 * s * pn + pn + traffic);
        let continuous = model
            .vars
            .iter()
            .filter(|v| v.kind == VarKind::Continuous)
            .count();
        assert_eq!(continuous, s * pn);
        for &j in model.x_idx.values() {
            assert_eq!(model.vars[j].kind, VarKind::Continuous);
        }
        for &j in model
            .y_idx
            .values()
            .chain(model.z_idx.values())
            .chain(model.psi_idx.values())
        {
            assert_eq!(model.vars[j].kind, VarKind::Binary);
        }
    }
}

#[test]
fn cloud_only_single_task() {
    let (topo, model) = one_zone_model(
        Case::Cca,
        Pattern::OneTaskOneCluster,
        Strategy::Sa,
        2000.0,
        0.001,
    );
    assert_eq!(model.available, topo.cc_ids());
    assert_eq!(model.x_idx.len(), 5);
    let demand_rows: Vec<_> = model
        .constraints
        .iter()
        .filter(|c| c.label == "C24")
        .collect();
    assert_eq!(demand_rows.len(), 1);
    assert_eq!(demand_rows[0].sense, Sense::Eq);
    assert_eq!(demand_rows[0].rhs, 2000.0);
    assert_eq!(demand_rows[0].coeffs.len(), 5);
    assert!(demand_rows[0].coeffs.iter().all(|&(_, c)| c == 1.0));
}

#[test]
fn activation_objective_coefficients() {
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let z_coef = |id: usize| model.vars[model.z_idx[&id]].obj;
    rel_eq(z_coef(topo.cc_ids()[0]), 75.9);
    rel_eq(z_coef(topo.mf()), 71.4);
    rel_eq(z_coef(topo.lf()), 76.5);
    rel_eq(z_coef(topo.nf(1)), 9.0);
    assert_eq!(z_coef(topo.vn_ids()[0]), 0.0);

    let psi_coef = |id: usize| model.vars[model.psi_idx[&id]].obj;
    let expected: [(usize, f64); 13] = [
        (topo.ap(1, 1), 4.8),
        (topo.onu(1), 13.5),
        (topo.olt(), 4.05),
        (topo.ms(), 40.5),
        (topo.mr(), 2.025),
        (topo.rr_ids()[0], 51.678),
        (topo.cr(), 1.485),
        (topo.cs(), 27.324),
        (topo.mfr(), 0.9828),
        (topo.mfs(), 18.522),
        (topo.lfr(), 1.053),
        (topo.lfs(), 19.845),
        (topo.vw_of(topo.vn_ids()[0]), 1.5),
    ];
    for (id, coef) in expected {
        rel_eq(psi_coef(id), coef);
    }
}

#[test]
fn allocation_objective_coefficients() {
    // Watts per MIPS along each route at drr 0.001: terminal marginal plus
    // the flow-induced transport margin of the path prefix.
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let x_coef = |pn: usize| model.vars[model.x_idx[&(0, pn)]].obj;
    let local_vn = topo.find(DeviceKind::Vn, 1, 1, 0).unwrap();
    let other_vn = topo.find(DeviceKind::Vn, 1, 2, 0).unwrap();
    rel_eq(x_coef(local_vn), 0.0012691631832930995);
    rel_eq(x_coef(other_vn), 0.0012746259510737336);
    rel_eq(x_coef(topo.nf(1)), 0.0010054627677806341);
    rel_eq(x_coef(topo.lf()), 0.0009431991740306341);
    rel_eq(x_coef(topo.mf()), 0.0005466344316063916);
    rel_eq(x_coef(topo.cc_ids()[4]), 0.000359536562919523);

    let multi = build_multi_zone(4, 1, 2, 5);
    let tasks = make_scenario(
        &multi,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let mask = available_nodes(&multi, Case::CfvaL);
    let model = build_model(&multi, &tasks, &mask);
    let far_vn = multi.find(DeviceKind::Vn, 2, 1, 0).unwrap();
    rel_eq(
        model.vars[model.x_idx[&(0, far_vn)]].obj,
        0.0012747798573237337,
    );
    rel_eq(
        model.vars[model.x_idx[&(0, multi.nf(2))]].obj,
        0.001005616674030634,
    );

    // Assignment indicators are free: activation cost lives on z and psi.
    for &j in model.y_idx.values() {
        assert_eq!(model.vars[j].obj, 0.0);
    }
}

#[test]
fn big_m_values() {
    let (_, model) = one_zone_model(
        Case::Cfa,
        Pattern::FiveTasksOneCluster,
        Strategy::Da,
        1500.0,
        0.04,
    );
    assert_eq!(model.m1, vec![1500.0; 5]);
    assert_eq!(model.m2, 5.0);
    rel_eq(model.m3, 5.0 * 1500.0 * 0.04);
}

#[test]
fn x_bounds_respect_demand_capacity_and_hops() {
    // Demand binds.
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let vn = topo.vn_ids()[0];
    assert_eq!(model.vars[model.x_idx[&(0, topo.nf(1))]].ub, 2000.0);
    assert_eq!(model.vars[model.x_idx[&(0, vn)]].ub, 2000.0);
    // Node capacity binds.
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        5000.0,
        0.001,
    );
    let vn = topo.vn_ids()[0];
    assert_eq!(model.vars[model.x_idx[&(0, vn)]].ub, 3200.0);
    // The wireless hop binds once the launch rate is high enough.
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.08,
    );
    let vn = topo.vn_ids()[0];
    assert_eq!(model.vars[model.x_idx[&(0, vn)]].ub, 902.5);
    // Lower bounds are zero; binaries live in [0, 1].
    for v in &model.vars {
        match v.kind {
            VarKind::Continuous => assert_eq!(v.lb, 0.0),
            VarKind::Binary => {
                assert!(v.lb == 0.0 || v.lb == 1.0);
                assert_eq!(v.ub, 1.0);
            }
        }
    }
}

#[test]
fn source_access_points_forced_active() {
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskEachCluster,
        Strategy::Da,
        1000.0,
        0.001,
    );
    for (_, cluster) in topo.clusters() {
        let ap = topo.ap(1, cluster);
        assert_eq!(model.vars[model.psi_idx[&ap]].lb, 1.0);
    }
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        1000.0,
        0.001,
    );
    assert_eq!(model.vars[model.psi_idx[&topo.ap(1, 1)]].lb, 1.0);
    assert_eq!(model.vars[model.psi_idx[&topo.ap(1, 2)]].lb, 0.0);
}

#[test]
fn row_families_present() {
    let (_, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Sa,
        2000.0,
        0.001,
    );
    let labels: BTreeSet<&str> = model.constraints.iter().map(|c| c.label).collect();
    for label in [
        "C24", "C25", "C26", "C27", "C28", "C30", "C31", "C33", "C34", "C35", "C36", "S-PAIR",
        "S-VWTIE", "S-CHAIN",
    ] {
        assert!(labels.contains(label), "missing {label}");
    }
    let identity_labels: BTreeSet<&str> = model.identities.iter().map(|i| i.label).collect();
    assert_eq!(identity_labels, BTreeSet::from(["C23", "C29", "C32"]));

    // With vehicles available every task reaches every traffic device, so
    // no per-device flow bound can beat the global one.
    assert!(!labels.contains("S-DEVM"));
    let (_, fog) = one_zone_model(
        Case::Cfa,
        Pattern::OneTaskEachCluster,
        Strategy::Da,
        1000.0,
        0.001,
    );
    assert!(fog.constraints.iter().any(|c| c.label == "S-DEVM"));

    // Distributed placement drops the split cap and nothing else.
    let (_, da) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let da_labels: BTreeSet<&str> = da.constraints.iter().map(|c| c.label).collect();
    assert!(!da_labels.contains("C36"));
    let mut expect = labels.clone();
    expect.remove("C36");
    assert_eq!(da_labels, expect);
}

#[test]
fn row_counts_match_shape() {
    let (topo, model) = one_zone_model(
        Case::Cfa,
        Pattern::FiveTasksOneCluster,
        Strategy::Sa,
        2000.0,
        0.001,
    );
    let s = model.tasks.len();
    let pn = model.available.len();
    let count = |label: &str| {
        model
            .constraints
            .iter()
            .filter(|c| c.label == label)
            .count()
    };
    assert_eq!(count("C24"), s);
    assert_eq!(count("C25"), s * pn);
    assert_eq!(count("C26"), s * pn);
    assert_eq!(count("C27"), pn);
    assert_eq!(count("C28"), pn);
    let traffic = topo.traffic_devices().len();
    assert_eq!(count("C30"), traffic);
    assert_eq!(count("C31"), traffic);
    assert_eq!(count("C33"), pn);
    assert_eq!(count("C35"), topo.clusters().len());
    assert_eq!(count("C36"), s);
    assert_eq!(count("S-PAIR"), s * pn);
    // One chain row between consecutive same-pool devices: cloud servers.
    assert_eq!(count("S-CHAIN"), topo.cc_servers - 1);
    assert_eq!(
        model.identities.iter().filter(|i| i.label == "C23").count(),
        s * pn
    );
    assert_eq!(
        model.identities.iter().filter(|i| i.label == "C29").count(),
        traffic
    );
    assert_eq!(
        model.identities.iter().filter(|i| i.label == "C32").count(),
        s * pn
    );
}

#[test]
fn coupling_row_shapes() {
    let (topo, model) = one_zone_model(
        Case::Cfa,
        Pattern::OneTaskOneCluster,
        Strategy::Sa,
        2000.0,
        0.001,
    );
    let nf = topo.nf(1);
    let nf_name = &topo.device(nf).name;
    let xj = model.x_idx[&(0, nf)];
    let yj = model.y_idx[&(0, nf)];
    let zj = model.z_idx[&nf];

    let row = |name: String| model.constraints.iter().find(|c| c.name == name).unwrap();
    let c25 = row(format!("C25_t0_{nf_name}"));
    assert_eq!(c25.sense, Sense::Ge);
    assert_eq!(c25.rhs, 0.0);
    assert_eq!(c25.coeffs, vec![(xj, 1.0), (yj, -EPS_MIPS)]);

    let c26 = row(format!("C26_t0_{nf_name}"));
    assert_eq!(c26.sense, Sense::Le);
    assert_eq!(c26.coeffs, vec![(xj, 1.0), (yj, -2000.0)]);

    let c27 = row(format!("C27_{nf_name}"));
    assert_eq!(c27.sense, Sense::Ge);
    assert_eq!(c27.coeffs, vec![(yj, 1.0), (zj, -1.0)]);

    let c33 = row(format!("C33_{nf_name}"));
    assert_eq!(c33.sense, Sense::Le);
    assert_eq!(c33.coeffs, vec![(xj, 1.0), (zj, -6000.0)]);

    let c36 = row("C36_t0".to_string());
    assert_eq!(c36.sense, Sense::Le);
    assert_eq!(c36.rhs, 1.0);
    assert_eq!(c36.coeffs.len(), model.available.len());
}

#[test]
fn traffic_rows_use_flow_big_m() {
    let (topo, model) = one_zone_model(
        Case::Cfa,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.04,
    );
    let onu = topo.onu(1);
    let psi = model.psi_idx[&onu];
    let c31 = model
        .constraints
        .iter()
        .find(|c| c.name == format!("C31_{}", topo.device(onu).name))
        .unwrap();
    assert_eq!(c31.sense, Sense::Le);
    let psi_coef = c31.coeffs.iter().find(|&&(j, _)| j == psi).unwrap().1;
    rel_eq(-psi_coef, model.m3);
    // Lambda terms carry the task's launch rate on every x routed through
    // the device.
    let lambda = model.lambda_coeffs(onu);
    assert!(!lambda.is_empty());
    for &(xj, c) in &lambda {
        assert!(model.x_idx.values().any(|&v| v == xj));
        rel_eq(c, 0.04);
    }
}

#[test]
fn access_rows_cover_wireless_clusters() {
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let c35: Vec<_> = model
        .constraints
        .iter()
        .filter(|c| c.label == "C35")
        .collect();
    assert_eq!(c35.len(), topo.clusters().len());
    for row in &c35 {
        assert_eq!(row.sense, Sense::Le);
        assert_eq!(row.rhs, 1167.0);
        // Low launch rates leave the access rows slack by construction.
        assert!(row.redundant);
    }
    // Every term is a vehicle-bound allocation into that row's cluster.
    let ap1 = topo.ap(1, 1);
    let ap1_name = &topo.device(ap1).name;
    let row = c35
        .iter()
        .find(|c| c.name == format!("C35_{ap1_name}"))
        .unwrap();
    let vns: BTreeSet<usize> = topo
        .vn_ids()
        .into_iter()
        .filter(|&vn| topo.device(vn).cluster == 1)
        .collect();
    let by_x: BTreeMap<usize, (usize, usize)> = model
        .x_idx
        .iter()
        .map(|(&(t, pn), &j)| (j, (t, pn)))
        .collect();
    assert_eq!(row.coeffs.len(), vns.len());
    for &(xj, c) in &row.coeffs {
        let (_, pn) = by_x[&xj];
        assert!(vns.contains(&pn));
        rel_eq(c, 0.001);
    }
}

#[test]
fn chain_rows_order_interchangeable_pools() {
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let chains: Vec<_> = model
        .constraints
        .iter()
        .filter(|c| c.label == "S-CHAIN")
        .collect();
    // Four cloud servers pair up, plus one pair per two-vehicle cluster.
    assert_eq!(chains.len(), (topo.cc_servers - 1) + topo.clusters().len());
    for row in &chains {
        assert_eq!(row.sense, Sense::Le);
        assert_eq!(row.rhs, 0.0);
        let [(a, ca), (b, cb)] = row.coeffs[..] else {
            panic!("chain rows couple two activations");
        };
        assert_eq!((ca, cb), (1.0, -1.0));
        // Earlier device may be active only if the later one is.
        let (da, db) = (a, b);
        assert!(da < db);
        let find = |j: usize| model.z_idx.iter().find(|(_, &v)| v == j).map(|(&pn, _)| pn);
        let (pa, pb) = (find(da).unwrap(), find(db).unwrap());
        assert!(pa < pb);
        assert_eq!(topo.device(pa).kind, topo.device(pb).kind);
    }
}

#[test]
fn vehicle_adapter_ties() {
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    let ties: Vec<_> = model
        .constraints
        .iter()
        .filter(|c| c.label == "S-VWTIE")
        .collect();
    assert_eq!(ties.len(), topo.vn_ids().len());
    for row in &ties {
        assert_eq!(row.sense, Sense::Eq);
        assert_eq!(row.rhs, 0.0);
    }
    let vn = topo.vn_ids()[0];
    let vw = topo.vw_of(vn);
    let row = ties
        .iter()
        .find(|c| c.coeffs.iter().any(|&(j, _)| j == model.psi_idx[&vw]))
        .unwrap();
    let mut pair: Vec<usize> = row.coeffs.iter().map(|&(j, _)| j).collect();
    pair.sort();
    let mut expect = vec![model.psi_idx[&vw], model.z_idx[&vn]];
    expect.sort();
    assert_eq!(pair, expect);
}

#[test]
fn redundant_rows_marked_by_bounds() {
    // At a negligible launch rate every hop row is slack by construction.
    let (_, model) = one_zone_model(
        Case::Cfa,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    assert!(model
        .constraints
        .iter()
        .filter(|c| c.label == "C34")
        .all(|c| c.redundant));
    // At drr 0.8 with full demand the trunk hops come into play.
    let (_, model) = one_zone_model(
        Case::Cfa,
        Pattern::FiveTasksEachCluster,
        Strategy::Da,
        10_000.0,
        0.8,
    );
    assert!(model
        .constraints
        .iter()
        .any(|c| c.label == "C34" && !c.redundant));
    // Redundant rows really are implied by the variable bounds.
    for c in model.constraints.iter().filter(|c| c.redundant) {
        let worst: f64 = c
            .coeffs
            .iter()
            .map(|&(j, coef)| {
                let v = &model.vars[j];
                if coef > 0.0 {
                    coef * v.ub
                } else {
                    coef * v.lb
                }
            })
            .sum();
        match c.sense {
            Sense::Le => assert!(worst <= c.rhs + 1e-9),
            Sense::Ge | Sense::Eq => panic!("only upper-bound rows can be slack by bounds"),
        }
    }
}

#[test]
fn identities_mirror_routes() {
    let (topo, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Da,
        2000.0,
        0.001,
    );
    for ident in model.identities.iter().filter(|i| i.label == "C23") {
        let (&(tid, pn), &xj) = model
            .x_idx
            .iter()
            .find(|(_, &j)| j == ident.coeffs[0].0)
            .unwrap();
        let path = &model.paths[&(tid, pn)];
        assert_eq!(ident.devices[..], path[..path.len() - 1]);
        assert_eq!(ident.coeffs, vec![(xj, model.tasks[tid].drr)]);
    }
    for ident in model.identities.iter().filter(|i| i.label == "C29") {
        assert_eq!(ident.devices.len(), 1);
        assert_eq!(ident.coeffs, model.lambda_coeffs(ident.devices[0]));
    }
    let c32 = model.identities.iter().filter(|i| i.label == "C32").count();
    assert_eq!(c32, model.x_idx.len());
    // Paths terminate at their processor and start at the source AP.
    for (&(tid, pn), path) in &model.paths {
        assert_eq!(*path.last().unwrap(), pn);
        let task = &model.tasks[tid];
        assert_eq!(path[0], topo.ap(task.source_zone, task.source_cluster));
    }
}

#[test]
fn lp_export_round_trips() {
    let (_, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskOneCluster,
        Strategy::Sa,
        2000.0,
        0.02,
    );
    let doc = export_lp(&model);
    let parsed = parse_lp(&doc).unwrap();
    assert_eq!(parsed.vars.len(), model.vars.len());
    for v in &model.vars {
        let p = parsed
            .var(&v.name)
            .unwrap_or_else(|| panic!("missing {}", v.name));
        assert_eq!(p.obj, v.obj, "{}", v.name);
        assert_eq!(p.lb, v.lb, "{}", v.name);
        assert_eq!(p.ub, v.ub, "{}", v.name);
        assert_eq!(p.binary, v.kind == VarKind::Binary, "{}", v.name);
    }
    assert_eq!(parsed.rows.len(), model.constraints.len());
    for c in &model.constraints {
        let p = parsed
            .row(&c.name)
            .unwrap_or_else(|| panic!("missing {}", c.name));
        assert_eq!(p.sense, c.sense, "{}", c.name);
        assert_eq!(p.rhs, c.rhs, "{}", c.name);
        let expect: Vec<(String, f64)> = c
            .coeffs
            .iter()
            .map(|&(j, coef)| (model.vars[j].name.clone(), coef))
            .collect();
        assert_eq!(p.coeffs, expect, "{}", c.name);
    }
}

#[test]
fn mps_names_fit_and_map_back() {
    let (_, model) = one_zone_model(
        Case::CfvaL,
        Pattern::OneTaskEachCluster,
        Strategy::Da,
        1000.0,
        0.001,
    );
    let (doc, names) = export_mps(&model);
    assert!(doc.starts_with("NAME"));
    assert!(doc.ends_with("ENDATA\n"));
    for line in doc.lines() {
        for tok in line.split_whitespace() {
            if tok.starts_with('R') || tok.starts_with('V') {
                assert!(tok.len() <= 8, "{tok}");
            }
        }
    }
    // The mangling table names every variable and row exactly once.
    let mut seen = BTreeSet::new();
    for line in names.lines().filter(|l| !l.is_empty()) {
        let (short, long) = line.split_once(' ').unwrap();
        assert!(short.len() <= 8);
        assert!(seen.insert(short.to_string()), "duplicate {short}");
        assert!(!long.is_empty());
        assert!(doc.contains(short), "{short} absent from document");
    }
    assert_eq!(seen.len(), model.vars.len() + model.constraints.len());
}
