//! Bounded-variable simplex on small hand-checked programs plus a large
//! relaxation regression.

use vecplace::model::{build_model, Sense};
use vecplace::simplex::{solve_lp, LpOutcome, LpProblem, LpRow};
use vecplace::solver::lp_relaxation;
use vecplace::topology::build_multi_zone;
use vecplace::workload::{available_nodes, make_scenario, Case, Pattern, Strategy};

fn optimal(outcome: LpOutcome) -> (f64, Vec<f64>) {
    match outcome {
        LpOutcome::Optimal { objective, values } => (objective, values),
        other => panic!("expected optimal, got {other:?}"),
    }
}

fn row(coeffs: &[(usize, f64)], sense: Sense, rhs: f64) -> LpRow {
    LpRow {
        coeffs: coeffs.to_vec(),
        sense,
        rhs,
    }
}

fn near(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()), "{a} != {b}");
}

#[test]
fn two_variable_vertex() {
    // min -x - 2y s.t. x + y <= 4, x <= 3, y <= 3 has its optimum at (1, 3).
    let p = LpProblem {
        ncols: 2,
        lb: vec![0.0, 0.0],
        ub: vec![3.0, 3.0],
        obj: vec![-1.0, -2.0],
        rows: vec![row(&[(0, 1.0), (1, 1.0)], Sense::Le, 4.0)],
    };
    let (obj, v) = optimal(solve_lp(&p));
    near(obj, -7.0);
    near(v[0], 1.0);
    near(v[1], 3.0);
}

#[test]
fn equality_rows_pin_the_point() {
    // min x + y + z with x + y + z = 6 and y - z = 1, x <= 1.
    let p = LpProblem {
        ncols: 3,
        lb: vec![0.0, 0.0, 0.0],
        ub: vec![1.0, f64::INFINITY, f64::INFINITY],
        obj: vec![1.0, 1.0, 1.0],
        rows: vec![
            row(&[(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Eq, 6.0),
            row(&[(1, 1.0), (2, -1.0)], Sense::Eq, 1.0),
        ],
    };
    let (obj, v) = optimal(solve_lp(&p));
    near(obj, 6.0);
    near(v[0] + v[1] + v[2], 6.0);
    near(v[1] - v[2], 1.0);
}

#[test]
fn ge_rows_force_activity() {
    // min 2x + 3y s.t. x + y >= 5, x <= 3 gives (3, 2).
    let p = LpProblem {
        ncols: 2,
        lb: vec![0.0, 0.0],
        ub: vec![3.0, f64::INFINITY],
        obj: vec![2.0, 3.0],
        rows: vec![row(&[(0, 1.0), (1, 1.0)], Sense::Ge, 5.0)],
    };
    let (obj, v) = optimal(solve_lp(&p));
    near(obj, 2.0 * 3.0 + 3.0 * 2.0);
    near(v[0], 3.0);
    near(v[1], 2.0);
}

#[test]
fn bound_flip_without_pivot() {
    // Unconstrained rows: each variable runs to the bound its cost prefers.
    let p = LpProblem {
        ncols: 3,
        lb: vec![-1.0, -2.0, 0.5],
        ub: vec![2.0, 3.0, 4.0],
        obj: vec![1.0, -1.0, -2.0],
        rows: vec![row(&[(0, 1.0), (1, 1.0), (2, 1.0)], Sense::Le, 100.0)],
    };
    let (obj, v) = optimal(solve_lp(&p));
    assert_eq!(v, vec![-1.0, 3.0, 4.0]);
    near(obj, -1.0 - 3.0 - 8.0);
}

#[test]
fn negative_lower_bounds() {
    // min x + y with x + y >= -3, both in [-5, 5]: any point on the face
    // works; the objective is what matters.
    let p = LpProblem {
        ncols: 2,
        lb: vec![-5.0, -5.0],
        ub: vec![5.0, 5.0],
        obj: vec![1.0, 1.0],
        rows: vec![row(&[(0, 1.0), (1, 1.0)], Sense::Ge, -3.0)],
    };
    let (obj, v) = optimal(solve_lp(&p));
    near(obj, -3.0);
    assert!(v[0] + v[1] >= -3.0 - 1e-7);
}

#[test]
fn fixed_variables_stay_fixed() {
    let p = LpProblem {
        ncols: 2,
        lb: vec![2.5, 0.0],
        ub: vec![2.5, 10.0],
        obj: vec![1.0, 1.0],
        rows: vec![row(&[(0, 1.0), (1, 1.0)], Sense::Ge, 4.0)],
    };
    let (obj, v) = optimal(solve_lp(&p));
    assert_eq!(v[0], 2.5);
    near(v[1], 1.5);
    near(obj, 4.0);
}

#[test]
fn duplicate_terms_fold() {
    // The same column mentioned twice in one row acts as a single summed
    // coefficient.
    let p = LpProblem {
        ncols: 1,
        lb: vec![0.0],
        ub: vec![f64::INFINITY],
        obj: vec![1.0],
        rows: vec![row(&[(0, 1.0), (0, 2.0)], Sense::Ge, 6.0)],
    };
    let (obj, v) = optimal(solve_lp(&p));
    near(v[0], 2.0);
    near(obj, 2.0);
}

#[test]
fn degenerate_ties_terminate() {
    // Many redundant rows through the same vertex still converge.
    let mut rows = vec![];
    for k in 1..=12 {
        rows.push(row(
            &[(0, k as f64), (1, k as f64)],
            Sense::Le,
            6.0 * k as f64,
        ));
    }
    rows.push(row(&[(0, 1.0)], Sense::Le, 4.0));
    let p = LpProblem {
        ncols: 2,
        lb: vec![0.0, 0.0],
        ub: vec![f64::INFINITY, f64::INFINITY],
        obj: vec![-2.0, -1.0],
        rows,
    };
    let (obj, v) = optimal(solve_lp(&p));
    near(obj, -10.0);
    near(v[0], 4.0);
    near(v[1], 2.0);
}

#[test]
fn infeasible_rows_detected() {
    let p = LpProblem {
        ncols: 2,
        lb: vec![0.0, 0.0],
        ub: vec![f64::INFINITY, f64::INFINITY],
        obj: vec![1.0, 1.0],
        rows: vec![
            row(&[(0, 1.0), (1, 1.0)], Sense::Le, 1.0),
            row(&[(0, 1.0), (1, 1.0)], Sense::Ge, 2.0),
        ],
    };
    assert_eq!(solve_lp(&p), LpOutcome::Infeasible);
}

#[test]
fn infeasible_by_bounds() {
    // Bounds cap the row activity below its requirement.
    let p = LpProblem {
        ncols: 2,
        lb: vec![0.0, 0.0],
        ub: vec![1.0, 1.0],
        obj: vec![0.0, 0.0],
        rows: vec![row(&[(0, 1.0), (1, 1.0)], Sense::Ge, 3.0)],
    };
    assert_eq!(solve_lp(&p), LpOutcome::Infeasible);
}

#[test]
fn empty_row_feasibility() {
    let mut p = LpProblem {
        ncols: 1,
        lb: vec![0.0],
        ub: vec![1.0],
        obj: vec![1.0],
        rows: vec![row(&[], Sense::Le, 0.0)],
    };
    let (obj, _) = optimal(solve_lp(&p));
    near(obj, 0.0);
    p.rows = vec![row(&[], Sense::Ge, 1.0)];
    assert_eq!(solve_lp(&p), LpOutcome::Infeasible);
}

#[test]
fn unbounded_ray_detected() {
    let p = LpProblem {
        ncols: 2,
        lb: vec![0.0, 0.0],
        ub: vec![f64::INFINITY, f64::INFINITY],
        obj: vec![-1.0, 0.0],
        rows: vec![row(&[(0, 1.0), (1, -1.0)], Sense::Le, 1.0)],
    };
    assert_eq!(solve_lp(&p), LpOutcome::Unbounded);
}

#[test]
fn no_rows_uses_bounds_only() {
    let p = LpProblem {
        ncols: 2,
        lb: vec![1.0, -4.0],
        ub: vec![9.0, 4.0],
        obj: vec![3.0, -1.0],
        rows: vec![],
    };
    let (obj, v) = optimal(solve_lp(&p));
    assert_eq!(v, vec![1.0, 4.0]);
    near(obj, -1.0);
}

fn residuals_ok(p: &LpProblem, v: &[f64], tol: f64) {
    for (i, r) in p.rows.iter().enumerate() {
        let lhs: f64 = r.coeffs.iter().map(|&(j, c)| c * v[j]).sum();
        let ok = match r.sense {
            Sense::Le => lhs <= r.rhs + tol,
            Sense::Ge => lhs >= r.rhs - tol,
            Sense::Eq => (lhs - r.rhs).abs() <= tol,
        };
        assert!(ok, "row {i} violated: {lhs} vs {}", r.rhs);
    }
    for j in 0..p.ncols {
        assert!(v[j] >= p.lb[j] - tol && v[j] <= p.ub[j] + tol, "bound {j}");
    }
}

#[test]
fn relaxation_regression_is_sound() {
    // The full placement relaxation that once tripped the solver: the
    // returned point must satisfy every row and the bound must sit at its
    // known value below the integer optimum.
    let topo = build_multi_zone(4, 1, 2, 5);
    let tasks = make_scenario(
        &topo,
        Pattern::FiveTasksOneCluster,
        Strategy::Sa,
        2000.0,
        0.001,
    );
    let mask = available_nodes(&topo, Case::Cfa);
    let model = build_model(&topo, &tasks, &mask);
    let p = lp_relaxation(&model);
    let (obj, v) = optimal(solve_lp(&p));
    residuals_ok(&p, &v, 1e-6);
    near(obj, 50.37524330279073);
    assert!(obj <= 53.37524330280634 + 1e-6);
    // Objective matches the cost row evaluated at the returned point.
    let recomputed: f64 = p.obj.iter().zip(&v).map(|(c, x)| c * x).sum();
    assert!((obj - recomputed).abs() <= 1e-9 * (1.0 + obj.abs()));
}

#[test]
fn relaxation_solves_repeatedly_identically() {
    let topo = build_multi_zone(4, 1, 2, 5);
    let tasks = make_scenario(
        &topo,
        Pattern::OneTaskEachCluster,
        Strategy::Da,
        1000.0,
        0.001,
    );
    let mask = available_nodes(&topo, Case::CfvaL);
    let model = build_model(&topo, &tasks, &mask);
    let p = lp_relaxation(&model);
    let (obj_a, v_a) = optimal(solve_lp(&p));
    let (obj_b, v_b) = optimal(solve_lp(&p));
    assert_eq!(obj_a.to_bits(), obj_b.to_bits());
    assert_eq!(v_a.len(), v_b.len());
    for (a, b) in v_a.iter().zip(&v_b) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    residuals_ok(&p, &v_a, 1e-6);
}
