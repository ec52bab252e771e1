use proptest::prelude::*;

use super::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-7 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn single_bounded_variable() {
    let mut m = LpModel::new();
    let x = m.add_var("x", 0.0, 10.0, 1.0, false);
    m.add_row("r", Row::new(vec![(x, 1.0)], Sense::Ge, 3.0)).unwrap();
    let s = solve_lp(&m, false).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!(close(s.x[0], 3.0));
    assert!(close(s.duals[0], 1.0));
    assert!(close(s.dual_objective, 3.0));
}

/// Three bin combinations with capacities 1.1, 2.2, 3.3 and costs
/// 0.11, 0.22, 0.33 covering demand 1.65.
fn gap_lp(demand: f64) -> LpModel {
    let mut m = LpModel::new();
    let caps = [1.1, 2.2, 3.3];
    let costs = [0.11, 0.22, 0.33];
    for u in 0..3 {
        m.add_var(format!("n{u}"), 0.0, 1.0, costs[u], false);
    }
    m.add_row("cap", Row::new((0..3).map(|u| (u, caps[u])).collect(), Sense::Ge, demand))
        .unwrap();
    m.add_row("one", Row::new((0..3).map(|u| (u, 1.0)).collect(), Sense::Eq, 1.0))
        .unwrap();
    m
}

#[test]
fn gap_subproblem_value_and_duals() {
    let m = gap_lp(1.65);
    let s = solve_lp(&m, false).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    assert!(close(s.objective, 0.165), "{}", s.objective);
    assert!(close(s.duals[0], 0.1), "{:?}", s.duals);
    assert!(close(s.duals[1], 0.0), "{:?}", s.duals);
    assert!(close(s.dual_objective, s.objective));
}

#[test]
fn infeasible_demand_has_certificate() {
    let m = gap_lp(6.0);
    let s = solve_lp(&m, false).unwrap();
    assert_eq!(s.status, LpStatus::Infeasible);
    let ray = s.farkas.expect("certificate");
    assert!(farkas_certifies(&m, &ray, 1e-9), "{ray:?}");
}

#[test]
fn unbounded_detected() {
    let mut m = LpModel::new();
    let x = m.add_var("x", 0.0, f64::INFINITY, -1.0, false);
    let y = m.add_var("y", 0.0, f64::INFINITY, 0.0, false);
    m.add_row("r", Row::new(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0)).unwrap();
    assert_eq!(solve_lp(&m, false).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn integer_model_needs_explicit_relaxation() {
    let mut m = LpModel::new();
    m.add_binary("b", 1.0);
    assert_eq!(solve_lp(&m, false), Err(LpError::IntegerModel));
    assert!(solve_lp(&m, true).is_ok());
}

#[test]
fn rows_are_normalised() {
    let mut m = LpModel::new();
    let x = m.add_var("x", 0.0, 1.0, 0.0, false);
    m.add_row("r", Row::new(vec![(x, 1.0), (x, 2.0)], Sense::Le, 1.0)).unwrap();
    assert_eq!(m.rows[0].coefs, vec![(0, 3.0)]);
    assert!(matches!(
        m.add_row("bad", Row::new(vec![(5, 1.0)], Sense::Le, 1.0)),
        Err(LpError::UnknownVariable { .. })
    ));
}

#[test]
fn warm_start_after_bound_change_and_cut() {
    // max x + y  s.t. x + 2y <= 4, 3x + y <= 6
    let mut m = LpModel::new();
    let x = m.add_var("x", 0.0, 10.0, -1.0, false);
    let y = m.add_var("y", 0.0, 10.0, -1.0, false);
    m.add_row("a", Row::new(vec![(x, 1.0), (y, 2.0)], Sense::Le, 4.0)).unwrap();
    m.add_row("b", Row::new(vec![(x, 3.0), (y, 1.0)], Sense::Le, 6.0)).unwrap();
    let mut spx = Simplex::new(&m, SimplexOptions::default());
    assert_eq!(spx.solve().unwrap(), LpStatus::Optimal);
    assert!(close(spx.objective(), -2.8));

    spx.set_bounds(x, 0.0, 1.0);
    assert_eq!(spx.reoptimize().unwrap(), LpStatus::Optimal);
    assert!(close(spx.objective(), -2.5));

    spx.add_row(Row::new(vec![(y, 1.0)], Sense::Le, 1.0)).unwrap();
    assert_eq!(spx.reoptimize().unwrap(), LpStatus::Optimal);
    assert!(close(spx.objective(), -2.0));

    spx.add_row(Row::new(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.5)).unwrap();
    assert_eq!(spx.reoptimize().unwrap(), LpStatus::Infeasible);
    let ray = spx.farkas().unwrap().to_vec();
    let mut local = m.clone();
    local.vars[x].ub = 1.0;
    local.rows.push(Row::new(vec![(y, 1.0)], Sense::Le, 1.0));
    local.rows.push(Row::new(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 2.5));
    assert!(farkas_certifies(&local, &ray, 1e-9), "{ray:?}");

    spx.set_bounds(x, 0.0, 10.0);
    assert_eq!(spx.reoptimize().unwrap(), LpStatus::Optimal);
    assert!(close(spx.objective(), -8.0 / 3.0), "{}", spx.objective());
}

#[derive(Debug, Clone)]
struct RandomLp {
    model: LpModel,
}

fn random_lp() -> impl Strategy<Value = RandomLp> {
    (1usize..=30, 1usize..=20).prop_flat_map(|(n, m)| {
        (
            proptest::collection::vec((-5i32..=5, 0i32..=3, 1i32..=4, any::<bool>()), n),
            proptest::collection::vec(
                (proptest::collection::vec((0..n, -4i32..=4), 1..=n.min(6)), 0u8..3, -10i32..=20),
                m,
            ),
        )
            .prop_map(move |(vars, rows)| {
                let mut model = LpModel::new();
                for (k, (c, lo, width, upper)) in vars.into_iter().enumerate() {
                    let ub = if upper { (lo + width) as f64 } else { f64::INFINITY };
                    model.add_var(format!("x{k}"), lo as f64, ub, c as f64, false);
                }
                for (k, (coefs, s, rhs)) in rows.into_iter().enumerate() {
                    let sense = [Sense::Le, Sense::Ge, Sense::Eq][s as usize];
                    let coefs = coefs.into_iter().map(|(j, a)| (j, a as f64)).collect();
                    model.add_row(format!("r{k}"), Row::new(coefs, sense, rhs as f64)).unwrap();
                }
                RandomLp { model }
            })
    })
}

fn check_optimal(m: &LpModel, s: &LpSolution) {
    assert!(m.max_violation(&s.x) <= 1e-6, "primal violation");
    assert!(close(s.objective, s.dual_objective), "{} vs {}", s.objective, s.dual_objective);
    for (r, &y) in m.rows.iter().zip(&s.duals) {
        match r.sense {
            Sense::Le => assert!(y <= 1e-7),
            Sense::Ge => assert!(y >= -1e-7),
            Sense::Eq => {}
        }
        // complementary slackness
        let slack = r.rhs - r.activity(&s.x);
        assert!((y * slack).abs() <= 1e-6, "row slack {slack} dual {y}");
    }
    for ((v, &d), &x) in m.vars.iter().zip(&s.reduced_costs).zip(&s.x) {
        if d > 1e-7 {
            assert!((x - v.lb).abs() <= 1e-6);
        } else if d < -1e-7 {
            assert!((x - v.ub).abs() <= 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn duality_holds(lp in random_lp()) {
        let m = &lp.model;
        let s = solve_lp(m, false).unwrap();
        match s.status {
            LpStatus::Optimal => check_optimal(m, &s),
            LpStatus::Infeasible => {
                let ray = s.farkas.clone().unwrap();
                prop_assert!(farkas_certifies(m, &ray, 1e-9), "bad ray {:?}", ray);
            }
            LpStatus::Unbounded => {}
        }
        let again = solve_lp(m, false).unwrap();
        prop_assert_eq!(s, again);
    }

    #[test]
    fn warm_start_matches_cold(lp in random_lp(), tighten in proptest::collection::vec((0usize..30, 0i32..3), 1..5)) {
        let m = &lp.model;
        let mut spx = Simplex::new(m, SimplexOptions::default());
        if spx.solve().unwrap() != LpStatus::Optimal {
            return Ok(());
        }
        let mut cold = m.clone();
        for (j, v) in tighten {
            let j = j % m.num_vars();
            let (lb, ub) = spx.bounds(j);
            let nub = (lb + v as f64).min(ub);
            spx.set_bounds(j, lb, nub);
            cold.vars[j].ub = nub;
            let warm = spx.reoptimize().unwrap();
            let c = solve_lp(&cold, false).unwrap();
            prop_assert_eq!(warm, c.status);
            if warm == LpStatus::Optimal {
                prop_assert!(close(spx.objective(), c.objective), "{} vs {}", spx.objective(), c.objective);
                check_optimal(&cold, &spx.solution(warm));
            } else if warm == LpStatus::Infeasible {
                prop_assert!(farkas_certifies(&cold, spx.farkas().unwrap(), 1e-9));
                break;
            } else {
                break;
            }
        }
    }
}
