//! Independent re-simulation of a solution against its instance.

use crate::instance::Instance;
use crate::preproc::BinCombination;
use crate::report::Solution;

const TOL: f64 = 1e-6;

/// Lists every way `sol` breaks the instance rules; empty means valid.
pub fn check_solution(inst: &Instance, combos: &[Vec<BinCombination>], sol: &Solution) -> Vec<String> {
    let mut errs = Vec::new();
    let n = inst.gap_count();
    if sol.visits.len() != n || sol.bins.len() != n {
        errs.push(format!(
            "expected {n} visit and bin choices, found {} and {}",
            sol.visits.len(),
            sol.bins.len()
        ));
        return errs;
    }
    for (g, &r) in sol.visits.iter().enumerate() {
        if r >= inst.visit_combinations.len() {
            errs.push(format!("GAP {}: unknown visit combination {r}", g + 1));
        }
    }
    for (g, &u) in sol.bins.iter().enumerate() {
        if u >= combos[g].len() {
            errs.push(format!("GAP {}: unknown bin combination {u}", g + 1));
        }
    }
    if !errs.is_empty() {
        return errs;
    }

    let mut bin_cost = 0.0;
    for g in 0..n {
        let combo = &combos[g][sol.bins[g]];
        bin_cost += combo.cost();
        let need = inst.pickup(g, sol.visits[g]);
        if combo.capacity() + TOL < need {
            errs.push(format!(
                "GAP {}: bin capacity {} below accumulated waste {need}",
                g + 1,
                combo.capacity()
            ));
        }
    }

    let days = inst.horizon_days;
    let mut served = vec![vec![0u32; days]; n];
    let mut used = vec![vec![false; days]; inst.vehicle_count];
    let mut routing = 0.0;
    for route in &sol.routes {
        let tag = format!("vehicle {} day {}", route.vehicle, route.day);
        if route.vehicle >= inst.vehicle_count || route.day == 0 || route.day > days {
            errs.push(format!("{tag}: no such vehicle or day"));
            continue;
        }
        if std::mem::replace(&mut used[route.vehicle][route.day - 1], true) {
            errs.push(format!("{tag}: vehicle leaves the depot twice"));
        }
        if route.stops.is_empty() {
            errs.push(format!("{tag}: empty route"));
            continue;
        }
        if let Some(&bad) = route.stops.iter().find(|&&s| s == 0 || s > n) {
            errs.push(format!("{tag}: stop {bad} is not a GAP"));
            continue;
        }
        let mut prev = 0;
        let mut duration = 0.0;
        let mut load = 0.0;
        for &s in &route.stops {
            duration += inst.arc_time(prev, s);
            let g = s - 1;
            served[g][route.day - 1] += 1;
            load += inst.pickup(g, sol.visits[g]);
            if load > inst.vehicle_capacity + TOL {
                errs.push(format!("{tag}: load {load} exceeds vehicle capacity at GAP {s}"));
            }
            prev = s;
        }
        duration += inst.arc_time(prev, 0);
        if duration > inst.time_limit + TOL {
            errs.push(format!("{tag}: duration {duration} exceeds time limit {}", inst.time_limit));
        }
        routing += inst.alpha * duration;
    }
    for g in 0..n {
        let pattern = &inst.visit_combinations[sol.visits[g]];
        for t in 0..days {
            let want = u32::from(pattern.visits_on(t));
            if served[g][t] != want {
                errs.push(format!(
                    "GAP {} day {}: visited {} times, pattern requires {want}",
                    g + 1,
                    t + 1,
                    served[g][t]
                ));
            }
        }
    }
    let close = |a: f64, b: f64| (a - b).abs() <= TOL * (1.0 + a.abs().max(b.abs()));
    if !close(routing, sol.routing_cost) {
        errs.push(format!("routing cost {} but routes cost {routing}", sol.routing_cost));
    }
    if !close(bin_cost, sol.bin_cost) {
        errs.push(format!("bin cost {} but bins cost {bin_cost}", sol.bin_cost));
    }
    if !close(sol.routing_cost + sol.bin_cost, sol.objective) {
        errs.push(format!(
            "objective {} differs from routing plus bins {}",
            sol.objective,
            sol.routing_cost + sol.bin_cost
        ));
    }
    errs
}

/// Builds a solution record from its choices, computing the costs.
pub fn price_solution(
    inst: &Instance,
    combos: &[Vec<BinCombination>],
    visits: Vec<usize>,
    bins: Vec<usize>,
    mut routes: Vec<crate::report::Route>,
) -> Solution {
    routes.sort();
    let routing_cost = routes
        .iter()
        .map(|r| {
            let mut prev = 0;
            let mut d = 0.0;
            for &s in r.stops.iter().chain(std::iter::once(&0)) {
                d += inst.arc_time(prev, s);
                prev = s;
            }
            inst.alpha * d
        })
        .sum::<f64>();
    let bin_cost = bins.iter().enumerate().map(|(g, &u)| combos[g][u].cost()).sum::<f64>();
    Solution {
        objective: routing_cost + bin_cost,
        routing_cost,
        bin_cost,
        visits,
        bins,
        routes,
    }
}
