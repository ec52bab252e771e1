//! Exhaustive optimum for tiny instances.
//!
//! Every visit pattern assignment is tried; bins are the cheapest covering
//! combination per GAP, and each day's GAPs are routed by enumerating all
//! orderings split into at most `|L|` consecutive tours.

use crate::check::price_solution;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::preproc::BinCombination;
use crate::report::{Route, Solution};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct OracleLimits {
    pub max_gaps: usize,
    pub max_days: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_gaps: 4,
            max_days: 2,
        }
    }
}

fn cheapest(combos: &[BinCombination], demand: f64) -> Option<usize> {
    (0..combos.len())
        .filter(|&u| combos[u].capacity() >= demand - TOL)
        .min_by(|&a, &b| combos[a].joint_cost.cmp(&combos[b].joint_cost).then(a.cmp(&b)))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Cheapest set of at most `|L|` tours covering `nodes` on one day, as tours
/// in vehicle order.
fn best_day(inst: &Instance, nodes: &[usize], pickup: &[f64]) -> Option<(f64, Vec<Vec<usize>>)> {
    if nodes.is_empty() {
        return Some((0.0, Vec::new()));
    }
    let mut perm = nodes.to_vec();
    perm.sort_unstable();
    let k = perm.len();
    let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
    loop {
        // Each mask bit marks a tour break after that position.
        for mask in 0u32..(1 << (k - 1)) {
            if mask.count_ones() as usize + 1 > inst.vehicle_count {
                continue;
            }
            let mut tours = Vec::new();
            let mut cur = Vec::new();
            for (pos, &s) in perm.iter().enumerate() {
                cur.push(s);
                if pos + 1 == k || mask & (1 << pos) != 0 {
                    tours.push(std::mem::take(&mut cur));
                }
            }
            let mut total = 0.0;
            let mut ok = true;
            for tour in &tours {
                let load: f64 = tour.iter().map(|&s| pickup[s - 1]).sum();
                let mut prev = 0;
                let mut dur = 0.0;
                for &s in tour.iter().chain(std::iter::once(&0)) {
                    dur += inst.arc_time(prev, s);
                    prev = s;
                }
                if load > inst.vehicle_capacity + TOL || dur > inst.time_limit + TOL {
                    ok = false;
                    break;
                }
                total += inst.alpha * dur;
            }
            if !ok {
                continue;
            }
            let better = match &best {
                None => true,
                Some((c, t)) => total < c - TOL || (total <= c + TOL && tours < *t),
            };
            if better {
                best = Some((total, tours));
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best
}

/// Global optimum, or `None` if no assignment is feasible.
pub fn brute_force(
    inst: &Instance,
    combos: &[Vec<BinCombination>],
    limits: OracleLimits,
) -> Result<Option<Solution>> {
    inst.validate()?;
    let n = inst.gap_count();
    if n > limits.max_gaps || inst.horizon_days > limits.max_days {
        return Err(Error::OracleLimit(format!(
            "{n} GAPs and {} days exceed the limit of {} GAPs and {} days",
            inst.horizon_days, limits.max_gaps, limits.max_days
        )));
    }
    let patterns = inst.visit_combinations.len();
    let mut visits = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>, Vec<usize>, Vec<Route>)> = None;
    'assign: loop {
        let mut bins = Vec::with_capacity(n);
        let mut feasible = true;
        for g in 0..n {
            match cheapest(&combos[g], inst.pickup(g, visits[g])) {
                Some(u) => bins.push(u),
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            let pickup: Vec<f64> = (0..n).map(|g| inst.pickup(g, visits[g])).collect();
            let bin_cost: f64 = bins.iter().enumerate().map(|(g, &u)| combos[g][u].cost()).sum();
            let mut routes = Vec::new();
            let mut total = bin_cost;
            for t in 0..inst.horizon_days {
                let nodes: Vec<usize> = (0..n)
                    .filter(|&g| inst.visit_combinations[visits[g]].visits_on(t))
                    .map(|g| inst.node(g))
                    .collect();
                match best_day(inst, &nodes, &pickup) {
                    Some((cost, tours)) => {
                        total += cost;
                        routes.extend(tours.into_iter().enumerate().map(|(l, stops)| Route {
                            vehicle: l,
                            day: t + 1,
                            stops,
                        }));
                    }
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible {
                let better = match &best {
                    None => true,
                    Some((c, v, b, r)) => {
                        total < c - TOL
                            || (total <= c + TOL && (&visits, &bins, &routes) < (v, b, r))
                    }
                };
                if better {
                    best = Some((total, visits.clone(), bins, routes));
                }
            }
        }
        for g in (0..n).rev() {
            visits[g] += 1;
            if visits[g] < patterns {
                continue 'assign;
            }
            visits[g] = 0;
        }
        break;
    }
    Ok(best.map(|(_, v, b, r)| price_solution(inst, combos, v, b, r)))
}
