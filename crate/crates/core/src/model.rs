//! The monolithic arc-flow model and its valid inequalities.
//!
//! Variables are `x[a][l][t]` (arc `a` driven by vehicle `l` on day `t`),
//! the carried load `v[a][l][t]`, the visit pattern choice `m[g][r]` and the
//! bin combination choice `n[g][u]`.

use crate::bb::{self, PlainMip};
use crate::check::price_solution;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::lp::{LpModel, Row, Sense};
use crate::preproc::BinCombination;
use crate::report::{MethodSpec, ReportStats, Route, Solution, SolveOptions, SolveReport, SolveStatus};

/// Pickup charged for a visit to a GAP that generates no waste, so that load
/// still grows along every route.
pub const ZERO_DEMAND_PICKUP: f64 = 1e-5;

/// Column positions of the model variables.
#[derive(Debug, Clone)]
pub struct Layout {
    pub nodes: usize,
    pub vehicles: usize,
    pub days: usize,
    pub patterns: usize,
    pub arcs: Vec<(usize, usize)>,
    arc_of: Vec<Vec<usize>>,
    x0: usize,
    v0: usize,
    m0: usize,
    /// First `n` column of each GAP.
    pub n_start: Vec<usize>,
    pub n_len: Vec<usize>,
    pub q: Option<usize>,
}

impl Layout {
    pub fn arc(&self, i: usize, j: usize) -> Option<usize> {
        let a = self.arc_of[i][j];
        (a != usize::MAX).then_some(a)
    }

    pub fn x(&self, a: usize, l: usize, t: usize) -> usize {
        self.x0 + (a * self.vehicles + l) * self.days + t
    }

    pub fn v(&self, a: usize, l: usize, t: usize) -> usize {
        self.v0 + (a * self.vehicles + l) * self.days + t
    }

    pub fn m(&self, g: usize, r: usize) -> usize {
        self.m0 + g * self.patterns + r
    }

    pub fn n(&self, g: usize, u: usize) -> usize {
        debug_assert!(!self.n_start.is_empty() && u < self.n_len[g]);
        self.n_start[g] + u
    }

    pub fn x_count(&self) -> usize {
        self.arcs.len() * self.vehicles * self.days
    }

    pub fn gap_count(&self) -> usize {
        self.nodes - 1
    }

    /// Visit pattern per GAP from a solution vector.
    pub fn read_visits(&self, x: &[f64]) -> Vec<usize> {
        (0..self.gap_count())
            .map(|g| {
                (0..self.patterns)
                    .max_by(|&a, &b| x[self.m(g, a)].total_cmp(&x[self.m(g, b)]).then(b.cmp(&a)))
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Bin combination per GAP from a solution vector with `n` columns.
    pub fn read_bins(&self, x: &[f64]) -> Vec<usize> {
        (0..self.gap_count())
            .map(|g| {
                (0..self.n_len[g])
                    .max_by(|&a, &b| x[self.n(g, a)].total_cmp(&x[self.n(g, b)]).then(b.cmp(&a)))
                    .unwrap_or(0)
            })
            .collect()
    }

    /// Follows arcs with `x > 0.5` from the depot; among several, the lowest
    /// head index is taken.
    pub fn read_routes(&self, x: &[f64]) -> Vec<Route> {
        let mut routes = Vec::new();
        for t in 0..self.days {
            for l in 0..self.vehicles {
                let mut stops = Vec::new();
                let mut cur = 0;
                loop {
                    let next = (0..self.nodes)
                        .find(|&j| self.arc(cur, j).is_some_and(|a| x[self.x(a, l, t)] > 0.5));
                    match next {
                        Some(0) | None => break,
                        Some(j) => {
                            if stops.contains(&j) || stops.len() >= self.nodes {
                                break;
                            }
                            stops.push(j);
                            cur = j;
                        }
                    }
                }
                if !stops.is_empty() {
                    routes.push(Route { vehicle: l, day: t + 1, stops });
                }
            }
        }
        routes
    }
}

fn pickup_coef(inst: &Instance, g: usize, r: usize) -> f64 {
    let p = inst.pickup(g, r);
    if p > 0.0 {
        p
    } else {
        ZERO_DEMAND_PICKUP * inst.visit_combinations[r].beta as f64
    }
}

/// Adds the routing part shared by the monolithic model and the Benders
/// master: `x`, `v`, `m` and the pattern, flow, fleet, duration, load rows.
pub fn build_routing(inst: &Instance, model: &mut LpModel) -> Result<Layout> {
    inst.validate()?;
    let nodes = inst.gap_count() + 1;
    let (vehicles, days) = (inst.vehicle_count, inst.horizon_days);
    let patterns = inst.visit_combinations.len();
    let mut arcs = Vec::new();
    let mut arc_of = vec![vec![usize::MAX; nodes]; nodes];
    for i in 0..nodes {
        for j in 0..nodes {
            if i != j {
                arc_of[i][j] = arcs.len();
                arcs.push((i, j));
            }
        }
    }
    let x0 = model.num_vars();
    for &(i, j) in &arcs {
        for l in 0..vehicles {
            for t in 0..days {
                model.add_binary(format!("x_{i}_{j}_{l}_{t}"), inst.alpha * inst.arc_time(i, j));
            }
        }
    }
    let v0 = model.num_vars();
    for &(i, j) in &arcs {
        for l in 0..vehicles {
            for t in 0..days {
                model.add_var(format!("v_{i}_{j}_{l}_{t}"), 0.0, inst.vehicle_capacity, 0.0, false);
            }
        }
    }
    let m0 = model.num_vars();
    for g in 0..nodes - 1 {
        for r in 0..patterns {
            model.add_binary(format!("m_{}_{r}", g + 1), 0.0);
        }
    }
    let lay = Layout {
        nodes,
        vehicles,
        days,
        patterns,
        arcs,
        arc_of,
        x0,
        v0,
        m0,
        n_start: Vec::new(),
        n_len: Vec::new(),
        q: None,
    };

    for g in 0..nodes - 1 {
        let row = (0..patterns).map(|r| (lay.m(g, r), 1.0)).collect();
        model.add_row(format!("pattern_{}", g + 1), Row::new(row, Sense::Eq, 1.0))?;
    }
    for g in 0..nodes - 1 {
        let i = g + 1;
        for t in 0..days {
            let mut row = Vec::new();
            for l in 0..vehicles {
                for j in 0..nodes {
                    if let Some(a) = lay.arc(i, j) {
                        row.push((lay.x(a, l, t), 1.0));
                    }
                }
            }
            for (r, pat) in inst.visit_combinations.iter().enumerate() {
                if pat.visits_on(t) {
                    row.push((lay.m(g, r), -1.0));
                }
            }
            model.add_row(format!("visit_{i}_{t}"), Row::new(row, Sense::Eq, 0.0))?;
        }
    }
    for l in 0..vehicles {
        for t in 0..days {
            for q in 0..nodes {
                let mut row = Vec::new();
                for k in 0..nodes {
                    if let Some(a) = lay.arc(k, q) {
                        row.push((lay.x(a, l, t), 1.0));
                    }
                    if let Some(a) = lay.arc(q, k) {
                        row.push((lay.x(a, l, t), -1.0));
                    }
                }
                model.add_row(format!("flow_{q}_{l}_{t}"), Row::new(row, Sense::Eq, 0.0))?;
            }
            let depart = (1..nodes).map(|j| (lay.x(lay.arc(0, j).unwrap(), l, t), 1.0)).collect();
            model.add_row(format!("depart_{l}_{t}"), Row::new(depart, Sense::Le, 1.0))?;
            let dur = lay
                .arcs
                .iter()
                .enumerate()
                .map(|(a, &(i, j))| (lay.x(a, l, t), inst.arc_time(i, j)))
                .collect();
            model.add_row(format!("duration_{l}_{t}"), Row::new(dur, Sense::Le, inst.time_limit))?;
        }
    }
    for a in 0..lay.arcs.len() {
        for l in 0..vehicles {
            for t in 0..days {
                model.add_row(
                    format!("load_{a}_{l}_{t}"),
                    Row::new(
                        vec![(lay.v(a, l, t), 1.0), (lay.x(a, l, t), -inst.vehicle_capacity)],
                        Sense::Le,
                        0.0,
                    ),
                )?;
            }
        }
    }
    let cap = inst.vehicle_capacity;
    for g in 0..nodes - 1 {
        let j = g + 1;
        for l in 0..vehicles {
            for t in 0..days {
                let mut row = Vec::new();
                for k in 0..nodes {
                    if let Some(a) = lay.arc(k, j) {
                        row.push((lay.v(a, l, t), 1.0));
                        row.push((lay.x(a, l, t), cap));
                    }
                    if let Some(a) = lay.arc(j, k) {
                        row.push((lay.v(a, l, t), -1.0));
                    }
                }
                for r in 0..patterns {
                    row.push((lay.m(g, r), pickup_coef(inst, g, r)));
                }
                model.add_row(format!("pickup_{j}_{l}_{t}"), Row::new(row, Sense::Le, cap))?;
            }
        }
    }
    Ok(lay)
}

/// Adds the bin choice `n` with the capacity and single-combination rows.
/// With `relaxed` the columns are continuous in `[0, 1]`.
pub fn add_bin_choice(
    inst: &Instance,
    combos: &[Vec<BinCombination>],
    model: &mut LpModel,
    lay: &mut Layout,
    relaxed: bool,
    cost_in_objective: bool,
) -> Result<()> {
    lay.n_start.clear();
    lay.n_len.clear();
    for (g, list) in combos.iter().enumerate() {
        if list.is_empty() {
            return Err(Error::NoBinCombination {
                gap: g + 1,
                space: inst.gaps[g].available_space.to_string(),
            });
        }
        lay.n_start.push(model.num_vars());
        lay.n_len.push(list.len());
        for c in list {
            let obj = if cost_in_objective { c.cost() } else { 0.0 };
            model.add_var(format!("n_{}_{}", g + 1, c.id), 0.0, 1.0, obj, !relaxed);
        }
    }
    for (g, list) in combos.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = list.iter().enumerate().map(|(u, c)| (lay.n(g, u), c.capacity())).collect();
        for r in 0..lay.patterns {
            row.push((lay.m(g, r), -inst.pickup(g, r)));
        }
        model.add_row(format!("capacity_{}", g + 1), Row::new(row, Sense::Ge, 0.0))?;
        let one = (0..list.len()).map(|u| (lay.n(g, u), 1.0)).collect();
        model.add_row(format!("one_bin_{}", g + 1), Row::new(one, Sense::Eq, 1.0))?;
    }
    Ok(())
}

/// The complete model: routing part plus bin choice.
pub fn build_full(inst: &Instance, combos: &[Vec<BinCombination>]) -> Result<(LpModel, Layout)> {
    let mut model = LpModel::new();
    let mut lay = build_routing(inst, &mut model)?;
    add_bin_choice(inst, combos, &mut model, &mut lay, false, true)?;
    Ok((model, lay))
}

/// Symmetry-breaking and strengthening: empty vehicles at the depot, fleet
/// used in index order each day, furthest GAP always served by vehicle 0.
pub fn add_valid_inequalities(model: &mut LpModel, lay: &Layout, inst: &Instance) -> Result<()> {
    for j in 1..lay.nodes {
        let a = lay.arc(0, j).unwrap();
        for l in 0..lay.vehicles {
            for t in 0..lay.days {
                let v = &mut model.vars[lay.v(a, l, t)];
                v.lb = 0.0;
                v.ub = 0.0;
            }
        }
    }
    for t in 0..lay.days {
        for l in 1..lay.vehicles {
            let mut row = Vec::new();
            for j in 1..lay.nodes {
                let a = lay.arc(0, j).unwrap();
                row.push((lay.x(a, l, t), 1.0));
                row.push((lay.x(a, l - 1, t), -1.0));
            }
            model.add_row(format!("order_{l}_{t}"), Row::new(row, Sense::Le, 0.0))?;
        }
    }
    if let Some(g) = inst.furthest_gap() {
        let node = inst.node(g);
        for (a, &(i, j)) in lay.arcs.iter().enumerate() {
            if i != node && j != node {
                continue;
            }
            for l in 1..lay.vehicles {
                for t in 0..lay.days {
                    model.vars[lay.x(a, l, t)].ub = 0.0;
                }
            }
        }
    }
    Ok(())
}

/// Solves the monolithic model by branch and bound.
pub fn solve_full(inst: &Instance, vis: bool, opts: &SolveOptions) -> Result<SolveReport> {
    let combos = inst.combinations_per_gap()?;
    let (mut model, lay) = build_full(inst, &combos)?;
    if vis {
        add_valid_inequalities(&mut model, &lay, inst)?;
    }
    let res = bb::solve(&model, &opts.bb, &mut PlainMip)?;
    let status = match res.status {
        bb::BbStatus::Optimal => SolveStatus::Optimal,
        bb::BbStatus::Infeasible => SolveStatus::Infeasible,
        _ => SolveStatus::Dnf,
    };
    let solution = res.incumbent.as_ref().map(|inc| solution_from_vector(inst, &combos, &lay, &inc.x));
    Ok(SolveReport {
        instance: inst.name.clone(),
        method: MethodSpec::mip(vis).to_string(),
        status,
        solution,
        stats: ReportStats::from_bb(&res.stats),
        trace: Vec::new(),
    })
}

pub fn solution_from_vector(inst: &Instance, combos: &[Vec<BinCombination>], lay: &Layout, x: &[f64]) -> Solution {
    price_solution(inst, combos, lay.read_visits(x), lay.read_bins(x), lay.read_routes(x))
}
