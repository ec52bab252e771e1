//! Benders decomposition: routing master with an incumbent variable `q` for
//! the bin cost, and per-GAP bin allocation subproblems.
//!
//! The subproblem of a GAP with demand `D` is
//! `min sum cin_u n_u  s.t.  sum cap_u n_u >= D, sum n_u = 1`. Its LP value
//! is the lower convex envelope of the `(cap, cin)` points, nondecreasing in
//! `D`, so it is solved in closed form.

use crate::bb::{self, BbStatus, Cut, CutFamily, Incumbent, IntegerCallback, IntegerNode, IntegerVerdict};
use crate::check::price_solution;
use crate::error::Result;
use crate::instance::Instance;
use crate::lp::{LpModel, Row, Sense};
use crate::model::{self, Layout};
use crate::preproc::BinCombination;
use crate::report::{MethodSpec, ReportStats, SolveOptions, SolveReport, SolveStatus, TraceRow};

const CUT_TOL: f64 = 1e-6;
const DEMAND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GapLp {
    Feasible {
        value: f64,
        /// Dual of the capacity row.
        delta: f64,
        /// Dual of the single-combination row.
        gamma: f64,
        /// Nonzero `n_u` of an optimal LP solution.
        weights: Vec<(usize, f64)>,
    },
    /// Dual ray `(delta_hat, gamma_hat)` proving the demand uncoverable.
    Infeasible { delta_hat: f64, gamma_hat: f64 },
}

/// Allocation subproblem of one GAP.
#[derive(Debug, Clone)]
pub struct GapSubproblem {
    caps: Vec<f64>,
    costs: Vec<f64>,
    /// Lower convex envelope vertices, left to right, starting at the
    /// cheapest combination.
    hull: Vec<usize>,
}

impl GapSubproblem {
    pub fn new(combos: &[BinCombination]) -> Self {
        assert!(!combos.is_empty(), "GAP without bin combinations");
        let caps: Vec<f64> = combos.iter().map(|c| c.capacity()).collect();
        let costs: Vec<f64> = combos.iter().map(|c| c.cost()).collect();
        let raw_cost = |u: usize| combos[u].joint_cost.raw();
        let raw_cap = |u: usize| combos[u].joint_capacity.raw();
        let start = (0..combos.len())
            .min_by(|&a, &b| raw_cost(a).cmp(&raw_cost(b)).then(raw_cap(b).cmp(&raw_cap(a))).then(a.cmp(&b)))
            .unwrap();
        let mut hull = vec![start];
        let mut cur = start;
        loop {
            // Next vertex: smallest slope to the right, ties to the larger
            // capacity. Slopes compared exactly by cross-multiplication.
            let mut next: Option<usize> = None;
            for u in 0..combos.len() {
                if raw_cap(u) <= raw_cap(cur) {
                    continue;
                }
                next = match next {
                    None => Some(u),
                    Some(w) => {
                        let lhs = i128::from(raw_cost(u) - raw_cost(cur)) * i128::from(raw_cap(w) - raw_cap(cur));
                        let rhs = i128::from(raw_cost(w) - raw_cost(cur)) * i128::from(raw_cap(u) - raw_cap(cur));
                        if lhs < rhs || (lhs == rhs && raw_cap(u) > raw_cap(w)) {
                            Some(u)
                        } else {
                            Some(w)
                        }
                    }
                };
            }
            match next {
                Some(u) => {
                    hull.push(u);
                    cur = u;
                }
                None => break,
            }
        }
        GapSubproblem { caps, costs, hull }
    }

    pub fn cap_max(&self) -> f64 {
        self.caps[*self.hull.last().unwrap()]
    }

    pub fn capacity(&self, u: usize) -> f64 {
        self.caps[u]
    }

    pub fn cost(&self, u: usize) -> f64 {
        self.costs[u]
    }

    pub fn len(&self) -> usize {
        self.caps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.caps.is_empty()
    }

    /// Cheapest combination holding at least `capacity`; ties to the lowest id.
    pub fn cheapest_covering(&self, capacity: f64) -> Option<usize> {
        (0..self.caps.len())
            .filter(|&u| self.caps[u] >= capacity - DEMAND_TOL)
            .min_by(|&a, &b| self.costs[a].total_cmp(&self.costs[b]).then(a.cmp(&b)))
    }

    pub fn solve_int(&self, demand: f64) -> Option<usize> {
        self.cheapest_covering(demand)
    }

    pub fn solve_lp(&self, demand: f64) -> GapLp {
        let cap_max = self.cap_max();
        if demand > cap_max + DEMAND_TOL {
            return GapLp::Infeasible {
                delta_hat: 1.0,
                gamma_hat: -cap_max,
            };
        }
        let first = self.hull[0];
        if self.hull.len() == 1 {
            return GapLp::Feasible {
                value: self.costs[first],
                delta: 0.0,
                gamma: self.costs[first],
                weights: vec![(first, 1.0)],
            };
        }
        if demand < self.caps[first] {
            return GapLp::Feasible {
                value: self.costs[first],
                delta: 0.0,
                gamma: self.costs[first],
                weights: vec![(first, 1.0)],
            };
        }
        // Segment whose left end is at or below the demand; at a vertex the
        // right-hand segment is used, except at the last vertex.
        let k = (0..self.hull.len() - 1)
            .rev()
            .find(|&k| self.caps[self.hull[k]] <= demand)
            .unwrap_or(0);
        let (a, b) = (self.hull[k], self.hull[k + 1]);
        let delta = (self.costs[b] - self.costs[a]) / (self.caps[b] - self.caps[a]);
        let gamma = self.costs[a] - delta * self.caps[a];
        let d = demand.min(self.caps[b]);
        let lambda = (d - self.caps[a]) / (self.caps[b] - self.caps[a]);
        let mut weights = Vec::new();
        if lambda < 1.0 {
            weights.push((a, 1.0 - lambda));
        }
        if lambda > 0.0 {
            weights.push((b, lambda));
        }
        GapLp::Feasible {
            value: delta * d + gamma,
            delta,
            gamma,
            weights,
        }
    }

    /// Rounds an LP allocation up to the cheapest combination holding its
    /// joint fractional capacity.
    pub fn heuristic_round(&self, weights: &[(usize, f64)]) -> Option<usize> {
        let kf: f64 = weights.iter().map(|&(u, w)| w * self.caps[u]).sum();
        self.cheapest_covering(kf)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubLp {
    pub value: f64,
    pub delta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub weights: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubLpOutcome {
    Feasible(SubLp),
    /// `(gap, delta_hat, gamma_hat)` for every uncoverable GAP.
    Infeasible(Vec<(usize, f64, f64)>),
}

/// Bin allocation for all GAPs given their visit patterns.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub gaps: Vec<GapSubproblem>,
    /// `pickup[g][r]`: volume accumulated at GAP `g` under pattern `r`.
    pickup: Vec<Vec<f64>>,
}

impl Subproblem {
    pub fn new(inst: &Instance, combos: &[Vec<BinCombination>]) -> Self {
        Subproblem {
            gaps: combos.iter().map(|c| GapSubproblem::new(c)).collect(),
            pickup: (0..inst.gap_count())
                .map(|g| (0..inst.visit_combinations.len()).map(|r| inst.pickup(g, r)).collect())
                .collect(),
        }
    }

    pub fn demand(&self, g: usize, r: usize) -> f64 {
        self.pickup[g][r]
    }

    /// Exact bin cost and plan, or the uncoverable GAPs.
    pub fn solve_int(&self, visits: &[usize]) -> std::result::Result<(f64, Vec<usize>), Vec<usize>> {
        let mut plan = Vec::with_capacity(visits.len());
        let mut bad = Vec::new();
        let mut value = 0.0;
        for (g, &r) in visits.iter().enumerate() {
            match self.gaps[g].solve_int(self.demand(g, r)) {
                Some(u) => {
                    value += self.gaps[g].cost(u);
                    plan.push(u);
                }
                None => bad.push(g),
            }
        }
        if bad.is_empty() {
            Ok((value, plan))
        } else {
            Err(bad)
        }
    }

    pub fn solve_lp(&self, visits: &[usize]) -> SubLpOutcome {
        let mut out = SubLp {
            value: 0.0,
            delta: Vec::new(),
            gamma: Vec::new(),
            weights: Vec::new(),
        };
        let mut rays = Vec::new();
        for (g, &r) in visits.iter().enumerate() {
            match self.gaps[g].solve_lp(self.demand(g, r)) {
                GapLp::Feasible {
                    value,
                    delta,
                    gamma,
                    weights,
                } => {
                    out.value += value;
                    out.delta.push(delta);
                    out.gamma.push(gamma);
                    out.weights.push(weights);
                }
                GapLp::Infeasible { delta_hat, gamma_hat } => rays.push((g, delta_hat, gamma_hat)),
            }
        }
        if rays.is_empty() {
            SubLpOutcome::Feasible(out)
        } else {
            SubLpOutcome::Infeasible(rays)
        }
    }

    pub fn heuristic_round(&self, lp: &SubLp) -> (f64, Vec<usize>) {
        let mut value = 0.0;
        let plan = lp
            .weights
            .iter()
            .enumerate()
            .map(|(g, w)| {
                let u = self.gaps[g]
                    .heuristic_round(w)
                    .expect("joint fractional capacity never exceeds the largest combination");
                value += self.gaps[g].cost(u);
                u
            })
            .collect();
        (value, plan)
    }
}

/// `q >= sum_g (gamma_g + delta_g * b_g * sum_r beta_r m_gr)`.
pub fn gen_optimality_cut(lay: &Layout, sub: &Subproblem, delta: &[f64], gamma: &[f64]) -> Cut {
    let q = lay.q.expect("master has q");
    let mut coefs = vec![(q, 1.0)];
    for (g, &d) in delta.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        for r in 0..lay.patterns {
            coefs.push((lay.m(g, r), -d * sub.demand(g, r)));
        }
    }
    Cut {
        family: CutFamily::Optimality,
        row: Row::new(coefs, Sense::Ge, gamma.iter().sum()),
    }
}

/// `sum_r (delta_hat * b_g * beta_r + gamma_hat) m_gr <= 0` for one GAP.
pub fn gen_feasibility_cut(lay: &Layout, sub: &Subproblem, g: usize, delta_hat: f64, gamma_hat: f64) -> Cut {
    let coefs = (0..lay.patterns)
        .map(|r| (lay.m(g, r), delta_hat * sub.demand(g, r) + gamma_hat))
        .collect();
    Cut {
        family: CutFamily::Feasibility,
        row: Row::new(coefs, Sense::Le, 0.0),
    }
}

/// Integer L-shaped cut for the pattern assignment `visits` with exact bin
/// cost `q_int` and global lower bound `lb`.
pub fn gen_lshaped_cut(lay: &Layout, visits: &[usize], q_int: f64, lb: f64) -> Cut {
    let q = lay.q.expect("master has q");
    let w = q_int - lb;
    let mut coefs = vec![(q, 1.0)];
    for (g, &rg) in visits.iter().enumerate() {
        for r in 0..lay.patterns {
            coefs.push((lay.m(g, r), if r == rg { -w } else { w }));
        }
    }
    let s = visits.len() as f64;
    Cut {
        family: CutFamily::Lshaped,
        row: Row::new(coefs, Sense::Ge, lb - w * (s - 1.0)),
    }
}

/// Bin cost with every GAP on its least-accumulating pattern, a lower bound
/// on the bin cost of any feasible plan. `None` if even that is uncoverable.
pub fn compute_global_lb(inst: &Instance, sub: &Subproblem) -> Option<f64> {
    let visits: Vec<usize> = (0..inst.gap_count())
        .map(|g| {
            (0..inst.visit_combinations.len())
                .min_by(|&a, &b| sub.demand(g, a).total_cmp(&sub.demand(g, b)).then(a.cmp(&b)))
                .unwrap()
        })
        .collect();
    sub.solve_int(&visits).ok().map(|(v, _)| v)
}

/// Master problem: routing model plus `q`, optionally with a relaxed copy of
/// the bin choice linked to `q`.
pub fn build_master(
    inst: &Instance,
    combos: &[Vec<BinCombination>],
    vis: bool,
    partial: bool,
    lb: f64,
) -> Result<(LpModel, Layout)> {
    let mut model = LpModel::new();
    let mut lay = model::build_routing(inst, &mut model)?;
    if vis {
        model::add_valid_inequalities(&mut model, &lay, inst)?;
    }
    let q = model.add_var("q", lb, f64::INFINITY, 1.0, false);
    lay.q = Some(q);
    if partial {
        model::add_bin_choice(inst, combos, &mut model, &mut lay, true, false)?;
        let mut row = vec![(q, 1.0)];
        for (g, list) in combos.iter().enumerate() {
            for (u, c) in list.iter().enumerate() {
                row.push((lay.n(g, u), -c.cost()));
            }
        }
        model.add_row("q_link", Row::new(row, Sense::Ge, 0.0))?;
    }
    Ok((model, lay))
}

/// Master rows that copy the subproblem when partial decomposition is on.
pub fn partial_rows(model: &LpModel) -> Vec<Row> {
    model
        .rows
        .iter()
        .zip(&model.row_names)
        .filter(|(_, name)| name.starts_with("capacity_") || name.starts_with("one_bin_") || *name == "q_link")
        .map(|(r, _)| r.clone())
        .collect()
}

struct UbbcCallback<'a> {
    lay: &'a Layout,
    sub: &'a Subproblem,
    routing_cols: Vec<(usize, f64)>,
    lshaped: bool,
    lb: f64,
    gap_tol: f64,
    prune_tol: f64,
    trace: Vec<TraceRow>,
}

impl UbbcCallback<'_> {
    fn routing(&self, x: &[f64]) -> f64 {
        self.routing_cols.iter().map(|&(j, c)| c * x[j]).sum()
    }
}

impl IntegerCallback for UbbcCallback<'_> {
    fn integer_node(&mut self, node: &IntegerNode<'_>) -> Result<IntegerVerdict> {
        let x = node.x;
        let q_hat = x[self.lay.q.unwrap()];
        let routing = self.routing(x);
        let visits = self.lay.read_visits(x);
        let mut row = TraceRow {
            iteration: self.trace.len() as u64 + 1,
            node: node.node,
            visits: visits.clone(),
            routing,
            master_estimate: q_hat,
            sub_lp: None,
            heuristic: None,
            integer: None,
            cuts: Vec::new(),
            outcome: String::new(),
        };
        let lp = match self.sub.solve_lp(&visits) {
            SubLpOutcome::Infeasible(rays) => {
                let cuts: Vec<Cut> = rays
                    .iter()
                    .map(|&(g, dh, gh)| gen_feasibility_cut(self.lay, self.sub, g, dh, gh))
                    .collect();
                row.cuts = cuts.iter().map(|c| c.family.name().to_string()).collect();
                row.outcome = "cut".into();
                self.trace.push(row);
                return Ok(IntegerVerdict::Cuts(cuts));
            }
            SubLpOutcome::Feasible(lp) => lp,
        };
        row.sub_lp = Some(lp.value);
        let mut cuts = Vec::new();
        if lp.value - q_hat > CUT_TOL {
            cuts.push(gen_optimality_cut(self.lay, self.sub, &lp.delta, &lp.gamma));
        }
        let (heuristic, _) = self.sub.heuristic_round(&lp);
        row.heuristic = Some(heuristic);
        if self.lshaped {
            let (q_int, _) = self.sub.solve_int(&visits).expect("LP feasible implies integer feasible");
            row.integer = Some(q_int);
            if q_int - q_hat > CUT_TOL {
                cuts.push(gen_lshaped_cut(self.lay, &visits, q_int, self.lb));
            }
        }
        if !cuts.is_empty() {
            row.cuts = cuts.iter().map(|c| c.family.name().to_string()).collect();
            row.outcome = "cut".into();
            self.trace.push(row);
            return Ok(IntegerVerdict::Cuts(cuts));
        }
        let lower = routing + lp.value.max(q_hat);
        let upper = routing + heuristic;
        let best = node.incumbent.map_or(upper, |i| i.min(upper));
        row.outcome = if upper - lower <= self.gap_tol {
            "closed"
        } else if lower >= best - self.prune_tol * best.abs().max(1.0) {
            "pruned"
        } else {
            "open"
        }
        .into();
        self.trace.push(row);
        Ok(IntegerVerdict::Candidate { lower, upper })
    }
}

/// Everything a decomposition run produced.
#[derive(Debug, Clone)]
pub struct BendersRun {
    pub report: SolveReport,
    pub master: LpModel,
    pub layout: Layout,
    pub cuts: Vec<Cut>,
    pub global_lb: Option<f64>,
    pub pool: Vec<bb::OpenSolution>,
    /// Pool indices in post-processing order, with whether each was solved.
    pub post_processed: Vec<(usize, bool)>,
}

pub fn ubbc_solve(inst: &Instance, spec: MethodSpec, opts: &SolveOptions) -> Result<SolveReport> {
    Ok(ubbc_solve_detailed(inst, spec, opts)?.report)
}

pub fn ubbc_solve_detailed(inst: &Instance, spec: MethodSpec, opts: &SolveOptions) -> Result<BendersRun> {
    let combos = inst.combinations_per_gap()?;
    let sub = Subproblem::new(inst, &combos);
    let global_lb = compute_global_lb(inst, &sub);
    let (master, layout) = build_master(inst, &combos, spec.vis, spec.partial, global_lb.unwrap_or(0.0))?;
    let mut report = SolveReport {
        instance: inst.name.clone(),
        method: spec.to_string(),
        status: SolveStatus::Infeasible,
        solution: None,
        stats: ReportStats::default(),
        trace: Vec::new(),
    };
    if global_lb.is_none() {
        log::info!("some GAP cannot store its waste under any visit pattern");
        return Ok(BendersRun {
            report,
            master,
            layout,
            cuts: Vec::new(),
            global_lb,
            pool: Vec::new(),
            post_processed: Vec::new(),
        });
    }
    let lb = global_lb.unwrap();
    let routing_cols = (0..layout.x_count())
        .map(|k| {
            let j = layout.x(0, 0, 0) + k;
            (j, master.vars[j].obj)
        })
        .collect();
    let mut cb = UbbcCallback {
        lay: &layout,
        sub: &sub,
        routing_cols,
        lshaped: spec.lshaped,
        lb,
        gap_tol: opts.bb.gap_tol,
        prune_tol: opts.bb.prune_tol,
        trace: Vec::new(),
    };
    let res = bb::solve(&master, &opts.bb, &mut cb)?;
    let mut trace = std::mem::take(&mut cb.trace);
    let routing_of = |x: &[f64]| -> f64 { cb.routing(x) };
    let pp = bb::post_process(&res.pool, res.incumbent.clone(), opts.bb.gap_tol, |open| {
        let visits = layout.read_visits(&open.x);
        Ok(sub.solve_int(&visits).ok().map(|(v, _)| routing_of(&open.x) + v))
    })?;
    for &(k, solved) in &pp.visited {
        let open = &res.pool[k];
        let visits = layout.read_visits(&open.x);
        let integer = if solved { sub.solve_int(&visits).ok().map(|(v, _)| v) } else { None };
        trace.push(TraceRow {
            iteration: trace.len() as u64 + 1,
            node: open.node,
            visits,
            routing: routing_of(&open.x),
            master_estimate: open.x[layout.q.unwrap()],
            sub_lp: None,
            heuristic: None,
            integer,
            cuts: Vec::new(),
            outcome: if solved { "post-processed" } else { "skipped" }.into(),
        });
    }

    let mut stats = ReportStats::from_bb(&res.stats);
    stats.post_processing_iterations = pp.iterations;
    stats.open_solutions = res.pool.len() as u64;
    report.stats = stats;
    report.trace = trace;
    report.status = match res.status {
        BbStatus::Optimal | BbStatus::Infeasible if pp.incumbent.is_some() => SolveStatus::Optimal,
        BbStatus::Optimal | BbStatus::Infeasible => SolveStatus::Infeasible,
        _ => SolveStatus::Dnf,
    };
    report.solution = pp.incumbent.as_ref().map(|Incumbent { x, .. }| {
        let visits = layout.read_visits(x);
        let (_, bins) = sub.solve_int(&visits).expect("incumbent has a bin plan");
        price_solution(inst, &combos, visits, bins, layout.read_routes(x))
    });
    Ok(BendersRun {
        report,
        master,
        layout,
        cuts: res.cuts,
        global_lb,
        pool: res.pool,
        post_processed: pp.visited,
    })
}
