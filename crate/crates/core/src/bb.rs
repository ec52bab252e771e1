//! Branch and bound over binary variables with an integer-node callback.
//!
//! At every LP-integral node the callback may return violated cuts (added
//! globally, node re-solved) or a candidate with a lower and an upper bound
//! on the best completion of that integer point. Candidates whose bounds do
//! not meet are kept in an open pool and excluded from the rest of the search
//! by a no-good row, so the tree never returns to them. [`post_process`]
//! settles the pool afterwards.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{BasisSnapshot, LpModel, LpStatus, Row, Sense, Simplex, SimplexOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutFamily {
    Optimality,
    Feasibility,
    Lshaped,
    Exclusion,
}

impl CutFamily {
    pub fn name(self) -> &'static str {
        match self {
            CutFamily::Optimality => "optimality",
            CutFamily::Feasibility => "feasibility",
            CutFamily::Lshaped => "lshaped",
            CutFamily::Exclusion => "exclusion",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub family: CutFamily,
    pub row: Row,
}

#[derive(Debug, Clone)]
pub struct BbOptions {
    pub node_limit: u64,
    pub time_limit: Duration,
    pub int_tol: f64,
    /// Nodes whose bound is within this relative distance of the incumbent
    /// are pruned.
    pub prune_tol: f64,
    /// An integer candidate is closed when its bounds are this close.
    pub gap_tol: f64,
}

impl Default for BbOptions {
    fn default() -> Self {
        BbOptions {
            node_limit: 1_000_000,
            time_limit: Duration::from_secs(600),
            int_tol: 1e-6,
            prune_tol: 1e-7,
            gap_tol: 1e-6,
        }
    }
}

pub struct IntegerNode<'a> {
    pub node: u64,
    /// LP values with integer variables rounded.
    pub x: &'a [f64],
    pub objective: f64,
    pub incumbent: Option<f64>,
}

pub enum IntegerVerdict {
    /// Violated rows; the node is re-solved with them.
    Cuts(Vec<Cut>),
    /// Bounds on the best completion of this integer point.
    Candidate { lower: f64, upper: f64 },
}

pub trait IntegerCallback {
    fn integer_node(&mut self, node: &IntegerNode<'_>) -> Result<IntegerVerdict>;
}

/// Accepts every integral LP point at its LP value.
pub struct PlainMip;

impl IntegerCallback for PlainMip {
    fn integer_node(&mut self, node: &IntegerNode<'_>) -> Result<IntegerVerdict> {
        Ok(IntegerVerdict::Candidate {
            lower: node.objective,
            upper: node.objective,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpenSolution {
    pub node: u64,
    pub x: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Incumbent {
    pub x: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BbStats {
    pub nodes: u64,
    pub master_iterations: u64,
    pub post_processing_iterations: u64,
    pub lp_solves: u64,
    pub cuts: BTreeMap<CutFamily, u64>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl BbStats {
    pub fn cut_count(&self, family: CutFamily) -> u64 {
        self.cuts.get(&family).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BbStatus {
    Optimal,
    Infeasible,
    NodeLimit,
    TimeLimit,
}

impl BbStatus {
    pub fn finished(self) -> bool {
        matches!(self, BbStatus::Optimal | BbStatus::Infeasible)
    }
}

#[derive(Debug, Clone)]
pub struct BbResult {
    pub status: BbStatus,
    pub incumbent: Option<Incumbent>,
    pub pool: Vec<OpenSolution>,
    pub stats: BbStats,
    /// Every generated cut, in order.
    pub cuts: Vec<Cut>,
}

#[derive(Debug, Clone)]
struct Node {
    id: u64,
    bound: f64,
    fixings: Vec<(usize, f64, f64)>,
    /// Parent's optimal basis, for nodes not solved right after it.
    warm: Option<BasisSnapshot>,
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // Max-heap: smaller bound first, then older node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

fn no_good(x: &[f64], model: &LpModel) -> Row {
    let mut coefs = Vec::new();
    let mut ones = 0.0;
    for (j, v) in model.vars.iter().enumerate() {
        if !v.integer {
            continue;
        }
        if x[j] > 0.5 {
            coefs.push((j, -1.0));
            ones += 1.0;
        } else {
            coefs.push((j, 1.0));
        }
    }
    Row::new(coefs, Sense::Ge, 1.0 - ones)
}

struct Search<'m> {
    model: &'m LpModel,
    opts: BbOptions,
    spx: Simplex,
    applied: Vec<(usize, f64, f64)>,
    incumbent: Option<Incumbent>,
    pool: Vec<OpenSolution>,
    stats: BbStats,
    cuts: Vec<Cut>,
}

enum NodeOutcome {
    Pruned,
    Branch(usize, f64, f64),
}

impl<'m> Search<'m> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some(inc) => inc.value - self.opts.prune_tol * inc.value.abs().max(1.0),
            None => f64::INFINITY,
        }
    }

    fn apply(&mut self, fixings: &[(usize, f64, f64)]) {
        for &(j, _, _) in &self.applied {
            if !fixings.iter().any(|f| f.0 == j) {
                let v = &self.model.vars[j];
                self.spx.set_bounds(j, v.lb, v.ub);
            }
        }
        for &(j, lb, ub) in fixings {
            if self.spx.bounds(j) != (lb, ub) {
                self.spx.set_bounds(j, lb, ub);
            }
        }
        self.applied = fixings.to_vec();
    }

    fn add_cut(&mut self, cut: Cut) -> Result<()> {
        self.spx.add_row(cut.row.clone())?;
        *self.stats.cuts.entry(cut.family).or_insert(0) += 1;
        self.cuts.push(cut);
        Ok(())
    }

    fn lp(&mut self, cold: bool) -> Result<LpStatus> {
        self.stats.lp_solves += 1;
        let st = if cold { self.spx.solve()? } else { self.spx.reoptimize()? };
        Ok(st)
    }

    fn fractional(&self, x: &[f64]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = self.opts.int_tol;
        for (j, v) in self.model.vars.iter().enumerate() {
            if !v.integer {
                continue;
            }
            let f = x[j] - x[j].floor();
            let score = f.min(1.0 - f);
            if score > best_score {
                best_score = score;
                best = Some((j, x[j]));
            }
        }
        best
    }

    /// Solves the node LP with the callback loop at integer points.
    fn process(&mut self, node: &Node, cold: bool, cb: &mut dyn IntegerCallback) -> Result<NodeOutcome> {
        self.stats.nodes += 1;
        if !cold {
            self.apply(&node.fixings);
            if let Some(snap) = &node.warm {
                // A failed restore leaves a basis the re-solve repairs itself.
                let _ = self.spx.restore(snap);
            }
        }
        let mut first = true;
        loop {
            let st = self.lp(cold && first)?;
            first = false;
            match st {
                LpStatus::Infeasible => return Ok(NodeOutcome::Pruned),
                LpStatus::Unbounded => {
                    return Err(Error::invalid("model", "LP relaxation is unbounded"));
                }
                LpStatus::Optimal => {}
            }
            let obj = self.spx.objective();
            if obj >= self.cutoff() {
                return Ok(NodeOutcome::Pruned);
            }
            let x = self.spx.values().to_vec();
            if let Some((j, v)) = self.fractional(&x) {
                return Ok(NodeOutcome::Branch(j, v, obj));
            }
            let xr: Vec<f64> = x
                .iter()
                .zip(&self.model.vars)
                .map(|(&v, var)| if var.integer { v.round() } else { v })
                .collect();
            self.stats.master_iterations += 1;
            let verdict = cb.integer_node(&IntegerNode {
                node: node.id,
                x: &xr,
                objective: obj,
                incumbent: self.incumbent.as_ref().map(|i| i.value),
            })?;
            match verdict {
                IntegerVerdict::Cuts(cuts) => {
                    if cuts.is_empty() {
                        return Err(Error::invalid("callback", "empty cut list"));
                    }
                    for c in cuts {
                        self.add_cut(c)?;
                    }
                }
                IntegerVerdict::Candidate { lower, upper } => {
                    let improved = self.incumbent.as_ref().is_none_or(|i| upper < i.value);
                    if improved {
                        log::debug!("node {}: incumbent {upper}", node.id);
                        self.incumbent = Some(Incumbent { x: xr.clone(), value: upper });
                    }
                    if upper - lower <= self.opts.gap_tol {
                        return Ok(NodeOutcome::Pruned);
                    }
                    if lower >= self.cutoff() {
                        return Ok(NodeOutcome::Pruned);
                    }
                    self.pool.push(OpenSolution {
                        node: node.id,
                        x: xr.clone(),
                        lower,
                        upper,
                    });
                    let row = no_good(&xr, self.model);
                    self.add_cut(Cut {
                        family: CutFamily::Exclusion,
                        row,
                    })?;
                }
            }
        }
    }
}

/// Runs the tree search. `model` must carry integrality markers only on
/// binary variables.
pub fn solve(model: &LpModel, opts: &BbOptions, cb: &mut dyn IntegerCallback) -> Result<BbResult> {
    model.validate()?;
    let start = Instant::now();
    let mut s = Search {
        model,
        opts: opts.clone(),
        spx: Simplex::new(model, SimplexOptions::default()),
        applied: Vec::new(),
        incumbent: None,
        pool: Vec::new(),
        stats: BbStats::default(),
        cuts: Vec::new(),
    };
    let mut heap = BinaryHeap::new();
    let mut next_id = 1u64;
    let mut status = BbStatus::Optimal;
    let mut current = Some(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        fixings: Vec::new(),
        warm: None,
    });
    let mut cold = true;

    loop {
        let node = match current.take() {
            Some(n) => n,
            None => match heap.pop() {
                Some(Queued(n)) => {
                    if n.bound >= s.cutoff() {
                        continue;
                    }
                    n
                }
                None => break,
            },
        };
        if s.stats.nodes >= opts.node_limit {
            status = BbStatus::NodeLimit;
            break;
        }
        if start.elapsed() >= opts.time_limit {
            status = BbStatus::TimeLimit;
            break;
        }
        let outcome = s.process(&node, cold, cb)?;
        cold = false;
        if let NodeOutcome::Branch(j, v, bound) = outcome {
            let mut down = node.fixings.clone();
            down.retain(|f| f.0 != j);
            let mut up = down.clone();
            down.push((j, model.vars[j].lb, v.floor()));
            up.push((j, v.ceil(), model.vars[j].ub));
            let (dive, other) = if v - v.floor() >= 0.5 { (up, down) } else { (down, up) };
            let other = Node {
                id: next_id,
                bound,
                fixings: other,
                warm: s.spx.snapshot(),
            };
            let dive = Node {
                id: next_id + 1,
                bound,
                fixings: dive,
                warm: None,
            };
            next_id += 2;
            heap.push(Queued(other));
            current = Some(dive);
        }
    }

    if status == BbStatus::Optimal && s.incumbent.is_none() && s.pool.is_empty() {
        status = BbStatus::Infeasible;
    }
    s.stats.wall_time = start.elapsed();
    Ok(BbResult {
        status,
        incumbent: s.incumbent,
        pool: s.pool,
        stats: s.stats,
        cuts: s.cuts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostProcessed {
    pub incumbent: Option<Incumbent>,
    pub iterations: u64,
    /// Pool indices in processing order, with whether each was solved.
    pub visited: Vec<(usize, bool)>,
}

/// Settles open solutions in ascending lower-bound order. `exact` returns the
/// true value of an open solution, or `None` if it has no feasible completion.
pub fn post_process(
    pool: &[OpenSolution],
    incumbent: Option<Incumbent>,
    gap_tol: f64,
    mut exact: impl FnMut(&OpenSolution) -> Result<Option<f64>>,
) -> Result<PostProcessed> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| pool[a].lower.total_cmp(&pool[b].lower).then(a.cmp(&b)));
    let mut best = incumbent;
    let mut iterations = 0;
    let mut visited = Vec::with_capacity(order.len());
    for k in order {
        let open = &pool[k];
        let ub = best.as_ref().map_or(f64::INFINITY, |b| b.value);
        if open.lower >= ub - gap_tol {
            visited.push((k, false));
            continue;
        }
        iterations += 1;
        visited.push((k, true));
        if let Some(v) = exact(open)? {
            if v < ub {
                best = Some(Incumbent { x: open.x.clone(), value: v });
            }
        }
    }
    Ok(PostProcessed {
        incumbent: best,
        iterations,
        visited,
    })
}
