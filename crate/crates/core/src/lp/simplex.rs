//! Bounded revised simplex with a product-form inverse.
//!
//! Every row `i` gets a logical column `s_i` so that `A x + s = b`, with
//! `s_i` in `[0, inf)` for `<=`, `(-inf, 0]` for `>=` and `[0, 0]` for `=`.
//! A cold start uses artificial columns for rows the all-logical basis cannot
//! satisfy (phase one), then optimises the true costs (phase two). Warm
//! restarts after bound changes or appended rows run the dual simplex from the
//! last optimal basis.
//!
//! The basis inverse is kept as a list of eta columns; reinversion rebuilds
//! it from the original columns every `refactor_interval` pivots.

use super::{LpError, LpModel, LpSolution, LpStatus, Row, Sense, FEAS_TOL, OPT_TOL};

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    Lower,
    Upper,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColKind {
    Structural,
    Slack(usize),
    Artificial(usize, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Unsolved,
    One,
    Two,
}

#[derive(Debug, Clone)]
pub struct SimplexOptions {
    /// Rebuild the inverse from the original data after this many pivots.
    pub refactor_interval: usize,
    /// Per-call pivot budget; `None` scales with model size.
    pub max_iterations: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            refactor_interval: 100,
            max_iterations: None,
        }
    }
}

/// A saved optimal basis, restorable after bound changes and appended rows.
#[derive(Debug, Clone)]
pub struct BasisSnapshot {
    basis: Vec<u32>,
    state: Vec<ColState>,
}

/// Elementary matrix differing from the identity in column `pos`.
#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    piv: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct Simplex {
    opts: SimplexOptions,
    n: usize,
    obj: Vec<f64>,
    struct_lb: Vec<f64>,
    struct_ub: Vec<f64>,
    struct_cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Row>,

    m: usize,
    ncols: usize,
    kind: Vec<ColKind>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    slack_of: Vec<usize>,
    etas: Vec<Eta>,

    phase: Phase,
    since_refactor: usize,
    degenerate_run: usize,
    farkas: Option<Vec<f64>>,
    pub pivots: u64,
}

fn slack_bounds(sense: Sense) -> (f64, f64) {
    match sense {
        Sense::Le => (0.0, f64::INFINITY),
        Sense::Ge => (f64::NEG_INFINITY, 0.0),
        Sense::Eq => (0.0, 0.0),
    }
}

impl Simplex {
    pub fn new(model: &LpModel, opts: SimplexOptions) -> Self {
        let n = model.vars.len();
        let mut struct_cols = vec![Vec::new(); n];
        for (i, r) in model.rows.iter().enumerate() {
            for &(j, a) in &r.coefs {
                struct_cols[j].push((i, a));
            }
        }
        let mut spx = Simplex {
            opts,
            n,
            obj: model.vars.iter().map(|v| v.obj).collect(),
            struct_lb: model.vars.iter().map(|v| v.lb).collect(),
            struct_ub: model.vars.iter().map(|v| v.ub).collect(),
            struct_cols,
            rows: model.rows.clone(),
            m: 0,
            ncols: 0,
            kind: Vec::new(),
            lb: Vec::new(),
            ub: Vec::new(),
            cost: Vec::new(),
            x: Vec::new(),
            d: Vec::new(),
            state: Vec::new(),
            basis: Vec::new(),
            slack_of: Vec::new(),
            etas: Vec::new(),
            phase: Phase::Unsolved,
            since_refactor: 0,
            degenerate_run: 0,
            farkas: None,
            pivots: 0,
        };
        spx.cold_start();
        spx
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_structural(&self) -> usize {
        self.n
    }

    fn iteration_budget(&self) -> usize {
        self.opts
            .max_iterations
            .unwrap_or(50_000 + 50 * (self.m + self.ncols))
    }

    fn scatter(&self, j: usize, out: &mut [f64]) {
        match self.kind[j] {
            ColKind::Structural => {
                for &(i, a) in &self.struct_cols[j] {
                    out[i] += a;
                }
            }
            ColKind::Slack(i) => out[i] += 1.0,
            ColKind::Artificial(i, s) => out[i] += s,
        }
    }

    fn dot(&self, j: usize, y: &[f64]) -> f64 {
        match self.kind[j] {
            ColKind::Structural => self.struct_cols[j].iter().map(|&(i, a)| a * y[i]).sum(),
            ColKind::Slack(i) => y[i],
            ColKind::Artificial(i, s) => s * y[i],
        }
    }

    fn col_nnz(&self, j: usize) -> usize {
        match self.kind[j] {
            ColKind::Structural => self.struct_cols[j].len(),
            _ => 1,
        }
    }

    /// `v <- B^-1 v`.
    fn ftran(&self, v: &mut [f64]) {
        for e in &self.etas {
            let xp = v[e.pos];
            if xp == 0.0 {
                continue;
            }
            let xp = xp / e.piv;
            v[e.pos] = xp;
            for &(i, a) in &e.entries {
                v[i] -= a * xp;
            }
        }
    }

    /// `v^T <- v^T B^-1`.
    fn btran(&self, v: &mut [f64]) {
        for e in self.etas.iter().rev() {
            let mut s = v[e.pos];
            for &(i, a) in &e.entries {
                s -= a * v[i];
            }
            v[e.pos] = s / e.piv;
        }
    }

    /// Column `j` of `B^-1 A`.
    fn column(&self, j: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        self.scatter(j, &mut v);
        self.ftran(&mut v);
        v
    }

    /// Row `r` of `B^-1`.
    fn inverse_row(&self, r: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        v[r] = 1.0;
        self.btran(&mut v);
        v
    }

    /// Row `r` of `B^-1 A` over all columns.
    fn pivot_row(&self, r: usize) -> Vec<f64> {
        let rho = self.inverse_row(r);
        let mut row = vec![0.0; self.ncols];
        for (i, &p) in rho.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for &(j, a) in &self.rows[i].coefs {
                row[j] += p * a;
            }
            row[self.slack_of[i]] += p;
        }
        for j in 0..self.ncols {
            if self.state[j] == ColState::Basic {
                row[j] = 0.0;
            } else if let ColKind::Artificial(i, s) = self.kind[j] {
                row[j] = s * rho[i];
            } else if row[j].abs() < DROP_TOL {
                row[j] = 0.0;
            }
        }
        row[self.basis[r]] = 1.0;
        row
    }

    fn push_column(&mut self, kind: ColKind, lb: f64, ub: f64, cost: f64) -> usize {
        let c = self.ncols;
        self.ncols += 1;
        self.kind.push(kind);
        self.lb.push(lb);
        self.ub.push(ub);
        self.cost.push(cost);
        self.x.push(0.0);
        self.d.push(0.0);
        self.state.push(ColState::Lower);
        c
    }

    fn nonbasic_start(lb: f64, ub: f64) -> (ColState, f64) {
        if lb.is_finite() {
            (ColState::Lower, lb)
        } else if ub.is_finite() {
            (ColState::Upper, ub)
        } else {
            (ColState::Free, 0.0)
        }
    }

    /// All-logical basis, with artificials where the logical alone cannot
    /// absorb the residual.
    fn cold_start(&mut self) {
        let m = self.rows.len();
        self.m = m;
        self.ncols = 0;
        self.kind.clear();
        self.lb.clear();
        self.ub.clear();
        self.cost.clear();
        self.x.clear();
        self.d.clear();
        self.state.clear();
        self.etas.clear();
        self.basis = vec![usize::MAX; m];
        self.slack_of = vec![0; m];
        self.farkas = None;
        self.since_refactor = 0;
        self.degenerate_run = 0;

        for j in 0..self.n {
            let (lb, ub) = (self.struct_lb[j], self.struct_ub[j]);
            let c = self.push_column(ColKind::Structural, lb, ub, 0.0);
            let (st, v) = Self::nonbasic_start(lb, ub);
            self.state[c] = st;
            self.x[c] = v;
        }
        for i in 0..m {
            let (lb, ub) = slack_bounds(self.rows[i].sense);
            self.slack_of[i] = self.push_column(ColKind::Slack(i), lb, ub, 0.0);
        }
        let mut any_artificial = false;
        for i in 0..m {
            let resid = self.rows[i].rhs - self.rows[i].activity(&self.x[..self.n]);
            let s = self.slack_of[i];
            let (slb, sub) = (self.lb[s], self.ub[s]);
            if resid >= slb - FEAS_TOL && resid <= sub + FEAS_TOL {
                self.basis[i] = s;
                self.state[s] = ColState::Basic;
            } else {
                let v = resid.clamp(slb, sub);
                let sign = if resid > v { 1.0 } else { -1.0 };
                self.state[s] = if v == slb { ColState::Lower } else { ColState::Upper };
                self.x[s] = v;
                let a = self.push_column(ColKind::Artificial(i, sign), 0.0, f64::INFINITY, 1.0);
                self.basis[i] = a;
                self.state[a] = ColState::Basic;
                any_artificial = true;
            }
        }
        self.phase = if any_artificial { Phase::One } else { Phase::Two };
        if self.phase == Phase::Two {
            self.load_phase_two_costs();
        }
        self.refactor().expect("logical basis is nonsingular");
    }

    fn load_phase_two_costs(&mut self) {
        for c in 0..self.ncols {
            self.cost[c] = match self.kind[c] {
                ColKind::Structural => self.obj[c],
                _ => 0.0,
            };
        }
    }

    fn recompute_primal(&mut self) {
        let mut rhs: Vec<f64> = self.rows.iter().map(|r| r.rhs).collect();
        for j in 0..self.ncols {
            if self.state[j] == ColState::Basic || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            match self.kind[j] {
                ColKind::Structural => {
                    for &(i, a) in &self.struct_cols[j] {
                        rhs[i] -= a * xj;
                    }
                }
                ColKind::Slack(i) => rhs[i] -= xj,
                ColKind::Artificial(i, s) => rhs[i] -= s * xj,
            }
        }
        self.ftran(&mut rhs);
        for (r, &b) in self.basis.iter().enumerate() {
            self.x[b] = rhs[r];
        }
    }

    fn recompute_reduced_costs(&mut self) {
        let mut y: Vec<f64> = self.basis.iter().map(|&b| self.cost[b]).collect();
        self.btran(&mut y);
        for j in 0..self.ncols {
            self.d[j] = if self.state[j] == ColState::Basic {
                0.0
            } else {
                self.cost[j] - self.dot(j, &y)
            };
        }
    }

    /// Replaces the basic column at position `r` by `q`. `col` is column `q`
    /// of `B^-1 A` and `row` is row `r` of it.
    fn pivot(&mut self, r: usize, q: usize, col: &[f64], row: &[f64]) {
        let f = self.d[q] / row[q];
        if f != 0.0 {
            for (j, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    self.d[j] -= f * a;
                }
            }
        }
        self.d[q] = 0.0;
        let entries = col
            .iter()
            .enumerate()
            .filter(|&(i, v)| i != r && v.abs() >= DROP_TOL)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            pos: r,
            piv: col[r],
            entries,
        });
        self.basis[r] = q;
        self.state[q] = ColState::Basic;
        self.since_refactor += 1;
        self.pivots += 1;
    }

    /// Rebuilds the inverse, basic values and reduced costs from the original
    /// columns for the current basis.
    pub fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        self.etas.clear();
        let mut placed = vec![usize::MAX; m];
        let mut rest = Vec::new();
        for &j in &self.basis {
            match self.kind[j] {
                ColKind::Slack(i) if placed[i] == usize::MAX => placed[i] = j,
                ColKind::Artificial(i, s) if placed[i] == usize::MAX => {
                    placed[i] = j;
                    if s != 1.0 {
                        self.etas.push(Eta {
                            pos: i,
                            piv: s,
                            entries: Vec::new(),
                        });
                    }
                }
                _ => rest.push(j),
            }
        }
        rest.sort_by_key(|&j| (self.col_nnz(j), j));
        let mut v = vec![0.0; m];
        for j in rest {
            v.iter_mut().for_each(|e| *e = 0.0);
            self.scatter(j, &mut v);
            self.ftran(&mut v);
            let mut best = usize::MAX;
            let mut best_val = 1e-11;
            for (i, &vi) in v.iter().enumerate() {
                if placed[i] == usize::MAX && vi.abs() > best_val {
                    best_val = vi.abs();
                    best = i;
                }
            }
            if best == usize::MAX {
                return Err(LpError::Numerical("singular basis".into()));
            }
            placed[best] = j;
            let entries = v
                .iter()
                .enumerate()
                .filter(|&(i, x)| i != best && x.abs() >= DROP_TOL)
                .map(|(i, &x)| (i, x))
                .collect();
            self.etas.push(Eta {
                pos: best,
                piv: v[best],
                entries,
            });
        }
        self.basis = placed;
        self.recompute_primal();
        self.recompute_reduced_costs();
        self.since_refactor = 0;
        Ok(())
    }

    fn maybe_refactor(&mut self) -> Result<(), LpError> {
        if self.since_refactor >= self.opts.refactor_interval {
            self.refactor()?;
        }
        Ok(())
    }

    /// The two computed copies of a pivot element should agree; when they
    /// drift apart the inverse is rebuilt before pivoting.
    fn pivot_is_stale(&self, a_col: f64, a_row: f64) -> bool {
        self.since_refactor > 0 && (a_col - a_row).abs() > 1e-8 * (1.0 + a_col.abs())
    }

    fn bland_mode(&self) -> bool {
        self.degenerate_run > 3 * (self.m + self.ncols)
    }

    fn primal_eligible(&self, j: usize) -> Option<f64> {
        let dj = self.d[j];
        match self.state[j] {
            ColState::Basic => None,
            ColState::Lower if dj < -OPT_TOL && self.ub[j] > self.lb[j] => Some(1.0),
            ColState::Upper if dj > OPT_TOL && self.ub[j] > self.lb[j] => Some(-1.0),
            ColState::Free if dj.abs() > OPT_TOL => Some(if dj < 0.0 { 1.0 } else { -1.0 }),
            _ => None,
        }
    }

    /// Primal simplex from a primal-feasible basis.
    fn primal(&mut self) -> Result<LpStatus, LpError> {
        let budget = self.iteration_budget();
        for _ in 0..budget {
            self.maybe_refactor()?;
            let bland = self.bland_mode();
            let mut enter = None;
            let mut best = 0.0;
            for j in 0..self.ncols {
                if let Some(dir) = self.primal_eligible(j) {
                    if bland {
                        enter = Some((j, dir));
                        break;
                    }
                    let score = self.d[j].abs();
                    if score > best {
                        best = score;
                        enter = Some((j, dir));
                    }
                }
            }
            let Some((q, dir)) = enter else {
                return Ok(LpStatus::Optimal);
            };
            let col = self.column(q);

            // Harris two-pass ratio test.
            let flip = self.ub[q] - self.lb[q];
            let mut theta_max = flip;
            for (r, &a) in col.iter().enumerate() {
                let alpha = dir * a;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let lim = if alpha > 0.0 {
                    if self.lb[b].is_infinite() {
                        continue;
                    }
                    (self.x[b] - self.lb[b] + FEAS_TOL) / alpha
                } else {
                    if self.ub[b].is_infinite() {
                        continue;
                    }
                    (self.ub[b] - self.x[b] + FEAS_TOL) / -alpha
                };
                if lim < theta_max {
                    theta_max = lim;
                }
            }
            if theta_max.is_infinite() {
                return Ok(LpStatus::Unbounded);
            }
            let mut leave: Option<(usize, f64)> = None;
            let mut best_alpha = 0.0;
            let mut best_ratio = f64::INFINITY;
            for (r, &a) in col.iter().enumerate() {
                let alpha = dir * a;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let ratio = if alpha > 0.0 {
                    if self.lb[b].is_infinite() {
                        continue;
                    }
                    ((self.x[b] - self.lb[b]) / alpha).max(0.0)
                } else {
                    if self.ub[b].is_infinite() {
                        continue;
                    }
                    ((self.ub[b] - self.x[b]) / -alpha).max(0.0)
                };
                if bland {
                    let better = ratio < best_ratio - 1e-12
                        || (ratio <= best_ratio + 1e-12 && leave.is_some_and(|(lr, _)| b < self.basis[lr]));
                    if leave.is_none() || better {
                        best_ratio = ratio;
                        leave = Some((r, ratio));
                    }
                } else if ratio <= theta_max && alpha.abs() > best_alpha {
                    best_alpha = alpha.abs();
                    leave = Some((r, ratio));
                }
            }
            let pivot = match leave {
                Some((r, ratio)) if ratio < flip => {
                    let row = self.pivot_row(r);
                    if self.pivot_is_stale(col[r], row[q]) {
                        self.refactor()?;
                        continue;
                    }
                    Some((r, ratio, row))
                }
                _ => None,
            };
            let step = pivot.as_ref().map_or(flip, |p| p.1);
            if step <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            if step != 0.0 {
                self.x[q] += dir * step;
                for (r, &a) in col.iter().enumerate() {
                    if a != 0.0 {
                        let b = self.basis[r];
                        self.x[b] -= dir * step * a;
                    }
                }
            }
            match pivot {
                Some((r, _, row)) => {
                    let b = self.basis[r];
                    if dir * col[r] > 0.0 {
                        self.x[b] = self.lb[b];
                        self.state[b] = ColState::Lower;
                    } else {
                        self.x[b] = self.ub[b];
                        self.state[b] = ColState::Upper;
                    }
                    self.pivot(r, q, &col, &row);
                }
                None => {
                    // Bound flip without a basis change.
                    if dir > 0.0 {
                        self.x[q] = self.ub[q];
                        self.state[q] = ColState::Upper;
                    } else {
                        self.x[q] = self.lb[q];
                        self.state[q] = ColState::Lower;
                    }
                }
            }
        }
        Err(LpError::IterationLimit)
    }

    fn infeasibility(&self, b: usize) -> f64 {
        let v = self.x[b];
        if v < self.lb[b] - FEAS_TOL {
            self.lb[b] - v
        } else if v > self.ub[b] + FEAS_TOL {
            v - self.ub[b]
        } else {
            0.0
        }
    }

    /// Dual simplex from a dual-feasible basis.
    fn dual(&mut self) -> Result<LpStatus, LpError> {
        let budget = self.iteration_budget();
        for _ in 0..budget {
            self.maybe_refactor()?;
            let bland = self.bland_mode();
            let mut leave = None;
            let mut worst = 0.0;
            for r in 0..self.m {
                let inf = self.infeasibility(self.basis[r]);
                if inf > 0.0 {
                    if bland {
                        if leave.is_none_or(|lr: usize| self.basis[r] < self.basis[lr]) {
                            leave = Some(r);
                        }
                    } else if inf > worst {
                        worst = inf;
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let b = self.basis[r];
            let below = self.x[b] < self.lb[b];
            let target = if below { self.lb[b] } else { self.ub[b] };
            let row = self.pivot_row(r);
            // below: need t_rj * dx_j < 0; above: t_rj * dx_j > 0.
            let want = if below { -1.0 } else { 1.0 };
            let eligible = |s: &Self, j: usize| -> Option<f64> {
                let a = row[j];
                if a.abs() <= PIVOT_TOL {
                    return None;
                }
                match s.state[j] {
                    ColState::Basic => None,
                    _ if s.ub[j] <= s.lb[j] => None,
                    ColState::Lower if a * want > 0.0 => Some(a),
                    ColState::Upper if a * want < 0.0 => Some(a),
                    ColState::Free => Some(a),
                    _ => None,
                }
            };
            let mut theta_max = f64::INFINITY;
            for j in 0..self.ncols {
                if let Some(a) = eligible(self, j) {
                    let lim = (self.d[j].abs() + OPT_TOL) / a.abs();
                    if lim < theta_max {
                        theta_max = lim;
                    }
                }
            }
            if theta_max.is_infinite() {
                let y = self.inverse_row(r);
                let y: Vec<f64> = (0..self.m).map(|i| self.dot(self.slack_of[i], &y)).collect();
                let ray = if below { y.iter().map(|v| -v).collect() } else { y };
                self.farkas = Some(ray);
                return Ok(LpStatus::Infeasible);
            }
            let mut enter = None;
            let mut best_alpha = 0.0;
            let mut best_ratio = f64::INFINITY;
            for j in 0..self.ncols {
                if let Some(a) = eligible(self, j) {
                    let ratio = self.d[j].abs() / a.abs();
                    if bland {
                        if ratio < best_ratio - 1e-12 {
                            best_ratio = ratio;
                            enter = Some(j);
                        }
                    } else if ratio <= theta_max && a.abs() > best_alpha {
                        best_alpha = a.abs();
                        enter = Some(j);
                    }
                }
            }
            let q = enter.expect("ratio test found a column");
            let col = self.column(q);
            if self.pivot_is_stale(col[r], row[q]) {
                self.refactor()?;
                continue;
            }
            if self.d[q].abs() <= 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            let delta = (self.x[b] - target) / col[r];
            self.x[q] += delta;
            for (k, &t) in col.iter().enumerate() {
                if t != 0.0 {
                    let bk = self.basis[k];
                    self.x[bk] -= t * delta;
                }
            }
            self.x[b] = target;
            self.state[b] = if below { ColState::Lower } else { ColState::Upper };
            self.pivot(r, q, &col, &row);
        }
        Err(LpError::IterationLimit)
    }

    fn is_dual_feasible(&self) -> bool {
        (0..self.ncols).all(|j| match self.state[j] {
            ColState::Basic => true,
            _ if self.ub[j] <= self.lb[j] => true,
            ColState::Lower => self.d[j] >= -OPT_TOL,
            ColState::Upper => self.d[j] <= OPT_TOL,
            ColState::Free => self.d[j].abs() <= OPT_TOL,
        })
    }

    fn is_primal_feasible(&self) -> bool {
        self.basis.iter().all(|&b| self.infeasibility(b) == 0.0)
    }

    fn phase_one_objective(&self) -> f64 {
        (0..self.ncols)
            .filter(|&j| matches!(self.kind[j], ColKind::Artificial(..)))
            .map(|j| self.x[j])
            .sum()
    }

    /// Cold solve: phase one from the logical basis, then phase two.
    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        self.cold_start();
        if self.phase == Phase::One {
            let st = self.primal()?;
            debug_assert_eq!(st, LpStatus::Optimal);
            self.refactor()?;
            let st = self.primal()?;
            debug_assert_eq!(st, LpStatus::Optimal);
            let scale = 1.0 + self.rows.iter().fold(0.0f64, |m, r| m.max(r.rhs.abs()));
            if self.phase_one_objective() > FEAS_TOL * scale {
                let ray: Vec<f64> = (0..self.m).map(|i| -self.d[self.slack_of[i]]).collect();
                self.farkas = Some(ray);
                return Ok(LpStatus::Infeasible);
            }
            self.drive_out_artificials();
            self.load_phase_two_costs();
            self.phase = Phase::Two;
            self.refactor()?;
        }
        let status = self.primal()?;
        if status == LpStatus::Optimal {
            self.polish()?;
        }
        Ok(status)
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            let b = self.basis[r];
            if !matches!(self.kind[b], ColKind::Artificial(..)) {
                continue;
            }
            let row = self.pivot_row(r);
            let mut best = None;
            let mut best_val = 1e-7;
            for (j, &v) in row.iter().enumerate() {
                if self.state[j] == ColState::Basic || matches!(self.kind[j], ColKind::Artificial(..)) {
                    continue;
                }
                if v.abs() > best_val {
                    best_val = v.abs();
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                // Degenerate: the artificial sits at zero.
                let col = self.column(q);
                self.x[b] = 0.0;
                self.state[b] = ColState::Lower;
                self.pivot(r, q, &col, &row);
            }
        }
        for j in 0..self.ncols {
            if matches!(self.kind[j], ColKind::Artificial(..)) {
                self.ub[j] = 0.0;
                self.lb[j] = 0.0;
                if self.state[j] != ColState::Basic {
                    self.x[j] = 0.0;
                    self.state[j] = ColState::Lower;
                }
            }
        }
    }

    /// Confirms the optimum against the original rows, rebuilding the inverse
    /// and re-optimising if it has drifted.
    fn polish(&mut self) -> Result<(), LpError> {
        if self.is_primal_feasible() && self.is_dual_feasible() && self.check_residuals().is_ok() {
            return Ok(());
        }
        self.refactor()?;
        for _ in 0..3 {
            if self.is_primal_feasible() && self.is_dual_feasible() {
                return self.check_residuals();
            }
            if !self.is_primal_feasible() {
                if self.is_dual_feasible() {
                    if self.dual()? == LpStatus::Infeasible {
                        return Err(LpError::Numerical("lost feasibility while polishing".into()));
                    }
                } else {
                    return Err(LpError::Numerical("basis neither primal nor dual feasible".into()));
                }
            } else if self.primal()? != LpStatus::Optimal {
                return Err(LpError::Numerical("unbounded while polishing".into()));
            }
            self.refactor()?;
        }
        Err(LpError::Numerical("could not certify optimum".into()))
    }

    fn check_residuals(&self) -> Result<(), LpError> {
        let xs = &self.x[..self.n];
        for (i, r) in self.rows.iter().enumerate() {
            let scale = 1.0 + r.rhs.abs() + r.coefs.iter().map(|&(j, a)| (a * xs[j]).abs()).sum::<f64>();
            if r.violation(xs) > 1e-6 * scale {
                return Err(LpError::Numerical(format!("row {i} violated after solve")));
            }
        }
        Ok(())
    }

    /// Re-solves after bound changes or appended rows, warm-starting from the
    /// current basis whenever it is still primal or dual feasible.
    pub fn reoptimize(&mut self) -> Result<LpStatus, LpError> {
        if self.phase != Phase::Two {
            return self.solve();
        }
        self.farkas = None;
        let attempt = (|| {
            if self.is_dual_feasible() {
                let st = self.dual()?;
                if st == LpStatus::Infeasible {
                    return Ok(st);
                }
                self.polish()?;
                Ok(LpStatus::Optimal)
            } else if self.is_primal_feasible() {
                let st = self.primal()?;
                if st == LpStatus::Optimal {
                    self.polish()?;
                }
                Ok(st)
            } else {
                Err(LpError::Numerical("no feasible starting basis".into()))
            }
        })();
        match attempt {
            Ok(st) => Ok(st),
            Err(LpError::Numerical(_)) => self.solve(),
            Err(e) => Err(e),
        }
    }

    pub fn snapshot(&self) -> Option<BasisSnapshot> {
        (self.phase == Phase::Two).then(|| BasisSnapshot {
            basis: self.basis.iter().map(|&b| b as u32).collect(),
            state: self.state.clone(),
        })
    }

    /// Reinstalls a basis saved from this solver under the current bounds.
    /// Rows appended since the snapshot enter with their logicals basic.
    pub fn restore(&mut self, snap: &BasisSnapshot) -> Result<(), LpError> {
        if self.phase != Phase::Two || snap.state.len() > self.ncols || snap.basis.len() > self.m {
            return Err(LpError::Numerical("snapshot does not fit this solver".into()));
        }
        self.state[..snap.state.len()].copy_from_slice(&snap.state);
        self.basis.clear();
        self.basis.extend(snap.basis.iter().map(|&b| b as usize));
        for i in snap.basis.len()..self.m {
            let s = self.slack_of[i];
            self.basis.push(s);
            self.state[s] = ColState::Basic;
        }
        for j in 0..self.ncols {
            let (lb, ub) = (self.lb[j], self.ub[j]);
            let (st, v) = match self.state[j] {
                ColState::Basic => continue,
                ColState::Lower if lb.is_finite() => (ColState::Lower, lb),
                ColState::Upper if ub.is_finite() => (ColState::Upper, ub),
                _ => Self::nonbasic_start(lb, ub),
            };
            self.state[j] = st;
            self.x[j] = v;
        }
        self.degenerate_run = 0;
        self.farkas = None;
        let res = self.refactor();
        if res.is_err() {
            self.cold_start();
        }
        res
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.struct_lb[j], self.struct_ub[j])
    }

    /// Changes the bounds of a structural variable, keeping the basis.
    pub fn set_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        assert!(j < self.n, "set_bounds on non-structural column");
        self.struct_lb[j] = lb;
        self.struct_ub[j] = ub;
        if self.phase == Phase::Unsolved || self.ncols == 0 {
            return;
        }
        self.lb[j] = lb;
        self.ub[j] = ub;
        if self.state[j] == ColState::Basic {
            return;
        }
        let dj = self.d[j];
        let (st, v) = if lb == ub || (dj >= 0.0 && lb.is_finite()) {
            (ColState::Lower, lb)
        } else if dj <= 0.0 && ub.is_finite() {
            (ColState::Upper, ub)
        } else {
            Self::nonbasic_start(lb, ub)
        };
        let delta = v - self.x[j];
        self.state[j] = st;
        self.x[j] = v;
        if delta != 0.0 {
            let col = self.column(j);
            for (r, &t) in col.iter().enumerate() {
                if t != 0.0 {
                    let b = self.basis[r];
                    self.x[b] -= t * delta;
                }
            }
        }
    }

    /// Appends a row; its logical column enters the basis.
    pub fn add_row(&mut self, row: Row) -> Result<usize, LpError> {
        let idx = self.rows.len();
        let row = super::normalize_row(row, self.n, idx)?;
        for &(j, a) in &row.coefs {
            self.struct_cols[j].push((idx, a));
        }
        self.rows.push(row.clone());
        if self.phase == Phase::Unsolved {
            self.cold_start();
            return Ok(idx);
        }
        let (slb, sub) = slack_bounds(row.sense);
        let s = self.push_column(ColKind::Slack(idx), slb, sub, 0.0);
        self.slack_of.push(s);
        self.m += 1;
        self.basis.push(s);
        self.state[s] = ColState::Basic;
        self.refactor()?;
        Ok(idx)
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub fn objective(&self) -> f64 {
        self.obj.iter().zip(&self.x[..self.n]).map(|(c, x)| c * x).sum()
    }

    pub fn duals(&self) -> Vec<f64> {
        (0..self.m).map(|i| -self.d[self.slack_of[i]]).collect()
    }

    pub fn reduced_costs(&self) -> Vec<f64> {
        self.d[..self.n].to_vec()
    }

    pub fn farkas(&self) -> Option<&[f64]> {
        self.farkas.as_deref()
    }

    /// Basic column per position, for determinism checks.
    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn solution(&self, status: LpStatus) -> LpSolution {
        let duals = if status == LpStatus::Optimal { self.duals() } else { vec![0.0; self.m] };
        let reduced_costs = if status == LpStatus::Optimal {
            self.reduced_costs()
        } else {
            vec![0.0; self.n]
        };
        let mut dual_objective: f64 = duals.iter().zip(&self.rows).map(|(y, r)| y * r.rhs).sum();
        if status == LpStatus::Optimal {
            for j in 0..self.n {
                if self.state[j] != ColState::Basic {
                    dual_objective += self.d[j] * self.x[j];
                }
            }
        }
        LpSolution {
            status,
            x: self.values().to_vec(),
            objective: self.objective(),
            duals,
            reduced_costs,
            dual_objective,
            farkas: if status == LpStatus::Infeasible { self.farkas.clone() } else { None },
        }
    }
}
