//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion's outcome differs from the expected one.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use gaproute::bb::{BbOptions, CutFamily};
use gaproute::benders::{partial_rows, ubbc_solve_detailed, BendersRun, SubLpOutcome, Subproblem};
use gaproute::check::check_solution;
use gaproute::generate::{oracle_instance, synthesize, toy_instance};
use gaproute::instance::reference_bin_types;
use gaproute::lp::{solve_lp, LpModel, LpStatus, Row, Sense};
use gaproute::model::Layout;
use gaproute::oracle::{brute_force, OracleLimits};
use gaproute::preproc::preprocess;
use gaproute::report::{Method, Solution};
use gaproute::{Fixed, Instance, MethodSpec, SolveOptions, SolveReport, SolveStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot pass with the given data, with the reason.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    1,
    "two type-II bins cost 2 x 0.3172 = 0.6344, outside 0.64 +- 0.005",
)];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn solve(inst: &Instance, spec: MethodSpec, opts: &SolveOptions) -> SolveReport {
    gaproute::solve(inst, spec, opts).unwrap_or_else(|e| panic!("{} {spec}: {e}", inst.name))
}

fn front() -> Outcome {
    let caps = [1.10, 2.20, 2.40, 3.30, 3.50, 4.30, 4.80, 5.60];
    let costs = [0.11, 0.22, 0.32, 0.33, 0.43, 0.48, 0.64, 0.69];
    let start = Instant::now();
    let combos = preprocess(&reference_bin_types(), Fixed::from_f64(5.0)).unwrap();
    let elapsed = start.elapsed();
    if combos.len() != caps.len() {
        return outcome(false, format!("{} combinations instead of 8", combos.len()));
    }
    let mut bad = Vec::new();
    for (k, c) in combos.iter().enumerate() {
        if (c.capacity() - caps[k]).abs() > 0.005 || (c.cost() - costs[k]).abs() > 0.005 {
            bad.push(format!("id {k}: {:.4}/{:.2} vs {:.2}/{:.2}", c.cost(), c.capacity(), costs[k], caps[k]));
        }
    }
    let fast = elapsed < Duration::from_secs(1);
    let detail = if bad.is_empty() {
        format!("8 rows match, {elapsed:.2?}")
    } else {
        format!("{}; {elapsed:.2?}", bad.join(", "))
    };
    outcome(bad.is_empty() && fast, detail)
}

struct EquivalenceData {
    runs: Vec<(Instance, Solution, BendersRun)>,
}

fn equivalence_instances() -> Vec<Instance> {
    let mut out: Vec<Instance> = (0..12).map(|s| oracle_instance(s, 2)).collect();
    out.extend((100..112).map(|s| oracle_instance(s, 3)));
    // One GAP too heavy for its bins under the less frequent patterns.
    out.extend((200..204).map(|s| {
        let mut inst = oracle_instance(s, 2 + (s as usize % 2));
        inst.name = format!("heavy-{s}");
        inst.gaps[0].daily_generation = 3.2;
        inst.vehicle_capacity += 3.2;
        inst
    }));
    out
}

fn equivalence(data: &mut EquivalenceData) -> Outcome {
    let opts = SolveOptions::default();
    let mut pairs = 0;
    let mut feasible = 0;
    let mut slowest = Duration::ZERO;
    let mut problems = Vec::new();
    for inst in equivalence_instances() {
        let combos = inst.combinations_per_gap().unwrap();
        let truth = brute_force(&inst, &combos, OracleLimits::default()).unwrap();
        feasible += truth.is_some() as usize;
        for spec in MethodSpec::all() {
            let start = Instant::now();
            let (report, run) = match spec.method {
                Method::Mip => (solve(&inst, spec, &opts), None),
                Method::Benders => {
                    let run = ubbc_solve_detailed(&inst, spec, &opts).unwrap();
                    (run.report.clone(), Some(run))
                }
            };
            slowest = slowest.max(start.elapsed());
            pairs += 1;
            match (&truth, &report.solution) {
                (Some(t), Some(sol)) => {
                    if report.status != SolveStatus::Optimal || (sol.objective - t.objective).abs() > 1e-6 {
                        problems.push(format!("{} {spec}: {} vs {}", inst.name, sol.objective, t.objective));
                    }
                    let errs = check_solution(&inst, &combos, sol);
                    if !errs.is_empty() {
                        problems.push(format!("{} {spec}: {}", inst.name, errs.join("; ")));
                    }
                }
                (None, None) if report.status == SolveStatus::Infeasible => {}
                _ => problems.push(format!("{} {spec}: status {}", inst.name, report.status)),
            }
            if let (Some(t), Some(run)) = (&truth, run) {
                data.runs.push((inst.clone(), t.clone(), run));
            }
        }
    }
    let instances = equivalence_instances().len();
    let ok = problems.is_empty() && instances >= 20 && slowest < Duration::from_secs(60);
    let mut detail = format!(
        "{instances} instances ({feasible} feasible), {pairs} instance-method pairs, slowest {slowest:.2?}"
    );
    if !problems.is_empty() {
        detail.push_str(&format!("; {}", problems.join(", ")));
    }
    outcome(ok, detail)
}

/// The oracle optimum written in the master's allocation columns.
fn oracle_point(run: &BendersRun, sol: &Solution) -> (Vec<f64>, Vec<usize>) {
    let lay: &Layout = &run.layout;
    let mut x = vec![0.0; run.master.num_vars()];
    let mut cols = Vec::new();
    for (g, &r) in sol.visits.iter().enumerate() {
        x[lay.m(g, r)] = 1.0;
        cols.extend((0..lay.patterns).map(|r| lay.m(g, r)));
        if !lay.n_start.is_empty() {
            x[lay.n(g, sol.bins[g])] = 1.0;
            cols.extend((0..lay.n_len[g]).map(|u| lay.n(g, u)));
        }
    }
    let q = lay.q.unwrap();
    x[q] = sol.bin_cost;
    cols.push(q);
    cols.sort_unstable();
    (x, cols)
}

fn cut_safety(data: &EquivalenceData) -> Outcome {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut violations = Vec::new();
    for (inst, sol, run) in &data.runs {
        let (x, cols) = oracle_point(run, sol);
        let mut rows: Vec<(&str, Row)> = run
            .cuts
            .iter()
            .filter(|c| c.family != CutFamily::Exclusion)
            .map(|c| (c.family.name(), c.row.clone()))
            .collect();
        if run.report.method.contains("partial") {
            rows.extend(partial_rows(&run.master).into_iter().map(|r| ("partial", r)));
        }
        for (family, row) in rows {
            *counts.entry(family).or_default() += 1;
            let covered = row.coefs.iter().all(|(j, _)| cols.binary_search(j).is_ok());
            let v = row.violation(&x);
            if !covered || v > 1e-6 {
                violations.push(format!("{} {} {family}: {v:.3e}", inst.name, run.report.method));
            }
        }
    }
    let summary: Vec<String> = counts.iter().map(|(k, v)| format!("{v} {k}")).collect();
    let all_families = ["feasibility", "lshaped", "optimality", "partial"]
        .iter()
        .all(|f| counts.get(f).copied().unwrap_or(0) > 0);
    let mut detail = format!("{} checked, no violations", summary.join(", "));
    if !violations.is_empty() {
        detail = format!("{} violations: {}", violations.len(), violations.join(", "));
    } else if !all_families {
        detail.push_str("; some cut family never generated");
    }
    outcome(violations.is_empty() && all_families, detail)
}

fn gap_lp_model(caps: &[f64], costs: &[f64], demand: f64) -> LpModel {
    let mut m = LpModel::new();
    for (u, &c) in costs.iter().enumerate() {
        m.add_var(format!("n{u}"), 0.0, f64::INFINITY, c, false);
    }
    m.add_row("capacity", Row::new(caps.iter().copied().enumerate().collect(), Sense::Ge, demand))
        .unwrap();
    m.add_row("one", Row::new((0..caps.len()).map(|u| (u, 1.0)).collect(), Sense::Eq, 1.0))
        .unwrap();
    m
}

fn sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut instances: Vec<Instance> = (0..20).map(|s| oracle_instance(500 + s, 3)).collect();
    instances.extend((0..10).map(|s| synthesize("U/5/2", s).unwrap()));
    instances.extend((0..10).map(|s| synthesize("D/6/4/3", s).unwrap()));
    let mut samples = 0;
    let mut infeasible = 0;
    let mut gap_lps = 0;
    let mut worst_gap = 0.0f64;
    let mut problems = Vec::new();
    for inst in &instances {
        let combos = inst.combinations_per_gap().unwrap();
        let sub = Subproblem::new(inst, &combos);
        let patterns = inst.visit_combinations.len();
        for _ in 0..20 {
            let visits: Vec<usize> = (0..inst.gap_count()).map(|_| rng.random_range(0..patterns)).collect();
            samples += 1;
            let exact = sub.solve_int(&visits);
            let lp = match sub.solve_lp(&visits) {
                SubLpOutcome::Feasible(lp) => lp,
                SubLpOutcome::Infeasible(_) => {
                    infeasible += 1;
                    if exact.is_ok() {
                        problems.push(format!("{}: LP infeasible, integer feasible", inst.name));
                    }
                    continue;
                }
            };
            let Ok((int_value, _)) = exact else {
                problems.push(format!("{}: LP feasible, integer infeasible", inst.name));
                continue;
            };
            let (heuristic, _) = sub.heuristic_round(&lp);
            if lp.value > int_value + 1e-9 || int_value > heuristic + 1e-9 {
                problems.push(format!("{}: {} <= {} <= {} fails", inst.name, lp.value, int_value, heuristic));
            }
            for (g, &r) in visits.iter().enumerate() {
                let gs = &sub.gaps[g];
                let caps: Vec<f64> = (0..gs.len()).map(|u| gs.capacity(u)).collect();
                let costs: Vec<f64> = (0..gs.len()).map(|u| gs.cost(u)).collect();
                let demand = sub.demand(g, r);
                let s = solve_lp(&gap_lp_model(&caps, &costs, demand), false).unwrap();
                gap_lps += 1;
                if s.status != LpStatus::Optimal {
                    problems.push(format!("{}: GAP {g} LP {:?}", inst.name, s.status));
                    continue;
                }
                let closed = lp.delta[g] * demand + lp.gamma[g];
                let gap = (s.objective - s.dual_objective)
                    .abs()
                    .max((s.objective - closed).abs());
                worst_gap = worst_gap.max(gap);
                if gap > 1e-6 {
                    problems.push(format!("{}: GAP {g} duality gap {gap:.3e}", inst.name));
                }
            }
        }
    }
    let ok = problems.is_empty() && samples >= 500;
    let mut detail = format!(
        "{samples} samples ({infeasible} uncoverable), {gap_lps} per-GAP LPs, worst duality gap {worst_gap:.1e}"
    );
    if !problems.is_empty() {
        detail.push_str(&format!("; {}", problems.join(", ")));
    }
    outcome(ok, detail)
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    v[v.len() / 2]
}

/// Node counts with and without valid inequalities. Runs without them are
/// capped at the median count with them; a capped run contributes the cap
/// plus one, a lower bound on its true count.
fn vi_family(insts: &[Instance], with: MethodSpec, without: MethodSpec) -> Result<(u64, u64, usize, Vec<SolveReport>), String> {
    let opts = SolveOptions::default();
    let reports: Vec<SolveReport> = insts.iter().map(|i| solve(i, with, &opts)).collect();
    if let Some(r) = reports.iter().find(|r| r.status != SolveStatus::Optimal) {
        return Err(format!("{with} on {} ended {}", r.instance, r.status));
    }
    let vi_median = median(reports.iter().map(|r| r.stats.nodes).collect());
    let capped = SolveOptions {
        bb: BbOptions {
            node_limit: vi_median,
            ..Default::default()
        },
    };
    let mut capped_runs = 0;
    let mut counts = Vec::new();
    for (inst, vi) in insts.iter().zip(&reports) {
        let r = solve(inst, without, &capped);
        match r.status {
            SolveStatus::Dnf => {
                capped_runs += 1;
                counts.push(r.stats.nodes + 1);
            }
            _ => {
                if r.objective().zip(vi.objective()).is_some_and(|(a, b)| (a - b).abs() > 1e-6) {
                    return Err(format!("{without} and {with} disagree on {}", inst.name));
                }
                counts.push(r.stats.nodes);
            }
        }
    }
    Ok((vi_median, median(counts), capped_runs, reports))
}

fn suite() -> Vec<Instance> {
    (0..5).map(|s| synthesize("U/5/2/1", s).unwrap()).collect()
}

fn vi_nodes(suite: &[Instance], benders_vis: &mut Vec<SolveReport>) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    let families = [
        ("MIP", MethodSpec::mip(true), MethodSpec::mip(false)),
        ("Benders", MethodSpec::benders(true, false, false), MethodSpec::benders(false, false, false)),
    ];
    for (name, with, without) in families {
        match vi_family(suite, with, without) {
            Ok((vi, no_vi, capped, reports)) => {
                ok &= vi <= no_vi;
                parts.push(format!("{name} median {vi} with vs >= {no_vi} without ({capped} capped)"));
                if with.method == Method::Benders {
                    *benders_vis = reports;
                }
            }
            Err(e) => {
                ok = false;
                parts.push(e);
            }
        }
    }
    outcome(ok, format!("{} instances: {}", suite.len(), parts.join("; ")))
}

fn lshaped_post_processing(suite: &[Instance], without: &[SolveReport]) -> Outcome {
    if without.len() != suite.len() {
        return outcome(false, "no reference runs without L-shaped cuts");
    }
    let opts = SolveOptions::default();
    let with: Vec<SolveReport> = suite
        .iter()
        .map(|i| solve(i, MethodSpec::benders(true, false, true), &opts))
        .collect();
    if let Some(r) = with.iter().find(|r| r.status != SolveStatus::Optimal) {
        return outcome(false, format!("{} ended {}", r.instance, r.status));
    }
    let agree = with
        .iter()
        .zip(without)
        .all(|(a, b)| (a.objective().unwrap() - b.objective().unwrap()).abs() <= 1e-6);
    let total = |rs: &[SolveReport]| rs.iter().map(|r| r.stats.post_processing_iterations).sum::<u64>();
    let (a, b) = (total(&with), total(without));
    outcome(
        agree && a <= b,
        format!("post-processing iterations {a} with L-shaped cuts vs {b} without, objectives agree: {agree}"),
    )
}

fn toy_trace() -> Outcome {
    let inst = toy_instance();
    let combos = inst.combinations_per_gap().unwrap();
    let sub = Subproblem::new(&inst, &combos);
    let run = ubbc_solve_detailed(&inst, MethodSpec::benders(false, false, false), &SolveOptions::default()).unwrap();
    let Some(sol) = run.report.solution.clone() else {
        return outcome(false, format!("toy ended {}", run.report.status));
    };
    let mut problems = Vec::new();

    let open = run.pool.len();
    if open == 0 {
        problems.push("no open solution".to_string());
    }

    let mut heuristic_by_demand: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
    for row in &run.report.trace {
        if let Some(h) = row.heuristic {
            let demand = row.visits.iter().enumerate().map(|(g, &r)| sub.demand(g, r).to_bits()).collect();
            heuristic_by_demand.entry(demand).or_default().push(h);
        }
    }
    let repeated = heuristic_by_demand.values().filter(|h| h.len() > 1).count();
    if repeated == 0 {
        problems.push("no demand vector recurs across iterations".to_string());
    }
    if heuristic_by_demand.values().any(|h| h.iter().any(|&v| v != h[0])) {
        problems.push("heuristic allocation varies under fixed demands".to_string());
    }

    let mut seen = vec![false; open];
    for &(k, solved) in &run.post_processed {
        seen[k] = true;
        if solved && run.pool[k].lower > sol.objective + 1e-9 {
            problems.push(format!("pooled solution {k} above the incumbent was solved"));
        }
    }
    let skipped = run.post_processed.iter().filter(|p| !p.1).count();
    if seen.iter().any(|s| !s) {
        problems.push("pooled solution never considered".to_string());
    }

    let (bin_value, _) = sub.solve_int(&sol.visits).unwrap();
    if (sol.objective - (sol.routing_cost + bin_value)).abs() > 1e-9 || (sol.bin_cost - bin_value).abs() > 1e-9 {
        problems.push(format!("{} != {} + {}", sol.objective, sol.routing_cost, bin_value));
    }
    let truth = brute_force(&inst, &combos, OracleLimits::default()).unwrap().unwrap();
    if (truth.objective - sol.objective).abs() > 1e-6 || !check_solution(&inst, &combos, &sol).is_empty() {
        problems.push("final solution is not the verified optimum".to_string());
    }

    let detail = format!(
        "{} iterations, {open} open, {skipped} skipped in post-processing, {repeated} recurring demand vectors, objective {:.4} = {:.4} + {:.4}",
        run.report.trace.len(),
        sol.objective,
        sol.routing_cost,
        bin_value
    );
    if problems.is_empty() {
        outcome(true, detail)
    } else {
        outcome(false, format!("{detail}; {}", problems.join(", ")))
    }
}

fn determinism() -> Outcome {
    let opts = SolveOptions::default();
    let mut cases: Vec<(Instance, MethodSpec)> = Vec::new();
    for inst in [toy_instance(), oracle_instance(3, 3), oracle_instance(104, 3)] {
        cases.extend(MethodSpec::all().into_iter().map(|s| (inst.clone(), s)));
    }
    let big = synthesize("U/5/2/1", 2).unwrap();
    cases.push((big.clone(), MethodSpec::mip(true)));
    cases.push((big, MethodSpec::benders(true, false, true)));
    let mut differing = Vec::new();
    for (inst, spec) in &cases {
        let a = solve(inst, *spec, &opts);
        let b = solve(inst, *spec, &opts);
        if a.to_toml_string() != b.to_toml_string() || a.stats.nodes != b.stats.nodes {
            differing.push(format!("{} {spec}", inst.name));
        }
    }
    if differing.is_empty() {
        outcome(true, format!("{} solves repeated with identical reports", cases.len()))
    } else {
        outcome(false, format!("differing: {}", differing.join(", ")))
    }
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!(
            "criterion {n} {name}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };

    report(1, "combination front", front());
    let mut data = EquivalenceData { runs: Vec::new() };
    report(2, "three-way equivalence", equivalence(&mut data));
    report(3, "cut safety", cut_safety(&data));
    report(4, "sandwich", sandwich());
    let suite = suite();
    let mut benders_vis = Vec::new();
    report(5, "valid inequality node counts", vi_nodes(&suite, &mut benders_vis));
    report(6, "L-shaped post-processing", lshaped_post_processing(&suite, &benders_vis));
    report(7, "toy trace", toy_trace());
    report(8, "determinism", determinism());

    let mut unexpected = Vec::new();
    for (n, name, o) in &results {
        let known = KNOWN_FAILURES.iter().find(|k| k.0 == *n);
        match (o.pass, known) {
            (true, Some(_)) => unexpected.push(format!("criterion {n} {name} passed but is listed as a known failure")),
            (false, Some((_, why))) => println!("criterion {n} {name}: known failure: {why}"),
            (false, None) => unexpected.push(format!("criterion {n} {name} failed")),
            (true, None) => {}
        }
    }
    if !unexpected.is_empty() {
        for u in &unexpected {
            eprintln!("{u}");
        }
        std::process::exit(1);
    }
}
