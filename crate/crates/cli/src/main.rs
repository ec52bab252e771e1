use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gaproute::bb::CutFamily;
use gaproute::check::check_solution;
use gaproute::generate::synthesize;
use gaproute::instance::{load_bin_types, reference_bin_types};
use gaproute::oracle::{brute_force, OracleLimits};
use gaproute::preproc::preprocess;
use gaproute::report::ReportStats;
use gaproute::{Fixed, Instance, MethodSpec, SolveOptions, SolveReport, SolveStatus};

const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "gaproute", version, about = "Bin allocation and periodic collection routing for GAPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Pareto-optimal bin combinations for a space budget.
    Preprocess {
        /// Bin catalogue (`[[bins]]` TOML); defaults to the reference types.
        #[arg(long)]
        bins: Option<PathBuf>,
        /// Available space in m².
        #[arg(long)]
        space: f64,
    },
    /// Solve one instance and write its report.
    Solve {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "mip")]
        method: String,
        #[arg(long)]
        vis: bool,
        #[arg(long)]
        lshaped: bool,
        #[arg(long)]
        partial: bool,
        #[command(flatten)]
        limits: Limits,
        /// Report path; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exhaustive optimum of a tiny instance.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 4)]
        max_gaps: usize,
        #[arg(long, default_value_t = 2)]
        max_days: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a method matrix over a suite and write per-run CSV.
    Bench {
        /// Directory of `.toml` instances.
        #[arg(long, conflicts_with = "generate")]
        instances: Option<PathBuf>,
        /// Generate instances of this shape instead, e.g. `U/5/2/1`.
        #[arg(long)]
        generate: Option<String>,
        #[arg(long, default_value_t = 5)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated method names such as `mip,mip+vis,benders+vis`.
        #[arg(long, default_value = "mip,mip+vis,benders,benders+vis")]
        methods: String,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[command(flatten)]
        limits: Limits,
        /// CSV path; stdout when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-validate a report's solution against its instance.
    Check {
        instance: PathBuf,
        report: PathBuf,
    },
}

#[derive(Args)]
struct Source {
    /// Instance file.
    #[arg(long, required_unless_present = "generate")]
    instance: Option<PathBuf>,
    /// Synthesize an instance of this shape instead.
    #[arg(long, conflicts_with = "instance")]
    generate: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct Limits {
    /// Wall-clock budget in seconds.
    #[arg(long, env = "GAPROUTE_TIME_LIMIT", default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: u64,
}

impl Source {
    fn load(&self) -> Result<Instance> {
        match (&self.instance, &self.generate) {
            (Some(path), _) => read_instance(path),
            (None, Some(shape)) => Ok(synthesize(shape, self.seed)?),
            (None, None) => bail!("either --instance or --generate is required"),
        }
    }
}

impl Limits {
    fn options(&self) -> Result<SolveOptions> {
        if !(self.time_limit.is_finite() && self.time_limit > 0.0) {
            bail!("time limit must be a positive number of seconds, got {}", self.time_limit);
        }
        let mut opts = SolveOptions::default();
        opts.bb.time_limit = Duration::from_secs_f64(self.time_limit);
        opts.bb.node_limit = self.node_limit;
        Ok(opts)
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    let inst = Instance::load(path).with_context(|| format!("reading instance {}", path.display()))?;
    for w in inst.capacity_warnings() {
        log::warn!("{}: {w}", path.display());
    }
    Ok(inst)
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run_preprocess(bins: Option<&Path>, space: f64) -> Result<u8> {
    let types = match bins {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            load_bin_types(&text)?
        }
        None => reference_bin_types(),
    };
    if !(space.is_finite() && space > 0.0) {
        bail!("space must be positive, got {space}");
    }
    let front = preprocess(&types, Fixed::from_f64(space))?;
    let mut out = String::from("id\tbins\tdaily_cost\tcapacity\tarea\n");
    for c in &front {
        let names: Vec<String> = c.type_sequence().iter().map(|t| t.to_string()).collect();
        out.push_str(&format!(
            "{}\t{}\t{:.4}\t{:.2}\t{:.2}\n",
            c.id,
            names.join("+"),
            c.cost(),
            c.capacity(),
            c.joint_area.to_f64()
        ));
    }
    emit(&out, None)?;
    Ok(0)
}

fn run_solve(inst: &Instance, spec: MethodSpec, opts: &SolveOptions, output: Option<&Path>) -> Result<u8> {
    let report = gaproute::solve(inst, spec, opts)?;
    emit(&report.to_toml_string(), output)?;
    log::info!("{} {}: {} {:?}", report.instance, report.method, report.status, report.objective());
    Ok(report.status.exit_code() as u8)
}

fn run_oracle(inst: &Instance, limits: OracleLimits, output: Option<&Path>) -> Result<u8> {
    let combos = inst.combinations_per_gap()?;
    let best = brute_force(inst, &combos, limits)?;
    let status = if best.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible };
    let report = SolveReport {
        instance: inst.name.clone(),
        method: "oracle".into(),
        status,
        solution: best,
        stats: ReportStats::default(),
        trace: Vec::new(),
    };
    emit(&report.to_toml_string(), output)?;
    Ok(status.exit_code() as u8)
}

fn run_check(instance: &Path, report: &Path) -> Result<u8> {
    let inst = read_instance(instance)?;
    let text = std::fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
    let report = SolveReport::from_toml_str(&text).with_context(|| format!("parsing {}", report.display()))?;
    let Some(sol) = &report.solution else {
        println!("no solution recorded (status {})", report.status);
        return Ok(report.status.exit_code() as u8);
    };
    let combos = inst.combinations_per_gap()?;
    let problems = check_solution(&inst, &combos, sol);
    if problems.is_empty() {
        println!("ok: objective {:.6}", sol.objective);
        Ok(0)
    } else {
        for p in &problems {
            println!("{p}");
        }
        Ok(1)
    }
}

fn bench_suite(instances: Option<&Path>, generate: Option<&str>, count: u64, seed: u64) -> Result<Vec<Instance>> {
    match (instances, generate) {
        (Some(dir), _) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                .with_context(|| format!("listing {}", dir.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "toml"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                bail!("no .toml instances in {}", dir.display());
            }
            paths.iter().map(|p| read_instance(p)).collect()
        }
        (None, Some(shape)) => (seed..seed + count).map(|s| Ok(synthesize(shape, s)?)).collect(),
        (None, None) => bail!("bench needs --instances or --generate"),
    }
}

const FAMILIES: [CutFamily; 4] = [
    CutFamily::Optimality,
    CutFamily::Feasibility,
    CutFamily::Lshaped,
    CutFamily::Exclusion,
];

fn run_bench(
    suite: &[Instance],
    methods: &[MethodSpec],
    runs: usize,
    opts: &SolveOptions,
    output: Option<&Path>,
) -> Result<u8> {
    let sink: Box<dyn Write> = match output {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout()),
    };
    let mut csv = csv::Writer::from_writer(sink);
    let mut header = vec![
        "instance",
        "method",
        "run",
        "status",
        "objective",
        "nodes",
        "master_iterations",
        "post_processing_iterations",
    ];
    let cut_cols: Vec<String> = FAMILIES.iter().map(|f| format!("cuts_{}", f.name())).collect();
    header.extend(cut_cols.iter().map(String::as_str));
    header.push("wall_seconds");
    csv.write_record(&header)?;

    let mut fastest: BTreeMap<(usize, usize), (f64, SolveStatus)> = BTreeMap::new();
    let mut worst = 0u8;
    for (i, inst) in suite.iter().enumerate() {
        for (k, &spec) in methods.iter().enumerate() {
            for run in 1..=runs {
                let start = Instant::now();
                let report = gaproute::solve(inst, spec, opts)?;
                let secs = start.elapsed().as_secs_f64();
                let mut row = vec![
                    inst.name.clone(),
                    spec.to_string(),
                    run.to_string(),
                    report.status.to_string(),
                    report.objective().map(|v| format!("{v:.6}")).unwrap_or_default(),
                    report.stats.nodes.to_string(),
                    report.stats.master_iterations.to_string(),
                    report.stats.post_processing_iterations.to_string(),
                ];
                for f in FAMILIES {
                    row.push(report.stats.cuts.get(f.name()).copied().unwrap_or(0).to_string());
                }
                row.push(format!("{secs:.6}"));
                csv.write_record(&row)?;
                csv.flush()?;
                let e = fastest.entry((i, k)).or_insert((secs, report.status));
                e.0 = e.0.min(secs);
                worst = worst.max(report.status.exit_code() as u8);
            }
        }
    }
    csv.flush()?;
    for ((i, k), (secs, status)) in fastest {
        eprintln!("{}\t{}\t{}\tmin {:.3}s", suite[i].name, methods[k], status, secs);
    }
    Ok(worst)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Preprocess { bins, space } => run_preprocess(bins.as_deref(), space),
        Command::Solve {
            source,
            method,
            vis,
            lshaped,
            partial,
            limits,
            output,
        } => {
            let mut spec: MethodSpec = method.parse()?;
            spec.vis |= vis;
            if lshaped || partial {
                if spec.method == gaproute::report::Method::Mip {
                    bail!("--lshaped and --partial apply to the benders method only");
                }
                spec.lshaped |= lshaped;
                spec.partial |= partial;
            }
            let opts = limits.options()?;
            run_solve(&source.load()?, spec, &opts, output.as_deref())
        }
        Command::Oracle {
            source,
            max_gaps,
            max_days,
            output,
        } => run_oracle(&source.load()?, OracleLimits { max_gaps, max_days }, output.as_deref()),
        Command::Bench {
            instances,
            generate,
            count,
            seed,
            methods,
            runs,
            limits,
            output,
        } => {
            if runs == 0 {
                bail!("--runs must be at least 1");
            }
            let specs = methods
                .split(',')
                .map(|m| m.trim().parse::<MethodSpec>())
                .collect::<gaproute::Result<Vec<_>>>()?;
            let suite = bench_suite(instances.as_deref(), generate.as_deref(), count, seed)?;
            run_bench(&suite, &specs, runs, &limits.options()?, output.as_deref())
        }
        Command::Check { instance, report } => run_check(&instance, &report),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
