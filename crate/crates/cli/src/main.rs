//! `coolcn`: graph diagnostics and experiment runs from a JSON config.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 runtime error.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use coolcn::graph::{erdos_renyi, graph_stats, parse_edge_list, GraphTopology, DEFAULT_EXACT_LIMIT};
use coolcn::harness::report::{
    curve_series, curves_csv, dp_csv, svg_chart, sweep_csv, sweep_series, trajectory_csv, Series,
};
use coolcn::harness::{
    build_instance, dp_sweep, noise_seed, run_algorithm, run_figure1, run_figure2, run_private, score, summarize_sweep,
    Algorithm, CellResult, DpRow, ExperimentConfig, SweepSummary,
};
use coolcn::privacy::DpManifest;
use coolcn::Error;

use manifest::{mismatches, seed_tree, OutputSet, RunManifest};

const OUTPUT_ENV: &str = "COOLCN_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "coolcn", version, about = "Decentralized multitask online learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Independence, domination and twice-independence numbers of a graph.
    GraphStats(GraphArgs),
    /// Print the default config with every field materialized.
    Defaults,
    /// One experiment cell: first lambda, seed 0, every configured algorithm.
    Simulate(RunArgs),
    /// Regret against time at the sigma_bar operating point.
    Curves(RunArgs),
    /// Final regret over the lambda grid.
    Sweep(RunArgs),
    /// Private protocol against its baselines over the epsilon list.
    DpSweep(RunArgs),
    /// Re-execute a run from its manifest and check every output hash.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false, id = "source")]
struct GraphSource {
    #[arg(long, value_name = "N")]
    complete: Option<usize>,
    #[arg(long, value_name = "N")]
    path: Option<usize>,
    #[arg(long, value_name = "N")]
    cycle: Option<usize>,
    /// Erdos-Renyi graph: `--er N P`.
    #[arg(long, num_args = 2, value_names = ["N", "P"])]
    er: Option<Vec<String>>,
    /// Edge list file: header `n=<count>`, then one `i j` pair per line.
    #[arg(long, value_name = "FILE")]
    edges: Option<PathBuf>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    source: GraphSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest n for exact subset enumeration; bigger graphs get greedy bounds.
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the environment and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Horizon 150000 and 48 seeds.
    #[arg(long = "paper-scale")]
    full_scale: bool,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Unsupported(_) | Error::Parse { .. } | Error::GraphTooLarge { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::GraphStats(args) => cmd_graph_stats(&args),
        Command::Defaults => {
            println!("{}", serde_json::to_string_pretty(&ExperimentConfig::default())?);
            Ok(())
        }
        Command::Simulate(args) => with_config(&args, "simulate"),
        Command::Curves(args) => with_config(&args, "curves"),
        Command::Sweep(args) => with_config(&args, "sweep"),
        Command::DpSweep(args) => with_config(&args, "dp-sweep"),
        Command::Rerun { manifest, out } => cmd_rerun(&manifest, out),
    }
}

fn build_source_graph(src: &GraphSource, seed: u64) -> CliResult<GraphTopology> {
    let g = if let Some(n) = src.complete {
        GraphTopology::complete(n)?
    } else if let Some(n) = src.path {
        GraphTopology::path(n)?
    } else if let Some(n) = src.cycle {
        GraphTopology::cycle(n)?
    } else if let Some(er) = &src.er {
        let n: usize = er[0].parse().map_err(|_| CliError::Config(format!("--er: bad vertex count {:?}", er[0])))?;
        let p: f64 = er[1].parse().map_err(|_| CliError::Config(format!("--er: bad probability {:?}", er[1])))?;
        erdos_renyi(n, p, seed)?
    } else if let Some(path) = &src.edges {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        parse_edge_list(&text)?
    } else {
        unreachable!("clap enforces one graph source")
    };
    Ok(g)
}

#[derive(Serialize)]
struct GraphReport {
    n: usize,
    edges: usize,
    n_min: usize,
    n_max: usize,
    alpha: usize,
    gamma: usize,
    alpha2: usize,
    exact: bool,
    regular_degree: Option<usize>,
}

fn cmd_graph_stats(args: &GraphArgs) -> CliResult<()> {
    let g = build_source_graph(&args.source, args.seed)?;
    let st = graph_stats(&g, args.exact_limit);
    let r = GraphReport {
        n: g.n(),
        edges: g.edges().len(),
        n_min: g.n_min(),
        n_max: g.n_max(),
        alpha: st.alpha,
        gamma: st.gamma,
        alpha2: st.alpha2,
        exact: !st.approximate,
        regular_degree: st.is_regular,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&r)?);
        return Ok(());
    }
    let tag = if r.exact { "" } else { " (approx)" };
    println!("n {}", r.n);
    println!("edges {}", r.edges);
    println!("n_min {}", r.n_min);
    println!("n_max {}", r.n_max);
    println!("alpha {}{tag}", r.alpha);
    println!("gamma {}{tag}", r.gamma);
    println!("alpha2 {}{tag}", r.alpha2);
    if !r.exact {
        println!("note: n above the exact limit {}; values are greedy bounds", args.exact_limit);
    }
    match r.regular_degree {
        Some(k) => println!("regular {k}"),
        None => println!("regular no"),
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> CliResult<ExperimentConfig> {
    let Some(path) = path else { return Ok(ExperimentConfig::default()) };
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        CliError::Config(format!("{}: {}", if at == "." { "config" } else { &at }, e.inner()))
    })
}

fn output_dir(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("coolcn-out"))
}

fn with_config(args: &RunArgs, command: &str) -> CliResult<()> {
    let mut cfg = load_config(args.config.as_deref())?;
    if args.full_scale {
        cfg = cfg.full_scale();
    }
    cfg.validate()?;
    if args.dry_run {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let dir = output_dir(args.out.clone(), &cfg);
    let m = execute(command, &cfg, &dir)?;
    println!("wrote {} files and manifest.json to {}", m.outputs.len(), dir.display());
    Ok(())
}

fn cmd_rerun(path: &Path, out: Option<PathBuf>) -> CliResult<()> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let old: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    old.config.validate()?;
    let dir = out.unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join("rerun"));
    execute(&old.command, &old.config, &dir)?;
    let bad = mismatches(&old, &dir);
    if !bad.is_empty() {
        return Err(CliError::Runtime(format!("outputs differ from the manifest: {}", bad.join(", "))));
    }
    println!("reproduced {} files byte-identically in {}", old.outputs.len(), dir.display());
    Ok(())
}

fn execute(command: &str, cfg: &ExperimentConfig, dir: &Path) -> CliResult<RunManifest> {
    let mut out = OutputSet::new(dir)?;
    let mut manifest = RunManifest {
        tool: "coolcn".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: cfg.clone(),
        master_seed: cfg.master_seed,
        seed_tree: Vec::new(),
        dp: None,
        outputs: Vec::new(),
    };
    match command {
        "simulate" => {
            let dope = cfg.algorithms.contains(&Algorithm::Dope);
            manifest.seed_tree = seed_tree(cfg, 1, usize::from(dope));
            manifest.dp = simulate(cfg, &mut out)?;
        }
        "curves" => {
            manifest.seed_tree = seed_tree(cfg, cfg.seeds, 0);
            let r = run_figure1(cfg)?;
            out.write("cells.csv", &sweep_csv(&r.cells)?)?;
            out.write("curves.csv", &curves_csv(&r.curves)?)?;
            out.write("summary.json", &(serde_json::to_string_pretty(&r.curves)? + "\n"))?;
            let svg = svg_chart("Multitask regret over time", "t", "cumulative regret", &curve_series(&r.curves));
            out.write("curves.svg", &svg)?;
        }
        "sweep" => {
            manifest.seed_tree = seed_tree(cfg, cfg.seeds, 0);
            let cells = run_figure2(cfg)?;
            let summary = summarize_sweep(&cells);
            out.write("sweep.csv", &sweep_csv(&cells)?)?;
            out.write("summary.json", &(serde_json::to_string_pretty(&SweepReport { summary: &summary })? + "\n"))?;
            let svg =
                svg_chart("Final regret against task variance", "sigma_bar", "final regret", &sweep_series(&summary));
            out.write("sweep.svg", &svg)?;
        }
        "dp-sweep" => {
            manifest.seed_tree = seed_tree(cfg, cfg.seeds, cfg.noise_reps);
            let r = dp_sweep(cfg)?;
            out.write("dp_sweep.csv", &dp_csv(&r)?)?;
            let report = DpReport { lambda: r.lambda, rows: &r.rows, crossover_epsilon: r.crossover_epsilon };
            out.write("summary.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
            out.write(
                "dp_sweep.svg",
                &svg_chart("Regret against privacy level", "log10 epsilon", "final regret", &dp_series(&r.rows)),
            )?;
        }
        other => return Err(CliError::Config(format!("unknown command {other:?} in manifest"))),
    }
    Ok(out.finish(manifest)?)
}

#[derive(Serialize)]
struct SweepReport<'a> {
    summary: &'a [SweepSummary],
}

#[derive(Serialize)]
struct DpReport<'a> {
    lambda: f64,
    rows: &'a [DpRow],
    crossover_epsilon: Option<f64>,
}

#[derive(Serialize)]
struct SimulateReport {
    lambda: f64,
    seed_index: usize,
    sigma_bar: f64,
    cells: Vec<CellResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dp: Option<DpManifest>,
}

/// Finite epsilons only; the zero-noise row has no place on a log axis.
fn dp_series(rows: &[DpRow]) -> Vec<Series> {
    let finite: Vec<&DpRow> = rows.iter().filter(|r| r.epsilon.is_finite()).collect();
    let x: Vec<f64> = finite.iter().map(|r| r.epsilon.log10()).collect();
    let pick = |name: &str, f: fn(&DpRow) -> (f64, f64)| Series {
        name: name.into(),
        x: x.clone(),
        y: finite.iter().map(|r| f(r).0).collect(),
        se: finite.iter().map(|r| f(r).1).collect(),
    };
    vec![
        pick("dope", |r| (r.dope.mean, r.dope.se)),
        pick("i_ftrl", |r| (r.i_ftrl.mean, r.i_ftrl.se)),
        pick("cool_cn", |r| (r.cool_cn.mean, r.cool_cn.se)),
    ]
}

fn simulate(cfg: &ExperimentConfig, out: &mut OutputSet) -> CliResult<Option<DpManifest>> {
    let lambda = cfg.lambdas[0];
    let inst = build_instance(cfg, lambda, 0)?;
    let mut cells = Vec::new();
    let mut series = Vec::new();
    let mut dp = None;
    for &algo in &cfg.algorithms {
        let preds = if algo == Algorithm::Dope {
            let epsilon = cfg.epsilons.first().copied().unwrap_or(f64::INFINITY);
            let (preds, m) = run_private(cfg, &inst, epsilon, noise_seed(inst.cell_seed, 0))?;
            out.write("dp_manifest.json", &(serde_json::to_string_pretty(&m)? + "\n"))?;
            dp = Some(m);
            preds
        } else {
            run_algorithm(cfg, &inst, algo, f64::INFINITY, 0)?
        };
        let ledger = score(&inst, &preds)?;
        out.write(&format!("trajectory_{}.csv", algo.name()), &trajectory_csv(&ledger)?)?;
        let stride = (ledger.len() / cfg.curve_points.max(1)).max(1);
        let idx: Vec<usize> = (0..ledger.len()).filter(|t| (t + 1) % stride == 0 || t + 1 == ledger.len()).collect();
        series.push(Series {
            name: algo.name().into(),
            x: idx.iter().map(|&t| (t + 1) as f64).collect(),
            y: idx.iter().map(|&t| ledger.cumulative[t]).collect(),
            se: Vec::new(),
        });
        cells.push(CellResult {
            algo,
            seed: 0,
            lambda,
            sigma_bar: inst.profile.sigma_bar,
            stream_digest: inst.digest.clone(),
            final_regret: ledger.final_regret(),
        });
    }
    let report = SimulateReport { lambda, seed_index: 0, sigma_bar: inst.profile.sigma_bar, cells, dp: dp.clone() };
    out.write("summary.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    out.write("regret.svg", &svg_chart("Multitask regret", "t", "cumulative regret", &series))?;
    Ok(dp)
}
