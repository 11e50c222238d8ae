use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use algomarket::analysis::{
    backtest, emit_report, run_experiment, ExperimentConfig, ReportFormat, Window,
};
use algomarket::baselines::isolate_tail;
use algomarket::ca;
use algomarket::distributions::{
    build_distribution_labeled, complexity_estimate, ranked_view, spearman, Support,
    TupleDistribution,
};
use algomarket::market::{encode_directions, ingest_csv, DirectionSeries, DEFAULT_QUANTUM};
use algomarket::tm::{
    busy_beaver_steps, load_completed, merge_checkpoints, run_shard, symmetry_violations,
    write_checkpoint, EnumerationJob, Mode, Shard,
};
use algomarket::{Error, Result, VERSION};

/// Tuple-frequency experiments on price-direction series.
#[derive(Debug, Parser)]
#[command(name = "algomarket", version)]
struct Cli {
    /// Worker threads; defaults to the available hardware parallelism.
    #[arg(long, global = true, env = "ALGOMARKET_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a price CSV into a binary direction series.
    Encode(EncodeArgs),
    /// Build tuple distributions from a direction series or price CSV.
    Dist(DistArgs),
    /// Enumerate or sample Turing machines into output distributions.
    TmEnum(TmEnumArgs),
    /// Sample 4-color totalistic automata into a tuple distribution.
    CaSample(CaSampleArgs),
    /// Spearman correlation of two distribution files.
    Compare(CompareArgs),
    /// Correlation matrices for an experiment config.
    Matrix(MatrixArgs),
    /// Correlation matrices per date window.
    Backtest(BacktestArgs),
    /// Rule-90 toy price series.
    Rule90(Rule90Args),
    /// Isolate long-tail price changes beyond a fitted normal.
    Tail(TailArgs),
}

#[derive(Debug, Args, Serialize)]
struct EncodeArgs {
    csv: PathBuf,
    #[arg(long, default_value_t = DEFAULT_QUANTUM, env = "ALGOMARKET_QUANTUM")]
    quantum: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct DistArgs {
    /// Direction series JSON (from `encode`) or a price CSV.
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    lengths: Vec<usize>,
    /// Quantum used when the input is a price CSV.
    #[arg(long, default_value_t = DEFAULT_QUANTUM, env = "ALGOMARKET_QUANTUM")]
    quantum: f64,
    /// json, or csv (single length only).
    #[arg(long, default_value = "json")]
    format: String,
    /// Print the ranked view with complexity estimates to standard error.
    #[arg(long)]
    ranked: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TmEnumArgs {
    #[arg(long)]
    states: usize,
    /// `exhaustive` or `sample:COUNT[:seed=SEED]`.
    #[arg(long, default_value = "exhaustive")]
    mode: String,
    /// Defaults to the Busy Beaver step maximum for the state count.
    #[arg(long)]
    step_bound: Option<u64>,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8,9,10")]
    lengths: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    shards: u64,
    /// Run only this shard; otherwise all missing shards run and are merged.
    #[arg(long)]
    shard_index: Option<u64>,
    /// Checkpoint directory; the merged result is written to
    /// `distribution.json` inside it.
    #[arg(long, env = "ALGOMARKET_OUT")]
    out: PathBuf,
    /// Allow exhaustive enumeration above 3 states.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args, Serialize)]
struct CaSampleArgs {
    #[arg(long, default_value_t = ca::DEFAULT_SAMPLE)]
    count: usize,
    #[arg(long, default_value_t = ca::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = 0, env = "ALGOMARKET_SEED")]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7,8,9,10")]
    lengths: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the first sampled rule's evolution as a PGM image.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    a: PathBuf,
    b: PathBuf,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value = "intersection")]
    support: String,
}

#[derive(Debug, Args, Serialize)]
struct MatrixArgs {
    #[arg(long, env = "ALGOMARKET_CONFIG")]
    config: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Output directory; reports go to standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct BacktestArgs {
    #[arg(long, env = "ALGOMARKET_CONFIG")]
    config: PathBuf,
    /// Comma-separated `START:END` date windows.
    #[arg(long, value_delimiter = ',', required = true)]
    windows: Vec<String>,
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct Rule90Args {
    #[arg(long, default_value_t = 100)]
    width: usize,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0, env = "ALGOMARKET_SEED")]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
struct TailArgs {
    csv: PathBuf,
    #[arg(long, default_value_t = DEFAULT_QUANTUM)]
    bin_width: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn metadata(command: &str, config: &impl Serialize) -> serde_json::Value {
    json!({
        "tool": "algomarket",
        "version": VERSION,
        "command": command,
        "config": config,
    })
}

fn write_output(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(path, contents).map_err(|e| Error::io(path, e))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn to_json(value: &impl Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn encode(args: &EncodeArgs) -> Result<()> {
    let prices = ingest_csv(&args.csv)?;
    let series = encode_directions(&prices, args.quantum)?;
    let mut doc = serde_json::to_value(&series)?;
    doc["metadata"] = metadata("encode", args);
    write_output(args.out.as_deref(), &to_json(&doc)?)
}

fn load_directions(path: &Path, quantum: f64) -> Result<DirectionSeries> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        encode_directions(&ingest_csv(path)?, quantum)
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn dist(args: &DistArgs) -> Result<()> {
    let series = load_directions(&args.input, args.quantum)?;
    let label = format!("market:{}:q={}", series.symbol, series.quantum);
    let mut distributions = BTreeMap::new();
    for &n in &args.lengths {
        distributions.insert(
            n,
            build_distribution_labeled(&series.bits, n, label.clone())?,
        );
    }
    if args.ranked {
        for d in distributions.values() {
            let mut err = std::io::stderr().lock();
            for (tuple, p) in ranked_view(d)?.entries {
                let k = complexity_estimate(d, &tuple)?;
                let _ = writeln!(err, "{tuple}\t{p:.5}\t{k:.3}");
            }
        }
    }
    let body = match args.format.as_str() {
        "json" => to_json(&json!({
            "metadata": metadata("dist", args),
            "distributions": distributions,
        }))?,
        "csv" => match distributions.values().collect::<Vec<_>>().as_slice() {
            [d] => d.to_csv(),
            _ => {
                return Err(Error::InvalidArgument(
                    "csv output needs exactly one length".into(),
                ))
            }
        },
        other => return Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
    };
    write_output(args.out.as_deref(), &body)
}

fn tm_enum(args: &TmEnumArgs) -> Result<()> {
    let mode: Mode = args.mode.parse()?;
    let step_bound = match args.step_bound {
        Some(b) => b,
        None => busy_beaver_steps(args.states).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "--step-bound is required for {} states",
                args.states
            ))
        })?,
    };
    let base = EnumerationJob {
        n_states: args.states,
        step_bound,
        mode,
        shard: Shard::WHOLE,
        force: args.force,
    };
    // surfaces the budget guard before any shard runs
    base.work_len()?;
    let shard_ids: Vec<u64> = match args.shard_index {
        Some(i) => vec![Shard::new(i, args.shards)?.index],
        None => {
            Shard::new(0, args.shards)?;
            (0..args.shards).collect()
        }
    };
    let mut parts = Vec::new();
    for i in shard_ids {
        let job = base.with_shard(Shard::new(i, args.shards)?);
        let cp = match load_completed(&args.out, &job, &args.lengths) {
            Some(cp) => {
                eprintln!("shard {}/{}: already complete", i + 1, args.shards);
                cp
            }
            None => {
                let cp = run_shard(&job, &args.lengths)?;
                let path = write_checkpoint(&args.out, &cp)?;
                eprintln!(
                    "shard {}/{}: {} runs, {} halted -> {}",
                    i + 1,
                    args.shards,
                    cp.runs,
                    cp.halted,
                    path.display()
                );
                cp
            }
        };
        parts.push(cp);
    }
    if args.shard_index.is_some() {
        return Ok(());
    }
    let merged = merge_checkpoints(&parts)?;
    let mut violations = BTreeMap::new();
    for (n, d) in &merged.distributions {
        violations.insert(*n, symmetry_violations(d));
    }
    let total_violations: usize = violations.values().map(|(c, r)| c + r).sum();
    if merged.job.mode == Mode::Exhaustive {
        eprintln!(
            "symmetry self-check: {}",
            if total_violations == 0 {
                "ok".to_string()
            } else {
                format!("{total_violations} violations")
            }
        );
    }
    let doc = json!({
        "metadata": metadata("tm-enum", args),
        "job": merged.job,
        "runs": merged.runs,
        "halted": merged.halted,
        "symmetry_violations": violations
            .iter()
            .map(|(n, (c, r))| (n.to_string(), json!({"complement": c, "reverse": r})))
            .collect::<serde_json::Map<_, _>>(),
        "distributions": merged.distributions,
    });
    let path = args.out.join("distribution.json");
    write_output(Some(&path), &to_json(&doc)?)?;
    println!("{}", path.display());
    if merged.job.mode == Mode::Exhaustive && total_violations > 0 {
        return Err(Error::Check(
            "exhaustive run failed the symmetry self-check".into(),
        ));
    }
    Ok(())
}

fn ca_sample(args: &CaSampleArgs) -> Result<()> {
    let distributions = ca::sample_distribution(args.count, args.steps, &args.lengths, args.seed)?;
    if let Some(pgm) = &args.pgm {
        let code = ca::draw_rules(1, args.seed)[0];
        let mut evo = ca::evolve(
            ca::TotalisticRule::new(code)?,
            &ca::random_initial(args.seed),
            args.steps,
        )?;
        evo.seed = Some(args.seed);
        let mut file = std::fs::File::create(pgm).map_err(|e| Error::io(pgm, e))?;
        ca::write_pgm(&evo, &mut file).map_err(|e| Error::io(pgm, e))?;
    }
    let doc = json!({
        "metadata": metadata("ca-sample", args),
        "distributions": distributions,
    });
    write_output(args.out.as_deref(), &to_json(&doc)?)
}

/// Reads a distribution of length `n` from a document with a
/// `distributions` map, a bare distribution JSON, or a distribution CSV.
fn load_distribution(path: &Path, n: usize) -> Result<TupleDistribution> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label = path.display().to_string();
    let d = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        TupleDistribution::from_csv(&text, label)?
    } else {
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("distributions") {
            Some(map) => {
                let d = map.get(n.to_string()).ok_or_else(|| {
                    Error::MissingArtifact(format!("{label}: no distribution for length {n}"))
                })?;
                serde_json::from_value(d.clone())?
            }
            None => serde_json::from_value(value)?,
        }
    };
    if d.tuple_length() != n {
        return Err(Error::LengthMismatch {
            left: d.tuple_length(),
            right: n,
        });
    }
    Ok(d)
}

fn compare(args: &CompareArgs) -> Result<()> {
    let support: Support = args.support.parse()?;
    let a = load_distribution(&args.a, args.length)?;
    let b = load_distribution(&args.b, args.length)?;
    let report = spearman(&a, &b, support)?;
    let doc = json!({
        "metadata": metadata("compare", args),
        "report": report,
        "cell": algomarket::analysis::format_cell(&report),
    });
    write_output(None, &to_json(&doc)?)
}

fn write_reports(
    files: &[algomarket::analysis::ReportFile],
    out: Option<&Path>,
    prefix: &str,
) -> Result<()> {
    for f in files {
        match out {
            Some(dir) => write_output(Some(&dir.join(format!("{prefix}{}", f.name))), &f.contents)?,
            None => write_output(None, &f.contents)?,
        }
    }
    Ok(())
}

fn matrix(args: &MatrixArgs) -> Result<()> {
    let format: ReportFormat = args.format.parse()?;
    let cfg = ExperimentConfig::load(&args.config)?;
    let matrices = run_experiment(&cfg)?;
    let files = emit_report(&matrices, format)?;
    write_reports(&files, args.out.as_deref(), "")?;
    if let Some(dir) = &args.out {
        let run =
            json!({ "metadata": metadata("matrix", &json!({ "args": args, "resolved": cfg })) });
        write_output(Some(&dir.join("run.json")), &to_json(&run)?)?;
    }
    Ok(())
}

fn backtest_cmd(args: &BacktestArgs) -> Result<()> {
    let format: ReportFormat = args.format.parse()?;
    let cfg = ExperimentConfig::load(&args.config)?;
    let windows = args
        .windows
        .iter()
        .map(|w| w.parse())
        .collect::<Result<Vec<Window>>>()?;
    let results = backtest(&cfg, &windows)?;
    for (i, r) in results.iter().enumerate() {
        let files = emit_report(&r.matrices, format)?;
        let prefix = format!("w{i:02}_{}_{}_", r.window.start, r.window.end);
        if args.out.is_none() {
            println!("## {}\n", r.window);
        }
        write_reports(&files, args.out.as_deref(), &prefix)?;
    }
    if let Some(dir) = &args.out {
        let summary: Vec<_> = results
            .iter()
            .map(|r| json!({ "window": r.window, "markets": r.markets, "warnings": r.warnings }))
            .collect();
        let run = json!({
            "metadata": metadata("backtest", &json!({ "args": args, "resolved": cfg })),
            "windows": summary,
        });
        write_output(Some(&dir.join("run.json")), &to_json(&run)?)?;
    }
    Ok(())
}

fn rule90(args: &Rule90Args) -> Result<()> {
    let values = ca::rule90_price_series(args.width, args.steps, args.seed)?;
    let body: String = values.iter().map(|v| format!("{v}\n")).collect();
    write_output(args.out.as_deref(), &body)
}

fn tail(args: &TailArgs) -> Result<()> {
    let prices = ingest_csv(&args.csv)?;
    let report = isolate_tail(&prices.changes(), args.bin_width)?;
    eprintln!(
        "fitted mean {:.6}, std {:.6}, {} tail bins",
        report.fitted_mean,
        report.fitted_std,
        report.tail_bins().count()
    );
    write_output(args.out.as_deref(), &report.to_csv())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => 1,
        Error::BudgetGuard(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Encode(a) => encode(a),
        Command::Dist(a) => dist(a),
        Command::TmEnum(a) => tm_enum(a),
        Command::CaSample(a) => ca_sample(a),
        Command::Compare(a) => compare(a),
        Command::Matrix(a) => matrix(a),
        Command::Backtest(a) => backtest_cmd(a),
        Command::Rule90(a) => rule90(a),
        Command::Tail(a) => tail(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
