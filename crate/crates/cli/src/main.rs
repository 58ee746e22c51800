use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use mcfusion::bench::{self, BenchConfig, Scenario};
use mcfusion::config::ConfigFile;
use mcfusion::datagen::{self, DatasetKind, DriftSchedule, TimeDirection};
use mcfusion::detect::{self, Direction, Transition};
use mcfusion::fusion::BetaMode;
use mcfusion::io;
use mcfusion::nml::ComplexityMode;
use mcfusion::pipeline::{analyze_series, Method, RunConfig};
use mcfusion::report;

/// Detect early signs of cluster-structure change with mixture complexity.
#[derive(Parser, Debug)]
#[command(name = "mcfusion", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic drift series as long-format CSV.
    Generate(GenerateArgs),
    /// Fit, score, detect and report on a panel series.
    Analyze(AnalyzeArgs),
    /// Sweep thresholds over an existing scores.csv.
    Evaluate(EvaluateArgs),
    /// Multi-seed study over the four synthetic structural changes.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// moving_overlap or moving_imbalance.
    #[arg(long, default_value = "moving_overlap")]
    dataset: DatasetKind,
    /// forward or reverse.
    #[arg(long = "time-direction", default_value = "forward")]
    time_direction: TimeDirection,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
}

impl DataArgs {
    fn schedule(&self, base: Option<DriftSchedule>) -> DriftSchedule {
        let mut s = base.unwrap_or_default();
        s.name = self.dataset;
        s.direction = self.time_direction;
        if let Some(v) = self.steps {
            s.steps = v;
        }
        if let Some(v) = self.points {
            s.points = v;
        }
        s
    }
}

/// Options shared by every command that runs the pipeline. Flags override the
/// config file, which overrides the defaults.
#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Transition-prior mass moved to neighbouring counts.
    #[arg(long)]
    alpha: Option<f64>,
    /// Posterior temperature: `inv_sqrt_n` or a number.
    #[arg(long)]
    beta: Option<BetaMode>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// increase, decrease or two_sided.
    #[arg(long)]
    direction: Option<Direction>,
    /// asymptotic_bic or exact_latent.
    #[arg(long)]
    nml_mode: Option<ComplexityMode>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Fresh restarts for fits that also start from the previous step's solution.
    #[arg(long)]
    warm_restarts: Option<usize>,
    /// Comma-separated subset of mc,mc_fusion,ddim,sdms,fs.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Known transition period as `start,end`.
    #[arg(long, value_parser = parse_transition)]
    transition: Option<Transition>,
}

impl RunArgs {
    fn file(&self) -> Result<ConfigFile> {
        match &self.config {
            Some(p) => ConfigFile::load(p).with_context(|| format!("reading config {}", p.display())),
            None => Ok(ConfigFile::default()),
        }
    }

    fn build(&self, file: &ConfigFile) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        file.apply(&mut cfg)?;
        if let Some(v) = self.seed {
            cfg.em.seed = v;
        }
        if let Some(v) = self.k_min {
            cfg.fusion.k_min = v;
        }
        if let Some(v) = self.k_max {
            cfg.fusion.k_max = v;
        }
        if let Some(v) = self.alpha {
            cfg.fusion.alpha = v;
        }
        if let Some(v) = self.beta {
            cfg.fusion.beta = v;
        }
        if let Some(v) = self.window {
            cfg.detector.window = v;
        }
        if let Some(v) = self.delta {
            cfg.detector.delta = v;
        }
        if let Some(v) = self.direction {
            cfg.detector.direction = v;
        }
        if let Some(v) = self.nml_mode {
            cfg.nml.mode = v;
        }
        if let Some(v) = self.restarts {
            cfg.em.restarts = v;
        }
        if let Some(v) = self.max_iter {
            cfg.em.max_iter = v;
        }
        if let Some(v) = self.warm_restarts {
            cfg.warm_restarts = Some(v);
        }
        if let Some(v) = &self.methods {
            cfg.methods = v.clone();
        }
        if let Some(v) = self.transition {
            cfg.transition = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_transition(s: &str) -> std::result::Result<Transition, String> {
    let bad = || format!("expected `start,end`, got '{s}'");
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let start = a.trim().parse().map_err(|_| bad())?;
    let end = b.trim().parse().map_err(|_| bad())?;
    Ok(Transition { start, end })
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Long-format panel CSV; without it a synthetic series is generated.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// A `t,method,value` table as written by `analyze`.
    #[arg(long)]
    scores: PathBuf,
    #[command(flatten)]
    run: RunArgs,
    /// Benefit horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// Comma-separated subset of split,merge,disappearance,emergence.
    #[arg(long, value_delimiter = ',')]
    scenarios: Option<Vec<Scenario>>,
    #[command(flatten)]
    run: RunArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let schedule = args.data.schedule(None);
    let panels = datagen::series(&schedule, args.seed)?;
    create_parent(&args.out)?;
    io::export_csv(&args.out, &panels)?;
    println!("wrote {} panels to {}", panels.len(), args.out.display());
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> Result<()> {
    let file = args.run.file()?;
    let mut cfg = args.run.build(&file)?;
    let panels = match &args.input {
        Some(p) => io::ingest_csv(p).with_context(|| format!("reading {}", p.display()))?,
        None => {
            let schedule = args.data.schedule(file.schedule);
            if cfg.transition.is_none() {
                cfg.transition = Some(Transition { start: schedule.transition_start, end: schedule.transition_end });
            }
            datagen::series(&schedule, cfg.em.seed)?
        }
    };
    let output = analyze_series(&panels, &cfg)?;
    let files = report::emit_report(&output, &args.out)?;
    println!("analyzed {} time steps; wrote {} files to {}", output.len(), files.len(), args.out.display());
    Ok(())
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let file = args.run.file()?;
    let cfg = args.run.build(&file)?;
    let Some(transition) = cfg.transition else {
        bail!("evaluate needs --transition start,end (or `transition` in the config)");
    };
    let table = io::read_scores_csv(&args.scores)?;
    let horizon = args.horizon.unwrap_or(cfg.benefit_horizon);
    let mut out = String::from("method,auc,delay,benefit,far\n");
    for (name, series) in &table {
        let method: Method = name.parse()?;
        let y: Vec<f64> = series.iter().map(|&(_, v)| method.detection_value(v)).collect();
        let e = detect::evaluate(&y, transition, horizon, &cfg.detector, &cfg.delta_grid)
            .with_context(|| format!("evaluating {name}"))?;
        let delay = e.delay.map(|d| d.to_string()).unwrap_or_default();
        out.push_str(&format!("{method},{},{delay},{},{}\n", e.auc, e.benefit, e.far));
    }
    match &args.out {
        Some(p) => {
            create_parent(p)?;
            std::fs::write(p, out).with_context(|| format!("writing {}", p.display()))?;
        }
        None => print!("{out}"),
    }
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let file = args.run.file()?;
    let run = args.run.build(&file)?;
    let cfg = BenchConfig {
        master_seed: run.em.seed,
        run,
        scenarios: args.scenarios.clone().unwrap_or_else(|| Scenario::ALL.to_vec()),
        seeds: args.seeds,
    };
    let result = bench::run_bench(&cfg)?;
    bench::write_bench(&result, &args.out)?;
    print!("{}", bench::summary_md(&result));
    Ok(())
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
