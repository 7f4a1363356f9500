use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use damt_core::{
    generate, run_adaptive_audited, run_naive, AnalysisConfig, AnalysisReport, Dataset, Direction,
    PipelineError, SimDesign, SimError,
};

use crate::io::{load_dataset, write_dataset, write_dataset_transposed, InputSpec, LoadError, TreatmentColumn};
use crate::report::{emit_plot_data, emit_report, format_g, write_fold_plan, write_fold_ranking, Format};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "damt", version, about = "Data-adaptive multiple testing of high-dimensional outcomes")]
struct Cli {
    /// Worker threads for screening and estimation [default: all cores]
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cross-validated screening, cross-fitted estimation and BH on the reduced set
    Analyze(AnalyzeArgs),
    /// Whole-sample estimation with BH over every outcome
    Naive(NaiveArgs),
    /// Write a simulated dataset
    Simulate(SimulateArgs),
    /// Repeat simulate, analyze and naive over seed, sigma and n grids
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Delimited input file
    #[arg(long)]
    input: PathBuf,
    /// Treatment column: header name or 0-based index
    #[arg(long, default_value = "0")]
    treatment_col: String,
    /// Input has one outcome per row (name first); needs --treatment-file
    #[arg(long)]
    transpose: bool,
    /// One 0/1 treatment value per line, for --transpose
    #[arg(long)]
    treatment_file: Option<PathBuf>,
    /// Field delimiter: a single ASCII character or "tab"
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
    /// Input has no header row
    #[arg(long)]
    no_header: bool,
}

impl InputArgs {
    fn spec(&self) -> Result<InputSpec, CliError> {
        match (self.transpose, &self.treatment_file) {
            (true, None) => return Err(CliError::Usage("--transpose requires --treatment-file".into())),
            (false, Some(_)) => return Err(CliError::Usage("--treatment-file requires --transpose".into())),
            _ => {}
        }
        Ok(InputSpec {
            path: self.input.clone(),
            delimiter: self.delimiter,
            treatment_column: TreatmentColumn::Name(self.treatment_col.clone()),
            transpose: self.transpose,
            treatment_file: self.treatment_file.clone(),
            has_header: !self.no_header,
        })
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Report file [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Delimited)]
    format: Format,
    /// Write `rank,adjusted_p` plot data here
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Number of cross-validation folds
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(2..))]
    folds: u32,
    /// Size of the reduced hypothesis set
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u32).range(1..))]
    top: u32,
    /// Screening direction: up, down or absolute
    #[arg(long, default_value_t = Direction::Absolute)]
    direction: Direction,
    /// FDR level
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    /// Fold assignment seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the fold plan and per-fold rankings here
    #[arg(long)]
    audit_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NaiveArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct DesignArgs {
    /// Number of true effects (outcomes y1..)
    #[arg(long, default_value_t = 10)]
    n_true: usize,
    /// Size of each true effect
    #[arg(long, default_value_t = 1.0)]
    effect: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1000)]
    p: usize,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[command(flatten)]
    design: DesignArgs,
    /// Noise standard deviation
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write one outcome per row; the treatment goes to --treatment-file
    #[arg(long)]
    transpose: bool,
    #[arg(long)]
    treatment_file: Option<PathBuf>,
    #[arg(long, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 100_000)]
    p: usize,
    /// Comma-separated sample sizes
    #[arg(long, value_delimiter = ',', default_value = "100")]
    n: Vec<usize>,
    /// Comma-separated noise levels
    #[arg(long, value_delimiter = ',', default_value = "0.1")]
    sigma: Vec<f64>,
    /// Number of seeds per grid point
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(2..))]
    folds: u32,
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u32).range(1..))]
    top: u32,
    #[arg(long, default_value_t = Direction::Absolute)]
    direction: Direction,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    /// Metrics table [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        _ => Err(format!("expected a single ASCII character, got {s:?}")),
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(a) if a > 0.0 && a < 1.0 => Ok(a),
        _ => Err(format!("expected a number in (0, 1), got {s:?}")),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on a data error, 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(usize::from(t));
    }
    let pool = pool.build()?;
    pool.install(|| match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Naive(a) => naive(a),
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
    })
}

/// Output files are written to temporaries beside their targets and moved
/// into place only once every output is complete.
#[derive(Default)]
struct Staged {
    files: Vec<(PathBuf, tempfile::NamedTempFile)>,
    stdout: Vec<u8>,
}

impl Staged {
    fn file(&mut self, target: &Path) -> Result<&mut tempfile::NamedTempFile, CliError> {
        let mut dir = match target.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        while !dir.exists() {
            dir = match dir.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
        }
        let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(target))?;
        self.files.push((target.to_path_buf(), tmp));
        Ok(&mut self.files.last_mut().expect("just pushed").1)
    }

    fn bytes(&mut self, target: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
        match target {
            Some(path) => self.file(path)?.write_all(bytes).map_err(io_err(path)),
            None => {
                self.stdout.extend_from_slice(bytes);
                Ok(())
            }
        }
    }

    fn commit(self) -> Result<(), CliError> {
        for (target, tmp) in self.files {
            if let Some(dir) = target.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(io_err(dir))?;
            }
            tmp.persist(&target).map_err(|e| CliError::Io {
                path: target,
                source: e.error,
            })?;
        }
        let mut out = std::io::stdout().lock();
        out.write_all(&self.stdout)
            .and_then(|_| out.flush())
            .map_err(io_err(Path::new("<stdout>")))
    }
}

fn emit(report: &AnalysisReport, output: &OutputArgs, staged: &mut Staged) -> Result<(), CliError> {
    staged.bytes(output.out.as_deref(), &emit_report(report, output.format))?;
    if let Some(path) = &output.plot_data {
        staged.bytes(Some(path), &emit_plot_data(report))?;
    }
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let spec = args.input.spec()?;
    let dataset = load_dataset(&spec)?;
    let config = AnalysisConfig {
        folds: args.folds as usize,
        p_star: args.top as usize,
        direction: args.direction,
        alpha: args.alpha,
        seed: args.seed,
    };

    let mut staged = Staged::default();
    let report = match &args.audit_dir {
        None => run_adaptive_audited(&dataset, &config, |_| {})?,
        Some(dir) => {
            let mut failure = None;
            let report = run_adaptive_audited(&dataset, &config, |fold| {
                if failure.is_some() {
                    return;
                }
                let path = dir.join(format!("fold_{:02}.csv", fold.fold));
                let result = staged.file(&path).and_then(|f| {
                    write_fold_ranking(fold, dataset.names(), f).map_err(|e| CliError::Io {
                        path: path.clone(),
                        source: e.into(),
                    })
                });
                failure = result.err();
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            let path = dir.join("folds.csv");
            let plan = report.fold_plan.as_ref().expect("adaptive reports carry a fold plan");
            write_fold_plan(plan, staged.file(&path)?).map_err(io_err(&path))?;
            report
        }
    };
    emit(&report, &args.output, &mut staged)?;
    staged.commit()
}

fn naive(args: NaiveArgs) -> Result<(), CliError> {
    let dataset = load_dataset(&args.input.spec()?)?;
    let report = run_naive(&dataset, args.alpha)?;
    let mut staged = Staged::default();
    emit(&report, &args.output, &mut staged)?;
    staged.commit()
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.transpose != args.treatment_file.is_some() {
        return Err(CliError::Usage("--transpose and --treatment-file go together".into()));
    }
    let sim = generate(&SimDesign {
        p: args.p,
        n: args.n,
        n_true: args.design.n_true,
        effect_size: args.design.effect,
        sigma_e: args.sigma,
        seed: args.seed,
    })?;
    let mut staged = Staged::default();
    write_simulated(&sim.dataset, &args, &mut staged)?;
    staged.commit()
}

fn write_simulated(dataset: &Dataset, args: &SimulateArgs, staged: &mut Staged) -> Result<(), CliError> {
    let csv_err = |path: &Path| {
        let path = path.to_path_buf();
        move |e: csv::Error| CliError::Io {
            path,
            source: e.into(),
        }
    };
    match &args.treatment_file {
        None => {
            let f = staged.file(&args.out)?;
            write_dataset(dataset, args.delimiter, std::io::BufWriter::new(f)).map_err(csv_err(&args.out))
        }
        Some(tpath) => {
            let t = staged.file(tpath)?.reopen().map_err(io_err(tpath))?;
            let f = staged.file(&args.out)?;
            write_dataset_transposed(
                dataset,
                args.delimiter,
                std::io::BufWriter::new(f),
                std::io::BufWriter::new(t),
            )
            .map_err(csv_err(&args.out))
        }
    }
}

/// One row of the sweep metrics table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub sigma: f64,
    pub n: usize,
    pub method: &'static str,
    pub true_positives: usize,
    pub rejections: usize,
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    if args.n.is_empty() || args.sigma.is_empty() || args.seeds == 0 {
        return Err(CliError::Usage("sweep needs at least one n, sigma and seed".into()));
    }
    let mut rows = Vec::new();
    for &n in &args.n {
        for &sigma in &args.sigma {
            for seed in args.first_seed..args.first_seed + args.seeds {
                let design = SimDesign {
                    p: args.p,
                    n,
                    n_true: args.design.n_true,
                    effect_size: args.design.effect,
                    sigma_e: sigma,
                    seed,
                };
                let config = AnalysisConfig {
                    folds: args.folds as usize,
                    p_star: args.top as usize,
                    direction: args.direction,
                    alpha: args.alpha,
                    seed,
                };
                rows.extend(sweep_point(&design, &config)?);
            }
        }
    }

    let pairs = rows.chunks(2).filter(|r| r[0].true_positives >= r[1].true_positives).count();
    eprintln!("adaptive >= naive true positives in {pairs}/{} runs", rows.len() / 2);

    let mut out = b"seed,sigma,n,method,true_positives,rejections\n".to_vec();
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.seed,
            format_g(r.sigma, 6),
            r.n,
            r.method,
            r.true_positives,
            r.rejections
        )
        .expect("in-memory write");
    }
    let mut staged = Staged::default();
    staged.bytes(args.out.as_deref(), &out)?;
    staged.commit()
}

/// Adaptive and naive metrics for one simulated dataset, in that order.
pub fn sweep_point(design: &SimDesign, config: &AnalysisConfig) -> Result<[SweepRow; 2], CliError> {
    let sim = generate(design)?;
    let adaptive = run_adaptive_audited(&sim.dataset, config, |_| {})?;
    let naive = run_naive(&sim.dataset, config.alpha)?;
    let row = |method, report: &AnalysisReport| {
        let hits: Vec<usize> = report.discoveries(config.alpha).map(|r| r.outcome).collect();
        SweepRow {
            seed: design.seed,
            sigma: design.sigma_e,
            n: design.n,
            method,
            true_positives: hits.iter().filter(|&&j| j < design.n_true).count(),
            rejections: hits.len(),
        }
    };
    Ok([row("adaptive", &adaptive), row("naive", &naive)])
}
