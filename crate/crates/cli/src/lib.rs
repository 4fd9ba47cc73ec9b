//! Subcommands of the `lmpc-hr` tool: sampling, benchmarking, validation,
//! plot data export and a dump of the condensed constraints.

pub mod dataset;
pub mod problem_file;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lmpc_hr::samplers::{run_benchmark, run_method, ChainConfig, RunReport, DEFAULT_EPSILON};
use lmpc_hr::validate::{build_grid_oracle, uniformity_test};
use lmpc_hr::{condense, Method, MpcProblem, RowLabel};
use serde_json::json;

use crate::dataset::{
    number, read_manifest, read_states, rejections_csv, samples_csv, write_file, RunManifest, MANIFEST_FILE,
    REJECTIONS_FILE, SAMPLES_FILE,
};
use crate::problem_file::{load_problem, LoadedProblem};

pub use problem_file::{parse_problem, ProblemFile};

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input.
    Input(String),
    /// Problem data that parses but fails validation.
    Invalid(lmpc_hr::Error),
    /// Sampler or solver error.
    Run(lmpc_hr::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Invalid(_) => 2,
            CliError::Run(_) | CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "INPUT_ERROR: {msg}"),
            CliError::Invalid(e) | CliError::Run(e) => write!(f, "{}: {e}", e.name()),
            CliError::Io(msg) => write!(f, "IO_ERROR: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn run_err(e: lmpc_hr::Error) -> CliError {
    match e {
        lmpc_hr::Error::InvalidArgument(_) => CliError::Input(format!("{}: {e}", e.name())),
        e => CliError::Run(e),
    }
}

#[derive(Debug, Parser)]
#[command(name = "lmpc-hr", version, about = "Uniform sampling of MPC feasible sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a labeled dataset with one method.
    Sample(SampleArgs),
    /// Run all four methods and compare their solver queries.
    Benchmark(BenchmarkArgs),
    /// Chi-square uniformity test of a dataset against a grid oracle.
    Validate(ValidateArgs),
    /// Export scatter data (feasible and rejected draws) for plotting.
    PlotData(PlotDataArgs),
    /// Print the condensed constraint matrices as JSON or CSV.
    CondenseDump(CondenseDumpArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Number of samples to emit.
    #[arg(long = "n", default_value_t = 1000)]
    pub n_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Unrecorded leading chain steps. Defaults to 0 so that query counts
    /// are directly comparable across methods.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thinning: usize,
    /// BS-HR bracket width.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub boundary_margin: f64,
    /// Comma-separated starting state (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x_init: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

impl ChainArgs {
    fn config(&self, p: &MpcProblem) -> ChainConfig {
        let mut cfg = ChainConfig::new(self.x_init.clone().unwrap_or_else(|| vec![0.0; p.nx()]));
        cfg.seed = self.seed;
        cfg.n_samples = self.n_samples;
        cfg.burn_in = self.burn_in;
        cfg.thinning = self.thinning;
        cfg.boundary_margin = self.boundary_margin;
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct SampleArgs {
    #[arg(long, default_value = "lmpc-hr")]
    pub method: Method,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Dataset directory or samples CSV file.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub resolution: usize,
    #[arg(long, default_value_t = 16)]
    pub cells: usize,
    /// Where to write the JSON report (default: printed to stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotDataArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Dataset directories written by `sample` or `benchmark`; repeatable.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CondenseDumpArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_enum, default_value_t = DumpFormat::Json)]
    pub format: DumpFormat,
    /// Write to a file instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// `json` holds every matrix; `csv` has one line per condensed row with its
/// `G`, `F` and `w` entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DumpFormat {
    Json,
    Csv,
}

/// Executes one subcommand, writing human-readable output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Sample(a) => cmd_sample(&a, out),
        Command::Benchmark(a) => cmd_benchmark(&a, out),
        Command::Validate(a) => cmd_validate(&a, out),
        Command::PlotData(a) => cmd_plot_data(&a, out),
        Command::CondenseDump(a) => cmd_condense_dump(&a, out),
    }
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_dataset(
    dir: &Path,
    loaded: &LoadedProblem,
    cfg: &ChainConfig,
    epsilon: f64,
    report: &RunReport,
) -> Result<RunManifest, CliError> {
    create_dir(dir)?;
    let p = &loaded.problem;
    write_file(&dir.join(SAMPLES_FILE), &samples_csv(&report.samples, p.nx(), p.nu()))?;
    if !report.rejected_draws.is_empty() {
        write_file(&dir.join(REJECTIONS_FILE), &rejections_csv(&report.rejected_draws, p.nx()))?;
    }
    let manifest = RunManifest::new(&loaded.sha256, cfg, epsilon, report);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(MANIFEST_FILE), &text)?;
    Ok(manifest)
}

pub fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_problem(&a.chain.problem)?;
    let cfg = a.chain.config(&loaded.problem);
    let report = run_method(&loaded.problem, &cfg, a.method, a.chain.epsilon).map_err(run_err)?;
    write_dataset(&a.chain.out, &loaded, &cfg, a.chain.epsilon, &report)?;
    say(
        out,
        &format!(
            "{}: {} samples, {} sampling queries ({:.3}/sample), {} rejections, {:.2} s\n",
            report.method.label(),
            report.samples.len(),
            report.sampling_queries,
            report.cost_per_sample(),
            report.rejections,
            report.wall_time
        ),
    )
}

pub fn cmd_benchmark(a: &BenchmarkArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_problem(&a.chain.problem)?;
    let cfg = a.chain.config(&loaded.problem);
    let bench = run_benchmark(&loaded.problem, &cfg, a.chain.epsilon).map_err(run_err)?;
    let mut rows = Vec::new();
    for r in &bench.reports {
        let manifest = write_dataset(&a.chain.out.join(r.method.cli_name()), &loaded, &cfg, a.chain.epsilon, r)?;
        rows.push(json!({
            "method": r.method,
            "label": r.method.label(),
            "n_samples": r.samples.len(),
            "time_s": r.wall_time,
            "sampling_queries": r.sampling_queries,
            "cost_per_sample": r.cost_per_sample(),
            "rejections": r.rejections,
            "rejection_rate": r.rejection_rate(),
            "labeling_queries": r.labeling_queries,
            "manifest": manifest,
        }));
    }
    let doc = json!({
        "problem_hash": loaded.sha256,
        "seed": cfg.seed,
        "n_samples": cfg.n_samples,
        "burn_in": cfg.burn_in,
        "thinning": cfg.thinning,
        "epsilon": a.chain.epsilon,
        "methods": rows,
    });
    write_file(
        &a.chain.out.join("benchmark.json"),
        &serde_json::to_string_pretty(&doc).expect("benchmark serializes"),
    )?;
    say(out, &bench.render())
}

fn samples_path(dataset: &Path) -> PathBuf {
    if dataset.is_dir() {
        dataset.join(SAMPLES_FILE)
    } else {
        dataset.to_path_buf()
    }
}

pub fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_problem(&a.problem)?;
    let samples = read_states(&samples_path(&a.dataset))?;
    let oracle = build_grid_oracle(&loaded.problem, a.resolution).map_err(run_err)?;
    let report = uniformity_test(&samples, &oracle, a.cells).map_err(run_err)?;
    let text = serde_json::to_string_pretty(&json!({
        "grid_resolution": a.resolution,
        "grid_area": oracle.area(),
        "grid_area_ratio": oracle.area_ratio(),
        "report": report,
    }))
    .expect("report serializes");
    let summary = format!(
        "chi2 = {:.3} on {} dof, p = {:.4} ({} samples, {} cells); estimated area {:.4} ({:.2}% of the box)\n",
        report.chi2_statistic,
        report.dof,
        report.p_value,
        report.n_effective,
        report.cells.len(),
        oracle.area(),
        100.0 * oracle.area_ratio()
    );
    match &a.report {
        Some(path) => {
            write_file(path, &text)?;
            say(out, &summary)
        }
        None => {
            say(out, &text)?;
            say(out, "\n")?;
            eprint!("{summary}");
            Ok(())
        }
    }
}

pub fn cmd_plot_data(a: &PlotDataArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_problem(&a.problem)?;
    let p = &loaded.problem;
    if p.nx() != 2 {
        return Err(CliError::Input(format!("plot data needs n_x = 2, got {}", p.nx())));
    }
    let (lo, hi) = lmpc_hr::optim::bounding_box(p.state_set(), &Default::default()).map_err(run_err)?;
    let mut csv = String::from("x0,x1,feasible,method\n");
    let mut push = |x: &nalgebra::DVector<f64>, feasible: u8, tag: &str| {
        csv.push_str(&format!("{:.16e},{:.16e},{feasible},{tag}\n", x[0], x[1]));
    };
    for corner in [(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])] {
        push(&nalgebra::DVector::from_vec(vec![corner.0, corner.1]), 1, "BOX");
    }
    let mut counts = Vec::new();
    for dir in &a.dataset {
        let manifest = read_manifest(&dir.join(MANIFEST_FILE))?;
        let tag = manifest.method.tag();
        let accepted = read_states(&dir.join(SAMPLES_FILE))?;
        let rejected = match dir.join(REJECTIONS_FILE) {
            path if path.exists() => read_states(&path)?,
            _ => Vec::new(),
        };
        for x in &accepted {
            push(x, 1, tag);
        }
        for x in &rejected {
            push(x, 0, tag);
        }
        counts.push((manifest.method, accepted.len(), rejected.len()));
    }
    write_file(&a.output, &csv)?;
    for (m, acc, rej) in counts {
        let frac = rej as f64 / (acc + rej) as f64;
        say(
            out,
            &format!("{}: {acc} feasible, {rej} rejected ({:.1}% infeasible)\n", m.label(), 100.0 * frac),
        )?;
    }
    Ok(())
}

pub fn cmd_condense_dump(a: &CondenseDumpArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load_problem(&a.problem)?;
    let cp = condense(&loaded.problem);
    let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        m.row_iter().map(|r| r.iter().copied().collect()).collect()
    };
    let labels: Vec<String> = cp
        .row_labels
        .iter()
        .map(|l| match l {
            RowLabel::Input(i) => format!("INPUT({i})"),
            RowLabel::State(i) => format!("STATE({i})"),
            RowLabel::Terminal => "TERMINAL".to_string(),
        })
        .collect();
    let text = match a.format {
        DumpFormat::Json => {
            let doc = json!({
                "n_constraints": cp.n_constraints(),
                "n_inputs": cp.n_inputs(),
                "G": rows(&cp.g),
                "F": rows(&cp.f),
                "w": cp.w.iter().copied().collect::<Vec<_>>(),
                "row_labels": labels,
                "Omega": rows(&cp.prediction.omega),
                "Gamma": rows(&cp.prediction.gamma),
            });
            serde_json::to_string_pretty(&doc).expect("dump serializes") + "\n"
        }
        DumpFormat::Csv => condensed_csv(&cp, &labels),
    };
    match &a.output {
        Some(path) => write_file(path, &text),
        None => say(out, &text),
    }
}

fn condensed_csv(cp: &lmpc_hr::CondensedProblem, labels: &[String]) -> String {
    let mut header = vec!["row".to_string(), "label".to_string()];
    header.extend((0..cp.g.ncols()).map(|j| format!("g{j}")));
    header.extend((0..cp.f.ncols()).map(|j| format!("f{j}")));
    header.push("w".to_string());
    let mut text = header.join(",") + "\n";
    for (i, label) in labels.iter().enumerate() {
        let mut row = vec![i.to_string(), label.clone()];
        row.extend(cp.g.row(i).iter().chain(cp.f.row(i).iter()).map(|&v| number(v)));
        row.push(number(cp.w[i]));
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}
