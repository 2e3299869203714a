//! `positflow`: generate frames, run optical flow in a chosen number format,
//! sweep normalization factors, build value histograms and verify the
//! arithmetic against exact oracles.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use positflow::analysis::{self, SweepParams};
use positflow::flow::{FlowParams, FlowStatus, Frame};
use positflow::frames::{self, SphereParams};
use positflow::posit::PositConfig;
use positflow::report::{self, fmt_f64, ReportError};
use positflow::scalar::{FormatSpec, Reference, CollectTap};
use positflow::verify::{self, ConformanceReport, EXHAUSTIVE_MAX_BITS};

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Output(String),
    Mismatch(u64),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Output(_) => 1,
            CliError::Input(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Output(m) => write!(f, "output error: {m}"),
            CliError::Mismatch(n) => write!(f, "verification failed: {n} mismatches"),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        CliError::Output(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "positflow", version, about = "Number-format study for Lucas-Kanade optical flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a rotating textured sphere to PGM frames.
    Gen(GenArgs),
    /// Optical flow between two PGM frames in one format.
    Flow(FlowArgs),
    /// Error against the binary64 reference over a range of norms.
    Sweep(SweepArgs),
    /// Binade histogram of values seen by the reference kernel.
    Hist(HistArgs),
    /// Check format arithmetic against the exact-rational oracle.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 200)]
    size: usize,
    #[arg(long, default_value_t = 80.0)]
    radius: f64,
    #[arg(long, default_value_t = 12.0)]
    frequency: f64,
    /// Rotation per frame in radians.
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    angle: f64,
    #[arg(long, default_value_t = 2)]
    frames: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for frame_NNNN.pgm.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// Window radius; the window is (2w+1) x (2w+1).
    #[arg(long, default_value_t = FlowParams::DEFAULT_WINDOW)]
    window: usize,
    /// Singularity threshold on |det|, rounded in-format.
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    frame1: PathBuf,
    frame2: PathBuf,
    #[arg(long, default_value = "reference")]
    format: FormatSpec,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..))]
    norm: u8,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Write flow.csv here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    frame1: PathBuf,
    frame2: PathBuf,
    #[arg(long, default_value = "reference")]
    format: FormatSpec,
    /// `a..b` (inclusive), a comma list, or a single norm.
    #[arg(long, default_value = "1..255")]
    norms: String,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Write sweep.csv, components.csv and best-norm heat maps here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct HistArgs {
    frame1: PathBuf,
    frame2: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..))]
    norm: u8,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Write hist.csv here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Every operand pair (posits up to 12 bits).
    Exhaustive,
    /// Corner cases plus seeded random pairs.
    Sampled,
    /// Structured binary16 operand set.
    Basis,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    format: FormatSpec,
    /// Defaults to exhaustive for narrow posits, basis for float16,
    /// sampled otherwise.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write mismatches.csv here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_frame(path: &Path) -> Result<Frame> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    frames::load_pgm(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_pair(a: &Path, b: &Path) -> Result<(Frame, Frame)> {
    let f1 = read_frame(a)?;
    let f2 = read_frame(b)?;
    if (f1.width(), f1.height()) != (f2.width(), f2.height()) {
        return Err(CliError::Usage(format!(
            "frames differ in size: {}x{} vs {}x{}",
            f1.width(),
            f1.height(),
            f2.width(),
            f2.height()
        )));
    }
    if f1.width() < 3 || f1.height() < 3 {
        return Err(CliError::Usage(format!(
            "flow needs frames of at least 3x3, got {}x{}",
            f1.width(),
            f1.height()
        )));
    }
    Ok((f1, f2))
}

fn parse_norms(s: &str) -> Result<Vec<u32>> {
    let bad = || CliError::Usage(format!("bad norm list `{s}` (expected a..b, a,b,c or n)"));
    let norms: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    analysis::check_norms(&norms).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(norms)
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

/// Where the summary goes: stdout when the data went to files, stderr when
/// the data itself is on stdout.
struct Summary {
    to_stdout: bool,
}

impl Summary {
    fn line(&self, text: impl AsRef<str>) {
        if self.to_stdout {
            println!("{}", text.as_ref());
        } else {
            eprintln!("{}", text.as_ref());
        }
    }
}

fn with_output(
    out: &Option<PathBuf>,
    file: &str,
    write: impl FnOnce(&mut dyn Write) -> std::result::Result<(), ReportError>,
) -> Result<Summary> {
    match out {
        Some(dir) => {
            out_dir(dir)?;
            let mut w = create(&dir.join(file))?;
            write(&mut w)?;
            w.flush().map_err(|e| CliError::Output(e.to_string()))?;
            Ok(Summary { to_stdout: true })
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            Ok(Summary { to_stdout: false })
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let params = SphereParams {
        size: a.size,
        radius: a.radius,
        frequency: a.frequency,
        angle: a.angle,
        frames: a.frames,
        seed: a.seed,
    };
    let frames = frames::gen_sphere(&params).map_err(|e| CliError::Usage(e.to_string()))?;
    out_dir(&a.out)?;
    for (t, frame) in frames.iter().enumerate() {
        let name = format!("frame_{t:04}.pgm");
        let path = a.out.join(&name);
        fs::write(&path, frames::save_pgm(frame))
            .map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        println!("{}  {name}", frames::checksum(frame));
    }
    Ok(())
}

fn flow_params(norm: u8, spec: FormatSpec, k: &KernelArgs) -> FlowParams {
    FlowParams::new(norm)
        .with_window(k.window)
        .with_tau(k.tau.unwrap_or(spec.default_tau()))
}

fn cmd_flow(a: FlowArgs) -> Result<()> {
    let (f1, f2) = read_pair(&a.frame1, &a.frame2)?;
    let field = analysis::run_flow(a.format, &f1, &f2, flow_params(a.norm, a.format, &a.kernel))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let summary = with_output(&a.out, "flow.csv", |w| report::write_flow_csv(w, &field))?;
    let exceptions = field.count(FlowStatus::Exception);
    let mut line = format!(
        "format={} norm={} window={} ok={} singular={} exception={}",
        a.format,
        a.norm,
        a.kernel.window,
        field.count(FlowStatus::Ok),
        field.count(FlowStatus::Singular),
        exceptions
    );
    if a.format == FormatSpec::Q16 {
        line.push_str(&format!(" overflow={exceptions}"));
    }
    summary.line(line);
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let (f1, f2) = read_pair(&a.frame1, &a.frame2)?;
    let norms = parse_norms(&a.norms)?;
    let params = SweepParams {
        window: a.kernel.window,
        tau: a.kernel.tau,
    };
    let comparisons = analysis::sweep_detailed(a.format, &f1, &f2, &norms, params)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let reports: Vec<_> = comparisons.iter().map(|c| c.report.clone()).collect();
    let best = analysis::best_norm(&reports);
    let summary = with_output(&a.out, "sweep.csv", |w| report::write_sweep_csv(w, &reports))?;
    if let Some(dir) = &a.out {
        let mut w = create(&dir.join("components.csv"))?;
        report::write_components_csv(&mut w, &reports)?;
        if let Some(c) = best.and_then(|n| comparisons.iter().find(|c| c.report.norm == n)) {
            let mut w = create(&dir.join(format!("heatmap_norm{:03}.csv", c.report.norm)))?;
            report::write_heatmap_csv(&mut w, c)?;
        }
    }
    match best.and_then(|n| reports.iter().find(|r| r.norm == n)) {
        Some(r) => summary.line(format!(
            "format={} best_norm={} max={} rms={} std={}",
            a.format,
            r.norm,
            fmt_f64(r.max_abs_error),
            fmt_f64(r.rms_error),
            fmt_f64(r.std_deviation)
        )),
        None => summary.line(format!("format={} best_norm=none", a.format)),
    }
    Ok(())
}

fn cmd_hist(a: HistArgs) -> Result<()> {
    let (f1, f2) = read_pair(&a.frame1, &a.frame2)?;
    let reference = Reference::with_tap(CollectTap::new());
    let params = flow_params(a.norm, FormatSpec::Reference, &a.kernel);
    positflow::flow::flow_sequential(&reference, &f1, &f2, params)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let values = reference.tap().unique_values();
    let censuses = [
        FormatSpec::Posit(PositConfig::P16E2),
        FormatSpec::Posit(PositConfig::P16E1),
        FormatSpec::Float16,
    ]
    .map(|s| analysis::representable_census(s).expect("16-bit census"));
    let overlap = analysis::histogram_overlap(&values, &censuses);
    let summary = with_output(&a.out, "hist.csv", |w| report::write_overlap_csv(w, &overlap))?;
    summary.line(format!(
        "norm={} unique_values={} zeros={}",
        a.norm, overlap.total, overlap.zeros
    ));
    for (name, cov) in overlap.formats.iter().zip(&overlap.coverage) {
        summary.line(format!("coverage {name}={}", fmt_f64(*cov)));
    }
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Result<ConformanceReport> {
    let usage = |m: String| CliError::Usage(m);
    match a.format {
        FormatSpec::Posit(cfg) => {
            let default = if cfg.n() <= EXHAUSTIVE_MAX_BITS {
                Mode::Exhaustive
            } else {
                Mode::Sampled
            };
            match a.mode.unwrap_or(default) {
                Mode::Exhaustive => verify::posit_exhaustive(cfg).map_err(|e| usage(e.to_string())),
                Mode::Sampled => Ok(verify::posit_sampled(cfg, a.samples, a.seed)),
                Mode::Basis => Err(usage("basis mode is for float16".into())),
            }
        }
        FormatSpec::Float16 => match a.mode.unwrap_or(Mode::Basis) {
            Mode::Basis => Ok(verify::binary16_basis_suite()),
            Mode::Sampled => Ok(verify::binary16_sampled(a.samples, a.seed)),
            Mode::Exhaustive => Err(usage(
                "exhaustive float16 is 2^34 operations; use basis or sampled".into(),
            )),
        },
        FormatSpec::Q16 => match a.mode.unwrap_or(Mode::Sampled) {
            Mode::Sampled => Ok(verify::q16_sampled(a.samples, a.seed)),
            _ => Err(usage("q16 supports sampled mode only".into())),
        },
        FormatSpec::Reference => Err(usage("the reference format has nothing to verify".into())),
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let r = run_verify(&a)?;
    println!("format={} suite={}", r.format, r.suite);
    for t in &r.tallies {
        println!("op={} checked={} mismatches={}", t.op.symbol(), t.checked, t.mismatches);
    }
    println!(
        "total checked={} mismatches={} result={}",
        r.checked(),
        r.mismatch_count(),
        if r.passed() { "pass" } else { "FAIL" }
    );
    if !r.passed() {
        match &a.out {
            Some(dir) => {
                out_dir(dir)?;
                let mut w = create(&dir.join("mismatches.csv"))?;
                report::write_mismatch_csv(&mut w, &r)?;
                w.flush().map_err(|e| CliError::Output(e.to_string()))?;
            }
            None => report::write_mismatch_csv(io::stdout().lock(), &r)?,
        }
        return Err(CliError::Mismatch(r.mismatch_count()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Flow(a) => cmd_flow(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Hist(a) => cmd_hist(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("positflow: {e}");
            ExitCode::from(e.code())
        }
    }
}
