//! `noon` command-line front end: scan simulation, envelope analysis,
//! engine cross-checks and data export.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use noon_core::analysis::{self, AnalysisOptions, ReferenceRow};
use noon_core::config::{self, RunConfig};
use noon_core::io::{self as scan_io, ScanHeader};
use noon_core::{analytic, fock, gaussian};
use noon_core::{DelayUnit, DetectionScheme, EnvelopeStats, ErrorKind, PatternScan, ScanConfig, ScanMode, Validated};

/// Environment variable capping the number of worker threads.
pub const WORKERS_ENV: &str = "NOON_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "noon", version, about = "Multi-photon NOON interference simulation and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a delay or phase scan and write it as CSV.
    Scan(ScanArgs),
    /// Extract envelope shape, coherence length/time and visibility from scan CSVs.
    Analyze(AnalyzeArgs),
    /// Compare the analytic, Fock and Gaussian engines.
    Crosscheck(CrosscheckArgs),
    /// Print the harmonic forms P(I, φ) of detection schemes.
    Forms(FormsArgs),
    /// Export Fock-oracle probabilities on an (I, φ) grid as CSV.
    OracleGrid(OracleGridArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Analytic,
    Oracle,
    Gaussian,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Oracle => "oracle",
            Engine::Gaussian => "gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Coarse,
    Fine,
}

impl From<Mode> for ScanMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Coarse => ScanMode::CoarsePath,
            Mode::Fine => ScanMode::FinePhase,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "analytic")]
    pub engine: Engine,
    /// Detector split, e.g. 3/1; overrides the config.
    #[arg(long)]
    pub scheme: Option<DetectionScheme>,
    /// Scan mode; overrides the config and selects that mode's default grid.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub dc: Option<f64>,
    /// First grid value (m of path or rad of phase).
    #[arg(long, allow_hyphen_values = true)]
    pub start: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub path_multiplier: Option<f64>,
    #[arg(long)]
    pub integration_time: Option<f64>,
    /// Output CSV; standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Draw Poisson counts at rate probability × rep_rate × integration_time.
    #[arg(long)]
    pub sample: bool,
    /// RNG seed for --sample.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also write the sampled counts as a separate delay,counts CSV.
    #[arg(long, requires = "sample")]
    pub counts_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Scan CSV. A phase scan given alone is analyzed as the fine scan.
    pub scan: PathBuf,
    /// Fine phase-scan CSV for the visibility.
    #[arg(long)]
    pub fine: Option<PathBuf>,
    /// Print the measured reference values next to the results.
    #[arg(long)]
    pub compare_table1: bool,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
    #[arg(long, default_value_t = 0.15)]
    pub symmetric_tolerance: f64,
    #[arg(long, default_value_t = 0.10)]
    pub baseline_fraction: f64,
    /// Carrier angular frequency for the sampling check, when the scan
    /// header does not carry one.
    #[arg(long)]
    pub omega0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CrosscheckArgs {
    /// `all` or a comma-separated list such as 2/2,3/1.
    #[arg(long, default_value = "all")]
    pub schemes: String,
    /// (I, φ) grid as IxPHI points, I ∈ [0, 1], φ ∈ [0, 2π].
    #[arg(long, default_value = "5x17")]
    pub grid: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Brightness for the Gaussian visibility comparison.
    #[arg(long, default_value_t = 1e-3)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub dc: f64,
    /// Relative tolerance of the Gaussian visibility comparison.
    #[arg(long, default_value_t = 0.02)]
    pub visibility_tolerance: f64,
    /// Skip the Gaussian comparison.
    #[arg(long)]
    pub no_gaussian: bool,
}

#[derive(Debug, Args)]
pub struct FormsArgs {
    #[arg(long, default_value = "all")]
    pub schemes: String,
}

#[derive(Debug, Args)]
pub struct OracleGridArgs {
    #[arg(long, default_value = "all")]
    pub schemes: String,
    #[arg(long, default_value = "5x17")]
    pub grid: String,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }
}

impl From<noon_core::Error> for CliError {
    fn from(e: noon_core::Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Config => EXIT_CONFIG,
            ErrorKind::Numeric => EXIT_NUMERIC,
            ErrorKind::Io => EXIT_IO,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Caps the global thread pool from [`WORKERS_ENV`] when set.
pub fn init_workers() -> CliResult<()> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("{WORKERS_ENV} must be a positive integer, got {v:?}")))?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs a parsed command line, writing reports to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    init_workers()?;
    match cli.command {
        Command::Scan(a) => cmd_scan(&a, out),
        Command::Analyze(a) => cmd_analyze(&a, out),
        Command::Crosscheck(a) => cmd_crosscheck(&a, out),
        Command::Forms(a) => cmd_forms(&a, out),
        Command::OracleGrid(a) => cmd_oracle_grid(&a, out),
    }
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

/// Resolves the configuration file and command-line overrides.
pub fn resolve_config(a: &ScanArgs) -> CliResult<Validated> {
    let mode = a.mode.map(ScanMode::from);
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            config::parse_with_mode(&text, mode).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::for_mode(mode.unwrap_or(ScanMode::CoarsePath)),
    };
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut cfg.spec.mu, a.mu);
    set(&mut cfg.scan.eta, a.eta);
    set(&mut cfg.scan.dc, a.dc);
    set(&mut cfg.scan.step, a.step);
    set(&mut cfg.scan.path_multiplier, a.path_multiplier);
    set(&mut cfg.scan.integration_time, a.integration_time);
    if let Some(s) = a.start {
        cfg.scan.start = Some(s);
    }
    if let Some(c) = a.count {
        cfg.scan.count = c;
    }
    Ok(cfg.validate(a.scheme)?)
}

/// Computes a scan with the selected engine.
pub fn simulate(engine: Engine, bundle: &Validated) -> CliResult<PatternScan> {
    Ok(match engine {
        Engine::Analytic => analytic::pattern(bundle)?,
        Engine::Oracle => fock::oracle_pattern(bundle)?,
        Engine::Gaussian => gaussian::multipair_pattern(bundle)?,
    })
}

/// Poisson counts per point, drawn sequentially from a seeded stream.
pub fn sample_counts(scan: &PatternScan, rep_rate: f64, integration_time: f64, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scan.points()
        .iter()
        .map(|p| {
            let rate = p.probability * rep_rate * integration_time;
            match Poisson::new(rate) {
                Ok(d) => d.sample(&mut rng) as u64,
                Err(_) => 0,
            }
        })
        .collect()
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn cmd_scan(a: &ScanArgs, out: &mut dyn Write) -> CliResult<()> {
    let bundle = resolve_config(a)?;
    let mut scan = simulate(a.engine, &bundle)?;
    let mut header = ScanHeader {
        engine: Some(a.engine.name().into()),
        config: Some(RunConfig {
            spec: bundle.spec,
            scheme: Some(bundle.scheme),
            scan: bundle.scan,
            max_photons: bundle.scheme.photons().max(noon_core::types::DEFAULT_MAX_PHOTONS),
        }),
        seed: None,
    };
    if a.sample {
        let counts = sample_counts(&scan, bundle.spec.rep_rate, bundle.scan.integration_time, a.seed);
        scan = scan.with_counts(&counts);
        header.seed = Some(a.seed);
    }
    match &a.output {
        Some(path) => scan_io::write_scan(create(path)?, &header, &scan).map_err(|e| CliError::io(path, e))?,
        None => scan_io::write_scan(&mut *out, &header, &scan).map_err(stdout_err)?,
    }
    if let Some(path) = &a.counts_out {
        scan_io::write_counts(create(path)?, &scan).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// Fringe harmonic content of a fine scan.
#[derive(Debug, Clone, Serialize)]
pub struct HarmonicReport {
    pub dominant: Option<usize>,
    pub significant: Vec<usize>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub scheme: String,
    pub engine: Option<String>,
    pub stats: EnvelopeStats,
    pub harmonics: Option<HarmonicReport>,
    pub reference: Option<ReferenceRow>,
}

/// Analyzes a coarse and/or fine scan.
pub fn analyze_scans(
    coarse: Option<&PatternScan>,
    fine: Option<&PatternScan>,
    opts: &AnalysisOptions,
) -> CliResult<(EnvelopeStats, Option<HarmonicReport>)> {
    let stats = analysis::metrics(coarse, fine, opts)?;
    let harmonics = match fine {
        Some(f) => {
            let amps = analysis::fringe_harmonics(f, opts.max_harmonic)?;
            Some(HarmonicReport {
                dominant: analysis::dominant_harmonic(&amps),
                significant: analysis::significant_harmonics(&amps, opts.harmonic_presence),
                amplitudes: amps,
            })
        }
        None => None,
    };
    Ok((stats, harmonics))
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> CliResult<()> {
    let primary = scan_io::load_scan(&a.scan)?;
    let fine_file = a.fine.as_ref().map(scan_io::load_scan).transpose()?;
    let (coarse, fine) = match (primary.scan.delay_unit(), &fine_file) {
        (DelayUnit::PathMeters, f) => (Some(&primary), f.as_ref()),
        (DelayUnit::PhaseRadians, None) => (None, Some(&primary)),
        (DelayUnit::PhaseRadians, Some(_)) => {
            return Err(CliError::config("the positional scan is a phase scan; pass the coarse path scan first"))
        }
    };
    if let Some(f) = fine {
        if f.scan.delay_unit() != DelayUnit::PhaseRadians {
            return Err(CliError::config("--fine expects a phase scan (delay_unit = phase_rad)"));
        }
        if let Some(c) = coarse {
            if c.scan.scheme() != f.scan.scheme() {
                return Err(CliError::config(format!(
                    "coarse scan is {} but fine scan is {}",
                    c.scan.scheme(),
                    f.scan.scheme()
                )));
            }
        }
    }
    let scheme = coarse.or(fine).expect("at least one scan").scan.scheme();
    let omega0 = a.omega0.or_else(|| coarse.or(fine).and_then(|f| f.header.config.map(|c| c.spec.omega0)));
    let opts = AnalysisOptions {
        symmetric_tolerance: a.symmetric_tolerance,
        baseline_fraction: a.baseline_fraction,
        omega0,
        ..AnalysisOptions::default()
    };
    let (stats, harmonics) = analyze_scans(coarse.map(|c| &c.scan), fine.map(|f| &f.scan), &opts)?;
    let report = AnalysisReport {
        scheme: scheme.to_string(),
        engine: coarse.or(fine).and_then(|f| f.header.engine.clone()),
        stats,
        harmonics,
        reference: if a.compare_table1 { analysis::reference_row(scheme) } else { None },
    };
    let text = if a.json {
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n"
    } else {
        format_report(&report, a.compare_table1)
    };
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn opt(v: Option<f64>, scale: f64, unit: &str) -> String {
    v.map(|x| format!("{:.4} {unit}", x * scale)).unwrap_or_else(|| "-".into())
}

/// Human-readable analysis report.
pub fn format_report(r: &AnalysisReport, compare: bool) -> String {
    let s = &r.stats;
    let reference = r.reference.as_ref();
    let mut rows: Vec<(&str, String, String)> = vec![
        ("shape", s.shape.map(|x| x.to_string()).unwrap_or_else(|| "-".into()), reference.map(|x| x.shape.to_string()).unwrap_or_default()),
        ("upper FWHM", opt(s.upper_fwhm, 1e3, "mm"), String::new()),
        ("lower FWHM", opt(s.lower_fwhm, 1e3, "mm"), String::new()),
        ("coherence length", opt(s.coherence_length, 1e3, "mm"), reference.map(|x| opt(Some(x.coherence_length), 1e3, "mm")).unwrap_or_default()),
        ("coherence time", opt(s.coherence_time, 1e12, "ps"), reference.map(|x| opt(Some(x.coherence_time), 1e12, "ps")).unwrap_or_default()),
        ("baseline", s.baseline.map(|x| format!("{x:.4e}")).unwrap_or_else(|| "-".into()), String::new()),
        ("visibility", opt(s.visibility, 1.0, ""), reference.map(|x| opt(Some(x.visibility), 1.0, "")).unwrap_or_default()),
    ];
    if let Some(h) = &r.harmonics {
        let list = h.significant.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", ");
        rows.push(("dominant harmonic", h.dominant.map(|d| d.to_string()).unwrap_or_else(|| "-".into()), String::new()));
        rows.push(("harmonics present", list, String::new()));
    }
    let mut text = String::new();
    let _ = write!(text, "scheme {}", r.scheme);
    if let Some(e) = &r.engine {
        let _ = write!(text, " ({e})");
    }
    text.push('\n');
    if compare {
        let _ = writeln!(text, "{:<18} {:<16} {}", "", "simulated", "measured");
    }
    for (k, v, m) in rows {
        if compare {
            let _ = writeln!(text, "{k:<18} {:<16} {}", v.trim_end(), m.trim_end());
        } else {
            let _ = writeln!(text, "{k:<18} {}", v.trim_end());
        }
    }
    text
}

/// Parses `all` or a comma-separated scheme list.
pub fn parse_schemes(spec: &str) -> CliResult<Vec<DetectionScheme>> {
    if spec.trim() == "all" {
        return Ok(DetectionScheme::reference_set().to_vec());
    }
    spec.split(',')
        .map(|s| {
            let sch: DetectionScheme = s.parse().map_err(CliError::config)?;
            sch.check(noon_core::types::DEFAULT_MAX_PHOTONS)?;
            Ok(sch)
        })
        .collect()
}

/// Parses an `AxB` grid into `A` indistinguishabilities on `[0, 1]` and `B`
/// phases on `[0, 2π]`, endpoints included.
pub fn parse_grid(spec: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let bad = || CliError::config(format!("grid must look like 5x17, got {spec:?}"));
    let (a, b) = spec.split_once('x').ok_or_else(bad)?;
    let a: usize = a.trim().parse().map_err(|_| bad())?;
    let b: usize = b.trim().parse().map_err(|_| bad())?;
    if a < 2 || b < 2 {
        return Err(bad());
    }
    Ok((linspace(0.0, 1.0, a), linspace(0.0, std::f64::consts::TAU, b)))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

/// Cell midpoints of a grid, disjoint from its nodes.
fn midpoints(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// One row of the cross-check matrix.
#[derive(Debug, Clone, Serialize)]
pub struct CrosscheckRow {
    pub scheme: DetectionScheme,
    pub oracle_max_abs: f64,
    pub worst_point: (f64, f64),
    pub oracle_pass: bool,
    pub gaussian_visibility: Option<f64>,
    pub analytic_visibility: f64,
    pub gaussian_pass: Option<bool>,
}

/// Analytic vs oracle on the grid nodes and midpoints, and Gaussian vs
/// analytic fine-scan visibility.
pub fn crosscheck(schemes: &[DetectionScheme], grid: &(Vec<f64>, Vec<f64>), a: &CrosscheckArgs) -> CliResult<Vec<CrosscheckRow>> {
    let (is, phis) = grid;
    let (mis, mphis) = (midpoints(is), midpoints(phis));
    let mut rows = Vec::new();
    for &scheme in schemes {
        let mut worst = (0.0f64, (0.0, 0.0));
        for (gi, gp) in [(is, phis), (&mis, &mphis)] {
            for s in fock::oracle_grid(&[scheme], gi, gp)? {
                let d = (analytic::probability(scheme, s.indistinguishability, s.phase)? - s.probability).abs();
                if !(d <= worst.0) {
                    worst = (d, (s.indistinguishability, s.phase));
                }
            }
        }
        let analytic_visibility = analytic::form(scheme)?.visibility(1.0);
        let (gv, gpass) = if a.no_gaussian {
            (None, None)
        } else {
            let spec = noon_core::SourceSpec::telecom().with_mu(a.mu);
            let scan = ScanConfig::fine_default().with_detectors(a.eta, a.dc);
            let bundle = noon_core::validate(spec, scheme, scan)?;
            let v = analysis::visibility(&gaussian::multipair_pattern(&bundle)?)?;
            let rel = (v - analytic_visibility).abs() / analytic_visibility.max(f64::MIN_POSITIVE);
            (Some(v), Some(rel <= a.visibility_tolerance))
        };
        rows.push(CrosscheckRow {
            scheme,
            oracle_max_abs: worst.0,
            worst_point: worst.1,
            oracle_pass: worst.0 <= a.tolerance,
            gaussian_visibility: gv,
            analytic_visibility,
            gaussian_pass: gpass,
        });
    }
    Ok(rows)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_crosscheck(a: &CrosscheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let schemes = parse_schemes(&a.schemes)?;
    let grid = parse_grid(&a.grid)?;
    let rows = crosscheck(&schemes, &grid, a)?;
    let mut text = format!(
        "{:<6} {:<28} {}\n",
        "scheme",
        format!("analytic vs oracle (<= {:.0e})", a.tolerance),
        format!("gaussian visibility at mu = {:e} (rel <= {})", a.mu, a.visibility_tolerance)
    );
    let mut ok = true;
    for r in &rows {
        let _ = write!(text, "{:<6} {} max|d| = {:<10.3e}", r.scheme.to_string(), verdict(r.oracle_pass), r.oracle_max_abs);
        if !r.oracle_pass {
            let _ = write!(text, " at I = {}, phi = {}", r.worst_point.0, r.worst_point.1);
        }
        ok &= r.oracle_pass;
        match (r.gaussian_visibility, r.gaussian_pass) {
            (Some(v), Some(p)) => {
                ok &= p;
                let _ = write!(text, "  {} V = {v:.5} vs {:.5}", verdict(p), r.analytic_visibility);
            }
            _ => text.push_str("  skipped"),
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)?;
    if ok {
        Ok(())
    } else {
        Err(CliError { code: EXIT_NUMERIC, message: "cross-check failed".into() })
    }
}

fn cmd_forms(a: &FormsArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut text = String::new();
    for scheme in parse_schemes(&a.schemes)? {
        let _ = writeln!(text, "{}", analytic::form(scheme)?.to_text());
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn cmd_oracle_grid(a: &OracleGridArgs, out: &mut dyn Write) -> CliResult<()> {
    let schemes = parse_schemes(&a.schemes)?;
    let (is, phis) = parse_grid(&a.grid)?;
    let samples = fock::oracle_grid(&schemes, &is, &phis)?;
    match &a.output {
        Some(path) => scan_io::write_oracle_grid(create(path)?, &samples)?,
        None => scan_io::write_oracle_grid(&mut *out, &samples)?,
    }
    Ok(())
}
