use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use secfan::classes::{self, ClassTable};
use secfan::config::{mc_count, ConfigError, HullFaceLattice, PointConfiguration};
use secfan::enumerate::{self, Cadence, Mode, Options, RegularityCache};
use secfan::io::{self, IoError};
use secfan::massive::{self, ContributionCache, MassiveError};
use secfan::regularity;
use secfan::symmetry::{PermutationGroup, SymmetryError};
use secfan::triang::{self, Triangulation, TriangError};

#[derive(Parser)]
#[command(
    name = "secfan",
    version,
    about = "Regular triangulations, their flip graph, and massive GKZ vectors"
)]
struct Cli {
    /// Point configuration file: one point per line, integer
    /// coordinates separated by whitespace.
    #[arg(long, global = true)]
    points: Option<PathBuf>,

    /// Symmetry group generators: one permutation per line as images
    /// of 0..n-1. Defaults to the trivial group.
    #[arg(long, global = true)]
    group: Option<PathBuf>,

    /// Sort output records lexicographically for byte-stable files.
    #[arg(long, global = true)]
    sort: bool,

    /// Output file; stdout when omitted. The classes subcommand
    /// treats this as an output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Write a JSON run manifest to this path.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate orbit representatives of all regular triangulations.
    Enumerate(EnumerateArgs),
    /// Print the GKZ vector of each triangulation in a batch.
    Gkz { batch: PathBuf },
    /// Print the massive GKZ vector of each triangulation in a batch.
    MassiveGkz(MassiveArgs),
    /// Group representatives into classes by massive GKZ vector.
    Classes {
        #[arg(required = true)]
        batches: Vec<PathBuf>,
    },
    /// Decide regularity per batch line, with a height certificate.
    Check { batch: PathBuf },
    /// Print the normalized volume of the hull.
    Volume,
    /// Representatives reachable from a start set without expanding
    /// past a target set.
    Recover {
        #[arg(long)]
        start: PathBuf,
        #[arg(long)]
        target: PathBuf,
    },
    /// Time the direct and cached massive GKZ engines on a batch.
    Bench {
        batch: PathBuf,
        #[arg(long, default_value_t = 3)]
        repetitions: u32,
    },
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Bfs)]
    mode: ModeArg,
    /// Worker DFS depth budget (budgeted mode).
    #[arg(long, default_value_t = 1)]
    budget: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Stop dispatching new work once this many orbits are known.
    #[arg(long)]
    limit: Option<u64>,
    /// Checkpoint file, written at the cadence and at the end.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Checkpoint cadence: an expansion count, or seconds with an
    /// `s` suffix (e.g. `2s`).
    #[arg(long = "checkpoint-every")]
    checkpoint_every: Option<String>,
    /// Resume from a checkpoint written with the same points and
    /// group.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Write final counters here as `k=v` lines.
    #[arg(long = "stats-out")]
    stats_out: Option<PathBuf>,
}

#[derive(Args)]
struct MassiveArgs {
    batch: PathBuf,
    #[arg(long, value_enum, default_value_t = EngineArg::Cached)]
    engine: EngineArg,
    /// Persist the contribution cache here; also consulted before
    /// computing. Defaults to $SECFAN_CACHE_DIR/<config digest>.cache
    /// when that variable is set.
    #[arg(long = "cache-file")]
    cache_file: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Bfs,
    Budgeted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    Direct,
    Cached,
}

enum Failure {
    /// Bad input or arguments; exit 2.
    Input(String),
    /// A violated internal invariant; exit 3.
    Internal(String),
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<TriangError> for Failure {
    fn from(e: TriangError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<SymmetryError> for Failure {
    fn from(e: SymmetryError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<MassiveError> for Failure {
    fn from(e: MassiveError) -> Self {
        match e {
            MassiveError::NonIntegral { .. } => Failure::Internal(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<enumerate::EnumerateError> for Failure {
    fn from(e: enumerate::EnumerateError) -> Self {
        use enumerate::EnumerateError::*;
        match e {
            Collision(_) | SeedNotRegular => Failure::Internal(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ManifestOutput {
    path: String,
    records: u64,
}

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    options: Vec<String>,
    input_digests: BTreeMap<String, String>,
    started_unix: u64,
    finished_unix: u64,
    outputs: Vec<ManifestOutput>,
    counters: BTreeMap<String, u64>,
}

#[derive(Default)]
struct RunReport {
    inputs: Vec<PathBuf>,
    outputs: Vec<(String, u64)>,
    counters: BTreeMap<String, u64>,
}

impl RunReport {
    fn count(&mut self, key: &str, value: u64) {
        self.counters.insert(key.to_string(), value);
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn main() {
    let cli = Cli::parse();
    let started = unix_now();
    let mut report = RunReport::default();
    let code = match run(&cli, &mut report) {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            3
        }
    };
    if code == 0 {
        if let Some(path) = &cli.manifest {
            if let Err(msg) = write_manifest(&cli, &report, started, path) {
                eprintln!("error: {msg}");
                std::process::exit(2);
            }
        }
    }
    std::process::exit(code);
}

fn write_manifest(
    cli: &Cli,
    report: &RunReport,
    started: u64,
    path: &Path,
) -> Result<(), String> {
    let mut input_digests = BTreeMap::new();
    for input in &report.inputs {
        let bytes =
            std::fs::read(input).map_err(|e| format!("{}: {e}", input.display()))?;
        let mut h = Sha256::new();
        h.update(&bytes);
        let hex: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        input_digests.insert(input.display().to_string(), hex);
    }
    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.command).to_string(),
        options: std::env::args().skip(1).collect(),
        input_digests,
        started_unix: started,
        finished_unix: unix_now(),
        outputs: report
            .outputs
            .iter()
            .map(|(path, records)| ManifestOutput {
                path: path.clone(),
                records: *records,
            })
            .collect(),
        counters: report.counters.clone(),
    };
    let body = serde_json::to_string_pretty(&manifest).expect("serializable");
    std::fs::write(path, body + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Enumerate(_) => "enumerate",
        Command::Gkz { .. } => "gkz",
        Command::MassiveGkz(_) => "massive-gkz",
        Command::Classes { .. } => "classes",
        Command::Check { .. } => "check",
        Command::Volume => "volume",
        Command::Recover { .. } => "recover",
        Command::Bench { .. } => "bench",
    }
}

fn run(cli: &Cli, report: &mut RunReport) -> Result<(), Failure> {
    match &cli.command {
        Command::Enumerate(args) => cmd_enumerate(cli, args, report),
        Command::Gkz { batch } => cmd_gkz(cli, batch, report),
        Command::MassiveGkz(args) => cmd_massive(cli, args, report),
        Command::Classes { batches } => cmd_classes(cli, batches, report),
        Command::Check { batch } => cmd_check(cli, batch, report),
        Command::Volume => cmd_volume(cli, report),
        Command::Recover { start, target } => cmd_recover(cli, start, target, report),
        Command::Bench { batch, repetitions } => cmd_bench(cli, batch, *repetitions, report),
    }
}

fn load_cfg(cli: &Cli, report: &mut RunReport) -> Result<PointConfiguration, Failure> {
    let path = cli
        .points
        .as_ref()
        .ok_or_else(|| Failure::Input("--points is required".to_string()))?;
    report.inputs.push(path.clone());
    let pts = io::parse_points(&io::read_file(&path.to_string_lossy())?)?;
    Ok(PointConfiguration::normalize(pts)?)
}

fn load_group(
    cli: &Cli,
    cfg: &PointConfiguration,
    report: &mut RunReport,
) -> Result<PermutationGroup, Failure> {
    match &cli.group {
        None => Ok(PermutationGroup::trivial(cfg.n())),
        Some(path) => {
            report.inputs.push(path.clone());
            let gens = io::parse_group(&io::read_file(&path.to_string_lossy())?)?;
            Ok(PermutationGroup::from_generators(cfg, gens)?)
        }
    }
}

fn load_batch(
    path: &Path,
    cfg: &PointConfiguration,
    lat: &HullFaceLattice,
    report: &mut RunReport,
) -> Result<Vec<Triangulation>, Failure> {
    report.inputs.push(path.to_path_buf());
    let text = io::read_file(&path.to_string_lossy())?;
    let mut out = Vec::new();
    for (lineno, cells) in io::parse_batch(&text)? {
        let t = Triangulation::validate(cfg, lat, cells).map_err(|e| {
            Failure::Input(format!("{} line {lineno}: {e}", path.display()))
        })?;
        out.push(t);
    }
    Ok(out)
}

/// Writes records to --out or stdout; returns the record count.
fn write_records(
    cli: &Cli,
    report: &mut RunReport,
    mut lines: Vec<String>,
    sortable: bool,
) -> Result<u64, Failure> {
    if cli.sort && sortable {
        lines.sort();
    }
    let records = lines.len() as u64;
    let mut body = lines.join("\n");
    if !body.is_empty() {
        body.push('\n');
    }
    match &cli.out {
        Some(path) => {
            std::fs::write(path, body)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            report.outputs.push((path.display().to_string(), records));
        }
        None => print!("{body}"),
    }
    Ok(records)
}

fn parse_cadence(text: &str) -> Result<Cadence, Failure> {
    let bad = || Failure::Input(format!("bad --checkpoint-every value `{text}`"));
    if let Some(seconds) = text.strip_suffix('s') {
        Ok(Cadence::Seconds(seconds.parse().map_err(|_| bad())?))
    } else {
        Ok(Cadence::Expansions(text.parse().map_err(|_| bad())?))
    }
}

fn cmd_enumerate(
    cli: &Cli,
    args: &EnumerateArgs,
    report: &mut RunReport,
) -> Result<(), Failure> {
    let cfg = load_cfg(cli, report)?;
    let group = load_group(cli, &cfg, report)?;
    let lat = HullFaceLattice::build(&cfg)?;
    let resume = match &args.resume {
        Some(path) => {
            report.inputs.push(path.clone());
            Some(enumerate::checkpoint_resume(
                &path.to_string_lossy(),
                &cfg,
                &lat,
                &group,
            )?)
        }
        None => None,
    };
    let cadence = args
        .checkpoint_every
        .as_deref()
        .map(parse_cadence)
        .transpose()?;
    let options = Options {
        mode: match args.mode {
            ModeArg::Bfs => Mode::Bfs,
            ModeArg::Budgeted => Mode::Budgeted,
        },
        budget: args.budget,
        workers: args.workers,
        limit: args.limit,
        checkpoint: args
            .checkpoint
            .as_ref()
            .map(|p| p.to_string_lossy().into_owned()),
        cadence,
        resume,
    };
    let cache = RegularityCache::new();
    let mut lines = Vec::new();
    let out = enumerate::enumerate_regular(&cfg, &group, &cache, options, |t, _| {
        lines.push(t.to_string())
    })?;
    write_records(cli, report, lines, true)?;
    let s = out.state.stats;
    let stats_lines = format!(
        "orbits={} full={} flips={} regchecks={} expansions={}\ncomplete={}\n",
        s.orbits, s.full, s.flips, s.regularity_checks, s.expansions, out.complete
    );
    if let Some(path) = &args.stats_out {
        std::fs::write(path, &stats_lines)
            .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        report.outputs.push((path.display().to_string(), 2));
    }
    if let Some(path) = &args.checkpoint {
        report
            .outputs
            .push((path.display().to_string(), out.state.visited_count()));
    }
    eprint!("{stats_lines}");
    report.count("orbits", s.orbits);
    report.count("full", s.full);
    report.count("flips", s.flips);
    report.count("regularity_checks", s.regularity_checks);
    report.count("expansions", s.expansions);
    report.count("complete", u64::from(out.complete));
    Ok(())
}

fn cmd_gkz(cli: &Cli, batch: &Path, report: &mut RunReport) -> Result<(), Failure> {
    let cfg = load_cfg(cli, report)?;
    let lat = HullFaceLattice::build(&cfg)?;
    let ts = load_batch(batch, &cfg, &lat, report)?;
    let lines = ts
        .iter()
        .map(|t| io::format_vector(triang::gkz_vector(&cfg, t).entries()))
        .collect();
    let records = write_records(cli, report, lines, true)?;
    report.count("records", records);
    Ok(())
}

/// --cache-file, or the digest-named file under $SECFAN_CACHE_DIR.
fn cache_path(args_path: &Option<PathBuf>, cfg: &PointConfiguration) -> Option<PathBuf> {
    args_path.clone().or_else(|| {
        std::env::var_os("SECFAN_CACHE_DIR")
            .map(|dir| PathBuf::from(dir).join(format!("{}.cache", io::config_digest(cfg))))
    })
}

fn cmd_massive(cli: &Cli, args: &MassiveArgs, report: &mut RunReport) -> Result<(), Failure> {
    let cfg = load_cfg(cli, report)?;
    let lat = HullFaceLattice::build(&cfg)?;
    let mc = mc_count(&lat)?;
    let ts = load_batch(&args.batch, &cfg, &lat, report)?;
    let lines = match args.engine {
        EngineArg::Direct => ts
            .iter()
            .map(|t| Ok(massive::eta_direct(&cfg, &lat, t)?.to_string()))
            .collect::<Result<Vec<_>, Failure>>()?,
        EngineArg::Cached => {
            let path = cache_path(&args.cache_file, &cfg);
            let cache = match &path {
                Some(p) if p.exists() => {
                    ContributionCache::load(&p.to_string_lossy(), &cfg)?
                }
                _ => ContributionCache::new(),
            };
            let lines = ts
                .iter()
                .map(|t| Ok(massive::eta_cached(&cfg, &lat, &mc, &cache, t)?.to_string()))
                .collect::<Result<Vec<_>, Failure>>()?;
            if let Some(p) = &path {
                cache.save(&p.to_string_lossy(), &cfg)?;
                report
                    .outputs
                    .push((p.display().to_string(), cache.len() as u64));
            }
            report.count("cache_cells", cache.len() as u64);
            lines
        }
    };
    let records = write_records(cli, report, lines, true)?;
    report.count("records", records);
    Ok(())
}

fn cmd_classes(cli: &Cli, batches: &[PathBuf], report: &mut RunReport) -> Result<(), Failure> {
    let cfg = load_cfg(cli, report)?;
    let group = load_group(cli, &cfg, report)?;
    let lat = HullFaceLattice::build(&cfg)?;
    let mc = mc_count(&lat)?;
    let cache = ContributionCache::new();
    let mut table = ClassTable::default();
    for path in batches {
        let reps = load_batch(path, &cfg, &lat, report)?;
        for (i, t) in reps.iter().enumerate() {
            let (canon, _) = group.canonical_representative(&cfg, t);
            if &canon != t {
                return Err(Failure::Input(format!(
                    "{} record {}: not a canonical representative",
                    path.display(),
                    i + 1
                )));
            }
        }
        let partial = classes::collect_classes(&cfg, &group, &lat, &mc, &cache, reps)?;
        table = table.merge(partial);
    }
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let vectors_path = dir.join("vectors.txt");
    let orbits_path = dir.join("orbits.txt");
    std::fs::write(&vectors_path, table.vectors_text())
        .map_err(|e| Failure::Input(format!("{}: {e}", vectors_path.display())))?;
    std::fs::write(&orbits_path, table.orbits_text(&group))
        .map_err(|e| Failure::Input(format!("{}: {e}", orbits_path.display())))?;
    report
        .outputs
        .push((vectors_path.display().to_string(), table.classes()));
    report
        .outputs
        .push((orbits_path.display().to_string(), table.orbit_count(&group)));
    println!("{}", table.summary_line(&group));
    if let Some(sum) = table.coordinate_sum() {
        eprintln!("coordinate-sum={sum}");
    }
    report.count("classes", table.classes());
    report.count("orbits", table.orbit_count(&group));
    report.count("triangulations", table.triangulations());
    Ok(())
}

fn cmd_check(cli: &Cli, batch: &Path, report: &mut RunReport) -> Result<(), Failure> {
    let cfg = load_cfg(cli, report)?;
    let lat = HullFaceLattice::build(&cfg)?;
    let ts = load_batch(batch, &cfg, &lat, report)?;
    let mut lines = Vec::new();
    let mut regular = 0u64;
    for t in &ts {
        match regularity::is_regular(&cfg, t)? {
            Some(cert) => {
                regular += 1;
                lines.push(format!(
                    "REGULAR {}",
                    io::format_rational_vector(&cert.heights)
                ));
            }
            None => lines.push("NOT_REGULAR".to_string()),
        }
    }
    let records = write_records(cli, report, lines, false)?;
    report.count("records", records);
    report.count("regular", regular);
    Ok(())
}

fn cmd_volume(cli: &Cli, report: &mut RunReport) -> Result<(), Failure> {
    let cfg = load_cfg(cli, report)?;
    let volume = triang::hull_volume(&cfg);
    write_records(cli, report, vec![volume.to_string()], false)?;
    report.count("volume", volume);
    Ok(())
}

fn cmd_recover(
    cli: &Cli,
    start: &Path,
    target: &Path,
    report: &mut RunReport,
) -> Result<(), Failure> {
    let cfg = load_cfg(cli, report)?;
    let group = load_group(cli, &cfg, report)?;
    let lat = HullFaceLattice::build(&cfg)?;
    let cache = RegularityCache::new();
    let mut sets = Vec::new();
    for path in [start, target] {
        let ts = load_batch(path, &cfg, &lat, report)?;
        for (i, t) in ts.iter().enumerate() {
            let (canon, _) = group.canonical_representative(&cfg, t);
            let describe = |what: &str| {
                Failure::Input(format!(
                    "{} record {}: not a {what} representative",
                    path.display(),
                    i + 1
                ))
            };
            if &canon != t {
                return Err(describe("canonical"));
            }
            if regularity::is_regular(&cfg, t)?.is_none() {
                return Err(describe("regular"));
            }
        }
        sets.push(ts);
    }
    let target_set = sets.pop().expect("two sets");
    let start_set = sets.pop().expect("one set");
    let reached = enumerate::recover_gap(&cfg, &group, &cache, &start_set, &target_set)?;
    let lines = reached.iter().map(|t| t.to_string()).collect();
    let records = write_records(cli, report, lines, true)?;
    report.count("records", records);
    Ok(())
}

fn cmd_bench(
    cli: &Cli,
    batch: &Path,
    repetitions: u32,
    report: &mut RunReport,
) -> Result<(), Failure> {
    if repetitions == 0 {
        return Err(Failure::Input(
            "--repetitions must be at least 1".to_string(),
        ));
    }
    let cfg = load_cfg(cli, report)?;
    let lat = HullFaceLattice::build(&cfg)?;
    let mc = mc_count(&lat)?;
    let ts = load_batch(batch, &cfg, &lat, report)?;
    let mut direct_times = Vec::new();
    for _ in 0..repetitions {
        let t0 = Instant::now();
        for t in &ts {
            massive::eta_direct(&cfg, &lat, t)?;
        }
        direct_times.push(t0.elapsed().as_secs_f64());
    }
    direct_times.sort_by(f64::total_cmp);
    let direct_median = direct_times[direct_times.len() / 2];
    let cache = ContributionCache::new();
    let t0 = Instant::now();
    for t in &ts {
        massive::eta_cached(&cfg, &lat, &mc, &cache, t)?;
    }
    let cached_cold = t0.elapsed().as_secs_f64();
    let mut warm_times = Vec::new();
    for _ in 0..repetitions {
        let t0 = Instant::now();
        for t in &ts {
            massive::eta_cached(&cfg, &lat, &mc, &cache, t)?;
        }
        warm_times.push(t0.elapsed().as_secs_f64());
    }
    let cached_warm = warm_times.iter().copied().fold(f64::INFINITY, f64::min);
    let lines = vec![
        format!("batch={}", ts.len()),
        format!("repetitions={repetitions}"),
        format!("direct_median_s={direct_median:.6}"),
        format!("cached_cold_s={cached_cold:.6}"),
        format!("cached_warm_s={cached_warm:.6}"),
        format!("speedup={:.3}", direct_median / cached_warm.max(1e-9)),
    ];
    write_records(cli, report, lines, false)?;
    report.count("records", ts.len() as u64);
    Ok(())
}
