//! Command-line front end for the dance benchmark harness.

use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use dancebench_core::bench::{
    capture_stream, load_profiles, prepare_reference, run_bench, run_validation_study, BenchConfig, Setting,
};
use dancebench_core::choreo::{default_songs, generate_song};
use dancebench_core::filters::{dyn_preprocess, smo_filter};
use dancebench_core::format::{read_motion_file, write_motion_file};
use dancebench_core::metrics::{detect_fall, pa_mpjpe, TrialMetrics};
use dancebench_core::pipeline::run_pipeline;
use dancebench_core::report::{self, render_report, validation_text, ReportFormat};
use dancebench_core::score::score_trial;
use dancebench_core::sim::{simulate_execution, trial_seed, PlayerProfile};
use dancebench_core::stats::{cv, icc, kendall_w, pearson, IccKind, TrialMatrix};
use dancebench_core::stream::{receive_stream, StreamSender, DEFAULT_PORT};
use dancebench_core::{Difficulty, Error, MotionSequence, Skeleton};
use serde_json::json;

/// Exit status for validation and usage errors.
const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
/// Exit status when a statistic is undefined for the given data.
const EXIT_DEGENERATE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "dancebench", version, about = "Motion-tracking benchmark harness")]
struct Cli {
    /// JSON benchmark configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base random seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pace the streaming pipeline in real time.
    #[arg(long, global = true, value_enum)]
    paced: Option<OnOff>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one trial of a player on a song.
    Run(RunArgs),
    /// Run the benchmark (or the validation study) and write reports.
    Bench(BenchArgs),
    /// Reliability statistics of a subjects × repeats CSV matrix.
    Stats(StatsArgs),
    /// Apply the streaming or offline preprocessing to a motion file.
    Convert(ConvertArgs),
    /// Score an execution against a reference.
    Score(PairArgs),
    /// Tracking and smoothness metrics of an execution against a reference.
    Metrics(PairArgs),
    /// Send or receive a reference stream over UDP.
    #[command(subcommand)]
    Stream(StreamCommand),
    /// Re-render a JSON benchmark report.
    Report(ReportArgs),
    /// Write the built-in fixture songs.
    GenSongs,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    song: PathBuf,
    #[arg(long, default_value = "raw")]
    setting: String,
    /// JSON array of profiles; the first one (or `--player`) is used.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Profile name to pick from the profile file.
    #[arg(long)]
    player: Option<String>,
    #[arg(long, default_value_t = 0)]
    repeat: usize,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Directory of `.sjd` songs.
    #[arg(long)]
    songs: Option<PathBuf>,
    /// JSON array of player profiles.
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Comma-separated subset of smo, dyn, raw.
    #[arg(long, value_delimiter = ',')]
    settings: Option<Vec<String>>,
    #[arg(long)]
    repeats: Option<usize>,
    /// Seconds added to execution timestamps before scoring.
    #[arg(long)]
    offset: Option<f64>,
    /// Comma-separated subset of csv, json, svg, text.
    #[arg(long, value_delimiter = ',', default_value = "csv,json,svg,text")]
    formats: Vec<String>,
    /// Run the validation study instead of the benchmark.
    #[arg(long)]
    validation: bool,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// CSV of scores: one row per subject, one column per repeat. A header
    /// row and a leading id column are detected automatically.
    matrix: PathBuf,
    /// CSV of the same shape holding an error measure to correlate with.
    #[arg(long)]
    against: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "icc21")]
    icc: IccArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum IccArg {
    Icc1,
    Icc21,
    Icc31,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Smo,
    Dyn,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long = "in")]
    input: PathBuf,
    /// Output file; defaults to `<out>/<stem>.<mode>.sjd`.
    #[arg(long)]
    to: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PairArgs {
    #[arg(long)]
    exec: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Seconds added to execution timestamps before comparing.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
}

#[derive(Subcommand, Debug)]
enum StreamCommand {
    /// Stream a motion file as keyframes through the interpolator to UDP.
    Send {
        #[arg(long = "in")]
        input: PathBuf,
        /// Keyframe rate the file is sampled at, Hz.
        #[arg(long, default_value_t = 5.0)]
        rate: f64,
        /// Intermediate frames per keyframe span.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
        target: String,
    },
    /// Receive a stream and write it as a motion file.
    Recv {
        #[arg(long = "to")]
        output: PathBuf,
        #[arg(long, default_value_t = format!("127.0.0.1:{DEFAULT_PORT}"))]
        bind: String,
        /// Seconds without a datagram before giving up.
        #[arg(long, default_value_t = 5.0)]
        timeout: f64,
        #[arg(long, default_value = "stream")]
        song_id: String,
    },
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// JSON report written by `bench`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "csv,svg,text")]
    formats: Vec<String>,
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = error
            .chain()
            .find_map(|e| {
                if let Some(core) = e.downcast_ref::<Error>() {
                    return Some(match core {
                        Error::Io(_) => EXIT_IO,
                        Error::DegenerateGeometry(_) | Error::EmptyWindow(_) | Error::DegenerateInput(_) => {
                            EXIT_DEGENERATE
                        }
                        _ => EXIT_VALIDATION,
                    });
                }
                e.downcast_ref::<std::io::Error>().map(|_| EXIT_IO)
            })
            .unwrap_or(EXIT_VALIDATION);
        Self { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_VALIDATION) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> CliResult {
    let mut cfg = match &cli.config {
        Some(p) => BenchConfig::load(p).with_context(|| format!("loading config {}", p.display()))?,
        None => BenchConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(p) = cli.paced {
        cfg.interpolator.paced = matches!(p, OnOff::On);
    }
    match cli.command {
        Command::Run(a) => cmd_run(&cfg, a),
        Command::Bench(a) => cmd_bench(cfg, a),
        Command::Stats(a) => cmd_stats(a),
        Command::Convert(a) => cmd_convert(&cfg, a),
        Command::Score(a) => cmd_score(&cfg, a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Stream(s) => cmd_stream(&cfg, s),
        Command::Report(a) => cmd_report(&cfg, a),
        Command::GenSongs => cmd_gen_songs(&cfg),
    }
}

fn read_seq(path: &Path) -> CliResult<MotionSequence> {
    Ok(read_motion_file(path).with_context(|| format!("reading {}", path.display()))?)
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn shifted(seq: &MotionSequence, offset: f64) -> CliResult<MotionSequence> {
    if offset == 0.0 {
        return Ok(seq.clone());
    }
    let frames = seq
        .frames()
        .iter()
        .map(|f| {
            let mut f = f.clone();
            f.timestamp += offset;
            f
        })
        .collect();
    Ok(seq.with_frames(frames, seq.nominal_rate())?)
}

fn cmd_run(cfg: &BenchConfig, a: RunArgs) -> CliResult {
    let song = read_seq(&a.song)?;
    let setting: Setting = a.setting.parse()?;
    let profile = match &a.profile {
        Some(p) => {
            let all = load_profiles(p)?;
            match &a.player {
                Some(name) => all
                    .into_iter()
                    .find(|p| &p.name == name)
                    .with_context(|| format!("no profile named '{name}'"))?,
                None => all.into_iter().next().expect("load_profiles rejects empty files"),
            }
        }
        None => PlayerProfile::perfect("perfect"),
    };
    let raw = capture_stream(&song, &cfg.capture, trial_seed(cfg.seed, usize::MAX, 0, a.repeat))?;
    let reference = prepare_reference(&raw, setting, cfg)?;
    let seed = trial_seed(cfg.seed, 0, 0, a.repeat);
    let (execution, fall) = simulate_execution(&reference, &profile.with_seed(seed))?;
    let mut metrics = TrialMetrics::compute(&execution, &reference, &fall)?;
    metrics.pa_mpjpe = Some(pa_mpjpe(&execution, &reference)?.mm);
    metrics.score = score_trial(&shifted(&execution, cfg.offset)?, &song, &cfg.score)?.total;
    if let Some(out) = &cli_out(cfg) {
        std::fs::create_dir_all(out).map_err(anyhow::Error::from)?;
        write_motion_file(&execution, out.join(format!("{}.{setting}.exec.sjd", song.song_id())))?;
        write_motion_file(&reference, out.join(format!("{}.{setting}.ref.sjd", song.song_id())))?;
    }
    print_json(&json!({
        "player": profile.name,
        "setting": setting,
        "song": song.song_id(),
        "seed": seed,
        "metrics": metrics,
    }));
    Ok(())
}

/// The output directory, unless it is the unconfigured default.
fn cli_out(cfg: &BenchConfig) -> Option<PathBuf> {
    (cfg.output_dir != BenchConfig::default().output_dir).then(|| cfg.output_dir.clone())
}

fn parse_formats(v: &[String]) -> CliResult<Vec<ReportFormat>> {
    Ok(v.iter().map(|s| s.parse()).collect::<dancebench_core::Result<Vec<_>>>()?)
}

fn cmd_bench(mut cfg: BenchConfig, a: BenchArgs) -> CliResult {
    if let Some(s) = a.songs {
        cfg.songs = s;
    }
    if let Some(c) = a.cohort {
        cfg.cohort = Some(c);
    }
    if let Some(s) = a.settings {
        cfg.settings = s.iter().map(|x| x.parse()).collect::<dancebench_core::Result<Vec<Setting>>>()?;
    }
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    if let Some(o) = a.offset {
        cfg.offset = o;
    }
    let formats = parse_formats(&a.formats)?;
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("creating {}", cfg.output_dir.display()))?;

    if a.validation {
        if cfg.repeats < 2 {
            cfg.repeats = 4;
            log::info!("validation study uses 4 repeats");
        }
        let v = run_validation_study(&cfg)?;
        let text = validation_text(&v);
        std::fs::write(cfg.output_dir.join("validation.txt"), &text).map_err(anyhow::Error::from)?;
        std::fs::write(
            cfg.output_dir.join("validation.json"),
            serde_json::to_string_pretty(&v).expect("serializable"),
        )
        .map_err(anyhow::Error::from)?;
        print!("{text}");
        if v.is_degenerate() {
            return Err(Failure { code: EXIT_DEGENERATE, error: anyhow::anyhow!("degenerate statistics: {}", v.degenerate.join("; ")) });
        }
        return Ok(());
    }

    let r = run_bench(&cfg)?;
    let written = render_report(&r, &formats, &cfg.output_dir)?;
    print!("{}", report::text_table(&r));
    for p in written {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

/// Reads a numeric CSV matrix, skipping a header row and an id column when
/// they are not numeric.
fn read_matrix(path: &Path) -> CliResult<(Vec<Vec<f64>>, Vec<String>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let records: Vec<csv::StringRecord> =
        rdr.records().collect::<Result<_, _>>().with_context(|| format!("parsing {}", path.display()))?;
    let numeric = |s: &str| s.parse::<f64>().is_ok();
    let mut records = records.as_slice();
    if let Some(first) = records.first() {
        if first.iter().skip(1).any(|c| !numeric(c)) {
            records = &records[1..];
        }
    }
    let has_ids = records.iter().any(|r| r.get(0).is_some_and(|c| !numeric(c)));
    let mut rows = Vec::new();
    let mut ids = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let cells: Vec<&str> = r.iter().collect();
        let (id, vals) = if has_ids { (cells[0].to_string(), &cells[1..]) } else { (format!("s{i}"), &cells[..]) };
        let parsed = vals
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| Error::Validation(format!("row {}: '{c}' is not a number", i + 1))))
            .collect::<dancebench_core::Result<Vec<f64>>>()?;
        rows.push(parsed);
        ids.push(id);
    }
    if rows.is_empty() {
        return Err(Error::Validation(format!("{} has no data rows", path.display())).into());
    }
    Ok((rows, ids))
}

fn cmd_stats(a: StatsArgs) -> CliResult {
    let (rows, ids) = read_matrix(&a.matrix)?;
    let k = rows[0].len();
    let m = TrialMatrix::new(rows.clone(), ids.clone(), (0..k).map(|j| format!("c{j}")).collect())?;
    let kind = match a.icc {
        IccArg::Icc1 => IccKind::Icc1,
        IccArg::Icc21 => IccKind::Icc21,
        IccArg::Icc31 => IccKind::Icc31,
    };
    let mut degenerate: Vec<String> = Vec::new();
    let mut keep = |name: &str, r: dancebench_core::Result<f64>| -> CliResult<Option<f64>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(Error::DegenerateInput(msg)) => {
                degenerate.push(format!("{name}: {msg}"));
                Ok(None)
            }
            Err(e) => Err(e.into()),
        }
    };
    let icc_v = keep("icc", icc(&m, kind))?;
    let mut cvs = Vec::new();
    for (id, row) in ids.iter().zip(&rows) {
        cvs.push(json!({"subject": id, "cv_percent": keep(&format!("cv[{id}]"), cv(row))?}));
    }
    let judges: Vec<Vec<f64>> = (0..k).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    let w = keep("kendall_w", kendall_w(&judges))?;
    let mut out = json!({ "subjects": rows.len(), "repeats": k, "icc": icc_v, "icc_kind": format!("{kind:?}"), "kendall_w": w, "cv": cvs });
    if let Some(path) = &a.against {
        let (other, _) = read_matrix(path)?;
        let x: Vec<f64> = rows.iter().flatten().copied().collect();
        let y: Vec<f64> = other.iter().flatten().copied().collect();
        match pearson(&x, &y) {
            Ok(c) => out["pearson"] = json!(c),
            Err(Error::DegenerateInput(msg)) => degenerate.push(format!("pearson: {msg}")),
            Err(e) => return Err(e.into()),
        }
    }
    out["degenerate"] = json!(degenerate);
    print_json(&out);
    if !degenerate.is_empty() {
        return Err(Failure { code: EXIT_DEGENERATE, error: anyhow::anyhow!("degenerate statistics: {}", degenerate.join("; ")) });
    }
    Ok(())
}

fn cmd_convert(cfg: &BenchConfig, a: ConvertArgs) -> CliResult {
    let seq = read_seq(&a.input)?;
    let (out, tag) = match a.mode {
        Mode::Smo => (smo_filter(&seq, &cfg.smo)?, "smo"),
        Mode::Dyn => (dyn_preprocess(&seq, &cfg.dyn_cfg)?, "dyn"),
    };
    let target = match a.to {
        Some(t) => t,
        None => {
            let stem = a.input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "motion".into());
            std::fs::create_dir_all(&cfg.output_dir).map_err(anyhow::Error::from)?;
            cfg.output_dir.join(format!("{stem}.{tag}.sjd"))
        }
    };
    write_motion_file(&out, &target)?;
    println!("{}", target.display());
    Ok(())
}

fn cmd_score(cfg: &BenchConfig, a: PairArgs) -> CliResult {
    let exec = shifted(&read_seq(&a.exec)?, a.offset)?;
    let reference = read_seq(&a.reference)?;
    print_json(&score_trial(&exec, &reference, &cfg.score)?);
    Ok(())
}

fn cmd_metrics(a: PairArgs) -> CliResult {
    let exec = shifted(&read_seq(&a.exec)?, a.offset)?;
    let reference = read_seq(&a.reference)?;
    let fall = detect_fall(&exec, exec.skeleton());
    let mut m = TrialMetrics::compute(&exec, &reference, &fall)?;
    m.pa_mpjpe = match pa_mpjpe(&exec, &reference) {
        Ok(p) => Some(p.mm),
        Err(Error::DegenerateGeometry(_) | Error::EmptyWindow(_)) => None,
        Err(e) => return Err(e.into()),
    };
    print_json(&m);
    Ok(())
}

fn cmd_stream(cfg: &BenchConfig, s: StreamCommand) -> CliResult {
    match s {
        StreamCommand::Send { input, rate, n, target } => {
            let seq = read_seq(&input)?;
            let keys = seq.resample_uniform(rate)?;
            let mut icfg = cfg.interpolator;
            icfg.input_rate_hint = rate;
            icfg.n_intermediate = n;
            let sender = StreamSender::connect(&target).with_context(|| format!("connecting to {target}"))?;
            let (stats, sender) = run_pipeline(keys.into_frames(), sender, &icfg)?;
            print_json(&json!({ "pipeline": stats, "packets": sender.next_sequence(), "send_errors": sender.send_errors }));
            Ok(())
        }
        StreamCommand::Recv { output, bind, timeout, song_id } => {
            if !(timeout > 0.0 && timeout.is_finite()) {
                return Err(Error::Validation("timeout must be positive".into()).into());
            }
            let socket = UdpSocket::bind(&bind).with_context(|| format!("binding {bind}"))?;
            let mut frames = Vec::new();
            let stats = receive_stream(&socket, Duration::from_secs_f64(timeout), |p| frames.push(p.to_pose_frame()))
                .map_err(anyhow::Error::from)?;
            eprintln!("{}", serde_json::to_string(&stats).expect("serializable"));
            let joints = frames.first().map(|f| f.joint_angles.len()).unwrap_or(0);
            let skeleton = if joints == 24 { Skeleton::smpl(0.9)? } else { Skeleton::numbered(joints, 0.9, 0)? };
            let rate = if frames.len() > 1 {
                (frames.len() - 1) as f64 / (frames[frames.len() - 1].timestamp - frames[0].timestamp)
            } else {
                return Err(Error::Validation(format!("received {} frames; a motion file needs at least 2", frames.len())).into());
            };
            let seq = MotionSequence::new(skeleton, frames, rate, Difficulty::Easy, song_id)?;
            write_motion_file(&seq, &output)?;
            print_json(&stats);
            Ok(())
        }
    }
}

fn cmd_report(cfg: &BenchConfig, a: ReportArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let r = report::from_json(&text)?;
    let written = render_report(&r, &parse_formats(&a.formats)?, &cfg.output_dir)?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_gen_songs(cfg: &BenchConfig) -> CliResult {
    std::fs::create_dir_all(&cfg.output_dir).map_err(anyhow::Error::from)?;
    for spec in default_songs() {
        let path = cfg.output_dir.join(format!("{}.sjd", spec.id));
        write_motion_file(&generate_song(&spec)?, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}
