//! Benchmark harness: runs players over songs under each input setting and
//! aggregates the results into controller-comparison rows.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{validation, Error, Result};
use crate::filters::{dyn_preprocess, smo_filter, DynConfig, SmoFilterConfig};
use crate::format::read_motion_file;
use crate::interp::{interpolate_span, InterpolatorConfig};
use crate::metrics::{pa_mpjpe, success_rate, FallRecord, TrialMetrics};
use crate::motion::{Difficulty, MotionSequence, PoseFrame};
use crate::quat::Vec3;
use crate::score::{aggregate_scores, score_trial, ScoreModel};
use crate::sim::{cohort, graded_cohort, simulate_execution, trial_seed, CohortOptions, PlayerProfile};
use crate::stats::{cv, icc_2_1, kendall_w, pearson, Correlation, ReliabilityReport};

/// Header line attached to every report so the score column is never read as
/// a real in-game score.
pub const PROVENANCE_NOTE: &str =
    "JDS columns are score-model estimates computed by this harness, not scores reported by the game";

/// Reference preparation applied before a player tracks a song.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    /// Causal streaming: sparse keyframes, interpolation, causal smoothing.
    Smo,
    /// Offline: uniform resampling and zero-phase smoothing.
    Dyn,
    /// The captured stream as-is.
    Raw,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Smo, Setting::Dyn, Setting::Raw];
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Smo => "Smo",
            Setting::Dyn => "Dyn",
            Setting::Raw => "Raw",
        })
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "smo" => Ok(Setting::Smo),
            "dyn" => Ok(Setting::Dyn),
            "raw" => Ok(Setting::Raw),
            _ => Err(validation(format!("unknown setting '{s}' (expected smo, dyn or raw)"))),
        }
    }
}

/// Perception noise added to a song to produce the captured stream the
/// settings start from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptureConfig {
    /// Rate of the sparse keyframes the streaming path receives, Hz.
    pub keyframe_rate: f64,
    /// Joint-angle jitter, radians.
    pub angle_noise: f64,
    /// Joint and root position jitter, meters.
    pub position_noise: f64,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self { keyframe_rate: 5.0, angle_noise: 0.03, position_noise: 0.01 }
    }
}

impl CaptureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.keyframe_rate > 0.0 && self.keyframe_rate.is_finite()) {
            return Err(validation("capture keyframe_rate must be positive"));
        }
        if !(self.angle_noise >= 0.0 && self.position_noise >= 0.0) {
            return Err(validation("capture noise must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Directory of `.sjd` song files.
    pub songs: PathBuf,
    /// JSON array of player profiles; `None` uses [`bench_players`] for the
    /// benchmark and a graded cohort for the validation study.
    pub cohort: Option<PathBuf>,
    pub settings: Vec<Setting>,
    pub repeats: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Seconds added to execution timestamps before scoring against the song.
    pub offset: f64,
    pub capture: CaptureConfig,
    pub interpolator: InterpolatorConfig,
    pub smo: SmoFilterConfig,
    #[serde(rename = "dyn")]
    pub dyn_cfg: DynConfig,
    pub score: ScoreModel,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            songs: PathBuf::from("songs"),
            cohort: None,
            settings: vec![Setting::Smo, Setting::Dyn],
            repeats: 3,
            seed: 0,
            output_dir: PathBuf::from("out"),
            offset: 0.0,
            capture: CaptureConfig::default(),
            interpolator: InterpolatorConfig::default(),
            smo: SmoFilterConfig::default(),
            dyn_cfg: DynConfig::default(),
            score: ScoreModel::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(validation("repeats must be at least 1"));
        }
        if self.settings.is_empty() {
            return Err(validation("at least one setting is required"));
        }
        if !self.offset.is_finite() {
            return Err(validation("offset must be finite"));
        }
        self.capture.validate()?;
        self.interpolator.validate()?;
        self.smo.validate()?;
        self.score.validate()
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| validation(format!("bad config: {e}")))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Three controller stand-ins with distinct tracking/stability trade-offs.
/// Their fall hazard scales with reference jerk, so jerkier references fail
/// more often.
pub fn bench_players() -> Vec<PlayerProfile> {
    let p = |name: &str, lag, noise, angle, cutoff, hazard| PlayerProfile {
        name: name.to_string(),
        lag,
        noise_sigma: noise,
        angle_noise_sigma: angle,
        tracking_cutoff: Some(cutoff),
        fall_hazard_gain: hazard,
        seed: 0,
    };
    vec![
        p("CtrlA", 0.08, 0.03, 0.04, 4.0, 6.0e-5),
        p("CtrlB", 0.12, 0.04, 0.05, 3.0, 4.0e-5),
        p("CtrlC", 0.05, 0.025, 0.03, 5.0, 9.0e-5),
    ]
}

/// Loads profiles from a JSON array.
pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<PlayerProfile>> {
    let text = std::fs::read_to_string(path)?;
    let profiles: Vec<PlayerProfile> =
        serde_json::from_str(&text).map_err(|e| validation(format!("bad profile file: {e}")))?;
    if profiles.is_empty() {
        return Err(validation("profile file lists no players"));
    }
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Erratum {
    pub file: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongSource {
    pub file: String,
    pub song_id: String,
    pub difficulty: Difficulty,
    pub sha256: String,
}

/// Songs loaded from a directory, sorted by file name.
#[derive(Debug, Clone)]
pub struct SongSet {
    pub songs: Vec<MotionSequence>,
    pub sources: Vec<SongSource>,
    pub errata: Vec<Erratum>,
}

/// Reads every `.sjd` file in `dir`. Files that fail to parse are listed in
/// the errata rather than aborting the load.
pub fn load_songs(dir: impl AsRef<Path>) -> Result<SongSet> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir.as_ref())?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "sjd"));
    paths.sort();
    let mut set = SongSet { songs: Vec::new(), sources: Vec::new(), errata: Vec::new() };
    for path in paths {
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        let loaded = std::fs::read(&path).map_err(Error::from).and_then(|bytes| {
            let seq = read_motion_file(&path)?;
            Ok((seq, hex(&Sha256::digest(&bytes))))
        });
        match loaded {
            Ok((seq, sha256)) => {
                set.sources.push(SongSource {
                    file,
                    song_id: seq.song_id().to_string(),
                    difficulty: seq.difficulty(),
                    sha256,
                });
                set.songs.push(seq);
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                set.errata.push(Erratum { file, error: e.to_string() });
            }
        }
    }
    Ok(set)
}

/// Adds seeded capture jitter to every frame except the root orientation.
pub fn capture_stream(song: &MotionSequence, cfg: &CaptureConfig, seed: u64) -> Result<MotionSequence> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = Normal::new(0.0, cfg.position_noise).map_err(|e| validation(e.to_string()))?;
    let ang = Normal::new(0.0, cfg.angle_noise).map_err(|e| validation(e.to_string()))?;
    let mut jitter = |v: &mut Vec3| *v += Vec3::new(pos.sample(&mut rng), pos.sample(&mut rng), pos.sample(&mut rng));
    let frames: Vec<PoseFrame> = song
        .frames()
        .iter()
        .map(|f| {
            let mut f = f.clone();
            jitter(&mut f.root_position);
            f.joint_positions.iter_mut().for_each(&mut jitter);
            f
        })
        .collect();
    let frames = frames
        .into_iter()
        .map(|mut f| {
            f.joint_angles.iter_mut().for_each(|a| *a += ang.sample(&mut rng));
            f
        })
        .collect();
    song.with_frames(frames, song.nominal_rate())
}

/// The streaming reference: keyframes at the capture keyframe rate,
/// interpolated, causally filtered and delayed by the interpolator latency.
pub fn streaming_reference(raw: &MotionSequence, cfg: &BenchConfig) -> Result<MotionSequence> {
    cfg.interpolator.validate()?;
    let keys = raw.resample_uniform(cfg.capture.keyframe_rate)?;
    let n = cfg.interpolator.n_intermediate;
    let mut frames = vec![keys.frames()[0].clone()];
    for pair in keys.frames().windows(2) {
        frames.extend(interpolate_span(&pair[0], &pair[1], n)?);
    }
    let rate = cfg.capture.keyframe_rate * (n + 1) as f64;
    let interpolated = raw.with_frames(frames, rate)?;
    let filtered = smo_filter(&interpolated, &cfg.smo)?;
    Ok(shift(&filtered, cfg.interpolator.latency()))
}

/// Reference a player tracks under `setting`.
pub fn prepare_reference(raw: &MotionSequence, setting: Setting, cfg: &BenchConfig) -> Result<MotionSequence> {
    match setting {
        Setting::Smo => streaming_reference(raw, cfg),
        Setting::Dyn => dyn_preprocess(raw, &cfg.dyn_cfg),
        Setting::Raw => Ok(raw.clone()),
    }
}

fn shift(seq: &MotionSequence, dt: f64) -> MotionSequence {
    if dt == 0.0 {
        return seq.clone();
    }
    let frames = seq
        .frames()
        .iter()
        .map(|f| PoseFrame { timestamp: f.timestamp + dt, ..f.clone() })
        .collect();
    seq.with_frames(frames, seq.nominal_rate()).expect("shifting preserves validity")
}

fn capture_seed(base: u64, song: usize, repeat: usize) -> u64 {
    trial_seed(!base, usize::MAX, song, repeat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchTrial {
    pub player: String,
    pub setting: Setting,
    pub song: String,
    pub difficulty: Difficulty,
    pub repeat: usize,
    pub seed: u64,
    pub metrics: TrialMetrics,
}

/// One player × setting line, in the column order of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub player: String,
    pub setting: Setting,
    pub jds_easy: Option<f64>,
    pub jds_hard: Option<f64>,
    pub jds_all: Option<f64>,
    /// Millimeters; `None` when every trial fell before its first frame.
    pub mpjpe_active: Option<f64>,
    pub mpjpe_all: f64,
    /// Percent of clean trials.
    pub sr: f64,
    /// rad/s³
    pub jerk: f64,
    /// rad/s²
    pub acc: f64,
    pub trials: usize,
    pub easy_trials: usize,
    pub hard_trials: usize,
}

impl BenchRow {
    pub fn label(&self) -> String {
        format!("{}-{}", self.player, self.setting)
    }

    /// Aggregates trials of one player and setting.
    pub fn from_trials(player: &str, setting: Setting, trials: &[&BenchTrial]) -> Result<Self> {
        if trials.is_empty() {
            return Err(validation(format!("no trials for {player}-{setting}")));
        }
        let n = trials.len() as f64;
        let mean = |f: &dyn Fn(&TrialMetrics) -> f64| trials.iter().map(|t| f(&t.metrics)).sum::<f64>() / n;
        let scores: Vec<(f64, Difficulty)> = trials.iter().map(|t| (t.metrics.score, t.difficulty)).collect();
        let summary = aggregate_scores(&scores)?;
        let active: Vec<f64> = trials.iter().filter_map(|t| t.metrics.mpjpe_active).collect();
        let falls: Vec<FallRecord> = trials.iter().map(|t| t.metrics.fall).collect();
        Ok(Self {
            player: player.to_string(),
            setting,
            jds_easy: summary.easy,
            jds_hard: summary.hard,
            jds_all: summary.all,
            mpjpe_active: (!active.is_empty()).then(|| active.iter().sum::<f64>() / active.len() as f64),
            mpjpe_all: mean(&|m| m.mpjpe_all),
            sr: success_rate(&falls)?,
            jerk: mean(&|m| m.jerk),
            acc: mean(&|m| m.acceleration),
            trials: trials.len(),
            easy_trials: trials.iter().filter(|t| t.difficulty == Difficulty::Easy).count(),
            hard_trials: trials.iter().filter(|t| t.difficulty == Difficulty::Hard).count(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub note: String,
    pub config_hash: String,
    pub seed: u64,
    pub songs: Vec<SongSource>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub provenance: Provenance,
    pub rows: Vec<BenchRow>,
    pub trials: Vec<BenchTrial>,
    pub errata: Vec<Erratum>,
}

impl BenchReport {
    pub fn row(&self, player: &str, setting: Setting) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.player == player && r.setting == setting)
    }
}

/// Runs the benchmark over the songs in `cfg.songs`.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let set = load_songs(&cfg.songs)?;
    let players = match &cfg.cohort {
        Some(path) => load_profiles(path)?,
        None => bench_players(),
    };
    run_bench_with(cfg, &players, set)
}

/// Runs the benchmark over already-loaded songs.
pub fn run_bench_with(cfg: &BenchConfig, players: &[PlayerProfile], set: SongSet) -> Result<BenchReport> {
    cfg.validate()?;
    if players.is_empty() {
        return Err(validation("no players to benchmark"));
    }
    if set.songs.is_empty() {
        return Err(validation(format!("no readable songs ({} unreadable)", set.errata.len())));
    }
    let mut settings: Vec<Setting> = Vec::new();
    for s in &cfg.settings {
        if !settings.contains(s) {
            settings.push(*s);
        }
    }
    let songs = &set.songs;

    // References depend on the song, repeat and setting but not on the
    // player, so every player tracks the same captured stream.
    let ref_jobs: Vec<(usize, usize, usize)> = (0..settings.len())
        .flat_map(|k| (0..songs.len()).flat_map(move |s| (0..cfg.repeats).map(move |r| (k, s, r))))
        .collect();
    let references = ref_jobs
        .par_iter()
        .map(|&(k, s, r)| {
            let raw = capture_stream(&songs[s], &cfg.capture, capture_seed(cfg.seed, s, r))?;
            prepare_reference(&raw, settings[k], cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = |k: usize, s: usize, r: usize| &references[(k * songs.len() + s) * cfg.repeats + r];

    let jobs: Vec<(usize, usize, usize, usize)> = (0..players.len())
        .flat_map(|p| ref_jobs.iter().map(move |&(k, s, r)| (p, k, s, r)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(p, k, s, r)| {
            let seed = trial_seed(cfg.seed, p, s, r);
            let reference = reference(k, s, r);
            let (execution, fall) = simulate_execution(reference, &players[p].with_seed(seed))?;
            let mut metrics = TrialMetrics::compute(&execution, reference, &fall)?;
            metrics.pa_mpjpe = Some(pa_mpjpe(&execution, reference)?.mm);
            metrics.score = score_trial(&shift(&execution, cfg.offset), &songs[s], &cfg.score)?.total;
            Ok(BenchTrial {
                player: players[p].name.clone(),
                setting: settings[k],
                song: songs[s].song_id().to_string(),
                difficulty: songs[s].difficulty(),
                repeat: r,
                seed,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = trials
        .chunks(songs.len() * cfg.repeats)
        .enumerate()
        .map(|(i, chunk)| {
            let refs: Vec<&BenchTrial> = chunk.iter().collect();
            BenchRow::from_trials(&players[i / settings.len()].name, chunk[0].setting, &refs)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(BenchReport {
        provenance: Provenance {
            note: PROVENANCE_NOTE.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            songs: set.sources,
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
        trials,
        errata: set.errata,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongCorrelation {
    pub song: String,
    pub n: usize,
    /// Pearson correlation of score with PA-MPJPE; `None` when degenerate.
    pub correlation: Option<Correlation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCv {
    pub profile: String,
    pub song: String,
    pub mean_score: f64,
    pub cv_percent: Option<f64>,
}

/// Validity and repeatability statistics of a player cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub note: String,
    pub config_hash: String,
    pub seed: u64,
    pub profiles: Vec<String>,
    pub songs: Vec<String>,
    pub repeats: usize,
    pub trials: usize,
    pub per_song: Vec<SongCorrelation>,
    pub pooled: Option<Correlation>,
    pub icc: Option<f64>,
    pub cells: Vec<CellCv>,
    /// Mean of the defined per-cell CVs.
    pub mean_cv_percent: Option<f64>,
    pub kendall_w: Option<f64>,
    /// Statistics that could not be computed, with the reason.
    pub degenerate: Vec<String>,
    /// Summary line; present only when every statistic is defined.
    pub reliability: Option<ReliabilityReport>,
    pub errata: Vec<Erratum>,
}

impl ValidationReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate.is_empty()
    }
}

/// Keeps a statistic, or records why it is undefined. Errors other than
/// degenerate input propagate.
fn flag<T>(r: Result<T>, what: &str, degenerate: &mut Vec<String>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::DegenerateInput(msg)) => {
            degenerate.push(format!("{what}: {msg}"));
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Runs the validation study over the songs in `cfg.songs`.
pub fn run_validation_study(cfg: &BenchConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let set = load_songs(&cfg.songs)?;
    let profiles = match &cfg.cohort {
        Some(path) => load_profiles(path)?,
        None => graded_cohort(10),
    };
    run_validation_with(cfg, &profiles, set)
}

/// Runs every profile on every song `cfg.repeats` times against the song
/// itself, then relates scores to PA-MPJPE and measures score repeatability.
pub fn run_validation_with(cfg: &BenchConfig, profiles: &[PlayerProfile], set: SongSet) -> Result<ValidationReport> {
    cfg.validate()?;
    if profiles.len() < 2 {
        return Err(validation("validation needs at least 2 profiles"));
    }
    if cfg.repeats < 2 {
        return Err(validation("validation needs at least 2 repeats"));
    }
    if set.songs.is_empty() {
        return Err(validation(format!("no readable songs ({} unreadable)", set.errata.len())));
    }
    let opts = CohortOptions { base_seed: cfg.seed, score_model: cfg.score.clone(), keep_executions: false };
    let c = cohort(profiles, &set.songs, cfg.repeats, &opts)?;
    let mut degenerate = Vec::new();

    let pa = |p: usize, s: usize, r: usize| c.trial(p, s, r).metrics.pa_mpjpe.expect("cohort fills PA-MPJPE");
    let score = |p: usize, s: usize, r: usize| c.trial(p, s, r).metrics.score;
    let (mut all_x, mut all_y) = (Vec::new(), Vec::new());
    let mut per_song = Vec::new();
    for (s, sid) in c.song_ids.iter().enumerate() {
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for p in 0..profiles.len() {
            for r in 0..c.repeats {
                x.push(score(p, s, r));
                y.push(pa(p, s, r));
            }
        }
        let correlation = flag(pearson(&x, &y), &format!("pearson[{sid}]"), &mut degenerate)?;
        per_song.push(SongCorrelation { song: sid.clone(), n: x.len(), correlation });
        all_x.extend(x);
        all_y.extend(y);
    }
    let pooled = flag(pearson(&all_x, &all_y), "pearson[pooled]", &mut degenerate)?;
    let icc = flag(icc_2_1(&c.score_matrix()?), "icc", &mut degenerate)?;

    let mut cells = Vec::new();
    for (p, pname) in c.profile_names.iter().enumerate() {
        for (s, sid) in c.song_ids.iter().enumerate() {
            let v: Vec<f64> = (0..c.repeats).map(|r| score(p, s, r)).collect();
            let mean_score = v.iter().sum::<f64>() / v.len() as f64;
            // An all-zero cell has no defined CV; it is reported as missing
            // without flagging the whole study.
            let cv_percent = match cv(&v) {
                Ok(x) => Some(x),
                Err(Error::DegenerateInput(_)) => None,
                Err(e) => return Err(e),
            };
            cells.push(CellCv { profile: pname.clone(), song: sid.clone(), mean_score, cv_percent });
        }
    }
    let defined: Vec<f64> = cells.iter().filter_map(|c| c.cv_percent).collect();
    let mean_cv_percent = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    if mean_cv_percent.is_none() {
        degenerate.push("cv: no cell has a non-zero mean score".into());
    }

    // Each song × repeat acts as a judge ranking the profiles.
    let judges: Vec<Vec<f64>> = (0..c.song_ids.len())
        .flat_map(|s| (0..c.repeats).map(move |r| (s, r)))
        .map(|(s, r)| (0..profiles.len()).map(|p| score(p, s, r)).collect())
        .collect();
    let kendall_w = flag(kendall_w(&judges), "kendall_w", &mut degenerate)?;

    let reliability = match (icc, mean_cv_percent, kendall_w, pooled) {
        (Some(icc), Some(cv_percent), Some(kcc), Some(pc)) if degenerate.is_empty() => {
            Some(ReliabilityReport { icc, cv_percent, kcc, pearson_r: pc.r, pearson_p: pc.p })
        }
        _ => None,
    };
    Ok(ValidationReport {
        note: PROVENANCE_NOTE.to_string(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        profiles: c.profile_names.clone(),
        songs: c.song_ids.clone(),
        repeats: c.repeats,
        trials: c.trials.len(),
        per_song,
        pooled,
        icc,
        cells,
        mean_cv_percent,
        kendall_w,
        degenerate,
        reliability,
        errata: set.errata,
    })
}
