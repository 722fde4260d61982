//! Single-effector dance scorer.
//!
//! Scores a performance window by window from the trajectory of one tracked
//! effector (the hand holding the controller): how close it is to the
//! reference, how well its acceleration profile matches, and how well its
//! movement is timed against the beat.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::motion::MotionSequence;
use crate::quat::Vec3;

/// The game's maximum score for any song.
pub const MAX_SCORE: f64 = 13333.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreModel {
    pub max_score: f64,
    /// Length of the non-overlapping scoring windows, seconds.
    pub window: f64,
    pub w_pos: f64,
    pub w_acc: f64,
    pub w_beat: f64,
    /// Position error scale, meters.
    pub sigma_pos: f64,
    /// Acceleration difference scale, m/s².
    pub sigma_acc: f64,
    /// Timing error scale, seconds.
    pub sigma_beat: f64,
    /// Span of the finite-difference stencil for effector speed and acceleration, seconds.
    pub stencil: f64,
    /// Largest timing offset searched by cross-correlation, seconds.
    pub max_lag: f64,
    /// Beat timestamps; derived from the reference when absent.
    pub beat_grid: Option<Vec<f64>>,
    /// Tracked joint; the skeleton's effector when absent.
    pub effector: Option<usize>,
}

impl Default for ScoreModel {
    fn default() -> Self {
        Self {
            max_score: MAX_SCORE,
            window: 1.0,
            w_pos: 0.5,
            w_acc: 0.3,
            w_beat: 0.2,
            sigma_pos: 0.15,
            sigma_acc: 2.0,
            sigma_beat: 0.15,
            stencil: 0.1,
            max_lag: 0.6,
            beat_grid: None,
            effector: None,
        }
    }
}

impl ScoreModel {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.w_pos, self.w_acc, self.w_beat];
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(validation("score weights must be non-negative"));
        }
        if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(validation(format!("score weights sum to {}, not 1", weights.iter().sum::<f64>())));
        }
        for (name, v) in [
            ("max_score", self.max_score),
            ("window", self.window),
            ("sigma_pos", self.sigma_pos),
            ("sigma_acc", self.sigma_acc),
            ("sigma_beat", self.sigma_beat),
            ("stencil", self.stencil),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(validation(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.max_lag >= 0.0) {
            return Err(validation("max_lag must be non-negative"));
        }
        if let Some(grid) = &self.beat_grid {
            if grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(validation("beat grid needs at least 2 strictly increasing beats"));
            }
        }
        Ok(())
    }

    /// Model with only the named term weighted.
    pub fn single_term(term: ScoreTerm) -> Self {
        let (w_pos, w_acc, w_beat) = match term {
            ScoreTerm::Position => (1.0, 0.0, 0.0),
            ScoreTerm::Acceleration => (0.0, 1.0, 0.0),
            ScoreTerm::Beat => (0.0, 0.0, 1.0),
        };
        Self { w_pos, w_acc, w_beat, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreTerm {
    Position,
    Acceleration,
    Beat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowScore {
    pub t_start: f64,
    pub score: f64,
    pub pos_term: f64,
    pub acc_term: f64,
    pub beat_term: f64,
    /// Timing offset of the execution behind the reference, seconds, before snapping.
    pub lag: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub total: f64,
    pub per_window: Vec<WindowScore>,
    pub beat_period: f64,
}

/// Speed and acceleration of a uniformly sampled trajectory using a stencil
/// of `s` samples on each side; edges reuse the nearest interior value.
pub(crate) fn kinematics(p: &[Vec3], dt: f64, s: usize) -> (Vec<f64>, Vec<Vec3>) {
    let n = p.len();
    let mut speed = vec![0.0; n];
    let mut acc = vec![Vec3::zeros(); n];
    if n < 2 * s + 1 {
        return (speed, acc);
    }
    let h = s as f64 * dt;
    for k in s..n - s {
        speed[k] = (p[k + s] - p[k - s]).norm() / (2.0 * h);
        acc[k] = (p[k + s] - 2.0 * p[k] + p[k - s]) / (h * h);
    }
    for k in 0..s {
        speed[k] = speed[s];
        acc[k] = acc[s];
        speed[n - 1 - k] = speed[n - 1 - s];
        acc[n - 1 - k] = acc[n - 1 - s];
    }
    (speed, acc)
}

fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 1e-18 || sbb <= 1e-18 {
        return None;
    }
    Some(sab / (saa.sqrt() * sbb.sqrt()))
}

/// Lag in samples (execution behind reference is positive) maximizing the
/// normalized cross-correlation of `exec[k]` with `reference[k - lag]` over
/// the indices in `range`. Ties go to the smallest |lag|.
pub fn cross_correlation_lag(
    exec: &[f64],
    reference: &[f64],
    range: std::ops::Range<usize>,
    max_lag: usize,
) -> Option<i64> {
    let mut best: Option<(f64, i64)> = None;
    let mut lags: Vec<i64> = vec![0];
    for l in 1..=max_lag as i64 {
        lags.push(l);
        lags.push(-l);
    }
    for lag in lags {
        let idx: Vec<usize> = range
            .clone()
            .filter(|&k| {
                let j = k as i64 - lag;
                j >= 0 && (j as usize) < reference.len()
            })
            .collect();
        if idx.len() < 3 {
            continue;
        }
        let a: Vec<f64> = idx.iter().map(|&k| exec[k]).collect();
        let b: Vec<f64> = idx.iter().map(|&k| reference[(k as i64 - lag) as usize]).collect();
        if let Some(c) = correlation(&a, &b) {
            if best.is_none_or(|(bc, _)| c > bc + 1e-12) {
                best = Some((c, lag));
            }
        }
    }
    best.map(|(_, l)| l)
}

/// Dominant period of a signal from the first autocorrelation peak between
/// `min_period` and `max_period` seconds.
pub fn dominant_period(signal: &[f64], dt: f64, min_period: f64, max_period: f64) -> Option<f64> {
    let n = signal.len();
    let lo = (min_period / dt).ceil().max(1.0) as usize;
    let hi = ((max_period / dt).floor() as usize).min(n.saturating_sub(3));
    if lo >= hi {
        return None;
    }
    let ac: Vec<f64> =
        (lo..=hi).map(|l| correlation(&signal[l..], &signal[..n - l]).unwrap_or(f64::NEG_INFINITY)).collect();
    // First local maximum, falling back to the global one.
    let local = (1..ac.len().saturating_sub(1)).find(|&i| ac[i] > ac[i - 1] && ac[i] >= ac[i + 1] && ac[i] > 0.0);
    let i = local.or_else(|| {
        ac.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i)
    })?;
    ac[i].is_finite().then(|| (lo + i) as f64 * dt)
}

/// Uniform beat grid at the reference's dominant effector-speed period.
pub fn default_beat_grid(reference: &MotionSequence, effector: usize, stencil: f64) -> Vec<f64> {
    let uniform = reference.resample_uniform(reference.nominal_rate()).unwrap_or_else(|_| reference.clone());
    let dt = uniform.mean_interval();
    let p: Vec<Vec3> = uniform.frames().iter().map(|f| f.joint_positions[effector]).collect();
    let s = ((stencil / dt).round() as usize).max(1);
    let (speed, _) = kinematics(&p, dt, s);
    let period = dominant_period(&speed, dt, 0.25, 2.0).unwrap_or(0.5);
    let count = (uniform.duration() / period).floor() as usize + 1;
    (0..count).map(|i| uniform.start_time() + i as f64 * period).collect()
}

fn local_beat_period(grid: &[f64], t: f64) -> f64 {
    let i = grid.partition_point(|&b| b <= t).clamp(1, grid.len() - 1);
    grid[i] - grid[i - 1]
}

/// Scores `execution` against `reference`, resampling the reference at the
/// execution's timestamps.
pub fn score_trial(execution: &MotionSequence, reference: &MotionSequence, model: &ScoreModel) -> Result<ScoreBreakdown> {
    model.validate()?;
    let effector = model.effector.unwrap_or(reference.skeleton().tracked_effector());
    for seq in [execution, reference] {
        if effector >= seq.skeleton().joint_count() {
            return Err(validation(format!("effector {effector} out of range")));
        }
    }
    let (lo, hi) = (reference.start_time(), reference.end_time());
    let frames: Vec<_> = execution.frames().iter().filter(|f| f.timestamp >= lo && f.timestamp <= hi).collect();
    if frames.len() < 3 {
        return Err(validation("execution and reference do not overlap in time"));
    }
    let times: Vec<f64> = frames.iter().map(|f| f.timestamp).collect();
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    let pe: Vec<Vec3> = frames.iter().map(|f| f.joint_positions[effector]).collect();
    let pr: Vec<Vec3> = times.iter().map(|&t| reference.sample_at(t).joint_positions[effector]).collect();

    let s = ((model.stencil / dt).round() as usize).max(1);
    let (ve, ae) = kinematics(&pe, dt, s);
    let (vr, ar) = kinematics(&pr, dt, s);

    let grid = match &model.beat_grid {
        Some(g) => g.clone(),
        None => default_beat_grid(reference, effector, model.stencil),
    };
    let grid = if grid.len() >= 2 { grid } else { vec![lo, lo + 0.5] };
    let max_lag = (model.max_lag / dt).round() as usize;

    let mut per_window = Vec::new();
    let mut start = 0usize;
    while start < n {
        let t_start = times[0] + per_window.len() as f64 * model.window;
        let t_end = t_start + model.window;
        let end = times.partition_point(|&t| t < t_end - 1e-9).max(start);
        if end - start >= 3 {
            let m = (end - start) as f64;
            let pos_term = (start..end)
                .map(|k| (-(pe[k] - pr[k]).norm_squared() / (model.sigma_pos * model.sigma_pos)).exp())
                .sum::<f64>()
                / m;
            let acc_diff = (start..end).map(|k| (ae[k] - ar[k]).norm()).sum::<f64>() / m;
            let acc_term = (-acc_diff / model.sigma_acc).exp();

            let ref_moving = correlation(&vr[start..end], &vr[start..end]).is_some();
            let exec_moving = correlation(&ve[start..end], &ve[start..end]).is_some();
            let (beat_term, lag) = match (ref_moving, exec_moving) {
                (false, false) => (1.0, 0.0),
                (true, true) => match cross_correlation_lag(&ve, &vr, start..end, max_lag) {
                    Some(l) => {
                        let lag = l as f64 * dt;
                        let quantum = local_beat_period(&grid, t_start) / 4.0;
                        let snapped = (lag.abs() / quantum).round() * quantum;
                        ((-snapped / model.sigma_beat).exp(), lag)
                    }
                    None => (0.0, f64::NAN),
                },
                _ => (0.0, f64::NAN),
            };
            let score = model.w_pos * pos_term + model.w_acc * acc_term + model.w_beat * beat_term;
            per_window.push(WindowScore { t_start, score, pos_term, acc_term, beat_term, lag });
        } else if end >= n {
            break;
        } else {
            per_window.push(WindowScore {
                t_start,
                score: f64::NAN,
                pos_term: f64::NAN,
                acc_term: f64::NAN,
                beat_term: f64::NAN,
                lag: f64::NAN,
            });
        }
        start = end;
        if t_end > times[n - 1] {
            break;
        }
    }
    per_window.retain(|w| w.score.is_finite());
    if per_window.is_empty() {
        return Err(validation("no scoring window has enough frames"));
    }
    let mean = per_window.iter().map(|w| w.score).sum::<f64>() / per_window.len() as f64;
    let total = (model.max_score * mean).round().clamp(0.0, model.max_score);
    Ok(ScoreBreakdown { total, per_window, beat_period: local_beat_period(&grid, times[0]) })
}

/// Per-difficulty mean scores; a group without trials is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub easy: Option<f64>,
    pub hard: Option<f64>,
    pub all: Option<f64>,
}

pub fn aggregate_scores(trials: &[(f64, crate::motion::Difficulty)]) -> Result<ScoreSummary> {
    use crate::motion::Difficulty;
    if trials.is_empty() {
        return Err(validation("no trials to aggregate"));
    }
    let mean_of = |pred: &dyn Fn(Difficulty) -> bool| {
        let v: Vec<f64> = trials.iter().filter(|(_, d)| pred(*d)).map(|(s, _)| *s).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    Ok(ScoreSummary {
        easy: mean_of(&|d| d == Difficulty::Easy),
        hard: mean_of(&|d| d == Difficulty::Hard),
        all: mean_of(&|_| true),
    })
}
