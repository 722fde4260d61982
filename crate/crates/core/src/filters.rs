//! Input conditioning: the online (Smo) causal filter and the offline (Dyn)
//! resample-and-smooth path.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::motion::{MotionSequence, PoseFrame};
use crate::quat::{Quaternion, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoFilterConfig {
    pub cutoff_hz: f64,
    pub outlier_window: usize,
    pub outlier_k: f64,
    /// Maximum point speed, m/s.
    pub v_max: f64,
    /// Maximum angular speed for joint angles and root orientation, rad/s.
    pub angle_v_max: f64,
}

impl Default for SmoFilterConfig {
    fn default() -> Self {
        Self { cutoff_hz: 3.0, outlier_window: 7, outlier_k: 5.0, v_max: 3.0, angle_v_max: 12.0 }
    }
}

impl SmoFilterConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(validation(format!("{name} must be positive, got {v}")))
            }
        };
        positive("cutoff_hz", self.cutoff_hz)?;
        positive("outlier_k", self.outlier_k)?;
        positive("v_max", self.v_max)?;
        positive("angle_v_max", self.angle_v_max)?;
        if self.outlier_window < 3 {
            return Err(validation(format!("outlier_window must be >= 3, got {}", self.outlier_window)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynConfig {
    pub target_rate: f64,
    pub smoothing_halfwidth: usize,
}

impl Default for DynConfig {
    fn default() -> Self {
        Self { target_rate: 30.0, smoothing_halfwidth: 2 }
    }
}

/// Deviations below this are never treated as outliers, whatever the MAD.
const MAD_FLOOR: f64 = 1e-9;

fn median(buf: &mut [f64]) -> f64 {
    buf.sort_by(f64::total_cmp);
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Trailing window of raw samples for one scalar channel.
#[derive(Debug, Clone)]
struct ChannelWindow {
    samples: VecDeque<f64>,
}

impl ChannelWindow {
    /// Records `x` and reports whether it deviates from the window median by
    /// more than `k` median absolute deviations.
    fn push_is_outlier(&mut self, x: f64, window: usize, k: f64, scratch: &mut Vec<f64>) -> bool {
        if self.samples.len() == window {
            self.samples.pop_front();
        }
        self.samples.push_back(x);
        if self.samples.len() < 3 {
            return false;
        }
        scratch.clear();
        scratch.extend(self.samples.iter().copied());
        let med = median(scratch);
        for v in scratch.iter_mut() {
            *v = (*v - med).abs();
        }
        let mad = median(scratch);
        (x - med).abs() > k * mad.max(MAD_FLOOR)
    }
}

/// Causal per-stream state of the Smo filter.
#[derive(Debug, Clone, Default)]
pub struct SmoFilterState {
    previous: Option<PoseFrame>,
    windows: Vec<ChannelWindow>,
    scratch: Vec<f64>,
    rejected: u64,
}

impl SmoFilterState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of scalar channel samples replaced by outlier rejection so far.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }
}

fn clamp_step(prev: &Vec3, next: Vec3, max_step: f64) -> Vec3 {
    let d = next - prev;
    let n = d.norm();
    if n > max_step {
        prev + d * (max_step / n)
    } else {
        next
    }
}

/// One step of the online filter: outlier rejection against a trailing
/// median/MAD window, first-order low-pass, then velocity clamping. The first
/// frame initializes the state and passes through unchanged.
pub fn smo_filter_step(state: &mut SmoFilterState, frame: &PoseFrame, cfg: &SmoFilterConfig) -> PoseFrame {
    let joints = frame.joint_count();
    let channel_count = 3 + 3 * frame.joint_positions.len() + joints;
    if state.windows.len() != channel_count {
        state.windows = vec![ChannelWindow { samples: VecDeque::with_capacity(cfg.outlier_window) }; channel_count];
    }

    // Raw channel vector: root xyz, joint xyz..., angles...
    let mut raw = Vec::with_capacity(channel_count);
    raw.extend(frame.root_position.iter());
    for p in &frame.joint_positions {
        raw.extend(p.iter());
    }
    raw.extend(frame.joint_angles.iter());

    let mut outlier = vec![false; channel_count];
    for (c, x) in raw.iter().enumerate() {
        outlier[c] = state.windows[c].push_is_outlier(*x, cfg.outlier_window, cfg.outlier_k, &mut state.scratch);
    }

    let Some(prev) = state.previous.as_ref() else {
        state.previous = Some(frame.clone());
        return frame.clone();
    };

    let dt = frame.timestamp - prev.timestamp;
    if !(dt > 0.0) {
        // Non-advancing timestamp: hold the previous output.
        let mut held = prev.clone();
        held.timestamp = frame.timestamp;
        return held;
    }
    let alpha = 1.0 - (-2.0 * std::f64::consts::PI * cfg.cutoff_hz * dt).exp();
    let max_step = cfg.v_max * dt;
    let max_turn = cfg.angle_v_max * dt;

    let mut rejected = 0u64;
    let mut filter_point = |prev_p: &Vec3, base: usize| -> Vec3 {
        let mut target = Vec3::zeros();
        for a in 0..3 {
            target[a] = if outlier[base + a] {
                rejected += 1;
                prev_p[a]
            } else {
                raw[base + a]
            };
        }
        let smoothed = prev_p + (target - prev_p) * alpha;
        clamp_step(prev_p, smoothed, max_step)
    };

    let root_position = filter_point(&prev.root_position, 0);
    let joint_positions: Vec<Vec3> = prev
        .joint_positions
        .iter()
        .enumerate()
        .map(|(j, p)| filter_point(p, 3 + 3 * j))
        .collect();
    let angle_base = 3 + 3 * frame.joint_positions.len();
    let joint_angles = prev
        .joint_angles
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let c = angle_base + j;
            let target = if outlier[c] {
                rejected += 1;
                p
            } else {
                raw[c]
            };
            p + (alpha * (target - p)).clamp(-max_turn, max_turn)
        })
        .collect();

    // Orientation: low-pass the log-map increment from the previous output.
    let increment = prev.root_orientation.conjugate().mul(&frame.root_orientation).to_rotation_vector();
    let mut step = increment * alpha;
    let turn = step.norm();
    if turn > max_turn {
        step *= max_turn / turn;
    }
    let root_orientation = prev.root_orientation.mul(&Quaternion::from_rotation_vector(&step)).normalized();

    let out = PoseFrame { timestamp: frame.timestamp, root_position, root_orientation, joint_positions, joint_angles };
    state.rejected += rejected;
    state.previous = Some(out.clone());
    out
}

/// Runs the Smo filter over a whole sequence, frame by frame.
pub fn smo_filter(seq: &MotionSequence, cfg: &SmoFilterConfig) -> Result<MotionSequence> {
    cfg.validate()?;
    let mut state = SmoFilterState::new();
    let frames = seq.frames().iter().map(|f| smo_filter_step(&mut state, f, cfg)).collect();
    seq.with_frames(frames, seq.nominal_rate())
}

/// Forward-then-backward moving average of length `halfwidth + 1`, with
/// odd-reflection padding so linear trends pass through unchanged.
pub fn zero_phase_smooth(x: &[f64], halfwidth: usize) -> Vec<f64> {
    let n = x.len();
    if halfwidth == 0 || n < 2 {
        return x.to_vec();
    }
    let h = halfwidth;
    let reflect = |k: usize| k.min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * h);
    for k in (1..=h).rev() {
        ext.push(2.0 * x[0] - x[reflect(k)]);
    }
    ext.extend_from_slice(x);
    for k in 1..=h {
        ext.push(2.0 * x[n - 1] - x[n - 1 - reflect(k)]);
    }

    let m = ext.len();
    let len = (h + 1) as f64;
    let mut forward = vec![0.0; m];
    let mut acc = 0.0;
    for i in 0..m {
        acc += ext[i];
        if i > h {
            acc -= ext[i - h - 1];
        }
        forward[i] = acc / len.min((i + 1) as f64);
    }
    let mut backward = vec![0.0; m];
    acc = 0.0;
    for i in (0..m).rev() {
        acc += forward[i];
        if i + h + 1 < m {
            acc -= forward[i + h + 1];
        }
        backward[i] = acc / len.min((m - i) as f64);
    }
    backward[h..h + n].to_vec()
}

/// Offline path: uniform resampling at `target_rate` with lerp/slerp, then a
/// non-causal zero-phase smoother that keeps event timing.
pub fn dyn_preprocess(seq: &MotionSequence, cfg: &DynConfig) -> Result<MotionSequence> {
    if !(cfg.target_rate > 0.0 && cfg.target_rate.is_finite()) {
        return Err(validation(format!("target rate {} must be positive", cfg.target_rate)));
    }
    let resampled = seq.resample_uniform(cfg.target_rate)?;
    if cfg.smoothing_halfwidth == 0 {
        return Ok(resampled);
    }
    let mut frames = resampled.into_frames();
    let h = cfg.smoothing_halfwidth;

    let smooth_channel = |frames: &mut [PoseFrame], get: &dyn Fn(&PoseFrame) -> f64, set: &dyn Fn(&mut PoseFrame, f64)| {
        let xs: Vec<f64> = frames.iter().map(get).collect();
        for (f, v) in frames.iter_mut().zip(zero_phase_smooth(&xs, h)) {
            set(f, v);
        }
    };

    for a in 0..3 {
        smooth_channel(&mut frames, &|f| f.root_position[a], &|f, v| f.root_position[a] = v);
    }
    let joints = frames[0].joint_positions.len();
    for j in 0..joints {
        for a in 0..3 {
            smooth_channel(&mut frames, &|f| f.joint_positions[j][a], &|f, v| f.joint_positions[j][a] = v);
        }
    }
    for j in 0..frames[0].joint_angles.len() {
        smooth_channel(&mut frames, &|f| f.joint_angles[j], &|f, v| f.joint_angles[j] = v);
    }

    // Orientations: hemisphere-aligned components, smoothed then renormalized.
    let mut aligned: Vec<Quaternion> = Vec::with_capacity(frames.len());
    for f in &frames {
        let q = f.root_orientation;
        let q = match aligned.last() {
            Some(prev) if prev.dot(&q) < 0.0 => q.neg(),
            _ => q,
        };
        aligned.push(q);
    }
    let comps: [Vec<f64>; 4] = [
        zero_phase_smooth(&aligned.iter().map(|q| q.w).collect::<Vec<_>>(), h),
        zero_phase_smooth(&aligned.iter().map(|q| q.x).collect::<Vec<_>>(), h),
        zero_phase_smooth(&aligned.iter().map(|q| q.y).collect::<Vec<_>>(), h),
        zero_phase_smooth(&aligned.iter().map(|q| q.z).collect::<Vec<_>>(), h),
    ];
    for (i, f) in frames.iter_mut().enumerate() {
        f.root_orientation =
            Quaternion::from_components(comps[0][i], comps[1][i], comps[2][i], comps[3][i]).normalized();
    }
    seq.with_frames(frames, cfg.target_rate)
}
