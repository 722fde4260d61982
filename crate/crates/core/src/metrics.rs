//! Tracking, smoothness and fall metrics.

use nalgebra::{Matrix3, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::motion::{MotionSequence, PoseFrame, Skeleton};
use crate::quat::Vec3;

/// `p ↦ scale · rotation · p + translation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self { scale: 1.0, rotation: Matrix3::identity(), translation: Vec3::zeros() }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p * self.scale + self.translation
    }
}

/// Relative singular-value threshold below which a point set counts as
/// rank-deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Least-squares similarity transform mapping `source` onto `target`
/// (Umeyama's closed form), with reflections excluded.
pub fn umeyama_align(source: &[Vec3], target: &[Vec3]) -> Result<SimilarityTransform> {
    let n = source.len();
    if n != target.len() {
        return Err(Error::Precondition(format!("point counts differ: {n} vs {}", target.len())));
    }
    if n < 3 {
        return Err(Error::DegenerateGeometry(format!("need at least 3 points, got {n}")));
    }
    let inv_n = 1.0 / n as f64;
    let mu_s = source.iter().sum::<Vec3>() * inv_n;
    let mu_t = target.iter().sum::<Vec3>() * inv_n;

    let mut scatter_s = Matrix3::zeros();
    let mut cov = Matrix3::zeros();
    let mut var_s = 0.0;
    for (s, t) in source.iter().zip(target) {
        let ds = s - mu_s;
        let dt = t - mu_t;
        scatter_s += ds * ds.transpose();
        cov += dt * ds.transpose();
        var_s += ds.norm_squared();
    }
    cov *= inv_n;
    var_s *= inv_n;

    let sv_s = scatter_s.symmetric_eigenvalues();
    let mut ev: Vec<f64> = sv_s.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= RANK_TOLERANCE * ev[0] {
        return Err(Error::DegenerateGeometry("source points are collinear or coincident".into()));
    }

    let svd = SVD::new(cov, true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let d = svd.singular_values;
    let mut sorted = [d[0], d[1], d[2]];
    sorted.sort_by(|a, b| b.total_cmp(a));
    if !(sorted[0] > 0.0) || sorted[1] <= RANK_TOLERANCE * sorted[0] {
        return Err(Error::DegenerateGeometry("cross-covariance has rank below 2".into()));
    }

    let mut s = Matrix3::identity();
    if u.determinant() * v_t.determinant() < 0.0 {
        s[(2, 2)] = -1.0;
    }
    let rotation = u * s * v_t;
    let scale = (0..3).map(|i| d[i] * s[(i, i)]).sum::<f64>() / var_s;
    let translation = mu_t - rotation * mu_s * scale;
    Ok(SimilarityTransform { scale, rotation, translation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FallCause {
    RootHeight,
    Attitude,
    ControllerAbort,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallRecord {
    pub fell: bool,
    pub fall_time: Option<f64>,
    pub cause: Option<FallCause>,
}

impl FallRecord {
    pub const NONE: FallRecord = FallRecord { fell: false, fall_time: None, cause: None };

    pub fn fall(time: f64, cause: FallCause) -> Self {
        Self { fell: true, fall_time: Some(time), cause: Some(cause) }
    }

    /// External abort, e.g. a controller shutting down on overheating.
    pub fn abort(time: f64) -> Self {
        Self::fall(time, FallCause::ControllerAbort)
    }

    pub fn is_clean(&self) -> bool {
        !self.fell
    }
}

impl Default for FallRecord {
    fn default() -> Self {
        Self::NONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FallConfig {
    /// Fraction of the skeleton's nominal height below which the root counts as down.
    pub height_fraction: f64,
    pub max_tilt_deg: f64,
    /// Seconds a condition must hold before it is a fall.
    pub dwell: f64,
}

impl Default for FallConfig {
    fn default() -> Self {
        Self { height_fraction: 0.5, max_tilt_deg: 60.0, dwell: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FrameMode {
    Active,
    #[default]
    All,
}

/// Origin of the frame in which tracking errors are measured. The orientation
/// is always the root orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TorsoFrame {
    #[default]
    Root,
    Joint(usize),
}

fn torso_positions(f: &PoseFrame, torso: TorsoFrame) -> Vec<Vec3> {
    let origin = match torso {
        TorsoFrame::Root => f.root_position,
        TorsoFrame::Joint(j) => f.joint_positions[j],
    };
    let inv = f.root_orientation.conjugate().to_matrix();
    f.joint_positions.iter().map(|p| inv * (p - origin)).collect()
}

fn check_compatible(a: &MotionSequence, b: &MotionSequence) -> Result<()> {
    if a.skeleton().joint_count() != b.skeleton().joint_count() {
        return Err(validation(format!(
            "skeleton mismatch: {} vs {} joints",
            a.skeleton().joint_count(),
            b.skeleton().joint_count()
        )));
    }
    Ok(())
}

/// The reference resampled at the execution's timestamps.
pub fn align_reference(execution: &MotionSequence, reference: &MotionSequence) -> Vec<PoseFrame> {
    execution.frames().iter().map(|f| reference.sample_at(f.timestamp)).collect()
}

/// Frames of `execution` included under `mode`.
fn included(execution: &MotionSequence, mode: FrameMode, fall: &FallRecord) -> Result<Vec<usize>> {
    let cutoff = match (mode, fall.fall_time) {
        (FrameMode::Active, Some(t)) if fall.fell => t,
        _ => f64::INFINITY,
    };
    let idx: Vec<usize> = (0..execution.len()).filter(|&i| execution.frames()[i].timestamp < cutoff).collect();
    if idx.is_empty() {
        return Err(Error::EmptyWindow(format!("no frames before fall at {cutoff} s")));
    }
    Ok(idx)
}

/// Mean per-joint position error in the torso frame, millimeters.
pub fn mpjpe(
    execution: &MotionSequence,
    reference: &MotionSequence,
    mode: FrameMode,
    fall: &FallRecord,
) -> Result<f64> {
    mpjpe_in(execution, reference, mode, fall, TorsoFrame::Root)
}

pub fn mpjpe_in(
    execution: &MotionSequence,
    reference: &MotionSequence,
    mode: FrameMode,
    fall: &FallRecord,
    torso: TorsoFrame,
) -> Result<f64> {
    check_compatible(execution, reference)?;
    if let TorsoFrame::Joint(j) = torso {
        if j >= execution.skeleton().joint_count() {
            return Err(validation(format!("torso joint {j} out of range")));
        }
    }
    let frames = included(execution, mode, fall)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for i in frames {
        let e = &execution.frames()[i];
        let r = reference.sample_at(e.timestamp);
        let pe = torso_positions(e, torso);
        let pr = torso_positions(&r, torso);
        total += pe.iter().zip(&pr).map(|(a, b)| (a - b).norm()).sum::<f64>();
        count += pe.len();
    }
    Ok(1000.0 * total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaMpjpe {
    pub mm: f64,
    pub frames_used: usize,
    pub frames_skipped: usize,
}

/// Per-frame similarity-aligned MPJPE, millimeters. Frames whose alignment is
/// degenerate are skipped and counted.
pub fn pa_mpjpe(execution: &MotionSequence, reference: &MotionSequence) -> Result<PaMpjpe> {
    check_compatible(execution, reference)?;
    let mut total = 0.0;
    let mut used = 0usize;
    let mut skipped = 0usize;
    for e in execution.frames() {
        let r = reference.sample_at(e.timestamp);
        match umeyama_align(&e.joint_positions, &r.joint_positions) {
            Ok(tf) => {
                let err: f64 = e
                    .joint_positions
                    .iter()
                    .zip(&r.joint_positions)
                    .map(|(p, q)| (tf.apply(p) - q).norm())
                    .sum();
                total += err / e.joint_positions.len() as f64;
                used += 1;
            }
            Err(Error::DegenerateGeometry(_)) => skipped += 1,
            Err(other) => return Err(other),
        }
    }
    if used == 0 {
        return Err(Error::DegenerateGeometry(format!("all {skipped} frames degenerate")));
    }
    Ok(PaMpjpe { mm: 1000.0 * total / used as f64, frames_used: used, frames_skipped: skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    /// Mean absolute third difference of joint angles, rad/s³.
    pub jerk: f64,
    /// Mean absolute second difference of joint angles, rad/s².
    pub acceleration: f64,
}

/// Allowed relative deviation of any frame interval from the mean interval.
pub const UNIFORM_SPACING_TOLERANCE: f64 = 0.01;

/// Finite-difference jerk and acceleration of joint angles over interior frames.
pub fn smoothness(seq: &MotionSequence) -> Result<Smoothness> {
    let frames = seq.frames();
    if frames.len() < 4 {
        return Err(validation(format!("smoothness needs at least 4 frames, got {}", frames.len())));
    }
    let dt = seq.mean_interval();
    if let Some(w) = frames
        .windows(2)
        .find(|w| ((w[1].timestamp - w[0].timestamp) - dt).abs() > UNIFORM_SPACING_TOLERANCE * dt)
    {
        return Err(validation(format!(
            "non-uniform spacing: interval {} vs mean {dt}",
            w[1].timestamp - w[0].timestamp
        )));
    }
    let joints = seq.skeleton().joint_count();
    let theta = |k: usize, j: usize| frames[k].joint_angles[j];

    let mut acc = 0.0;
    for k in 1..frames.len() - 1 {
        for j in 0..joints {
            acc += (theta(k + 1, j) - 2.0 * theta(k, j) + theta(k - 1, j)).abs();
        }
    }
    let mut jerk = 0.0;
    for k in 1..frames.len() - 2 {
        for j in 0..joints {
            jerk += (theta(k + 2, j) - 3.0 * theta(k + 1, j) + 3.0 * theta(k, j) - theta(k - 1, j)).abs();
        }
    }
    let n_acc = ((frames.len() - 2) * joints) as f64;
    let n_jerk = ((frames.len() - 3) * joints) as f64;
    Ok(Smoothness { jerk: jerk / n_jerk / dt.powi(3), acceleration: acc / n_acc / (dt * dt) })
}

/// First time the root stays below the height threshold, or the torso stays
/// tilted past the attitude limit, for the configured dwell.
pub fn detect_fall(seq: &MotionSequence, skeleton: &Skeleton) -> FallRecord {
    detect_fall_with(seq, skeleton, &FallConfig::default())
}

pub fn detect_fall_with(seq: &MotionSequence, skeleton: &Skeleton, cfg: &FallConfig) -> FallRecord {
    let min_height = cfg.height_fraction * skeleton.nominal_height();
    let max_tilt = cfg.max_tilt_deg.to_radians();
    let mut low_since: Option<f64> = None;
    let mut tilt_since: Option<f64> = None;
    let eps = 1e-9;
    for f in seq.frames() {
        let t = f.timestamp;
        let up = f.root_orientation.rotate(&Vec3::z());
        let tilt = up.z.clamp(-1.0, 1.0).acos();
        low_since = if f.root_position.z < min_height { low_since.or(Some(t)) } else { None };
        tilt_since = if tilt > max_tilt { tilt_since.or(Some(t)) } else { None };
        if low_since.is_some_and(|s| t - s >= cfg.dwell - eps) {
            return FallRecord::fall(t, FallCause::RootHeight);
        }
        if tilt_since.is_some_and(|s| t - s >= cfg.dwell - eps) {
            return FallRecord::fall(t, FallCause::Attitude);
        }
    }
    FallRecord::NONE
}

/// Percentage of trials completed without a fall or abort.
pub fn success_rate(trials: &[FallRecord]) -> Result<f64> {
    if trials.is_empty() {
        return Err(validation("success rate of an empty trial list"));
    }
    let clean = trials.iter().filter(|r| r.is_clean()).count();
    Ok(100.0 * clean as f64 / trials.len() as f64)
}

/// Per-trial summary in the benchmark's report units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub mpjpe_active: Option<f64>,
    pub mpjpe_all: f64,
    pub pa_mpjpe: Option<f64>,
    pub success: bool,
    pub fall: FallRecord,
    pub jerk: f64,
    pub acceleration: f64,
    pub score: f64,
}

impl TrialMetrics {
    /// Tracking and smoothness metrics of an execution against the reference it
    /// tracked; `score` is left at zero for the score engine to fill.
    pub fn compute(execution: &MotionSequence, reference: &MotionSequence, fall: &FallRecord) -> Result<Self> {
        let mpjpe_all = mpjpe(execution, reference, FrameMode::All, fall)?;
        let mpjpe_active = if fall.fell {
            match mpjpe(execution, reference, FrameMode::Active, fall) {
                Ok(v) => Some(v),
                Err(Error::EmptyWindow(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            Some(mpjpe_all)
        };
        let s = smoothness(execution)?;
        Ok(Self {
            mpjpe_active,
            mpjpe_all,
            pa_mpjpe: None,
            success: fall.is_clean(),
            fall: *fall,
            jerk: s.jerk,
            acceleration: s.acceleration,
            score: 0.0,
        })
    }
}
