//! Skeletons, pose frames and motion sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::quat::{lerp_scalar, lerp_vec, slerp_unit, Quaternion, Vec3};

/// SMPL body joint names in canonical order.
pub const SMPL_JOINT_NAMES: [&str; 24] = [
    "pelvis",
    "left_hip",
    "right_hip",
    "spine1",
    "left_knee",
    "right_knee",
    "spine2",
    "left_ankle",
    "right_ankle",
    "spine3",
    "left_foot",
    "right_foot",
    "neck",
    "left_collar",
    "right_collar",
    "head",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hand",
    "right_hand",
];

/// Parent index of each SMPL joint; the pelvis is the root.
pub const SMPL_PARENTS: [Option<usize>; 24] = [
    None,
    Some(0),
    Some(0),
    Some(0),
    Some(1),
    Some(2),
    Some(3),
    Some(4),
    Some(5),
    Some(6),
    Some(7),
    Some(8),
    Some(9),
    Some(9),
    Some(9),
    Some(12),
    Some(13),
    Some(14),
    Some(16),
    Some(17),
    Some(18),
    Some(19),
    Some(20),
    Some(21),
];

/// The joint that carries the hand-held controller in the default skeleton.
pub const SMPL_RIGHT_WRIST: usize = 21;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    joint_names: Vec<String>,
    /// Standing root height in meters.
    nominal_height: f64,
    tracked_effector: usize,
}

impl Skeleton {
    pub fn new(joint_names: Vec<String>, nominal_height: f64, tracked_effector: usize) -> Result<Self> {
        if joint_names.is_empty() {
            return Err(validation("skeleton needs at least one joint"));
        }
        if !(nominal_height > 0.0 && nominal_height.is_finite()) {
            return Err(validation(format!("nominal height {nominal_height} must be positive")));
        }
        if tracked_effector >= joint_names.len() {
            return Err(validation(format!(
                "effector {tracked_effector} out of range for {} joints",
                joint_names.len()
            )));
        }
        Ok(Self { joint_names, nominal_height, tracked_effector })
    }

    /// 24-joint SMPL layout tracking the right wrist.
    pub fn smpl(nominal_height: f64) -> Result<Self> {
        Self::new(
            SMPL_JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
            nominal_height,
            SMPL_RIGHT_WRIST,
        )
    }

    /// Generic skeleton with joints named `j0..j{n-1}`.
    pub fn numbered(joint_count: usize, nominal_height: f64, tracked_effector: usize) -> Result<Self> {
        Self::new((0..joint_count).map(|i| format!("j{i}")).collect(), nominal_height, tracked_effector)
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn nominal_height(&self) -> f64 {
        self.nominal_height
    }

    pub fn tracked_effector(&self) -> usize {
        self.tracked_effector
    }

    pub fn with_effector(mut self, effector: usize) -> Result<Self> {
        if effector >= self.joint_count() {
            return Err(validation(format!("effector {effector} out of range")));
        }
        self.tracked_effector = effector;
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    pub timestamp: f64,
    pub root_position: Vec3,
    pub root_orientation: Quaternion,
    /// World-frame joint positions, meters.
    pub joint_positions: Vec<Vec3>,
    /// One angle per joint, radians.
    pub joint_angles: Vec<f64>,
}

impl PoseFrame {
    pub fn joint_count(&self) -> usize {
        self.joint_angles.len()
    }

    pub fn is_finite(&self) -> bool {
        self.timestamp.is_finite()
            && self.root_position.iter().all(|v| v.is_finite())
            && self.root_orientation.is_finite()
            && self.joint_positions.iter().all(|p| p.iter().all(|v| v.is_finite()))
            && self.joint_angles.iter().all(|a| a.is_finite())
    }

    /// Joint positions expressed in this frame's root (torso) frame.
    pub fn torso_frame_positions(&self) -> Vec<Vec3> {
        let inv = self.root_orientation.conjugate().to_matrix();
        self.joint_positions.iter().map(|p| inv * (p - self.root_position)).collect()
    }

    /// Interpolates between two frames at parameter `t` in `[0, 1]`: lerp for
    /// positions and angles, slerp for the root orientation. `t == 1` yields `b`.
    pub fn interpolate(a: &PoseFrame, b: &PoseFrame, t: f64) -> PoseFrame {
        if t >= 1.0 {
            return b.clone();
        }
        if t <= 0.0 {
            return a.clone();
        }
        PoseFrame {
            timestamp: lerp_scalar(a.timestamp, b.timestamp, t),
            root_position: lerp_vec(&a.root_position, &b.root_position, t),
            root_orientation: slerp_unit(&a.root_orientation, &b.root_orientation, t),
            joint_positions: a
                .joint_positions
                .iter()
                .zip(&b.joint_positions)
                .map(|(p, q)| lerp_vec(p, q, t))
                .collect(),
            joint_angles: a
                .joint_angles
                .iter()
                .zip(&b.joint_angles)
                .map(|(x, y)| lerp_scalar(*x, *y, t))
                .collect(),
        }
    }
}

/// Difficulty grouping of a song: in-game levels 1-2 are Easy, 3-4 Hard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Hard,
}

impl Difficulty {
    pub fn from_level(level: u8) -> Result<Self> {
        match level {
            1 | 2 => Ok(Difficulty::Easy),
            3 | 4 => Ok(Difficulty::Hard),
            other => Err(validation(format!("difficulty level {other} outside 1..=4"))),
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
        })
    }
}

impl FromStr for Difficulty {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "hard" => Ok(Difficulty::Hard),
            other => Err(validation(format!("unknown difficulty '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionSequence {
    skeleton: Skeleton,
    frames: Vec<PoseFrame>,
    nominal_rate: f64,
    difficulty: Difficulty,
    song_id: String,
}

impl MotionSequence {
    /// Builds a sequence, enforcing: at least two frames, strictly increasing
    /// timestamps, finite values, and joint arrays matching the skeleton.
    pub fn new(
        skeleton: Skeleton,
        frames: Vec<PoseFrame>,
        nominal_rate: f64,
        difficulty: Difficulty,
        song_id: impl Into<String>,
    ) -> Result<Self> {
        let song_id = song_id.into();
        if frames.len() < 2 {
            return Err(validation(format!("sequence needs at least 2 frames, got {}", frames.len())));
        }
        if !(nominal_rate > 0.0 && nominal_rate.is_finite()) {
            return Err(validation(format!("nominal rate {nominal_rate} must be positive")));
        }
        if song_id.is_empty() || song_id.chars().any(char::is_whitespace) {
            return Err(validation(format!("song id '{song_id}' must be a non-empty token")));
        }
        let j = skeleton.joint_count();
        for (i, f) in frames.iter().enumerate() {
            if f.joint_angles.len() != j || f.joint_positions.len() != j {
                return Err(validation(format!(
                    "frame {i} has {} angles and {} positions, skeleton has {j} joints",
                    f.joint_angles.len(),
                    f.joint_positions.len()
                )));
            }
            if !f.is_finite() {
                return Err(validation(format!("frame {i} contains non-finite values")));
            }
        }
        if let Some(i) = frames.windows(2).position(|w| w[1].timestamp <= w[0].timestamp) {
            return Err(validation(format!(
                "timestamps not strictly increasing at frame {}: {} after {}",
                i + 1,
                frames[i + 1].timestamp,
                frames[i].timestamp
            )));
        }
        Ok(Self { skeleton, frames, nominal_rate, difficulty, song_id })
    }

    pub fn skeleton(&self) -> &Skeleton {
        &self.skeleton
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<PoseFrame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn nominal_rate(&self) -> f64 {
        self.nominal_rate
    }

    pub fn difficulty(&self) -> Difficulty {
        self.difficulty
    }

    pub fn song_id(&self) -> &str {
        &self.song_id
    }

    pub fn start_time(&self) -> f64 {
        self.frames[0].timestamp
    }

    pub fn end_time(&self) -> f64 {
        self.frames[self.frames.len() - 1].timestamp
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.timestamp).collect()
    }

    /// Same metadata, different frames.
    pub fn with_frames(&self, frames: Vec<PoseFrame>, nominal_rate: f64) -> Result<Self> {
        Self::new(self.skeleton.clone(), frames, nominal_rate, self.difficulty, self.song_id.clone())
    }

    /// Pose at time `t`, interpolated between the bracketing frames and held
    /// constant outside the sequence's time span.
    pub fn sample_at(&self, t: f64) -> PoseFrame {
        let frames = &self.frames;
        let mut out = if t <= frames[0].timestamp {
            frames[0].clone()
        } else if t >= self.end_time() {
            frames[frames.len() - 1].clone()
        } else {
            let hi = frames.partition_point(|f| f.timestamp <= t);
            let (a, b) = (&frames[hi - 1], &frames[hi]);
            let s = (t - a.timestamp) / (b.timestamp - a.timestamp);
            PoseFrame::interpolate(a, b, s)
        };
        out.timestamp = t;
        out
    }

    /// Resamples onto the given strictly increasing timestamps.
    pub fn resample_at(&self, timestamps: &[f64], nominal_rate: f64) -> Result<Self> {
        let frames = timestamps.iter().map(|&t| self.sample_at(t)).collect();
        self.with_frames(frames, nominal_rate)
    }

    /// Resamples at a uniform rate spanning the sequence's duration.
    pub fn resample_uniform(&self, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(validation(format!("resampling rate {rate} must be positive")));
        }
        let t0 = self.start_time();
        let count = (self.duration() * rate + 1e-9).floor() as usize + 1;
        let ts: Vec<f64> = (0..count).map(|i| t0 + i as f64 / rate).collect();
        self.resample_at(&ts, rate)
    }

    /// Mean spacing between consecutive frames.
    pub fn mean_interval(&self) -> f64 {
        self.duration() / (self.frames.len() - 1) as f64
    }
}
