//! Procedural dance choreographies on the SMPL skeleton, used for the shipped
//! song fixtures and for tests that need realistic motion.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::motion::{Difficulty, MotionSequence, PoseFrame, Skeleton, SMPL_PARENTS};
use crate::quat::{Quaternion, Vec3};

/// Standing pelvis height of the fixture skeleton, meters.
pub const PELVIS_HEIGHT: f64 = 0.9;

/// Offset of each joint from its parent in the parent's rest frame
/// (x forward, y left, z up).
const OFFSETS: [[f64; 3]; 24] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.09, -0.08],
    [0.0, -0.09, -0.08],
    [0.0, 0.0, 0.11],
    [0.0, 0.01, -0.38],
    [0.0, -0.01, -0.38],
    [0.0, 0.0, 0.13],
    [0.0, 0.0, -0.40],
    [0.0, 0.0, -0.40],
    [0.0, 0.0, 0.05],
    [0.12, 0.0, -0.05],
    [0.12, 0.0, -0.05],
    [0.0, 0.0, 0.21],
    [0.0, 0.08, 0.12],
    [0.0, -0.08, 0.12],
    [0.02, 0.0, 0.09],
    [0.0, 0.12, 0.03],
    [0.0, -0.12, 0.03],
    [0.0, 0.02, -0.26],
    [0.0, -0.02, -0.26],
    [0.0, 0.0, -0.25],
    [0.0, 0.0, -0.25],
    [0.0, 0.0, -0.08],
    [0.0, 0.0, -0.08],
];

/// Single rotation axis of each joint, in the joint's local frame.
const AXES: [[f64; 3]; 24] = [
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, 1.0],
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
];

/// World-frame joint positions for the given root transform and joint angles.
pub fn forward_kinematics(root_position: &Vec3, root_orientation: &Quaternion, angles: &[f64]) -> Vec<Vec3> {
    let mut rot = vec![Quaternion::IDENTITY; 24];
    let mut pos = vec![Vec3::zeros(); 24];
    for j in 0..24 {
        let axis = Vec3::from(AXES[j]);
        let local = Quaternion::from_axis_angle(&axis, angles[j]);
        match SMPL_PARENTS[j] {
            None => {
                pos[j] = *root_position;
                rot[j] = root_orientation.mul(&local);
            }
            Some(p) => {
                pos[j] = pos[p] + rot[p].rotate(&Vec3::from(OFFSETS[j]));
                rot[j] = rot[p].mul(&local);
            }
        }
    }
    pos
}

/// Standing pose with arms down, all joint angles zero.
pub fn rest_frame(timestamp: f64) -> PoseFrame {
    let root = Vec3::new(0.0, 0.0, PELVIS_HEIGHT);
    let angles = vec![0.0; 24];
    PoseFrame {
        timestamp,
        root_position: root,
        root_orientation: Quaternion::IDENTITY,
        joint_positions: forward_kinematics(&root, &Quaternion::IDENTITY, &angles),
        joint_angles: angles,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SongSpec {
    pub id: String,
    /// In-game style level 1-4.
    pub level: u8,
    pub bpm: f64,
    pub duration: f64,
    pub rate: f64,
    pub seed: u64,
}

impl SongSpec {
    pub fn difficulty(&self) -> Result<Difficulty> {
        Difficulty::from_level(self.level)
    }
}

/// The five shipped fixture songs: three Easy, two Hard.
pub fn default_songs() -> Vec<SongSpec> {
    let song = |id: &str, level, bpm, seed| SongSpec {
        id: id.to_string(),
        level,
        bpm,
        duration: 10.0,
        rate: 30.0,
        seed,
    };
    vec![
        song("easy_sway", 1, 100.0, 11),
        song("easy_wave", 2, 108.0, 23),
        song("easy_step", 2, 112.0, 37),
        song("hard_pulse", 3, 126.0, 41),
        song("hard_spin", 3, 132.0, 53),
    ]
}

/// Angle ranges for key poses (joint, low, high).
const EASY_RANGES: &[(usize, f64, f64)] = &[
    (1, -0.25, 0.25),
    (2, -0.25, 0.25),
    (3, -0.15, 0.2),
    (4, 0.0, 0.35),
    (5, 0.0, 0.35),
    (6, -0.15, 0.15),
    (9, -0.3, 0.3),
    (12, -0.15, 0.15),
    (13, -0.5, 0.5),
    (14, -0.5, 0.5),
    (15, -0.3, 0.3),
    (16, 1.0, 2.4),
    (17, 1.0, 2.4),
    (18, 0.0, 1.6),
    (19, 0.0, 1.6),
    (20, -0.4, 0.4),
    (21, -0.4, 0.4),
];

const HARD_RANGES: &[(usize, f64, f64)] = &[
    (1, -0.45, 0.45),
    (2, -0.45, 0.45),
    (3, -0.25, 0.35),
    (4, 0.0, 0.7),
    (5, 0.0, 0.7),
    (6, -0.3, 0.3),
    (9, -0.6, 0.6),
    (12, -0.25, 0.25),
    (13, -0.8, 0.8),
    (14, -0.8, 0.8),
    (15, -0.5, 0.5),
    (16, 0.9, 2.8),
    (17, 0.9, 2.8),
    (18, 0.0, 2.0),
    (19, 0.0, 2.0),
    (20, -0.7, 0.7),
    (21, -0.7, 0.7),
];

fn quantize(v: f64, step: f64) -> f64 {
    (v / step).round() * step
}

/// Generates the choreography for `spec` at its frame rate. Key poses change
/// every beat; Easy songs ease across the whole beat while Hard songs snap to
/// the next pose in a fraction of it, which raises acceleration and jerk.
pub fn generate_song(spec: &SongSpec) -> Result<MotionSequence> {
    let difficulty = spec.difficulty()?;
    if !(spec.bpm > 0.0 && spec.duration > 0.0 && spec.rate > 0.0) {
        return Err(validation("song bpm, duration and rate must be positive"));
    }
    let hard = difficulty == Difficulty::Hard;
    let ranges = if hard { HARD_RANGES } else { EASY_RANGES };
    let beat = 60.0 / spec.bpm;
    let transition = if hard { 0.45 } else { 1.0 };
    let bounce = if hard { 0.05 } else { 0.03 };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let beats = (spec.duration / beat).ceil() as usize + 2;
    let keys: Vec<Vec<f64>> = (0..beats)
        .map(|_| {
            let mut pose = vec![0.0; 24];
            for &(j, lo, hi) in ranges {
                pose[j] = rng.random_range(lo..hi);
            }
            pose
        })
        .collect();
    let pump_phase = rng.random_range(0.0..2.0 * PI);

    let frames_n = (spec.duration * spec.rate).round() as usize + 1;
    let mut frames = Vec::with_capacity(frames_n);
    for k in 0..frames_n {
        let t = k as f64 / spec.rate;
        let b = t / beat;
        let i = b.floor() as usize;
        let u = ((b - i as f64) / transition).min(1.0);
        let ease = 0.5 * (1.0 - (PI * u).cos());
        let mut angles: Vec<f64> = (0..24).map(|j| keys[i][j] + (keys[i + 1][j] - keys[i][j]) * ease).collect();
        // Elbow pumping on the beat.
        let pump = (if hard { 0.35 } else { 0.25 }) * (2.0 * PI * b + pump_phase).sin();
        angles[18] += pump;
        angles[19] -= pump;

        let root = Vec3::new(
            0.0,
            0.06 * (PI * b).sin(),
            PELVIS_HEIGHT - bounce * 0.5 * (1.0 - (2.0 * PI * b).cos()),
        );
        let yaw = Quaternion::from_axis_angle(&Vec3::z(), 0.35 * (PI * b / 4.0).sin());
        let angles: Vec<f64> = angles.iter().map(|a| quantize(*a, 1e-6)).collect();
        let root = root.map(|v| quantize(v, 1e-6));
        let positions = forward_kinematics(&root, &yaw, &angles)
            .into_iter()
            .map(|p| p.map(|v| quantize(v, 1e-6)))
            .collect();
        frames.push(PoseFrame {
            timestamp: quantize(t, 1e-9),
            root_position: root,
            root_orientation: yaw,
            joint_positions: positions,
            joint_angles: angles,
        });
    }
    MotionSequence::new(Skeleton::smpl(PELVIS_HEIGHT)?, frames, spec.rate, difficulty, spec.id.clone())
}
