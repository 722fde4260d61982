//! Helpers shared by the integration tests.
#![allow(dead_code)]

pub mod oracle;

use std::path::PathBuf;

use dancebench_core::bench::load_songs;
use dancebench_core::{Difficulty, MotionSequence, PoseFrame, Quaternion, Skeleton, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn songs_dir() -> PathBuf {
    fixture_dir().join("songs")
}

/// The shipped songs, sorted by file name.
pub fn fixture_songs() -> Vec<MotionSequence> {
    let set = load_songs(songs_dir()).expect("fixture songs load");
    assert!(set.errata.is_empty(), "fixture errata: {:?}", set.errata);
    set.songs
}

/// Reads a whitespace-separated hex file, ignoring `#` comments.
pub fn read_hex(name: &str) -> Vec<u8> {
    let text = std::fs::read_to_string(fixture_dir().join(name)).expect("hex fixture");
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace().map(|b| u8::from_str_radix(b, 16).expect("hex byte")).collect::<Vec<_>>())
        .collect()
}

/// Sequence of `n` frames at `rate` whose joint 0 angle follows `f(t)` and all
/// other joints stay at zero.
pub fn single_joint_sequence(joints: usize, rate: f64, n: usize, f: impl Fn(f64) -> f64) -> MotionSequence {
    let frames = (0..n)
        .map(|k| {
            let t = k as f64 / rate;
            let mut angles = vec![0.0; joints];
            angles[0] = f(t);
            PoseFrame {
                timestamp: t,
                root_position: Vec3::new(0.0, 0.0, 0.9),
                root_orientation: Quaternion::IDENTITY,
                joint_positions: (0..joints).map(|j| Vec3::new(0.1 * j as f64, 0.0, 1.0)).collect(),
                joint_angles: angles,
            }
        })
        .collect();
    let sk = Skeleton::numbered(joints, 0.9, 0).unwrap();
    MotionSequence::new(sk, frames, rate, Difficulty::Easy, "synthetic").unwrap()
}

/// Copy of `seq` with Gaussian noise on joint angles (radians) and positions
/// (meters).
pub fn with_noise(seq: &MotionSequence, angle_sigma: f64, pos_sigma: f64, seed: u64) -> MotionSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Normal::new(0.0, angle_sigma).unwrap();
    let p = Normal::new(0.0, pos_sigma).unwrap();
    let frames = seq
        .frames()
        .iter()
        .map(|f| {
            let mut f = f.clone();
            for x in &mut f.joint_angles {
                *x += a.sample(&mut rng);
            }
            for v in &mut f.joint_positions {
                *v += Vec3::new(p.sample(&mut rng), p.sample(&mut rng), p.sample(&mut rng));
            }
            f.root_position += Vec3::new(p.sample(&mut rng), p.sample(&mut rng), p.sample(&mut rng));
            f
        })
        .collect();
    seq.with_frames(frames, seq.nominal_rate()).unwrap()
}

/// Sample-lag maximizing the cross-correlation of two equal-length signals
/// (positive when `y` trails `x`).
pub fn xcorr_lag(x: &[f64], y: &[f64], max_lag: i64) -> i64 {
    let mx = x.iter().sum::<f64>() / x.len() as f64;
    let my = y.iter().sum::<f64>() / y.len() as f64;
    (-max_lag..=max_lag)
        .map(|lag| {
            let mut s = 0.0;
            for i in 0..x.len() as i64 {
                let j = i + lag;
                if j >= 0 && (j as usize) < y.len() {
                    s += (x[i as usize] - mx) * (y[j as usize] - my);
                }
            }
            (lag, s)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

/// Root speed per frame interval.
pub fn root_speed(seq: &MotionSequence) -> Vec<f64> {
    seq.frames()
        .windows(2)
        .map(|w| (w[1].root_position - w[0].root_position).norm() / (w[1].timestamp - w[0].timestamp))
        .collect()
}
