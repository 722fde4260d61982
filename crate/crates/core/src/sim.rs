//! Kinematic stand-ins for whole-body controllers and human players.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::metrics::{pa_mpjpe, FallCause, FallRecord, TrialMetrics};
use crate::motion::{MotionSequence, PoseFrame};
use crate::quat::{Quaternion, Vec3};
use crate::score::{score_trial, ScoreModel};
use crate::stats::TrialMatrix;

/// Root height a fallen player settles at, meters.
pub const FALLEN_ROOT_HEIGHT: f64 = 0.1;
/// Time constant of the post-fall root height decay, seconds.
const FALL_DECAY: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlayerProfile {
    pub name: String,
    /// Reaction delay, seconds.
    pub lag: f64,
    /// Per-joint positional noise, meters.
    pub noise_sigma: f64,
    /// Joint-angle noise, radians.
    pub angle_noise_sigma: f64,
    /// Tracking bandwidth, Hz; `None` tracks without attenuation.
    pub tracking_cutoff: Option<f64>,
    /// Per-frame fall probability per unit of reference jerk, 1/(rad/s³).
    pub fall_hazard_gain: f64,
    pub seed: u64,
}

impl Default for PlayerProfile {
    fn default() -> Self {
        Self::perfect("perfect")
    }
}

impl PlayerProfile {
    pub fn perfect(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lag: 0.0,
            noise_sigma: 0.0,
            angle_noise_sigma: 0.0,
            tracking_cutoff: None,
            fall_hazard_gain: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !(ok(self.lag) && ok(self.noise_sigma) && ok(self.angle_noise_sigma) && ok(self.fall_hazard_gain)) {
            return Err(validation(format!("profile '{}' has negative or non-finite parameters", self.name)));
        }
        if let Some(c) = self.tracking_cutoff {
            if !(c > 0.0) {
                return Err(validation(format!("profile '{}' cutoff must be positive", self.name)));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Skill-graded cohort: player 0 is the strongest, each next one lags more,
/// tracks with less bandwidth and is noisier.
pub fn graded_cohort(count: usize) -> Vec<PlayerProfile> {
    (0..count)
        .map(|i| {
            let s = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            PlayerProfile {
                name: format!("player{i:02}"),
                lag: 0.3 * s,
                noise_sigma: 0.005 + 0.06 * s,
                angle_noise_sigma: 0.005 + 0.05 * s,
                tracking_cutoff: Some(8.0 - 6.5 * s),
                fall_hazard_gain: 0.0,
                seed: 0,
            }
        })
        .collect()
}

/// Mean absolute third difference of the joint angles around frame `k`, rad/s³.
fn local_jerk(frames: &[PoseFrame], k: usize) -> f64 {
    let n = frames.len();
    if n < 4 {
        return 0.0;
    }
    let k = k.clamp(1, n - 3);
    let dt = (frames[k + 2].timestamp - frames[k - 1].timestamp) / 3.0;
    let joints = frames[k].joint_angles.len();
    let sum: f64 = (0..joints)
        .map(|j| {
            let a = |i: usize| frames[i].joint_angles[j];
            (a(k + 2) - 3.0 * a(k + 1) + 3.0 * a(k) - a(k - 1)).abs()
        })
        .sum();
    sum / joints as f64 / dt.powi(3)
}

/// Plays `reference` as the profiled player: delayed by `lag`, low-passed at
/// `tracking_cutoff`, with positional and angular noise and a jerk-driven
/// fall hazard. Deterministic for a given profile seed.
pub fn simulate_execution(reference: &MotionSequence, profile: &PlayerProfile) -> Result<(MotionSequence, FallRecord)> {
    profile.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let ref_frames = reference.frames();
    let pos_noise = Normal::new(0.0, profile.noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");
    let ang_noise = Normal::new(0.0, profile.angle_noise_sigma.max(f64::MIN_POSITIVE)).expect("valid sigma");

    let mut out: Vec<PoseFrame> = Vec::with_capacity(ref_frames.len());
    let mut tracked: Option<PoseFrame> = None;
    let mut fall: FallRecord = FallRecord::NONE;
    let mut frozen: Option<(Vec<Vec3>, PoseFrame)> = None;

    for (k, rf) in ref_frames.iter().enumerate() {
        let t = rf.timestamp;
        if let Some((local, at_fall)) = &frozen {
            let t_fall = fall.fall_time.unwrap_or(t);
            let h0 = at_fall.root_position.z;
            let mut root = at_fall.root_position;
            root.z = FALLEN_ROOT_HEIGHT + (h0 - FALLEN_ROOT_HEIGHT) * (-(t - t_fall) / FALL_DECAY).exp();
            let rot = at_fall.root_orientation.to_matrix();
            out.push(PoseFrame {
                timestamp: t,
                root_position: root,
                root_orientation: at_fall.root_orientation,
                joint_positions: local.iter().map(|p| root + rot * p).collect(),
                joint_angles: at_fall.joint_angles.clone(),
            });
            continue;
        }

        let target = reference.sample_at(t - profile.lag);
        let next = match (&tracked, profile.tracking_cutoff) {
            (Some(prev), Some(cutoff)) => {
                let dt = t - prev.timestamp;
                let alpha = 1.0 - (-2.0 * std::f64::consts::PI * cutoff * dt).exp();
                low_pass(prev, &target, alpha, t)
            }
            _ => PoseFrame { timestamp: t, ..target },
        };
        tracked = Some(next.clone());

        let hazard = (profile.fall_hazard_gain * local_jerk(ref_frames, k) * reference.mean_interval()).clamp(0.0, 1.0);
        let falls = profile.fall_hazard_gain > 0.0 && rng.random::<f64>() < hazard;

        let mut frame = next;
        if profile.noise_sigma > 0.0 {
            for p in &mut frame.joint_positions {
                *p += Vec3::new(pos_noise.sample(&mut rng), pos_noise.sample(&mut rng), pos_noise.sample(&mut rng));
            }
        }
        if profile.angle_noise_sigma > 0.0 {
            for a in &mut frame.joint_angles {
                *a += ang_noise.sample(&mut rng);
            }
        }
        if falls {
            fall = FallRecord::fall(t, FallCause::RootHeight);
            frozen = Some((frame.torso_frame_positions(), frame.clone()));
        }
        out.push(frame);
    }
    Ok((reference.with_frames(out, reference.nominal_rate())?, fall))
}

fn low_pass(prev: &PoseFrame, target: &PoseFrame, alpha: f64, t: f64) -> PoseFrame {
    let step = prev.root_orientation.conjugate().mul(&target.root_orientation).to_rotation_vector() * alpha;
    PoseFrame {
        timestamp: t,
        root_position: prev.root_position + (target.root_position - prev.root_position) * alpha,
        root_orientation: prev.root_orientation.mul(&Quaternion::from_rotation_vector(&step)).normalized(),
        joint_positions: prev
            .joint_positions
            .iter()
            .zip(&target.joint_positions)
            .map(|(p, q)| p + (q - p) * alpha)
            .collect(),
        joint_angles: prev.joint_angles.iter().zip(&target.joint_angles).map(|(p, q)| p + (q - p) * alpha).collect(),
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial, derived from the base seed and the trial's indices.
pub fn trial_seed(base: u64, profile: usize, song: usize, repeat: usize) -> u64 {
    [profile as u64, song as u64, repeat as u64].iter().fold(mix(base), |acc, &i| mix(acc ^ mix(i)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTrial {
    pub profile: usize,
    pub song: usize,
    pub repeat: usize,
    pub seed: u64,
    pub metrics: TrialMetrics,
    #[serde(skip)]
    pub execution: Option<MotionSequence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub trials: Vec<CohortTrial>,
    pub profile_names: Vec<String>,
    pub song_ids: Vec<String>,
    pub repeats: usize,
}

impl Cohort {
    pub fn trial(&self, profile: usize, song: usize, repeat: usize) -> &CohortTrial {
        let songs = self.song_ids.len();
        &self.trials[(profile * songs + song) * self.repeats + repeat]
    }

    /// Scores arranged as (profile, song) subjects × repeats.
    pub fn score_matrix(&self) -> Result<TrialMatrix> {
        let mut rows = Vec::new();
        let mut ids = Vec::new();
        for (p, pname) in self.profile_names.iter().enumerate() {
            for (s, sid) in self.song_ids.iter().enumerate() {
                rows.push((0..self.repeats).map(|r| self.trial(p, s, r).metrics.score).collect());
                ids.push(format!("{pname}/{sid}"));
            }
        }
        TrialMatrix::new(rows, ids, (0..self.repeats).map(|r| format!("rep{r}")).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortOptions {
    pub base_seed: u64,
    pub score_model: ScoreModel,
    /// Keep each trial's execution sequence in memory.
    pub keep_executions: bool,
}

/// Runs every profile × reference × repeat. Trials execute in parallel; each
/// owns a random stream keyed by its indices, so results do not depend on
/// scheduling.
pub fn cohort(
    profiles: &[PlayerProfile],
    references: &[MotionSequence],
    repeats: usize,
    opts: &CohortOptions,
) -> Result<Cohort> {
    if profiles.is_empty() || references.is_empty() {
        return Err(validation("cohort needs at least one profile and one reference"));
    }
    if repeats == 0 {
        return Err(validation("cohort needs at least one repeat"));
    }
    let jobs: Vec<(usize, usize, usize)> = (0..profiles.len())
        .flat_map(|p| (0..references.len()).flat_map(move |s| (0..repeats).map(move |r| (p, s, r))))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(p, s, r)| {
            let seed = trial_seed(opts.base_seed, p, s, r);
            let reference = &references[s];
            let (execution, fall) = simulate_execution(reference, &profiles[p].with_seed(seed))?;
            let mut metrics = TrialMetrics::compute(&execution, reference, &fall)?;
            metrics.pa_mpjpe = Some(pa_mpjpe(&execution, reference)?.mm);
            metrics.score = score_trial(&execution, reference, &opts.score_model)?.total;
            Ok(CohortTrial {
                profile: p,
                song: s,
                repeat: r,
                seed,
                metrics,
                execution: opts.keep_executions.then_some(execution),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Cohort {
        trials,
        profile_names: profiles.iter().map(|p| p.name.clone()).collect(),
        song_ids: references.iter().map(|r| r.song_id().to_string()).collect(),
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choreo::{default_songs, generate_song};

    fn song() -> MotionSequence {
        generate_song(&default_songs()[1]).unwrap()
    }

    #[test]
    fn perfect_profile_reproduces_reference() {
        let r = song();
        let (e, fall) = simulate_execution(&r, &PlayerProfile::perfect("p")).unwrap();
        assert_eq!(e, r);
        assert!(!fall.fell);
    }

    #[test]
    fn same_seed_same_output() {
        let r = song();
        let p = PlayerProfile { noise_sigma: 0.02, fall_hazard_gain: 1e-4, seed: 9, ..PlayerProfile::perfect("p") };
        assert_eq!(simulate_execution(&r, &p).unwrap(), simulate_execution(&r, &p).unwrap());
        let other = simulate_execution(&r, &p.with_seed(10)).unwrap();
        assert_ne!(other.0, simulate_execution(&r, &p).unwrap().0);
    }

    #[test]
    fn zero_hazard_never_falls() {
        let r = song();
        for seed in 0..5 {
            let p = PlayerProfile { noise_sigma: 0.05, lag: 0.2, seed, ..PlayerProfile::perfect("p") };
            assert!(!simulate_execution(&r, &p).unwrap().1.fell);
        }
    }

    #[test]
    fn high_hazard_falls_and_settles() {
        let r = song();
        let p = PlayerProfile { fall_hazard_gain: 1.0, ..PlayerProfile::perfect("p") };
        let (e, fall) = simulate_execution(&r, &p).unwrap();
        assert!(fall.fell);
        let last = e.frames().last().unwrap();
        assert!((last.root_position.z - FALLEN_ROOT_HEIGHT).abs() < 0.02);
    }

    #[test]
    fn invalid_profile_rejected() {
        let p = PlayerProfile { lag: -0.1, ..PlayerProfile::perfect("p") };
        assert!(simulate_execution(&song(), &p).is_err());
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seeds: Vec<u64> = (0..4)
            .flat_map(|p| (0..4).flat_map(move |s| (0..4).map(move |r| trial_seed(7, p, s, r))))
            .collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 64);
    }

    #[test]
    fn single_trial_cohort() {
        let c = cohort(&[PlayerProfile::perfect("p")], &[song()], 1, &CohortOptions::default()).unwrap();
        assert_eq!(c.trials.len(), 1);
        assert_eq!(c.trials[0].metrics.score, crate::score::MAX_SCORE);
        assert!(c.score_matrix().is_err());
    }
}
