//! Property-based invariants of interpolation, file I/O and statistics.

use dancebench_core::format::{parse_motion, render_motion};
use dancebench_core::stats::{cv, icc_2_1, kendall_w, pearson, TrialMatrix};
use dancebench_core::{lerp, slerp, Difficulty, MotionSequence, PoseFrame, Quaternion, Skeleton, Vec3};
use proptest::prelude::*;

fn unit_quat() -> impl Strategy<Value = Quaternion> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("non-degenerate", |(w, x, y, z)| w * w + x * x + y * y + z * z > 1e-2)
        .prop_map(|(w, x, y, z)| Quaternion::new(w, x, y, z).unwrap())
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn frame_strategy(joints: usize) -> impl Strategy<Value = (Vec3, Quaternion, Vec<Vec3>, Vec<f64>)> {
    (vec3(), unit_quat(), prop::collection::vec(vec3(), joints), prop::collection::vec(-3.0f64..3.0, joints))
}

fn sequence_strategy() -> impl Strategy<Value = MotionSequence> {
    (1usize..5, 2usize..8).prop_flat_map(|(joints, n)| {
        (prop::collection::vec(frame_strategy(joints), n), prop::collection::vec(0.001f64..0.5, n)).prop_map(
            move |(frames, gaps)| {
                let mut t = 0.0;
                let frames = frames
                    .into_iter()
                    .zip(gaps)
                    .map(|((root, q, pos, ang), gap)| {
                        t += gap;
                        PoseFrame {
                            timestamp: t,
                            root_position: root,
                            root_orientation: q,
                            joint_positions: pos,
                            joint_angles: ang,
                        }
                    })
                    .collect();
                let sk = Skeleton::numbered(joints, 0.9, 0).unwrap();
                MotionSequence::new(sk, frames, 10.0, Difficulty::Hard, "prop_song").unwrap()
            },
        )
    })
}

proptest! {
    #[test]
    fn slerp_stays_on_the_unit_sphere(a in unit_quat(), b in unit_quat(), t in 0.0f64..=1.0) {
        let q = slerp(&a, &b, t).unwrap();
        prop_assert!((q.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn slerp_has_constant_angular_velocity(a in unit_quat(), b in unit_quat(), t in 0.0f64..=1.0) {
        let total = a.angle_to(&b);
        prop_assume!(total > 1e-3);
        let q = slerp(&a, &b, t).unwrap();
        prop_assert!((a.angle_to(&q) - t * total).abs() < 1e-7);
        prop_assert!((q.angle_to(&b) - (1.0 - t) * total).abs() < 1e-7);
    }

    #[test]
    fn slerp_ignores_double_cover(a in unit_quat(), b in unit_quat(), t in 0.0f64..=1.0) {
        let q1 = slerp(&a, &b, t).unwrap();
        let q2 = slerp(&a, &b.neg(), t).unwrap();
        prop_assert!(q1.angle_to(&q2) < 1e-7);
    }

    #[test]
    fn lerp_is_affine(a in vec3(), b in vec3(), t in 0.0f64..=1.0, s in vec3()) {
        let p = lerp(&a, &b, t).unwrap();
        prop_assert!((p - (a * (1.0 - t) + b * t)).norm() < 1e-12);
        let shifted = lerp(&(a + s), &(b + s), t).unwrap();
        prop_assert!((shifted - (p + s)).norm() < 1e-9);
    }

    #[test]
    fn file_round_trip_is_exact(seq in sequence_strategy()) {
        let text = render_motion(&seq);
        let back = parse_motion(&text).unwrap();
        prop_assert_eq!(back, seq);
    }

    #[test]
    fn pearson_is_invariant_to_positive_affine_maps(
        x in prop::collection::vec(-100.0f64..100.0, 5..30),
        noise in prop::collection::vec(-50.0f64..50.0, 30),
        a in 0.1f64..10.0,
        b in -100.0f64..100.0,
    ) {
        let y: Vec<f64> = x.iter().zip(&noise).map(|(v, e)| v + e).collect();
        let c = pearson(&x, &y);
        prop_assume!(c.is_ok());
        let c = c.unwrap();
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let c2 = pearson(&x2, &y).unwrap();
        prop_assert!((c.r - c2.r).abs() < 1e-9);
        prop_assert!(c.r.abs() <= 1.0);
        prop_assert!((0.0..=1.0).contains(&c.p));
    }

    #[test]
    fn kendall_is_invariant_to_monotone_transforms(
        judges in prop::collection::vec(prop::collection::vec(0u8..6, 5), 2..6),
    ) {
        let j: Vec<Vec<f64>> = judges.iter().map(|r| r.iter().map(|&v| v as f64).collect()).collect();
        let w = kendall_w(&j);
        prop_assume!(w.is_ok());
        let w = w.unwrap();
        let mapped: Vec<Vec<f64>> = j.iter().map(|r| r.iter().map(|v| v.exp() * 3.0 + 1.0).collect()).collect();
        prop_assert!((kendall_w(&mapped).unwrap() - w).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&w));
    }

    #[test]
    fn cv_is_scale_invariant(v in prop::collection::vec(1.0f64..100.0, 2..10), s in 0.01f64..100.0) {
        let scaled: Vec<f64> = v.iter().map(|x| x * s).collect();
        prop_assert!((cv(&v).unwrap() - cv(&scaled).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn icc_is_bounded_above_by_one(rows in prop::collection::vec(prop::collection::vec(0.0f64..10.0, 3), 3..10)) {
        let m = TrialMatrix::from_rows(rows).unwrap();
        if let Ok(v) = icc_2_1(&m) {
            prop_assert!(v <= 1.0 + 1e-12);
            prop_assert!(v >= -1.0 - 1e-12);
        }
    }
}
