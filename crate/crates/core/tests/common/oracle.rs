//! Direct-formula reference implementations the library is checked against.

use dancebench_core::Vec3;
use nalgebra::{Matrix3, UnitQuaternion};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

pub fn pearson_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
    let df = n - 2.0;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let p = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t.abs()));
    (r, p)
}

/// Shrout–Fleiss ICC(2,1) from explicitly accumulated sums of squares.
pub fn icc21_oracle(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let k = rows[0].len();
    let grand: f64 = rows.iter().flatten().sum::<f64>() / (n * k) as f64;
    let mut ss_total = 0.0;
    for row in rows {
        for v in row {
            ss_total += (v - grand) * (v - grand);
        }
    }
    let mut ss_rows = 0.0;
    for row in rows {
        let m = row.iter().sum::<f64>() / k as f64;
        ss_rows += k as f64 * (m - grand) * (m - grand);
    }
    let mut ss_cols = 0.0;
    for j in 0..k {
        let m = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        ss_cols += n as f64 * (m - grand) * (m - grand);
    }
    let ss_err = ss_total - ss_rows - ss_cols;
    let bms = ss_rows / (n - 1) as f64;
    let jms = ss_cols / (k - 1) as f64;
    let ems = ss_err / ((n - 1) * (k - 1)) as f64;
    (bms - ems) / (bms + (k as f64 - 1.0) * ems + k as f64 * (jms - ems) / n as f64)
}

pub fn cv_oracle(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    100.0 * var.sqrt() / m
}

/// Kendall's W with ranks found by counting and the tie correction applied.
pub fn kendall_oracle(judges: &[Vec<f64>]) -> f64 {
    let m = judges.len() as f64;
    let n = judges[0].len();
    let mut totals = vec![0.0; n];
    let mut ties = 0.0;
    for judge in judges {
        for i in 0..n {
            let less = judge.iter().filter(|&&v| v < judge[i]).count() as f64;
            let equal = judge.iter().filter(|&&v| v == judge[i]).count() as f64;
            totals[i] += 1.0 + less + (equal - 1.0) / 2.0;
        }
        let mut seen: Vec<f64> = Vec::new();
        for &v in judge {
            if !seen.contains(&v) {
                seen.push(v);
                let t = judge.iter().filter(|&&w| w == v).count() as f64;
                ties += t * t * t - t;
            }
        }
    }
    let mean = totals.iter().sum::<f64>() / n as f64;
    let s: f64 = totals.iter().map(|r| (r - mean).powi(2)).sum();
    let nf = n as f64;
    12.0 * s / (m * m * (nf * nf * nf - nf) - m * ties)
}

/// Small random matrix with values on a coarse grid so ties occur.
pub fn random_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rng.random_range(3..=8);
    let k = rng.random_range(2..=5);
    (0..n).map(|_| (0..k).map(|_| rng.random_range(1..=12) as f64 * 0.5).collect()).collect()
}

pub fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let q = nalgebra::Quaternion::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner()
}

/// Random point in the cube [-1, 1]³.
pub fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
    Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}
