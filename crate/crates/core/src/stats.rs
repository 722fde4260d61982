//! Reliability statistics: Pearson correlation, ICC, coefficient of variation
//! and Kendall's coefficient of concordance.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::special::student_t_two_tailed;

/// Complete subjects × repeats design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMatrix {
    values: Vec<Vec<f64>>,
    subject_ids: Vec<String>,
    condition_ids: Vec<String>,
}

impl TrialMatrix {
    pub fn new(values: Vec<Vec<f64>>, subject_ids: Vec<String>, condition_ids: Vec<String>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(validation(format!("need at least 2 subjects, got {n}")));
        }
        let k = values[0].len();
        if k < 2 {
            return Err(validation(format!("need at least 2 repeats, got {k}")));
        }
        if let Some(i) = values.iter().position(|r| r.len() != k) {
            return Err(validation(format!("row {i} has {} cells, expected {k}", values[i].len())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(validation("matrix has missing or non-finite cells"));
        }
        if subject_ids.len() != n || condition_ids.len() != k {
            return Err(validation("id lists do not match matrix shape"));
        }
        Ok(Self { values, subject_ids, condition_ids })
    }

    /// Matrix with numbered subject and repeat labels.
    pub fn from_rows(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len();
        let k = values.first().map_or(0, Vec::len);
        Self::new(
            values,
            (0..n).map(|i| format!("s{i}")).collect(),
            (0..k).map(|j| format!("r{j}")).collect(),
        )
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n_subjects(&self) -> usize {
        self.values.len()
    }

    pub fn k_repeats(&self) -> usize {
        self.values[0].len()
    }

    pub fn subject_ids(&self) -> &[String] {
        &self.subject_ids
    }

    pub fn condition_ids(&self) -> &[String] {
        &self.condition_ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson's r with a two-tailed p-value from Student's t with `n − 2` dof.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    let n = x.len();
    if n != y.len() {
        return Err(validation(format!("length mismatch: {n} vs {}", y.len())));
    }
    if n < 3 {
        return Err(validation(format!("pearson needs at least 3 points, got {n}")));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateInput("zero variance in pearson input".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        student_t_two_tailed(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(Correlation { r, p, n })
}

/// Shrout–Fleiss intraclass correlation variants (single measure).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IccKind {
    /// One-way random effects.
    Icc1,
    /// Two-way random effects, absolute agreement.
    #[default]
    Icc21,
    /// Two-way mixed effects, consistency.
    Icc31,
}

/// Mean squares of the two-way ANOVA without replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnovaTable {
    pub ms_rows: f64,
    pub ms_cols: f64,
    pub ms_error: f64,
    pub ms_within: f64,
}

pub fn two_way_anova(m: &TrialMatrix) -> AnovaTable {
    let n = m.n_subjects() as f64;
    let k = m.k_repeats() as f64;
    let grand = m.rows().iter().flatten().sum::<f64>() / (n * k);
    let row_means: Vec<f64> = m.rows().iter().map(|r| mean(r)).collect();
    let col_means: Vec<f64> =
        (0..m.k_repeats()).map(|j| m.rows().iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let ss_total: f64 = m.rows().iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_rows = k * row_means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let ss_cols = n * col_means.iter().map(|v| (v - grand).powi(2)).sum::<f64>();
    let ss_error = (ss_total - ss_rows - ss_cols).max(0.0);
    AnovaTable {
        ms_rows: ss_rows / (n - 1.0),
        ms_cols: ss_cols / (k - 1.0),
        ms_error: ss_error / ((n - 1.0) * (k - 1.0)),
        ms_within: (ss_total - ss_rows).max(0.0) / (n * (k - 1.0)),
    }
}

/// ICC(2,1): two-way random effects, single measure, absolute agreement.
pub fn icc_2_1(m: &TrialMatrix) -> Result<f64> {
    icc(m, IccKind::Icc21)
}

pub fn icc(m: &TrialMatrix, kind: IccKind) -> Result<f64> {
    let a = two_way_anova(m);
    let n = m.n_subjects() as f64;
    let k = m.k_repeats() as f64;
    let (num, den) = match kind {
        IccKind::Icc1 => (a.ms_rows - a.ms_within, a.ms_rows + (k - 1.0) * a.ms_within),
        IccKind::Icc21 => (
            a.ms_rows - a.ms_error,
            a.ms_rows + (k - 1.0) * a.ms_error + (k / n) * (a.ms_cols - a.ms_error),
        ),
        IccKind::Icc31 => (a.ms_rows - a.ms_error, a.ms_rows + (k - 1.0) * a.ms_error),
    };
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::DegenerateInput("zero total variance in trial matrix".into()));
    }
    Ok(num / den)
}

/// Coefficient of variation in percent: sample standard deviation over mean.
/// A negative mean is allowed but logged.
pub fn cv(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(validation(format!("cv needs at least 2 values, got {}", values.len())));
    }
    let m = mean(values);
    if m == 0.0 {
        return Err(Error::DegenerateInput("cv of zero-mean values".into()));
    }
    if m < 0.0 {
        log::warn!("coefficient of variation computed for negative mean {m}");
    }
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(100.0 * var.sqrt() / m)
}

/// Average ranks (1-based) with ties sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Kendall's W over an m-judges × n-items value matrix, with tie correction.
pub fn kendall_w(judges: &[Vec<f64>]) -> Result<f64> {
    let m = judges.len();
    if m < 2 {
        return Err(validation(format!("kendall's W needs at least 2 judges, got {m}")));
    }
    let n = judges[0].len();
    if n < 2 {
        return Err(validation(format!("kendall's W needs at least 2 items, got {n}")));
    }
    if judges.iter().any(|r| r.len() != n) {
        return Err(validation("judges rate different numbers of items"));
    }
    let mut rank_sums = vec![0.0; n];
    let mut tie_total = 0.0;
    for row in judges {
        let ranks = average_ranks(row);
        for (s, r) in rank_sums.iter_mut().zip(&ranks) {
            *s += r;
        }
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_total += t * t * t - t;
            i = j + 1;
        }
    }
    let (mf, nf) = (m as f64, n as f64);
    let mean_sum = rank_sums.iter().sum::<f64>() / nf;
    let s: f64 = rank_sums.iter().map(|r| (r - mean_sum).powi(2)).sum();
    let den = mf * mf * (nf * nf * nf - nf) - mf * tie_total;
    if den <= 0.0 {
        return Err(Error::DegenerateInput("every judge ties all items".into()));
    }
    Ok((12.0 * s / den).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub icc: f64,
    pub cv_percent: f64,
    pub kcc: f64,
    pub pearson_r: f64,
    pub pearson_p: f64,
}
