//! The `sjd-motion v1` text format.
//!
//! ```text
//! # sjd-motion v1
//! joints=<J> rate=<Hz> height=<m> effector=<idx> song=<id> difficulty=<easy|hard>
//! <t> <px> <py> <pz> <qw> <qx> <qy> <qz> <a_0..a_{J-1}> <j0x j0y j0z ... >
//! ```
//!
//! Lines starting with `#` after the magic line are comments. A comment of the
//! form `# joint_names: a b c` carries joint names; without it, 24-joint files
//! get SMPL names and other sizes get `j0..`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{validation, Error, Result};
use crate::motion::{Difficulty, MotionSequence, PoseFrame, Skeleton, SMPL_JOINT_NAMES};
use crate::quat::{Quaternion, Vec3};

pub const MAGIC: &str = "# sjd-motion v1";
const NAMES_PREFIX: &str = "# joint_names:";

fn format_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Format { line, msg: msg.into() }
}

pub fn read_motion_file(path: impl AsRef<Path>) -> Result<MotionSequence> {
    let text = fs::read_to_string(path)?;
    parse_motion(&text)
}

pub fn write_motion_file(seq: &MotionSequence, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, render_motion(seq))?;
    Ok(())
}

fn default_names(joints: usize) -> Vec<String> {
    if joints == SMPL_JOINT_NAMES.len() {
        SMPL_JOINT_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..joints).map(|i| format!("j{i}")).collect()
    }
}

pub fn parse_motion(text: &str) -> Result<MotionSequence> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((n, l)) => return Err(format_err(n, format!("expected '{MAGIC}', found '{l}'"))),
        None => return Err(format_err(1, "empty file")),
    }

    let mut names: Option<Vec<String>> = None;
    let mut header: Option<(usize, HashMap<&str, &str>)> = None;
    let mut rows: Vec<(usize, &str)> = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(NAMES_PREFIX) {
            names = Some(rest.split_whitespace().map(str::to_string).collect());
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            let mut map = HashMap::new();
            for tok in line.split_whitespace() {
                let (k, v) = tok
                    .split_once('=')
                    .ok_or_else(|| format_err(n, format!("header token '{tok}' is not key=value")))?;
                map.insert(k, v);
            }
            header = Some((n, map));
        } else {
            rows.push((n, line));
        }
    }
    let (hline, map) = header.ok_or_else(|| format_err(2, "missing header line"))?;
    let get = |key: &str| -> Result<&str> {
        map.get(key).copied().ok_or_else(|| format_err(hline, format!("header missing '{key}'")))
    };
    let parse_num = |key: &str| -> Result<f64> {
        get(key)?.parse::<f64>().map_err(|e| format_err(hline, format!("bad {key}: {e}")))
    };
    let joints: usize =
        get("joints")?.parse().map_err(|e| format_err(hline, format!("bad joints: {e}")))?;
    let effector: usize =
        get("effector")?.parse().map_err(|e| format_err(hline, format!("bad effector: {e}")))?;
    let rate = parse_num("rate")?;
    let height = parse_num("height")?;
    let song = get("song")?;
    let difficulty: Difficulty = get("difficulty")?
        .parse()
        .map_err(|_| format_err(hline, "difficulty must be 'easy' or 'hard'"))?;

    let names = names.unwrap_or_else(|| default_names(joints));
    if names.len() != joints {
        return Err(format_err(hline, format!("{} joint names for {joints} joints", names.len())));
    }
    let skeleton = Skeleton::new(names, height, effector)?;

    let width = 8 + 4 * joints;
    let mut frames = Vec::with_capacity(rows.len());
    for (n, line) in rows {
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| format_err(n, format!("bad number '{t}': {e}"))))
            .collect::<Result<_>>()?;
        if vals.len() != width {
            return Err(format_err(n, format!("expected {width} values, found {}", vals.len())));
        }
        if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
            return Err(validation(format!("line {n}: non-finite value {bad}")));
        }
        // Stored unit quaternions are kept bit-exact; anything else is normalized.
        let stored = Quaternion::from_components(vals[4], vals[5], vals[6], vals[7]);
        let root_orientation = if (stored.norm() - 1.0).abs() <= 1e-12 {
            stored.canonical()
        } else {
            Quaternion::new(vals[4], vals[5], vals[6], vals[7])
                .map_err(|_| validation(format!("line {n}: zero root quaternion")))?
        };
        let joint_angles = vals[8..8 + joints].to_vec();
        let joint_positions = vals[8 + joints..]
            .chunks_exact(3)
            .map(|c| Vec3::new(c[0], c[1], c[2]))
            .collect();
        frames.push(PoseFrame {
            timestamp: vals[0],
            root_position: Vec3::new(vals[1], vals[2], vals[3]),
            root_orientation,
            joint_positions,
            joint_angles,
        });
    }
    MotionSequence::new(skeleton, frames, rate, difficulty, song)
}

/// Serializes with shortest round-trip float formatting, so parsing the output
/// reproduces every value bit for bit.
pub fn render_motion(seq: &MotionSequence) -> String {
    let sk = seq.skeleton();
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(
        out,
        "joints={} rate={} height={} effector={} song={} difficulty={}",
        sk.joint_count(),
        seq.nominal_rate(),
        sk.nominal_height(),
        sk.tracked_effector(),
        seq.song_id(),
        seq.difficulty()
    );
    if sk.joint_names() != default_names(sk.joint_count()).as_slice() {
        let _ = writeln!(out, "{NAMES_PREFIX} {}", sk.joint_names().join(" "));
    }
    for f in seq.frames() {
        let q = f.root_orientation;
        let _ = write!(
            out,
            "{} {} {} {} {} {} {} {}",
            f.timestamp, f.root_position.x, f.root_position.y, f.root_position.z, q.w, q.x, q.y, q.z
        );
        for a in &f.joint_angles {
            let _ = write!(out, " {a}");
        }
        for p in &f.joint_positions {
            let _ = write!(out, " {} {} {}", p.x, p.y, p.z);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_FRAMES: &str = "# sjd-motion v1
joints=2 rate=10 height=0.75 effector=1 song=demo difficulty=easy
# a comment
0 0 0 0.75 1 0 0 0 0.1 0.2 0 0 1 0 0 1.5
0.1 0 0 0.75 1 0 0 0 0.1 0.3 0 0 1 0 0.1 1.5
";

    #[test]
    fn parses_two_frame_file() {
        let seq = parse_motion(TWO_FRAMES).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.skeleton().joint_count(), 2);
        assert_eq!(seq.skeleton().tracked_effector(), 1);
        assert_eq!(seq.song_id(), "demo");
        assert_eq!(seq.frames()[1].joint_positions[1], Vec3::new(0.0, 0.1, 1.5));
        assert_eq!(seq.frames()[1].joint_angles, vec![0.1, 0.3]);
    }

    #[test]
    fn decreasing_timestamps_rejected() {
        let text = TWO_FRAMES.replace("\n0.1 0 0", "\n-0.1 0 0");
        assert!(matches!(parse_motion(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn non_finite_rejected() {
        let text = TWO_FRAMES.replace("0.1 0.3", "NaN 0.3");
        assert!(matches!(parse_motion(&text), Err(Error::Validation(_))));
        let text = TWO_FRAMES.replace("0.1 0.3", "inf 0.3");
        assert!(matches!(parse_motion(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn malformed_header_rejected() {
        assert!(matches!(parse_motion("# sjd-motion v2\n"), Err(Error::Format { .. })));
        let text = TWO_FRAMES.replace("joints=2 ", "");
        assert!(matches!(parse_motion(&text), Err(Error::Format { .. })));
        let text = TWO_FRAMES.replace("difficulty=easy", "difficulty=medium");
        assert!(matches!(parse_motion(&text), Err(Error::Format { .. })));
        let text = TWO_FRAMES.replace(" 1.5\n0.1", " 1.5 9\n0.1");
        assert!(matches!(parse_motion(&text), Err(Error::Format { line: 4, .. })));
    }

    #[test]
    fn unit_skeleton_three_frames_layout() {
        let sk = Skeleton::numbered(1, 1.0, 0).unwrap();
        let frames = (0..3)
            .map(|i| PoseFrame {
                timestamp: i as f64 * 0.1,
                root_position: Vec3::zeros(),
                root_orientation: Quaternion::IDENTITY,
                joint_positions: vec![Vec3::new(0.0, 0.0, 1.0)],
                joint_angles: vec![0.0],
            })
            .collect();
        let seq = MotionSequence::new(sk, frames, 10.0, Difficulty::Hard, "u").unwrap();
        let text = render_motion(&seq);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], MAGIC);
        assert!(lines[1].starts_with("joints=1 "));
        assert_eq!(lines[2].split_whitespace().count(), 12);
    }

    #[test]
    fn custom_joint_names_survive() {
        let sk = Skeleton::new(vec!["a".into(), "b".into()], 1.0, 1).unwrap();
        let seq = parse_motion(TWO_FRAMES).unwrap();
        let seq = MotionSequence::new(sk, seq.frames().to_vec(), 10.0, Difficulty::Easy, "n").unwrap();
        let back = parse_motion(&render_motion(&seq)).unwrap();
        assert_eq!(back.skeleton().joint_names(), ["a", "b"]);
    }
}
