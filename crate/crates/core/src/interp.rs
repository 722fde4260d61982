//! Keyframe buffering and span interpolation for the real-time upsampler.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::PoseFrame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InterpolatorConfig {
    /// Frames inserted between consecutive keyframes.
    pub n_intermediate: usize,
    /// Expected keyframe rate, Hz.
    pub input_rate_hint: f64,
    /// Emission delay in seconds; `None` means one keyframe interval.
    pub output_latency: Option<f64>,
    /// Real-time pacing; when false a virtual clock is used.
    pub paced: bool,
}

impl Default for InterpolatorConfig {
    fn default() -> Self {
        Self { n_intermediate: 2, input_rate_hint: 5.0, output_latency: None, paced: true }
    }
}

impl InterpolatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.input_rate_hint > 0.0 && self.input_rate_hint.is_finite()) {
            return Err(Error::Validation(format!(
                "input rate hint {} must be positive",
                self.input_rate_hint
            )));
        }
        if let Some(l) = self.output_latency {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::Validation(format!("output latency {l} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn output_rate(&self) -> f64 {
        self.input_rate_hint * (self.n_intermediate + 1) as f64
    }

    pub fn latency(&self) -> f64 {
        self.output_latency.unwrap_or(1.0 / self.input_rate_hint)
    }
}

/// The two most recent keyframes.
#[derive(Debug, Clone, Default)]
pub struct KeyframeBuffer {
    previous: Option<PoseFrame>,
    current: Option<PoseFrame>,
    stale_dropped: u64,
}

impl KeyframeBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Shifts `current` into `previous` and stores `frame`. A frame whose
    /// timestamp does not advance past `current` is dropped and counted.
    pub fn push_keyframe(&mut self, frame: PoseFrame) -> Result<()> {
        if let Some(cur) = &self.current {
            if frame.timestamp <= cur.timestamp || frame.timestamp.is_nan() {
                self.stale_dropped += 1;
                return Err(Error::StaleFrame { timestamp: frame.timestamp, current: cur.timestamp });
            }
        }
        self.previous = self.current.take();
        self.current = Some(frame);
        Ok(())
    }

    pub fn previous(&self) -> Option<&PoseFrame> {
        self.previous.as_ref()
    }

    pub fn current(&self) -> Option<&PoseFrame> {
        self.current.as_ref()
    }

    /// Both keyframes, once two are available.
    pub fn span(&self) -> Option<(&PoseFrame, &PoseFrame)> {
        Some((self.previous.as_ref()?, self.current.as_ref()?))
    }

    pub fn stale_dropped(&self) -> u64 {
        self.stale_dropped
    }
}

/// Frames at `t_prev + (i+1)/(n+1)·Δt` for `i = 0..=n`; the last one is `curr`.
pub fn interpolate_span(prev: &PoseFrame, curr: &PoseFrame, n: usize) -> Result<Vec<PoseFrame>> {
    if !(prev.timestamp < curr.timestamp) {
        return Err(Error::Precondition(format!(
            "span start {} must precede end {}",
            prev.timestamp, curr.timestamp
        )));
    }
    if prev.joint_count() != curr.joint_count() || prev.joint_positions.len() != curr.joint_positions.len() {
        return Err(Error::Precondition("span endpoints have different joint counts".into()));
    }
    let steps = (n + 1) as f64;
    let dt = curr.timestamp - prev.timestamp;
    Ok((0..=n)
        .map(|i| {
            if i == n {
                return curr.clone();
            }
            let s = (i + 1) as f64 / steps;
            let mut f = PoseFrame::interpolate(prev, curr, s);
            f.timestamp = prev.timestamp + s * dt;
            f
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::{Quaternion, Vec3};

    fn kf(t: f64, x: f64) -> PoseFrame {
        PoseFrame {
            timestamp: t,
            root_position: Vec3::new(x, 0.0, 0.0),
            root_orientation: Quaternion::IDENTITY,
            joint_positions: vec![Vec3::new(x, 1.0, 0.0)],
            joint_angles: vec![x],
        }
    }

    #[test]
    fn buffer_fill_and_shift() {
        let mut buf = KeyframeBuffer::new();
        buf.push_keyframe(kf(0.0, 0.0)).unwrap();
        assert!(buf.previous().is_none());
        assert!(buf.span().is_none());
        buf.push_keyframe(kf(0.2, 1.0)).unwrap();
        let (p, c) = buf.span().unwrap();
        assert_eq!((p.timestamp, c.timestamp), (0.0, 0.2));
    }

    #[test]
    fn buffer_rejects_stale() {
        let mut buf = KeyframeBuffer::new();
        buf.push_keyframe(kf(0.2, 0.0)).unwrap();
        assert!(matches!(buf.push_keyframe(kf(0.2, 0.0)), Err(Error::StaleFrame { .. })));
        assert!(matches!(buf.push_keyframe(kf(0.1, 0.0)), Err(Error::StaleFrame { .. })));
        assert_eq!(buf.stale_dropped(), 2);
        assert_eq!(buf.current().unwrap().timestamp, 0.2);
        assert!(buf.previous().is_none());
    }

    #[test]
    fn degenerate_span_is_endpoint() {
        let a = kf(0.0, 0.0);
        let b = kf(0.2, 0.2);
        let span = interpolate_span(&a, &b, 0).unwrap();
        assert_eq!(span, vec![b]);
    }

    #[test]
    fn midpoint_span() {
        let span = interpolate_span(&kf(1.0, 0.0), &kf(1.2, 0.2), 1).unwrap();
        assert_eq!(span.len(), 2);
        assert!((span[0].root_position.x - 0.1).abs() < 1e-15);
        assert!((span[0].timestamp - 1.1).abs() < 1e-12);
        assert!((span[0].joint_angles[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn output_rate_is_input_times_n_plus_one() {
        let cfg = InterpolatorConfig { n_intermediate: 2, input_rate_hint: 5.0, ..Default::default() };
        assert_eq!(cfg.output_rate(), 15.0);
        assert!((cfg.latency() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn reversed_span_rejected() {
        assert!(interpolate_span(&kf(1.0, 0.0), &kf(1.0, 0.0), 2).is_err());
    }
}
