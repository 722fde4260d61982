//! Two-task upsampling pipeline: a producer feeding keyframes through a
//! single-slot mailbox and an emitter that interpolates each span and paces
//! its frames one keyframe interval behind the source.

use std::collections::VecDeque;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interp::{interpolate_span, InterpolatorConfig, KeyframeBuffer};
use crate::motion::PoseFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkStatus {
    Accepted,
    /// The sink cannot take the frame now; it stays queued.
    Busy,
}

/// Consumer of the interpolated stream.
pub trait FrameSink: Send {
    fn send(&mut self, frame: &PoseFrame) -> SinkStatus;

    fn finish(&mut self) {}
}

/// Collects every emitted frame in memory.
#[derive(Debug, Default)]
pub struct VecSink {
    pub frames: Vec<PoseFrame>,
}

impl FrameSink for VecSink {
    fn send(&mut self, frame: &PoseFrame) -> SinkStatus {
        self.frames.push(frame.clone());
        SinkStatus::Accepted
    }
}

/// Adapts a closure into a sink.
pub struct CallbackSink<F>(pub F);

impl<F: FnMut(&PoseFrame) -> SinkStatus + Send> FrameSink for CallbackSink<F> {
    fn send(&mut self, frame: &PoseFrame) -> SinkStatus {
        (self.0)(frame)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub keyframes_in: u64,
    /// Keyframes overwritten in the mailbox before the emitter took them.
    pub keyframes_dropped: u64,
    pub stale_dropped: u64,
    pub frames_out: u64,
    /// Interpolated frames discarded under sink back-pressure.
    pub frames_dropped: u64,
    /// Emitted frames per second of stream time between first and last emission.
    pub output_rate: f64,
    /// Mean delay between a keyframe's arrival and its emission, seconds.
    pub mean_latency: f64,
    pub max_latency: f64,
    pub min_latency: f64,
}

struct Arrival {
    frame: PoseFrame,
    at: f64,
}

#[derive(Default)]
struct SlotState {
    slot: Option<Arrival>,
    closed: bool,
    overwritten: u64,
}

/// Single-slot mailbox between exactly one producer and one consumer.
#[derive(Default)]
struct Mailbox {
    state: Mutex<SlotState>,
    cond: Condvar,
}

impl Mailbox {
    fn put_overwrite(&self, a: Arrival) {
        let mut s = self.state.lock().unwrap();
        if s.slot.replace(a).is_some() {
            s.overwritten += 1;
        }
        self.cond.notify_all();
    }

    fn put_wait(&self, a: Arrival) {
        let mut s = self.state.lock().unwrap();
        while s.slot.is_some() {
            s = self.cond.wait(s).unwrap();
        }
        s.slot = Some(a);
        self.cond.notify_all();
    }

    fn close(&self) {
        self.state.lock().unwrap().closed = true;
        self.cond.notify_all();
    }

    fn take(&self) -> Option<Arrival> {
        let mut s = self.state.lock().unwrap();
        loop {
            if let Some(a) = s.slot.take() {
                self.cond.notify_all();
                return Some(a);
            }
            if s.closed {
                return None;
            }
            s = self.cond.wait(s).unwrap();
        }
    }

    fn try_take(&self) -> Option<Arrival> {
        let mut s = self.state.lock().unwrap();
        let a = s.slot.take();
        if a.is_some() {
            self.cond.notify_all();
        }
        a
    }

    fn overwritten(&self) -> u64 {
        self.state.lock().unwrap().overwritten
    }
}

/// Per-task clock. Times are seconds since the pipeline origin.
enum TaskClock {
    Real(Instant),
    Virtual(f64),
}

impl TaskClock {
    fn now(&self) -> f64 {
        match self {
            TaskClock::Real(start) => start.elapsed().as_secs_f64(),
            TaskClock::Virtual(t) => *t,
        }
    }

    fn sleep_until(&mut self, t: f64) {
        match self {
            TaskClock::Real(start) => {
                let now = start.elapsed().as_secs_f64();
                if t > now {
                    thread::sleep(Duration::from_secs_f64(t - now));
                }
            }
            TaskClock::Virtual(now) => *now = now.max(t),
        }
    }
}

struct Pending {
    frame: PoseFrame,
    due: f64,
    /// Arrival time of the keyframe this frame reproduces, if it is one.
    keyframe_arrival: Option<f64>,
}

/// Runs the producer and emitter until the source is exhausted and the final
/// span has been flushed. Returns the statistics and the sink.
pub fn run_pipeline<I, S>(source: I, mut sink: S, cfg: &InterpolatorConfig) -> Result<(PipelineStats, S)>
where
    I: IntoIterator<Item = PoseFrame>,
    I::IntoIter: Send,
    S: FrameSink,
{
    cfg.validate()?;
    let mailbox = Mailbox::default();
    let start = Instant::now();
    let paced = cfg.paced;
    let delay = cfg.latency();
    let n = cfg.n_intermediate;
    let capacity = 2 * (n + 1);
    let retry = 0.25 / cfg.output_rate();

    let mut source = source.into_iter().peekable();
    let origin = source.peek().map(|f| f.timestamp).unwrap_or(0.0);

    let mut stats = PipelineStats::default();
    let keyframes_in = thread::scope(|scope| {
        let producer = scope.spawn(|| {
            let mut clock = if paced { TaskClock::Real(start) } else { TaskClock::Virtual(0.0) };
            let mut count = 0u64;
            for frame in source {
                clock.sleep_until(frame.timestamp - origin);
                let at = clock.now();
                count += 1;
                if paced {
                    mailbox.put_overwrite(Arrival { frame, at });
                } else {
                    mailbox.put_wait(Arrival { frame, at });
                }
            }
            mailbox.close();
            count
        });

        let mut clock = if paced { TaskClock::Real(start) } else { TaskClock::Virtual(0.0) };
        let mut buffer = KeyframeBuffer::new();
        let mut pending: VecDeque<Pending> = VecDeque::new();
        let mut lookahead: Option<Arrival> = None;
        let mut closed = false;
        let mut latencies = Vec::new();
        let mut first_emit: Option<f64> = None;
        let mut last_emit = 0.0;

        loop {
            if lookahead.is_none() && !closed {
                lookahead = if paced {
                    mailbox.try_take()
                } else {
                    let a = mailbox.take();
                    closed = a.is_none();
                    a
                };
            }

            let ingest = match (&lookahead, pending.front()) {
                (Some(_), None) => true,
                (Some(a), Some(head)) => a.at < head.due,
                (None, _) => false,
            };
            if ingest {
                let arrival = lookahead.take().expect("lookahead present");
                if buffer.push_keyframe(arrival.frame).is_ok() {
                    // The first keyframe is emitted as-is; later ones close a span.
                    let frames = match buffer.span() {
                        Some((prev, curr)) => interpolate_span(prev, curr, n).expect("buffer keeps spans ordered"),
                        None => vec![buffer.current().expect("keyframe just pushed").clone()],
                    };
                    let last = frames.len() - 1;
                    for (i, frame) in frames.into_iter().enumerate() {
                        let due = frame.timestamp - origin + delay;
                        let keyframe_arrival = (i == last).then_some(arrival.at);
                        pending.push_back(Pending { frame, due, keyframe_arrival });
                    }
                    while pending.len() > capacity {
                        pending.pop_front();
                        stats.frames_dropped += 1;
                    }
                }
                continue;
            }

            let Some(head) = pending.front_mut() else {
                if closed {
                    break;
                }
                // Real-time mode with nothing queued: block for the next keyframe.
                match mailbox.take() {
                    Some(a) => lookahead = Some(a),
                    None => closed = true,
                }
                continue;
            };

            clock.sleep_until(head.due);
            match sink.send(&head.frame) {
                SinkStatus::Accepted => {
                    let now = clock.now();
                    first_emit.get_or_insert(now);
                    last_emit = now;
                    if let Some(at) = head.keyframe_arrival {
                        latencies.push(now - at);
                    }
                    stats.frames_out += 1;
                    pending.pop_front();
                }
                SinkStatus::Busy => head.due = clock.now() + retry,
            }
        }
        sink.finish();

        stats.stale_dropped = buffer.stale_dropped();
        if let Some(first) = first_emit {
            if stats.frames_out > 1 && last_emit > first {
                stats.output_rate = (stats.frames_out - 1) as f64 / (last_emit - first);
            }
        }
        if !latencies.is_empty() {
            stats.mean_latency = latencies.iter().sum::<f64>() / latencies.len() as f64;
            stats.max_latency = latencies.iter().cloned().fold(f64::MIN, f64::max);
            stats.min_latency = latencies.iter().cloned().fold(f64::MAX, f64::min);
        }
        producer.join().expect("producer thread panicked")
    });
    stats.keyframes_in = keyframes_in;
    stats.keyframes_dropped = mailbox.overwritten();
    Ok((stats, sink))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::{Quaternion, Vec3};

    fn keyframes(count: usize, rate: f64) -> Vec<PoseFrame> {
        (0..count)
            .map(|i| {
                let t = i as f64 / rate;
                PoseFrame {
                    timestamp: t,
                    root_position: Vec3::new(t.sin(), 0.0, 0.8),
                    root_orientation: Quaternion::from_axis_angle(&Vec3::z(), t),
                    joint_positions: vec![Vec3::new(0.0, t, 1.0); 3],
                    joint_angles: vec![t.cos(); 3],
                }
            })
            .collect()
    }

    fn virtual_cfg(n: usize) -> InterpolatorConfig {
        InterpolatorConfig { n_intermediate: n, paced: false, ..Default::default() }
    }

    #[test]
    fn single_keyframe_is_emitted_alone() {
        let (stats, sink) = run_pipeline(keyframes(1, 5.0), VecSink::default(), &virtual_cfg(2)).unwrap();
        assert_eq!(stats.frames_out, 1);
        assert_eq!(sink.frames, keyframes(1, 5.0));
        assert_eq!(stats.keyframes_in, 1);
    }

    #[test]
    fn virtual_run_is_deterministic_and_complete() {
        let (a, sa) = run_pipeline(keyframes(11, 5.0), VecSink::default(), &virtual_cfg(2)).unwrap();
        let (b, sb) = run_pipeline(keyframes(11, 5.0), VecSink::default(), &virtual_cfg(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(sa.frames, sb.frames);
        assert_eq!(a.frames_out, 31);
        assert_eq!(a.frames_dropped, 0);
    }

    #[test]
    fn stale_keyframes_are_counted() {
        let mut kfs = keyframes(4, 5.0);
        kfs.insert(2, kfs[0].clone());
        let (stats, sink) = run_pipeline(kfs, VecSink::default(), &virtual_cfg(1)).unwrap();
        assert_eq!(stats.stale_dropped, 1);
        assert_eq!(sink.frames.len(), 7);
    }

    #[test]
    fn busy_sink_drops_oldest_frames() {
        // Refuses every frame until 100 have been offered, forcing a backlog.
        let mut offered = 0;
        let sink = CallbackSink(move |_: &PoseFrame| {
            offered += 1;
            if offered < 100 {
                SinkStatus::Busy
            } else {
                SinkStatus::Accepted
            }
        });
        let cfg = InterpolatorConfig { output_latency: Some(0.0), ..virtual_cfg(2) };
        let (stats, _) = run_pipeline(keyframes(20, 5.0), sink, &cfg).unwrap();
        assert!(stats.frames_dropped > 0);
        assert_eq!(stats.frames_out + stats.frames_dropped, 1 + 19 * 3);
    }

    #[test]
    fn paced_run_emits_in_real_time() {
        let cfg = InterpolatorConfig { n_intermediate: 1, input_rate_hint: 50.0, ..Default::default() };
        let (stats, sink) = run_pipeline(keyframes(6, 50.0), VecSink::default(), &cfg).unwrap();
        assert_eq!(sink.frames.len() as u64 + stats.frames_dropped, 11);
        assert!(stats.mean_latency >= 0.015, "latency {}", stats.mean_latency);
        assert!(sink.frames.windows(2).all(|w| w[0].timestamp < w[1].timestamp));
    }
}
