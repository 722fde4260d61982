//! Datagram protocol carrying interpolated reference frames to a controller.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                               |
//! |--------|------|-------------------------------------|
//! | 0      | 4    | magic `SJDM`                        |
//! | 4      | 1    | version (1)                         |
//! | 5      | 1    | flags (bit0 end-of-stream)          |
//! | 6      | 4    | sequence, u32                       |
//! | 10     | 8    | timestamp, u64 microseconds         |
//! | 18     | 2    | joint count J, u16                  |
//! | 20     | 12   | root position, 3 × f32              |
//! | 32     | 16   | root quaternion w,x,y,z, 4 × f32    |
//! | 48     | 4·J  | joint angles, J × f32               |

use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::motion::PoseFrame;
use crate::pipeline::{FrameSink, SinkStatus};
use crate::quat::{Quaternion, Vec3};

pub const MAGIC: [u8; 4] = *b"SJDM";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 20;
pub const FIXED_PAYLOAD_LEN: usize = 28;
pub const DEFAULT_PORT: u16 = 47474;

pub const FLAG_END_OF_STREAM: u8 = 0b01;
/// Reserved for an alternative payload type.
pub const FLAG_ALT_PAYLOAD: u8 = 0b10;

pub fn packet_len(joints: usize) -> usize {
    HEADER_LEN + FIXED_PAYLOAD_LEN + 4 * joints
}

/// Decoded contents of one datagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePacket {
    pub flags: u8,
    pub sequence: u32,
    pub timestamp_us: u64,
    pub root_position: [f32; 3],
    pub root_orientation: [f32; 4],
    pub joint_angles: Vec<f32>,
}

impl FramePacket {
    pub fn from_frame(frame: &PoseFrame, sequence: u32) -> Result<Self> {
        if frame.joint_angles.len() > u16::MAX as usize {
            return Err(validation(format!("{} joints exceed the u16 joint count", frame.joint_angles.len())));
        }
        if !(frame.timestamp >= 0.0 && frame.timestamp.is_finite()) {
            return Err(validation(format!("timestamp {} not representable on the wire", frame.timestamp)));
        }
        let q = frame.root_orientation;
        Ok(Self {
            flags: 0,
            sequence,
            timestamp_us: (frame.timestamp * 1e6).round() as u64,
            root_position: [frame.root_position.x as f32, frame.root_position.y as f32, frame.root_position.z as f32],
            root_orientation: [q.w as f32, q.x as f32, q.y as f32, q.z as f32],
            joint_angles: frame.joint_angles.iter().map(|&a| a as f32).collect(),
        })
    }

    pub fn end_of_stream(sequence: u32, timestamp_us: u64) -> Self {
        Self {
            flags: FLAG_END_OF_STREAM,
            sequence,
            timestamp_us,
            root_position: [0.0; 3],
            root_orientation: [1.0, 0.0, 0.0, 0.0],
            joint_angles: Vec::new(),
        }
    }

    pub fn is_end_of_stream(&self) -> bool {
        self.flags & FLAG_END_OF_STREAM != 0
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp_us as f64 * 1e-6
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(packet_len(self.joint_angles.len()));
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.flags);
        out.extend_from_slice(&self.sequence.to_le_bytes());
        out.extend_from_slice(&self.timestamp_us.to_le_bytes());
        out.extend_from_slice(&(self.joint_angles.len() as u16).to_le_bytes());
        for v in self.root_position.iter().chain(&self.root_orientation).chain(&self.joint_angles) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, DecodeError> {
        if bytes.len() < HEADER_LEN {
            return Err(DecodeError::Truncated);
        }
        if bytes[0..4] != MAGIC {
            return Err(DecodeError::BadMagic);
        }
        if bytes[4] != VERSION {
            return Err(DecodeError::BadVersion(bytes[4]));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let joints = u16::from_le_bytes([bytes[18], bytes[19]]) as usize;
        match bytes.len().cmp(&packet_len(joints)) {
            std::cmp::Ordering::Less => return Err(DecodeError::Truncated),
            std::cmp::Ordering::Greater => return Err(DecodeError::Oversized),
            std::cmp::Ordering::Equal => {}
        }
        Ok(Self {
            flags: bytes[5],
            sequence: u32_at(6),
            timestamp_us: u64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes")),
            root_position: [f32_at(20), f32_at(24), f32_at(28)],
            root_orientation: [f32_at(32), f32_at(36), f32_at(40), f32_at(44)],
            joint_angles: (0..joints).map(|j| f32_at(48 + 4 * j)).collect(),
        })
    }

    /// Pose frame carrying the wire fields. Joint positions are not
    /// transmitted; they come back as zeros.
    pub fn to_pose_frame(&self) -> PoseFrame {
        let [w, x, y, z] = self.root_orientation.map(f64::from);
        let root_orientation = Quaternion::new(w, x, y, z).unwrap_or(Quaternion::IDENTITY);
        PoseFrame {
            timestamp: self.timestamp(),
            root_position: Vec3::new(
                self.root_position[0] as f64,
                self.root_position[1] as f64,
                self.root_position[2] as f64,
            ),
            root_orientation,
            joint_positions: vec![Vec3::zeros(); self.joint_angles.len()],
            joint_angles: self.joint_angles.iter().map(|&a| a as f64).collect(),
        }
    }
}

pub fn encode_packet(frame: &PoseFrame, sequence: u32) -> Result<Vec<u8>> {
    Ok(FramePacket::from_frame(frame, sequence)?.encode())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    Truncated,
    Oversized,
    BadMagic,
    BadVersion(u8),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamStats {
    /// Datagrams seen, valid or not.
    pub received: u64,
    pub delivered: u64,
    pub dropped_stale: u64,
    pub bad_magic: u64,
    pub bad_version: u64,
    pub truncated: u64,
    /// Sequence numbers skipped between consecutive deliveries.
    pub gaps: u64,
}

/// Receive-side ordering policy: deliver in increasing sequence order and
/// drop anything at or below the last delivered sequence number.
#[derive(Debug, Clone, Default)]
pub struct StreamReceiver {
    last: Option<u32>,
    stats: StreamStats,
}

impl StreamReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the packet if it should be delivered.
    pub fn accept(&mut self, bytes: &[u8]) -> Option<FramePacket> {
        self.stats.received += 1;
        let packet = match FramePacket::decode(bytes) {
            Ok(p) => p,
            Err(DecodeError::BadMagic) => {
                self.stats.bad_magic += 1;
                return None;
            }
            Err(DecodeError::BadVersion(_)) => {
                self.stats.bad_version += 1;
                return None;
            }
            Err(DecodeError::Truncated | DecodeError::Oversized) => {
                self.stats.truncated += 1;
                return None;
            }
        };
        if let Some(last) = self.last {
            if packet.sequence <= last {
                self.stats.dropped_stale += 1;
                return None;
            }
            self.stats.gaps += u64::from(packet.sequence - last - 1);
        }
        self.last = Some(packet.sequence);
        self.stats.delivered += 1;
        Some(packet)
    }

    pub fn stats(&self) -> StreamStats {
        self.stats
    }
}

/// Receives datagrams on `socket` until an end-of-stream packet is delivered
/// or no datagram arrives within `idle_timeout`. Frames are passed to
/// `deliver` in sequence order.
pub fn receive_stream(
    socket: &UdpSocket,
    idle_timeout: Duration,
    mut deliver: impl FnMut(FramePacket),
) -> io::Result<StreamStats> {
    socket.set_read_timeout(Some(idle_timeout))?;
    let mut receiver = StreamReceiver::new();
    let mut buf = vec![0u8; 65536];
    loop {
        let n = match socket.recv(&mut buf) {
            Ok(n) => n,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => break,
            Err(e) => return Err(e),
        };
        if let Some(packet) = receiver.accept(&buf[..n]) {
            let end = packet.is_end_of_stream();
            if !end {
                deliver(packet);
            } else {
                break;
            }
        }
    }
    Ok(receiver.stats())
}

/// Sends frames as datagrams with consecutive sequence numbers.
pub struct StreamSender {
    socket: UdpSocket,
    target: SocketAddr,
    next_sequence: u32,
    last_timestamp_us: u64,
    pub send_errors: u64,
}

impl StreamSender {
    pub fn connect(target: impl ToSocketAddrs) -> io::Result<Self> {
        let target = target
            .to_socket_addrs()?
            .next()
            .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "no target address"))?;
        let bind: SocketAddr = if target.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().expect("literal");
        Ok(Self { socket: UdpSocket::bind(bind)?, target, next_sequence: 0, last_timestamp_us: 0, send_errors: 0 })
    }

    pub fn send_packet(&mut self, packet: &FramePacket) -> io::Result<()> {
        self.socket.send_to(&packet.encode(), self.target).map(|_| ())
    }

    pub fn send_frame(&mut self, frame: &PoseFrame) -> Result<()> {
        let packet = FramePacket::from_frame(frame, self.next_sequence)?;
        self.next_sequence = self.next_sequence.wrapping_add(1);
        self.last_timestamp_us = packet.timestamp_us;
        self.send_packet(&packet)?;
        Ok(())
    }

    pub fn next_sequence(&self) -> u32 {
        self.next_sequence
    }

    /// Sends the end-of-stream marker.
    pub fn close(&mut self) -> io::Result<()> {
        let p = FramePacket::end_of_stream(self.next_sequence, self.last_timestamp_us);
        self.next_sequence = self.next_sequence.wrapping_add(1);
        self.send_packet(&p)
    }
}

impl FrameSink for StreamSender {
    fn send(&mut self, frame: &PoseFrame) -> SinkStatus {
        match self.send_frame(frame) {
            Ok(()) => SinkStatus::Accepted,
            Err(crate::Error::Io(e)) if e.kind() == io::ErrorKind::WouldBlock => SinkStatus::Busy,
            Err(e) => {
                log::warn!("dropping frame at {}: {e}", frame.timestamp);
                self.send_errors += 1;
                SinkStatus::Accepted
            }
        }
    }

    fn finish(&mut self) {
        if let Err(e) = self.close() {
            log::warn!("failed to send end-of-stream: {e}");
        }
    }
}
