//! Wire format and UDP loopback behavior.

mod common;

use std::net::UdpSocket;
use std::thread;
use std::time::Duration;

use dancebench_core::interp::InterpolatorConfig;
use dancebench_core::pipeline::{run_pipeline, VecSink};
use dancebench_core::stream::{encode_packet, receive_stream, FramePacket, StreamReceiver, StreamSender};
use dancebench_core::{PoseFrame, Quaternion, Vec3};

fn zero_frame() -> PoseFrame {
    PoseFrame {
        timestamp: 0.0,
        root_position: Vec3::zeros(),
        root_orientation: Quaternion::IDENTITY,
        joint_positions: vec![Vec3::zeros(); 2],
        joint_angles: vec![0.0; 2],
    }
}

#[test]
fn golden_bytes_of_the_zero_frame() {
    let golden = common::read_hex("stream/zero_frame_j2.hex");
    assert_eq!(golden.len(), 56);
    assert_eq!(encode_packet(&zero_frame(), 0).unwrap(), golden);
    let p = FramePacket::decode(&golden).unwrap();
    assert_eq!(p.sequence, 0);
    assert_eq!(p.timestamp_us, 0);
    assert_eq!(p.root_orientation, [1.0, 0.0, 0.0, 0.0]);
    assert_eq!(p.joint_angles, vec![0.0, 0.0]);
    assert!(!p.is_end_of_stream());
    assert_eq!(p.to_pose_frame(), zero_frame());
}

#[test]
fn fixture_frames_round_trip_at_single_precision() {
    let song = &common::fixture_songs()[4];
    for (i, f) in song.frames().iter().enumerate() {
        let bytes = encode_packet(f, i as u32).unwrap();
        assert_eq!(bytes.len(), 144);
        let p = FramePacket::decode(&bytes).unwrap();
        assert_eq!(p.sequence, i as u32);
        assert_eq!(p.timestamp_us, (f.timestamp * 1e6).round() as u64);
        let back = p.to_pose_frame();
        assert!((back.root_position - f.root_position).norm() < 1e-6);
        assert!(back.root_orientation.angle_to(&f.root_orientation) < 1e-6);
        for (a, b) in back.joint_angles.iter().zip(&f.joint_angles) {
            assert_eq!(*a as f32, *b as f32);
        }
        assert_eq!(FramePacket::decode(&p.encode()).unwrap(), p);
    }
}

#[test]
fn in_order_stream_is_delivered_whole() {
    let mut rx = StreamReceiver::new();
    for s in 1..=10u32 {
        let bytes = FramePacket::from_frame(&zero_frame(), s).unwrap().encode();
        assert!(rx.accept(&bytes).is_some());
    }
    let st = rx.stats();
    assert_eq!((st.delivered, st.dropped_stale, st.gaps), (10, 0, 0));
}

#[test]
fn reordered_loopback_never_steps_backwards() {
    const COUNT: u32 = 10_000;
    let rx_socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = rx_socket.local_addr().unwrap();

    // Every 20th packet is held back and sent after its successor: 5% late.
    let mut order: Vec<u32> = (0..COUNT).collect();
    let mut late = 0u64;
    for i in (10..COUNT as usize - 1).step_by(20) {
        order.swap(i, i + 1);
        late += 1;
    }

    let receiver = thread::spawn(move || {
        let mut delivered = Vec::new();
        let stats = receive_stream(&rx_socket, Duration::from_secs(5), |p| delivered.push(p.sequence)).unwrap();
        (stats, delivered)
    });
    let mut tx = StreamSender::connect(addr).unwrap();
    let frame = zero_frame();
    for (k, &seq) in order.iter().enumerate() {
        let mut f = frame.clone();
        f.timestamp = seq as f64 * 1e-3;
        tx.send_packet(&FramePacket::from_frame(&f, seq).unwrap()).unwrap();
        if k % 50 == 49 {
            thread::sleep(Duration::from_micros(200));
        }
    }
    thread::sleep(Duration::from_millis(20));
    tx.send_packet(&FramePacket::end_of_stream(COUNT, 0)).unwrap();
    let (stats, delivered) = receiver.join().unwrap();

    assert!(delivered.windows(2).all(|w| w[0] < w[1]), "out-of-order delivery");
    assert_eq!(stats.received, COUNT as u64 + 1, "datagrams lost on loopback");
    assert_eq!(stats.dropped_stale, late);
    assert_eq!(stats.delivered, COUNT as u64 - late + 1);
    assert_eq!(delivered.len() as u64, COUNT as u64 - late);
}

#[test]
fn pipeline_to_socket_preserves_the_interpolated_stream() {
    let song = &common::fixture_songs()[1];
    let keys = song.resample_uniform(5.0).unwrap();
    let cfg = InterpolatorConfig { paced: false, ..Default::default() };
    let (_, local) = run_pipeline(keys.frames().to_vec(), VecSink::default(), &cfg).unwrap();

    let rx_socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = rx_socket.local_addr().unwrap();
    let receiver = thread::spawn(move || {
        let mut got = Vec::new();
        let stats = receive_stream(&rx_socket, Duration::from_secs(5), |p| got.push(p)).unwrap();
        (stats, got)
    });
    let (stats, sender) = run_pipeline(keys.frames().to_vec(), StreamSender::connect(addr).unwrap(), &cfg).unwrap();
    let (rx_stats, got) = receiver.join().unwrap();

    assert_eq!(stats.frames_out as usize, local.frames.len());
    assert_eq!(sender.next_sequence() as usize, local.frames.len() + 1);
    assert_eq!(rx_stats.dropped_stale, 0);
    assert_eq!(got.len(), local.frames.len());
    for (p, f) in got.iter().zip(&local.frames) {
        assert_eq!(p.timestamp_us, (f.timestamp * 1e6).round() as u64);
        let expected: Vec<f32> = f.joint_angles.iter().map(|&a| a as f32).collect();
        assert_eq!(p.joint_angles, expected);
    }
}
