use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::thread;
use std::time::Duration;

fn songs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/songs")
}

fn song(name: &str) -> PathBuf {
    songs_dir().join(format!("{name}.sjd"))
}

fn dancebench(args: &[&str]) -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dancebench"));
    c.args(args);
    c
}

fn run(args: &[&str]) -> Output {
    dancebench(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&run(&["no-such-command"])), 1);
    assert_eq!(code(&run(&["convert", "--mode", "smo"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn missing_input_exits_two() {
    let o = run(&["stats", "/nonexistent/matrix.csv"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(code(&run(&["score", "--exec", "/nonexistent.sjd", "--ref", path(&song("easy_step"))])), 2);
}

#[test]
fn gen_songs_reproduces_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen-songs", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0);
    for name in ["easy_step", "easy_sway", "easy_wave", "hard_pulse", "hard_spin"] {
        let made = std::fs::read(dir.path().join(format!("{name}.sjd"))).unwrap();
        assert_eq!(made, std::fs::read(song(name)).unwrap(), "{name}");
    }
}

#[test]
fn bench_writes_every_report_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", "--songs", path(&songs_dir()), "--repeats", "1", "--out", path(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["bench.csv", "bench.json", "bench.txt", "bench_scores.svg", "bench_jerk.svg"] {
        assert!(dir.path().join(f).is_file(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert!(csv.starts_with("# "));
    assert!(csv.contains("CtrlA-Smo") && csv.contains("CtrlC-Dyn"));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("CtrlB-Smo"));

    let again = tempfile::tempdir().unwrap();
    let json = dir.path().join("bench.json");
    let o = run(&["report", "--in", path(&json), "--formats", "csv,text", "--out", path(again.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(again.path().join("bench.csv")).unwrap(), csv);
}

#[test]
fn stats_reports_reliability_and_flags_degenerate_input() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    std::fs::write(&good, "subject,r1,r2,r3\na,9,10,9.5\nb,6,6.5,6\nc,3,2.5,3.2\nd,1,1.2,0.9\n").unwrap();
    let o = run(&["stats", path(&good)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.to_string().contains("icc"), "{v}");

    let flat = dir.path().join("flat.csv");
    std::fs::write(&flat, "1,1,1\n1,1,1\n1,1,1\n").unwrap();
    assert_eq!(code(&run(&["stats", path(&flat)])), 3);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3,x\n").unwrap();
    assert_eq!(code(&run(&["stats", path(&bad)])), 1);
}

#[test]
fn convert_and_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("wave.dyn.sjd");
    let o = run(&["convert", "--mode", "dyn", "--in", path(&song("easy_wave")), "--to", path(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.is_file());

    let o = run(&["score", "--exec", path(&song("easy_wave")), "--ref", path(&song("easy_wave"))]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["total"], 13333.0);

    let o = run(&["metrics", "--exec", path(&out), "--ref", path(&song("easy_wave"))]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn stream_send_and_receive_over_loopback() {
    let port = UdpSocket::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let dir = tempfile::tempdir().unwrap();
    let received = dir.path().join("received.sjd");
    let recv = dancebench(&["stream", "recv", "--to", path(&received), "--bind", &addr, "--timeout", "10"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    thread::sleep(Duration::from_millis(300));

    let o = run(&["--paced", "off", "stream", "send", "--in", path(&song("easy_step")), "--target", &addr]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sent: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let packets = sent["packets"].as_u64().unwrap();

    let r = recv.wait_with_output().unwrap();
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let stats: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(stats["delivered"].as_u64().unwrap(), packets);
    let text = std::fs::read_to_string(&received).unwrap();
    assert!(text.starts_with("# sjd-motion v1"));
}
