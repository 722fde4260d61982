//! Benchmark harness on the shipped song fixtures.

mod common;

use dancebench_core::bench::{
    bench_players, load_songs, run_bench, run_bench_with, run_validation_with, BenchConfig, CaptureConfig, Setting,
};
use dancebench_core::choreo::{default_songs, generate_song};
use dancebench_core::format::render_motion;
use dancebench_core::report::{from_json, render_report, to_csv, to_json, ReportFormat};
use dancebench_core::sim::{graded_cohort, PlayerProfile};
use dancebench_core::Difficulty;

fn fixture_cfg() -> BenchConfig {
    BenchConfig { songs: common::songs_dir(), ..BenchConfig::default() }
}

#[test]
fn shipped_songs_match_the_generator() {
    for spec in default_songs() {
        let path = common::songs_dir().join(format!("{}.sjd", spec.id));
        let on_disk = std::fs::read_to_string(&path).unwrap();
        assert_eq!(on_disk, render_motion(&generate_song(&spec).unwrap()), "{}", spec.id);
    }
    let set = load_songs(common::songs_dir()).unwrap();
    let easy = set.songs.iter().filter(|s| s.difficulty() == Difficulty::Easy).count();
    assert_eq!((easy, set.songs.len() - easy), (3, 2));
}

#[test]
fn one_player_one_setting_gives_fifteen_trials() {
    let cfg = BenchConfig { settings: vec![Setting::Dyn], repeats: 3, ..fixture_cfg() };
    let players = vec![bench_players()[0].clone()];
    let r = run_bench_with(&cfg, &players, load_songs(&cfg.songs).unwrap()).unwrap();
    assert_eq!(r.trials.len(), 15);
    assert_eq!(r.rows.len(), 1);
    let row = &r.rows[0];
    assert_eq!((row.trials, row.easy_trials, row.hard_trials), (15, 9, 6));
    let mean = |d: Difficulty| {
        let v: Vec<f64> = r.trials.iter().filter(|t| t.difficulty == d).map(|t| t.metrics.score).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert_eq!(row.jds_easy, Some(mean(Difficulty::Easy)));
    assert_eq!(row.jds_hard, Some(mean(Difficulty::Hard)));
}

#[test]
fn perfect_player_on_clean_capture() {
    let cfg = BenchConfig {
        settings: vec![Setting::Raw],
        repeats: 1,
        capture: CaptureConfig { angle_noise: 0.0, position_noise: 0.0, ..CaptureConfig::default() },
        ..fixture_cfg()
    };
    let r = run_bench_with(&cfg, &[PlayerProfile::perfect("Perfect")], load_songs(&cfg.songs).unwrap()).unwrap();
    let row = &r.rows[0];
    assert_eq!(row.jds_all, Some(13333.0));
    assert_eq!((row.sr, row.mpjpe_all, row.mpjpe_active), (100.0, 0.0, Some(0.0)));
}

#[test]
fn same_seed_gives_byte_identical_reports() {
    let cfg = BenchConfig { repeats: 2, seed: 11, ..fixture_cfg() };
    let a = run_bench(&cfg).unwrap();
    let b = run_bench(&cfg).unwrap();
    assert_eq!(to_json(&a), to_json(&b));
    assert_eq!(to_csv(&a).unwrap(), to_csv(&b).unwrap());
    let da = tempfile::tempdir().unwrap();
    let db = tempfile::tempdir().unwrap();
    let fa = render_report(&a, &ReportFormat::ALL, da.path()).unwrap();
    let fb = render_report(&b, &ReportFormat::ALL, db.path()).unwrap();
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
    }
    let c = run_bench(&BenchConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(to_json(&a), to_json(&c));
    assert_ne!(a.provenance.config_hash, c.provenance.config_hash);
}

#[test]
fn default_players_do_better_on_easy_songs() {
    let r = run_bench(&fixture_cfg()).unwrap();
    assert_eq!(r.rows.len(), 6);
    for row in &r.rows {
        assert!(row.jds_easy.unwrap() >= row.jds_hard.unwrap(), "{}", row.label());
        if row.sr == 100.0 {
            assert_eq!(row.mpjpe_active, Some(row.mpjpe_all), "{}", row.label());
        }
    }
    assert!(r.provenance.note.contains("not scores reported by the game"));
}

#[test]
fn streaming_setting_is_smoother_than_offline() {
    let r = run_bench(&fixture_cfg()).unwrap();
    for p in bench_players() {
        let smo = r.row(&p.name, Setting::Smo).unwrap();
        let dyn_row = r.row(&p.name, Setting::Dyn).unwrap();
        assert!(smo.jerk < dyn_row.jerk && smo.acc < dyn_row.acc, "{}", p.name);
    }
}

#[test]
fn unreadable_song_is_listed_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    for spec in default_songs().iter().take(2) {
        let name = format!("{}.sjd", spec.id);
        std::fs::copy(common::songs_dir().join(&name), dir.path().join(&name)).unwrap();
    }
    std::fs::write(dir.path().join("broken.sjd"), "not a motion file\n").unwrap();
    let cfg = BenchConfig { songs: dir.path().to_path_buf(), settings: vec![Setting::Raw], repeats: 1, ..BenchConfig::default() };
    let r = run_bench(&cfg).unwrap();
    assert_eq!(r.errata.len(), 1);
    assert_eq!(r.errata[0].file, "broken.sjd");
    assert_eq!(r.trials.len(), 2 * bench_players().len());
}

#[test]
fn json_report_round_trips() {
    let cfg = BenchConfig { repeats: 1, ..fixture_cfg() };
    let r = run_bench(&cfg).unwrap();
    assert_eq!(from_json(&to_json(&r)).unwrap(), r);
}

#[test]
fn graded_cohort_validation_study() {
    let cfg = BenchConfig { repeats: 4, seed: 3, ..fixture_cfg() };
    let v = run_validation_with(&cfg, &graded_cohort(10), load_songs(&cfg.songs).unwrap()).unwrap();
    assert_eq!(v.trials, 200);
    assert!(!v.is_degenerate(), "{:?}", v.degenerate);
    for s in &v.per_song {
        let c = s.correlation.unwrap();
        assert!(c.r < 0.0 && c.p < 0.05, "{}: r {} p {}", s.song, c.r, c.p);
    }
    assert!(v.pooled.unwrap().r <= -0.42);
    assert!(v.icc.unwrap() >= 0.7);
    assert!(v.kendall_w.unwrap() >= 0.6);
    assert!(v.reliability.is_some());
}

#[test]
fn identical_perfect_players_are_flagged_not_fabricated() {
    let cfg = BenchConfig { repeats: 2, ..fixture_cfg() };
    let players = vec![PlayerProfile::perfect("a"), PlayerProfile::perfect("b"), PlayerProfile::perfect("c")];
    let v = run_validation_with(&cfg, &players, load_songs(&cfg.songs).unwrap()).unwrap();
    assert!(v.cells.iter().all(|c| c.cv_percent == Some(0.0)));
    assert!(v.per_song.iter().all(|s| s.correlation.is_none()));
    assert!(v.is_degenerate());
    assert!(v.reliability.is_none());
}
