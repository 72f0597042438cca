// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

use gal_core::ground::GroundSurface;
use gal_core::io::{read_grid, read_kitti_bin, read_labels_json, write_kitti_bin, Point3, PointCloud};

fn gal(args: &[&str]) -> Output {
    gal_env(args, None)
}

fn gal_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gal"));
    cmd.args(args).env_remove("GAL_SEED");
    if let Some(s) = seed {
        cmd.env("GAL_SEED", s);
    }
    cmd.output().expect("gal runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(line: &str) -> serde_json::Value {
    serde_json::from_str(line.trim()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// A small synthetic frame written into `dir`, returning the frame path.
fn synth(dir: &Path, seed: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(format!("synth{seed}"));
    let mut args = vec!["synth", "--out", p(&out), "--seed", seed, "--density", "2", "--objects", "4"];
    args.extend_from_slice(extra);
    ok(&gal(&args));
    out
}

#[test]
fn synth_writes_consistent_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path(), "3", &["--terrain", "slope:0.01,0,-1.7"]);
    let cloud = read_kitti_bin(s.join("frame.bin")).unwrap();
    let labels = read_labels_json(s.join("labels.json")).unwrap();
    let ground = std::fs::read_to_string(s.join("ground.txt")).unwrap();
    assert_eq!(labels.len(), 4);
    assert_eq!(ground.lines().count(), cloud.len());
    let truth: GroundSurface = read_grid(s.join("truth.gagr")).unwrap();
    assert_eq!(truth.valid_count(), 600_000);
    let z = truth.ground_at(10.05, 0.05).unwrap();
    assert!((z - (0.01 * 10.05 - 1.7)).abs() < 1e-6);
}

#[test]
fn surface_writes_grid_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path(), "1", &[]);
    let grid = dir.path().join("g.gagr");
    let line = ok(&gal(&["surface", "--in", p(&s.join("frame.bin")), "--out", p(&grid), "--pgm"]));
    let summary = json(&line);
    let gs: GroundSurface = read_grid(&grid).unwrap();
    assert_eq!(summary["valid_cells"], gs.valid_count());
    let pgm = std::fs::read(grid.with_extension("pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n600 1000\n255\n"));
    assert_eq!(pgm.len(), "P5\n600 1000\n255\n".len() + 600_000);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path(), "2", &["--terrain", "step:-1.8,-1.3,20"]);
    let frame = s.join("frame.bin");
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        ok(&gal(&["segment", "--in", p(&frame), "--out", p(&out.join("seg"))]));
        ok(&gal(&["anchors", "--in", p(&frame), "--out", p(&out.join("a.jsonl"))]));
        ok(&gal(&["features", "--in", p(&frame), "--out", p(&out.join("f.gagf"))]));
        ok(&gal(&["synth", "--out", p(&out.join("synth")), "--seed", "9", "--density", "1"]));
    }
    for rel in [
        "seg/frame.surface.txt",
        "seg/frame.plane.txt",
        "seg/frame.segment.json",
        "a.jsonl",
        "f.gagf",
        "synth/frame.bin",
        "synth/labels.json",
    ] {
        let a = std::fs::read(dir.path().join("a").join(rel)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(rel)).unwrap();
        assert!(a == b, "{rel} differs between runs");
    }
}

#[test]
fn segment_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path(), "4", &["--terrain", "terrace:-1.8,-1.3,-30,30"]);
    let frame = s.join("frame.bin");
    let out = dir.path().join("seg");
    let summary = json(&ok(&gal(&["segment", "--in", p(&frame), "--out", p(&out), "--tau-g", "0.2"])));
    let surface = std::fs::read_to_string(out.join("frame.surface.txt")).unwrap();
    let plane = std::fs::read_to_string(out.join("frame.plane.txt")).unwrap();
    let disagree = surface.lines().zip(plane.lines()).filter(|(a, b)| a != b).count();
    assert_eq!(summary["disagreements"], disagree);
    assert!(disagree > 0);
    assert_eq!(summary["plane"]["iterations"], 512);

    let only = json(&ok(&gal(&["segment", "--in", p(&frame), "--out", p(&dir.path().join("s2")), "--baseline", "none"])));
    assert!(only.get("plane").is_none());
    assert!(!dir.path().join("s2/frame.plane.txt").exists());
}

#[test]
fn directory_input_matches_single_frames_for_any_job_count() {
    let dir = tempfile::tempdir().unwrap();
    let frames = dir.path().join("frames");
    std::fs::create_dir(&frames).unwrap();
    for seed in ["5", "6", "7"] {
        let s = synth(dir.path(), seed, &[]);
        std::fs::copy(s.join("frame.bin"), frames.join(format!("{seed}.bin"))).unwrap();
    }
    let serial = ok(&gal(&["anchors", "--in", p(&frames), "--out", p(&dir.path().join("j1")), "--jobs", "1"]));
    let parallel = ok(&gal(&["anchors", "--in", p(&frames), "--out", p(&dir.path().join("j3")), "--jobs", "3"]));
    assert_eq!(serial, parallel);
    assert_eq!(serial.lines().count(), 3);
    for seed in ["5", "6", "7"] {
        let name = format!("{seed}.jsonl");
        let single = dir.path().join(format!("single{seed}.jsonl"));
        ok(&gal(&["anchors", "--in", p(&frames.join(format!("{seed}.bin"))), "--out", p(&single)]));
        let a = std::fs::read(dir.path().join("j1").join(&name)).unwrap();
        assert_eq!(a, std::fs::read(dir.path().join("j3").join(&name)).unwrap());
        assert_eq!(a, std::fs::read(&single).unwrap());
    }
}

#[test]
fn anchors_all_lists_every_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path(), "8", &[]);
    let out = dir.path().join("a.jsonl");
    let summary = json(&ok(&gal(&["anchors", "--in", p(&s.join("frame.bin")), "--out", p(&out), "--all"])));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(summary["anchors"], 48_000);
    assert_eq!(text.lines().count(), 48_000);
    let kept = text.lines().filter(|l| json(l)["kept"] == true).count();
    assert_eq!(summary["kept"], kept);
}

#[test]
fn seed_precedence_flag_then_env_then_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gal.toml");
    std::fs::write(&cfg, "[synth]\nseed = 11\npoint_density = 1.0\n").unwrap();
    let run = |flag: Option<&str>, env: Option<&str>| {
        let out = dir.path().join("s");
        let mut args = vec!["synth", "--config", p(&cfg), "--out", p(&out), "--objects", "1"];
        if let Some(f) = flag {
            args.extend(["--seed", f]);
        }
        json(&ok(&gal_env(&args, env)))["seed"].as_u64().unwrap()
    };
    assert_eq!(run(None, None), 11);
    assert_eq!(run(None, Some("12")), 12);
    assert_eq!(run(Some("13"), Some("12")), 13);
    let bad = gal_env(&["synth", "--out", p(&dir.path().join("x"))], Some("minus one"));
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn config_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth(dir.path(), "9", &[]);
    let frame = s.join("frame.bin");
    let cfg = dir.path().join("gal.toml");
    std::fs::write(&cfg, "[anchors]\nstride = 1.0\n").unwrap();
    let from_file = json(&ok(&gal(&["anchors", "--config", p(&cfg), "--in", p(&frame), "--out", p(&dir.path().join("a"))])));
    assert_eq!(from_file["anchors"], 12_000);
    let flagged = json(&ok(&gal(&[
        "anchors", "--config", p(&cfg), "--in", p(&frame), "--out", p(&dir.path().join("b")), "--stride", "0.5",
    ])));
    assert_eq!(flagged["anchors"], 48_000);
}

#[test]
fn invalid_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(&dir.path().join("o")).to_string();
    let missing = gal(&["surface", "--in", "/nonexistent/frame.bin", "--out", &out]);
    assert_eq!(missing.status.code(), Some(2));

    let truncated = dir.path().join("t.bin");
    std::fs::write(&truncated, [0u8; 17]).unwrap();
    assert_eq!(gal(&["surface", "--in", p(&truncated), "--out", &out]).status.code(), Some(2));

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[filter]\nhalf_window = 1\n").unwrap();
    let s = synth(dir.path(), "1", &[]);
    let frame = s.join("frame.bin");
    assert_eq!(gal(&["surface", "--config", p(&cfg), "--in", p(&frame), "--out", &out]).status.code(), Some(2));
    assert_eq!(gal(&["surface", "--in", p(&frame), "--out", &out, "--window", "-1"]).status.code(), Some(2));
    assert_eq!(gal(&["surface", "--in", p(&frame), "--out", &out, "--unknown"]).status.code(), Some(2));
    assert_eq!(gal(&["surface", "--out", &out]).status.code(), Some(2));
    assert_eq!(gal(&["segment", "--in", p(&frame), "--out", &out, "--tau-g", "-0.1"]).status.code(), Some(2));
    assert!(!Path::new(&out).join("frame.surface.txt").exists());
}

#[test]
fn degenerate_ransac_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let frame = dir.path().join("line.bin");
    let pts = (0..50).map(|k| Point3::new(k as f64 * 0.5 - 10.0, 0.0, -1.7, 0.1)).collect();
    write_kitti_bin(&frame, &PointCloud::new(pts, "line")).unwrap();
    let out = gal(&["segment", "--in", p(&frame), "--out", p(&dir.path().join("seg"))]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let two = dir.path().join("two.bin");
    let pts = vec![Point3::new(1.0, 1.0, -1.7, 0.0), Point3::new(2.0, 1.0, -1.7, 0.0)];
    write_kitti_bin(&two, &PointCloud::new(pts, "two")).unwrap();
    let out = gal(&["segment", "--in", p(&two), "--out", p(&dir.path().join("seg2"))]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn augment_transplants_flips_and_rotates() {
    let dir = tempfile::tempdir().unwrap();
    let target = synth(dir.path(), "20", &[]);
    let donor = synth(dir.path(), "21", &[]);
    let out = dir.path().join("aug.bin");
    let summary = json(&ok(&gal(&[
        "augment",
        "--in", p(&target.join("frame.bin")),
        "--labels", p(&target.join("labels.json")),
        "--donors", p(&donor.join("frame.bin")),
        "--donor-labels", p(&donor.join("labels.json")),
        "--max-objects", "2",
        "--flip",
        "--rotate", "-15",
        "--out", p(&out),
    ])));
    assert_eq!(summary["transplant_attempts"], 2);
    assert_eq!(summary["transplanted"], 2);
    let labels = read_labels_json(out.with_extension("json")).unwrap();
    assert_eq!(labels.len(), 6);
    assert_eq!(read_kitti_bin(&out).unwrap().len() as u64, summary["points"].as_u64().unwrap());

    // flipping twice and rotating back gives the original labels
    let back = dir.path().join("back.bin");
    ok(&gal(&["augment", "--in", p(&out), "--labels", p(&out.with_extension("json")), "--out", p(&back), "--rotate", "15"]));
    let back2 = dir.path().join("back2.bin");
    ok(&gal(&["augment", "--in", p(&back), "--labels", p(&back.with_extension("json")), "--out", p(&back2), "--flip"]));
    let restored = read_labels_json(back2.with_extension("json")).unwrap();
    let original = read_labels_json(target.join("labels.json")).unwrap();
    for (r, o) in restored.iter().zip(&original) {
        assert!((r.bbox.x - o.bbox.x).abs() < 1e-9 && (r.bbox.y - o.bbox.y).abs() < 1e-9);
    }
    assert!(gal(&["augment", "--in", p(&out), "--out", p(&back), "--donors", p(&out)]).status.code() == Some(2));
}

#[test]
fn bench_reports_speedup() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let stdout = ok(&gal(&["bench", "--points", "5000", "--reps", "3", "--warmup", "0", "--out", p(&out)]));
    let report = json(&stdout);
    assert!(report["speedup"].as_f64().unwrap() > 0.0);
    assert_eq!(report["surface"]["reps"], 3);
    assert_eq!(json(&std::fs::read_to_string(&out).unwrap()), report);
}
